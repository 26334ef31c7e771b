from moseac.gradnet.checkpoint import dumps_net, load_net, loads_net, save_net
from moseac.gradnet.dense import DenseNet
from moseac.gradnet.optim import OptimState, learning_rate, opt_step, soft_update
from moseac.gradnet.tape import GradTape, Node

__all__ = [
    "DenseNet", "GradTape", "Node", "OptimState",
    "opt_step", "soft_update", "learning_rate",
    "dumps_net", "loads_net", "save_net", "load_net",
]
