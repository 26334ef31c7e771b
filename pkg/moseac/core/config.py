import hashlib
from pathlib import Path
from typing import Any, Dict, Optional

from dotenv import dotenv_values

from moseac.core.errors import ConfigurationError

PACKAGE_DIR = Path(__file__).resolve().parent.parent
DEFAULT_TRACK_PATH = PACKAGE_DIR / "envsim" / "data" / "stadium.track"

# Action space (control rate 5..30 Hz)
D_MIN = 1.0 / 30.0
D_MAX = 1.0 / 5.0
FIXED_RATE_DURATION = 1.0 / 20.0
ACTION_CONTROLS = 3

# Kinematic car
INNER_DT = 1.0 / 120.0
A_MAX = 8.0
B_MAX = 12.0
C_DRAG = 0.12
V_MAX = 40.0
WHEELBASE = 2.5
STEER_MAX = 0.5
LOOKAHEAD_WAYPOINTS = 5
WAYPOINT_FEATURE_SCALE = 50.0
OBS_DIM = 23

# Reward shaping
ALPHA_M_INIT = 1.0
ALPHA_MAX = 5.0
PSI = 0.02
DELTA_TREND = 1e-6
ALPHA_EPS_SCALE = 0.2
SEAC_EPS_PEN = 0.1
SEAC_TAU_PEN = 0.5
# a lap of the bundled track pays 0.2 raw; scaled so finishing beats crashing at alpha_m = 1
TASK_REWARD_SCALE = 500.0

# Soft actor-critic
GAMMA = 0.99
TAU_SOFT = 0.005
LR_ACTOR = 3e-4
LR_CRITIC = 3e-4
LR_TEMPERATURE = 3e-4
LR_DECAY_STEPS = 10_000
INIT_TEMPERATURE = 0.05
LOG_STD_MIN = -20.0
LOG_STD_MAX = 2.0
FINAL_ACTOR_INIT_BOUND = 1e-3

# Training schedule
T_MAX = 2000
K_LENGTH = 2000
K_INIT = 10
K_UPDATE = 1
UPDATES_PER_BLOCK = 64
BATCH_SIZE = 256
BUFFER_CAPACITY = 200_000
CHECKPOINT_EVERY = 100
QSTAR_REFRESH_EVERY = 50
PROBE_SIZE = 32
QSTAR_ROLLOUTS = 1
HIDDEN_WIDTH = 256
HIDDEN_LAYERS = 2
EVAL_EPISODES = 30

# File formats
CHECKPOINT_MAGIC = "ELASTIC-CKPT-1"
TRACK_MAGIC = "track-v1"
METRICS_HEADER = (
    "episode,steps,sim_time,return_shaped,return_task,alpha_m,alpha_eps,temperature,"
    "critic_loss,actor_loss,grad_norm,V_lyap,V_alpha_term,V_qerr_term"
)
EVAL_HEADER = "episode,success,energy_steps,time_seconds,mean_rate_hz"
DESCRIPTIVES_HEADER = "method,metric,N,mean,sd,se,cov"
TTEST_HEADER = "metric,t,df,p"
RESOLVED_CONFIG_NAME = "resolved_config"

# Exit codes
EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_USAGE = 2
EXIT_DIVERGED = 3
EXIT_FORMAT = 4


def read_config_file(path: Path) -> Dict[str, Optional[str]]:
    """
    Reads a flat `key = value` file with `#` comments.
    Values stay strings; pydantic does the conversion.
    """
    if not path.is_file():
        raise ConfigurationError(f"Config file not found: {path}")
    values = dotenv_values(path, interpolate=False)
    for key, value in values.items():
        if value is None:
            raise ConfigurationError(f"Config key without value: '{key}' in {path}")
    return dict(values)


def render_config(values: Dict[str, Any]) -> str:
    lines = [f"{key} = {_render_value(value)}" for key, value in values.items()]
    return "\n".join(lines) + "\n"


def config_hash(values: Dict[str, Any]) -> str:
    return hashlib.sha256(render_config(values).encode("utf-8")).hexdigest()


def _render_value(value: Any) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    if isinstance(value, (list, tuple)):
        return ",".join(_render_value(v) for v in value)
    return str(value)
