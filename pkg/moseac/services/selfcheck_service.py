"""
Release gate: gradient oracle, simulator determinism and composition,
reward-formula spot checks and a checkpoint round trip.
"""

import logging
import math
from typing import Callable, List, Optional

import numpy as np
from pydantic import BaseModel

from moseac.agent.reward import RewardParams, adapt_alpha, alpha_eps_of, seac_shape_reward, shape_reward
from moseac.core.config import CHECKPOINT_MAGIC, D_MAX, D_MIN
from moseac.core.errors import CheckpointFormatError
from moseac.envsim.simulator import ElasticRaceEnv
from moseac.envsim.track import load_track
from moseac.gradnet import DenseNet, GradTape, dumps_net, loads_net
from moseac.gradnet.gradcheck import central_differences, max_relative_error
from moseac.schemas.track import ElasticAction, TrackSpec

logger = logging.getLogger(__name__)

GRADIENT_TOLERANCE = 1e-4


class SuiteResult(BaseModel):
    name: str
    passed: bool
    detail: str


class SuiteFailure(AssertionError):
    pass


def _check(condition: bool, message: str) -> None:
    if not condition:
        raise SuiteFailure(message)


# ===============================================================
# SUITES
# ===============================================================

def gradient_suite(seed: int = 0, n_nets: int = 50) -> str:
    """Tape gradients of random tanh networks against central differences."""
    rng = np.random.default_rng(seed)
    worst = 0.0
    for index in range(n_nets):
        depth = int(rng.integers(1, 4))
        sizes = [int(rng.integers(1, 9)) for _ in range(depth + 1)]
        net = DenseNet.initialize(sizes, rng)
        x = rng.standard_normal((3, net.in_dim))
        projection = rng.standard_normal((3, net.out_dim))

        def loss_of(weights: np.ndarray) -> float:
            return float(np.sum(DenseNet(net.layer_shapes, net.activations, weights).forward(x) * projection))

        tape = GradTape()
        out = net.forward_tape(tape, tape.const(x), tape.param(net.weights, "w"))
        loss = tape.sum(out * projection)
        analytic = tape.backward(loss)["w"]
        numeric = central_differences(loss_of, net.weights)
        error = max_relative_error(analytic, numeric, floor=1e-6)
        _check(error < GRADIENT_TOLERANCE, f"net {index} (sizes {sizes}): max relative error {error:.3e}")
        worst = max(worst, error)
    return f"{n_nets} networks, max relative error {worst:.2e}"


def _random_actions(rng: np.random.Generator, n: int) -> List[ElasticAction]:
    return [
        ElasticAction(gas=float(g), brake=float(b), steer=float(s), duration=float(d))
        for g, b, s, d in zip(rng.uniform(0.2, 1.0, n), rng.uniform(-1.0, 0.0, n),
                              rng.uniform(-0.3, 0.3, n), rng.uniform(D_MIN, D_MAX, n))
    ]


def _replay(env: ElasticRaceEnv, seed: int, actions: List[ElasticAction]) -> List[tuple]:
    trace = [tuple(env.reset(seed).observation)]
    for action in actions:
        result = env.step(action)
        trace.append((tuple(result.observation), result.task_reward, result.elapsed, result.status))
        if result.done:
            break
    return trace


def determinism_suite(track: TrackSpec, seed: int = 0, n_sequences: int = 100, length: int = 30) -> str:
    """Seeded action sequences replay identically; one long hold equals consecutive short holds."""
    rng = np.random.default_rng(seed)
    env = ElasticRaceEnv(track)
    for index in range(n_sequences):
        actions = _random_actions(rng, length)
        _check(_replay(env, index, actions) == _replay(env.clone(), index, actions),
               f"sequence {index} did not replay identically")

    env.reset(seed)
    env.step(ElasticAction(gas=1.0, brake=0.0, steer=0.0, duration=D_MAX))
    split = env.clone()
    split.set_state(env.get_state())
    long_hold = ElasticAction(gas=0.6, brake=0.0, steer=0.2, duration=2 * D_MIN)
    short_hold = long_hold.model_copy(update={"duration": D_MIN})
    env.step(long_hold)
    split.step(short_hold)
    split.step(short_hold)
    a, b = env.get_state(), split.get_state()
    gap = max(abs(a.x - b.x), abs(a.y - b.y), abs(a.heading - b.heading), abs(a.speed - b.speed))
    _check(gap <= 1e-12, f"composed steps drift by {gap:.3e}")
    return f"{n_sequences} sequences replayed, composition gap {gap:.1e}"


def reward_suite() -> str:
    _check(alpha_eps_of(1.0) == 0.1, f"alpha_eps_of(1) = {alpha_eps_of(1.0)!r}")
    _check(math.isclose(alpha_eps_of(0.0), 0.2 * (1.0 - 1.0 / (1.0 + math.e)), rel_tol=1e-12), "alpha_eps_of(0)")
    grid = np.linspace(0.0, 10.0, 10_000)
    values = np.array([alpha_eps_of(a) for a in grid])
    _check(bool(np.all(np.diff(values) < 0.0)), "alpha_eps is not strictly decreasing")
    _check(bool(np.all((values > 0.0) & (values < 0.2))), "alpha_eps left (0, 0.2)")

    params = RewardParams()
    _check(math.isclose(shape_reward(1.0, D_MIN, params), 0.9, rel_tol=1e-12), "shape_reward at D_min")
    _check(math.isclose(shape_reward(1.0, D_MAX, params), 1.0 / 6.0 - 0.1, rel_tol=1e-12), "shape_reward at D_max")
    _check(math.isclose(seac_shape_reward(1.0, 1.0 / 30.0), 1.0 - 0.1 - 0.5 / 30.0, rel_tol=1e-12),
           "seac_shape_reward default")

    bumped = adapt_alpha(RewardParams(alpha_m=1.0, psi=0.05, prev_avg_reward=5.0), 4.0)
    _check(math.isclose(bumped.alpha_m, 1.05, rel_tol=1e-12), f"adapt_alpha gave {bumped.alpha_m}")
    capped = adapt_alpha(RewardParams(alpha_m=5.0, alpha_max=5.0, prev_avg_reward=5.0), 4.0)
    _check(capped.alpha_m == 5.0, "adapt_alpha exceeded alpha_max")
    return "formulas, bounds and adaptation agree"


def checkpoint_suite(seed: int = 0, corrupt_magic: bool = False) -> str:
    rng = np.random.default_rng(seed)
    net = DenseNet.initialize([5, 7, 3], rng)
    blob = dumps_net(net)
    if corrupt_magic:
        blob = blob.replace(CHECKPOINT_MAGIC.encode("ascii"), b"ELASTIC-CKPT-0", 1)
    try:
        restored = loads_net(blob, source="selfcheck")
    except CheckpointFormatError as exc:
        raise SuiteFailure(str(exc))
    _check(restored.layer_shapes == net.layer_shapes, "layer shapes changed in round trip")
    _check(np.array_equal(restored.weights, net.weights), "weights changed in round trip")
    return f"{net.n_params} weights round-tripped"


def run_selfcheck(seed: int = 0, track: Optional[TrackSpec] = None, corrupt_magic: bool = False) -> List[SuiteResult]:
    """Runs every suite; a failing suite records its first failing assertion."""
    track = track or load_track()
    suites: List[tuple] = [
        ("gradients", lambda: gradient_suite(seed)),
        ("environment", lambda: determinism_suite(track, seed)),
        ("rewards", reward_suite),
        ("checkpoint", lambda: checkpoint_suite(seed, corrupt_magic)),
    ]
    results: List[SuiteResult] = []
    for name, suite in suites:
        results.append(_run_suite(name, suite))
        level = logging.INFO if results[-1].passed else logging.ERROR
        logger.log(level, f"{'✅' if results[-1].passed else '🔴'} {name}: {results[-1].detail}")
    return results


def _run_suite(name: str, suite: Callable[[], str]) -> SuiteResult:
    try:
        return SuiteResult(name=name, passed=True, detail=suite())
    except SuiteFailure as exc:
        return SuiteResult(name=name, passed=False, detail=str(exc))
