from enum import Enum
from pathlib import Path
from typing import Any, Dict, Literal, Mapping, Optional

from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator

from moseac.core.config import (
    ALPHA_M_INIT, ALPHA_MAX, BATCH_SIZE, BUFFER_CAPACITY, CHECKPOINT_EVERY, D_MAX, D_MIN,
    DEFAULT_TRACK_PATH, DELTA_TREND, EVAL_EPISODES, FIXED_RATE_DURATION, GAMMA, HIDDEN_LAYERS,
    HIDDEN_WIDTH, INIT_TEMPERATURE, K_INIT, K_LENGTH, K_UPDATE, LR_ACTOR, LR_CRITIC, LR_DECAY_STEPS,
    LR_TEMPERATURE, PROBE_SIZE, PSI, QSTAR_REFRESH_EVERY, QSTAR_ROLLOUTS, SEAC_EPS_PEN, SEAC_TAU_PEN,
    T_MAX, TASK_REWARD_SCALE, TAU_SOFT, UPDATES_PER_BLOCK, read_config_file,
)
from moseac.core.errors import ConfigurationError


class Algo(str, Enum):
    MOSEAC = "moseac"
    SEAC = "seac"
    SAC_FIXED = "sac_fixed"


# ===============================================================
# TRAINING CONFIGURATION
# ===============================================================

class TrainConfig(BaseModel):
    """
    Every knob of a training run. Field names are the keys accepted in
    `key = value` config files; unknown keys are rejected.
    """
    model_config = ConfigDict(extra="forbid", frozen=True)

    algo: Algo = Field(default=Algo.MOSEAC, description="moseac | seac | sac_fixed")
    seed: int = Field(default=0, description="Seeds every random stream of the run")

    # Schedule, counted in episodes
    t_max: int = Field(default=T_MAX, ge=1, description="Training episodes")
    k_length: int = Field(default=K_LENGTH, ge=1, description="Max decision steps per episode")
    k_init: int = Field(default=K_INIT, ge=1, description="Warm-up episodes before the first update block")
    k_update: int = Field(default=K_UPDATE, ge=1, description="Episodes between update blocks")
    updates_per_block: int = Field(default=UPDATES_PER_BLOCK, ge=1)
    batch_size: int = Field(default=BATCH_SIZE, ge=1)
    buffer_capacity: int = Field(default=BUFFER_CAPACITY, ge=1)
    random_warmup: bool = Field(default=True, description="Uniform random actions during warm-up episodes")

    # Soft actor-critic
    gamma: float = Field(default=GAMMA, ge=0.0, le=1.0, description="Discount per decision step")
    tau_soft: float = Field(default=TAU_SOFT, gt=0.0, le=1.0)
    soft_update_every_step: bool = Field(default=False, description="Soft update after each gradient step")
    hidden_width: int = Field(default=HIDDEN_WIDTH, ge=1)
    hidden_layers: int = Field(default=HIDDEN_LAYERS, ge=1)
    hidden_activation: Literal["tanh", "relu"] = "tanh"
    lr_actor: float = Field(default=LR_ACTOR, gt=0.0)
    lr_critic: float = Field(default=LR_CRITIC, gt=0.0)
    lr_temperature: float = Field(default=LR_TEMPERATURE, gt=0.0)
    lr_schedule: Literal["constant", "diminishing"] = "constant"
    lr_decay_steps: int = Field(default=LR_DECAY_STEPS, ge=1)
    init_temperature: float = Field(default=INIT_TEMPERATURE, gt=0.0)

    # Reward shaping
    alpha_m_init: float = Field(default=ALPHA_M_INIT, ge=0.0)
    alpha_max: float = Field(default=ALPHA_MAX, gt=0.0)
    psi: float = Field(default=PSI, gt=0.0)
    delta_trend: float = Field(default=DELTA_TREND, ge=0.0)
    eps_pen: float = Field(default=SEAC_EPS_PEN, description="SEAC per-step penalty")
    tau_pen: float = Field(default=SEAC_TAU_PEN, description="SEAC per-second penalty")
    task_reward_scale: float = Field(default=TASK_REWARD_SCALE, gt=0.0, description="Multiplies R_t before shaping")
    literal_reward_storage: bool = Field(default=False, description="Store shaped rewards at collection time")

    # Action space
    d_min: float = Field(default=D_MIN, gt=0.0, description="Shortest control period, seconds")
    d_max: float = Field(default=D_MAX, gt=0.0, description="Longest control period, seconds")
    fixed_duration: float = Field(default=FIXED_RATE_DURATION, gt=0.0, description="Period used by sac_fixed")
    start_jitter: float = Field(default=0.0, ge=0.0, description="Lateral start offset range, meters")

    # Monitoring and artifacts
    checkpoint_every: int = Field(default=CHECKPOINT_EVERY, ge=0, description="0 disables periodic checkpoints")
    qstar_refresh_every: int = Field(default=QSTAR_REFRESH_EVERY, ge=1)
    probe_size: int = Field(default=PROBE_SIZE, ge=1)
    qstar_rollouts: int = Field(default=QSTAR_ROLLOUTS, ge=1)
    eval_every: int = Field(default=0, ge=0, description="0 disables evaluation during training")
    eval_episodes: int = Field(default=EVAL_EPISODES, ge=1)
    workers: int = Field(default=1, ge=1, description="Evaluation threads")
    log_every: int = Field(default=10, ge=1, description="Episodes between progress log lines")

    @model_validator(mode="after")
    def check_consistency(self) -> "TrainConfig":
        if self.batch_size > self.buffer_capacity:
            raise ValueError(f"batch_size ({self.batch_size}) exceeds buffer_capacity ({self.buffer_capacity})")
        if self.d_min >= self.d_max:
            raise ValueError(f"d_min ({self.d_min}) must be below d_max ({self.d_max})")
        if not self.d_min <= self.fixed_duration <= self.d_max:
            raise ValueError(f"fixed_duration ({self.fixed_duration}) outside [d_min, d_max]")
        if self.alpha_m_init > self.alpha_max:
            raise ValueError(f"alpha_m_init ({self.alpha_m_init}) exceeds alpha_max ({self.alpha_max})")
        return self

    @property
    def target_entropy(self) -> float:
        return -float(self.action_dim)

    @property
    def action_dim(self) -> int:
        return 3 if self.algo is Algo.SAC_FIXED else 4

    def flat(self) -> Dict[str, Any]:
        """Field values in declaration order, enums and paths as plain strings."""
        return self.model_dump(mode="json")


class RunConfig(TrainConfig):
    """TrainConfig plus where to read the track and where to write artifacts."""

    track: Path = Field(default=DEFAULT_TRACK_PATH, description="Track file")
    out: Path = Field(default=Path("runs/default"), description="Output directory")


def resolve_run_config(path: Optional[Path], overrides: Mapping[str, Any]) -> RunConfig:
    """
    File values first, then every override that is not None.
    Validation errors name the offending key.
    """
    values: Dict[str, Any] = read_config_file(Path(path)) if path is not None else {}
    values.update({key: value for key, value in overrides.items() if value is not None})
    try:
        return RunConfig(**values)
    except ValidationError as exc:
        error = exc.errors()[0]
        key = ".".join(str(part) for part in error["loc"]) or "config"
        raise ConfigurationError(f"Invalid config key '{key}': {error['msg']}") from exc
