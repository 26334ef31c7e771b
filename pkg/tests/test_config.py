from pathlib import Path

import pytest
from pydantic import ValidationError

from moseac.core.config import D_MAX, D_MIN, config_hash, read_config_file, render_config
from moseac.core.errors import ConfigurationError
from moseac.schemas.config import Algo, RunConfig, TrainConfig, resolve_run_config


def write(tmp_path: Path, text: str) -> Path:
    path = tmp_path / "run.cfg"
    path.write_text(text, encoding="utf-8")
    return path


def test_defaults():
    config = TrainConfig()
    assert config.algo is Algo.MOSEAC
    assert (config.d_min, config.d_max) == (D_MIN, D_MAX)
    assert config.target_entropy == -4.0
    assert TrainConfig(algo="sac_fixed").action_dim == 3


def test_file_values_then_overrides(tmp_path):
    path = write(tmp_path, "# comment\nalgo = seac\nseed = 3\nbatch_size = 64\nrandom_warmup = false\n")
    config = resolve_run_config(path, {"seed": 11, "workers": None})
    assert config.algo is Algo.SEAC
    assert config.seed == 11
    assert config.batch_size == 64
    assert config.random_warmup is False
    assert config.workers == 1


def test_unknown_key_is_named(tmp_path):
    with pytest.raises(ConfigurationError, match="'learning_rate'"):
        resolve_run_config(write(tmp_path, "learning_rate = 0.1\n"), {})


def test_invalid_value_is_named(tmp_path):
    with pytest.raises(ConfigurationError, match="'gamma'"):
        resolve_run_config(write(tmp_path, "gamma = 1.5\n"), {})
    with pytest.raises(ConfigurationError, match="'algo'"):
        resolve_run_config(None, {"algo": "ppo"})


def test_key_without_value_is_rejected(tmp_path):
    with pytest.raises(ConfigurationError, match="without value"):
        read_config_file(write(tmp_path, "seed\n"))


def test_missing_config_file(tmp_path):
    with pytest.raises(ConfigurationError, match="not found"):
        resolve_run_config(tmp_path / "absent.cfg", {})


@pytest.mark.parametrize("values", [
    {"batch_size": 600, "buffer_capacity": 500},
    {"d_min": 0.3},
    {"fixed_duration": 0.5},
    {"alpha_m_init": 6.0},
])
def test_cross_field_checks(values):
    with pytest.raises(ValidationError):
        TrainConfig(**values)


def test_rendered_config_reads_back(tmp_path):
    config = RunConfig(seed=5, algo=Algo.SAC_FIXED, lr_actor=1e-4, out=tmp_path / "run")
    path = write(tmp_path, render_config(config.flat()))
    assert resolve_run_config(path, {}) == config
    assert config_hash(config.flat()) == config_hash(resolve_run_config(path, {}).flat())


def test_bundled_base_config_is_valid():
    config = resolve_run_config(Path(__file__).resolve().parent.parent / "configs" / "base.cfg", {})
    assert config.algo is Algo.MOSEAC
    assert (config.alpha_max, config.psi, config.probe_size) == (5.0, 0.02, 32)
    assert config.task_reward_scale == 500.0
