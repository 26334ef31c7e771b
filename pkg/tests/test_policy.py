import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays
from scipy import integrate, stats

from moseac.agent import PolicyHead
from moseac.agent.policy import log_one_minus_tanh_sq
from moseac.core.config import D_MAX, D_MIN, FIXED_RATE_DURATION, OBS_DIM
from moseac.core.errors import ContractViolation
from moseac.gradnet import DenseNet, GradTape
from moseac.schemas.track import DurationRange


def constant_head(mean, log_std, obs_dim=2) -> PolicyHead:
    """Actor whose output ignores the observation: zero weights, biases = (mean, log_std)."""
    out = np.concatenate([mean, log_std])
    weights = np.concatenate([np.zeros(obs_dim * out.size), out])
    return PolicyHead(DenseNet([(obs_dim, out.size)], ["identity"], weights))


@given(u=arrays(np.float64, (64, 4), elements=st.floats(-30.0, 30.0)))
def test_squash_stays_in_range(u):
    head = constant_head(np.zeros(4), np.zeros(4))
    controls, duration = head.squash(u)
    assert np.all(np.abs(controls) <= 1.0)
    assert np.all((duration >= D_MIN) & (duration <= D_MAX))


def test_samples_stay_in_range(make_head):
    head = make_head(seed=3)
    rng = np.random.default_rng(0)
    obs = rng.uniform(-1.0, 1.0, (20_000, OBS_DIM))
    controls, duration, log_prob = head.sample(obs, rng)
    assert np.all(np.abs(controls) <= 1.0)
    assert np.all((duration >= D_MIN) & (duration <= D_MAX))
    assert np.all(np.isfinite(log_prob))


def test_zero_preactivation_gives_the_midpoint_duration():
    head = constant_head(np.zeros(4), np.full(4, -20.0))
    controls, duration, _ = head.sample_action(np.zeros(2), np.random.default_rng(0), deterministic=True)
    assert duration == pytest.approx((D_MIN + D_MAX) / 2.0, abs=1e-15)
    assert np.array_equal(controls, np.zeros(3))


def test_deterministic_mode_repeats(make_head):
    head = make_head(seed=4)
    obs = np.random.default_rng(1).uniform(-1.0, 1.0, OBS_DIM)
    first = head.act(obs, np.random.default_rng(10), deterministic=True)
    second = head.act(obs, np.random.default_rng(99), deterministic=True)
    assert first == second


def test_log_one_minus_tanh_sq_is_stable():
    u = np.array([-3.0, -0.5, 0.0, 0.7, 4.0])
    assert np.allclose(log_one_minus_tanh_sq(u), np.log(1.0 - np.tanh(u) ** 2), rtol=1e-12)
    far = log_one_minus_tanh_sq(np.array([-50.0, 50.0]))
    assert np.all(np.isfinite(far))
    assert np.allclose(far, 2.0 * (math.log(2.0) - 50.0), rtol=1e-12)


def test_log_prob_matches_the_numerical_jacobian():
    head = constant_head(np.array([0.2, -0.4, 0.1, 0.3]), np.array([-0.5, 0.1, -1.0, -0.3]))
    mean, log_std = head.gaussian(np.zeros(2))
    noise = np.array([0.3, -1.2, 0.8, 0.5])
    u = mean + np.exp(log_std) * noise

    step = 1e-6
    jacobian = []
    for i in range(4):
        up, down = u.copy(), u.copy()
        up[i] += step
        down[i] -= step
        values_up = np.append(*head.squash(up))
        values_down = np.append(*head.squash(down))
        jacobian.append((values_up[i] - values_down[i]) / (2.0 * step))
    expected = np.sum(stats.norm.logpdf(u, mean, np.exp(log_std))) - np.sum(np.log(jacobian))
    assert head.log_prob(u, noise, log_std) == pytest.approx(expected, abs=1e-4)


def duration_density(head: PolicyHead, mean: float, std: float):
    span = head.durations.d_max - head.durations.d_min

    def density(d: float) -> float:
        u = math.atanh(2.0 * (d - head.durations.d_min) / span - 1.0)
        log_p = stats.norm.logpdf(u, mean, std) - log_one_minus_tanh_sq(np.array(u)) - head.duration_log_scale
        return float(np.exp(log_p))
    return density


def test_squashed_duration_density_integrates_to_one():
    head = constant_head(np.zeros(4), np.zeros(4))
    total, _ = integrate.quad(duration_density(head, 0.4, 0.6), D_MIN, D_MAX, limit=200)
    assert total == pytest.approx(1.0, abs=1e-6)


def test_duration_density_is_the_derivative_of_its_cdf():
    head = constant_head(np.zeros(4), np.zeros(4))
    mean, std = -0.3, 0.8
    density = duration_density(head, mean, std)
    span = D_MAX - D_MIN

    def cdf(d: float) -> float:
        return float(stats.norm.cdf(math.atanh(2.0 * (d - D_MIN) / span - 1.0), mean, std))

    for d in np.linspace(D_MIN + 0.01, D_MAX - 0.01, 7):
        step = 1e-7
        assert density(d) == pytest.approx((cdf(d + step) - cdf(d - step)) / (2.0 * step), rel=1e-4)


@pytest.mark.slow
def test_monte_carlo_log_prob_matches_the_integrated_density():
    mean, log_std = np.array([0.1, -0.2, 0.0, 0.35]), np.array([-0.4, -0.1, 0.2, -0.7])
    head = constant_head(mean, log_std)
    rng = np.random.default_rng(11)
    _, _, log_prob = head.sample(np.zeros((400_000, 2)), rng)

    # E[log p] factorizes over coordinates; integrate each squashed marginal.
    expected = 0.0
    for i, (m, s) in enumerate(zip(mean, np.exp(log_std))):
        scale = head.duration_log_scale if i == 3 else 0.0

        def integrand(u: float) -> float:
            log_p = stats.norm.logpdf(u, m, s) - float(log_one_minus_tanh_sq(np.array(u))) - scale
            return stats.norm.pdf(u, m, s) * log_p

        value, _ = integrate.quad(integrand, m - 12 * s, m + 12 * s, limit=200)
        expected += value
    assert np.mean(log_prob) == pytest.approx(expected, abs=1e-2)


@settings(max_examples=20, deadline=None)
@given(seed=st.integers(0, 1000))
def test_tape_sample_matches_numpy_sample(seed):
    head = PolicyHead(DenseNet.initialize([OBS_DIM, 8, 8], np.random.default_rng(seed)))
    rng = np.random.default_rng(seed + 1)
    obs = rng.uniform(-1.0, 1.0, (5, OBS_DIM))
    noise = rng.standard_normal((5, 4))

    tape = GradTape()
    controls, duration, log_prob = head.rsample(tape, tape.const(obs), noise, tape.param(head.net.weights, "actor"))
    mean, log_std = head.gaussian(obs)
    u = mean + np.exp(log_std) * noise
    expected_controls, expected_duration = head.squash(u)
    assert np.allclose(controls.value, expected_controls, atol=1e-12)
    assert np.allclose(duration.value[:, 0], head.normalized_duration(expected_duration), atol=1e-12)
    assert np.allclose(log_prob.value[:, 0], head.log_prob(u, noise, log_std), atol=1e-10)


def test_entropy_term_pushes_the_log_std_up():
    head = constant_head(np.zeros(4), np.full(4, -2.0))
    rng = np.random.default_rng(12)
    noise = rng.standard_normal((2000, 4))
    tape = GradTape()
    _, _, log_prob = head.rsample(tape, tape.const(rng.uniform(-1.0, 1.0, (2000, 2))), noise,
                                  tape.param(head.net.weights, "actor"))
    grads = tape.backward(tape.mean(log_prob))["actor"]

    log_std_bias = grads[2 * 8 + 4:]
    u = np.exp(-2.0) * noise
    expected = np.mean(-1.0 + 2.0 * np.tanh(u) * np.exp(-2.0) * noise, axis=0)
    assert np.allclose(log_std_bias, expected, atol=1e-10)
    assert np.all(log_std_bias < 0.0)


def test_fixed_rate_head(make_head):
    head = make_head(fixed_duration=FIXED_RATE_DURATION)
    assert head.action_dim == 3 and not head.elastic
    rng = np.random.default_rng(0)
    _, duration, _ = head.sample(rng.uniform(-1.0, 1.0, (10, OBS_DIM)), rng)
    assert np.all(duration == FIXED_RATE_DURATION)
    assert head.random_action(rng).duration == FIXED_RATE_DURATION


def test_random_action_covers_the_duration_range(make_head):
    head = make_head()
    rng = np.random.default_rng(2)
    sampled = [head.random_action(rng).duration for _ in range(200)]
    assert D_MIN <= min(sampled) and max(sampled) <= D_MAX


def test_policy_contract_errors(make_head):
    with pytest.raises(ContractViolation):
        PolicyHead(DenseNet.initialize([OBS_DIM, 7], np.random.default_rng(0)))
    head = make_head()
    with pytest.raises(ContractViolation):
        head.sample_action(np.zeros((2, OBS_DIM)), np.random.default_rng(0))
    with pytest.raises(ContractViolation):
        tape = GradTape()
        head.rsample(tape, tape.const(np.zeros((2, OBS_DIM))), np.zeros((2, 3)))


def test_custom_duration_range():
    durations = DurationRange(d_min=0.1, d_max=0.3)
    head = PolicyHead(DenseNet([(2, 8)], ["identity"], np.zeros(24)), durations)
    _, duration = head.squash(np.zeros(4))
    assert duration == pytest.approx(0.2)
