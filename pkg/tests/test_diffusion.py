import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from emoreg.diffusion import (
    NoiseSchedule,
    forward_marginal,
    marginal_variance,
    mean_coefficient,
    noise_at,
    noise_integral,
    oracle_score,
    oracle_score_fn,
    reverse_solve,
    reverse_solve_paths,
    sample_forward,
)
from emoreg.errors import DimensionMismatchError, NonFiniteStateError, SingularityError, ValidationError
from oracles import euler_maruyama_forward, gaussian_logpdf

S = NoiseSchedule()


def test_noise_at_constants():
    assert noise_at(S, 0.0) == 0.05
    assert noise_at(S, 1.0) == 20.0
    assert noise_at(S, 0.5) == pytest.approx(10.025, abs=1e-12)


def test_noise_integral_constants():
    assert noise_integral(S, 0.0) == 0.0
    assert noise_integral(S, 1.0) == 10.025
    assert noise_integral(S, 0.5) == pytest.approx(2.51875, abs=1e-12)
    assert math.exp(-10.025) == pytest.approx(4.4e-5, rel=0.01)


def test_noise_integral_derivative():
    for t in (0.1, 0.37, 0.9):
        h = 1e-6
        fd = (noise_integral(S, t + h) - noise_integral(S, t - h)) / (2 * h)
        assert fd == pytest.approx(noise_at(S, t), rel=1e-8)


def test_schedule_validation():
    with pytest.raises(ValidationError):
        NoiseSchedule(0.0, 1.0)
    with pytest.raises(ValidationError):
        NoiseSchedule(2.0, 1.0)
    with pytest.raises(ValidationError):
        noise_at(S, 1.5)
    with pytest.raises(ValidationError):
        noise_integral(S, -0.1)


def test_marginal_constants():
    assert mean_coefficient(S, 1.0) == pytest.approx(6.654e-3, rel=1e-3)
    assert marginal_variance(S, 1.0) == pytest.approx(0.999956, abs=1e-6)
    mean, var = forward_marginal(np.array([3.0]), np.array([1.0]), 0.0)
    assert mean.tolist() == [3.0] and var == 0.0


def test_marginal_symmetry(rng):
    xbar = rng.standard_normal((4, 80))
    for t in (0.0, 0.3, 1.0):
        mean, _ = forward_marginal(xbar, xbar, t)
        assert np.array_equal(mean, xbar)


@pytest.mark.parametrize("t", [0.3, 1.0])
def test_marginal_vs_euler_maruyama(t):
    x0, xbar = 1.0, -0.5
    paths = euler_maruyama_forward(x0, xbar, S.beta0, S.beta1, 10_000, 1000, t, seed=11)
    mean, var = forward_marginal(np.array(x0), np.array(xbar), t)
    se_mean = paths.std(ddof=1) / math.sqrt(paths.size)
    assert abs(paths.mean() - float(mean)) < 3 * se_mean
    se_var = var * math.sqrt(2.0 / (paths.size - 1))
    assert abs(paths.var(ddof=1) - var) < 3 * se_var


def test_sample_forward():
    x0, xbar = np.array([2.0]), np.array([0.0])
    assert np.array_equal(sample_forward(x0, xbar, 0.0, seed=1), x0)
    a = sample_forward(np.full(10_000, 2.0), np.zeros(10_000), 0.2, seed=3)
    b = sample_forward(np.full(10_000, 2.0), np.zeros(10_000), 0.2, seed=3)
    assert np.array_equal(a, b)
    mean, var = forward_marginal(np.array(2.0), np.array(0.0), 0.2)
    assert abs(a.mean() - float(mean)) < 4 * math.sqrt(var) / 100


def test_oracle_score_zero_at_mean(rng):
    x0, xbar = rng.standard_normal(5), rng.standard_normal(5)
    mean, _ = forward_marginal(x0, xbar, 0.4)
    assert np.allclose(oracle_score(mean, x0, xbar, 0.4), 0)


@settings(max_examples=30, deadline=None)
@given(st.floats(0.01, 1.0), st.floats(-3, 3), st.floats(-3, 3), st.floats(-3, 3))
def test_oracle_score_finite_difference(t, x0, xbar, x):
    mean, var = forward_marginal(np.array(x0), np.array(xbar), t)
    h = 1e-5 * math.sqrt(var)
    fd = (gaussian_logpdf(x + h, float(mean), var) - gaussian_logpdf(x - h, float(mean), var)) / (2 * h)
    sc = float(oracle_score(np.array(x), np.array(x0), np.array(xbar), t))
    assert abs(sc - fd) <= 1e-6 * max(abs(fd), 1.0 / math.sqrt(var))


def test_oracle_score_near_one(rng):
    x0, xbar, u = rng.standard_normal(3), rng.standard_normal(3), rng.standard_normal(3)
    rho, var = mean_coefficient(S, 1.0), marginal_variance(S, 1.0)
    assert abs(var - 1) < 1e-4
    assert np.allclose(oracle_score(xbar + u, x0, xbar, 1.0), -(u - (x0 - xbar) * rho) / var)


def test_oracle_score_singular():
    with pytest.raises(SingularityError):
        oracle_score(np.zeros(1), np.zeros(1), np.zeros(1), 1e-6)


def test_reverse_symmetric_fixed_point():
    rng = np.random.default_rng(8)
    xbar = rng.standard_normal((1, 80))
    paths = reverse_solve_paths(256, xbar, oracle_score_fn(xbar), S, n_steps=200, seed=0)
    band = 4 * paths.std(axis=0, ddof=1) / math.sqrt(256)
    assert np.all(np.abs(paths.mean(axis=0) - xbar) < band)


def test_reverse_deterministic(rng):
    xbar = rng.standard_normal((3, 4))
    sc = oracle_score_fn(np.zeros((3, 4)))
    a = reverse_solve(xbar + 1, xbar, sc, S, 50, seed=4)
    b = reverse_solve(xbar + 1, xbar, sc, S, 50, seed=4)
    assert np.array_equal(a, b)


def test_reverse_halving_step():
    rng = np.random.default_rng(42)
    x0, xbar = rng.standard_normal((1, 80)), rng.standard_normal((1, 80))
    sc = oracle_score_fn(x0)
    out = {}
    for n in (1000, 2000):
        paths = reverse_solve_paths(64, xbar, sc, S, n_steps=n, seed=0)
        out[n] = (np.sqrt(np.mean((paths.mean(axis=0) - x0) ** 2)), paths.std(axis=0, ddof=1).mean())
    noise = 2 * out[1000][1] / math.sqrt(64)
    assert out[2000][0] <= out[1000][0] + noise


def test_reverse_nonfinite_names_step():
    def bad(x, xbar, t, cond):
        return np.full_like(x, np.inf) if t < 0.5 else np.zeros_like(x)

    with pytest.raises(NonFiniteStateError) as info:
        reverse_solve(np.zeros(2), np.zeros(2), bad, S, n_steps=10)
    assert info.value.step == 6
    assert "step 6" in str(info.value)


def test_reverse_validation():
    sc = oracle_score_fn(np.zeros(2))
    with pytest.raises(DimensionMismatchError):
        reverse_solve(np.zeros(2), np.zeros(3), sc, S)
    with pytest.raises(ValidationError):
        reverse_solve(np.zeros(2), np.zeros(2), sc, S, n_steps=0)
    with pytest.raises(ValidationError):
        reverse_solve(np.zeros(2), np.zeros(2), sc, S, t_min=0.0)
