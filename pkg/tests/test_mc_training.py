"""Stochastic proxy objective, pathwise gradients, and the training loop."""

import math

import numpy as np
import pytest

import jlopt
from jlopt import (
    McConfig,
    SamplerParams,
    make_unit_dataset,
    max_distortion,
    proxy_gradient,
    proxy_objective,
    run_mc_training,
)
from jlopt.errors import DivergenceError, ParameterError


@pytest.fixture(scope="module")
def small_data():
    return make_unit_dataset(10, 20, seed=2)


def _fixed_noise_proxy(mean, sigma, data, k, zs):
    a = mean[None, :, :] + sigma * zs
    r = np.einsum("nkd,md->nkm", a, data.points)
    scores = np.einsum("nkm,nkm->nm", r, r) / k - 1.0
    return float(np.abs(scores).max(axis=1).mean() + sigma * sigma / 2.0)


class TestProxyObjective:
    def test_zero_variance_is_exact(self, small_data, rng):
        mean = rng.standard_normal((5, 20)) * 0.3
        params = SamplerParams(mean=mean, variance=0.0)
        h = max_distortion(mean, small_data).max
        for seed in (0, 1, 2):
            assert proxy_objective(params, small_data, batch=8, seed=seed) == pytest.approx(
                h, abs=1e-14
            )

    def test_standard_error_shrinks_with_batch(self, small_data):
        params = SamplerParams(mean=np.zeros((5, 20)), variance=1.0)
        small = [proxy_objective(params, small_data, batch=20, seed=s) for s in range(120)]
        large = [proxy_objective(params, small_data, batch=2000, seed=s) for s in range(30)]
        ratio = np.var(small) / np.var(large)
        # iid averaging: variance ratio should straddle 2000/20 = 100
        assert 30.0 <= ratio <= 330.0

    def test_batch_validation(self, small_data):
        params = SamplerParams(mean=np.zeros((5, 20)), variance=0.5)
        with pytest.raises(ParameterError):
            proxy_objective(params, small_data, batch=0, seed=0)


class TestProxyGradient:
    def test_zero_variance_closed_form(self, small_data, rng):
        mean = rng.standard_normal((5, 20)) * 0.3
        params = SamplerParams(mean=mean, variance=0.0)
        report = max_distortion(mean, small_data)
        j_star = int(np.argmax(report.per_point))
        x = small_data.points[j_star]
        w = mean @ x
        sign = math.copysign(1.0, float(w @ w) / 5.0 - 1.0)
        expect = sign * (2.0 / 5.0) * np.outer(w, x)
        grad = proxy_gradient(params, small_data, batch=4, seed=0)
        assert np.allclose(grad.d_mean, expect, atol=1e-12)
        assert grad.d_tau == 0.5

    def test_common_random_numbers_finite_difference(self, small_data):
        rng = np.random.default_rng(8)
        mean = rng.standard_normal((5, 20)) * 0.4
        tau = 0.49
        batch, seed = 16, 13
        grad = proxy_gradient(SamplerParams(mean, tau), small_data, batch, seed)

        gen = np.random.Generator(np.random.PCG64(np.random.SeedSequence([seed])))
        zs = gen.standard_normal((batch, 5, 20))

        h = 1e-6
        worst = 0.0
        for idx in [(0, 0), (2, 7), (4, 19), (1, 11)]:
            mp = mean.copy()
            mp[idx] += h
            mm = mean.copy()
            mm[idx] -= h
            fd = (
                _fixed_noise_proxy(mp, math.sqrt(tau), small_data, 5, zs)
                - _fixed_noise_proxy(mm, math.sqrt(tau), small_data, 5, zs)
            ) / (2.0 * h)
            rel = abs(fd - grad.d_mean[idx]) / max(abs(fd), abs(grad.d_mean[idx]), 1e-10)
            worst = max(worst, rel)
        # variance coordinate via sigma^2 -> sigma chain
        fd_tau = (
            _fixed_noise_proxy(mean, math.sqrt(tau + h), small_data, 5, zs)
            - _fixed_noise_proxy(mean, math.sqrt(tau - h), small_data, 5, zs)
        ) / (2.0 * h)
        worst = max(worst, abs(fd_tau - grad.d_tau) / max(abs(fd_tau), 1e-10))
        assert worst <= 1e-4

    def test_zero_mean_gradient_averages_out(self, small_data):
        params = SamplerParams(mean=np.zeros((5, 20)), variance=1.0)
        grads = [
            proxy_gradient(params, small_data, batch=64, seed=s).d_mean for s in range(40)
        ]
        avg = np.mean(grads, axis=0)
        pool = np.std(grads, axis=0) / math.sqrt(len(grads))
        assert np.all(np.abs(avg) <= 3.0 * pool + 1e-4)


class TestRunMcTraining:
    def test_zero_iterations_returns_init(self, small_data):
        params, traj = run_mc_training(small_data, 5, McConfig(iters=0, seed=0))
        assert np.all(params.mean == 0.0)
        assert params.variance == 1.0
        assert len(traj.rows) == 1
        assert traj.rows[0].iter == 0
        assert traj.rows[0].mean_matrix_distortion == 1.0

    def test_deterministic_trajectories(self, small_data):
        cfg = McConfig(iters=60, batch=8, step_size=0.02, seed=5, log_every=3)
        _, t1 = run_mc_training(small_data, 5, cfg)
        _, t2 = run_mc_training(small_data, 5, cfg)
        assert [tuple(vars(r).values()) for r in t1.rows] == [
            tuple(vars(r).values()) for r in t2.rows
        ]

    def test_training_reduces_distortion_and_variance(self, small_data):
        cfg = McConfig(iters=800, batch=16, step_size=0.01, seed=3, log_every=1)
        params, traj = run_mc_training(small_data, 5, cfg)
        final = traj.rows[-1]
        assert final.mean_matrix_distortion < 0.3
        assert final.sigma2 < 0.05
        # sigma^2 eventually decreasing: 50-log moving average over the tail
        sig = traj.column("sigma2")
        kernel = np.ones(50) / 50.0
        smooth = np.convolve(sig, kernel, mode="valid")
        tail = smooth[int(0.8 * len(smooth)):]
        assert np.all(np.diff(tail) <= 1e-6)

    def test_beats_best_random_draw(self, small_data):
        cfg = McConfig(iters=800, batch=16, step_size=0.01, seed=3, log_every=10)
        params, traj = run_mc_training(small_data, 5, cfg)
        base = jlopt.baseline_gaussian_trials(small_data, 5, trials=1000, seed=4)
        assert traj.rows[-1].mean_matrix_distortion < base.min_max_distortion

    def test_divergence_guard(self, small_data):
        cfg = McConfig(iters=400, batch=4, step_size=1e3, seed=0, log_every=1)
        with pytest.raises(DivergenceError) as err:
            run_mc_training(small_data, 5, cfg)
        assert err.value.trajectory is not None
        assert len(err.value.trajectory.rows) >= 100

    def test_config_validation(self):
        with pytest.raises(ParameterError):
            McConfig(iters=-1)
        with pytest.raises(ParameterError):
            McConfig(iters=10, batch=0)
        with pytest.raises(ParameterError):
            McConfig(iters=10, step_size=0.0)
        with pytest.raises(ParameterError):
            McConfig(iters=10, moment_decays=(1.0, 0.9))
        with pytest.raises(ParameterError):
            McConfig(iters=10, log_every=0)
