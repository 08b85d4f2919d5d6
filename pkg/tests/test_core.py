"""Dataset construction, distortion metrics, sampling, and the random baseline."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import jlopt
from jlopt import (
    Dataset,
    SamplerParams,
    baseline_gaussian_trials,
    jl_epsilon,
    make_unit_dataset,
    max_distortion,
    sample_gaussian_matrix,
)
from jlopt.errors import ParameterError

# frozen: 2 * sqrt(ln 100 / 30), cross-checked by direct arithmetic below
_EPS_100_30_C2 = 0.7835960001589333


class TestDataset:
    def test_single_point_unit_norm(self):
        data = make_unit_dataset(1, 2, seed=0)
        assert abs(np.linalg.norm(data.points[0]) - 1.0) <= 1e-12

    def test_all_points_unit_norm_at_scale(self):
        data = make_unit_dataset(100, 500, seed=4)
        norms = np.linalg.norm(data.points, axis=1)
        assert np.max(np.abs(norms - 1.0)) <= 1e-12
        assert (data.n, data.d) == (100, 500)

    def test_deterministic(self):
        a = make_unit_dataset(17, 9, seed=42)
        b = make_unit_dataset(17, 9, seed=42)
        assert np.array_equal(a.points, b.points)

    def test_normalizes_arbitrary_input(self):
        data = Dataset(np.array([[3.0, 4.0], [0.5, 0.0]]))
        assert np.allclose(np.linalg.norm(data.points, axis=1), 1.0, atol=1e-12)

    def test_rejects_bad_shapes_and_zero_rows(self):
        with pytest.raises(ParameterError):
            make_unit_dataset(0, 5, seed=0)
        with pytest.raises(ParameterError):
            make_unit_dataset(5, 1, seed=0)
        with pytest.raises(ParameterError):
            Dataset(np.zeros((3, 4)))


class TestMaxDistortion:
    def test_zero_matrix(self):
        data = make_unit_dataset(7, 5, seed=1)
        report = max_distortion(np.zeros((3, 5)), data)
        assert np.allclose(report.per_point, 1.0)
        assert report.max == 1.0
        assert report.mean == 1.0

    def test_scaled_basis_rows_are_exact(self):
        k, d = 3, 6
        a = np.zeros((k, d))
        for i in range(k):
            a[i, i] = math.sqrt(k)
        data = Dataset(np.eye(d)[:1])  # the first basis vector
        report = max_distortion(a, data)
        assert report.per_point[0] == pytest.approx(0.0, abs=1e-14)

    def test_max_dominates_mean(self, rng):
        data = make_unit_dataset(20, 10, seed=2)
        a = rng.standard_normal((4, 10))
        report = max_distortion(a, data)
        assert report.max >= report.mean >= 0.0
        assert report.max == pytest.approx(report.per_point.max())

    def test_permutation_invariance(self, rng):
        data = make_unit_dataset(12, 6, seed=3)
        perm = rng.permutation(12)
        shuffled = Dataset(data.points[perm])
        a = rng.standard_normal((4, 6))
        assert max_distortion(a, data).max == pytest.approx(
            max_distortion(a, shuffled).max, abs=1e-12
        )

    def test_rotation_invariance(self, rng):
        data = make_unit_dataset(10, 7, seed=4)
        a = rng.standard_normal((3, 7))
        q, _ = np.linalg.qr(rng.standard_normal((7, 7)))
        rotated = Dataset(data.points @ q)
        assert max_distortion(a @ q, rotated).max == pytest.approx(
            max_distortion(a, data).max, abs=1e-10
        )

    def test_shape_mismatch(self):
        data = make_unit_dataset(5, 6, seed=0)
        with pytest.raises(ParameterError):
            max_distortion(np.zeros((3, 7)), data)


class TestJlEpsilon:
    def test_natural_log_base_point(self):
        assert jl_epsilon(math.e, 1, 1.0) == pytest.approx(1.0, abs=1e-15)

    def test_frozen_value(self):
        val = jl_epsilon(100, 30, 2.0)
        assert val == pytest.approx(_EPS_100_30_C2, abs=1e-15)
        assert val == pytest.approx(2.0 * math.sqrt(math.log(100.0) / 30.0), abs=1e-15)

    def test_decreasing_in_k(self):
        vals = [jl_epsilon(50, k, 1.5) for k in (1, 2, 5, 20, 100, 10_000)]
        assert all(a > b for a, b in zip(vals, vals[1:]))
        assert vals[-1] < 0.05

    def test_validation(self):
        with pytest.raises(ParameterError):
            jl_epsilon(1, 3, 1.0)
        with pytest.raises(ParameterError):
            jl_epsilon(10, 0, 1.0)
        with pytest.raises(ParameterError):
            jl_epsilon(10, 3, 0.0)


class TestSampleGaussianMatrix:
    def test_zero_variance_returns_mean_bitwise(self, rng):
        mean = rng.standard_normal((4, 9))
        params = SamplerParams(mean=mean, variance=0.0)
        out = sample_gaussian_matrix(params, 9, seed=5)
        assert np.array_equal(out, mean)
        assert out is not params.mean

    def test_deterministic(self):
        params = SamplerParams(mean=np.zeros((3, 8)), variance=0.7)
        a = sample_gaussian_matrix(params, 8, seed=11)
        b = sample_gaussian_matrix(params, 8, seed=11)
        assert np.array_equal(a, b)

    def test_moments(self):
        params = SamplerParams(mean=np.zeros((40, 50)), variance=1.0)
        draws = np.stack(
            [sample_gaussian_matrix(params, 50, seed=s) for s in range(40)]
        )
        n = draws.size
        se_mean = 1.0 / math.sqrt(n)
        assert abs(draws.mean()) <= 3.0 * se_mean
        se_var = math.sqrt(2.0 / n)
        assert abs(draws.var() - 1.0) <= 3.0 * se_var

    def test_dimension_mismatch(self):
        params = SamplerParams(mean=np.zeros((3, 8)), variance=0.5)
        with pytest.raises(ParameterError):
            sample_gaussian_matrix(params, 9, seed=0)

    def test_negative_variance_rejected(self):
        with pytest.raises(ParameterError):
            SamplerParams(mean=np.zeros((2, 4)), variance=-0.1)


class TestBaselineTrials:
    def test_single_trial_avg_equals_min(self):
        data = make_unit_dataset(10, 12, seed=6)
        summary = baseline_gaussian_trials(data, 4, trials=1, seed=0)
        assert summary.avg_max_distortion == summary.min_max_distortion

    def test_min_bounded_by_avg(self):
        data = make_unit_dataset(1, 8, seed=0)
        summary = baseline_gaussian_trials(data, 3, trials=40, seed=2)
        assert summary.min_max_distortion <= summary.avg_max_distortion

    def test_worker_count_does_not_change_results(self):
        data = make_unit_dataset(8, 10, seed=1)
        serial = baseline_gaussian_trials(data, 4, trials=37, seed=9, workers=1)
        parallel = baseline_gaussian_trials(data, 4, trials=37, seed=9, workers=4)
        assert np.array_equal(serial.max_distortions, parallel.max_distortions)

    def test_validation(self):
        data = make_unit_dataset(4, 6, seed=0)
        with pytest.raises(ParameterError):
            baseline_gaussian_trials(data, 3, trials=0, seed=0)


@settings(max_examples=30, deadline=None)
@given(n=st.integers(1, 12), d=st.integers(2, 10), seed=st.integers(0, 1000))
def test_dataset_norms_property(n, d, seed):
    data = make_unit_dataset(n, d, seed)
    assert np.max(np.abs(np.linalg.norm(data.points, axis=1) - 1.0)) <= 1e-12
