"""Stochastic proxy training: expected max distortion plus variance penalty.

Instead of the exact band-violation probability, this trainer minimizes the
sampled estimate of  E[h(A)] + sigma^2 / 2  over A = M + sigma * Z with
standard normal Z, where h is the 1/k-normalized max distortion.  Gradients
are pathwise: each sample is differentiated through its worst-case point,
and the batch average feeds first/second-moment-averaged updates.  The
standard deviation sigma is the update variable (squared where the variance
is needed), which keeps the variance nonnegative without projection; it is
additionally clamped to [0, 1].
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .core import Dataset, SamplerParams, max_distortion
from .errors import DivergenceError, ParameterError
from .objective import GradientVector

_TIE_TOL = 1e-12
_DIVERGENCE_FACTOR = 10.0
_DIVERGENCE_PATIENCE = 100


@dataclass(frozen=True)
class McConfig:
    """Iteration count, batch size, step size, moment decays, seed, log stride."""

    iters: int
    batch: int = 20
    step_size: float = 0.01
    moment_decays: tuple[float, float] = (0.9, 0.999)
    seed: int = 0
    log_every: int = 1
    moment_offset: float = 1e-8

    def __post_init__(self):
        if self.iters < 0:
            raise ParameterError(f"need iters >= 0, got {self.iters}")
        if self.batch < 1:
            raise ParameterError(f"need batch >= 1, got {self.batch}")
        if not (self.step_size > 0.0):
            raise ParameterError(f"need step_size > 0, got {self.step_size}")
        b1, b2 = self.moment_decays
        if not (0.0 <= b1 < 1.0 and 0.0 <= b2 < 1.0):
            raise ParameterError(f"moment decays must lie in [0, 1), got {self.moment_decays}")
        if self.log_every < 1:
            raise ParameterError(f"need log_every >= 1, got {self.log_every}")


@dataclass(frozen=True)
class TrajectoryRow:
    iter: int
    sampled_distortion: float
    mean_matrix_distortion: float
    sigma2: float
    proxy_value: float


@dataclass
class Trajectory:
    rows: list[TrajectoryRow] = field(default_factory=list)

    def column(self, name: str) -> np.ndarray:
        return np.array([getattr(r, name) for r in self.rows])


def _worst_point(scores: np.ndarray) -> int:
    """Index of the max |score|; ties within 1e-12 go to the lowest index."""
    mags = np.abs(scores)
    return int(np.argmax(mags >= mags.max() - _TIE_TOL))


def _batch_h_and_grads(mean, sigma, zs, x, k):
    """Per-sample max distortion and pathwise (d_mean, d_sigma) averages."""
    batch = zs.shape[0]
    a = mean[None, :, :] + sigma * zs  # (N, k, d)
    r = np.einsum("nkd,md->nkm", a, x)  # (N, k, n_pts)
    scores = np.einsum("nkm,nkm->nm", r, r) / k - 1.0  # (N, n_pts)
    mags = np.abs(scores)
    sel = (mags >= mags.max(axis=1, keepdims=True) - _TIE_TOL).argmax(axis=1)
    rows = np.arange(batch)
    h_vals = mags[rows, sel]
    signs = np.where(scores[rows, sel] >= 0.0, 1.0, -1.0)
    x_sel = x[sel]  # (N, d)
    w = r[rows, :, sel]  # (N, k): A_i x at the worst point
    zx = np.einsum("nkd,nd->nk", zs, x_sel)
    d_mean = (2.0 / k) * np.einsum("n,nk,nd->kd", signs, w, x_sel) / batch
    d_sigma = float((2.0 / k) * (signs * np.einsum("nk,nk->n", w, zx)).sum() / batch)
    return h_vals, d_mean, d_sigma


def proxy_objective(params: SamplerParams, data: Dataset, batch: int, seed: int) -> float:
    """Batch estimate of the expected max distortion plus sigma^2 / 2."""
    if batch < 1:
        raise ParameterError(f"need batch >= 1, got {batch}")
    rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence([seed])))
    sigma = math.sqrt(params.variance)
    zs = rng.standard_normal((batch, params.k, params.d))
    a = params.mean[None, :, :] + sigma * zs
    r = np.einsum("nkd,md->nkm", a, data.points)
    scores = np.einsum("nkm,nkm->nm", r, r) / params.k - 1.0
    return float(np.abs(scores).max(axis=1).mean() + params.variance / 2.0)


def proxy_gradient(params: SamplerParams, data: Dataset, batch: int, seed: int):
    """Pathwise batch gradient of the proxy in (mean, variance) coordinates.

    Uses the same draws as :func:`proxy_objective` for the same seed (common
    random numbers).  At zero variance the sampling term of the variance
    derivative has no pathwise value; only the regularizer slope 1/2 is
    reported there.
    """
    if batch < 1:
        raise ParameterError(f"need batch >= 1, got {batch}")
    rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence([seed])))
    sigma = math.sqrt(params.variance)
    zs = rng.standard_normal((batch, params.k, params.d))
    _, d_mean, d_sigma = _batch_h_and_grads(
        params.mean, sigma, zs, data.points, params.k
    )
    d_tau = 0.5 if sigma == 0.0 else d_sigma / (2.0 * sigma) + 0.5
    return GradientVector(d_mean=d_mean, d_tau=d_tau)


def run_mc_training(data: Dataset, k: int, cfg: McConfig):
    """Moment-averaged stochastic descent from the zero-mean unit-variance start.

    Returns the final sampler and the logged trajectory.  Logged rows carry
    one fresh sample's distortion, the mean matrix's distortion, the current
    variance, and the training batch's proxy estimate.  Raises
    :class:`DivergenceError` when the proxy exceeds ten times its initial
    value for one hundred consecutive logged rows.
    """
    if k < 1:
        raise ParameterError(f"need k >= 1, got {k}")
    rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence([cfg.seed])))
    x = data.points
    d = data.d
    mean = np.zeros((k, d))
    sigma = 1.0
    b1, b2 = cfg.moment_decays
    m_mean = np.zeros_like(mean)
    v_mean = np.zeros_like(mean)
    m_sigma = 0.0
    v_sigma = 0.0

    traj = Trajectory()

    def log_row(it, proxy):
        z = rng.standard_normal((k, d))
        sampled = max_distortion(mean + sigma * z, data).max
        traj.rows.append(
            TrajectoryRow(
                iter=it,
                sampled_distortion=float(sampled),
                mean_matrix_distortion=float(max_distortion(mean, data).max),
                sigma2=sigma * sigma,
                proxy_value=float(proxy),
            )
        )

    zs0 = rng.standard_normal((cfg.batch, k, d))
    h0, _, _ = _batch_h_and_grads(mean, sigma, zs0, x, k)
    initial_proxy = float(h0.mean() + sigma * sigma / 2.0)
    log_row(0, initial_proxy)

    bad_streak = 0
    for t in range(1, cfg.iters + 1):
        zs = rng.standard_normal((cfg.batch, k, d))
        h_vals, d_mean, d_sigma = _batch_h_and_grads(mean, sigma, zs, x, k)
        proxy = float(h_vals.mean() + sigma * sigma / 2.0)
        g_mean = d_mean
        g_sigma = d_sigma + sigma  # d(sigma^2/2)/d(sigma)

        m_mean = b1 * m_mean + (1.0 - b1) * g_mean
        v_mean = b2 * v_mean + (1.0 - b2) * g_mean * g_mean
        m_sigma = b1 * m_sigma + (1.0 - b1) * g_sigma
        v_sigma = b2 * v_sigma + (1.0 - b2) * g_sigma * g_sigma
        bc1 = 1.0 - b1**t
        bc2 = 1.0 - b2**t
        mean = mean - cfg.step_size * (m_mean / bc1) / (np.sqrt(v_mean / bc2) + cfg.moment_offset)
        sigma = sigma - cfg.step_size * (m_sigma / bc1) / (
            math.sqrt(v_sigma / bc2) + cfg.moment_offset
        )
        sigma = min(max(sigma, 0.0), 1.0)

        if t % cfg.log_every == 0 or t == cfg.iters:
            log_row(t, proxy)
            if proxy > _DIVERGENCE_FACTOR * max(initial_proxy, 1e-12):
                bad_streak += 1
                if bad_streak >= _DIVERGENCE_PATIENCE:
                    raise DivergenceError(
                        f"proxy estimate {proxy:.3e} stayed above "
                        f"{_DIVERGENCE_FACTOR:g} x initial for "
                        f"{_DIVERGENCE_PATIENCE} consecutive logs",
                        trajectory=traj,
                    )
            else:
                bad_streak = 0

    return SamplerParams(mean=mean, variance=sigma * sigma), traj
