"""Deterministic second-order descent over sampler parameters.

The loop alternates plain gradient steps with negative-curvature steps along
the Hessian's minimum eigenvector and stops at an approximate second-order
stationary point.  The variance coordinate lives in the box
[sigma_floor, 1]; once it is pinned at a bound with the gradient pushing
outward, that coordinate is frozen (projected gradient, restricted Hessian)
and the iteration continues over the mean matrix alone.  The raw variance
gradient approaches the constant regularizer slope 1/2 as the distribution
terms die off, so an unconstrained interior stationary point generally does
not exist; the box projection is what makes termination well defined.

Two step-size modes:

* ``adaptive`` (default): the gradient step is backtracked until the
  decrease is at least nu * |grad|^2 / 2 (the quantity the fixed-step theory
  guarantees), and the curvature step until it decreases the objective at
  all.  Running estimates L ~ 1/nu and K ~ 3 sqrt(rho) / h are recorded.
* ``fixed-constants``: nu = 1/L and h = 3 sqrt(rho) / K with user-supplied
  L, K; every step must meet its guaranteed decrease floor
  (nu rho^2 / 2 for gradient steps, 3 rho^1.5 / (4 sqrt(K)) for curvature
  steps) or :class:`ConstantMisestimateError` is raised.
"""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass, field

import numpy as np

from .core import SamplerParams, jl_epsilon, max_distortion
from .errors import (
    CalibrationError,
    ConstantMisestimateError,
    ConvergenceError,
    ParameterError,
)
from .objective import (
    ObjectiveContext,
    failure_prob_point,
    g_value,
    grad_g,
    hessian_vec_product,
    _lanczos_min_eig,
)

_NU_MAX = 1e8
_NU_MIN = 1e-18
_H_MIN = 1e-14
_DECREASE_SLACK = 1e-12
_EIG_MATVEC_BUDGET = 4000


@dataclass(frozen=True)
class DescentConfig:
    """Tolerances, smoothness constants, and iteration limits for the loop."""

    rho: float = 1e-4
    L: float = 1.0
    K: float = 1.0
    mode: str = "adaptive"
    max_iters: int = 50_000
    eig_tol: float = 1e-6
    seed: int = 0

    def __post_init__(self):
        if not (self.rho > 0.0):
            raise ParameterError(f"need rho > 0, got {self.rho}")
        if not (self.L > 0.0 and self.K > 0.0):
            raise ParameterError(f"need L, K > 0, got L={self.L}, K={self.K}")
        if self.mode not in ("adaptive", "fixed-constants"):
            raise ParameterError(f"unknown mode {self.mode!r}")
        if self.max_iters < 1:
            raise ParameterError(f"need max_iters >= 1, got {self.max_iters}")
        if not (self.eig_tol > 0.0):
            raise ParameterError(f"need eig_tol > 0, got {self.eig_tol}")


@dataclass(frozen=True)
class TraceRecord:
    """State at one iteration plus the step taken from it."""

    iter: int
    step_type: str  # "gradient" | "curvature" | "terminate"
    g: float
    f: float
    sigma2: float
    grad_norm: float
    lambda_min: float | None
    decrease: float | None
    tau_clamped: bool = False


@dataclass
class OptTrace:
    """Full run record: per-iteration rows plus outcome flags and estimates."""

    records: list[TraceRecord] = field(default_factory=list)
    converged: bool = False
    tau_was_clamped: bool = False
    l_estimate: float = 0.0
    k_estimate: float = 0.0
    final_params: SamplerParams | None = None

    @property
    def g_values(self) -> np.ndarray:
        return np.array([r.g for r in self.records])


def _project_tau(tau: float, floor: float) -> tuple[float, bool]:
    if tau < floor:
        return floor, True
    if tau > 1.0:
        return 1.0, True
    return tau, False


def hessian_descent(
    ctx: ObjectiveContext,
    cfg: DescentConfig,
    init: SamplerParams | None = None,
) -> tuple[np.ndarray, OptTrace]:
    """Run the descent loop; returns the final mean matrix and the trace.

    Starts from the zero mean matrix with unit variance unless ``init`` is
    given.  On iteration exhaustion the best iterate is returned with
    ``trace.converged`` False rather than raising.
    """
    k, d = ctx.k, ctx.data.d
    if init is None:
        init = SamplerParams(mean=np.zeros((k, d)), variance=1.0)
    floor = ctx.sigma_floor
    mean = init.mean.copy()
    tau, clamped = _project_tau(init.variance, floor)

    trace = OptTrace(tau_was_clamped=clamped)
    l_hat = cfg.L
    k_hat = cfg.K
    nu_prev = 1.0 / l_hat

    params = SamplerParams(mean=mean, variance=tau)
    g_cur = g_value(params, ctx)

    for t in range(cfg.max_iters):
        grad = grad_g(params, ctx)
        pinned_low = tau <= floor * (1.0 + 1e-12) and grad.d_tau > 0.0
        pinned_high = tau >= 1.0 - 1e-12 and grad.d_tau < 0.0
        gt = 0.0 if (pinned_low or pinned_high) else grad.d_tau
        gnorm = float(math.hypot(np.linalg.norm(grad.d_mean), gt))
        f_cur = g_cur - tau / 2.0

        if gnorm > cfg.rho:
            step = _gradient_step(
                ctx, cfg, mean, tau, grad.d_mean, gt, gnorm, g_cur, floor, nu_prev
            )
            if step is None:
                trace.records.append(
                    TraceRecord(t, "terminate", g_cur, f_cur, tau, gnorm, None, None)
                )
                trace.converged = False
                break
            mean, tau, g_new, nu_used, was_clamped, l_loc = step
            nu_prev = nu_used
            l_hat = max(l_hat, 1.0 / nu_used, l_loc)
            trace.records.append(
                TraceRecord(
                    t, "gradient", g_cur, f_cur, params.variance, gnorm,
                    None, g_cur - g_new, was_clamped,
                )
            )
            trace.tau_was_clamped |= was_clamped
            g_cur = g_new
            params = SamplerParams(mean=mean, variance=tau)
            continue

        restrict = pinned_low or pinned_high
        lam, u = _min_eig_step(params, ctx, cfg, restrict, t)
        threshold = -math.sqrt(k_hat * cfg.rho) if cfg.mode == "adaptive" else -math.sqrt(
            cfg.K * cfg.rho
        )
        if lam >= threshold:
            trace.records.append(
                TraceRecord(t, "terminate", g_cur, f_cur, tau, gnorm, lam, None)
            )
            trace.converged = True
            break

        flat_grad = np.concatenate([grad.d_mean.ravel(), [gt]])
        if float(flat_grad @ u) > 0.0:
            u = -u
        step = _curvature_step(ctx, cfg, mean, tau, u, g_cur, floor, k_hat)
        if step is None:
            trace.records.append(
                TraceRecord(t, "terminate", g_cur, f_cur, tau, gnorm, lam, None)
            )
            trace.converged = False
            break
        mean, tau, g_new, h_used, was_clamped = step
        k_hat = max(k_hat, 3.0 * math.sqrt(cfg.rho) / h_used)
        trace.records.append(
            TraceRecord(
                t, "curvature", g_cur, f_cur, params.variance, gnorm,
                lam, g_cur - g_new, was_clamped,
            )
        )
        trace.tau_was_clamped |= was_clamped
        g_cur = g_new
        params = SamplerParams(mean=mean, variance=tau)
    else:
        trace.converged = False

    trace.l_estimate = l_hat
    trace.k_estimate = k_hat
    trace.final_params = params
    return params.mean.copy(), trace


def _gradient_step(ctx, cfg, mean, tau, g_mean, g_tau, gnorm, g_cur, floor, nu_prev):
    """One gradient step; returns (mean, tau, g_new, nu, clamped, L_local)."""
    target = 0.5 * gnorm * gnorm

    def trial(nu):
        m2 = mean - nu * g_mean
        t2, clamped = _project_tau(tau - nu * g_tau, floor)
        g2 = g_value(SamplerParams(mean=m2, variance=t2), ctx)
        return m2, t2, g2, clamped

    if cfg.mode == "fixed-constants":
        nu = 1.0 / cfg.L
        m2, t2, g2, clamped = trial(nu)
        decrease = g_cur - g2
        required = nu * cfg.rho * cfg.rho / 2.0
        if decrease + _DECREASE_SLACK * max(1.0, abs(g_cur)) < required:
            raise ConstantMisestimateError(
                f"gradient step decreased g by {decrease:.3e} < {required:.3e}; "
                f"the supplied smoothness constant L={cfg.L} is too small"
            )
        return m2, t2, g2, nu, clamped, cfg.L

    nu = min(nu_prev * 2.0, _NU_MAX)
    while nu >= _NU_MIN:
        m2, t2, g2, clamped = trial(nu)
        decrease = g_cur - g2
        if decrease >= nu * target - _DECREASE_SLACK * max(1.0, abs(g_cur)):
            # local curvature along the segment, from the quadratic model
            denom = nu * nu * gnorm * gnorm
            l_loc = max(2.0 * (nu * gnorm * gnorm - decrease) / denom, 0.0) if denom > 0 else 0.0
            return m2, t2, g2, nu, clamped, l_loc
        nu *= 0.5
    return None


def _curvature_step(ctx, cfg, mean, tau, u, g_cur, floor, k_hat):
    """One negative-curvature step; returns (mean, tau, g_new, h, clamped)."""
    k, d = mean.shape
    u_mean = u[:-1].reshape(k, d)
    u_tau = u[-1]

    def trial(h):
        m2 = mean + h * u_mean
        t2, clamped = _project_tau(tau + h * u_tau, floor)
        g2 = g_value(SamplerParams(mean=m2, variance=t2), ctx)
        return m2, t2, g2, clamped

    if cfg.mode == "fixed-constants":
        h = 3.0 * math.sqrt(cfg.rho) / cfg.K
        m2, t2, g2, clamped = trial(h)
        decrease = g_cur - g2
        required = 3.0 * cfg.rho**1.5 / (4.0 * math.sqrt(cfg.K))
        if decrease + _DECREASE_SLACK * max(1.0, abs(g_cur)) < required:
            raise ConstantMisestimateError(
                f"curvature step decreased g by {decrease:.3e} < {required:.3e}; "
                f"the supplied Hessian-Lipschitz constant K={cfg.K} is too small"
            )
        return m2, t2, g2, h, clamped

    h = 3.0 * math.sqrt(cfg.rho) / k_hat
    while h >= _H_MIN:
        m2, t2, g2, clamped = trial(h)
        if g_cur - g2 > 0.0:
            return m2, t2, g2, h, clamped
        h *= 0.5
    return None


def _min_eig_step(params, ctx, cfg, restrict, iteration):
    """Minimum eigenpair, over the full space or the mean-only subspace."""
    dim = ctx.dim

    if restrict:

        def matvec(w):
            w2 = w.copy()
            w2[-1] = 0.0
            out = hessian_vec_product(params, ctx, w2)
            out[-1] = 0.0
            return out

    else:

        def matvec(w):
            return hessian_vec_product(params, ctx, w)

    seed = (cfg.seed * 1_000_003 + iteration) % (2**63)
    rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence([seed])))
    v0 = rng.standard_normal(dim)
    if restrict:
        v0[-1] = 0.0
    return _lanczos_min_eig(matvec, dim, cfg.eig_tol, _EIG_MATVEC_BUDGET, seed, v0=v0)


@dataclass(frozen=True)
class GridEntry:
    eps: float
    max_distortion: float
    converged: bool
    error: str | None = None


@dataclass(frozen=True)
class GridResult:
    best_eps: float
    best_max_distortion: float
    best_mean: np.ndarray
    entries: tuple[GridEntry, ...]


def grid_search(ctx_template: ObjectiveContext, cfg: DescentConfig,
                eps_grid) -> GridResult:
    """Run the descent once per threshold and keep the lowest-distortion matrix.

    A run that fails (raises, or exhausts its iteration budget) scores
    infinity; ties resolve to the earliest grid entry.
    """
    eps_grid = list(eps_grid)
    if not eps_grid:
        raise ParameterError("eps_grid must be nonempty")
    entries = []
    best = None
    for eps in eps_grid:
        ctx = dataclasses.replace(ctx_template, eps=float(eps))
        try:
            mean, trace = hessian_descent(ctx, cfg)
        except (ConvergenceError, ConstantMisestimateError) as exc:
            entries.append(GridEntry(float(eps), math.inf, False, str(exc)))
            continue
        if not trace.converged:
            entries.append(GridEntry(float(eps), math.inf, False, "iteration budget exhausted"))
            continue
        score = max_distortion(mean, ctx.data).max
        entries.append(GridEntry(float(eps), score, True))
        if best is None or score < best[1]:
            best = (float(eps), score, mean)
    if best is None:
        raise ConvergenceError("every grid cell failed", best=entries)
    return GridResult(
        best_eps=best[0],
        best_max_distortion=best[1],
        best_mean=best[2],
        entries=tuple(entries),
    )


_CALIBRATION_GRID = tuple(0.5 + 0.25 * i for i in range(23))  # 0.5, 0.75, ..., 6.0


def calibrate_epsilon_constant(n: int, k: int, grid=_CALIBRATION_GRID) -> float:
    """Smallest grid constant C whose threshold meets the 1/(3n) point budget.

    Uses the exact CDF at the zero-mean unit-variance sampler, so the search
    is deterministic.  Raises :class:`CalibrationError` when even the largest
    constant fails (the target dimension is too small for the dataset size).
    """
    if n < 2:
        raise ParameterError(f"need n >= 2, got {n}")
    if k < 1:
        raise ParameterError(f"need k >= 1, got {k}")
    target = 1.0 / (3.0 * n)
    zero = np.zeros(k)
    for c in grid:
        eps = jl_epsilon(n, k, c)
        if failure_prob_point(zero, 1.0, k, eps) < target:
            return float(c)
    raise CalibrationError(
        f"no constant on the grid reaches failure probability < 1/(3n) "
        f"for n={n}, k={k}; the target dimension is too small"
    )
