"""Command-line entry points for every experiment.

Subcommands: gen-data, optimize, mc, baseline, counterexample, grid-search.
Each accepts ``--config FILE`` with a JSON parameter bag (its optional
"command" key must match the subcommand); explicit flags override config
values.  ``jlopt run --config FILE`` dispatches on the config's "command"
key.  Exit codes: 0 success, 2 validation error, 3 numerical
non-convergence or divergence, 4 I/O error.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import time
from pathlib import Path

from . import io as jio
from .core import baseline_gaussian_trials, jl_epsilon, make_unit_dataset, max_distortion
from .descent import DescentConfig, calibrate_epsilon_constant, grid_search, hessian_descent
from .errors import (
    CalibrationError,
    ConstantMisestimateError,
    ConvergenceError,
    DivergenceError,
    ParameterError,
)
from .hard_instances import build_bad_instance, instance_distortion, norm_ratio_distortion, verify_local_min
from .mc_training import McConfig, run_mc_training
from .objective import ObjectiveContext
from .plotting import render_two_panel_svg

_EXIT_OK = 0
_EXIT_VALIDATION = 2
_EXIT_NUMERICAL = 3
_EXIT_IO = 4


def _default_threads() -> int:
    raw = os.environ.get("JLOPT_THREADS", "1")
    try:
        return max(1, int(raw))
    except ValueError:
        raise ParameterError(f"JLOPT_THREADS must be an integer, got {raw!r}")


def _load_config(path) -> dict:
    with open(path, "r", encoding="utf-8") as fh:
        cfg = json.load(fh)
    if not isinstance(cfg, dict):
        raise ParameterError("config file must contain a JSON object")
    return cfg


def _merged(args: argparse.Namespace, command: str) -> dict:
    """Config values fill flags the user left unset; flags win."""
    known = {k for k in vars(args) if k not in ("config", "func", "command")}
    merged = {}
    if getattr(args, "config", None):
        cfg = _load_config(args.config)
        cfg_cmd = cfg.pop("command", None)
        if cfg_cmd is not None and cfg_cmd != command:
            raise ParameterError(
                f"config file is for command {cfg_cmd!r}, invoked {command!r}"
            )
        unknown = set(cfg) - known
        if unknown:
            raise ParameterError(
                f"unknown config keys for {command!r}: {sorted(unknown)}"
            )
        merged.update(cfg)
    for key in known:
        value = getattr(args, key)
        if value is not None:
            merged[key] = value
    return merged


def _get(opts: dict, key: str, default=None, required: bool = False):
    value = opts.get(key, default)
    if required and value is None:
        raise ParameterError(f"missing required option {key.replace('_', '-')!r}")
    return value


def _read_dataset(opts: dict):
    path = _get(opts, "dataset", required=True)
    if not Path(path).is_file():
        raise FileNotFoundError(f"dataset file not found: {path}")
    return jio.read_dataset(path)


def _out_dir(opts: dict) -> Path:
    out = Path(_get(opts, "out_dir", "."))
    out.mkdir(parents=True, exist_ok=True)
    return out


def cmd_gen_data(opts: dict) -> int:
    n = int(_get(opts, "n", required=True))
    d = int(_get(opts, "d", required=True))
    seed = int(_get(opts, "seed", 0))
    out = _get(opts, "out", required=True)
    data = make_unit_dataset(n, d, seed)
    jio.write_dataset(out, data)
    print(f"n={data.n} d={data.d} sha256={jio.file_checksum(out)}")
    return _EXIT_OK


def _descent_config(opts: dict) -> DescentConfig:
    return DescentConfig(
        rho=float(_get(opts, "rho", 1e-4)),
        L=float(_get(opts, "smoothness", 1.0)),
        K=float(_get(opts, "hess_lipschitz", 1.0)),
        mode=str(_get(opts, "mode", "adaptive")),
        max_iters=int(_get(opts, "max_iters", 50_000)),
        eig_tol=float(_get(opts, "eig_tol", 1e-6)),
        seed=int(_get(opts, "seed", 0)),
    )


def cmd_optimize(opts: dict) -> int:
    data = _read_dataset(opts)
    k = int(_get(opts, "k", required=True))
    sigma_floor = float(_get(opts, "sigma_floor", 1e-8))
    eps = _get(opts, "eps")
    jl_constant = _get(opts, "jl_const")
    if eps is not None and jl_constant is not None:
        raise ParameterError("give either --eps or --jl-const, not both")
    if eps is None:
        if jl_constant is None:
            jl_constant = calibrate_epsilon_constant(data.n, k)
        eps = jl_epsilon(data.n, k, float(jl_constant))
    ctx = ObjectiveContext(data=data, k=k, eps=float(eps), sigma_floor=sigma_floor)
    cfg = _descent_config(opts)
    out = _out_dir(opts)

    start = time.perf_counter()
    mean, trace = hessian_descent(ctx, cfg)
    wall = time.perf_counter() - start

    jio.write_matrix(out / "optimize_matrix.csv", mean)
    jio.write_trace_csv(out / "optimize_trace.csv", trace)
    last = trace.records[-1]
    dist = max_distortion(mean, data).max
    summary = {
        "n": data.n,
        "d": data.d,
        "k": k,
        "eps": float(eps),
        "jl_constant": jl_constant,
        "rho": cfg.rho,
        "mode": cfg.mode,
        "seed": cfg.seed,
        "iterations": len(trace.records),
        "converged": trace.converged,
        "tau_clamped": trace.tau_was_clamped,
        "final_g": last.g,
        "final_f": last.f,
        "final_sigma2": last.sigma2,
        "final_grad_norm": last.grad_norm,
        "max_distortion": dist,
        "l_estimate": trace.l_estimate,
        "k_estimate": trace.k_estimate,
        "wall_time_seconds": wall,
    }
    jio.dump_json(summary, out / "optimize_summary.json")
    print(
        f"converged={trace.converged} iterations={len(trace.records)} "
        f"sigma2={last.sigma2:.3e} max_distortion={dist:.6f} eps={float(eps):.6f}"
    )
    return _EXIT_OK if trace.converged else _EXIT_NUMERICAL


def cmd_mc(opts: dict) -> int:
    data = _read_dataset(opts)
    k = int(_get(opts, "k", required=True))
    cfg = McConfig(
        iters=int(_get(opts, "iters", 2000)),
        batch=int(_get(opts, "batch", 20)),
        step_size=float(_get(opts, "step_size", 0.01)),
        seed=int(_get(opts, "seed", 0)),
        log_every=int(_get(opts, "log_every", 1)),
    )
    out = _out_dir(opts)
    svg = _get(opts, "svg")
    try:
        params, traj = run_mc_training(data, k, cfg)
    except DivergenceError as exc:
        if exc.trajectory is not None:
            jio.write_trajectory_csv(out / "mc_trajectory.csv", exc.trajectory)
        raise
    jio.write_matrix(out / "mc_matrix.csv", params.mean)
    jio.write_trajectory_csv(out / "mc_trajectory.csv", traj)
    if svg:
        iters = traj.column("iter")
        render_two_panel_svg(
            svg,
            "distortion",
            [
                ("sampled", iters, traj.column("sampled_distortion")),
                ("mean matrix", iters, traj.column("mean_matrix_distortion")),
            ],
            "variance",
            [("sigma^2", iters, traj.column("sigma2"))],
        )
    final = traj.rows[-1]
    print(
        f"iters={cfg.iters} final_mean_distortion={final.mean_matrix_distortion:.6f} "
        f"final_sigma2={final.sigma2:.6f}"
    )
    return _EXIT_OK


def cmd_baseline(opts: dict) -> int:
    data = _read_dataset(opts)
    k = int(_get(opts, "k", required=True))
    trials = int(_get(opts, "trials", 1000))
    seed = int(_get(opts, "seed", 0))
    workers = int(_get(opts, "threads", _default_threads()))
    summary = baseline_gaussian_trials(data, k, trials, seed, workers=workers)
    out = _get(opts, "out", required=True)
    jio.dump_json(
        {
            "n": data.n,
            "d": data.d,
            "k": k,
            "trials": trials,
            "seed": seed,
            "avg_max_distortion": summary.avg_max_distortion,
            "min_max_distortion": summary.min_max_distortion,
        },
        out,
    )
    print(
        f"trials={trials} avg_max_distortion={summary.avg_max_distortion:.6f} "
        f"min_max_distortion={summary.min_max_distortion:.6f}"
    )
    return _EXIT_OK


def cmd_counterexample(opts: dict) -> int:
    k_list = _get(opts, "k_list", required=True)
    if isinstance(k_list, str):
        k_list = [int(v) for v in k_list.split(",") if v.strip()]
    radius = float(_get(opts, "radius", 1e-3))
    trials = int(_get(opts, "trials", 10_000))
    seed = int(_get(opts, "seed", 0))
    workers = int(_get(opts, "threads", _default_threads()))
    out = _get(opts, "out", required=True)
    reports = []
    for k in k_list:
        inst = build_bad_instance(int(k))
        rep = verify_local_min(inst, radius, trials, seed, workers=workers)
        entry = rep.to_json_dict()
        entry["n_points"] = inst.points.shape[0]
        entry["distortion"] = instance_distortion(inst, inst.a_star)
        entry["ratio_distortion"] = norm_ratio_distortion(inst, inst.a_star)
        reports.append(entry)
        print(
            f"k={k} points={entry['n_points']} all_worse={rep.all_worse} "
            f"min_margin={rep.min_margin:.3e}"
        )
    jio.dump_json({"radius": radius, "trials": trials, "seed": seed, "reports": reports}, out)
    return _EXIT_OK


def cmd_grid_search(opts: dict) -> int:
    data = _read_dataset(opts)
    k = int(_get(opts, "k", required=True))
    grid_raw = _get(opts, "eps_grid", required=True)
    if isinstance(grid_raw, str):
        grid = [float(v) for v in grid_raw.split(",") if v.strip()]
    else:
        grid = [float(v) for v in grid_raw]
    if not grid:
        raise ParameterError("eps-grid must be nonempty")
    sigma_floor = float(_get(opts, "sigma_floor", 1e-8))
    ctx = ObjectiveContext(data=data, k=k, eps=grid[0], sigma_floor=sigma_floor)
    cfg = _descent_config(opts)
    out = _out_dir(opts)
    result = grid_search(ctx, cfg, grid)
    jio.write_matrix(out / "grid_best_matrix.csv", result.best_mean)
    jio.dump_json(
        {
            "n": data.n,
            "d": data.d,
            "k": k,
            "grid": [
                {
                    "eps": e.eps,
                    "max_distortion": e.max_distortion,
                    "converged": e.converged,
                    "error": e.error,
                }
                for e in result.entries
            ],
            "best_eps": result.best_eps,
            "best_max_distortion": result.best_max_distortion,
        },
        out / "grid_summary.json",
    )
    print(f"best_eps={result.best_eps:.6f} best_max_distortion={result.best_max_distortion:.6f}")
    return _EXIT_OK


def _add_common(p: argparse.ArgumentParser):
    p.add_argument("--config", help="JSON config file; flags override its values")
    p.add_argument("--seed", type=int, help="master seed (default 0)")


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="jlopt",
        description="Learn deterministic low-distortion projections by optimization.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen-data", help="generate a unit-norm dataset CSV")
    _add_common(p)
    p.add_argument("--n", type=int, help="number of points")
    p.add_argument("--d", type=int, help="ambient dimension")
    p.add_argument("--out", help="output dataset CSV path")
    p.set_defaults(func=cmd_gen_data)

    p = sub.add_parser("optimize", help="run second-order descent on the exact objective")
    _add_common(p)
    p.add_argument("--dataset", help="input dataset CSV")
    p.add_argument("--k", type=int, help="target dimension")
    p.add_argument("--eps", type=float, help="distortion threshold (default: calibrated)")
    p.add_argument("--jl-const", dest="jl_const", type=float,
                   help="threshold constant C in C*sqrt(ln n / k), instead of calibration")
    p.add_argument("--rho", type=float, help="stationarity tolerance (default 1e-4)")
    p.add_argument("--sigma-floor", dest="sigma_floor", type=float,
                   help="variance floor (default 1e-8)")
    p.add_argument("--smoothness", type=float, help="L constant for fixed-constants mode")
    p.add_argument("--hess-lipschitz", dest="hess_lipschitz", type=float,
                   help="K constant for fixed-constants mode")
    p.add_argument("--mode", choices=["adaptive", "fixed-constants"], help="step-size mode")
    p.add_argument("--max-iters", dest="max_iters", type=int, help="iteration cap")
    p.add_argument("--eig-tol", dest="eig_tol", type=float, help="eigensolver tolerance")
    p.add_argument("--out-dir", dest="out_dir", help="artifact directory (default .)")
    p.set_defaults(func=cmd_optimize)

    p = sub.add_parser("mc", help="run the stochastic proxy trainer")
    _add_common(p)
    p.add_argument("--dataset", help="input dataset CSV")
    p.add_argument("--k", type=int, help="target dimension")
    p.add_argument("--iters", type=int, help="iterations (default 2000)")
    p.add_argument("--batch", type=int, help="samples per step (default 20)")
    p.add_argument("--step-size", dest="step_size", type=float, help="step size (default 0.01)")
    p.add_argument("--log-every", dest="log_every", type=int, help="logging stride (default 1)")
    p.add_argument("--svg", help="also write a two-panel SVG plot to this path")
    p.add_argument("--out-dir", dest="out_dir", help="artifact directory (default .)")
    p.set_defaults(func=cmd_mc)

    p = sub.add_parser("baseline", help="summarize random standard-Gaussian draws")
    _add_common(p)
    p.add_argument("--dataset", help="input dataset CSV")
    p.add_argument("--k", type=int, help="target dimension")
    p.add_argument("--trials", type=int, help="number of draws (default 1000)")
    p.add_argument("--threads", type=int, help="worker-count hint (default $JLOPT_THREADS or 1)")
    p.add_argument("--out", help="summary JSON path")
    p.set_defaults(func=cmd_baseline)

    p = sub.add_parser("counterexample", help="verify the bad-local-minimum instances")
    _add_common(p)
    p.add_argument("--k-list", dest="k_list", help="comma-separated block dimensions")
    p.add_argument("--radius", type=float, help="largest perturbation radius (default 1e-3)")
    p.add_argument("--trials", type=int, help="random perturbations per radius (default 10000)")
    p.add_argument("--threads", type=int, help="worker-count hint (default $JLOPT_THREADS or 1)")
    p.add_argument("--out", help="report JSON path")
    p.set_defaults(func=cmd_counterexample)

    p = sub.add_parser("grid-search", help="descend once per threshold, keep the best matrix")
    _add_common(p)
    p.add_argument("--dataset", help="input dataset CSV")
    p.add_argument("--k", type=int, help="target dimension")
    p.add_argument("--eps-grid", dest="eps_grid", help="comma-separated thresholds")
    p.add_argument("--rho", type=float, help="stationarity tolerance (default 1e-4)")
    p.add_argument("--sigma-floor", dest="sigma_floor", type=float,
                   help="variance floor (default 1e-8)")
    p.add_argument("--smoothness", type=float, help="L constant for fixed-constants mode")
    p.add_argument("--hess-lipschitz", dest="hess_lipschitz", type=float,
                   help="K constant for fixed-constants mode")
    p.add_argument("--mode", choices=["adaptive", "fixed-constants"], help="step-size mode")
    p.add_argument("--max-iters", dest="max_iters", type=int, help="per-cell iteration cap")
    p.add_argument("--eig-tol", dest="eig_tol", type=float, help="eigensolver tolerance")
    p.add_argument("--out-dir", dest="out_dir", help="artifact directory (default .)")
    p.set_defaults(func=cmd_grid_search)

    return parser


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    if argv and argv[0] == "run":
        # dispatch on the config file's "command" key
        run_parser = argparse.ArgumentParser(prog="jlopt run")
        run_parser.add_argument("--config", required=True)
        ns, extra = run_parser.parse_known_args(argv[1:])
        try:
            command = _load_config(ns.config).get("command")
        except (OSError, json.JSONDecodeError) as exc:
            print(f"error: {exc}", file=sys.stderr)
            return _EXIT_IO
        if not command:
            print("error: config file has no 'command' key", file=sys.stderr)
            return _EXIT_VALIDATION
        argv = [command, "--config", ns.config, *extra]

    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        opts = _merged(args, args.command)
        return args.func(opts)
    except (ParameterError, CalibrationError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return _EXIT_VALIDATION
    except (ConvergenceError, ConstantMisestimateError, DivergenceError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return _EXIT_NUMERICAL
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return _EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
