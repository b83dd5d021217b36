"""Command-line interface: simulation, datasets, training, search, plots.

Every subcommand resolves its parameters from built-in defaults, then an
optional ``--config`` key/value file, then explicit flags, and writes the
resolved values to a manifest file next to its outputs; re-running a
command from its manifest reproduces the outputs byte for byte.
"""

from __future__ import annotations

import argparse
import math
import os
import sys

import numpy as np

from . import data as datamod
from . import dynamics, loops, ml, model, search
from .entanglement import concurrence_series, write_concurrence_csv


def _manifest_path(out: str) -> str:
    if os.path.isdir(out) or out.endswith(os.sep):
        return os.path.join(out, "manifest.txt")
    base = os.path.dirname(out) or "."
    stem = os.path.splitext(os.path.basename(out))[0]
    return os.path.join(base, f"{stem}.manifest.txt")


def write_manifest(out: str, command: str, resolved: dict) -> str:
    path = _manifest_path(out)
    os.makedirs(os.path.dirname(path) or ".", exist_ok=True)
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"command = {command}\n")
        for key in sorted(resolved):
            value = resolved[key]
            if isinstance(value, float):
                fh.write(f"{key} = {value:.17g}\n")
            else:
                fh.write(f"{key} = {value}\n")
    return path


def _resolve(args, keys: dict) -> dict:
    """defaults <- config file <- command-line flags."""
    resolved = model.default_config()
    if args.config:
        resolved.update(model.read_config(args.config, extra_keys=keys))
    for key in keys:
        attr = key.replace("-", "_")
        if attr == "lambda":
            attr = "lam"
        value = getattr(args, attr, None)
        if value is not None:
            resolved[key] = value
    return resolved


# ---------------------------------------------------------------------------
# SVG line plots
# ---------------------------------------------------------------------------

_SVG_COLORS = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b")


def write_svg_lineplot(path: str, x: np.ndarray, ys: dict[str, np.ndarray],
                       x_label: str, title: str = "",
                       width: int = 720, height: int = 480) -> None:
    """Static SVG with one polyline per named series."""
    margin = 60
    finite = np.concatenate([np.asarray(v, dtype=float) for v in ys.values()])
    x = np.asarray(x, dtype=float)
    x_lo, x_hi = float(np.min(x)), float(np.max(x))
    y_lo, y_hi = float(np.min(finite)), float(np.max(finite))
    if x_hi == x_lo:
        x_hi = x_lo + 1.0
    if y_hi == y_lo:
        y_hi = y_lo + 1.0

    def sx(v):
        return margin + (v - x_lo) / (x_hi - x_lo) * (width - 2 * margin)

    def sy(v):
        return height - margin - (v - y_lo) / (y_hi - y_lo) * (height - 2 * margin)

    parts = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" '
             f'height="{height}" viewBox="0 0 {width} {height}">',
             f'<rect width="{width}" height="{height}" fill="white"/>',
             f'<line x1="{margin}" y1="{height - margin}" x2="{width - margin}" '
             f'y2="{height - margin}" stroke="black"/>',
             f'<line x1="{margin}" y1="{margin}" x2="{margin}" '
             f'y2="{height - margin}" stroke="black"/>']
    for i, (name, series) in enumerate(ys.items()):
        color = _SVG_COLORS[i % len(_SVG_COLORS)]
        pts = " ".join(f"{sx(xv):.2f},{sy(yv):.2f}"
                       for xv, yv in zip(x, np.asarray(series, dtype=float)))
        parts.append(f'<polyline points="{pts}" fill="none" stroke="{color}" '
                     f'stroke-width="1.5"/>')
        parts.append(f'<text x="{width - margin + 4}" y="{margin + 16 * i}" '
                     f'fill="{color}" font-size="12">{name}</text>')
    for frac in (0.0, 0.5, 1.0):
        xv = x_lo + frac * (x_hi - x_lo)
        yv = y_lo + frac * (y_hi - y_lo)
        parts.append(f'<text x="{sx(xv):.1f}" y="{height - margin + 16}" '
                     f'font-size="11" text-anchor="middle">{xv:.4g}</text>')
        parts.append(f'<text x="{margin - 6}" y="{sy(yv):.1f}" font-size="11" '
                     f'text-anchor="end">{yv:.4g}</text>')
    parts.append(f'<text x="{width / 2:.0f}" y="{height - 12}" font-size="12" '
                 f'text-anchor="middle">{x_label}</text>')
    if title:
        parts.append(f'<text x="{width / 2:.0f}" y="20" font-size="14" '
                     f'text-anchor="middle">{title}</text>')
    parts.append("</svg>")
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(parts) + "\n")


# ---------------------------------------------------------------------------
# Subcommands
# ---------------------------------------------------------------------------

def _integrator_cfg(resolved: dict, record_rho: bool = False) -> dynamics.IntegratorConfig:
    return dynamics.IntegratorConfig(steps_per_period=resolved["steps_per_period"],
                                     periods=resolved["periods"],
                                     record_rho=record_rho)


def cmd_simulate(args) -> int:
    keys = {"lambda": float, "phi": float, "theta": float, "c_c": float,
            "l_c": float, "periods": int, "steps_per_period": int,
            "trunc": int, "c_sigma": float, "l_self": float,
            "phi_offset": float, "drive_amp": float}
    resolved = _resolve(args, keys)
    resolved["coupled"] = bool(args.coupled)
    system = model.system_from_config(resolved, coupled=args.coupled)
    eta = resolved["phi"] % (2.0 * math.pi)
    init = model.InitialStateParams(theta=(resolved["theta"],) * system.n,
                                    eta=(eta,) * system.n)
    cfg = _integrator_cfg(resolved, record_rho=args.coupled)
    traj = dynamics.evolve(system, init, cfg)
    os.makedirs(args.out, exist_ok=True)
    dynamics.write_trajectory_csv(traj, os.path.join(args.out, "trajectory.csv"))
    for ell in range(system.n):
        name = "loops.csv" if ell == 0 else f"loops{ell + 1}.csv"
        metrics = loops.per_period_metrics(traj, ell)
        loops.write_loop_csv(metrics, os.path.join(args.out, name))
        target = loops.form_factor_target(traj, ell)
        print(f"memristor {ell + 1}: mean form factor {target:.6f}")
    if system.n == 2:
        series = concurrence_series(traj)
        write_concurrence_csv(series, os.path.join(args.out, "concurrence.csv"))
        print(f"peak concurrence {max(c for _, c in series):.6f}")
    write_manifest(args.out + os.sep, "simulate", resolved)
    return 0


def cmd_dataset(args) -> int:
    resolved = _resolve(args, {"periods": int, "steps_per_period": int})
    kind = "coupled" if args.coupled else "single"
    seed = args.seed if args.seed is not None else 0
    if args.grid:
        if kind == "single":
            raise datamod.DataError("grid sampling is defined for the coupled space")
        space = datamod.coupled_grid_space(levels=args.grid, seed=seed)
    elif kind == "single":
        space = datamod.single_space(seed=seed)
    else:
        space = datamod.coupled_space(seed=seed)
    cfg = dynamics.IntegratorConfig(steps_per_period=resolved["steps_per_period"],
                                    periods=resolved["periods"])
    ds = datamod.generate(space, args.n, kind, cfg=cfg,
                          workers=args.workers or 1, progress=True)
    datamod.write_csv(ds, args.out)
    print(f"wrote {ds.rows.shape[0]} rows to {args.out} "
          f"({ds.n_failed} failed rows excluded)")
    write_manifest(args.out, "dataset",
                   {**resolved, "kind": kind, "n": args.n, "grid": args.grid or 0,
                    "seed": seed, "workers": args.workers or 1, "out": args.out})
    return 0


def cmd_stats(args) -> int:
    ds = datamod.read_csv(args.data)
    summary = datamod.stats(ds)
    text = datamod.format_stats(summary)
    print(text)
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write("column,count,mean,std,min,q25,q50,q75,max\n")
            for name, q in summary.items():
                fh.write(f"{name},{q.count},{q.mean:.17g},{q.std:.17g},"
                         f"{q.min:.17g},{q.q25:.17g},{q.q50:.17g},"
                         f"{q.q75:.17g},{q.max:.17g}\n")
        write_manifest(args.out, "stats", {"data": args.data, "out": args.out})
    return 0


def cmd_train(args) -> int:
    ds = datamod.read_csv(args.data)
    seed = args.seed if args.seed is not None else 0
    regressor = ml.make_regressor(args.model, seed=seed)
    regressor.fit(ds.features(), ds.targets())
    pred = regressor.predict(ds.features())
    print(f"{args.model}: training R^2 = {ml.r2_score(ds.targets(), pred):.6f}")
    ml.save_model(regressor, args.out)
    write_manifest(args.out, "train",
                   {"data": args.data, "model": args.model, "seed": seed,
                    "out": args.out})
    return 0


def cmd_benchmark(args) -> int:
    ds = datamod.read_csv(args.data)
    seed = args.seed if args.seed is not None else 0
    board = ml.benchmark(ds.features(), ds.targets(), ml.SplitSpec(seed=seed))
    print(board.to_text())
    if args.out:
        board.to_csv(args.out)
        write_manifest(args.out, "benchmark",
                       {"data": args.data, "seed": seed, "out": args.out})
    return 0


def _surrogate_for(args, ds) -> ml.Regressor:
    if args.model_file:
        return ml.load_model(args.model_file)
    seed = args.seed if args.seed is not None else 0
    kind = args.model or "hist-gbdt"
    regressor = ml.make_regressor(kind, seed=seed)
    regressor.fit(ds.features(), ds.targets())
    return regressor


def cmd_optimize(args) -> int:
    ds = datamod.read_csv(args.data)
    surrogate = _surrogate_for(args, ds)
    seed = args.seed if args.seed is not None else 0
    bounds = search.SINGLE_BOUNDS if ds.kind == "single" else search.COUPLED_BOUNDS
    spec = search.SearchSpec(bounds=bounds, objective=args.objective,
                             verify=not args.no_verify, seed=seed)
    result = search.optimize(surrogate, spec, kind=ds.kind)
    names = ds.columns[:ds.n_features]
    print(f"objective: {args.objective}")
    for name, value in zip(names, result.best_features):
        print(f"  {name} = {value:.8g}")
    print(f"surrogate form factor: {result.surrogate_value:.6f}")
    if result.simulated_value is not None:
        print(f"simulated form factor: {result.simulated_value:.6f}")
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write("feature,value\n")
            for name, value in zip(names, result.best_features):
                fh.write(f"{name},{value:.17g}\n")
            fh.write(f"surrogate_value,{result.surrogate_value:.17g}\n")
            if result.simulated_value is not None:
                fh.write(f"simulated_value,{result.simulated_value:.17g}\n")
        write_manifest(args.out, "optimize",
                       {"data": args.data, "objective": args.objective,
                        "seed": seed, "out": args.out,
                        "verify": int(not args.no_verify)})
    return 0


def cmd_compare(args) -> int:
    ds = datamod.read_csv(args.data)
    if ds.kind != "coupled":
        raise search.SearchError("compare needs a coupled dataset")
    surrogate = _surrogate_for(args, ds)
    seed = args.seed if args.seed is not None else 0
    opt = search.optimize(surrogate,
                          search.SearchSpec(bounds=search.COUPLED_BOUNDS,
                                            objective="maximize", seed=seed),
                          kind="coupled")
    sub = search.optimize(surrogate,
                          search.SearchSpec(bounds=search.COUPLED_BOUNDS,
                                            objective="minimize", seed=seed),
                          kind="coupled")
    cfg = dynamics.IntegratorConfig(steps_per_period=args.steps_per_period or 500,
                                    periods=args.periods or 20, record_rho=True)
    report = search.compare(opt.best_features, sub.best_features, cfg)
    search.write_comparison_bundle(report, args.out)
    print(report.summary())
    write_manifest(args.out + os.sep, "compare",
                   {"data": args.data, "seed": seed, "out": args.out,
                    "periods": cfg.periods,
                    "steps_per_period": cfg.steps_per_period})
    return 0


def cmd_plot_data(args) -> int:
    with open(args.data, "r", encoding="utf-8") as fh:
        header = fh.readline().rstrip("\n").split(",")
        rows = [line.rstrip("\n").split(",") for line in fh if line.strip()]
    table = {name: np.array([float(r[i]) for r in rows])
             for i, name in enumerate(header)}
    if args.x not in table:
        raise datamod.DataError(f"no column {args.x!r} in {args.data}")
    y_names = args.y.split(",")
    missing = [n for n in y_names if n not in table]
    if missing:
        raise datamod.DataError(f"no column(s) {missing} in {args.data}")
    write_svg_lineplot(args.out, table[args.x],
                       {n: table[n] for n in y_names}, x_label=args.x,
                       title=os.path.basename(args.data))
    print(f"wrote {args.out}")
    write_manifest(args.out, "plot-data",
                   {"data": args.data, "x": args.x, "y": args.y, "out": args.out})
    return 0


# ---------------------------------------------------------------------------
# Parser
# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="qmemlab",
        description="Simulate driven superconducting quantum memristors, "
                    "build form-factor datasets, train surrogates, and search "
                    "for extreme-memristivity configurations.")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, out_default=None):
        p.add_argument("--config", help="key = value configuration file")
        p.add_argument("--seed", type=int, default=None)
        p.add_argument("--workers", type=int, default=None)
        p.add_argument("--trunc", type=int, default=None)
        p.add_argument("--periods", type=int, default=None)
        p.add_argument("--steps-per-period", type=int, default=None,
                       dest="steps_per_period")
        if out_default is not None:
            p.add_argument("--out", default=out_default)
        else:
            p.add_argument("--out", required=True)

    p = sub.add_parser("simulate", help="one configuration -> trajectory + loop CSVs")
    p.add_argument("--lambda", dest="lam", type=float, default=None)
    p.add_argument("--phi", type=float, default=None)
    p.add_argument("--theta", type=float, default=None)
    p.add_argument("--coupled", action="store_true")
    p.add_argument("--c12", dest="c_c", type=float, default=None)
    p.add_argument("--l12", dest="l_c", type=float, default=None)
    common(p, out_default="simulate_out")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("dataset", help="generate a parameter-sweep dataset CSV")
    group = p.add_mutually_exclusive_group(required=True)
    group.add_argument("--single", dest="coupled", action="store_false")
    group.add_argument("--coupled", dest="coupled", action="store_true")
    p.set_defaults(coupled=False)
    p.add_argument("--n", type=int, default=100)
    p.add_argument("--grid", type=int, default=0,
                   help="grid levels per feature (coupled only; overrides --n)")
    common(p)
    p.set_defaults(func=cmd_dataset)

    p = sub.add_parser("stats", help="quartile description of a dataset")
    p.add_argument("--data", required=True)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_stats, config=None)

    p = sub.add_parser("train", help="fit one surrogate model and persist it")
    p.add_argument("--data", required=True)
    p.add_argument("--model", default="hist-gbdt", choices=ml.REGRESSOR_KINDS)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_train, config=None)

    p = sub.add_parser("benchmark", help="fit every model kind, emit a leaderboard")
    p.add_argument("--data", required=True)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_benchmark, config=None)

    p = sub.add_parser("optimize", help="search the surrogate for extreme form factor")
    p.add_argument("--data", required=True)
    p.add_argument("--model", default=None, choices=ml.REGRESSOR_KINDS)
    p.add_argument("--model-file", default=None)
    p.add_argument("--objective", default="maximize",
                   choices=("maximize", "minimize"))
    p.add_argument("--no-verify", action="store_true")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_optimize, config=None)

    p = sub.add_parser("compare", help="optimal vs sub-optimal comparison bundle")
    p.add_argument("--data", required=True)
    p.add_argument("--model", default=None, choices=ml.REGRESSOR_KINDS)
    p.add_argument("--model-file", default=None)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--periods", type=int, default=None)
    p.add_argument("--steps-per-period", type=int, default=None,
                   dest="steps_per_period")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_compare, config=None)

    p = sub.add_parser("plot-data", help="SVG line plot from any produced CSV")
    p.add_argument("--data", required=True)
    p.add_argument("--x", required=True)
    p.add_argument("--y", required=True, help="comma-separated column names")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_plot_data, config=None)

    return parser


def dispatch(argv: list[str]) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (model.ConfigError, datamod.DataError, ml.MLError,
            search.SearchError, dynamics.IntegrationDivergedError,
            dynamics.InvalidStateError, loops.LoopError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


def main() -> None:
    sys.exit(dispatch(sys.argv[1:]))


if __name__ == "__main__":
    main()
