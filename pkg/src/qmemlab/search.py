"""Surrogate-driven search for extreme form-factor configurations.

Tree surrogates are piecewise constant, so the search is derivative-free:
a seeded uniform multistart over the feature box, followed by cyclic
per-coordinate golden-section refinement of the best starts. The returned
candidate maximizes (or minimizes) the surrogate over everything evaluated;
with ``verify`` on, the candidate is re-simulated and the true mean
per-period form factor reported alongside the surrogate's prediction.

``compare`` reruns two configurations side by side for a longer window and
collects the per-period form factor and the concurrence series of both.
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass, field

import numpy as np

from . import entanglement, loops
from .data import system_for_row
from .dynamics import IntegratorConfig, Trajectory, evolve
from .ml import Regressor
from .rng import SplitMix64

GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0

# Search boxes mirror the dataset ranges; lambda starts just above zero
# because the dissipation-free point is a degenerate zero-current loop.
SINGLE_BOUNDS = ((0.0, 2.0 * math.pi), (1e-3, 100.0))
COUPLED_BOUNDS = ((0.0, 2e-12), (0.0, 2e-8), (0.0, 2.0 * math.pi), (1e-3, 100.0))


class SearchError(ValueError):
    pass


@dataclass(frozen=True)
class SearchSpec:
    bounds: tuple[tuple[float, float], ...]
    objective: str = "maximize"
    n_starts: int = 512
    refine_iters: int = 100
    n_refine_from: int = 8
    verify: bool = True
    seed: int = 0

    def __post_init__(self):
        if self.objective not in ("maximize", "minimize"):
            raise SearchError(f"unknown objective {self.objective!r}")
        if any(lo > hi for lo, hi in self.bounds):
            raise SearchError("invalid bounds")
        if self.n_starts < 1 or self.refine_iters < 0:
            raise SearchError("need at least one start")


@dataclass
class SearchResult:
    best_features: np.ndarray
    surrogate_value: float
    objective: str
    simulated_value: float | None = None
    trace: list = field(default_factory=list)

    @property
    def n_evaluations(self) -> int:
        return len(self.trace)


def _line_refine(predict, point: np.ndarray, coord: int, lo: float, hi: float,
                 iters: int, sign: float, trace: list):
    """Golden-section refinement of one coordinate on the surrogate."""
    a, b = lo, hi
    x1 = b - GOLDEN * (b - a)
    x2 = a + GOLDEN * (b - a)

    def value_at(v: float) -> float:
        cand = point.copy()
        cand[coord] = v
        val = float(predict(cand[None, :])[0])
        trace.append((cand.copy(), val))
        return sign * val

    f1 = value_at(x1)
    f2 = value_at(x2)
    for _ in range(iters):
        if b - a <= 1e-12 * max(1.0, abs(hi - lo)):
            break
        if f1 >= f2:
            b, x2, f2 = x2, x1, f1
            x1 = b - GOLDEN * (b - a)
            f1 = value_at(x1)
        else:
            a, x1, f1 = x1, x2, f2
            x2 = a + GOLDEN * (b - a)
            f2 = value_at(x2)
    best = x1 if f1 >= f2 else x2
    return best


def optimize(model: Regressor, spec: SearchSpec,
             kind: str | None = None,
             cfg: IntegratorConfig | None = None) -> SearchResult:
    """Multistart plus golden-section coordinate refinement on a surrogate.

    ``kind`` ("single" or "coupled") selects the simulation used for
    verification; it can be omitted when ``spec.verify`` is off. The
    returned candidate carries the best surrogate value over every
    evaluation made, so the search trace is monotone by construction.
    """
    sign = 1.0 if spec.objective == "maximize" else -1.0
    rng = SplitMix64(spec.seed)
    d = len(spec.bounds)
    starts = np.empty((spec.n_starts, d))
    for i in range(spec.n_starts):
        for j, (lo, hi) in enumerate(spec.bounds):
            starts[i, j] = rng.uniform(lo, hi)
    values = model.predict(starts)
    trace = [(starts[i].copy(), float(values[i])) for i in range(spec.n_starts)]
    order = np.argsort(-sign * values, kind="stable")

    best_point = starts[order[0]].copy()
    best_value = sign * float(values[order[0]])
    for idx in order[:spec.n_refine_from]:
        point = starts[idx].copy()
        budget = spec.refine_iters
        while budget > 0:
            for coord in range(d):
                iters = min(20, budget)
                lo, hi = spec.bounds[coord]
                point[coord] = _line_refine(model.predict, point, coord, lo, hi,
                                            iters, sign, trace)
                budget -= iters
                if budget <= 0:
                    break
        val = sign * float(model.predict(point[None, :])[0])
        if val > best_value:
            best_point, best_value = point.copy(), val
    # the trace may contain a better point than any refined endpoint
    for cand, val in trace:
        if sign * val > best_value:
            best_point, best_value = cand.copy(), sign * val

    result = SearchResult(best_features=best_point,
                          surrogate_value=sign * best_value,
                          objective=spec.objective, trace=trace)
    if spec.verify:
        if kind is None:
            raise SearchError("verification needs the dataset kind")
        result.simulated_value = simulate_form_factor(kind, best_point, cfg)
    return result


def simulate_form_factor(kind: str, features,
                         cfg: IntegratorConfig | None = None) -> float:
    system, init = system_for_row(kind, np.asarray(features, dtype=float))
    traj = evolve(system, init, cfg or IntegratorConfig(steps_per_period=400,
                                                        periods=10))
    return loops.form_factor_target(traj, 0)


@dataclass
class ComparisonReport:
    optimal_features: np.ndarray
    suboptimal_features: np.ndarray
    optimal_trajectory: Trajectory
    suboptimal_trajectory: Trajectory
    optimal_form_factors: list[float]
    suboptimal_form_factors: list[float]
    optimal_concurrence: list[tuple[float, float]]
    suboptimal_concurrence: list[tuple[float, float]]

    def summary(self) -> str:
        fo = np.asarray(self.optimal_form_factors)
        fs = np.asarray(self.suboptimal_form_factors)
        co = np.asarray([c for _, c in self.optimal_concurrence])
        cs = np.asarray([c for _, c in self.suboptimal_concurrence])
        n_last = max(1, len(co) // 4)
        lines = [
            "optimal features:    " + " ".join(f"{v:.6g}" for v in self.optimal_features),
            "suboptimal features: " + " ".join(f"{v:.6g}" for v in self.suboptimal_features),
            f"mean form factor: optimal {fo.mean():.6f}, suboptimal {fs.mean():.6f}",
            f"periods where optimal exceeds suboptimal: {int(np.sum(fo > fs))}/{len(fo)}",
            f"peak concurrence: optimal {co.max():.6f}, suboptimal {cs.max():.6f}",
            f"late-window mean concurrence: optimal {co[-n_last:].mean():.6f}, "
            f"suboptimal {cs[-n_last:].mean():.6f}",
        ]
        return "\n".join(lines)


def compare(opt_features, sub_features,
            cfg: IntegratorConfig | None = None) -> ComparisonReport:
    """Simulate two coupled configurations and collect figure-ready series.

    Runs 20 drive periods by default with state recording on, computes the
    per-period form factor of the first memristor and the concurrence
    series for both configurations.
    """
    cfg = cfg or IntegratorConfig(steps_per_period=500, periods=20, record_rho=True)
    if not cfg.record_rho:
        raise SearchError("comparison needs record_rho=True for concurrence")
    out = {}
    for label, features in (("opt", opt_features), ("sub", sub_features)):
        system, init = system_for_row("coupled", np.asarray(features, dtype=float))
        traj = evolve(system, init, cfg)
        metrics = loops.per_period_metrics(traj, 0)
        series = entanglement.concurrence_series(traj)
        out[label] = (traj, [m.form_factor for m in metrics], series)
    return ComparisonReport(
        optimal_features=np.asarray(opt_features, dtype=float),
        suboptimal_features=np.asarray(sub_features, dtype=float),
        optimal_trajectory=out["opt"][0],
        suboptimal_trajectory=out["sub"][0],
        optimal_form_factors=out["opt"][1],
        suboptimal_form_factors=out["sub"][1],
        optimal_concurrence=out["opt"][2],
        suboptimal_concurrence=out["sub"][2],
    )


def write_comparison_bundle(report: ComparisonReport, outdir: str) -> None:
    """optimal.csv, suboptimal.csv, formfactor_compare.csv,
    concurrence_compare.csv and summary.txt in one directory."""
    from .dynamics import write_trajectory_csv

    os.makedirs(outdir, exist_ok=True)
    write_trajectory_csv(report.optimal_trajectory, os.path.join(outdir, "optimal.csv"))
    write_trajectory_csv(report.suboptimal_trajectory,
                         os.path.join(outdir, "suboptimal.csv"))
    with open(os.path.join(outdir, "formfactor_compare.csv"), "w",
              encoding="utf-8", newline="") as fh:
        fh.write("period,form_factor_optimal,form_factor_suboptimal\n")
        for j, (fo, fs) in enumerate(zip(report.optimal_form_factors,
                                         report.suboptimal_form_factors)):
            fh.write(f"{j},{fo:.17g},{fs:.17g}\n")
    with open(os.path.join(outdir, "concurrence_compare.csv"), "w",
              encoding="utf-8", newline="") as fh:
        fh.write("t,concurrence_optimal,concurrence_suboptimal\n")
        for (t, co), (_, cs) in zip(report.optimal_concurrence,
                                    report.suboptimal_concurrence):
            fh.write(f"{t:.17g},{co:.17g},{cs:.17g}\n")
    with open(os.path.join(outdir, "summary.txt"), "w", encoding="utf-8") as fh:
        fh.write(report.summary() + "\n")
