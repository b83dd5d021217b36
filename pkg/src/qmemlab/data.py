"""Seeded parameter sampling, dataset generation, CSV persistence, stats.

Two dataset schemas exist. The single-memristor one sweeps the initial
phase ``phi`` and the spectral-density amplitude ``lambda`` with columns

    phi,lambda,form_factor

and the coupled one adds the coupling capacitance and inductance,

    c12,l12,phi,lambda,form_factor,form_factor_2

where both memristors share phi and lambda (they are identical, so both
form-factor columns carry the same value). The polar angle theta is fixed
to pi/2 throughout: that choice maximizes the form factor. All floats are
written with 17 significant digits, so write/read round-trips are exact.
"""

from __future__ import annotations

import math
import sys
from dataclasses import dataclass

import numpy as np

from . import loops
from .dynamics import IntegrationDivergedError, IntegratorConfig, evolve
from .model import (ConfigError, InitialStateParams, QMSystem, build_system,
                    coupled_circuit, single_circuit)
from .rng import SplitMix64

SINGLE_COLUMNS = ("phi", "lambda", "form_factor")
COUPLED_COLUMNS = ("c12", "l12", "phi", "lambda", "form_factor", "form_factor_2")

# Feature ranges swept by the datasets.
PHI_RANGE = (0.0, 2.0 * math.pi)  # [0, 2*pi)
LAMBDA_RANGE = (0.0, 100.0)  # (0, 100]: lambda = 0 is the degenerate zero-current case
C12_RANGE = (0.0, 2e-12)  # F
L12_RANGE = (0.0, 2e-8)  # H; 0 means "no inductive coupling branch"

DATASET_INTEGRATOR = IntegratorConfig(steps_per_period=400, periods=10)


class DataError(ValueError):
    """Raised for malformed dataset files or invalid sampling requests."""


@dataclass(frozen=True)
class FeatureSpec:
    """One swept feature: uniform-random within [lo, hi) or a level grid.

    ``open_low`` draws from (lo, hi] instead, used for lambda where the
    lower endpoint is degenerate. Grid mode includes both endpoints.
    """

    name: str
    lo: float
    hi: float
    mode: str = "random"  # "random" | "grid"
    levels: int = 0
    open_low: bool = False

    def __post_init__(self):
        if self.lo > self.hi:
            raise DataError(f"{self.name}: lo > hi")
        if self.mode not in ("random", "grid"):
            raise DataError(f"{self.name}: unknown mode {self.mode!r}")
        if self.mode == "grid" and self.levels < 2:
            raise DataError(f"{self.name}: grid needs >= 2 levels")

    def grid_values(self) -> np.ndarray:
        return np.linspace(self.lo, self.hi, self.levels)


@dataclass(frozen=True)
class ParamSpace:
    features: tuple[FeatureSpec, ...]
    seed: int = 0

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(f.name for f in self.features)


def single_space(seed: int = 0) -> ParamSpace:
    return ParamSpace(features=(
        FeatureSpec("phi", *PHI_RANGE),
        FeatureSpec("lambda", *LAMBDA_RANGE, open_low=True),
    ), seed=seed)


def coupled_space(seed: int = 0) -> ParamSpace:
    return ParamSpace(features=(
        FeatureSpec("c12", *C12_RANGE),
        FeatureSpec("l12", *L12_RANGE),
        FeatureSpec("phi", *PHI_RANGE),
        FeatureSpec("lambda", *LAMBDA_RANGE, open_low=True),
    ), seed=seed)


def coupled_grid_space(levels: int | tuple[int, int, int, int] = 10,
                       seed: int = 0) -> ParamSpace:
    """Full Cartesian grid; zero coupling values are on the grid.

    ``levels`` is a single count for all features or one count per feature
    in (c12, l12, phi, lambda) order. lambda starts at 0.1 rather than 0
    because the zero-dissipation row is degenerate (no current, form factor
    0 by convention).
    """
    if isinstance(levels, int):
        levels = (levels,) * 4
    return ParamSpace(features=(
        FeatureSpec("c12", *C12_RANGE, mode="grid", levels=levels[0]),
        FeatureSpec("l12", *L12_RANGE, mode="grid", levels=levels[1]),
        FeatureSpec("phi", *PHI_RANGE, mode="grid", levels=levels[2]),
        FeatureSpec("lambda", 0.1, LAMBDA_RANGE[1], mode="grid", levels=levels[3]),
    ), seed=seed)


def sample(space: ParamSpace, n: int) -> np.ndarray:
    """Draw feature rows; deterministic under (seed, n, space).

    If any feature is in grid mode the output is the full Cartesian product
    over the grid features (``n`` is ignored) with random features drawn
    once per product row, in row-major order so the first row holds every
    grid feature's minimum.
    """
    if n < 1:
        raise DataError("need n >= 1 samples")
    rng = SplitMix64(space.seed)
    grids = [f for f in space.features if f.mode == "grid"]
    if not grids:
        rows = np.empty((n, len(space.features)))
        for i in range(n):
            for j, f in enumerate(space.features):
                rows[i, j] = (rng.uniform_open_low(f.lo, f.hi) if f.open_low
                              else rng.uniform(f.lo, f.hi))
        return rows
    axes = [f.grid_values() for f in grids]
    mesh = np.meshgrid(*axes, indexing="ij")
    count = mesh[0].size
    rows = np.empty((count, len(space.features)))
    gi = 0
    for j, f in enumerate(space.features):
        if f.mode == "grid":
            rows[:, j] = mesh[gi].ravel()
            gi += 1
    for i in range(count):
        for j, f in enumerate(space.features):
            if f.mode == "random":
                rows[i, j] = (rng.uniform_open_low(f.lo, f.hi) if f.open_low
                              else rng.uniform(f.lo, f.hi))
    return rows


@dataclass
class Dataset:
    kind: str  # "single" | "coupled"
    columns: tuple[str, ...]
    rows: np.ndarray  # (m, len(columns))
    n_failed: int = 0

    def __post_init__(self):
        expected = SINGLE_COLUMNS if self.kind == "single" else COUPLED_COLUMNS
        if self.kind not in ("single", "coupled"):
            raise DataError(f"unknown dataset kind {self.kind!r}")
        if self.columns != expected:
            raise DataError(f"columns {self.columns} do not match kind {self.kind!r}")

    @property
    def n_features(self) -> int:
        return 2 if self.kind == "single" else 4

    def features(self) -> np.ndarray:
        return self.rows[:, :self.n_features]

    def targets(self) -> np.ndarray:
        return self.rows[:, self.n_features]

    def column(self, name: str) -> np.ndarray:
        return self.rows[:, self.columns.index(name)]


def system_for_row(kind: str, features) -> tuple[QMSystem, InitialStateParams]:
    """Circuit + initial state for one feature row (theta fixed at pi/2)."""
    if kind == "single":
        phi, lam = float(features[0]), float(features[1])
        system = build_system(single_circuit(lam=lam))
        init = InitialStateParams(theta=(math.pi / 2.0,), eta=(phi % (2.0 * math.pi),))
    else:
        c12, l12, phi, lam = (float(x) for x in features[:4])
        system = build_system(coupled_circuit(lam=lam, c_c=c12,
                                              l_c=(l12 if l12 > 0.0 else None)))
        eta = phi % (2.0 * math.pi)
        init = InitialStateParams(theta=(math.pi / 2.0,) * 2, eta=(eta,) * 2)
    return system, init


def simulate_row(kind: str, features, cfg: IntegratorConfig = DATASET_INTEGRATOR):
    """Feature row -> target(s); returns None if the simulation fails."""
    try:
        system, init = system_for_row(kind, features)
        traj = evolve(system, init, cfg)
        if kind == "single":
            return (loops.form_factor_target(traj, 0),)
        # Identical memristors with shared parameters evolve identically;
        # check the symmetry on the trajectory (where it is immune to the
        # discrete lobe-splitting decisions of the loop geometry) and store
        # one target value in both columns so their equality is exact.
        scale = max(float(np.max(np.abs(traj.n_exp))), 1e-300)
        asym = float(np.max(np.abs(traj.n_exp[:, 0] - traj.n_exp[:, 1])))
        if asym > 1e-6 * scale:
            raise DataError(f"identical memristors diverged: asymmetry {asym:.3e}")
        f1 = loops.form_factor_target(traj, 0)
        return (f1, f1)
    except (IntegrationDivergedError, ConfigError, DataError) as exc:
        print(f"row {features} failed: {exc}", file=sys.stderr)
        return None


def _worker(args):
    kind, features, cfg = args
    return simulate_row(kind, features, cfg)


def generate(space: ParamSpace, n: int, kind: str,
             cfg: IntegratorConfig = DATASET_INTEGRATOR,
             workers: int = 1, progress: bool = False) -> Dataset:
    """Sample the space and simulate every row (in parallel when asked).

    Output row order always matches the sampled order and is independent of
    the worker count; failed rows are dropped and counted in ``n_failed``.
    """
    feats = sample(space, n)
    expected_names = ("phi", "lambda") if kind == "single" else ("c12", "l12", "phi", "lambda")
    if space.names != expected_names:
        raise DataError(f"space features {space.names} do not fit kind {kind!r}")
    jobs = [(kind, feats[i], cfg) for i in range(feats.shape[0])]
    if workers > 1:
        import multiprocessing as mp
        with mp.get_context("fork").Pool(workers) as pool:
            results = pool.map(_worker, jobs, chunksize=max(1, len(jobs) // (8 * workers)))
    else:
        results = []
        for i, job in enumerate(jobs):
            results.append(_worker(job))
            if progress and (i + 1) % 100 == 0:
                print(f"simulated {i + 1}/{len(jobs)} rows", file=sys.stderr)
    columns = SINGLE_COLUMNS if kind == "single" else COUPLED_COLUMNS
    kept = [np.concatenate([feats[i], np.asarray(res)])
            for i, res in enumerate(results) if res is not None]
    n_failed = len(jobs) - len(kept)
    if n_failed and progress:
        print(f"excluded {n_failed} failed rows", file=sys.stderr)
    rows = np.vstack(kept) if kept else np.empty((0, len(columns)))
    return Dataset(kind=kind, columns=columns, rows=rows, n_failed=n_failed)


@dataclass(frozen=True)
class QuartileSummary:
    count: int
    mean: float
    std: float
    min: float
    q25: float
    q50: float
    q75: float
    max: float


def stats(ds: Dataset) -> dict[str, QuartileSummary]:
    """Per-column quartile description (linear-interpolation quantiles)."""
    if ds.rows.shape[0] == 0:
        raise DataError("cannot summarize an empty dataset")
    out: dict[str, QuartileSummary] = {}
    for j, name in enumerate(ds.columns):
        col = ds.rows[:, j]
        q25, q50, q75 = np.percentile(col, [25.0, 50.0, 75.0])
        std = float(np.std(col, ddof=1)) if col.size > 1 else 0.0
        out[name] = QuartileSummary(
            count=int(col.size), mean=float(np.mean(col)), std=std,
            min=float(np.min(col)), q25=float(q25), q50=float(q50),
            q75=float(q75), max=float(np.max(col)))
    return out


def format_stats(summary: dict[str, QuartileSummary]) -> str:
    names = list(summary)
    rows = [("count", "{:d}"), ("mean", "{:.6g}"), ("std", "{:.6g}"),
            ("min", "{:.6g}"), ("q25", "{:.6g}"), ("q50", "{:.6g}"),
            ("q75", "{:.6g}"), ("max", "{:.6g}")]
    width = max(12, *(len(n) + 2 for n in names))
    lines = [" " * 6 + "".join(n.rjust(width) for n in names)]
    for attr, fmt in rows:
        cells = [fmt.format(getattr(summary[n], attr)) for n in names]
        lines.append(attr.ljust(6) + "".join(c.rjust(width) for c in cells))
    return "\n".join(lines)


def write_csv(ds: Dataset, path: str) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(",".join(ds.columns) + "\n")
        for row in ds.rows:
            fh.write(",".join(f"{v:.17g}" for v in row) + "\n")


def read_csv(path: str) -> Dataset:
    with open(path, "r", encoding="utf-8") as fh:
        header = fh.readline().rstrip("\n")
        columns = tuple(header.split(","))
        if columns == SINGLE_COLUMNS:
            kind = "single"
        elif columns == COUPLED_COLUMNS:
            kind = "coupled"
        else:
            raise DataError(f"{path}:1: unrecognized header {header!r}")
        rows = []
        for lineno, line in enumerate(fh, start=2):
            line = line.rstrip("\n")
            if not line:
                continue
            parts = line.split(",")
            if len(parts) != len(columns):
                raise DataError(
                    f"{path}:{lineno}: expected {len(columns)} columns, got {len(parts)}")
            try:
                rows.append([float(p) for p in parts])
            except ValueError as exc:
                raise DataError(f"{path}:{lineno}: unparseable value") from exc
    data = np.asarray(rows) if rows else np.empty((0, len(columns)))
    return Dataset(kind=kind, columns=columns, rows=data)
