"""Hysteresis-loop geometry in the current/voltage plane.

A pinched hysteresis curve self-intersects at its pinch points. The curve
is split into simple lobes at exact segment-segment crossings (no
zero-crossing heuristics, so loops pinched away from the origin are handled
too); the loop area is the sum of absolute lobe areas, the perimeter the
sum of lobe perimeters, and the dimensionless form factor

    F = 4*pi*A / P^2

is 1 for a circle, 1/2 for a symmetric two-lobe figure, 0 for a line, and
invariant under scaling of either axis by a common factor. Voltage and
current are each normalized by their trajectory-wide maximum magnitude
before any geometry, so the two axes are commensurate; F itself is scale
invariant, the normalization only fixes conditioning.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .dynamics import Trajectory


class LoopError(ValueError):
    """Raised when a trajectory cannot be segmented into whole periods."""


@dataclass(frozen=True)
class LoopMetrics:
    area: float
    perimeter: float
    form_factor: float
    period_index: int = 0


def polyline_area(points) -> float:
    """Absolute shoelace area of the implicitly closed polygon."""
    pts = np.asarray(points, dtype=float)
    if pts.ndim != 2 or pts.shape[1] != 2:
        raise LoopError(f"expected (m, 2) points, got shape {pts.shape}")
    if pts.shape[0] < 3:
        return 0.0
    x, y = pts[:, 0], pts[:, 1]
    return 0.5 * abs(float(np.sum(x * np.roll(y, -1) - np.roll(x, -1) * y)))


def polyline_perimeter(points) -> float:
    """Total edge length including the closing segment."""
    pts = np.asarray(points, dtype=float)
    if pts.ndim != 2 or pts.shape[1] != 2:
        raise LoopError(f"expected (m, 2) points, got shape {pts.shape}")
    if pts.shape[0] < 2:
        return 0.0
    diffs = np.roll(pts, -1, axis=0) - pts
    return float(np.sum(np.hypot(diffs[:, 0], diffs[:, 1])))


def _first_crossing(pts: np.ndarray):
    """First proper self-intersection of the closed polygon, or None.

    The polygon has segments k = pts[k] -> pts[(k+1) % m] including the
    closing one. Returns (i, j, point) where segment i crosses segment
    j >= i + 2 transversally at ``point``. Adjacent segments (including the
    wrap pair (0, m-1)) share an endpoint and are skipped; so are
    (near-)parallel pairs, which cannot cross transversally.
    """
    m = pts.shape[0]
    if m < 4:
        return None
    starts = pts
    vecs = np.roll(pts, -1, axis=0) - pts
    for i in range(m - 2):
        j0 = i + 2
        j1 = m - 1 if i == 0 else m  # exclude the wrap-adjacent pair (0, m-1)
        if j0 >= j1:
            continue
        p = starts[i]
        r = vecs[i]
        q = starts[j0:j1]
        s = vecs[j0:j1]
        rxs = r[0] * s[:, 1] - r[1] * s[:, 0]
        qp = q - p
        t_num = qp[:, 0] * s[:, 1] - qp[:, 1] * s[:, 0]
        u_num = qp[:, 0] * r[1] - qp[:, 1] * r[0]
        with np.errstate(divide="ignore", invalid="ignore"):
            t = t_num / rxs
            u = u_num / rxs
        ok = (np.abs(rxs) > 1e-300) & (t > 0.0) & (t < 1.0) & (u > 0.0) & (u < 1.0)
        if np.any(ok):
            jrel = int(np.argmax(ok))
            cross = p + t[jrel] * r
            return i, j0 + jrel, np.asarray(cross)
    return None


def segment_lobes(points) -> list[np.ndarray]:
    """Split a curve at its self-intersections into simple closed lobes.

    Each crossing splits the curve into the sub-loop between the two
    crossing segments and the remainder with the crossing point spliced in;
    both pieces are searched again until no crossing remains. A curve with
    no self-intersection is returned whole.
    """
    pts = np.asarray(points, dtype=float)
    if pts.ndim != 2 or pts.shape[1] != 2:
        raise LoopError(f"expected (m, 2) points, got shape {pts.shape}")
    lobes: list[np.ndarray] = []
    stack = [pts]
    # Each split strictly shrinks both pieces; the bound is only a guard.
    for _ in range(10 * max(1, pts.shape[0])):
        if not stack:
            break
        cur = stack.pop()
        hit = _first_crossing(cur)
        if hit is None:
            lobes.append(cur)
            continue
        i, j, x = hit
        inner = np.vstack([x[None, :], cur[i + 1:j + 1]])
        outer = np.vstack([cur[:i + 1], x[None, :], cur[j + 1:]])
        stack.append(inner)
        stack.append(outer)
    else:
        raise LoopError("self-intersection splitting did not terminate")
    return lobes


def form_factor(points, period_index: int = 0) -> LoopMetrics:
    """Loop metrics of one period of a (possibly pinched) closed curve."""
    lobes = segment_lobes(points)
    area = sum(polyline_area(lobe) for lobe in lobes)
    perimeter = sum(polyline_perimeter(lobe) for lobe in lobes)
    factor = 4.0 * math.pi * area / perimeter**2 if perimeter > 0.0 else 0.0
    return LoopMetrics(area=area, perimeter=perimeter, form_factor=factor,
                       period_index=period_index)


def normalized_iv(traj: Trajectory, ell: int = 0) -> np.ndarray:
    """Trajectory-normalized (v, i) samples of one memristor as (m, 2)."""
    v = traj.v_cap[:, ell].copy()
    i = traj.i_qp[:, ell].copy()
    vmax = float(np.max(np.abs(v)))
    imax = float(np.max(np.abs(i)))
    if vmax > 0.0:
        v /= vmax
    if imax > 0.0:
        i /= imax
    return np.column_stack([v, i])


def per_period_metrics(traj: Trajectory, ell: int = 0) -> list[LoopMetrics]:
    """One LoopMetrics per driving period of the normalized I/V curve."""
    spp = traj.steps_per_period
    expected = traj.periods * spp + 1
    if traj.times.shape[0] != expected:
        raise LoopError(
            f"trajectory spans {traj.times.shape[0]} samples, expected "
            f"{expected} for {traj.periods} whole periods")
    curve = normalized_iv(traj, ell)
    metrics = []
    for j in range(traj.periods):
        segment = curve[j * spp:(j + 1) * spp + 1]
        metrics.append(form_factor(segment, period_index=j))
    return metrics


def form_factor_target(traj: Trajectory, ell: int = 0) -> float:
    """Mean per-period form factor: the scalar regression target."""
    metrics = per_period_metrics(traj, ell)
    return float(np.mean([m.form_factor for m in metrics]))


def write_loop_csv(metrics: list[LoopMetrics], path: str) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write("period,area,perimeter,form_factor\n")
        for m in metrics:
            fh.write(f"{m.period_index},{m.area:.17g},{m.perimeter:.17g},"
                     f"{m.form_factor:.17g}\n")
