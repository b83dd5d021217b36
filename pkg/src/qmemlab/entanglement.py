"""Two-qubit concurrence of the coupled-memristor state.

Concurrence of a two-qubit density matrix rho (basis |00>, |01>, |10>,
|11>) is

    C(rho) = max(0, e1 - e2 - e3 - e4)

with e_i the descending eigenvalues of the Hermitian matrix
sqrt(sqrt(rho) rho_tilde sqrt(rho)) and the spin-flipped state
rho_tilde = (sy x sy) conj(rho) (sy x sy), conjugation taken entrywise in
the computational basis. C is 0 exactly for product/separable states and 1
for Bell states.
"""

from __future__ import annotations

import warnings

import numpy as np

from . import numerics
from .dynamics import Trajectory

SIGMA_Y = np.array([[0.0, -1j], [1j, 0.0]], dtype=np.complex128)
_YY = np.kron(SIGMA_Y, SIGMA_Y)


class EntanglementError(ValueError):
    """Raised for states that are not two-qubit density matrices."""


def _require_two_qubit(rho) -> np.ndarray:
    mat = np.asarray(rho, dtype=np.complex128)
    if mat.shape != (4, 4):
        raise EntanglementError(f"expected a 4x4 two-qubit state, got {mat.shape}")
    return mat


def spin_flip(rho) -> np.ndarray:
    """(sigma_y x sigma_y) conj(rho) (sigma_y x sigma_y)."""
    mat = _require_two_qubit(rho)
    return _YY @ mat.conj() @ _YY


def concurrence(rho) -> float:
    mat = _require_two_qubit(rho)
    # The rank floor keeps phantom rank out of sqrt(rho) for (near-)pure
    # states; without it product states read ~1e-9 instead of 0.
    root = numerics.sqrtm_psd(mat, rank_floor=1e-12)
    # sqrt of the flipped state reuses the same decomposition: conjugation
    # commutes with the PSD square root and YY is an involution.
    root_flip = _YY @ root.conj() @ _YY
    b = root @ root_flip
    # The e_i are the eigenvalues of sqrt(sqrt(rho) rho~ sqrt(rho)), i.e.
    # the singular values of B = sqrt(rho) sqrt(rho~). Reading them off the
    # Hermitian embedding [[0, B], [B+, 0]] (eigenvalues +/- sv(B)) avoids
    # square-rooting near-zero eigenvalues of the triple product, which
    # would turn 1e-17 round-off into 3e-9 of phantom concurrence.
    emb = np.zeros((8, 8), dtype=np.complex128)
    emb[:4, 4:] = b
    emb[4:, :4] = b.conj().T
    vals = numerics.eigh_values(emb)
    c = float(vals[0] - vals[1] - vals[2] - vals[3])
    if c > 1.0 + 1e-8:
        raise EntanglementError(f"concurrence {c} exceeds 1: invalid state")
    return min(1.0, max(0.0, c))


def project_two_levels(rho: np.ndarray, trunc: int) -> np.ndarray:
    """Project an n=2 state with trunc>2 levels onto the two lowest levels.

    The projected state is renormalized; population outside the kept
    subspace is discarded, so the result is only meaningful when the
    dynamics stays close to the two-level manifold.
    """
    keep = [i * trunc + j for i in range(2) for j in range(2)]
    sub = rho[np.ix_(keep, keep)]
    tr = np.trace(sub).real
    if tr <= 0.0:
        raise EntanglementError("no population left in the two-level subspace")
    return sub / tr


def concurrence_series(traj: Trajectory) -> list[tuple[float, float]]:
    """Concurrence at every recorded time of a coupled two-memristor run."""
    if traj.rho_samples is None:
        raise EntanglementError("trajectory was recorded without rho samples")
    if traj.n_memristors != 2:
        raise EntanglementError("concurrence needs exactly two memristors")
    dim = traj.rho_samples.shape[1]
    trunc = int(round(dim**0.5))
    if trunc * trunc != dim:
        raise EntanglementError(f"state dimension {dim} is not a two-mode space")
    if trunc > 2:
        warnings.warn(
            f"projecting {trunc}-level modes onto their two lowest levels "
            "before computing concurrence", stacklevel=2)
    out = []
    for t, rho in zip(traj.times, traj.rho_samples):
        state = rho if trunc == 2 else project_two_levels(rho, trunc)
        out.append((float(t), concurrence(state)))
    return out


def write_concurrence_csv(series: list[tuple[float, float]], path: str) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write("t,concurrence\n")
        for t, c in series:
            fh.write(f"{t:.17g},{c:.17g}\n")
