"""Time evolution of the driven, dissipative memristive modes.

The master equation integrated here is

    drho/dt = -i [H, rho]/hbar
              + sum_l (Gamma_l(t)/2) ( a_l rho a_l+ - (1/2){a_l+ a_l, rho} )

i.e. the quasiparticle dissipator enters with rate Gamma_l(t)/2, so mode
populations decay at Gamma/2 and coherences (hence the mean charge and
phase) at Gamma/4. Integration is fixed-step classical fourth-order
Runge-Kutta on the vectorized density matrix, with re-Hermitization and
trace renormalization after every step; at these dimensions (<= 16 levels)
adaptive stepping buys nothing and fixed steps make runs reproducible
bit-for-bit.

``evolve_mean`` integrates the closed linear system for the mean charge
and phase generated by the same master equation. For uncoupled modes the
two-level dynamics of those means is exactly linear, which makes the mean
system an independent oracle for the full integration. With exchange
coupling the truncated commutator [a, a+] = 1 - 2 a+a couples the linear
means to higher moments; the oracle then uses the harmonic closure and is
approximate.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import numerics
from .model import (InitialStateParams, QMSystem, hamiltonian_freq,
                    initial_state, operator_set)


class IntegrationDivergedError(RuntimeError):
    """The running state left the valid density-matrix neighborhood."""


class InvalidStateError(ValueError):
    """A supplied or recorded state is not a valid density matrix."""


@dataclass(frozen=True)
class IntegratorConfig:
    steps_per_period: int = 2000
    periods: int = 10
    record_rho: bool = False

    def __post_init__(self):
        if self.steps_per_period < 100:
            raise ValueError("steps_per_period must be >= 100")
        if self.periods < 1:
            raise ValueError("periods must be >= 1")


@dataclass
class Trajectory:
    """Recorded observables on the uniform step grid (endpoints included).

    Per-mode series are columns: ``n_exp[:, ell]`` is the mean dimensionless
    charge of mode ``ell``. ``i_qp = memductance * v_cap`` pointwise by
    construction.
    """

    times: np.ndarray
    n_exp: np.ndarray
    v_cap: np.ndarray
    i_qp: np.ndarray
    gamma: np.ndarray
    memductance: np.ndarray
    period: float
    steps_per_period: int
    periods: int
    rho_samples: np.ndarray | None = None

    @property
    def n_memristors(self) -> int:
        return self.n_exp.shape[1]


def density_matrix_errors(rho: np.ndarray) -> tuple[float, float, float]:
    """(hermiticity error, trace error, min eigenvalue) of a candidate state."""
    herm = float(np.max(np.abs(rho - rho.conj().T)))
    tr = float(abs(np.trace(rho).real - 1.0) + abs(np.trace(rho).imag))
    min_eig = float(numerics.eigh_values(numerics.hermitize(rho)).min())
    return herm, tr, min_eig


def check_density_matrix(rho: np.ndarray, tol: float = 1e-8) -> None:
    herm, tr, min_eig = density_matrix_errors(rho)
    if herm > tol or tr > tol or min_eig < -tol:
        raise InvalidStateError(
            f"not a density matrix: hermiticity {herm:.2e}, trace error {tr:.2e}, "
            f"min eigenvalue {min_eig:.2e}")


def _lindblad_superoperators(h_freq: np.ndarray, jump_ops: list[np.ndarray]):
    """Vectorized (row-major) generator pieces: unitary part and dissipators."""
    d = h_freq.shape[0]
    eye = np.eye(d, dtype=np.complex128)
    unitary = -1j * (np.kron(h_freq, eye) - np.kron(eye, h_freq.T))
    dissipators = []
    for op in jump_ops:
        ndag = op.conj().T @ op
        dis = np.kron(op, op.conj()) - 0.5 * (np.kron(ndag, eye) + np.kron(eye, ndag.T))
        dissipators.append(dis)
    return unitary, dissipators


def integrate_master(rho0: np.ndarray, h_freq: np.ndarray,
                     jump_ops: list[np.ndarray], rate_fns: list,
                     duration: float, steps: int,
                     check_tol: float = 1e-6,
                     check_every: int = 500) -> tuple[np.ndarray, np.ndarray]:
    """RK4 integration of drho/dt = -i[H,rho] + sum_m gamma_m(t) D[L_m] rho.

    ``h_freq`` is the Hamiltonian divided by hbar (rad/s); ``rate_fns`` give
    the Lindblad rates gamma_m(t) (callables accepting an ndarray of times).
    Returns (times, rhos) with ``rhos`` of shape (steps+1, d, d). The state
    is re-Hermitized and trace-renormalized after every step; if the
    pre-correction drift ever exceeds ``check_tol`` the integration aborts.
    """
    d = h_freq.shape[0]
    rho0 = np.asarray(rho0, dtype=np.complex128)
    if rho0.shape != (d, d):
        raise InvalidStateError(f"state shape {rho0.shape} does not match dim {d}")
    check_density_matrix(rho0, tol=1e-7)

    unitary, dissipators = _lindblad_superoperators(h_freq, jump_ops)
    times = np.linspace(0.0, duration, steps + 1)
    dt = duration / steps
    half = times[:-1] + 0.5 * dt
    rates_t = [np.broadcast_to(np.asarray(fn(times), dtype=float), times.shape).copy()
               for fn in rate_fns]
    rates_h = [np.broadcast_to(np.asarray(fn(half), dtype=float), half.shape).copy()
               for fn in rate_fns]

    def rhs(r: np.ndarray, gammas) -> np.ndarray:
        out = unitary @ r
        for dis, g in zip(dissipators, gammas):
            if g != 0.0:
                out += g * (dis @ r)
        return out

    rhos = np.empty((steps + 1, d, d), dtype=np.complex128)
    rhos[0] = rho0
    r = rho0.ravel().copy()
    m = len(jump_ops)
    for k in range(steps):
        g0 = [rates_t[j][k] for j in range(m)]
        gh = [rates_h[j][k] for j in range(m)]
        g1 = [rates_t[j][k + 1] for j in range(m)]
        k1 = rhs(r, g0)
        k2 = rhs(r + (0.5 * dt) * k1, gh)
        k3 = rhs(r + (0.5 * dt) * k2, gh)
        k4 = rhs(r + dt * k3, g1)
        r = r + (dt / 6.0) * (k1 + 2.0 * (k2 + k3) + k4)

        mat = r.reshape(d, d)
        tr = np.trace(mat)
        drift = abs(tr.real - 1.0) + abs(tr.imag)
        asym = float(np.max(np.abs(mat - mat.conj().T)))
        if drift > check_tol or asym > check_tol or not np.isfinite(drift):
            raise IntegrationDivergedError(
                f"state drifted at step {k + 1}: trace error {drift:.2e}, "
                f"hermiticity {asym:.2e}")
        mat = 0.5 * (mat + mat.conj().T)
        mat /= np.trace(mat).real
        if (k + 1) % check_every == 0:
            min_eig = float(numerics.eigh_values(mat).min())
            if min_eig < -check_tol:
                raise IntegrationDivergedError(
                    f"state lost positivity at step {k + 1}: min eigenvalue {min_eig:.2e}")
        rhos[k + 1] = mat
        r = mat.ravel()
    return times, rhos


def _observable_series(rhos: np.ndarray, op: np.ndarray) -> np.ndarray:
    # tr(rho A) = vec_r(rho) . vec_r(A^T)
    flat = rhos.reshape(rhos.shape[0], -1)
    return np.real(flat @ op.T.ravel())


def _trajectory_from_expectations(system: QMSystem, times: np.ndarray,
                                  n_exp: np.ndarray, cfg: IntegratorConfig,
                                  rho_samples: np.ndarray | None) -> Trajectory:
    n = system.n
    gamma = np.column_stack([system.rate_fn(ell)(times) for ell in range(n)])
    c_sigma = np.asarray(system.circuit.c_sigma)
    v_cap = -2.0 * system.constants.e * n_exp / c_sigma
    memductance = 0.5 * c_sigma * gamma
    i_qp = memductance * v_cap
    return Trajectory(times=times, n_exp=n_exp, v_cap=v_cap, i_qp=i_qp,
                      gamma=gamma, memductance=memductance,
                      period=system.period, steps_per_period=cfg.steps_per_period,
                      periods=cfg.periods, rho_samples=rho_samples)


def evolve(system: QMSystem, init: InitialStateParams | np.ndarray,
           cfg: IntegratorConfig = IntegratorConfig()) -> Trajectory:
    """Integrate the master equation and record the memristive observables.

    ``init`` is either Bloch angles for the initial product state or a
    ready-made density matrix on the system's truncated space.
    """
    ops = operator_set(system.derived, system.trunc)
    if isinstance(init, InitialStateParams):
        rho0 = initial_state(init, system.trunc)
    else:
        rho0 = np.asarray(init, dtype=np.complex128)
    h_freq = hamiltonian_freq(system.derived, system.trunc)

    # Dissipator rate is Gamma/2 in this model's convention.
    rate_fns = []
    for ell in range(system.n):
        phys = system.rate_fn(ell)
        rate_fns.append(lambda t, fn=phys: 0.5 * np.asarray(fn(t)))

    duration = cfg.periods * system.period
    steps = cfg.periods * cfg.steps_per_period
    times, rhos = integrate_master(rho0, h_freq, list(ops.a), rate_fns,
                                   duration, steps,
                                   check_every=max(1, cfg.steps_per_period // 4))
    n_exp = np.column_stack([_observable_series(rhos, ops.charge[ell])
                             for ell in range(system.n)])
    rho_samples = rhos if cfg.record_rho else None
    return _trajectory_from_expectations(system, times, n_exp, cfg, rho_samples)


def _mean_matrices(system: QMSystem) -> tuple[np.ndarray, list[np.ndarray]]:
    """Static and per-mode damping matrices of the mean (charge, phase) ODE.

    For each mode:  d<n>/dt   = -omega/(8 g^2) <phi>  + kappa/(8 g g') <phi'>
                               - (Gamma/4) <n>
                    d<phi>/dt = 8 omega g^2 <n>       - 8 kappa g g' <n'>
                               - (Gamma/4) <phi>
    """
    n = system.n
    g = system.derived.g
    omega = system.derived.omega
    kappa = system.derived.coupling
    m0 = np.zeros((2 * n, 2 * n))
    for ell in range(n):
        m0[2 * ell, 2 * ell + 1] = -omega[ell] / (8.0 * g[ell] ** 2)
        m0[2 * ell + 1, 2 * ell] = 8.0 * omega[ell] * g[ell] ** 2
        if n == 2 and kappa != 0.0:
            other = 1 - ell
            m0[2 * ell, 2 * other + 1] = kappa / (8.0 * g[ell] * g[other])
            m0[2 * ell + 1, 2 * other] = -8.0 * kappa * g[ell] * g[other]
    dampers = []
    for ell in range(n):
        dmp = np.zeros((2 * n, 2 * n))
        dmp[2 * ell, 2 * ell] = -0.25
        dmp[2 * ell + 1, 2 * ell + 1] = -0.25
        dampers.append(dmp)
    return m0, dampers


def mean_initial(system: QMSystem, init: InitialStateParams) -> np.ndarray:
    """Initial (<n>, <phi>) pairs of the product state, stacked per mode."""
    y0 = np.zeros(2 * system.n)
    for ell in range(system.n):
        g = system.derived.g[ell]
        theta, eta = init.theta[ell], init.eta[ell]
        y0[2 * ell] = math.sin(theta) * math.sin(eta) / (4.0 * g)
        y0[2 * ell + 1] = 2.0 * g * math.sin(theta) * math.cos(eta)
    return y0


def evolve_mean(system: QMSystem, init: InitialStateParams,
                cfg: IntegratorConfig = IntegratorConfig()) -> Trajectory:
    """Integrate the linear mean-value system on the same step grid.

    Exact (up to integrator error) for uncoupled modes at two-level
    truncation; approximate under exchange coupling, see module docstring.
    """
    m0, dampers = _mean_matrices(system)
    duration = cfg.periods * system.period
    steps = cfg.periods * cfg.steps_per_period
    times = np.linspace(0.0, duration, steps + 1)
    dt = duration / steps
    half = times[:-1] + 0.5 * dt
    rates_t = [np.asarray(system.rate_fn(ell)(times), dtype=float)
               for ell in range(system.n)]
    rates_h = [np.asarray(system.rate_fn(ell)(half), dtype=float)
               for ell in range(system.n)]

    def matrix_at(gammas) -> np.ndarray:
        m = m0.copy()
        for dmp, gam in zip(dampers, gammas):
            m += gam * dmp
        return m

    y = mean_initial(system, init)
    out = np.empty((steps + 1, 2 * system.n))
    out[0] = y
    nm = system.n
    for k in range(steps):
        a0 = matrix_at([rates_t[j][k] for j in range(nm)])
        ah = matrix_at([rates_h[j][k] for j in range(nm)])
        a1 = matrix_at([rates_t[j][k + 1] for j in range(nm)])
        k1 = a0 @ y
        k2 = ah @ (y + (0.5 * dt) * k1)
        k3 = ah @ (y + (0.5 * dt) * k2)
        k4 = a1 @ (y + dt * k3)
        y = y + (dt / 6.0) * (k1 + 2.0 * (k2 + k3) + k4)
        out[k + 1] = y
    n_exp = out[:, 0::2]
    return _trajectory_from_expectations(system, times, n_exp, cfg, None)


@dataclass(frozen=True)
class ConvergenceReport:
    steps_coarse: int
    steps_fine: int
    deviations: dict[str, float]
    passed: bool


def convergence_check(system: QMSystem, init: InitialStateParams,
                      cfg: IntegratorConfig = IntegratorConfig(),
                      rel_tol: float = 1e-5) -> ConvergenceReport:
    """Compare a run against one with doubled steps per period.

    Reports the maximum deviation of each observable on the shared grid,
    relative to that observable's maximum magnitude; passes when every
    deviation is below ``rel_tol``.
    """
    fine_cfg = IntegratorConfig(steps_per_period=2 * cfg.steps_per_period,
                                periods=cfg.periods, record_rho=False)
    coarse = evolve(system, init, cfg)
    fine = evolve(system, init, fine_cfg)
    deviations: dict[str, float] = {}
    for name in ("n_exp", "v_cap", "i_qp"):
        a = getattr(coarse, name)
        b = getattr(fine, name)[::2]
        scale = max(float(np.max(np.abs(b))), 1e-300)
        deviations[name] = float(np.max(np.abs(a - b))) / scale
    return ConvergenceReport(steps_coarse=cfg.steps_per_period,
                             steps_fine=fine_cfg.steps_per_period,
                             deviations=deviations,
                             passed=all(v < rel_tol for v in deviations.values()))


def write_trajectory_csv(traj: Trajectory, path: str) -> None:
    """CSV export: t,n1,v1,i1,gamma1[,n2,v2,i2,gamma2] at 17 significant digits."""
    cols = ["t"]
    for ell in range(traj.n_memristors):
        cols += [f"n{ell + 1}", f"v{ell + 1}", f"i{ell + 1}", f"gamma{ell + 1}"]
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(",".join(cols) + "\n")
        for k in range(traj.times.shape[0]):
            row = [traj.times[k]]
            for ell in range(traj.n_memristors):
                row += [traj.n_exp[k, ell], traj.v_cap[k, ell],
                        traj.i_qp[k, ell], traj.gamma[k, ell]]
            fh.write(",".join(f"{v:.17g}" for v in row) + "\n")
