"""Circuit model of one or two flux-driven memristive superconducting modes.

Each mode is an LC-like element shunted by a quasiparticle channel whose
decay rate is modulated by an external flux drive. This module turns raw
circuit values (capacitances, inductances, couplings) into derived energies
and frequencies, builds the truncated-mode operators and Hamiltonian,
evaluates the time-dependent decay rate, and prepares initial product
states. Conventions:

    E_C = 2 e^2 (C^-1)_jk            charging energy from the inverse
                                     capacitance matrix
    E_L = phi_rq^2 (L^-1)_jk         inductive energy from the inverse
                                     inductance matrix, phi_rq = hbar/2e
    omega = sqrt(2 E_C E_L) / hbar   mode frequency
    g = (E_C / (32 E_L))^(1/4)       zero-point width
    charge operator  n = (i/4g)(a+ - a)
    phase operator   phi = 2g (a+ + a)
    H = sum_l hbar*omega_l a+_l a_l
        - hbar*sqrt(omega_1*omega_2) (alpha - beta) (a1+ a2 + a2+ a1)
    Gamma_l(t) = lambda_l g_l^2 omega_l exp(-g_l^2)
                 (1 + cos(phi_offset + amp*sin(omega_l t))) / 2

All functions are pure and all parameter objects immutable, so they are
safe to share across worker processes.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .numerics import dagger, kron


class ConfigError(ValueError):
    """Raised for invalid circuit, drive, or configuration-file input."""


@dataclass(frozen=True)
class PhysicalConstants:
    e: float  # elementary charge (C)
    hbar: float  # reduced Planck constant (J*s)

    @property
    def phi_rq(self) -> float:
        """Reduced flux quantum hbar/(2e)."""
        return self.hbar / (2.0 * self.e)


SI = PhysicalConstants(e=1.602176634e-19, hbar=1.054571817e-34)
# Reduced units (hbar = e = 1) for closed-form checks and documentation runs.
REDUCED = PhysicalConstants(e=1.0, hbar=1.0)

# Defaults chosen so that (i) the zero-point width g^2 ~ 0.012 makes the
# swept dissipation range (0, 100] reshape the hysteresis loops instead of
# only rescaling them, and (ii) the swept coupling ranges reach from the
# near-uncoupled regime (|kappa|/omega ~ 0.01 at the largest coupling
# inductance) up through the kappa = -omega resonance.
DEFAULT_C_SIGMA = 2.5e-14  # F
DEFAULT_L_SELF = 2.5e-10  # H
# The drive sweeps phi_d over [0, pi]: the decay rate touches zero once per
# period and its modulation keeps a component at the mode frequency, which
# makes the loop shape (hence the form factor) genuinely sensitive to the
# dissipation strength instead of only rescaling a self-similar decay.
DEFAULT_DRIVE_OFFSET = math.pi / 2.0
DEFAULT_DRIVE_AMP = math.pi / 2.0
DEFAULT_TRUNC = 2


@dataclass(frozen=True)
class CircuitParams:
    """Raw circuit values for ``n`` memristors (n = 1 or 2).

    ``l_c`` is the coupling inductance; ``None`` means there is no inductive
    coupling branch at all (an absent inductor, not a zero-valued one).
    """

    c_sigma: tuple[float, ...]
    l_self: tuple[float, ...]
    lam: tuple[float, ...]
    c_c: float = 0.0
    l_c: float | None = None

    def __post_init__(self):
        n = len(self.c_sigma)
        if n not in (1, 2):
            raise ConfigError(f"1 or 2 memristors supported, got {n}")
        if len(self.l_self) != n or len(self.lam) != n:
            raise ConfigError("c_sigma, l_self and lam must have equal length")
        if any(c <= 0 for c in self.c_sigma):
            raise ConfigError("total capacitance must be positive")
        if any(l <= 0 for l in self.l_self):
            raise ConfigError("self inductance must be positive")
        if any(l < 0 for l in self.lam):
            raise ConfigError("spectral-density amplitude must be >= 0")
        if self.c_c < 0:
            raise ConfigError("coupling capacitance must be >= 0")
        if self.l_c is not None and self.l_c <= 0:
            raise ConfigError("coupling inductance must be positive when present")
        if n == 1:
            # A single memristor has no coupling branch by definition.
            object.__setattr__(self, "c_c", 0.0)
            object.__setattr__(self, "l_c", None)

    @property
    def n(self) -> int:
        return len(self.c_sigma)


def single_circuit(lam: float, c_sigma: float = DEFAULT_C_SIGMA,
                   l_self: float = DEFAULT_L_SELF) -> CircuitParams:
    return CircuitParams(c_sigma=(c_sigma,), l_self=(l_self,), lam=(lam,))


def coupled_circuit(lam: float, c_c: float = 0.0, l_c: float | None = None,
                    c_sigma: float = DEFAULT_C_SIGMA,
                    l_self: float = DEFAULT_L_SELF) -> CircuitParams:
    """Two identical memristors sharing one spectral-density amplitude."""
    return CircuitParams(c_sigma=(c_sigma, c_sigma), l_self=(l_self, l_self),
                         lam=(lam, lam), c_c=c_c, l_c=l_c)


@dataclass(frozen=True)
class DriveParams:
    """Flux drive phi_d(t) = phi_offset + amp*sin(omega_l t) per memristor."""

    phi_offset: tuple[float, ...] = (DEFAULT_DRIVE_OFFSET,)
    amp: tuple[float, ...] = (DEFAULT_DRIVE_AMP,)

    def __post_init__(self):
        if len(self.phi_offset) != len(self.amp):
            raise ConfigError("phi_offset and amp must have equal length")
        if any(a < 0 for a in self.amp):
            raise ConfigError("drive amplitude must be >= 0")


def default_drive(n: int) -> DriveParams:
    return DriveParams(phi_offset=(DEFAULT_DRIVE_OFFSET,) * n,
                       amp=(DEFAULT_DRIVE_AMP,) * n)


@dataclass(frozen=True)
class InitialStateParams:
    """Bloch angles of each mode: cos(theta/2)|0> + e^{i eta} sin(theta/2)|1>."""

    theta: tuple[float, ...]
    eta: tuple[float, ...]

    def __post_init__(self):
        if len(self.theta) != len(self.eta):
            raise ConfigError("theta and eta must have equal length")
        if any(not 0.0 <= t <= math.pi for t in self.theta):
            raise ConfigError("theta must lie in [0, pi]")
        if any(not 0.0 <= e < 2.0 * math.pi for e in self.eta):
            raise ConfigError("eta must lie in [0, 2*pi)")


@dataclass(frozen=True)
class DerivedParams:
    """Energies, frequencies and coupling derived from CircuitParams."""

    e_c: tuple[float, ...]  # J
    e_l: tuple[float, ...]  # J
    omega: tuple[float, ...]  # rad/s
    g: tuple[float, ...]  # dimensionless zero-point width
    e_c12: float = 0.0  # J
    e_l12: float = 0.0  # J
    alpha: float = 0.0
    beta: float = 0.0
    coupling: float = 0.0  # rad/s, = sqrt(omega1*omega2)*(alpha-beta)

    @property
    def n(self) -> int:
        return len(self.omega)


def _inverse_2x2(a: float, b: float, c: float, d: float) -> tuple[float, float, float, float]:
    det = a * d - b * c
    if det == 0.0 or not math.isfinite(det):
        raise ConfigError("singular capacitance/inductance matrix")
    return d / det, -b / det, -c / det, a / det


def derive(circuit: CircuitParams, constants: PhysicalConstants = SI) -> DerivedParams:
    """Compute energies, frequencies, widths and the exchange coupling.

    The capacitance matrix is [[C1+Cc, -Cc], [-Cc, C2+Cc]] and the inverse
    inductance matrix [[1/L1 + 1/Lc, -1/Lc], [-1/Lc, 1/L2 + 1/Lc]]; the
    coupling branches vanish from both when absent so that the uncoupled
    case reproduces two independent single-mode derivations exactly.
    """
    e2 = 2.0 * constants.e**2
    p2 = constants.phi_rq**2
    if circuit.n == 1:
        cinv = (1.0 / circuit.c_sigma[0],)
        linv = (1.0 / circuit.l_self[0],)
        e_c = (e2 * cinv[0],)
        e_l = (p2 * linv[0],)
        e_c12 = e_l12 = 0.0
    else:
        if circuit.c_c == 0.0:
            ci11, ci12 = 1.0 / circuit.c_sigma[0], 0.0
            ci21, ci22 = 0.0, 1.0 / circuit.c_sigma[1]
        else:
            ci11, ci12, ci21, ci22 = _inverse_2x2(
                circuit.c_sigma[0] + circuit.c_c, -circuit.c_c,
                -circuit.c_c, circuit.c_sigma[1] + circuit.c_c)
        if circuit.l_c is None:
            li11, li12 = 1.0 / circuit.l_self[0], 0.0
            li22 = 1.0 / circuit.l_self[1]
        else:
            li11 = 1.0 / circuit.l_self[0] + 1.0 / circuit.l_c
            li22 = 1.0 / circuit.l_self[1] + 1.0 / circuit.l_c
            li12 = -1.0 / circuit.l_c
        e_c = (e2 * ci11, e2 * ci22)
        e_l = (p2 * li11, p2 * li22)
        e_c12 = e2 * ci12
        e_l12 = p2 * li12

    omega = tuple(math.sqrt(2.0 * ec * el) / constants.hbar for ec, el in zip(e_c, e_l))
    g = tuple((ec / (32.0 * el)) ** 0.25 for ec, el in zip(e_c, e_l))
    if circuit.n == 1:
        return DerivedParams(e_c=e_c, e_l=e_l, omega=omega, g=g)
    alpha = e_l12 / math.sqrt(e_l[0] * e_l[1])
    beta = e_c12 / math.sqrt(e_c[0] * e_c[1])
    coupling = math.sqrt(omega[0] * omega[1]) * (alpha - beta)
    return DerivedParams(e_c=e_c, e_l=e_l, omega=omega, g=g,
                         e_c12=e_c12, e_l12=e_l12,
                         alpha=alpha, beta=beta, coupling=coupling)


# ---------------------------------------------------------------------------
# Operators on the truncated product space
# ---------------------------------------------------------------------------

def annihilation(trunc: int) -> np.ndarray:
    """Truncated-mode annihilation operator, a|k> = sqrt(k)|k-1>."""
    if trunc < 2:
        raise ConfigError("truncation must keep at least two levels")
    a = np.zeros((trunc, trunc), dtype=np.complex128)
    for k in range(1, trunc):
        a[k - 1, k] = math.sqrt(k)
    return a


def embed(op: np.ndarray, ell: int, n: int, trunc: int) -> np.ndarray:
    """Lift a single-mode operator to mode ``ell`` of the n-mode space."""
    eye = np.eye(trunc, dtype=np.complex128)
    out = op if ell == 0 else eye
    for j in range(1, n):
        out = kron(out, op if j == ell else eye)
    return out


@dataclass(frozen=True)
class OperatorSet:
    """Mode operators on the trunc^n dimensional product space."""

    trunc: int
    n: int
    a: tuple[np.ndarray, ...]  # annihilation per mode
    adag: tuple[np.ndarray, ...]
    number: tuple[np.ndarray, ...]  # a+ a per mode
    charge: tuple[np.ndarray, ...]  # (i/4g)(a+ - a) per mode
    phase: tuple[np.ndarray, ...]  # 2g (a+ + a) per mode

    @property
    def dim(self) -> int:
        return self.trunc**self.n


def operator_set(derived: DerivedParams, trunc: int = DEFAULT_TRUNC) -> OperatorSet:
    n = derived.n
    a1 = annihilation(trunc)
    a = tuple(embed(a1, ell, n, trunc) for ell in range(n))
    adag = tuple(dagger(m) for m in a)
    number = tuple(ad @ m for ad, m in zip(adag, a))
    charge = tuple((1j / (4.0 * derived.g[ell])) * (adag[ell] - a[ell]) for ell in range(n))
    phase = tuple(2.0 * derived.g[ell] * (adag[ell] + a[ell]) for ell in range(n))
    return OperatorSet(trunc=trunc, n=n, a=a, adag=adag, number=number,
                       charge=charge, phase=phase)


def hamiltonian_freq(derived: DerivedParams, trunc: int = DEFAULT_TRUNC) -> np.ndarray:
    """Hamiltonian divided by hbar (rad/s units), used by the integrator."""
    ops = operator_set(derived, trunc)
    h = np.zeros((ops.dim, ops.dim), dtype=np.complex128)
    for ell in range(derived.n):
        h += derived.omega[ell] * ops.number[ell]
    if derived.n == 2 and derived.coupling != 0.0:
        h -= derived.coupling * (ops.adag[0] @ ops.a[1] + ops.adag[1] @ ops.a[0])
    return h


def hamiltonian(derived: DerivedParams, trunc: int = DEFAULT_TRUNC,
                constants: PhysicalConstants = SI) -> np.ndarray:
    """Hamiltonian in energy units (J for SI constants)."""
    return constants.hbar * hamiltonian_freq(derived, trunc)


def decay_rate(t, ell: int, derived: DerivedParams, drive: DriveParams,
               lam: float):
    """Drive-modulated quasiparticle decay rate Gamma_ell(t) in 1/s.

    Accepts a scalar or array ``t``. The rate is non-negative and periodic
    with the drive period 2*pi/omega_ell; it vanishes whenever the flux
    drive sits at half a flux quantum (phi_d = pi mod 2*pi).
    """
    g2 = derived.g[ell] ** 2
    base = lam * g2 * derived.omega[ell] * math.exp(-g2)
    phi_d = drive.phi_offset[ell] + drive.amp[ell] * np.sin(derived.omega[ell] * np.asarray(t))
    return base * 0.5 * (1.0 + np.cos(phi_d))


def pure_state(theta: float, eta: float, trunc: int) -> np.ndarray:
    psi = np.zeros(trunc, dtype=np.complex128)
    psi[0] = math.cos(theta / 2.0)
    psi[1] = np.exp(1j * eta) * math.sin(theta / 2.0)
    return psi


def initial_state(init: InitialStateParams, trunc: int = DEFAULT_TRUNC) -> np.ndarray:
    """Density matrix of the product of single-mode pure states."""
    psi = pure_state(init.theta[0], init.eta[0], trunc)
    for theta, eta in zip(init.theta[1:], init.eta[1:]):
        psi = np.kron(psi, pure_state(theta, eta, trunc))
    return np.outer(psi, psi.conj())


@dataclass(frozen=True)
class QMSystem:
    """A fully derived system: circuit + drive + truncation + energies."""

    circuit: CircuitParams
    drive: DriveParams
    derived: DerivedParams
    trunc: int = DEFAULT_TRUNC
    constants: PhysicalConstants = SI

    @property
    def n(self) -> int:
        return self.circuit.n

    @property
    def period(self) -> float:
        """Drive period of the first memristor, 2*pi/omega_1."""
        return 2.0 * math.pi / self.derived.omega[0]

    def rate_fn(self, ell: int):
        d, dr, lam = self.derived, self.drive, self.circuit.lam[ell]
        return lambda t: decay_rate(t, ell, d, dr, lam)


def build_system(circuit: CircuitParams, drive: DriveParams | None = None,
                 trunc: int = DEFAULT_TRUNC,
                 constants: PhysicalConstants = SI) -> QMSystem:
    if drive is None:
        drive = default_drive(circuit.n)
    if len(drive.amp) != circuit.n:
        raise ConfigError("drive parameters must match the memristor count")
    if not 2 <= trunc <= 4:
        raise ConfigError("supported truncations are 2..4 levels")
    derived = derive(circuit, constants)
    for ell, g in enumerate(derived.g):
        if g * g >= 0.05:
            warnings.warn(
                f"mode {ell}: g^2 = {g * g:.3f} >= 0.05, two-level treatment dubious",
                stacklevel=2)
    return QMSystem(circuit=circuit, drive=drive, derived=derived,
                    trunc=trunc, constants=constants)


# ---------------------------------------------------------------------------
# Key/value configuration files
# ---------------------------------------------------------------------------

CONFIG_KEYS = {
    "c_sigma": float,
    "l_self": float,
    "c_c": float,
    "l_c": float,
    "lambda": float,
    "phi": float,
    "theta": float,
    "phi_offset": float,
    "drive_amp": float,
    "trunc": int,
    "periods": int,
    "steps_per_period": int,
}


def default_config() -> dict:
    return {
        "c_sigma": DEFAULT_C_SIGMA,
        "l_self": DEFAULT_L_SELF,
        "c_c": 0.0,
        "l_c": 0.0,  # 0 means "no inductive coupling branch"
        "lambda": 1.0,
        "phi": 0.0,
        "theta": math.pi / 2.0,
        "phi_offset": DEFAULT_DRIVE_OFFSET,
        "drive_amp": DEFAULT_DRIVE_AMP,
        "trunc": DEFAULT_TRUNC,
        "periods": 10,
        "steps_per_period": 2000,
    }


def read_config(path: str, extra_keys: dict | None = None) -> dict:
    """Parse a ``key = value`` configuration file.

    Blank lines and ``#`` comments are ignored. Unknown keys are rejected
    with the offending line number so typos cannot silently change a run.
    """
    keys = dict(CONFIG_KEYS)
    if extra_keys:
        keys.update(extra_keys)
    out: dict = {}
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigError(f"{path}:{lineno}: expected 'key = value'")
            key, value = (part.strip() for part in line.split("=", 1))
            if key not in keys:
                raise ConfigError(f"{path}:{lineno}: unknown key {key!r}")
            caster = keys[key]
            try:
                out[key] = caster(value) if caster is not str else value
            except ValueError as exc:
                raise ConfigError(f"{path}:{lineno}: bad value for {key}: {value!r}") from exc
    return out


def system_from_config(cfg: dict, coupled: bool = False) -> QMSystem:
    """Build a QMSystem from a (defaults-merged) configuration mapping."""
    merged = default_config()
    merged.update(cfg)
    lam = merged["lambda"]
    if coupled:
        l_c = merged["l_c"] if merged["l_c"] > 0.0 else None
        circuit = coupled_circuit(lam, c_c=merged["c_c"], l_c=l_c,
                                  c_sigma=merged["c_sigma"], l_self=merged["l_self"])
    else:
        circuit = single_circuit(lam, c_sigma=merged["c_sigma"], l_self=merged["l_self"])
    drive = DriveParams(phi_offset=(merged["phi_offset"],) * circuit.n,
                        amp=(merged["drive_amp"],) * circuit.n)
    return build_system(circuit, drive, trunc=merged["trunc"])
