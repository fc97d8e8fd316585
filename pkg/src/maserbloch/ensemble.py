"""Inhomogeneously broadened spin ensemble: distribution, discretization, cooperativity.

All rates and frequencies are angular (rad/s) unless a name ends in ``_hz``.
"""
from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

TWO_PI = 2.0 * np.pi

# SI constants used by the dipole estimator
MU0_OVER_4PI = 1e-7  # T m / A
HBAR = 1.054571817e-34  # J s
CARBON_DENSITY_CM3 = 1.755e23  # diamond, atoms per cm^3
NV_GYROMAGNETIC = TWO_PI * 28e9  # rad / (s T), i.e. 28 MHz/mT

DEFAULT_SPAN_FACTOR = 2.5


def to_hz(omega: float) -> float:
    """omega / 2 pi, nudged by a few ulps so that ``2 pi * to_hz(w) == w`` when possible."""
    f = omega / TWO_PI
    cand = f
    for _ in range(4):
        if TWO_PI * cand == omega:
            return cand
        cand = np.nextafter(cand, np.inf if TWO_PI * cand < omega else -np.inf)
    return f


class ParameterError(ValueError):
    """A physical parameter lies outside its admissible domain."""


# Fields that carry an angular frequency; configs give them in Hz.
FREQUENCY_FIELDS = ("omega_c", "kappa", "gamma_perp", "g_coll", "g0", "W", "omega0", "J_fill")


@dataclass(frozen=True)
class PhysicalParams:
    """Rates and frequencies of the coupled cavity / spin-ensemble system.

    Frequencies are angular (rad/s). ``eta`` is a field rate (field units per
    second) and is not converted between Hz and rad/s.
    """

    kappa: float
    gamma_perp: float
    g_coll: float
    W: float
    q: float = 1.39
    omega0: float = 0.0
    J_fill: float = 0.0
    eta: float = 0.0
    N_rho: int = 501
    omega_c: float = 0.0
    g0: float | None = None

    def __post_init__(self):
        for name in ("kappa", "gamma_perp", "g_coll", "W"):
            if not getattr(self, name) > 0:
                raise ParameterError(f"{name} must be positive, got {getattr(self, name)!r}")
        if not 1.0 < self.q < 3.0:
            raise ParameterError(f"q must satisfy 1 < q < 3, got {self.q!r}")
        if self.J_fill < 0:
            raise ParameterError(f"J_fill must be non-negative, got {self.J_fill!r}")
        if self.eta < 0:
            raise ParameterError(f"eta must be non-negative, got {self.eta!r}")
        if int(self.N_rho) != self.N_rho or self.N_rho < 1:
            raise ParameterError(f"N_rho must be a positive integer, got {self.N_rho!r}")
        object.__setattr__(self, "N_rho", int(self.N_rho))
        if self.g0 is not None and not self.g0 > 0:
            raise ParameterError(f"g0 must be positive when given, got {self.g0!r}")

    def replace(self, **changes) -> "PhysicalParams":
        return dataclasses.replace(self, **changes)

    @classmethod
    def from_hz(cls, **values) -> "PhysicalParams":
        """Build from ordinary frequencies f = omega / 2 pi (Hz)."""
        converted = {}
        for key, val in values.items():
            if key in FREQUENCY_FIELDS and val is not None:
                val = TWO_PI * float(val)
            converted[key] = val
        return cls(**converted)

    def to_hz(self) -> dict:
        out = {}
        for f in dataclasses.fields(self):
            val = getattr(self, f.name)
            if f.name in FREQUENCY_FIELDS and val is not None:
                val = float(to_hz(val))
            out[f.name] = val
        return out

    def to_rad(self) -> dict:
        return dataclasses.asdict(self)


def paper_params(**overrides) -> PhysicalParams:
    """Parameters of the NV-diamond device (kappa/2pi = 418 kHz etc.).

    ``eta`` is not reported for the device; 1160 puts the drive-only cavity
    amplitude eta/kappa at ~1e-4 of the first burst peak for p0 = 0.3.
    """
    base = dict(
        omega_c=TWO_PI * 3.1e9,
        kappa=TWO_PI * 418e3,
        gamma_perp=TWO_PI * 0.2e6,
        g_coll=TWO_PI * 4.6e6,
        g0=TWO_PI * 2.0,
        W=TWO_PI * 9.2e6,
        q=1.39,
        omega0=0.0,
        J_fill=TWO_PI * 16e3,
        eta=1160.0,
        N_rho=501,
    )
    base.update(overrides)
    return PhysicalParams(**base)


def q_gaussian_width(W, q):
    """Scale parameter delta_q for which the q-Gaussian has FWHM ``W``."""
    return 0.5 * W * np.sqrt((q - 1.0) / (2.0 ** (q - 1.0) - 1.0))


def q_gaussian_density(omega, omega0, W, q):
    """Peak-normalized q-Gaussian profile with full-width at half-maximum ``W``.

    Returns ``(1 - (1-q) x^2 / delta_q^2) ** (1/(1-q))`` with x = omega - omega0;
    zero where the base is non-positive.
    """
    if not 1.0 < q < 3.0:
        raise ParameterError(f"q must satisfy 1 < q < 3, got {q!r}")
    if not W > 0:
        raise ParameterError(f"W must be positive, got {W!r}")
    x = np.asarray(omega, dtype=float) - omega0
    delta = q_gaussian_width(W, q)
    base = 1.0 - (1.0 - q) * (x / delta) ** 2
    with np.errstate(divide="ignore", invalid="ignore"):
        val = np.where(base > 0, np.abs(base) ** (1.0 / (1.0 - q)), 0.0)
    return val if val.ndim else float(val)


@dataclass(frozen=True)
class SpinPacket:
    detuning: float
    weight: float
    coupling: float


@dataclass(frozen=True, eq=False)
class EnsembleGrid:
    """Equally spaced spin packets; detunings are relative to the rotating frame.

    Stored as arrays; :attr:`packets` gives the per-packet view.
    """

    detunings: np.ndarray
    weights: np.ndarray
    coupling: float
    span: float
    center: float
    W: float = field(default=np.nan)

    def __post_init__(self):
        det = np.array(self.detunings, dtype=float)
        w = np.array(self.weights, dtype=float)
        if det.shape != w.shape or det.ndim != 1:
            raise ParameterError("detunings and weights must be 1-d arrays of equal length")
        det.setflags(write=False)
        w.setflags(write=False)
        object.__setattr__(self, "detunings", det)
        object.__setattr__(self, "weights", w)

    @property
    def n_packets(self) -> int:
        return self.detunings.size

    @property
    def spacing(self) -> float:
        return float(self.detunings[1] - self.detunings[0]) if self.n_packets > 1 else 0.0

    @cached_property
    def packets(self) -> tuple[SpinPacket, ...]:
        return tuple(
            SpinPacket(float(d), float(w), self.coupling)
            for d, w in zip(self.detunings, self.weights)
        )

    def cooperativity_factors(self, kappa, gamma_perp) -> np.ndarray:
        """Per-packet C_j for every packet."""
        return _cooperativity(self.coupling, self.detunings, kappa, gamma_perp)

    def cooperativity_weights(self, kappa, gamma_perp) -> np.ndarray:
        """rho_j N_rho C_j, the terms summed in the ensemble cooperativity."""
        return self.weights * self.n_packets * self.cooperativity_factors(kappa, gamma_perp)

    def __eq__(self, other):
        if not isinstance(other, EnsembleGrid):
            return NotImplemented
        return (
            np.array_equal(self.detunings, other.detunings)
            and np.array_equal(self.weights, other.weights)
            and self.coupling == other.coupling
            and self.span == other.span
            and self.center == other.center
        )

    __hash__ = None


def discretize(params: PhysicalParams, span: float | None = None, center: float | None = None) -> EnsembleGrid:
    """Sample the q-Gaussian onto ``params.N_rho`` equally spaced packets.

    The grid covers ``[center - span, center + span]``; ``span`` defaults to
    2.5 W and ``center`` to ``params.omega0``.
    """
    n = params.N_rho
    if n < 1:
        raise ParameterError("N_rho must be at least 1")
    if span is None:
        span = DEFAULT_SPAN_FACTOR * params.W
    if not span > 0:
        raise ParameterError(f"span must be positive, got {span!r}")
    if center is None:
        center = params.omega0
    coupling = params.g_coll / np.sqrt(n)
    if n == 1:
        return EnsembleGrid(np.array([center]), np.array([1.0]), coupling, span, center, params.W)
    # built in Hz and scaled by 2 pi, so every detuning has an exact Hz label
    offsets = np.linspace(-span / TWO_PI, span / TWO_PI, n)
    # symmetrize against linspace rounding so weights mirror exactly
    offsets = 0.5 * (offsets - offsets[::-1])
    detunings = TWO_PI * (center / TWO_PI + offsets)
    weights = q_gaussian_density(detunings, params.omega0, params.W, params.q)
    weights = 0.5 * (weights + weights[::-1]) if center == params.omega0 else weights
    weights = weights / weights.sum()
    return EnsembleGrid(detunings, weights, coupling, span, center, params.W)


def _cooperativity(coupling, detuning, kappa, gamma_perp):
    if not (kappa > 0 and gamma_perp > 0):
        raise ParameterError("kappa and gamma_perp must be positive")
    detuning = np.asarray(detuning, dtype=float)
    return coupling**2 / kappa / (gamma_perp + detuning**2 / gamma_perp)


def packet_cooperativity(packet: SpinPacket, kappa: float, gamma_perp: float) -> float:
    """Single-packet cooperativity C_j = g_rho^2 / (kappa (gamma + Delta^2/gamma)).

    The ensemble value is ``sum_j rho_j N_rho C_j``.
    """
    return float(_cooperativity(packet.coupling, packet.detuning, kappa, gamma_perp))


@dataclass(frozen=True)
class Cooperativity:
    C: float
    Gamma: float


def ensemble_cooperativity(grid: EnsembleGrid, params: PhysicalParams) -> Cooperativity:
    """Ensemble cooperativity C and the effective linewidth Gamma = g_coll^2 / (kappa C)."""
    C = float(np.sum(grid.cooperativity_weights(params.kappa, params.gamma_perp)))
    return Cooperativity(C=C, Gamma=params.g_coll**2 / (params.kappa * C))


def nearest_neighbor_distance(concentration_ppm: float) -> float:
    """Typical spin spacing n^(-1/3) in metres for a concentration relative to carbon."""
    if not concentration_ppm > 0:
        raise ParameterError(f"concentration must be positive, got {concentration_ppm!r}")
    n = concentration_ppm * 1e-6 * CARBON_DENSITY_CM3 * 1e6  # per m^3
    return n ** (-1.0 / 3.0)


def nearest_neighbor_coupling(concentration_ppm: float) -> float:
    """Dipolar prefactor mu0 mu^2 hbar / (4 pi r^3) at the typical spacing, in rad/s."""
    r = nearest_neighbor_distance(concentration_ppm)
    return MU0_OVER_4PI * NV_GYROMAGNETIC**2 * HBAR / r**3


def derive_spin_count(g_coll: float, g0: float) -> float:
    """Number of spins N = g_coll^2 / g0^2."""
    if not g0 > 0:
        raise ParameterError(f"g0 must be positive, got {g0!r}")
    return (g_coll / g0) ** 2
