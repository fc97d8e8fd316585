"""Semiclassical Maxwell-Bloch dynamics with spectral hole filling.

The frame rotates at the cavity frequency. Per packet j::

    da/dt   = -(kappa + i Dc) a + g N sum_j rho_j s_j + eta_eff(t)
    ds_j/dt = -(gamma + i (D_j + offset(t))) s_j + g a z_j
    dz_j/dt = -4 g Re(a* s_j) + J (p - z_j),      p = sum_k rho_k z_k

with s = <sigma_->, z = <sigma_z> and g = g_coll / sqrt(N).
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import TYPE_CHECKING, Iterable, Sequence

import numpy as np
from scipy.integrate import DOP853, RK45

from .ensemble import EnsembleGrid, ParameterError, PhysicalParams
from .series import TimeSeries

if TYPE_CHECKING:  # pragma: no cover
    from .protocol import Scenario

log = logging.getLogger(__name__)

SOLVERS = {"RK45": RK45, "DOP853": DOP853}


class IntegrationError(RuntimeError):
    """The integrator could not meet its tolerances; ``state`` is the last good state."""

    def __init__(self, message, state=None):
        super().__init__(message)
        self.state = state

    def diagnostic(self) -> dict:
        out = {"error": type(self).__name__, "message": str(self)}
        if self.state is not None:
            s = self.state
            out.update(
                t=s.t,
                abs_a=abs(s.a),
                max_abs_sigma_z=float(np.max(np.abs(s.sigma_z))),
                finite=bool(np.all(np.isfinite(s.sigma_z)) and np.all(np.isfinite(s.sigma_minus))),
            )
        return out


class StiffnessError(IntegrationError):
    """Step size underflow."""


class NonFiniteStateError(IntegrationError):
    """NaN or inf in the state vector."""


@dataclass
class SystemState:
    a: complex
    sigma_minus: np.ndarray
    sigma_z: np.ndarray
    t: float = 0.0

    def __post_init__(self):
        self.a = complex(self.a)
        self.sigma_minus = np.array(self.sigma_minus, dtype=complex, ndmin=1)
        self.sigma_z = np.array(self.sigma_z, dtype=float, ndmin=1)
        if self.sigma_minus.shape != self.sigma_z.shape or self.sigma_z.ndim != 1:
            raise ValueError(
                f"sigma_minus {self.sigma_minus.shape} and sigma_z {self.sigma_z.shape} must match"
            )

    @classmethod
    def ground(cls, n_packets: int) -> "SystemState":
        return cls(0j, np.zeros(n_packets, complex), -np.ones(n_packets))

    @property
    def n_packets(self) -> int:
        return self.sigma_z.size

    def bloch_norm(self) -> np.ndarray:
        """z_j^2 + 4|s_j|^2 per packet; equals 1 for a pure spin state."""
        return self.sigma_z**2 + 4.0 * np.abs(self.sigma_minus) ** 2

    def is_physical(self, eps: float = 1e-6) -> bool:
        return bool(np.all(np.abs(self.sigma_z) <= 1 + eps) and np.all(self.bloch_norm() <= 1 + eps))

    def mean_inversion(self, grid: EnsembleGrid) -> float:
        return float(np.dot(grid.weights, self.sigma_z))

    def pack(self) -> np.ndarray:
        return np.concatenate(([self.a], self.sigma_minus, self.sigma_z.astype(complex)))

    @classmethod
    def unpack(cls, y: np.ndarray, t: float = 0.0) -> "SystemState":
        n = (y.size - 1) // 2
        return cls(y[0], y[1 : 1 + n].copy(), y[1 + n :].real.copy(), t)

    def copy(self) -> "SystemState":
        return SystemState(self.a, self.sigma_minus.copy(), self.sigma_z.copy(), self.t)


@dataclass(frozen=True)
class DriveSegment:
    """Coherent cavity drive ``amplitude * exp(-i frequency_offset t)`` on [t_start, t_end)."""

    t_start: float
    t_end: float
    amplitude: float
    frequency_offset: float = 0.0
    kind = "drive"

    def __post_init__(self):
        if not self.t_end > self.t_start:
            raise ParameterError(f"drive segment needs t_end > t_start, got [{self.t_start}, {self.t_end}]")

    def active(self, t0, t1) -> bool:
        return self.t_start <= t0 and t1 <= self.t_end

    def field(self, t):
        return self.amplitude * np.exp(-1j * self.frequency_offset * t)


@dataclass(frozen=True)
class HoldSegment:
    """Uniform spin detuning offset on [t_start, t_end), optionally ramped in and out."""

    t_start: float
    t_end: float
    detuning_offset: float
    ramp: float = 0.0
    kind = "hold"

    def __post_init__(self):
        if not self.t_end > self.t_start:
            raise ParameterError(f"hold segment needs t_end > t_start, got [{self.t_start}, {self.t_end}]")
        if self.ramp < 0 or 2 * self.ramp > self.t_end - self.t_start:
            raise ParameterError("ramp must be non-negative and fit twice inside the hold")

    def active(self, t0, t1) -> bool:
        return self.t_start <= t0 and t1 <= self.t_end

    def breakpoints(self) -> list[float]:
        pts = [self.t_start, self.t_end]
        if self.ramp > 0:
            pts += [self.t_start + self.ramp, self.t_end - self.ramp]
        return pts

    def offset(self, t) -> float:
        if self.ramp == 0:
            return self.detuning_offset
        frac = min((t - self.t_start) / self.ramp, (self.t_end - t) / self.ramp, 1.0)
        return self.detuning_offset * max(frac, 0.0)


@dataclass
class DerivativeView:
    da: complex
    dsigma_minus: np.ndarray
    dsigma_z: np.ndarray


def _derivatives(a, sm, sz, detunings, weights, g, kappa_c, gamma, J, eta_eff):
    """Right-hand side on raw arrays; shared by :func:`rhs` and the integrator."""
    n = sz.size
    da = -kappa_c * a + g * n * np.dot(weights, sm) + eta_eff
    dsm = -(gamma + 1j * detunings) * sm + (g * a) * sz
    p = np.dot(weights, sz)
    dsz = -4.0 * g * (np.conj(a) * sm).real
    if J:
        dsz += J * (p - sz)
    return da, dsm, dsz


def _as_list(seg) -> list:
    if seg is None:
        return []
    if isinstance(seg, (DriveSegment, HoldSegment)):
        return [seg]
    return list(seg)


def rhs(
    state: SystemState,
    grid: EnsembleGrid,
    params: PhysicalParams,
    drive: DriveSegment | Sequence[DriveSegment] | None = None,
    hold: HoldSegment | None = None,
    delta_c: float = 0.0,
) -> DerivativeView:
    """Time derivatives at ``state`` with the given drive and hold active."""
    if state.n_packets != grid.n_packets:
        raise ValueError(f"state has {state.n_packets} packets, grid has {grid.n_packets}")
    if not (np.isfinite(state.a) and np.all(np.isfinite(state.sigma_minus)) and np.all(np.isfinite(state.sigma_z))):
        raise NonFiniteStateError("non-finite entry in state", state)
    t = state.t
    eta = params.eta + sum(d.field(t) for d in _as_list(drive))
    det = grid.detunings
    if hold is not None:
        det = det + hold.offset(t)
    da, dsm, dsz = _derivatives(
        state.a, state.sigma_minus, state.sigma_z, det, grid.weights, grid.coupling,
        params.kappa + 1j * delta_c, params.gamma_perp, params.J_fill, eta,
    )
    return DerivativeView(complex(da), dsm, dsz)


def prepare_inversion(state: SystemState | int, p0: float, seed_coherence: float = 1e-6) -> SystemState:
    """Uniform inversion ``p0`` with a small real coherence seed and an empty cavity."""
    if abs(p0) > 1:
        raise ParameterError(f"|p0| must not exceed 1, got {p0!r}")
    if seed_coherence < 0:
        raise ParameterError("seed_coherence must be non-negative")
    n = state if isinstance(state, (int, np.integer)) else state.n_packets
    t = 0.0 if isinstance(state, (int, np.integer)) else state.t
    return SystemState(0j, np.full(n, seed_coherence, complex), np.full(n, float(p0)), t)


def lorentzian(x, width):
    """Unit-peak Lorentzian with half-width at half-maximum ``width``."""
    return 1.0 / (1.0 + (np.asarray(x) / width) ** 2)


def apply_instantaneous_hole(
    state: SystemState, grid: EnsembleGrid, center: float, width: float, depth: float
) -> SystemState:
    """Lower each inversion by ``depth * L(D_j - center)``, clamped to [-1, 1]."""
    if not 0 <= depth <= 2:
        raise ParameterError(f"depth must lie in [0, 2], got {depth!r}")
    if not width > 0:
        raise ParameterError(f"width must be positive, got {width!r}")
    if depth == 0:
        return state.copy()
    sz = state.sigma_z - depth * lorentzian(grid.detunings - center, width)
    return SystemState(state.a, state.sigma_minus.copy(), np.clip(sz, -1.0, 1.0), state.t)


def instantaneous_threshold(state: SystemState, grid: EnsembleGrid, params: PhysicalParams) -> float:
    """Weighted instability measure sum_j rho_j N C_j z_j; the ensemble is unstable above 1."""
    w = grid.cooperativity_weights(params.kappa, params.gamma_perp)
    return float(np.dot(w, state.sigma_z))


@dataclass(frozen=True)
class SolverOptions:
    rtol: float = 1e-8
    atol: float = 1e-10
    method: str = "RK45"
    max_step: float = math.inf

    def __post_init__(self):
        if self.method not in SOLVERS:
            raise ParameterError(f"unknown solver {self.method!r}; choose from {sorted(SOLVERS)}")
        if not (self.rtol > 0 and self.atol > 0):
            raise ParameterError("tolerances must be positive")

    def scaled(self, factor: float) -> "SolverOptions":
        return SolverOptions(self.rtol * factor, self.atol * factor, self.method, self.max_step)


@dataclass(frozen=True)
class NoiseSpec:
    """Stochastic complex cavity drive added to eta (off unless configured).

    Complex Gaussian samples of standard deviation ``amplitude`` on a grid of
    spacing ``correlation_time``, linearly interpolated in time.
    """

    amplitude: float
    correlation_time: float = 10e-9
    seed: int = 0

    def sampler(self, t_end: float):
        n = int(math.ceil(t_end / self.correlation_time)) + 2
        rng = np.random.default_rng(self.seed)
        xi = (rng.standard_normal(n) + 1j * rng.standard_normal(n)) * (self.amplitude / math.sqrt(2))
        grid = np.arange(n) * self.correlation_time

        def noise(t):
            return np.interp(t, grid, xi.real) + 1j * np.interp(t, grid, xi.imag)

        return noise


@dataclass
class _Recorder:
    """Collects uniform output samples and reduced traces while stepping."""

    times: np.ndarray
    grid: EnsembleGrid
    coop_weights: np.ndarray
    stride: int
    a: list = field(default_factory=list)
    p: list = field(default_factory=list)
    pbarC: list = field(default_factory=list)
    snaps: list = field(default_factory=list)
    snap_t: list = field(default_factory=list)
    next: int = 0

    @property
    def done(self):
        return self.next >= self.times.size

    def emit(self, ts, ys):
        """Record states ``ys`` (shape (1+2N, k)) at times ``ts``."""
        n = self.grid.n_packets
        sz = ys[1 + n :].real
        self.a.append(ys[0])
        self.p.append(self.grid.weights @ sz)
        self.pbarC.append(self.coop_weights @ sz)
        if self.stride:
            for k in range(ts.size):
                if (self.next + k) % self.stride == 0:
                    self.snaps.append(sz[:, k].copy())
                    self.snap_t.append(ts[k])
        self.next += ts.size

    def upto(self, t, inclusive=True):
        """Indices of pending samples at or before ``t``."""
        stop = np.searchsorted(self.times, t, side="right" if inclusive else "left")
        return self.next, max(stop, self.next)


def sample_times(t_end: float, output_rate: float) -> np.ndarray:
    if not output_rate > 0:
        raise ParameterError("output_rate must be positive")
    n = int(math.floor(t_end * output_rate * (1 + 1e-12))) + 1
    return np.arange(n) / output_rate


def initial_state(scenario: "Scenario", grid: EnsembleGrid) -> SystemState:
    init = scenario.initial
    state = prepare_inversion(grid.n_packets, init.p0, init.seed_coherence)
    if init.hole is not None:
        h = init.hole
        state = apply_instantaneous_hole(state, grid, h.center, h.width, h.depth)
    return state


def integrate(
    scenario: "Scenario",
    grid: EnsembleGrid,
    params: PhysicalParams,
    output_rate: float | None = None,
    solver: SolverOptions | None = None,
) -> TimeSeries:
    """Integrate ``scenario`` and sample the trajectory uniformly.

    The integration restarts at every segment boundary so control
    discontinuities fall on step edges. ``output_rate`` and ``solver`` default
    to the scenario's record and solver settings.
    """
    solver = solver or scenario.solver
    record = scenario.record
    output_rate = output_rate or record.output_rate
    t_end = float(scenario.t_end)
    times = sample_times(t_end, output_rate)
    rec = _Recorder(times, grid, grid.cooperativity_weights(params.kappa, params.gamma_perp), record.snapshot_stride)

    state = initial_state(scenario, grid)
    y = state.pack()
    rec.emit(times[:1], y[:, None])

    drives = [s for s in scenario.segments if isinstance(s, DriveSegment)]
    holds = [s for s in scenario.segments if isinstance(s, HoldSegment)]
    cuts = {0.0, t_end}
    for s in drives:
        cuts.update((s.t_start, s.t_end))
    for h in holds:
        cuts.update(h.breakpoints())
    cuts = sorted(c for c in cuts if 0.0 <= c <= t_end)
    noise = scenario.noise.sampler(t_end) if scenario.noise is not None else None
    method = SOLVERS[solver.method]
    n = grid.n_packets
    steps = 0

    for t0, t1 in zip(cuts[:-1], cuts[1:]):
        active_drives = [d for d in drives if d.active(t0, t1)]
        active_holds = [h for h in holds if h.active(t0, t1)]
        fun = _segment_function(grid, params, active_drives, active_holds, noise)
        ode = method(fun, t0, y, t1, rtol=solver.rtol, atol=solver.atol, max_step=solver.max_step)
        while ode.status == "running":
            msg = ode.step()
            steps += 1
            if ode.status == "failed":
                last = SystemState.unpack(ode.y, ode.t)
                if "step size" in (msg or ""):
                    raise StiffnessError(f"step size underflow at t={ode.t:.6e}s: {msg}", last)
                raise IntegrationError(f"integration failed at t={ode.t:.6e}s: {msg}", last)
            if not np.all(np.isfinite(ode.y)):
                raise NonFiniteStateError(f"non-finite state at t={ode.t:.6e}s", SystemState.unpack(ode.y_old, ode.t_old))
            i0, i1 = rec.upto(ode.t)
            if i1 > i0:
                ts = times[i0:i1]
                ys = ode.dense_output()(ts).reshape(y.size, -1)
                hit = ts == ode.t
                if hit.any():
                    ys[:, hit] = ode.y[:, None]
                rec.emit(ts, ys)
        y = ode.y
    log.debug("integrated %s: %d steps, %d samples", scenario.name, steps, rec.next)

    snaps = np.array(rec.snaps) if rec.stride else None
    return TimeSeries(
        t=times[: rec.next],
        a=np.concatenate(rec.a),
        p=np.concatenate(rec.p),
        pbarC=np.concatenate(rec.pbarC),
        sigma_z=snaps,
        snapshot_t=np.array(rec.snap_t) if rec.stride else None,
        detunings=grid.detunings.copy() if rec.stride else None,
        metadata={
            "scenario": scenario.name,
            "rtol": solver.rtol,
            "atol": solver.atol,
            "method": solver.method,
            "steps": steps,
            "output_rate": output_rate,
            "final_state": SystemState.unpack(y, t_end),
        },
    )


def _segment_function(grid, params, drives, holds, noise):
    n = grid.n_packets
    det0 = grid.detunings
    weights = grid.weights
    g = grid.coupling
    kappa_c = complex(params.kappa)
    gamma = params.gamma_perp
    J = params.J_fill
    eta0 = params.eta
    static_offset = all(h.ramp == 0 for h in holds)
    det_static = det0 + sum(h.detuning_offset for h in holds) if static_offset else None

    def fun(t, y):
        a = y[0]
        sm = y[1 : 1 + n]
        sz = y[1 + n :].real
        eta = eta0
        for d in drives:
            eta = eta + d.field(t)
        if noise is not None:
            eta = eta + noise(t)
        det = det_static if static_offset else det0 + sum(h.offset(t) for h in holds)
        da, dsm, dsz = _derivatives(a, sm, sz, det, weights, g, kappa_c, gamma, J, eta)
        out = np.empty_like(y)
        out[0] = da
        out[1 : 1 + n] = dsm
        out[1 + n :] = dsz
        return out

    return fun


def run_until(state: SystemState, grid: EnsembleGrid, params: PhysicalParams, t_end: float,
              solver: SolverOptions | None = None, drives: Iterable[DriveSegment] = (),
              holds: Iterable[HoldSegment] = ()) -> SystemState:
    """Advance ``state`` to ``t_end`` with fixed controls and return the final state."""
    solver = solver or SolverOptions()
    fun = _segment_function(grid, params, list(drives), list(holds), None)
    ode = SOLVERS[solver.method](fun, state.t, state.pack(), t_end, rtol=solver.rtol, atol=solver.atol,
                                 max_step=solver.max_step)
    while ode.status == "running":
        msg = ode.step()
        if ode.status == "failed":
            raise IntegrationError(msg, SystemState.unpack(ode.y, ode.t))
    return SystemState.unpack(ode.y, ode.t)
