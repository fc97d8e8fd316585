"""Sampled cavity-field trajectories."""
from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np


@dataclass(eq=False)
class TimeSeries:
    """Uniformly sampled complex cavity amplitude with optional derived traces.

    ``sigma_z`` holds inversion snapshots with shape (n_snapshots, N_rho),
    taken at ``snapshot_t``; ``detunings`` (rad/s) labels its columns.
    """

    t: np.ndarray
    a: np.ndarray
    p: np.ndarray | None = None
    pbarC: np.ndarray | None = None
    sigma_z: np.ndarray | None = None
    snapshot_t: np.ndarray | None = None
    detunings: np.ndarray | None = None
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        self.t = np.asarray(self.t, dtype=float)
        self.a = np.asarray(self.a, dtype=complex)
        if self.t.ndim != 1 or self.a.shape != self.t.shape:
            raise ValueError("t and a must be 1-d arrays of equal length")
        for name in ("p", "pbarC"):
            val = getattr(self, name)
            if val is not None:
                val = np.asarray(val, dtype=float)
                if val.shape != self.t.shape:
                    raise ValueError(f"{name} length {val.shape} does not match t {self.t.shape}")
                setattr(self, name, val)
        if self.sigma_z is not None:
            self.sigma_z = np.atleast_2d(np.asarray(self.sigma_z, dtype=float))
            self.snapshot_t = np.asarray(self.snapshot_t, dtype=float)
            if self.snapshot_t.shape != (self.sigma_z.shape[0],):
                raise ValueError("snapshot_t must have one entry per sigma_z row")
            if self.detunings is not None and np.shape(self.detunings) != (self.sigma_z.shape[1],):
                raise ValueError("detunings must have one entry per sigma_z column")
        if self.t.size > 1:
            dt = np.diff(self.t)
            if np.any(dt <= 0):
                raise ValueError("sample times must be strictly increasing")
            if not np.allclose(dt, dt[0], rtol=1e-6, atol=0):
                raise ValueError("sample times must be uniformly spaced")

    def __len__(self):
        return self.t.size

    @property
    def dt(self) -> float:
        if self.t.size < 2:
            return float("nan")
        return float((self.t[-1] - self.t[0]) / (self.t.size - 1))

    @property
    def sample_rate(self) -> float:
        return 1.0 / self.dt

    @property
    def abs_a(self) -> np.ndarray:
        return np.abs(self.a)

    def copy(self, **changes) -> "TimeSeries":
        changes.setdefault("metadata", dict(self.metadata))
        return replace(self, **changes)

    def between(self, t_start: float, t_stop: float) -> "TimeSeries":
        """Sub-series with ``t_start <= t <= t_stop``."""
        m = (self.t >= t_start) & (self.t <= t_stop)
        kw = dict(t=self.t[m], a=self.a[m])
        if self.p is not None:
            kw["p"] = self.p[m]
        if self.pbarC is not None:
            kw["pbarC"] = self.pbarC[m]
        if self.sigma_z is not None:
            s = (self.snapshot_t >= t_start) & (self.snapshot_t <= t_stop)
            kw.update(sigma_z=self.sigma_z[s], snapshot_t=self.snapshot_t[s])
        return self.copy(**kw)

    def snapshot_at(self, t: float) -> tuple[float, np.ndarray]:
        """Inversion snapshot nearest to time ``t``."""
        if self.sigma_z is None or not len(self.snapshot_t):
            raise ValueError("series carries no sigma_z snapshots")
        i = int(np.argmin(np.abs(self.snapshot_t - t)))
        return float(self.snapshot_t[i]), self.sigma_z[i]
