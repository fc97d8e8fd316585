"""Observables extracted from cavity-field time series.

Pulse detection, revival delays, spectra with Lorentzian linewidths,
hole-filling rise fits and spectral-hole profiles.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy import signal, stats
from scipy.optimize import OptimizeWarning, curve_fit

from .ensemble import EnsembleGrid
from .estimators import LorentzianLineFit, SaturatingRiseFit
from .series import TimeSeries

__all__ = [
    "AnalysisError", "FitRejectedError", "FitConvergenceError", "NotFoundError",
    "TimeSeries", "Spectrum", "SpectrumFit", "PulseFeature", "RiseFit", "HoleProfile",
    "demodulate", "power_spectrum", "fit_lorentzian", "sliding_spectrum",
    "detect_pulses", "first_revival_delay", "interpulse_contrast", "fit_rise",
    "hole_profile", "pulse_bandwidths", "linear_trend",
]

FWHM_PER_SIGMA = 2.0 * math.sqrt(2.0 * math.log(2.0))


class AnalysisError(RuntimeError):
    pass


class FitRejectedError(AnalysisError):
    """Input does not contain the feature the fit expects."""


class FitConvergenceError(AnalysisError):
    pass


class NotFoundError(AnalysisError):
    pass


class AliasingError(AnalysisError, ValueError):
    pass


@dataclass
class Spectrum:
    freqs: np.ndarray  # Hz, relative to the frame, ascending
    power: np.ndarray
    resolution: float  # Hz
    t_start: float
    duration: float
    window: str

    @property
    def total_power(self) -> float:
        return float(np.sum(self.power))


@dataclass
class SpectrumFit:
    f_center: float  # Hz
    hwhm: float  # Hz
    amplitude: float
    residual_norm: float
    baseline: float = 0.0
    t_window: float | None = None
    ok: bool = True
    message: str = ""
    resolution: float = math.nan  # Hz, bin spacing of the fitted spectrum

    @property
    def fwhm(self) -> float:
        return 2.0 * self.hwhm

    @property
    def resolution_limited(self) -> bool:
        """True when the fitted line is narrower than one frequency bin."""
        return bool(self.fwhm < self.resolution)

    @property
    def fwhm_bound(self) -> float:
        """Upper bound on the true FWHM: the fit, or the bin spacing if that is larger."""
        return max(self.fwhm, self.resolution)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["hwhm_hz"] = d.pop("hwhm")
        d["fwhm_hz"] = 2.0 * d["hwhm_hz"]
        d["f_center_hz"] = d.pop("f_center")
        d["resolution_hz"] = d.pop("resolution")
        d["resolution_limited"] = self.resolution_limited
        return d


@dataclass
class PulseFeature:
    t_peak: float
    peak_amplitude: float
    fwhm: float
    phase_mean: float
    phase_flatness: float
    index: int = field(default=-1, repr=False)

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass
class RiseFit:
    T: float
    A_inf: float
    residual_norm: float
    T_stderr: float = math.nan
    low_confidence: bool = False

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass
class HoleProfile:
    depth: float
    width: float  # rad/s, full width of the dip at half depth
    center: float  # rad/s
    reference: float


def demodulate(series: TimeSeries, f_if: float) -> TimeSeries:
    """Shift the spectrum by ``-f_if``: a(t) -> a(t) exp(-2 pi i f_if t)."""
    if f_if == 0:
        return series.copy()
    if len(series) > 1 and not series.sample_rate > 2 * abs(f_if):
        raise AliasingError(
            f"sample rate {series.sample_rate:.6g} Hz cannot represent a shift of {f_if:.6g} Hz"
        )
    out = series.copy(a=series.a * np.exp(-2j * np.pi * f_if * series.t))
    out.metadata["demodulation_hz"] = series.metadata.get("demodulation_hz", 0.0) + f_if
    return out


def _window_slice(series: TimeSeries, t_start: float, duration: float) -> slice:
    dt = series.dt
    tol = 1e-6 * dt
    if len(series) < 2 or t_start < series.t[0] - tol or t_start + duration > series.t[-1] + dt + tol:
        raise ValueError(
            f"window [{t_start:.6g}, {t_start + duration:.6g}] s lies outside the series "
            f"[{series.t[0]:.6g}, {series.t[-1]:.6g}] s"
        )
    i0 = int(round((t_start - series.t[0]) / dt))
    n = int(round(duration / dt))
    if n < 2 or i0 + n > len(series):
        raise ValueError("window holds fewer than two samples or runs past the data")
    return slice(i0, i0 + n)


def power_spectrum(series: TimeSeries, t_start: float, duration: float, window: str = "rectangular") -> Spectrum:
    """Power |X_k|^2 / N of the windowed samples in [t_start, t_start + duration).

    With the rectangular window the summed power equals the time-domain
    energy sum |a|^2 of the window.
    """
    sl = _window_slice(series, t_start, duration)
    x = series.a[sl]
    n = x.size
    if window == "rectangular":
        w = np.ones(n)
    elif window == "hann":
        w = np.hanning(n)
    else:
        raise ValueError(f"unknown window {window!r}; use 'rectangular' or 'hann'")
    X = np.fft.fftshift(np.fft.fft(x * w))
    freqs = np.fft.fftshift(np.fft.fftfreq(n, series.dt))
    return Spectrum(freqs, np.abs(X) ** 2 / n, 1.0 / (n * series.dt), float(series.t[sl.start]), n * series.dt, window)


def fit_lorentzian(spectrum: Spectrum, span: float = 25.0, max_nfev: int = 2000) -> SpectrumFit:
    """Fit ``A / (1 + ((f - f0)/hwhm)^2) + baseline`` around the dominant peak.

    Only bins within ``span`` initial half-widths of the peak enter the fit.
    """
    P = np.asarray(spectrum.power, dtype=float)
    f = np.asarray(spectrum.freqs, dtype=float)
    peak = int(np.argmax(P))
    med = float(np.median(P))
    if not P[peak] > 10.0 * med:
        raise FitRejectedError(f"no dominant peak: max {P[peak]:.3g} vs median {med:.3g}")
    model = LorentzianLineFit(span=span, max_nfev=max_nfev)
    try:
        model.fit(f, P)
    except RuntimeError as exc:
        raise FitConvergenceError(str(exc)) from exc
    return SpectrumFit(
        f_center=model.f_center_,
        hwhm=model.hwhm_,
        amplitude=model.amplitude_,
        residual_norm=model.residual_norm_,
        baseline=model.baseline_,
        resolution=spectrum.resolution,
    )


def sliding_spectrum(
    series: TimeSeries,
    window_duration: float,
    stride: float,
    t_first: float | None = None,
    t_last: float | None = None,
    window: str = "rectangular",
) -> list[SpectrumFit]:
    """One Lorentzian fit per window start t_F; failed windows come back with ``ok=False``."""
    t_first = series.t[0] if t_first is None else t_first
    end = series.t[-1] + series.dt
    t_last = end - window_duration if t_last is None else t_last
    out = []
    for t_f in np.arange(t_first, t_last + 1e-9 * stride, stride):
        try:
            fit = fit_lorentzian(power_spectrum(series, t_f, window_duration, window))
        except (AnalysisError, ValueError) as exc:
            fit = SpectrumFit(math.nan, math.nan, math.nan, math.nan, ok=False, message=str(exc))
        fit.t_window = float(t_f)
        out.append(fit)
    return out


def _gaussian(t, amp, t0, sigma):
    return amp * np.exp(-0.5 * ((t - t0) / sigma) ** 2)


def detect_pulses(series: TimeSeries, min_prominence: float = 0.05, min_separation: float = 1e-6) -> list[PulseFeature]:
    """Local maxima of |a| with prominence above ``min_prominence`` times the global maximum.

    Each pulse gets a Gaussian fit over +-2 estimated widths (FWHM) and the
    circular mean / spread of arg a over the samples above half maximum.
    """
    env = series.abs_a
    top = float(env.max()) if env.size else 0.0
    if top <= 0 or env.size < 3:
        return []
    y = env / top
    dt = series.dt
    dist = max(1, int(round(min_separation / dt)))
    peaks, props = signal.find_peaks(y, prominence=min_prominence, distance=dist)
    if not peaks.size:
        return []
    widths, _, left, right = signal.peak_widths(y, peaks, rel_height=0.5)
    widths = widths * dt
    t = series.t
    out = []
    for idx, w_est, l_ip, r_ip in zip(peaks, widths, left, right):
        w_est = max(w_est, 2 * dt)
        lo = np.searchsorted(t, t[idx] - 2 * w_est)
        hi = np.searchsorted(t, t[idx] + 2 * w_est, side="right")
        fwhm = w_est
        if hi - lo >= 4:
            tt = t[lo:hi] - t[idx]
            try:
                with warnings.catch_warnings():
                    # only the point estimate is used; covariance warnings are noise here
                    warnings.simplefilter("ignore", OptimizeWarning)
                    popt, _ = curve_fit(
                        _gaussian, tt / w_est, y[lo:hi], p0=(y[idx], 0.0, 1.0 / FWHM_PER_SIGMA), maxfev=2000
                    )
                cand = abs(popt[2]) * FWHM_PER_SIGMA * w_est
                if np.isfinite(cand) and 0 < cand < 10 * w_est:
                    fwhm = cand
            except (RuntimeError, ValueError):
                pass
        # samples above half maximum on either side of the peak
        phase = np.angle(series.a[int(np.ceil(l_ip)) : int(np.floor(r_ip)) + 1])
        mean = float(stats.circmean(phase, high=np.pi, low=-np.pi))
        spread = float(stats.circstd(phase, high=np.pi, low=-np.pi)) if phase.size > 1 else 0.0
        out.append(PulseFeature(float(t[idx]), float(env[idx]), float(fwhm), mean, spread, int(idx)))
    return out


def first_revival_delay(
    series: TimeSeries | list[PulseFeature],
    min_gap: float = 5e-6,
    **detect_kw,
) -> float:
    """Peak-to-peak delay from the initial burst to the first revival.

    The initial burst is the first detected pulse, together with any ringing
    that follows it at spacings shorter than ``min_gap``; the revival is the
    first pulse after a quiescent stretch of at least ``min_gap``.
    """
    pulses = series if isinstance(series, list) else detect_pulses(series, **detect_kw)
    if len(pulses) < 2:
        raise NotFoundError(f"need at least two pulses, found {len(pulses)}")
    for prev, cur in zip(pulses, pulses[1:]):
        if cur.t_peak - prev.t_peak >= min_gap:
            return cur.t_peak - pulses[0].t_peak
    raise NotFoundError(f"no pulse follows a quiescent gap of {min_gap:.3g} s")


def revival_pulses(pulses: list[PulseFeature], min_gap: float = 5e-6) -> list[PulseFeature]:
    """Pulses from the first revival onward (see :func:`first_revival_delay`)."""
    for i in range(1, len(pulses)):
        if pulses[i].t_peak - pulses[i - 1].t_peak >= min_gap:
            return pulses[i:]
    return []


def group_events(pulses: list[PulseFeature], min_gap: float = 5e-6) -> list[PulseFeature]:
    """Collapse pulses closer than ``min_gap`` to their predecessor into one event.

    Each event is represented by its largest pulse, so Rabi ringing lobes
    are folded into the pulse they follow.
    """
    events: list[list[PulseFeature]] = []
    for i, p in enumerate(pulses):
        if i and p.t_peak - pulses[i - 1].t_peak < min_gap:
            events[-1].append(p)
        else:
            events.append([p])
    return [max(e, key=lambda p: p.peak_amplitude) for e in events]


def interpulse_contrast(series: TimeSeries, pulses: list[PulseFeature]) -> np.ndarray:
    """For consecutive pulses, min |a| between them over the smaller of the two peaks.

    Values near 1 mean the pulses have merged into continuous emission.
    """
    env = series.abs_a
    out = []
    for p, q in zip(pulses, pulses[1:]):
        trough = env[p.index : q.index + 1].min()
        out.append(trough / min(p.peak_amplitude, q.peak_amplitude))
    return np.array(out)


def fit_rise(hold_times, amplitudes) -> RiseFit:
    """Fit A(tau) = A_inf (1 - exp(-tau / T)).

    Flags ``low_confidence`` when the data do not reach ~2T or T is poorly
    constrained (relative standard error above 25 %).
    """
    model = SaturatingRiseFit().fit(hold_times, amplitudes)
    tau = np.asarray(hold_times, dtype=float)
    rel = model.T_stderr_ / model.T_ if model.T_ > 0 else math.inf
    low = bool(tau.max() < 2 * model.T_ or not rel < 0.25)
    return RiseFit(model.T_, model.A_inf_, model.residual_norm_, model.T_stderr_, low)


def hole_profile(
    sigma_z: np.ndarray,
    grid: EnsembleGrid | np.ndarray,
    W: float | None = None,
    noise_floor: float = 1e-3,
) -> HoleProfile:
    """Depth, full width and center of the deepest dip in an inversion snapshot.

    The reference level is the mean inversion of packets farther than 0.75 W
    from the grid center.
    """
    sz = np.asarray(sigma_z, dtype=float)
    if isinstance(grid, EnsembleGrid):
        det = grid.detunings
        center = grid.center
        W = grid.W if W is None else W
    else:
        det = np.asarray(grid, dtype=float)
        center = 0.5 * (det[0] + det[-1])
    if W is None or not np.isfinite(W):
        raise ValueError("the distribution width W is required")
    if det.shape != sz.shape:
        raise ValueError(f"snapshot has {sz.size} packets, detuning axis has {det.size}")
    outer = np.abs(det - center) > 0.75 * W
    if not outer.any():
        raise ValueError("grid does not extend beyond 0.75 W; no reference packets")
    ref = float(sz[outer].mean())
    i = int(np.argmin(sz))
    depth = ref - float(sz[i])
    if depth <= noise_floor:
        raise NotFoundError(f"no dip deeper than {noise_floor}")
    half = ref - depth / 2
    left = _crossing(det, sz, i, half, -1)
    right = _crossing(det, sz, i, half, +1)
    return HoleProfile(depth, right - left, float(det[i]), ref)


def _crossing(x, y, i, level, step):
    j = i
    while 0 <= j + step < y.size and y[j + step] < level:
        j += step
    k = j + step
    if not 0 <= k < y.size:
        return float(x[j])
    return float(x[j] + (level - y[j]) * (x[k] - x[j]) / (y[k] - y[j]))


def pulse_bandwidths(series: TimeSeries, pulse: PulseFeature, pad: int = 16) -> dict:
    """Two bandwidth estimates for one pulse, in Hz (power-spectrum FWHM).

    ``transform_limited_fwhm_hz`` follows from the fitted Gaussian duration;
    ``spectral_fwhm_hz`` is read off the zero-padded spectrum of the samples
    within +-2 FWHM of the peak.
    """
    transform = 2.0 * math.sqrt(2.0) * math.log(2.0) / (math.pi * pulse.fwhm)
    m = np.abs(series.t - pulse.t_peak) <= 2 * pulse.fwhm
    x = series.a[m]
    nfft = max(pad * x.size, 64)
    P = np.abs(np.fft.fftshift(np.fft.fft(x, nfft))) ** 2
    f = np.fft.fftshift(np.fft.fftfreq(nfft, series.dt))
    k = int(np.argmax(P))
    w = signal.peak_widths(P, [k], rel_height=0.5)[0][0] * (f[1] - f[0])
    return {"transform_limited_fwhm_hz": transform, "spectral_fwhm_hz": float(w)}


def linear_trend(x, y) -> dict:
    """Least-squares line with coefficient of determination."""
    res = stats.linregress(np.asarray(x, float), np.asarray(y, float))
    return {"slope": float(res.slope), "intercept": float(res.intercept), "r2": float(res.rvalue**2)}
