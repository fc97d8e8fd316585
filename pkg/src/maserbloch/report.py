"""Analysis specs: a small mapping of requested analyses to a JSON-ready summary.

Recognised sections (all optional; frequencies in Hz, times in seconds)::

    demodulate:       {f_if: 0.0}
    pulses:           {min_prominence: 0.05, min_separation: 1.0e-6, bandwidths: false}
    revival_delay:    {min_gap: 5.0e-6, min_prominence: 0.05, min_separation: 1.0e-6}
    spectrum:         {t_start: 0.0, duration: 200.0e-6, window: rectangular, fit: true}
    sliding_spectrum: {window_duration: 200.0e-6, stride: 20.0e-6, t_first: null, t_last: null,
                       window: rectangular}
    hole_profile:     {time: null, W: null, noise_floor: 1.0e-3}

An empty spec yields the metadata block only.
"""
from __future__ import annotations

import numpy as np

from . import __version__, analysis
from .ensemble import TWO_PI
from .series import TimeSeries

_SECTIONS = {
    "demodulate": {"f_if"},
    "pulses": {"min_prominence", "min_separation", "bandwidths"},
    "revival_delay": {"min_gap", "min_prominence", "min_separation"},
    "spectrum": {"t_start", "duration", "window", "fit"},
    "sliding_spectrum": {"window_duration", "stride", "t_first", "t_last", "window"},
    "hole_profile": {"time", "W", "noise_floor"},
}


class SpecError(ValueError):
    """Malformed analysis spec."""


def validate_spec(spec: dict | None) -> dict:
    spec = dict(spec or {})
    for key, section in spec.items():
        if key not in _SECTIONS:
            raise SpecError(f"unknown analysis section {key!r}; expected one of {sorted(_SECTIONS)}")
        if section is None:
            spec[key] = section = {}
        if not isinstance(section, dict):
            raise SpecError(f"section {key!r} must be a mapping")
        extra = set(section) - _SECTIONS[key]
        if extra:
            raise SpecError(f"unknown key(s) {sorted(extra)} in section {key!r}")
    if "spectrum" in spec and "duration" not in spec["spectrum"]:
        raise SpecError("section 'spectrum' needs 'duration'")
    if "sliding_spectrum" in spec and not {"window_duration", "stride"} <= set(spec["sliding_spectrum"]):
        raise SpecError("section 'sliding_spectrum' needs 'window_duration' and 'stride'")
    return spec


def analyze_series(series: TimeSeries, spec: dict | None, W_hz: float | None = None) -> dict:
    """Run the analyses named in ``spec`` on ``series``.

    ``W_hz`` is the inhomogeneous width used as the hole-profile reference
    when the spec does not give one. Analysis errors propagate.
    """
    spec = validate_spec(spec)
    out = {
        "metadata": {
            "tool": "maserbloch",
            "version": __version__,
            "n_samples": len(series),
            "t_first_s": float(series.t[0]) if len(series) else None,
            "sample_rate_hz": float(series.sample_rate) if len(series) > 1 else None,
            "source": series.metadata.get("source"),
        }
    }
    if "demodulate" in spec:
        f_if = float(spec["demodulate"].get("f_if", 0.0))
        series = analysis.demodulate(series, f_if)
        out["metadata"]["demodulation_hz"] = f_if

    if "pulses" in spec:
        s = spec["pulses"]
        pulses = analysis.detect_pulses(series, s.get("min_prominence", 0.05), s.get("min_separation", 1e-6))
        rows = []
        for p in pulses:
            d = p.to_dict()
            if s.get("bandwidths"):
                d.update(analysis.pulse_bandwidths(series, p))
            rows.append(d)
        out["pulses"] = rows

    if "revival_delay" in spec:
        s = spec["revival_delay"]
        pulses = analysis.detect_pulses(series, s.get("min_prominence", 0.05), s.get("min_separation", 1e-6))
        out["first_revival_delay"] = analysis.first_revival_delay(pulses, s.get("min_gap", 5e-6))

    if "spectrum" in spec:
        s = spec["spectrum"]
        spec_ = analysis.power_spectrum(series, s.get("t_start", float(series.t[0])), s["duration"],
                                        s.get("window", "rectangular"))
        entry = {"resolution_hz": spec_.resolution, "t_start": spec_.t_start, "duration": spec_.duration,
                 "window": spec_.window, "freqs_hz": spec_.freqs, "power": spec_.power}
        if s.get("fit", True):
            entry["fit"] = analysis.fit_lorentzian(spec_).to_dict()
        out["spectrum"] = entry

    if "sliding_spectrum" in spec:
        s = spec["sliding_spectrum"]
        fits = analysis.sliding_spectrum(series, s["window_duration"], s["stride"], s.get("t_first"),
                                         s.get("t_last"), s.get("window", "rectangular"))
        out["sliding_spectrum"] = [f.to_dict() for f in fits]

    if "hole_profile" in spec:
        s = spec["hole_profile"]
        if series.sigma_z is None:
            raise analysis.AnalysisError("hole_profile requested but no inversion snapshots were given")
        W = s.get("W", W_hz)
        if W is None:
            raise analysis.AnalysisError("hole_profile needs the distribution width W (Hz)")
        k = -1 if s.get("time") is None else int(np.argmin(np.abs(series.snapshot_t - s["time"])))
        hp = analysis.hole_profile(series.sigma_z[k], series.detunings, TWO_PI * W, s.get("noise_floor", 1e-3))
        out["hole_profile"] = {
            "snapshot_t": float(series.snapshot_t[k]),
            "depth": hp.depth,
            "fwhm_hz": hp.width / TWO_PI,
            "center_hz": hp.center / TWO_PI,
            "reference": hp.reference,
        }
    return out

