"""Acceptance criteria 1-10, one test each; every test prints a PASS/FAIL line."""
import math
import time

import numpy as np
import pytest

from maserbloch import analysis, preset, run
from maserbloch.analysis import (
    detect_pulses,
    first_revival_delay,
    fit_lorentzian,
    fit_rise,
    group_events,
    interpulse_contrast,
    power_spectrum,
    revival_pulses,
)
from maserbloch.dynamics import SolverOptions, SystemState, integrate, prepare_inversion, run_until
from maserbloch.ensemble import (
    TWO_PI,
    discretize,
    ensemble_cooperativity,
    nearest_neighbor_coupling,
    nearest_neighbor_distance,
    paper_params,
    q_gaussian_density,
)
from maserbloch.protocol import Preparation, Record, Scenario, run_sweep, spearman
from maserbloch.series import TimeSeries


def test_1_static_parameters(verdict):
    t0 = time.perf_counter()
    p = paper_params()
    coop = ensemble_cooperativity(discretize(p), p)
    gamma_mhz = coop.Gamma / TWO_PI / 1e6
    ok = 12 <= coop.C <= 16 and 3.1 <= gamma_mhz <= 4.1
    verdict(1, "static parameters", ok, f"C = {coop.C:.3f} in [12, 16], Gamma/2pi = {gamma_mhz:.3f} MHz in [3.1, 4.1]",
            time.perf_counter() - t0, 1)


def test_2_dipole_estimator(verdict):
    t0 = time.perf_counter()
    r = nearest_neighbor_distance(6.0)
    J_khz = nearest_neighbor_coupling(6.0) / TWO_PI / 1e3
    r_ok = abs(r / 10e-9 - 1) <= 0.05
    J_ok = abs(J_khz / 52.0 - 1) <= 0.05
    verdict(2, "dipole estimator", r_ok and J_ok,
            f"r = {r * 1e9:.3f} nm ({'ok' if r_ok else 'out'} of 10 nm +-5%), "
            f"J/2pi = {J_khz:.2f} kHz ({'ok' if J_ok else 'out'} of 52 kHz +-5%, deviation {100 * (J_khz / 52 - 1):+.2f}%)",
            time.perf_counter() - t0, 1)


def test_3_superradiant_burst(verdict):
    t0 = time.perf_counter()
    s = run(preset("sr_decay"))
    p = paper_params()
    drive_level = p.eta / p.kappa
    k = int(np.argmax(s.abs_a))
    ratio = s.abs_a[k] / drive_level
    # ringing lobes: separation below the Rabi half-period, phase flips by pi between lobes
    lobes = [q for q in detect_pulses(s, min_prominence=0.05, min_separation=0.2e-6) if q.index > k]
    damped = 0
    prev_amp, prev_phase = s.abs_a[k], float(np.angle(s.a[k]))
    for q in lobes:
        flipped = abs(abs(math.remainder(q.phase_mean - prev_phase, TWO_PI)) - math.pi) < 0.1
        if not (q.peak_amplitude < prev_amp and flipped):
            break
        damped += 1
        prev_amp, prev_phase = q.peak_amplitude, q.phase_mean
    crossed = s.pbarC[0] > 1 and s.pbarC[k:].min() < 1
    ok = ratio > 1e3 and damped >= 2 and crossed
    verdict(3, "superradiant burst", ok,
            f"peak |a| = {s.abs_a[k]:.3f} at {s.t[k] * 1e6:.2f} us = {ratio:.3g} x drive level; "
            f"{damped} damped post-peak oscillations; pbarC {s.pbarC[0]:.2f} -> {s.pbarC[k:].min():.2f}",
            time.perf_counter() - t0, 30)


def _revival_structure(series, min_gap=5e-6):
    pulses = detect_pulses(series)
    delay = first_revival_delay(pulses, min_gap)
    revivals = revival_pulses(pulses, min_gap)
    # later pulses are small next to the initial burst, so detect them relative to the revival phase
    tail = series.between(revivals[0].t_peak - min_gap / 2, series.t[-1])
    # ringing lobes belong to the revival they follow
    tail_pulses = group_events(detect_pulses(tail, min_prominence=0.01), min_gap)
    contrast = interpulse_contrast(tail, tail_pulses)
    return delay, revivals, tail_pulses, contrast


@pytest.mark.slow
def test_4_revival_structure(verdict, revivals_series):
    t0 = time.perf_counter()
    s = revivals_series
    delay, revivals, tail_pulses, contrast = _revival_structure(s)
    merged = np.nonzero(contrast > 0.5)[0]
    first_merge = int(merged[0]) if merged.size else None
    discrete_before = first_merge is not None and first_merge >= 3 and np.all(contrast[:3] < 0.5)
    last = s.between(s.t[-1] - 100e-6, s.t[-1]).abs_a
    sustained = last.min() > 0.5 * last.max() and last.min() > 0
    ok = len(revivals) >= 3 and 5e-6 <= delay <= 40e-6 and discrete_before and sustained
    merge_at = f"{tail_pulses[first_merge + 1].t_peak * 1e6:.0f} us" if first_merge is not None else "never"
    verdict(4, "revival structure", ok,
            f"{len(revivals)} revivals, first_revival_delay = {delay * 1e6:.2f} us in [5, 40]; "
            f"inter-pulse contrast reaches {contrast.max():.2f} (> 0.5 at {merge_at}); "
            f"last 100 us min/max = {last.min() / last.max():.2f}",
            time.perf_counter() - t0 + s.metadata.get("wall_time_s", 0.0), 300)


@pytest.mark.slow
def test_5_hole_filling_timescale(verdict):
    t0 = time.perf_counter()
    res = run_sweep(preset("second_hold_sweep"))
    good = [r for r in res.rows if r.ok]
    fit = fit_rise([r.x for r in good], [r.metric for r in good])
    p = paper_params()
    inv_J = 1.0 / p.J_fill
    ok = not res.failed and inv_J / 2 <= fit.T <= 2 * inv_J
    verdict(5, "hole-filling timescale", ok,
            f"T = {fit.T * 1e6:.2f} +- {fit.T_stderr * 1e6:.2f} us vs 1/J = {inv_J * 1e6:.2f} us "
            f"(band [{inv_J / 2 * 1e6:.2f}, {2 * inv_J * 1e6:.2f}]); {len(good)}/{len(res.rows)} points"
            f"{'; low-confidence fit' if fit.low_confidence else ''}",
            time.perf_counter() - t0, 600)


@pytest.mark.slow
def test_6_delay_scaling(verdict):
    t0 = time.perf_counter()
    res = run_sweep(preset("dt_vs_p0kappa"))
    good = [r for r in res.rows if r.ok]
    fit = res.fit or {"r2": math.nan, "slope": math.nan}
    ok = len(good) >= 9 and fit["r2"] > 0.95
    pts = ", ".join(f"{r.x / 1e3:.0f}k:{r.metric * 1e6:.1f}us" for r in good)
    verdict(6, "delay scaling", ok,
            f"{len(good)} points, linear fit of delay vs p0*kappa R^2 = {fit['r2']:.3f} (need > 0.95), "
            f"slope = {fit['slope']:.3g} s/Hz; points {pts}",
            time.perf_counter() - t0, 900)


@pytest.mark.slow
def test_7_narrow_line(verdict, revivals_series):
    t0 = time.perf_counter()
    s = revivals_series
    kappa_hz = paper_params().kappa / TWO_PI
    fit = fit_lorentzian(power_spectrum(s, 300e-6, 200e-6))
    ok = fit.fwhm_bound * 10 <= kappa_hz
    verdict(7, "narrow-line emission", ok,
            f"window 300-500 us: fitted FWHM = {fit.fwhm / 1e3:.2f} kHz, resolution {fit.resolution / 1e3:.1f} kHz, "
            f"linewidth bound {fit.fwhm_bound / 1e3:.2f} kHz vs kappa/2pi/10 = {kappa_hz / 10e3:.1f} kHz",
            time.perf_counter() - t0 + s.metadata.get("wall_time_s", 0.0), 300)


@pytest.mark.slow
def test_8_hole_burn_probe(verdict):
    t0 = time.perf_counter()
    spec = preset("hole_burn_scan")
    res = run_sweep(spec)
    x = np.array([r.x for r in res.rows])  # burn frequency relative to the distribution center, Hz
    amp = np.array([r.metric for r in res.rows])
    p = spec.base.resolved_params()
    grid_step_hz = discretize(p).spacing / TWO_PI
    rho = q_gaussian_density(TWO_PI * x, p.omega0, p.W, p.q)
    f_min = x[int(np.argmin(amp))]
    rank = spearman(amp, rho)
    ok = not res.failed and abs(f_min) <= grid_step_hz and rank < -0.8
    verdict(8, "hole-burn probe", ok,
            f"minimum at {f_min / 1e6:+.3f} MHz (grid step {grid_step_hz / 1e3:.1f} kHz); "
            f"Spearman(amplitude, rho) = {rank:.3f}",
            time.perf_counter() - t0, 600)


def test_9_conservation_suite(verdict):
    t0 = time.perf_counter()
    details, oks = [], []
    tol = SolverOptions(1e-8, 1e-10)

    small = paper_params(N_rho=21)
    lossless = small.replace(kappa=1e-300, gamma_perp=1e-300, J_fill=0.0, eta=0.0)
    grid = discretize(lossless)
    start = prepare_inversion(grid.n_packets, 0.3, 1e-3)
    end = run_until(start, grid, lossless, 2e-6, tol)
    norm_drift = float(np.max(np.abs(end.bloch_norm() - start.bloch_norm())))
    exc = lambda s: abs(s.a) ** 2 + grid.n_packets / 2 * s.mean_inversion(grid)
    exc_drift = abs(exc(end) - exc(start)) / abs(exc(start))
    oks += [norm_drift <= 10 * tol.rtol, exc_drift <= 10 * tol.rtol]
    details += [f"Bloch norm drift {norm_drift:.1e}", f"excitation drift {exc_drift:.1e}"]

    refill = small.replace(eta=0.0)
    z0 = np.linspace(-0.8, 0.6, grid.n_packets)
    s0 = SystemState(0j, np.zeros(grid.n_packets), z0)
    s1 = run_until(s0, grid, refill, 30e-6, tol)
    p_drift = abs(s1.mean_inversion(grid) - s0.mean_inversion(grid))
    oks.append(p_drift <= 10 * tol.rtol)
    details.append(f"J-term mean inversion drift {p_drift:.1e}")

    ground = run_until(SystemState.ground(grid.n_packets), grid, refill, 20e-6, tol)
    fp = max(abs(ground.a), float(np.max(np.abs(ground.sigma_z + 1))))
    oks.append(fp <= 8 * np.finfo(float).eps)
    details.append(f"fixed point deviation {fp:.1e}")

    p = paper_params()
    g = discretize(p)
    C = ensemble_cooperativity(g, p).C
    level = p.eta / p.kappa
    quiet = integrate(Scenario("q", Preparation(0.85 / C), (), 40e-6, Record(10e6)), g, p).abs_a.max() / level
    burst = integrate(Scenario("b", Preparation(1.6 / C), (), 40e-6, Record(10e6)), g, p).abs_a.max() / level
    oks.append(quiet < 10 and burst > 1e3)
    details.append(f"gate: p0C=0.85 -> {quiet:.1f} x drive, p0C=1.6 -> {burst:.3g} x drive")
    verdict(9, "conservation suite", all(oks), "; ".join(details), time.perf_counter() - t0, 60)


def test_10_numerical_hygiene(verdict):
    t0 = time.perf_counter()
    sc = preset("sr_decay")
    p = sc.resolved_params()
    grid = discretize(p)
    base = integrate(sc, grid, p)
    halved = integrate(sc, grid, p, solver=sc.solver.scaled(0.5))
    again = integrate(sc, grid, p)
    change = abs(halved.abs_a.max() / base.abs_a.max() - 1)
    identical = base.a.tobytes() == again.a.tobytes() and base.pbarC.tobytes() == again.pbarC.tobytes()

    # analysis oracles
    rate = 25e6
    t = np.arange(10000) / rate
    tone = TimeSeries(t, np.exp((-TWO_PI * 40e3 + 1j * TWO_PI * 3e5) * t))
    hw = fit_lorentzian(power_spectrum(tone, 0.0, t.size / rate)).hwhm
    lor_ok = abs(hw / 40e3 - 1) < 0.05
    tg = np.arange(5001) / 50e6
    sigma = 0.6e-6
    (pulse,) = detect_pulses(TimeSeries(tg, 2.0 * np.exp(-0.5 * ((tg - 40e-6) / sigma) ** 2)))
    fw = 2 * math.sqrt(2 * math.log(2)) * sigma
    gauss_ok = abs(pulse.t_peak - 40e-6) <= tg[1] and abs(pulse.fwhm / fw - 1) < 0.01
    tau = np.linspace(1e-6, 60e-6, 13)
    rise = fit_rise(tau, 1.5 * (1 - np.exp(-tau / 12e-6)))
    rise_ok = abs(rise.T / 12e-6 - 1) < 0.05

    ok = change < 1e-3 and identical and lor_ok and gauss_ok and rise_ok
    verdict(10, "numerical hygiene", ok,
            f"peak change on halved tolerances {change:.2e} (< 1e-3); repeat bit-identical: {identical}; "
            f"oracles: Lorentzian HWHM {hw / 1e3:.2f}/40 kHz, Gaussian FWHM {pulse.fwhm / fw:.4f}x, "
            f"rise T {rise.T * 1e6:.2f}/12 us",
            time.perf_counter() - t0, 120)
