import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from maserbloch.ensemble import (
    TWO_PI,
    EnsembleGrid,
    ParameterError,
    PhysicalParams,
    SpinPacket,
    derive_spin_count,
    discretize,
    ensemble_cooperativity,
    nearest_neighbor_coupling,
    nearest_neighbor_distance,
    packet_cooperativity,
    paper_params,
    q_gaussian_density,
    q_gaussian_width,
    to_hz,
)

# peak-normalized q-Gaussian (q = 1.39, FWHM W) evaluated at one FWHM from the center
Q_AT_W = 0.12622522056319065598


def mp_q_gaussian(x, W, q):
    q, W, x = mpmath.mpf(q), mpmath.mpf(W), mpmath.mpf(x)
    delta = W / 2 * mpmath.sqrt((q - 1) / (2 ** (q - 1) - 1))
    return mpmath.power(1 - (1 - q) * (x / delta) ** 2, 1 / (1 - q))


def test_q_gaussian_frozen_value():
    assert q_gaussian_density(1.0, 0.0, 1.0, 1.39) == pytest.approx(Q_AT_W, rel=1e-13)
    assert float(mp_q_gaussian(1, 1, 1.39)) == pytest.approx(Q_AT_W, rel=1e-15)


@given(q=st.floats(1.01, 2.9), W=st.floats(1e3, 1e9), x=st.floats(-5, 5))
def test_q_gaussian_matches_mpmath(q, W, x):
    got = q_gaussian_density(x * W, 0.0, W, q)
    assert got == pytest.approx(float(mp_q_gaussian(x * W, W, q)), rel=1e-10, abs=1e-300)


@given(q=st.floats(1.01, 2.9), W=st.floats(1e3, 1e9))
def test_q_gaussian_fwhm_is_W(q, W):
    assert q_gaussian_density(0.0, 0.0, W, q) == 1.0
    assert q_gaussian_density(W / 2, 0.0, W, q) == pytest.approx(0.5, rel=1e-12)
    assert q_gaussian_density(-W / 2, 0.0, W, q) == pytest.approx(0.5, rel=1e-12)


def test_q_gaussian_domain():
    with pytest.raises(ParameterError):
        q_gaussian_density(0.0, 0.0, 1.0, 1.0)
    with pytest.raises(ParameterError):
        q_gaussian_density(0.0, 0.0, 1.0, 3.0)
    with pytest.raises(ParameterError):
        q_gaussian_density(0.0, 0.0, 0.0, 1.5)


def test_q_gaussian_width_approaches_gaussian():
    # q -> 1 recovers exp(-x^2 / delta^2) with delta = W / (2 sqrt(ln 2))
    assert q_gaussian_width(1.0, 1 + 1e-9) == pytest.approx(0.5 / math.sqrt(math.log(2)), rel=1e-6)


def test_discretize_normalized_and_symmetric(grid, params):
    assert grid.n_packets == params.N_rho == 501
    assert grid.weights.sum() == pytest.approx(1.0, abs=1e-14)
    np.testing.assert_array_equal(grid.weights, grid.weights[::-1])
    np.testing.assert_array_equal(grid.detunings, -grid.detunings[::-1])
    assert grid.detunings[-1] == pytest.approx(2.5 * params.W, rel=1e-14)
    assert grid.coupling == pytest.approx(params.g_coll / math.sqrt(501), rel=1e-15)
    assert np.argmax(grid.weights) == 250


def test_discretize_custom_span_and_center(params):
    g = discretize(params.replace(N_rho=11), span=params.W, center=params.W / 2)
    assert g.detunings[0] == pytest.approx(-params.W / 2)
    assert g.detunings[-1] == pytest.approx(1.5 * params.W)
    assert g.weights.sum() == pytest.approx(1.0)
    # heavier weight toward the distribution center
    assert g.weights[0] > g.weights[-1]


def test_discretize_single_packet(params):
    g = discretize(params.replace(N_rho=1))
    assert g.n_packets == 1 and g.weights[0] == 1.0 and g.coupling == params.g_coll


def test_grid_equality_and_packets(params):
    g1 = discretize(params.replace(N_rho=5))
    g2 = discretize(params.replace(N_rho=5))
    assert g1 == g2
    assert g1 != discretize(params.replace(N_rho=7))
    assert all(isinstance(p, SpinPacket) for p in g1.packets)
    with pytest.raises(ValueError):
        g1.detunings[0] = 1.0


def test_grid_rejects_mismatched_arrays():
    with pytest.raises(ParameterError):
        EnsembleGrid(np.zeros(3), np.zeros(4), 1.0, 1.0, 0.0)


def test_cooperativity_against_quadrature(grid, params):
    # independent continuum value over the same truncated support (mpmath quad)
    q = mpmath.mpf(params.q)
    delta = params.W / 2 * mpmath.sqrt((q - 1) / (2 ** (q - 1) - 1))
    rho = lambda x: mpmath.power(1 - (1 - q) * (x / delta) ** 2, 1 / (1 - q))
    L = 2.5 * params.W
    g = params.gamma_perp
    pts = [-L, -10 * g, 0, 10 * g, L]
    integral = mpmath.quad(lambda x: rho(x) / (g + x**2 / g), pts) / mpmath.quad(rho, pts)
    C_cont = float(params.g_coll**2 / params.kappa * integral)
    coop = ensemble_cooperativity(grid, params)
    assert coop.C == pytest.approx(C_cont, rel=1e-3)
    assert coop.C == pytest.approx(14.17317571158352, rel=1e-9)
    assert coop.Gamma == pytest.approx(params.g_coll**2 / (params.kappa * coop.C), rel=1e-15)


def test_packet_cooperativity_resonant():
    p = SpinPacket(0.0, 1.0, 2.0)
    assert packet_cooperativity(p, kappa=1.0, gamma_perp=4.0) == pytest.approx(1.0)
    # detuning Delta = gamma halves it
    assert packet_cooperativity(SpinPacket(4.0, 1.0, 2.0), 1.0, 4.0) == pytest.approx(0.5)
    with pytest.raises(ParameterError):
        packet_cooperativity(p, kappa=0.0, gamma_perp=1.0)


def test_dipole_estimator():
    r = nearest_neighbor_distance(6.0)
    n = 6e-6 * 1.755e29
    assert r == pytest.approx(n ** (-1 / 3), rel=1e-14)
    # mu0 / 4pi * (gamma_e)^2 * hbar / r^3
    expected = 1e-7 * (TWO_PI * 28e9) ** 2 * 1.054571817e-34 / r**3
    assert nearest_neighbor_coupling(6.0) == pytest.approx(expected, rel=1e-14)
    with pytest.raises(ParameterError):
        nearest_neighbor_distance(0.0)


def test_spin_count(params):
    assert derive_spin_count(params.g_coll, params.g0) == pytest.approx(2.3e6**2 * 1.0, rel=1e-12)
    with pytest.raises(ParameterError):
        derive_spin_count(1.0, 0.0)


@pytest.mark.parametrize(
    "field,value",
    [("kappa", 0.0), ("gamma_perp", -1.0), ("g_coll", 0.0), ("W", -2.0), ("q", 3.5), ("J_fill", -1.0),
     ("eta", -1.0), ("N_rho", 0), ("N_rho", 2.5), ("g0", 0.0)],
)
def test_params_validation(params, field, value):
    with pytest.raises(ParameterError):
        params.replace(**{field: value})


@settings(max_examples=200)
@given(st.floats(1e-3, 1e12))
def test_hz_round_trip(f):
    w = TWO_PI * f
    assert TWO_PI * to_hz(w) == w


def test_params_hz_round_trip(params):
    assert PhysicalParams.from_hz(**params.to_hz()) == params
    assert params.to_rad()["kappa"] == params.kappa
    assert paper_params().to_hz()["kappa"] == pytest.approx(418e3, rel=1e-15)
