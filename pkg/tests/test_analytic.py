import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.integrate import quad

from twophoton.analytic import (
    NoFringes,
    g1_spot,
    g2_anti_scan_closed_form,
    g2_orthogonal,
    g2_parallel,
    predict_fringe_spacing,
    sinc,
)
from twophoton.geometry import ScanMode, Spot, reference_paper_config

CFG = reference_paper_config()
ORTH = reference_paper_config(polarization="orthogonal")
positions = st.floats(-10e-3, 10e-3)


def quad_g1(cfg, spot, dx):
    """(k / 2 pi z) * integral of exp(i k dx x0 / z) over the spot, by adaptive quadrature."""
    k, z, d, s = cfg.wavenumber, cfg.distance_z, cfg.source_separation_d, cfg.spot_size_s
    lo, hi = ((d - s) / 2, (d + s) / 2) if spot == "A" else (-(d + s) / 2, -(d - s) / 2)
    re = quad(lambda x0: math.cos(k * dx * x0 / z), lo, hi, epsabs=1e-12 * (hi - lo), epsrel=1e-12, limit=200)[0]
    im = quad(lambda x0: math.sin(k * dx * x0 / z), lo, hi, epsabs=1e-12 * (hi - lo), epsrel=1e-12, limit=200)[0]
    return k / (2 * math.pi * z) * complex(re, im)


def test_sinc_series_branch():
    assert sinc(0.0) == 1.0
    assert sinc(1e-7) == pytest.approx(1.0, abs=1e-14)
    u = np.array([1e-3, 0.5, 3.0])
    np.testing.assert_allclose(sinc(u), np.sin(u) / u, rtol=1e-15)


def test_g1_at_zero_separation():
    value = g1_spot(CFG, Spot.A, 1e-3, 1e-3)
    assert value.imag == 0
    assert value.real == pytest.approx(CFG.spot_size_s / (CFG.wavelength * CFG.distance_z), rel=1e-14)


def test_g1_spots_are_conjugate():
    a = g1_spot(CFG, "A", 0.7e-3, -0.2e-3)
    b = g1_spot(CFG, "B", 0.7e-3, -0.2e-3)
    assert a == pytest.approx(b.conjugate(), rel=1e-15)


def test_g1_half_envelope_zero_against_quadrature():
    dx = CFG.wavelength * CFG.distance_z / (2 * CFG.spot_size_s)
    closed = g1_spot(CFG, "A", dx, 0.0)
    # sin(k dx s / 2z) = 1 here, so |G1| = |cos(k dx d / 2z)| / (pi dx)
    expected = abs(math.cos(CFG.wavenumber * dx * CFG.source_separation_d / (2 * CFG.distance_z))) / (math.pi * dx)
    assert abs(closed) == pytest.approx(expected, rel=1e-12)
    assert abs(closed) == pytest.approx(abs(quad_g1(CFG, "A", dx)), rel=1e-9)
    # frozen from the quadrature oracle
    assert abs(closed) == pytest.approx(37.44974392565364, rel=1e-9)


@pytest.mark.parametrize("spot", ["A", "B"])
@pytest.mark.parametrize("dx", [0.13e-3, 0.6e-3, 1.234e-3, -2.7e-3, 7.9e-3])
def test_g1_matches_quadrature(spot, dx):
    # closed form carries exp(-i k dx x0 / z) for <E*(x1) E(x2)>; the quadrature integrand has +i
    closed = complex(g1_spot(CFG, spot, dx, 0.0))
    oracle = quad_g1(CFG, spot, dx)
    assert abs(closed - oracle.conjugate()) < 1e-9 * abs(g1_spot(CFG, spot, 0.0, 0.0))


def test_g2_parallel_examples():
    assert g2_parallel(CFG, 0.0, 0.0).normalized == pytest.approx(2.0, abs=1e-12)
    x = CFG.wavelength * CFG.distance_z / (4 * CFG.source_separation_d)
    assert x == pytest.approx(0.425e-3, abs=1e-6)
    value = g2_parallel(CFG, x, -x).normalized
    assert value == pytest.approx(1.0, abs=1e-12)


def test_g2_parallel_fixed_d2_period():
    period = CFG.wavelength * CFG.distance_z / CFG.source_separation_d
    assert period == pytest.approx(1.70e-3, abs=5e-6)
    # cos^2 factor has period lambda z / d: zeros at half-odd multiples, maxima of the modulation at multiples
    zeros = g2_parallel(CFG, np.array([0.5, 1.5, 2.5]) * period, 0.0).normalized
    np.testing.assert_allclose(zeros, 1.0, atol=1e-12)


def test_g2_orthogonal_examples():
    assert g2_orthogonal(CFG, 0.0, 0.0).normalized == pytest.approx(1.5, abs=1e-12)
    x = CFG.wavelength / 2 * CFG.distance_z / CFG.spot_size_s
    assert x == pytest.approx(8.5e-3, abs=1e-5)
    assert g2_orthogonal(CFG, x, -x).normalized == pytest.approx(1.0, abs=1e-12)


def test_closed_form_examples():
    assert g2_anti_scan_closed_form(CFG, 0.0).normalized == 2.0
    assert g2_anti_scan_closed_form(ORTH, 0.0).normalized == 1.5
    # independent scalar evaluation: 1 + sinc^2(pi s x / ((lambda/2) z)) / 2 at x = 0.85 mm
    u = math.pi * 0.11e-3 * 0.85e-3 / (632.8e-9 / 2 * 2.955)
    assert u == pytest.approx(0.1 * math.pi, rel=1e-3)
    scalar = 1 + 0.5 * (math.sin(u) / u) ** 2
    assert g2_anti_scan_closed_form(ORTH, 0.85e-3).normalized == pytest.approx(scalar, rel=1e-14)
    assert scalar == pytest.approx(1.4837643023208649, rel=1e-15)


def test_raw_scale():
    baseline = (CFG.wavenumber * CFG.spot_size_s / (math.pi * CFG.distance_z)) ** 2
    value = g2_parallel(CFG, 0.3e-3, -0.3e-3)
    assert value.raw == pytest.approx(baseline * value.normalized, rel=1e-14)


def test_predict_fringe_spacing():
    assert predict_fringe_spacing(CFG, ScanMode.FIXED_D2) == pytest.approx(1.70e-3, abs=5e-6)
    assert predict_fringe_spacing(CFG, ScanMode.OPPOSITE) == pytest.approx(0.85e-3, abs=5e-6)
    with pytest.raises(NoFringes):
        predict_fringe_spacing(ORTH, ScanMode.OPPOSITE)


@settings(max_examples=200, deadline=None)
@given(x1=positions, x2=positions)
def test_hermitian_symmetry(x1, x2):
    for spot in "AB":
        a = complex(g1_spot(CFG, spot, x1, x2))
        b = complex(g1_spot(CFG, spot, x2, x1))
        assert a == pytest.approx(b.conjugate(), rel=1e-13, abs=1e-12)


def test_closed_form_consistency_random():
    x = np.random.default_rng(7).uniform(-10e-3, 10e-3, 1000)
    for cfg in (CFG, ORTH):
        general = (g2_parallel if cfg is CFG else g2_orthogonal)(cfg, x, -x).normalized
        closed = g2_anti_scan_closed_form(cfg, x).normalized
        assert np.max(np.abs(general - closed) / closed) < 1e-12


@settings(max_examples=200, deadline=None)
@given(x1=positions, x2=positions, c=st.floats(-5e-3, 5e-3))
def test_translation_invariance(x1, x2, c):
    a = g2_parallel(CFG, x1, x2).normalized
    b = g2_parallel(CFG, x1 + c, x2 + c).normalized
    # shift changes dx by rounding only
    assert b == pytest.approx(a, rel=1e-9)


@settings(max_examples=100, deadline=None)
@given(
    lam=st.floats(300e-9, 1.5e-6),
    d=st.floats(0.2e-3, 5e-3),
    ratio=st.floats(0.01, 0.95),
    z=st.floats(0.1, 10.0),
)
def test_fringe_halving_exact(lam, d, ratio, z):
    cfg = reference_paper_config(wavelength=lam, source_separation_d=d, spot_size_s=d * ratio, distance_z=z)
    assert predict_fringe_spacing(cfg, "opposite") == predict_fringe_spacing(cfg, "fixed_d2") / 2


def test_bounds_on_dense_grid():
    x = np.linspace(-10e-3, 10e-3, 20001)
    par = g2_parallel(CFG, x, -x).normalized
    orth = g2_orthogonal(CFG, x, -x).normalized
    assert par.min() >= 1 - 1e-12 and par.max() <= 2 + 1e-12
    assert orth.min() >= 1 - 1e-12 and orth.max() <= 1.5 + 1e-12
    fixed = g2_parallel(CFG, x, 0.0).normalized
    assert fixed.min() >= 1 - 1e-12 and fixed.max() <= 2 + 1e-12


@pytest.mark.parametrize("d", [0.15e-3, 0.5e-3, 2.2e-3, 4e-3])
def test_orthogonal_independent_of_d(d):
    x = np.random.default_rng(3).uniform(-10e-3, 10e-3, 200)
    ref = g2_orthogonal(ORTH, x, -x).normalized
    other = g2_orthogonal(ORTH.replace(source_separation_d=d), x, -x).normalized
    assert np.max(np.abs(other - ref) / ref) < 1e-12
