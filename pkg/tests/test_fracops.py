import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from avrfopid.fracops import (
    REGIMES,
    FopidParams,
    OustaloupConfig,
    fopid_realize,
    frac_power,
    get_regime,
    integer_pid,
    oustaloup,
)
from avrfopid.ratfun import BIPROPER, IMPROPER, STRICTLY_PROPER

N2 = OustaloupConfig(half_order=2)


def ladder_oracle(alpha, wb, wh, n):
    """Corner frequencies written out term by term."""
    zeros, poles = [], []
    for k in range(-n, n + 1):
        zeros.append(wb * (wh / wb) ** ((k + n + 0.5 * (1 - alpha)) / (2 * n + 1)))
        poles.append(wb * (wh / wb) ** ((k + n + 0.5 * (1 + alpha)) / (2 * n + 1)))
    return wh**alpha, zeros, poles


@pytest.mark.parametrize("alpha", [-0.7, -0.3, 0.25, 0.5, 0.9])
@pytest.mark.parametrize("n", [1, 2, 5])
def test_ladder_matches_corner_formula(alpha, n):
    f = oustaloup(alpha, OustaloupConfig(half_order=n))
    k, z, p = ladder_oracle(alpha, 1e-4, 1e4, n)
    assert f.gain == pytest.approx(k)
    np.testing.assert_allclose(-np.real(f.zeros), z, rtol=1e-12)
    np.testing.assert_allclose(-np.real(f.poles), p, rtol=1e-12)
    assert len(f.zeros) == len(f.poles) == 2 * n + 1


def test_half_order_two_numbers():
    # alpha = 0.5, N = 2, band [1e-4, 1e4]: corner exponents are -4 + 8 (j + 0.25) / 5 and -4 + 8 (j + 0.75) / 5
    f = oustaloup(0.5, N2)
    np.testing.assert_allclose(-np.real(f.zeros)[:2], [10**-3.6, 10**-2.0], rtol=1e-12)
    np.testing.assert_allclose(-np.real(f.poles)[:2], [10**-2.8, 10**-1.2], rtol=1e-12)
    assert f.gain == pytest.approx(100.0)


def test_alpha_zero_is_unity():
    f = oustaloup(0.0)
    assert f.gain == 1.0 and f.zeros == f.poles


@pytest.mark.parametrize("alpha", [0.1, 0.5, 0.9])
def test_corners_interlace(alpha):
    f = oustaloup(alpha, OustaloupConfig(half_order=3))
    z, p = -np.real(f.zeros), -np.real(f.poles)
    assert np.all(z < p)
    assert np.all(np.diff(z) > 0) and np.all(np.diff(p) > 0)
    assert np.all(z[1:] > p[:-1])


@pytest.mark.parametrize("alpha", [0.25, 0.5, 0.75])
def test_midband_slope_fit(alpha):
    w = np.logspace(-2, 2, 161)
    db = 20 * np.log10(np.abs(oustaloup(alpha, N2).freqresp(w)))
    slope = np.polyfit(np.log10(w), db, 1)[0]
    assert abs(slope - 20 * alpha) < 1.0


@pytest.mark.parametrize("alpha", [0.25, 0.5, 0.75])
def test_phase_matches_arctan_sum(alpha):
    w = np.logspace(-3, 3, 61)
    _, z, p = ladder_oracle(alpha, 1e-4, 1e4, 2)
    ref = sum(np.arctan(w / a) - np.arctan(w / b) for a, b in zip(z, p))
    np.testing.assert_allclose(np.angle(oustaloup(alpha, N2).freqresp(w)), ref, atol=1e-12)


@pytest.mark.parametrize("alpha", [0.25, 0.5, 0.75])
def test_default_ladder_phase_is_flat(alpha):
    w = np.logspace(-2, 2, 401)
    phase = np.degrees(np.angle(oustaloup(alpha).freqresp(w)))
    assert np.max(np.abs(phase - 90 * alpha)) < 1.0


def test_three_halves_power_magnitude():
    # stated bound: |H| within 12% of w^1.5 over [1e-2, 1e2] at N = 2
    w = np.logspace(-2, 2, 401)
    mag = np.abs(frac_power(1.5, N2).freqresp(w))
    assert np.max(np.abs(mag / w**1.5 - 1)) < 0.12


@pytest.mark.parametrize("alpha", [0.3, 1.0, 1.7, 2.0])
def test_reciprocal_consistency(alpha):
    f = frac_power(alpha, N2)
    w = np.logspace(-3, 3, 25)
    np.testing.assert_allclose(f.freqresp(w) * f.reciprocal().freqresp(w), 1.0, atol=1e-8)


def test_unit_gain_at_geometric_center():
    # the ladder is symmetric about sqrt(wb wh) = 1 rad/s, where |s^a| = 1
    for a in (0.2, 0.6):
        assert abs(oustaloup(a).freqresp(np.array([1.0]))[0]) == pytest.approx(1.0, rel=1e-9)


def test_oustaloup_rejects_whole_orders():
    with pytest.raises(ValueError):
        oustaloup(1.0)


def test_config_validation():
    with pytest.raises(ValueError):
        OustaloupConfig(omega_b=1.0, omega_h=0.5)
    with pytest.raises(ValueError):
        OustaloupConfig(half_order=0)


def test_frac_power_splits_integer_part():
    w = np.logspace(-1, 1, 9)
    f = frac_power(1.5, N2)
    g = oustaloup(0.5, N2)
    np.testing.assert_allclose(f.freqresp(w), 1j * w * g.freqresp(w), rtol=1e-12)
    assert frac_power(2.0).poles == () and len(frac_power(2.0).zeros) == 2
    with pytest.raises(ValueError):
        frac_power(2.5)
    with pytest.raises(ValueError):
        frac_power(0.0)


# -- controller ----------------------------------------------------------------------


def test_params_validation():
    with pytest.raises(ValueError):
        FopidParams(11.0, 0, 0, 0)
    with pytest.raises(ValueError):
        FopidParams(1, 1, 1, 0, lam=0.0)
    with pytest.raises(ValueError):
        FopidParams(1, 1, 1, 0, mu=2.1)
    p = FopidParams(1, 2, 3, 0.1, 1.2, 0.8)
    assert FopidParams.from_array(p.as_array()) == p
    assert list(p.as_dict()) == list(FopidParams.GENE_NAMES)


def test_regimes():
    assert get_regime("PID").fixed_orders
    f2 = get_regime("fopid2")
    assert f2.contains(FopidParams(1, 1, 1, 0, 1.5, 0.5))
    assert not f2.contains(FopidParams(1, 1, 1, 0, 1.0, 0.5))  # lower bound is open
    assert f2.contains(FopidParams(1, 1, 1, 0, 2.0, 1.0))  # upper bound is closed
    assert set(REGIMES) >= {"pid", "fopid2", "fopid4"}
    with pytest.raises(ValueError):
        get_regime("fopid9")


def test_integer_orders_reduce_to_pid():
    p = FopidParams(0.6, 0.4, 0.2, 0.01)
    c = fopid_realize(p)
    w = np.logspace(-3, 3, 31)
    ref = integer_pid(p).freqresp(w)
    direct = p.kp + p.ki / (1j * w) + p.kd * 1j * w / (1 + p.tf_filter * 1j * w)
    np.testing.assert_allclose(ref, direct, rtol=1e-12)
    np.testing.assert_allclose(c.rational.freqresp(w), ref, rtol=1e-9)
    np.testing.assert_allclose(c.freqresp(w), ref, rtol=1e-12)


@settings(max_examples=30, deadline=None)
@given(
    st.floats(0, 10),
    st.floats(0.01, 10),
    st.floats(0, 10),
    st.floats(0.001, 10),
    st.floats(0.05, 2.0),
    st.floats(0.05, 2.0),
)
def test_rational_and_factored_controller_agree(kp, ki, kd, tf, lam, mu):
    p = FopidParams(kp, ki, kd, tf, lam, mu)
    c = fopid_realize(p, N2)
    w = np.logspace(-2, 2, 9)
    np.testing.assert_allclose(c.rational.freqresp(w), c.freqresp(w), rtol=1e-6)


def test_properness_of_realized_controller():
    assert fopid_realize(FopidParams(1, 1, 1, 0.01, 1.2, 0.6)).properness() == BIPROPER
    # unfiltered integer derivative is improper
    assert fopid_realize(FopidParams(1, 1, 1, 0.0)).properness() == IMPROPER
    # an integral-only controller is strictly proper
    assert fopid_realize(FopidParams(0, 1, 0, 0)).properness() == STRICTLY_PROPER


def test_zero_gains_drop_terms():
    c = fopid_realize(FopidParams(2.5, 0, 0, 0, 1.3, 0.7))
    assert c.rational.num.degree == 0 and c.rational.den.degree == 0
    assert c.freqresp(np.array([1.0]))[0] == pytest.approx(2.5)


def test_fractional_integral_high_order_keeps_origin_pole():
    c = fopid_realize(FopidParams(0, 1, 0, 0, 1.4, 1.0))
    assert np.sum(np.abs(c.rational.poles()) < 1e-12) == 1
    w = np.array([1.0])
    assert abs(c.freqresp(w)[0]) == pytest.approx(1.0, rel=0.1)
    assert np.degrees(np.angle(c.freqresp(np.array([1.0]))[0])) == pytest.approx(-90 * 1.4, abs=5)


def test_filtered_derivative_limit():
    # Kd s^mu / (1 + Tf s^mu) tends to Kd / Tf inside the band; past w_h the
    # ladder saturates at R = w_h^mu, giving Kd R / (1 + Tf R)
    p = FopidParams(0, 0, 2.0, 0.5, 1.0, 0.6)
    c = fopid_realize(p)
    assert abs(c.freqresp(np.array([1e3]))[0]) == pytest.approx(4.0, rel=0.02)
    r = 1e4**0.6
    assert math.isclose(abs(c.rational.freqresp(np.array([1e9]))[0]), 2.0 * r / (1 + 0.5 * r), rel_tol=1e-6)


def test_published_fopid4_row_realizes():
    p = FopidParams(0.17148, 0.34768, 0.01163, 0.01920, 1.08619, 1.32913)
    c = fopid_realize(p, N2)
    assert np.isfinite(c.freqresp(np.array([1.0]))[0])
    assert c.rational.num.degree <= c.rational.den.degree
    assert c.properness() == BIPROPER
