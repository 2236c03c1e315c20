import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import integrate

from wlan_discovery.errors import ParameterError
from wlan_discovery.power import (MAX_ATOMS, RESIDUAL_MASS, PowerModelParams, analytic_curves, channel_regimes,
                                  even_params, expected_channels_gps, expected_channels_wlan_aware,
                                  expected_power, p_out_n, position_error_pdf, truncation_index)

P = even_params(1e-4)


# -- power ------------------------------------------------------------------------

def test_expected_power_values():
    assert expected_power(20, P) == pytest.approx(300.0)
    assert expected_power(20, P, uses_gps=True) == pytest.approx(440.0)
    assert expected_power(0, P) == P.b
    with pytest.raises(ParameterError):
        expected_power(-1, P)


@given(st.floats(0, 20), st.floats(0, 20))
def test_power_is_affine_in_channels(x, y):
    lhs = expected_power((x + y) / 2, P)
    assert lhs == pytest.approx((expected_power(x, P) + expected_power(y, P)) / 2)


# -- out-of-range law -------------------------------------------------------------

def test_p_out_single_interval():
    # rate 2 D_r v rho T_s = 0.2 at rho = 1e-4
    assert p_out_n(0, P) == pytest.approx(1 - math.exp(-0.2), rel=1e-12)
    assert p_out_n(0, P) == pytest.approx(0.1813, abs=1e-4)


def test_p_out_sums_to_one():
    n = np.arange(0, 2000)
    assert p_out_n(n, P).sum() == pytest.approx(1.0, abs=1e-12)
    with pytest.raises(ParameterError):
        p_out_n(-1, P)


def test_zero_speed_warns():
    with pytest.warns(UserWarning, match="speed is zero"):
        PowerModelParams((1e-5,), v=0.0)


@pytest.mark.parametrize("kw", [dict(a=-1.0), dict(t_s=0.0), dict(v=-1.0), dict(d_h=120.0), dict(d1=0.0)])
def test_invalid_params(kw):
    with pytest.raises(ParameterError):
        PowerModelParams((1e-5,), **kw)
    with pytest.raises(ParameterError):
        PowerModelParams((-1e-5,))


# -- position-error law -----------------------------------------------------------

@pytest.mark.parametrize("lam", [1e-6, 1e-5, 1e-4, 5e-4])
def test_pdf_total_mass(lam):
    pdf = position_error_pdf(even_params(lam))
    assert pdf.total_mass == pytest.approx(1.0, abs=1e-9)
    cont, _ = integrate.quad(pdf.density, 0, pdf.d_r, epsabs=1e-13)
    assert cont == pytest.approx(pdf.continuous_mass, rel=1e-8)


def test_atoms_negligible_at_high_density():
    pdf = position_error_pdf(even_params(5e-4))
    assert pdf.masses.sum() < 1e-3


def test_atom_weights_decreasing_and_spaced():
    pdf = position_error_pdf(even_params(1e-5))
    assert np.all(np.diff(pdf.raw_masses) < 0)
    np.testing.assert_allclose(np.diff(pdf.atoms), 10.0)
    assert pdf.atoms[0] == pytest.approx(110.0)


@pytest.mark.parametrize("lam", [1e-7, 1e-6, 1e-5, 1e-4, 5e-4])
def test_truncation_residual(lam):
    p = even_params(lam)
    k = truncation_index(p)
    assert p_out_n(np.arange(1, k + 1), p).sum() + p_out_n(0, p) >= 1 - RESIDUAL_MASS
    # and K is the smallest index that does it (bar the K >= 1 floor)
    if k > 1:
        assert p_out_n(np.arange(0, k), p).sum() < 1 - RESIDUAL_MASS


def test_atom_guard():
    p = even_params(1e-10)
    assert truncation_index(p) > MAX_ATOMS
    with pytest.raises(ParameterError, match="atoms"):
        position_error_pdf(p)


# -- channel counts ---------------------------------------------------------------

def test_single_channel_regimes():
    # rho_f = 1e-4 on one channel, D_h = 72 m, D_r = 100 m
    p = PowerModelParams((1e-4,), d_h=72.0)
    n1, n2, n3 = channel_regimes(p)
    assert n1 == pytest.approx(1 - math.exp(-1e-4 * math.pi * 72 ** 2), rel=1e-12)
    assert n1 == pytest.approx(0.804, abs=1e-3)
    assert n2 == pytest.approx(math.exp(-1e-4 * math.pi * 72 ** 2) - math.exp(-math.pi), rel=1e-12)
    assert n2 == pytest.approx(0.153, abs=1e-3)


def test_gps_counts():
    assert expected_channels_gps(PowerModelParams((1e-4,))) == pytest.approx(0.9568, abs=1e-4)
    assert expected_channels_gps(P) == pytest.approx(2.907, abs=1e-3)


def _n3_riemann(p, n=100_000):
    """Independent midpoint-rule evaluation of the third regime."""
    rho = p.rho
    dr = p.d_r / n
    r = (np.arange(n) + 0.5) * dr
    dens = 2 * rho * math.pi * r * np.exp(-rho * math.pi * r * r)
    k = np.arange(1, truncation_index(p) + 1)
    rate = 2 * p.d_r * p.v * rho * p.t_s
    po = np.exp(-rate * k) * (1 - math.exp(-rate))
    w = np.cumsum((po / k)[::-1])[::-1]
    out = math.exp(-rho * math.pi * p.d_r ** 2)
    w = w * out / w.sum()
    atoms = p.d_r + k * p.v * p.t_s
    total = 0.0
    for rho_f in p.densities:
        reach = lambda d: 1 - np.exp(-rho_f * math.pi * ((p.d_r + d) ** 2 - p.d_r ** 2))
        total += (np.sum(dens * reach(r)) * dr + np.dot(w, reach(atoms))) * math.exp(-rho_f * math.pi * p.d_r ** 2)
    return total


@pytest.mark.parametrize("lam", [1e-5, 1e-4, 5e-4])
def test_n3_quadrature_against_riemann_sum(lam):
    p = even_params(lam)
    assert channel_regimes(p)[2] == pytest.approx(_n3_riemann(p), abs=1e-4)


def test_reference_values():
    vals = {lam: expected_channels_wlan_aware(even_params(lam)) for lam in (1e-6, 1e-5, 1e-4, 5e-4)}
    assert vals[1e-6] == pytest.approx(4.22, abs=0.01)
    assert vals[1e-5] == pytest.approx(2.26, abs=0.01)
    assert vals[1e-4] == pytest.approx(4.47, abs=0.01)
    assert vals[5e-4] == pytest.approx(12.31, abs=0.01)


def test_wlan_count_not_monotone_at_low_density():
    # position error grows like 1 / (D_r rho), which pushes the third regime up as density falls
    lo = [expected_channels_wlan_aware(even_params(lam)) for lam in (1e-7, 1e-6, 1e-5)]
    assert lo[0] > lo[1] > lo[2]


def test_zero_density_is_idle_power():
    row = analytic_curves([0.0], [1.0])[0]
    assert row["e_n_wlan"] == 0.0 and row["e_n_gps"] == 0.0
    assert row["e_p_wlan"] == 10.0
    assert row["e_p_gps"] == pytest.approx(150.0)
    assert row["e_p_conventional"] == pytest.approx(300.0)


def test_gps_power_tends_to_idle_plus_module():
    row = analytic_curves([1e-8], [1.0])[0]
    assert row["e_p_gps"] == pytest.approx(150.0, abs=0.01)


lam_high = st.floats(5e-5, 5e-4)


@settings(max_examples=30, deadline=None)
@given(lam_high, st.floats(1.0, 2.0))
def test_monotone_in_density_above_knee(lam, k):
    assert expected_channels_wlan_aware(even_params(lam * k)) >= expected_channels_wlan_aware(even_params(lam)) - 1e-9


@settings(max_examples=30, deadline=None)
@given(st.floats(1e-6, 5e-4), st.floats(0.1, 3.0), st.floats(1.0, 3.0))
def test_monotone_in_speed(lam, v, k):
    a = expected_channels_wlan_aware(even_params(lam, v=v))
    b = expected_channels_wlan_aware(even_params(lam, v=v * k))
    assert b >= a - 1e-9


@settings(max_examples=30, deadline=None)
@given(st.floats(1e-6, 5e-4), st.floats(1.0, 20.0), st.floats(1.0, 3.0))
def test_monotone_in_interval(lam, t, k):
    a = expected_channels_wlan_aware(even_params(lam, t_s=t))
    b = expected_channels_wlan_aware(even_params(lam, t_s=t * k))
    assert b >= a - 1e-9


densities = st.lists(st.one_of(st.just(0.0), st.floats(1e-6, 5e-5)), min_size=1, max_size=20)


@settings(max_examples=40, deadline=None)
@given(densities, st.floats(0.2, 3.0))
def test_regime_bounds(dens, v):
    if sum(dens) == 0:
        return
    p = PowerModelParams(tuple(dens), v=v)
    n1, n2, n3 = channel_regimes(p)
    assert min(n1, n2, n3) >= 0
    assert n1 + n2 + n3 <= len(dens) + 1e-9
    r1 = min(1.0, v * p.t_s / p.d1)
    assert expected_channels_gps(p) >= n1 + n2 * r1 - 1e-9
    assert n1 + n2 <= expected_channels_gps(p) + 1e-9
