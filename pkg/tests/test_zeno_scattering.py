import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from neutron_zeno import linalg
from neutron_zeno import scattering as sc
from neutron_zeno import zeno_scattering as zs
from neutron_zeno.fitting import loglog_fit

zeta_s = st.floats(0.0, 1.5)
kd_s = st.floats(0.0, 40.0)


def test_critical_coupling_value():
    assert zs.ZETA_C == pytest.approx(0.769800358919501, abs=1e-15)


def test_z2_characteristic_polynomial():
    # with mu = lambda + 2/3: mu^2 (2 - mu) = 2 zeta^2
    for zeta in (0.0, 0.4, zs.ZETA_C, 1.1):
        for lam in linalg.eigen(zs.z2_matrix(zeta)).values:
            mu = lam + 2 / 3
            assert abs(mu * mu * (2 - mu) - 2 * zeta**2) < 1e-7
    disc = [linalg.cubic_discriminant(linalg.char_poly(zs.z2_matrix(z))).real for z in (0.7, 0.85)]
    assert disc[0] > 0 > disc[1]


def test_critical_generator_nilpotent_part():
    g = zs.critical_generator()
    assert np.max(np.abs(g @ g @ (g + 2 * np.eye(3)))) < 1e-14
    assert np.max(np.abs(g @ g)) > 0.1  # not diagonalizable
    assert linalg.eigen(zs.z2_matrix(zs.ZETA_C)).defective


@pytest.mark.parametrize("kd", [0.5, 1.0, 5.0, 10.0, 25.0])
def test_critical_closed_form(kd):
    assert np.allclose(linalg.mat_exp(zs.critical_generator(), -1j * kd), zs.critical_exp_closed_form(kd), atol=1e-10)


@given(zeta_s, kd_s)
@settings(max_examples=200, deadline=None)
def test_sensitive_limit_conserves_probability(zeta, kd):
    a = zs.sensitive_limit_amplitudes(kd, zeta)
    assert abs(abs(a.t_up) ** 2 + abs(a.r_up) ** 2 + abs(a.r_down) ** 2 - 1) < 1e-9


@given(zeta_s, st.floats(0.0, 10.0))
@settings(deadline=None)
def test_limit_matrix_pseudo_unitary(zeta, kd):
    w = zs.sensitive_limit_matrix(kd, zeta)
    lhs = w.conj().T @ zs.SIGMA_3 @ w
    assert np.linalg.norm(lhs - zs.SIGMA_3) <= 1e-9 * max(1.0, np.linalg.norm(w) ** 2)


def test_zero_thickness_transmits():
    a = zs.sensitive_limit_amplitudes(0.0, 0.8)
    assert a.t_up == pytest.approx(1.0)
    assert abs(a.r_up) < 1e-15 and abs(a.r_down) < 1e-15


def test_large_thickness_underflows_cleanly():
    a = zs.sensitive_limit_amplitudes(5000.0, 1.0)
    assert a.t_up == 0
    assert abs(abs(a.r_up) ** 2 + abs(a.r_down) ** 2 - 1) < 1e-9


def test_scan_matches_pointwise():
    kd = np.linspace(0, 30, 41)
    for zeta in (0.0, 0.3, zs.ZETA_C, 1.0):
        scan = zs.sensitive_limit_scan(kd, zeta)
        for x, a in zip(kd, scan):
            assert np.allclose(a.as_array(), zs.sensitive_limit_amplitudes(x, zeta).as_array(), atol=1e-12)


def test_sensitive_finite_chain_approaches_limit():
    # independent route: slab matrices with a measurement per gap, N b = b0 / N -> 0
    kd, kb0, zeta = 4.0, 0.5, 0.3
    lim = zs.sensitive_limit_amplitudes(kd, zeta).as_array()
    ns = [50, 500, 5000]
    errs = []
    for n in ns:
        p = sc.ScatterParams.from_dimensionless(kd / n, kb0 / n**2, zeta, n)
        errs.append(np.max(np.abs(np.abs(zs.sensitive_chain(p).amplitudes.as_array()) - np.abs(lim))))
    assert errs[-1] < 1e-3
    assert -1.2 <= loglog_fit(ns, errs).slope <= -0.8


def test_sensitive_cell_limit_matrix():
    # (gap M2)^N with tiny slabs approaches exp(-ikD/3) exp(ikD Z2)
    kd, zeta, n = 2.0, 0.6, 20000
    p = sc.ScatterParams.from_dimensionless(kd / n, 0.0, zeta, n)
    w = linalg.mat_power(zs.sensitive_cell_matrix(p), n)
    assert np.allclose(w, zs.sensitive_limit_matrix(kd, zeta), atol=1e-3)


@given(st.floats(0.01, 2.0), st.floats(0.0, 1.0), zeta_s.filter(lambda z: abs(z - 0.5) > 1e-3), st.integers(1, 40))
@settings(deadline=None)
def test_finite_sensitive_chain_loses_probability(ka, kb, zeta, n):
    res = zs.sensitive_chain(sc.ScatterParams.from_dimensionless(ka, kb, zeta, n))
    assert res.survival <= 1 + 1e-9
    assert res.scheme is zs.Scheme.SENSITIVE and res.N == n


@given(st.floats(0.01, 2.0), st.floats(0.0, 1.0), zeta_s.filter(lambda z: abs(z - 0.5) > 1e-3), st.integers(1, 40))
@settings(deadline=None)
def test_finite_insensitive_chain_loses_probability(ka, kb, zeta, n):
    p = sc.ScatterParams.from_dimensionless(ka, kb, zeta, n)
    try:
        res = zs.insensitive_chain(p)
    except zs.DegenerateCell:
        return
    assert res.survival <= 1 + 1e-9
    assert res.amplitudes.t_down == 0 and res.amplitudes.r_down == 0


def test_insensitive_limit_is_pure_phase():
    p = sc.ScatterParams.from_dimensionless(0.1, 0.0, 2.0, 100)
    res = zs.insensitive_chain(p, zs.Regime.CONTINUOUS_LIMIT)
    assert abs(res.amplitudes.t_up) == pytest.approx(1, abs=1e-12)
    assert abs(res.amplitudes.r_up) < 1e-12
    assert res.N is None


def test_insensitive_cell_is_exact_elimination():
    # the 4x4 slab with the L_down column fixed by L_down(out) = 0 reproduces M1
    p = sc.ScatterParams.from_dimensionless(0.8, 0.0, 0.35)
    mbar, dm = zs.mean_and_difference(p)
    m1 = zs.insensitive_cell_matrix(p)
    for vec in (np.array([1.0, 0.3j]), np.array([0.2, 1.0])):
        # left side (R_up, L_up) = vec, R_down = 0; choose L_down so the outgoing L_down vanishes
        l_down = -(dm[1, :] @ vec) / mbar[1, 1]
        out_up = mbar @ vec + dm[:, 1] * l_down
        assert np.allclose(out_up, m1 @ vec)


def test_regimes():
    assert zs.regime_classify(0.3) is zs.ZetaRegime.OSCILLATORY
    assert zs.regime_classify(zs.ZETA_C) is zs.ZetaRegime.CRITICAL_DECAY
    assert zs.regime_classify(1.0) is zs.ZetaRegime.EXPONENTIAL_DECAY
    for z in (0.3, zs.ZETA_C, 1.0):
        assert zs.regime_from_spectrum(z) is zs.regime_classify(z)
    with pytest.raises(ValueError):
        zs.regime_classify(-0.1)


def test_fig6_points_are_total_transmission():
    for n in (1, 5, 20):
        kd, zeta = zs.fig6_parameters(n)
        assert math.sqrt(1 - 2 * zeta) * kd == pytest.approx(n * math.pi)
        assert math.sqrt(1 + 2 * zeta) * kd == pytest.approx((n + 9) * math.pi)


def test_fig6_first_rows():
    # DERIVED: frozen from the first computation, cross-checked by the finite chain below
    rows = zs.zeno_vs_no_measurement_report([1, 2, 3])
    assert [r[3] for r in rows] == pytest.approx([0.744647881478, 0.879931201146, 0.99679839821], abs=1e-11)


def test_fig6_sensitive_value_from_finite_chain():
    ns = [4000, 16000, 64000]
    errs = []
    for n in ns:
        res = zs.sensitive_chain(sc.total_transmission_setup(1, 10, N=n))
        errs.append(abs(abs(res.amplitudes.t_up) ** 2 - 0.744647881478))
    assert errs[-1] < 2e-3
    assert -1.1 <= loglog_fit(ns, errs).slope <= -0.9
