import cmath
import math

import numpy as np
import pytest
import scipy.linalg
from hypothesis import given, settings
from hypothesis import strategies as st

from neutron_zeno import abstract_model as am
from neutron_zeno import correspondence as cr
from neutron_zeno import scattering as sc

ka_s = st.floats(1e-3, math.pi)
zeta_prop = st.floats(0.0, 0.49)


def slab(ka, zeta):
    return sc.ScatterParams.from_dimensionless(ka, 0.0, zeta)


@given(ka_s, zeta_prop)
@settings(max_examples=200, deadline=None)
def test_hadamard_relation(ka, zeta):
    assert cr.hadamard_relation_residual(slab(ka, zeta)) < 1e-10


@given(ka_s, zeta_prop)
@settings(max_examples=200, deadline=None)
def test_phase_factors_are_unimodular_and_factorize(ka, zeta):
    ph = cr.phase_factors(slab(ka, zeta))
    for outer in (1, -1):
        for ch, xi, phi in ((1, ph.xi_plus, ph.phi_plus), (-1, ph.xi_minus, ph.phi_minus)):
            m = ph.factor(outer, ch)
            assert abs(abs(m) - 1) < 1e-10
            assert abs(m - cmath.exp(1j * (outer * xi + phi))) < 1e-10


@given(ka_s, zeta_prop)
def test_modulus_identity_both_sides(ka, zeta):
    for sign in sc.CHANNELS:
        lhs, m22, closed = cr.phase_modulus_identity(slab(ka, zeta), sign)
        assert lhs == pytest.approx(closed, rel=1e-10)
        assert m22 == pytest.approx(closed, rel=1e-10)


def test_zero_field_phases():
    ka = 0.8
    ph = cr.phase_factors(slab(ka, 0.0))
    assert ph.xi_plus == 0 and ph.xi_minus == 0
    assert ph.phi_plus == pytest.approx(ka) and ph.phi_minus == pytest.approx(ka)
    for outer in (1, -1):
        for ch in (1, -1):
            assert ph.factor(outer, ch) == pytest.approx(cmath.exp(1j * ka), abs=1e-14)


def test_small_a_angles():
    ka, zeta = 1e-3, 0.3
    ph = cr.phase_factors(slab(ka, zeta))
    assert ph.xi_plus == pytest.approx(zeta * ka, abs=ka**2)
    assert ph.xi_minus == pytest.approx(-zeta * ka, abs=ka**2)
    assert ph.phi_plus == pytest.approx((1 - zeta) * ka, abs=ka**2)
    assert ph.phi_minus == pytest.approx((1 + zeta) * ka, abs=ka**2)


def test_phase_angles_rebuild_small_a_amplitudes():
    p = slab(1e-3, 0.3)
    got = cr.small_a_amplitudes(p).as_array()
    assert np.allclose(cr.phase_angle_prediction(p), got, atol=1e-5)


def test_small_a_amplitudes_example():
    p = slab(1e-4, 0.3)
    a = cr.small_a_amplitudes(p)
    assert a.t_up == pytest.approx(1, abs=1e-7)
    assert a.t_down == pytest.approx(-3e-5j, abs=1e-8)
    assert abs(a.r_up) < 1e-8
    assert a.r_down == pytest.approx(-3e-5j, abs=1e-8)


def test_small_a_residual_is_quadratic():
    # halving ka quarters the deviation
    devs = []
    for ka in (4e-3, 2e-3, 1e-3):
        p = slab(ka, 0.3)
        devs.append(np.max(np.abs(cr.small_a_amplitudes(p).as_array() - cr.small_a_prediction(p))))
    for big, small in zip(devs, devs[1:]):
        assert big / small == pytest.approx(4, rel=0.05)


def test_zero_field_small_a_amplitudes():
    a = cr.small_a_amplitudes(slab(0.3, 0.0))
    assert np.allclose(a.as_array(), [1, 0, 0, 0], atol=1e-14)


def test_matched_hamiltonian_parameters():
    p = slab(0.2, 0.3)
    h = cr.matched_dynamical_hamiltonian(p)
    assert (h.alpha, h.beta, h.gamma) == (0.0, 1.0, 1.0)
    assert h.g * h.beta * h.T == pytest.approx(p.zeta * p.ka)
    with pytest.raises(cr.OutOfScope):
        cr.matched_dynamical_hamiltonian(slab(0.2, 0.7))


def test_dynamical_spin_flip_amplitudes_match_stationary():
    errs = []
    for ka in (2e-4, 1e-4):
        p = slab(ka, 0.3)
        dyn = cr.dynamical_amplitudes(p)
        sta = cr.small_a_amplitudes(p)
        err = max(abs(dyn.t_down - sta.t_down), abs(dyn.r_down - sta.r_down))
        assert err < 10 * ka**2
        assert abs(dyn.r_up) < 10 * ka**2
        errs.append(err)
    assert errs[1] < errs[0]


@pytest.mark.parametrize("zeta", [0.5, 0.8])
def test_phase_factors_reject_evanescent(zeta):
    with pytest.raises(cr.OutOfScope):
        cr.phase_factors(slab(1.0, zeta))


def test_generator_blocks_against_scipy():
    # independent exponential of the 4x4 generator
    p = slab(1.0, 0.3)
    u = scipy.linalg.expm(-1j * p.m * p.a / p.k * cr.generator_dynamical(p))
    mp, mm = sc.transfer_matrix(p)
    for spin, m in ((cr.SPIN_PLUS, mp), (cr.SPIN_MINUS, mm)):
        e = np.kron(np.eye(2), spin.reshape(2, 1))
        assert np.allclose(e.conj().T @ u @ e, m, atol=1e-10)


def test_generator_zero_field():
    p = slab(0.9, 0.0)
    assert cr.generator_reproduces_transfer(p) < 1e-12
    gp, _ = cr.transfer_from_generator(p)
    assert np.allclose(gp, np.diag([cmath.exp(0.9j), cmath.exp(-0.9j)]), atol=1e-12)


@pytest.mark.parametrize("ka,zeta", [(1.0, 0.3), (2.5, 0.45), (1.0, 0.8), (2.0, 1.2)])
def test_generator_examples(ka, zeta):
    assert cr.generator_reproduces_transfer(slab(ka, zeta)) < 1e-10


def test_generator_grid():
    for ka in np.linspace(math.pi / 10, math.pi, 10):
        for zeta in np.linspace(0, 0.45, 10):
            assert cr.generator_reproduces_transfer(slab(ka, zeta)) < 1e-10


def test_abstract_amplitudes_type():
    a = cr.stationary_amplitudes(slab(0.5, 0.2))
    assert isinstance(a, am.AbstractAmplitudes)
    assert a.total_probability == pytest.approx(1, abs=1e-12)
