"""Invariant checks run by ``verify-all`` and ``verify-appendix``."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from . import abstract_model as am
from . import correspondence as corr
from . import ideal_spin as ideal
from . import linalg
from . import scattering as sc
from . import zeno_scattering as zs
from .fitting import loglinear_fit, loglog_fit


@dataclass(frozen=True)
class Check:
    name: str
    measured: float
    tolerance: float
    passed: bool


def _max_below(name: str, values, tol: float) -> Check:
    worst = float(np.max(values)) if len(values) else 0.0
    return Check(name, worst, tol, bool(worst <= tol))


def _rng():
    return np.random.default_rng(20240601)


# -- linalg -------------------------------------------------------------------

def check_exp_determinant() -> Check:
    rng = _rng()
    errs = []
    for n in (2, 3, 4):
        for _ in range(30):
            a = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
            a *= 10 * rng.uniform() / np.linalg.norm(a, 2)
            s = complex(rng.normal(), rng.normal()) / 2
            lhs = np.linalg.det(linalg.mat_exp(a, s))
            rhs = np.exp(s * np.trace(a))
            errs.append(abs(lhs - rhs) / abs(rhs))
    return _max_below("linalg: det exp(sA) = exp(s tr A)", errs, 1e-9)


def check_exp_inverse() -> Check:
    rng = _rng()
    errs = []
    for n in (2, 3, 4):
        for _ in range(30):
            a = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
            a *= 3 * rng.uniform() / np.linalg.norm(a, 2)
            s = 1j
            prod = linalg.mat_exp(a, s) @ linalg.mat_exp(a, -s)
            errs.append(np.linalg.norm(prod - np.eye(n)))
    return _max_below("linalg: exp(sA) exp(-sA) = I", errs, 1e-9)


def check_exp_paths_agree() -> Check:
    rng = _rng()
    errs = []
    for n in (2, 3, 4):
        for _ in range(30):
            a = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
            e1 = linalg.expm_eigen(a, 1j)
            e2 = linalg.expm_series(a, 1j)
            errs.append(np.linalg.norm(e1 - e2) / np.linalg.norm(e2))
    return _max_below("linalg: eigen and series exponentials agree", errs, 1e-9)


# -- ideal spin ---------------------------------------------------------------

def check_ideal_monotone() -> Check:
    probs = np.array([ideal.survival_resonant(n) for n in range(2, 10_001)])
    bad = int(np.sum(np.diff(probs) <= 0)) + int(ideal.survival_resonant(1) != 0.0)
    return Check("ideal: survival strictly increasing for N >= 2", float(bad), 0.0, bad == 0)


# -- abstract model -----------------------------------------------------------

def check_propagator_unitary() -> Check:
    rng = _rng()
    errs = []
    for _ in range(50):
        g, a, b, c, t = rng.normal(size=5) * [1, 2, 2, 2, 3]
        u = am.propagator(am.AbstractParams(g, a, b, t, gamma=c))
        errs.append(np.linalg.norm(u.conj().T @ u - np.eye(4)))
    return _max_below("abstract: propagator unitary", errs, 1e-10)


def check_levels_vs_propagator() -> Check:
    rng = _rng()
    errs = []
    for _ in range(50):
        g, a, b, t = rng.normal(size=4) * [1, 2, 2, 3]
        p = am.AbstractParams(g, a, b, t)
        lv = am.amplitudes_from_levels(p).as_array()
        pr = am.amplitudes_from_propagator(am.propagator(p)).as_array()
        fa = am.amplitudes_from_propagator(am.factorized_propagator(p)).as_array()
        errs.append(max(np.max(np.abs(lv - pr)), np.max(np.abs(fa - pr))))
    return _max_below("abstract: level formula = factorized = exp(-iHT)", errs, 1e-10)


def check_e2_block_unitary() -> Check:
    errs = []
    for alpha in (0.0, 0.5, 1.0, 2.0):
        for gt in (0.3, math.pi / 2, 4.0):
            w = am.survived_block(am.zeno_limit_E2(am.AbstractParams(1.0, alpha, -1.0, gt)))
            errs.append(np.linalg.norm(w.conj().T @ w - np.eye(3)))
    return _max_below("abstract: E2 limit unitary on survived subspace", errs, 1e-9)


def check_chain_rate() -> Check:
    p = am.AbstractParams(1.0, 2.0, -1.0, math.pi / 2)
    lim = am.zeno_limit_E1(p)
    ns = [100, 1000, 10000]
    errs = [np.linalg.norm(am.zeno_chain_finite(p, am.ProjectorKind.E1, n) - lim) for n in ns]
    slope = loglog_fit(ns, errs).slope
    return Check("abstract: E1 chain error slope in [-1.2, -0.8]", slope, 0.2, bool(-1.2 <= slope <= -0.8))


# -- scattering ---------------------------------------------------------------

def _scatter_grid(n: int = 12):
    for ka in np.linspace(math.pi / n, math.pi, n):
        for zeta in np.linspace(0, 1.2, n + 1):
            if abs(zeta - 0.5) < 1e-6:
                continue
            yield ka, zeta


def check_unimodular() -> Check:
    errs = []
    for ka, zeta in _scatter_grid():
        for m in sc.transfer_matrix(sc.ScatterParams.from_dimensionless(ka, 0.0, zeta)):
            errs.append(abs(np.linalg.det(m) - 1))
    return _max_below("scattering: det M = 1", errs, 1e-10)


def check_flux() -> Check:
    errs = []
    for ka, zeta in _scatter_grid():
        for n, kb in ((1, 0.0), (4, 0.7), (25, 1.3)):
            amps = sc.solve_no_measurement(sc.ScatterParams.from_dimensionless(ka, kb, zeta, n))
            errs.append(abs(amps.flux - 1))
    return _max_below("scattering: flux conservation", errs, 1e-9)


def check_bracket_vs_power() -> Check:
    errs = []
    for ka, zeta in _scatter_grid(6):
        p = sc.ScatterParams.from_dimensionless(ka, 0.4, zeta, 17)
        for s, w in zip(sc.CHANNELS, sc.lattice_transfer(p)):
            wb = sc.lattice_transfer_bracket(p, s)
            errs.append(np.linalg.norm(wb - w) / max(1.0, np.linalg.norm(w)))
    return _max_below("scattering: bracket form = matrix power", errs, 1e-9)


def check_total_transmission() -> Check:
    errs = []
    for nm, npl in ((1, 2), (1, 10), (2, 5)):
        amps = sc.solve_no_measurement(sc.total_transmission_setup(nm, npl))
        errs.append(abs(abs(amps.t_down) ** 2 - 1))
    return _max_below("scattering: total spin-flip transmission", errs, 1e-9)


# -- measured chains ----------------------------------------------------------

def check_insensitive_limit() -> Check:
    errs = [abs(zs.insensitive_chain(sc.ScatterParams.from_dimensionless(kd / 10, 0, z, 10),
                                     zs.Regime.CONTINUOUS_LIMIT).survival - 1)
            for kd in (0.5, 3.0, 17.0) for z in (0.0, 0.3, 0.7, 2.0)]
    return _max_below("zeno: insensitive limit survival = 1", errs, 1e-9)


def check_sensitive_conservation() -> Check:
    errs = []
    for zeta in np.linspace(0, 1.2, 25):
        for amps in zs.sensitive_limit_scan(np.linspace(0, 30, 31), zeta):
            errs.append(abs(abs(amps.t_up) ** 2 + abs(amps.r_up) ** 2 + abs(amps.r_down) ** 2 - 1))
    return _max_below("zeno: sensitive limit conserves probability", errs, 1e-9)


def check_pseudo_unitary() -> Check:
    errs = []
    for zeta in (0.0, 0.3, zs.ZETA_C, 1.0):
        for kd in (1.0, 5.0):
            w = zs.sensitive_limit_matrix(kd, zeta)
            errs.append(np.linalg.norm(w.conj().T @ zs.SIGMA_3 @ w - zs.SIGMA_3) / np.linalg.norm(w) ** 2)
    return _max_below("zeno: W^H S3 W = S3", errs, 1e-9)


def check_critical_closed_form() -> Check:
    g = zs.critical_generator()
    errs = [np.max(np.abs(g @ g @ (g + 2 * np.eye(3))))]
    for kd in (1.0, 5.0, 10.0):
        errs.append(np.max(np.abs(linalg.mat_exp(g, -1j * kd) - zs.critical_exp_closed_form(kd))))
    return _max_below("zeno: critical exponential closed form", errs, 1e-8)


def check_critical_slope() -> Check:
    kd = np.linspace(20, 200, 40)
    t = [zs.sensitive_limit_transmission(x, zs.ZETA_C) for x in kd]
    slope = loglog_fit(kd, t).slope
    return Check("zeno: critical decay slope -2 +- 0.1", slope, 0.1, bool(abs(slope + 2) <= 0.1))


def check_exponential_decay() -> Check:
    kd = np.linspace(5, 30, 12)
    fit = loglinear_fit(kd, [zs.sensitive_limit_transmission(x, 1.0) for x in kd])
    return Check("zeno: exponential decay at zeta = 1", fit.relative_residual, 0.05,
                 bool(fit.slope < 0 and fit.relative_residual < 0.05))


def check_regime_agreement() -> Check:
    bad = sum(zs.regime_classify(z) is not zs.regime_from_spectrum(z)
              for z in list(np.linspace(0, 1.5, 31)) + [zs.ZETA_C])
    return Check("zeno: regime threshold agrees with Z2 spectrum", float(bad), 0.0, bad == 0)


# -- correspondence -----------------------------------------------------------

def appendix_rows(ka_values, zeta_values):
    """Rows ``(ka, zeta, generator_dev, hadamard_dev, modulus_dev)``."""
    rows = []
    for ka in ka_values:
        for zeta in zeta_values:
            p = sc.ScatterParams.from_dimensionless(ka, 0.0, zeta)
            gen = corr.generator_reproduces_transfer(p)
            had = corr.hadamard_relation_residual(p)
            mod = 0.0
            for s in sc.CHANNELS:
                a, b, c = corr.phase_modulus_identity(p, s)
                mod = max(mod, abs(a - b), abs(b - c))
            rows.append((ka, zeta, gen, had, mod))
    return rows


def check_appendix() -> Check:
    rows = appendix_rows(np.linspace(math.pi / 10, math.pi, 10), np.linspace(0, 0.45, 10))
    return _max_below("appendix: generator, Hadamard and modulus identities", [max(r[2:]) for r in rows], 1e-10)


ALL_CHECKS: list[Callable[[], Check]] = [
    check_exp_determinant,
    check_exp_inverse,
    check_exp_paths_agree,
    check_ideal_monotone,
    check_propagator_unitary,
    check_levels_vs_propagator,
    check_e2_block_unitary,
    check_chain_rate,
    check_unimodular,
    check_flux,
    check_bracket_vs_power,
    check_total_transmission,
    check_insensitive_limit,
    check_sensitive_conservation,
    check_pseudo_unitary,
    check_critical_closed_form,
    check_critical_slope,
    check_exponential_decay,
    check_regime_agreement,
    check_appendix,
]


def run_all() -> list[Check]:
    return [fn() for fn in ALL_CHECKS]
