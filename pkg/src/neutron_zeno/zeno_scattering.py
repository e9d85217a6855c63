"""Slab lattices with a spin measurement in every gap.

Two measurement schemes:

* direction-insensitive: spin-down is removed from both right- and left-movers,
  leaving a 2x2 chain on ``(R_up, L_up)``;
* direction-sensitive: only right-moving spin-down is removed, leaving a 3x3
  chain on ``(R_up, L_up, L_down)`` with indefinite flux metric ``diag(1, -1, -1)``.

Each scheme has a finite-N chain and a continuous-measurement limit
(``N -> inf``, ``a -> 0`` at fixed ``D = N a``, ``N b -> 0``) evaluated in closed form.
"""
from __future__ import annotations

import cmath
import enum
import math
from dataclasses import dataclass

import numpy as np

from .linalg import PAULI_3, SingularMatrix, eigen, mat_exp, mat_power_scaled
from .scattering import (
    ScatterAmplitudes,
    ScatterParams,
    gap_matrix,
    solve_no_measurement,
    total_transmission_setup,
    transfer_matrix,
)

ZETA_C = 4 * math.sqrt(3) / 9
SIGMA_3 = np.diag([1.0, -1.0, -1.0]).astype(complex)
CRITICAL_TOL = 1e-10


class DegenerateCell(ValueError):
    """The averaged transfer matrix element ``Mbar_22`` vanishes."""


class Scheme(enum.Enum):
    INSENSITIVE = "insensitive"
    SENSITIVE = "sensitive"


class Regime(enum.Enum):
    FINITE_N = "finite"
    CONTINUOUS_LIMIT = "limit"


class ZetaRegime(enum.Enum):
    OSCILLATORY = "oscillatory"
    CRITICAL_DECAY = "critical"
    EXPONENTIAL_DECAY = "exponential"


@dataclass(frozen=True)
class MeasuredChainResult:
    amplitudes: ScatterAmplitudes
    survival: float
    scheme: Scheme
    regime: Regime
    N: int | None = None


def mean_and_difference(p: ScatterParams) -> tuple[np.ndarray, np.ndarray]:
    """``Mbar = (M+ + M-)/2`` and ``dM = (M+ - M-)/2``.

    In the (up, down) spin basis the slab acts as ``Mbar x 1 + dM x sigma_1``.
    """
    mp, mm = transfer_matrix(p)
    return (mp + mm) / 2, (mp - mm) / 2


# -- direction-insensitive ----------------------------------------------------

def insensitive_cell_matrix(p: ScatterParams) -> np.ndarray:
    """Slab matrix on the spin-up pair after eliminating ``L_down`` (2x2)."""
    mbar, dm = mean_and_difference(p)
    if abs(mbar[1, 1]) <= 1e-12:
        raise DegenerateCell(f"|Mbar_22| = {abs(mbar[1, 1]):.3e}")
    return mbar - np.outer(dm[:, 1], dm[1, :]) / mbar[1, 1]


def insensitive_limit_matrix(kD: float) -> np.ndarray:
    return mat_exp(PAULI_3, 1j * kD)


def _insensitive_limit_result(kD: float) -> MeasuredChainResult:
    # W = exp(ikD tau_3): R_N = exp(ikD), L_0 = 0
    w = insensitive_limit_matrix(kD)
    t_up = cmath.exp(-1j * kD) * w[0, 0]
    amps = ScatterAmplitudes(complex(t_up), 0j, 0j, 0j)
    return MeasuredChainResult(amps, abs(t_up) ** 2, Scheme.INSENSITIVE, Regime.CONTINUOUS_LIMIT)


def insensitive_chain(p: ScatterParams, regime: Regime = Regime.FINITE_N) -> MeasuredChainResult:
    """Spin-up transmission with spin-down removed in every gap.

    The finite chain is ``W = (gap @ M1)^N``; the limit is ``exp(i kD tau_3)`` and
    depends on ``kD`` only. With ``R_0 = 1`` and ``L_N = 0``,
    ``r = -W21 / W22`` and ``t = exp(-ik y_N) det W / W22``; the last form
    avoids the cancellation in ``W11 + W12 r`` when ``W`` grows.
    """
    if regime is Regime.CONTINUOUS_LIMIT:
        return _insensitive_limit_result(p.kD)
    cell = gap_matrix(p.kb) @ insensitive_cell_matrix(p)
    w, log_s = mat_power_scaled(cell, p.N)
    if w[1, 1] == 0:
        raise SingularMatrix("chain matrix element W22 vanishes")
    r_up = -w[1, 0] / w[1, 1]
    # det W = det(cell)^N = exp(2 log_s) det(w)
    log_t = -1j * p.k * p.y_N + p.N * cmath.log(np.linalg.det(cell)) - log_s - cmath.log(w[1, 1])
    t_up = cmath.exp(log_t) if log_t.real > -745 else 0j
    amps = ScatterAmplitudes(complex(t_up), 0j, complex(r_up), 0j)
    return MeasuredChainResult(amps, abs(t_up) ** 2 + abs(r_up) ** 2, Scheme.INSENSITIVE, Regime.FINITE_N, p.N)


# -- direction-sensitive ------------------------------------------------------

def sensitive_cell_matrix(p: ScatterParams) -> np.ndarray:
    """3x3 slab matrix on ``(R_up, L_up, L_down)`` with right-moving spin-down removed."""
    mbar, dm = mean_and_difference(p)
    return np.array(
        [
            [mbar[0, 0], mbar[0, 1], dm[0, 1]],
            [mbar[1, 0], mbar[1, 1], dm[1, 1]],
            [dm[1, 0], dm[1, 1], mbar[1, 1]],
        ],
        dtype=complex,
    )


def sensitive_gap_matrix(kb: float) -> np.ndarray:
    return np.diag(np.exp(1j * kb * np.diag(SIGMA_3).real))


def z2_matrix(zeta: float) -> np.ndarray:
    """Generator of the sensitive chain in the continuous limit (real, traceless)."""
    return np.array(
        [[4 / 3, 0, -zeta], [0, -2 / 3, zeta], [zeta, zeta, -2 / 3]],
        dtype=complex,
    )


def sensitive_limit_matrix(kD: float, zeta: float) -> np.ndarray:
    """``exp(-i kD/3) exp(i kD Z2)``."""
    return cmath.exp(-1j * kD / 3) * mat_exp(z2_matrix(zeta), 1j * kD)


def _sensitive_from_inverse_column(col: np.ndarray, log_scale: complex, kD: float) -> ScatterAmplitudes:
    # (1, r_up, r_down) = exp(ikD) t_up * W^-1[:, 0],  W^-1[:, 0] = exp(log_scale) * col
    log_t = -1j * kD - log_scale - cmath.log(col[0])
    t_up = cmath.exp(log_t) if log_t.real > -745 else 0j
    return ScatterAmplitudes(complex(t_up), 0j, complex(col[1] / col[0]), complex(col[2] / col[0]))


def sensitive_limit_amplitudes(kD: float, zeta: float) -> ScatterAmplitudes:
    """Continuous-limit amplitudes.

    ``t_up = exp(-4ikD/3) / (exp(-ikD Z2))_11``; the reflections come from the
    same relation solved through the inverse ``exp(ikD/3) exp(-ikD Z2)``. The
    exponent is shifted by ``i max Im(lambda)`` so large ``kD`` in the decaying
    regime underflows to ``t_up = 0`` instead of overflowing.
    """
    z2 = z2_matrix(zeta)
    shift = 1j * max(v.imag for v in eigen(z2).values)
    col = mat_exp(z2 - shift * np.eye(3), -1j * kD)[:, 0]
    log_scale = 1j * kD / 3 - 1j * kD * shift
    return _sensitive_from_inverse_column(col, log_scale, kD)


def sensitive_chain(p: ScatterParams, regime: Regime = Regime.FINITE_N) -> MeasuredChainResult:
    """Spin-up transmission and both reflections with right-moving spin-down removed.

    Solves ``exp(ikL) (t_up, 0, 0) = W (1, r_up, r_down)`` with
    ``W = (gap @ M2)^N`` (``L = y_N``) or its continuous limit (``L = D``),
    in both cases through the first column of ``W^-1``.
    """
    if regime is Regime.CONTINUOUS_LIMIT:
        amps = sensitive_limit_amplitudes(p.kD, p.zeta)
        n = None
    else:
        cell = sensitive_gap_matrix(p.kb) @ sensitive_cell_matrix(p)
        if abs(np.linalg.det(cell)) < 1e-300:
            raise SingularMatrix("sensitive cell matrix is singular")
        w_inv, log_s = mat_power_scaled(np.linalg.inv(cell), p.N)
        col = w_inv[:, 0]
        if col[0] == 0:
            raise SingularMatrix("chain has no transmitted solution")
        # _sensitive_from_inverse_column subtracts i kD; use the lattice length instead
        amps = _sensitive_from_inverse_column(col, log_s + 1j * (p.k * p.y_N - p.kD), p.kD)
        n = p.N
    survival = abs(amps.t_up) ** 2 + abs(amps.r_up) ** 2 + abs(amps.r_down) ** 2
    return MeasuredChainResult(amps, survival, Scheme.SENSITIVE, regime, n)


def sensitive_limit_transmission(kD: float, zeta: float) -> float:
    return abs(sensitive_limit_amplitudes(kD, zeta).t_up) ** 2


def sensitive_limit_scan(kD_values, zeta: float) -> list[ScatterAmplitudes]:
    """:func:`sensitive_limit_amplitudes` over many ``kD`` sharing one decomposition of ``Z2``."""
    z2 = z2_matrix(zeta)
    dec = eigen(z2)
    if dec.defective:
        return [sensitive_limit_amplitudes(kD, zeta) for kD in kD_values]
    shift = 1j * max(v.imag for v in dec.values)
    v = dec.vectors
    inv_col = np.linalg.inv(v)[:, 0]
    out = []
    for kD in kD_values:
        col = v @ (np.exp(-1j * kD * (dec.values - shift)) * inv_col)
        out.append(_sensitive_from_inverse_column(col, 1j * kD / 3 - 1j * kD * shift, kD))
    return out


def critical_generator() -> np.ndarray:
    """``G = Z2 - 2/3`` at the critical coupling; satisfies ``G^2 (G + 2) = 0``."""
    return z2_matrix(ZETA_C) - 2 / 3 * np.eye(3)


def critical_exp_closed_form(kD: float) -> np.ndarray:
    """``exp(-ikD G) = 1 - ikD G + (exp(2ikD) - 1 - 2ikD) G^2 / 4`` at the critical coupling."""
    g = critical_generator()
    return np.eye(3) - 1j * kD * g + (cmath.exp(2j * kD) - 1 - 2j * kD) * (g @ g) / 4


def regime_classify(zeta: float) -> ZetaRegime:
    if zeta < 0:
        raise ValueError("zeta must be >= 0")
    if abs(zeta - ZETA_C) < CRITICAL_TOL:
        return ZetaRegime.CRITICAL_DECAY
    return ZetaRegime.OSCILLATORY if zeta < ZETA_C else ZetaRegime.EXPONENTIAL_DECAY


def regime_from_spectrum(zeta: float, tol: float = 1e-9) -> ZetaRegime:
    """Classification read off the eigenvalues of ``Z2`` (independent of the threshold)."""
    dec = eigen(z2_matrix(zeta))
    if dec.defective:
        return ZetaRegime.CRITICAL_DECAY
    if all(abs(v.imag) <= tol for v in dec.values):
        return ZetaRegime.OSCILLATORY
    return ZetaRegime.EXPONENTIAL_DECAY


# -- comparison table ---------------------------------------------------------

def fig6_parameters(n: int, offset: int = 9) -> tuple[float, float]:
    """``(kD, zeta)`` of the total-transmission point with ``n_- = n``, ``n_+ = n + offset``."""
    p = total_transmission_setup(n, n + offset)
    return p.kD, p.zeta


def zeno_vs_no_measurement_report(n_values, offset: int = 9) -> list[tuple[int, float, float, float]]:
    """Rows ``(n, |t_down|^2 unmeasured, |t_up|^2 insensitive limit, |t_up|^2 sensitive limit)``."""
    rows = []
    for n in n_values:
        p = total_transmission_setup(n, n + offset)
        free = solve_no_measurement(p)
        ins = insensitive_chain(p, Regime.CONTINUOUS_LIMIT)
        sen = sensitive_chain(p, Regime.CONTINUOUS_LIMIT)
        rows.append((n, abs(free.t_down) ** 2, abs(ins.amplitudes.t_up) ** 2, abs(sen.amplitudes.t_up) ** 2))
    return rows
