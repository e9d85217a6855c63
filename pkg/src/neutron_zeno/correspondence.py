"""Cross-checks between the stationary slab problem and the four-state dynamical model.

A single slab of width ``a`` traversed in time ``T = m a / k`` is compared with
evolution under ``H_dyn = muB (1 + tau_1) sigma_1``; the slab transfer matrix is
recovered exactly from the generator
``G_d = muB (i tau_2 + tau_3) sigma_1 - 2 E tau_3`` restricted to each
``sigma_1`` eigenspace.
"""
from __future__ import annotations

import cmath
import math
from dataclasses import dataclass

import numpy as np

from .abstract_model import AbstractAmplitudes, AbstractParams, amplitudes_from_propagator, propagator
from .linalg import I2, PAULI_1, PAULI_2, PAULI_3, mat_exp
from .scattering import ScatterParams, transfer_matrix

HADAMARD_4 = np.array(
    [[1, 1, 1, 1], [1, -1, 1, -1], [1, 1, -1, -1], [1, -1, -1, 1]],
    dtype=complex,
)
SPIN_PLUS = np.array([1, 1], dtype=complex) / math.sqrt(2)
SPIN_MINUS = np.array([1, -1], dtype=complex) / math.sqrt(2)


class OutOfScope(ValueError):
    """Phase-factor quantities are only real angles for propagating channels (``zeta < 1/2``)."""


@dataclass(frozen=True)
class PhaseData:
    M_plus_plus: complex
    M_minus_plus: complex
    M_plus_minus: complex
    M_minus_minus: complex
    xi_plus: float
    xi_minus: float
    phi_plus: float
    phi_minus: float

    def factor(self, outer: int, channel: int) -> complex:
        """``calM_{outer, channel}`` with signs ``+1`` / ``-1``."""
        return {
            (1, 1): self.M_plus_plus,
            (-1, 1): self.M_minus_plus,
            (1, -1): self.M_plus_minus,
            (-1, -1): self.M_minus_minus,
        }[outer, channel]


def _require_propagating(p: ScatterParams) -> None:
    if not p.zeta < 0.5:
        raise OutOfScope(f"zeta = {p.zeta} >= 1/2")


def single_slab_outputs(p: ScatterParams) -> np.ndarray:
    """``(R'_1 up, R'_1 down, L_0 up, L_0 down)`` for a spin-up wave on one slab."""
    mp, mm = transfer_matrix(p)
    tp, tm = 1 / mp[1, 1], 1 / mm[1, 1]
    rp, rm = -mp[1, 0] / mp[1, 1], -mm[1, 0] / mm[1, 1]
    return np.array([(tp + tm) / 2, (tp - tm) / 2, (rp + rm) / 2, (rp - rm) / 2], dtype=complex)


def phase_factors(p: ScatterParams) -> PhaseData:
    """Unimodular factors ``(1 +/- M21) / M22`` per channel and their angles.

    ``phi`` is taken as ``atan2(cosh eta sin k a, cos k a)``, which agrees with
    ``arctan(cosh eta tan k a)`` modulo pi and keeps the factorization
    ``calM = exp(i(+/-xi + phi))`` exact for ``k a`` beyond pi/2.
    """
    _require_propagating(p)
    p = p.replace(N=1)
    mp, mm = transfer_matrix(p)
    angles = {}
    for sign in (1, -1):
        ks = p.k_channel(sign).real
        eta = p.eta(sign).real
        angles[sign] = (
            math.atan(math.sinh(eta) * math.sin(ks * p.a)),
            math.atan2(math.cosh(eta) * math.sin(ks * p.a), math.cos(ks * p.a)),
        )
    return PhaseData(
        M_plus_plus=complex((1 + mp[1, 0]) / mp[1, 1]),
        M_minus_plus=complex((1 - mp[1, 0]) / mp[1, 1]),
        M_plus_minus=complex((1 + mm[1, 0]) / mm[1, 1]),
        M_minus_minus=complex((1 - mm[1, 0]) / mm[1, 1]),
        xi_plus=angles[1][0],
        xi_minus=angles[-1][0],
        phi_plus=angles[1][1],
        phi_minus=angles[-1][1],
    )


def hadamard_relation_residual(p: ScatterParams) -> float:
    """Max deviation in ``H4 (R'up, R'down, Lup, Ldown) = (calM-+, calM--, calM++, calM+-)``."""
    ph = phase_factors(p)
    lhs = HADAMARD_4 @ single_slab_outputs(p.replace(N=1))
    rhs = np.array([ph.M_minus_plus, ph.M_minus_minus, ph.M_plus_plus, ph.M_plus_minus])
    return float(np.max(np.abs(lhs - rhs)))


def phase_modulus_identity(p: ScatterParams, sign: int) -> tuple[float, float, float]:
    """``|1 + M21|^2``, ``|M22|^2`` and ``1 + sinh^2 eta sin^2 k a`` for one channel."""
    _require_propagating(p)
    m = transfer_matrix(p)[0 if sign == 1 else 1]
    eta = p.eta(sign).real
    ks = p.k_channel(sign).real
    closed = 1 + math.sinh(eta) ** 2 * math.sin(ks * p.a) ** 2
    return abs(1 + sign * m[1, 0]) ** 2, abs(m[1, 1]) ** 2, closed


def stationary_amplitudes(p: ScatterParams) -> AbstractAmplitudes:
    """``(e^{-ika} R'_1 up, e^{-ika} R'_1 down, L_0 up, L_0 down)`` for one slab."""
    out = single_slab_outputs(p.replace(N=1))
    ph = cmath.exp(-1j * p.ka)
    return AbstractAmplitudes(complex(ph * out[0]), complex(ph * out[1]), complex(out[2]), complex(out[3]))


def small_a_amplitudes(p: ScatterParams) -> AbstractAmplitudes:
    """Stationary single-slab amplitudes; for ``ka << 1`` they approach ``(1, -i zeta ka, 0, -i zeta ka)``."""
    return stationary_amplitudes(p)


def small_a_prediction(p: ScatterParams) -> np.ndarray:
    z = p.zeta * p.ka
    return np.array([1, -1j * z, 0, -1j * z], dtype=complex)


def phase_angle_prediction(p: ScatterParams) -> np.ndarray:
    """Amplitudes rebuilt from the angles: ``1 - ika + i(phi+ + phi-)/2`` etc."""
    ph = phase_factors(p)
    return np.array(
        [
            1 - 1j * p.ka + 0.5j * (ph.phi_plus + ph.phi_minus),
            0.5j * (ph.phi_plus - ph.phi_minus),
            -0.5j * (ph.xi_plus + ph.xi_minus),
            -0.5j * (ph.xi_plus - ph.xi_minus),
        ],
        dtype=complex,
    )


def matched_dynamical_hamiltonian(p: ScatterParams) -> AbstractParams:
    """``H_dyn = muB (1 + tau_1) sigma_1`` as ``g = muB, alpha = 0, beta = gamma = 1`` over ``T = m a / k``.

    The ``g * 1`` term of the parametrization only contributes a global phase.
    """
    _require_propagating(p)
    return AbstractParams(g=p.muB, alpha=0.0, beta=1.0, gamma=1.0, T=p.m * p.a / p.k)


def dynamical_amplitudes(p: ScatterParams) -> AbstractAmplitudes:
    return amplitudes_from_propagator(propagator(matched_dynamical_hamiltonian(p)))


def generator_dynamical(p: ScatterParams) -> np.ndarray:
    """``G_d = muB (i tau_2 + tau_3) sigma_1 - 2 E tau_3`` on direction x spin."""
    direction = 1j * PAULI_2 + PAULI_3
    return p.muB * np.kron(direction, PAULI_1) - 2 * p.energy * np.kron(PAULI_3, I2)


def transfer_from_generator(p: ScatterParams) -> tuple[np.ndarray, np.ndarray]:
    """``<pm| exp(-i G_d T) |pm>`` with ``T = m a / k``, as 2x2 direction blocks."""
    u = mat_exp(generator_dynamical(p), -1j * p.m * p.a / p.k)
    blocks = []
    for spin in (SPIN_PLUS, SPIN_MINUS):
        embed = np.kron(I2, spin.reshape(2, 1))  # 4x2
        blocks.append(embed.conj().T @ u @ embed)
    return blocks[0], blocks[1]


def generator_reproduces_transfer(p: ScatterParams) -> float:
    """Max entrywise deviation between the generator blocks and the slab transfer matrices."""
    gp, gm = transfer_from_generator(p)
    mp, mm = transfer_matrix(p)
    return float(max(np.max(np.abs(gp - mp)), np.max(np.abs(gm - mm))))
