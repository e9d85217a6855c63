"""Four-state direction x spin model and its Zeno limits.

Basis ordering is ``|R up>, |R down>, |L up>, |L down>``, i.e. the Kronecker
product (direction) x (spin). ``tau_*`` act on direction, ``sigma_*`` on spin.
The Hamiltonian is ``g (1 + alpha tau_1 + beta sigma_1 + gamma tau_1 sigma_1)``;
``gamma = alpha * beta`` gives the factorized form ``g (1 + alpha tau_1)(1 + beta sigma_1)``.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from .linalg import I2, PAULI_1, PAULI_3, mat_exp, mat_power

R_UP, R_DOWN, L_UP, L_DOWN = range(4)
SURVIVED = [R_UP, L_UP, L_DOWN]

TAU_1 = np.kron(PAULI_1, I2)
SIGMA_1 = np.kron(I2, PAULI_1)
SIGMA_3 = np.kron(I2, PAULI_3)
TAU1_SIGMA1 = TAU_1 @ SIGMA_1
I4 = np.eye(4, dtype=complex)
ZERO_TOL = 1e-10


def basis_state(index: int) -> np.ndarray:
    v = np.zeros(4, dtype=complex)
    v[index] = 1
    return v


def _drop(*indices: int) -> np.ndarray:
    e = I4.copy()
    for i in indices:
        e[i, i] = 0
    return e


E1 = _drop(R_DOWN, L_DOWN)
E2 = _drop(R_DOWN)


class ProjectorKind(enum.Enum):
    FULL_IDENTITY = "identity"
    E1 = "E1"
    E2 = "E2"

    @property
    def matrix(self) -> np.ndarray:
        return {"identity": I4, "E1": E1, "E2": E2}[self.value]


class TransmissionCase(enum.Enum):
    CASE_I = "case-i"
    CASE_II = "case-ii"
    NEITHER = "neither"


class NotFactorized(ValueError):
    """The requested closed form needs ``gamma == alpha * beta``."""


@dataclass(frozen=True)
class AbstractParams:
    g: float
    alpha: float
    beta: float
    T: float
    gamma: float | None = None

    def __post_init__(self):
        if self.gamma is None:
            object.__setattr__(self, "gamma", self.alpha * self.beta)
        if not math.isfinite(self.g * self.T):
            raise ValueError("g*T must be finite")

    @property
    def factorized(self) -> bool:
        return abs(self.gamma - self.alpha * self.beta) <= 1e-12 * max(1.0, abs(self.alpha * self.beta))

    def with_time(self, T: float) -> "AbstractParams":
        return AbstractParams(self.g, self.alpha, self.beta, T, self.gamma)


@dataclass(frozen=True)
class AbstractAmplitudes:
    t_up: complex
    t_down: complex
    r_up: complex
    r_down: complex

    def as_array(self) -> np.ndarray:
        return np.array([self.t_up, self.t_down, self.r_up, self.r_down], dtype=complex)

    @property
    def total_probability(self) -> float:
        return float(np.sum(np.abs(self.as_array()) ** 2))


def _require_factorized(p: AbstractParams) -> None:
    if not p.factorized:
        raise NotFactorized(f"gamma={p.gamma} differs from alpha*beta={p.alpha * p.beta}")


def hamiltonian(p: AbstractParams) -> np.ndarray:
    return p.g * (I4 + p.alpha * TAU_1 + p.beta * SIGMA_1 + p.gamma * TAU1_SIGMA1)


def energy_levels(p: AbstractParams) -> dict[tuple[int, int], float]:
    """Levels ``g (1 + tau alpha)(1 + sigma beta)`` keyed by ``(tau, sigma)``."""
    _require_factorized(p)
    return {
        (tau, sigma): p.g * (1 + tau * p.alpha) * (1 + sigma * p.beta)
        for tau in (1, -1)
        for sigma in (1, -1)
    }


def propagator(p: AbstractParams) -> np.ndarray:
    """``exp(-i H T)``."""
    return mat_exp(hamiltonian(p), -1j * p.T)


def factorized_propagator(p: AbstractParams) -> np.ndarray:
    """Product of the four commuting exponentials (valid for ``gamma = alpha beta``)."""
    _require_factorized(p)
    gt = p.g * p.T
    return (
        np.exp(-1j * gt)
        * mat_exp(TAU_1, -1j * p.alpha * gt)
        @ mat_exp(SIGMA_1, -1j * p.beta * gt)
        @ mat_exp(TAU1_SIGMA1, -1j * p.alpha * p.beta * gt)
    )


def amplitudes_from_propagator(u: np.ndarray) -> AbstractAmplitudes:
    """Column ``|R up>`` of an evolution operator read as (t_up, t_down, r_up, r_down)."""
    col = u[:, R_UP]
    return AbstractAmplitudes(*(complex(col[i]) for i in (R_UP, R_DOWN, L_UP, L_DOWN)))


def amplitudes_from_levels(p: AbstractParams) -> AbstractAmplitudes:
    levels = energy_levels(p)
    phases = np.array(
        [
            [np.exp(-1j * levels[1, 1] * p.T), np.exp(-1j * levels[1, -1] * p.T)],
            [np.exp(-1j * levels[-1, 1] * p.T), np.exp(-1j * levels[-1, -1] * p.T)],
        ]
    )
    h = np.array([[1, 1], [1, -1]], dtype=complex)
    (t_up, t_down), (r_up, r_down) = h @ phases @ h / 4
    return AbstractAmplitudes(complex(t_up), complex(t_down), complex(r_up), complex(r_down))


def check_total_transmission_case(p: AbstractParams, tol: float = ZERO_TOL) -> TransmissionCase:
    """Which trigonometric condition for spin-flipped total transmission holds, if any."""
    a = p.alpha * p.g * p.T
    b = p.beta * p.g * p.T
    ab = p.alpha * p.beta * p.g * p.T
    if all(abs(x) <= tol for x in (math.cos(a), math.sin(b), math.cos(ab))):
        return TransmissionCase.CASE_I
    if all(abs(x) <= tol for x in (math.sin(a), math.cos(b), math.sin(ab))):
        return TransmissionCase.CASE_II
    return TransmissionCase.NEITHER


def zeno_chain_finite(p: AbstractParams, proj: ProjectorKind, N: int) -> np.ndarray:
    """``(E exp(-iHT/N) E)^N``."""
    if N < 1:
        raise ValueError("N must be >= 1")
    e = proj.matrix
    step = e @ propagator(p.with_time(p.T / N)) @ e
    return mat_power(step, N)


def zeno_limit_E1(p: AbstractParams) -> np.ndarray:
    """``exp(-igT) E1 exp(-i alpha g T tau_1)``."""
    _require_factorized(p)
    gt = p.g * p.T
    return np.exp(-1j * gt) * E1 @ mat_exp(TAU_1, -1j * p.alpha * gt)


def z_operator(p: AbstractParams) -> np.ndarray:
    """``E2 (H/g - 1) E2``, written without dividing by ``g``."""
    return E2 @ (p.alpha * TAU_1 + p.beta * SIGMA_1 + p.gamma * TAU1_SIGMA1) @ E2


def zeno_limit_E2(p: AbstractParams) -> np.ndarray:
    """``exp(-igT) exp(-igT Z) E2``."""
    gt = p.g * p.T
    return np.exp(-1j * gt) * mat_exp(z_operator(p), -1j * gt) @ E2


def e2_theta(alpha: float) -> float:
    return math.sqrt(8 * alpha**2 + 1) / 2


def e2_limit_on_r_up(alpha: float, gT: float) -> np.ndarray:
    """Closed-form image of ``|R up>`` under the E2 Zeno limit for ``beta = -1``."""
    th = e2_theta(alpha)
    s = math.sin(gT * th)
    out = np.zeros(4, dtype=complex)
    out[R_UP] = math.cos(gT * th) + 0.5j / th * s
    out[L_DOWN] = 1j * alpha / th * s
    out[L_UP] = -1j * alpha / th * s
    return np.exp(-1.5j * gT) * out


def survived_block(m: np.ndarray) -> np.ndarray:
    """Restriction of a 4x4 operator to span{|R up>, |L up>, |L down>}."""
    return m[np.ix_(SURVIVED, SURVIVED)]
