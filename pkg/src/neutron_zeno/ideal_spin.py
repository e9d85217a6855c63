"""Two-level spin in a transverse field, with and without repeated spin-up checks."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .linalg import PAULI_1, mat_exp, mat_power

UP = np.array([1, 0], dtype=complex)
DOWN = np.array([0, 1], dtype=complex)
RHO_UP = np.outer(UP, UP.conj())
RHO_DOWN = np.outer(DOWN, DOWN.conj())
PROJECT_UP = RHO_UP


class InvalidDensity(ValueError):
    pass


@dataclass(frozen=True)
class IdealParams:
    """Precession frequency ``omega = 2 mu B``, total time ``T`` and measurement count ``N``."""

    omega: float
    T: float
    N: int = 1

    def __post_init__(self):
        if not self.omega > 0 or not self.T > 0:
            raise ValueError("omega and T must be positive")
        if int(self.N) != self.N or self.N < 1:
            raise ValueError("N must be an integer >= 1")

    @classmethod
    def resonant(cls, N: int, m: int = 0, omega: float = 1.0) -> "IdealParams":
        """Parameters satisfying the matching condition ``omega T = (2m+1) pi``."""
        return cls(omega=omega, T=(2 * m + 1) * math.pi / omega, N=N)


def check_density(rho, tol: float = 1e-12) -> np.ndarray:
    rho = np.asarray(rho, dtype=complex)
    if rho.shape != (2, 2):
        raise InvalidDensity(f"expected 2x2 density matrix, got {rho.shape}")
    if np.max(np.abs(rho - rho.conj().T)) > tol:
        raise InvalidDensity("density matrix is not Hermitian")
    if abs(np.trace(rho) - 1) > tol:
        raise InvalidDensity("density matrix trace differs from 1")
    if np.min(np.linalg.eigvalsh(rho)) < -tol:
        raise InvalidDensity("density matrix has negative eigenvalues")
    return rho


def hamiltonian(omega: float) -> np.ndarray:
    return 0.5 * omega * PAULI_1


def evolve_free(rho0, p: IdealParams) -> np.ndarray:
    """``exp(-iHT) rho0 exp(iHT)`` with ``H = (omega/2) sigma_1``."""
    rho0 = check_density(rho0)
    u = mat_exp(hamiltonian(p.omega), -1j * p.T)
    rho = u @ rho0 @ u.conj().T
    # restore exact Hermiticity lost to rounding
    return 0.5 * (rho + rho.conj().T)


def evolve_free_closed_form(p: IdealParams) -> np.ndarray:
    """Expansion of the evolved spin-up density in the basis projectors.

    ``cos^2(wT/2) rho_upup + sin^2(wT/2) rho_downdown + (i/2) sin(wT) (rho_updown - rho_downup)``
    with ``rho_updown = |up><down|``.
    """
    wt = p.omega * p.T
    c2, s2 = math.cos(wt / 2) ** 2, math.sin(wt / 2) ** 2
    cross = np.array([[0, 1], [-1, 0]], dtype=complex)  # rho_updown - rho_downup
    return c2 * RHO_UP + s2 * RHO_DOWN + 0.5j * math.sin(wt) * cross


def _cos_pi_pow(u: float, n: int) -> float:
    """``cos(pi u)^(2n)``, exactly zero at half-integer ``u``.

    Small angles go through ``exp(n log1p(-sin^2))`` so the ``2n``-th power
    does not amplify the rounding of a cosine close to 1.
    """
    r = math.fmod(abs(u), 1.0)
    if r > 0.5:
        r = 1.0 - r
    if r < 0.25:
        return math.exp(n * math.log1p(-math.sin(math.pi * r) ** 2))
    return math.sin(math.pi * (0.5 - r)) ** (2 * n)


def survival_after_N(p: IdealParams) -> float:
    """Probability of finding spin up after ``N`` equally spaced checks: ``cos^(2N)(omega T / 2N)``."""
    return _cos_pi_pow(p.omega * p.T / (2 * math.pi * p.N), p.N)


def survival_resonant(N: int) -> float:
    """``cos^(2N)(pi / 2N)``, the matched case ``omega T = pi``."""
    return _cos_pi_pow(1 / (2 * N), N)


def measured_chain(p: IdealParams) -> np.ndarray:
    """Operator ``(E U(T/N) E)^N`` with ``E`` the spin-up projector."""
    step = PROJECT_UP @ mat_exp(hamiltonian(p.omega), -1j * p.T / p.N) @ PROJECT_UP
    return mat_power(step, p.N)


def evolve_measured(rho0, p: IdealParams) -> np.ndarray:
    """Unnormalized density after ``N`` checks; its trace is the survival probability."""
    rho0 = check_density(rho0)
    v = measured_chain(p)
    return v @ rho0 @ v.conj().T
