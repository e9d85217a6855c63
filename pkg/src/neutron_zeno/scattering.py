"""Stationary scattering of a spin-up neutron off N magnetic slabs.

Slabs of width ``a`` carry a field along x and are separated by field-free gaps
of width ``b``. Since ``sigma_1`` commutes with the Hamiltonian the problem
splits into two scalar channels ``|+>`` and ``|->`` (``sigma_1 = +1, -1``) with
internal wavenumbers ``k_pm = k sqrt(1 -/+ 2 zeta)``, ``zeta = m muB / k^2``.
Units have ``hbar = 1``.

Amplitude vectors are ``(R, L)``: right- and left-moving plane-wave
coefficients referenced to the start of the region they describe.
"""
from __future__ import annotations

import cmath
import enum
import math
from dataclasses import dataclass

import numpy as np

from .linalg import I2, PAULI_1, PAULI_3, SingularMatrix, mat_exp, mat_power

CHANNELS = (1, -1)
DEGENERATE_TOL = 1e-14
BRACKET_DEGENERATE_TOL = 1e-8


class DegenerateChannel(ValueError):
    """``zeta == 1/2``: the + channel has zero internal wavenumber."""


class Band(enum.Enum):
    ALLOWED = "allowed"
    FORBIDDEN = "forbidden"


@dataclass(frozen=True)
class ScatterParams:
    k: float
    m: float
    muB: float
    a: float
    b: float
    N: int = 1

    def __post_init__(self):
        if not (self.k > 0 and self.m > 0 and self.a > 0 and self.b >= 0):
            raise ValueError("need k > 0, m > 0, a > 0, b >= 0")
        if self.muB < 0:
            raise ValueError("muB must be >= 0")
        if int(self.N) != self.N or self.N < 1:
            raise ValueError("N must be an integer >= 1")

    @classmethod
    def from_dimensionless(cls, ka: float, kb: float, zeta: float, N: int = 1,
                           k: float = 1.0, m: float = 1.0) -> "ScatterParams":
        return cls(k=k, m=m, muB=zeta * k * k / m, a=ka / k, b=kb / k, N=N)

    def replace(self, **changes) -> "ScatterParams":
        fields = dict(k=self.k, m=self.m, muB=self.muB, a=self.a, b=self.b, N=self.N)
        fields.update(changes)
        return ScatterParams(**fields)

    @property
    def energy(self) -> float:
        return self.k**2 / (2 * self.m)

    @property
    def zeta(self) -> float:
        return self.m * self.muB / self.k**2

    @property
    def ka(self) -> float:
        return self.k * self.a

    @property
    def kb(self) -> float:
        return self.k * self.b

    @property
    def D(self) -> float:
        return self.N * self.a

    @property
    def kD(self) -> float:
        return self.k * self.D

    @property
    def y_N(self) -> float:
        return self.N * (self.a + self.b)

    def k_channel(self, sign: int) -> complex:
        """Internal wavenumber ``k sqrt(1 - 2 sign zeta)``, principal branch."""
        return self.k * cmath.sqrt(1 - 2 * sign * self.zeta)

    def eta(self, sign: int) -> complex:
        """``Log(k / k_sign)``, principal branch."""
        self._check_channel()
        return cmath.log(self.k / self.k_channel(sign))

    def _check_channel(self) -> None:
        if abs(self.zeta - 0.5) < DEGENERATE_TOL:
            raise DegenerateChannel("zeta = 1/2 makes the + channel degenerate")


@dataclass(frozen=True)
class ScatterAmplitudes:
    t_up: complex
    t_down: complex
    r_up: complex
    r_down: complex

    @property
    def t_plus(self) -> complex:
        return self.t_up + self.t_down

    @property
    def t_minus(self) -> complex:
        return self.t_up - self.t_down

    @property
    def r_plus(self) -> complex:
        return self.r_up + self.r_down

    @property
    def r_minus(self) -> complex:
        return self.r_up - self.r_down

    @property
    def flux(self) -> float:
        return abs(self.t_up) ** 2 + abs(self.t_down) ** 2 + abs(self.r_up) ** 2 + abs(self.r_down) ** 2

    def as_array(self) -> np.ndarray:
        return np.array([self.t_up, self.t_down, self.r_up, self.r_down], dtype=complex)

    @classmethod
    def from_channels(cls, t_plus, t_minus, r_plus, r_minus) -> "ScatterAmplitudes":
        return cls(
            complex(t_plus + t_minus) / 2,
            complex(t_plus - t_minus) / 2,
            complex(r_plus + r_minus) / 2,
            complex(r_plus - r_minus) / 2,
        )


def _channel_matrix(p: ScatterParams, sign: int) -> np.ndarray:
    ks = p.k_channel(sign)
    eta = p.eta(sign)
    c, s = cmath.cos(ks * p.a), cmath.sin(ks * p.a)
    ch, sh = cmath.cosh(eta), cmath.sinh(eta)
    return np.array([[c + 1j * ch * s, -1j * sh * s], [1j * sh * s, c - 1j * ch * s]], dtype=complex)


def transfer_matrix(p: ScatterParams) -> tuple[np.ndarray, np.ndarray]:
    """Single-slab transfer matrices ``(M_plus, M_minus)``."""
    return _channel_matrix(p, 1), _channel_matrix(p, -1)


def transfer_matrix_kicked(p: ScatterParams, sign: int) -> np.ndarray:
    """Same matrix written as boundary kick, free propagation, inverse kick."""
    eta = p.eta(sign)
    kick = I2 + PAULI_1
    return (
        mat_exp(kick, eta / 2)
        @ mat_exp(PAULI_3, 1j * p.k_channel(sign) * p.a)
        @ mat_exp(kick, -eta / 2)
    )


def gap_matrix(kb: float) -> np.ndarray:
    return np.diag([cmath.exp(1j * kb), cmath.exp(-1j * kb)])


def cell_matrix(p: ScatterParams, sign: int) -> np.ndarray:
    """Slab followed by a gap."""
    return gap_matrix(p.kb) @ _channel_matrix(p, sign)


def lattice_transfer(p: ScatterParams) -> tuple[np.ndarray, np.ndarray]:
    """``(gap @ M_pm)^N`` for both channels by repeated squaring."""
    return tuple(mat_power(cell_matrix(p, s), p.N) for s in CHANNELS)


def half_trace(p: ScatterParams, sign: int) -> complex:
    ks = p.k_channel(sign)
    eta = p.eta(sign)
    return (
        math.cos(p.kb) * cmath.cos(ks * p.a)
        - cmath.cosh(eta) * math.sin(p.kb) * cmath.sin(ks * p.a)
    )


def bloch_factor(p: ScatterParams, sign: int) -> complex:
    """Eigenvalue ``q`` of the unimodular cell matrix with ``|q| >= 1`` (the other is ``1/q``)."""
    x = half_trace(p, sign)
    q = x + cmath.sqrt(x * x - 1)
    return q if abs(q) >= 1 else 1 / q


def bracket(q: complex, n: int) -> complex:
    """``[n] = (q^n - q^-n) / (q - 1/q)``, with the ``n q^(n-1)`` limit at ``q = +-1``."""
    if n == 0:
        return 0j
    if abs(q - 1 / q) < BRACKET_DEGENERATE_TOL:
        return n * q ** (n - 1)
    return (q**n - q ** (-n)) / (q - 1 / q)


def _scaled_brackets(q: complex, n: int) -> tuple[complex, complex]:
    # ([n], [n-1]) divided by q^(n-1); finite for |q| >= 1 even when q^n overflows
    if abs(q - 1 / q) < BRACKET_DEGENERATE_TOL:
        return complex(n), (n - 1) / q
    d = q - 1 / q
    return (q - q ** (1 - 2 * n)) / d, (1 - q ** (2 - 2 * n)) / d


def lattice_transfer_bracket(p: ScatterParams, sign: int) -> np.ndarray:
    """``[N] cell - [N-1] I``, equal to ``cell^N`` for a unimodular cell."""
    q = bloch_factor(p, sign)
    return bracket(q, p.N) * cell_matrix(p, sign) - bracket(q, p.N - 1) * I2


def channel_amplitudes(p: ScatterParams, sign: int) -> tuple[complex, complex]:
    """Channel ``(t, r)`` from ``exp(i k y_N) (t, 0) = W (1, r)`` with ``W = [N] cell - [N-1]``.

    ``W`` is handled as ``q^(N-1) W'`` so forbidden and evanescent channels do
    not overflow. ``t`` uses ``W11 + W12 r = det W / W22 = 1 / W22``; the direct
    sum cancels catastrophically once ``W`` grows exponentially.
    """
    q = bloch_factor(p, sign)
    big, small = _scaled_brackets(q, p.N)
    w = big * cell_matrix(p, sign) - small * I2
    if abs(w[1, 1]) < 1e-300:
        raise SingularMatrix("lattice matrix element W22 vanishes")
    r = -w[1, 0] / w[1, 1]
    log_t = -1j * p.k * p.y_N - (p.N - 1) * cmath.log(q)
    t = cmath.exp(log_t.real) * cmath.exp(1j * log_t.imag) / w[1, 1] if log_t.real > -745 else 0j
    return complex(t), complex(r)


def solve_no_measurement(p: ScatterParams) -> ScatterAmplitudes:
    (tp, rp), (tm, rm) = (channel_amplitudes(p, s) for s in CHANNELS)
    return ScatterAmplitudes.from_channels(tp, tm, rp, rm)


def single_slab_transmission(p: ScatterParams, sign: int) -> complex:
    ks = p.k_channel(sign)
    eta = p.eta(sign)
    return cmath.exp(-1j * p.ka) / (cmath.cos(ks * p.a) - 1j * cmath.cosh(eta) * cmath.sin(ks * p.a))


def band_classify(p: ScatterParams) -> tuple[Band, Band]:
    """Per-channel band from the cell half-trace: allowed iff ``|x| <= 1``."""
    out = []
    for s in CHANNELS:
        x = half_trace(p, s)
        out.append(Band.ALLOWED if abs(x.real) <= 1 and abs(x.imag) < 1e-12 * max(1, abs(x)) else Band.FORBIDDEN)
    return tuple(out)


def total_transmission_params(n_minus: int, n_plus: int, m: float, D: float) -> tuple[float, float]:
    """Energy and potential giving spin-flipped total transmission through a slab of width ``D``."""
    if not (n_plus > n_minus >= 1):
        raise ValueError("need n_plus > n_minus >= 1")
    if (n_plus - n_minus) % 2 == 0:
        raise ValueError("n_plus - n_minus must be odd")
    scale = math.pi**2 / (4 * m * D**2)
    return scale * (n_plus**2 + n_minus**2), scale * (n_plus**2 - n_minus**2)


def total_transmission_setup(n_minus: int, n_plus: int, N: int = 1, m: float = 1.0,
                             D: float = 1.0) -> ScatterParams:
    """Contiguous field region of width ``D`` split into ``N`` slabs with no gaps."""
    E, muB = total_transmission_params(n_minus, n_plus, m, D)
    return ScatterParams(k=math.sqrt(2 * m * E), m=m, muB=muB, a=D / N, b=0.0, N=N)
