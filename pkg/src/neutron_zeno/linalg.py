"""Exact-size complex linear algebra for 2x2, 3x3 and 4x4 matrices.

Matrices are plain ``numpy`` arrays of dtype ``complex128``. Eigenvalues come
from the closed-form roots of the characteristic polynomial (quadratic, cubic
or quartic), polished by a few Newton steps, so no general-purpose eigensolver
is involved. The matrix exponential goes through the eigenbasis when it is
well conditioned and falls back to scaling-and-squaring with a Taylor core
otherwise.
"""
from __future__ import annotations

import cmath
from dataclasses import dataclass

import numpy as np

DIMS = (2, 3, 4)
DEFECTIVE_COND = 1e8
# an m-fold root computed from the polynomial scatters by ~C eps^(1/m), with C up to ~1e2
# from rounding in the coefficients; grouping is confirmed by an eigenspace residual test
CLUSTER_TOL = 1e-3
SEMISIMPLE_TOL = 1e-12
RECONSTRUCT_TOL = 1e-10
SINGULAR_TOL = 1e-14


class SingularMatrix(ValueError):
    """Raised when a linear system has a (numerically) vanishing determinant."""


class DimensionError(ValueError):
    pass


def as_matrix(a) -> np.ndarray:
    """Return ``a`` as a square complex matrix of supported size."""
    m = np.asarray(a, dtype=complex)
    if m.ndim != 2 or m.shape[0] != m.shape[1] or m.shape[0] not in DIMS:
        raise DimensionError(f"expected a 2x2, 3x3 or 4x4 matrix, got shape {m.shape}")
    return m


def identity(dim: int) -> np.ndarray:
    return np.eye(dim, dtype=complex)


def mat_mul(a, b) -> np.ndarray:
    a, b = as_matrix(a), as_matrix(b)
    if a.shape != b.shape:
        raise DimensionError(f"dimension mismatch: {a.shape} vs {b.shape}")
    return a @ b


def mat_power(a, n: int) -> np.ndarray:
    """``a**n`` by binary exponentiation; ``a**0`` is the identity."""
    a = as_matrix(a)
    n = int(n)
    if n < 0:
        raise ValueError("negative matrix power")
    result = identity(a.shape[0])
    base = a.copy()
    while n:
        if n & 1:
            result = result @ base
        n >>= 1
        if n:
            base = base @ base
    return result


def mat_power_scaled(a, n: int) -> tuple[np.ndarray, float]:
    """``(m, s)`` with ``a**n = exp(s) * m`` and ``m`` of order one.

    Products are renormalized at every step so exponentially growing powers
    do not overflow.
    """
    a = as_matrix(a)
    n = int(n)
    if n < 0:
        raise ValueError("negative matrix power")
    result, log_r = identity(a.shape[0]), 0.0
    base, log_b = a.copy(), 0.0
    while n:
        if n & 1:
            result = result @ base
            log_r += log_b
            nrm = np.linalg.norm(result, 2)
            if nrm == 0:
                return result, 0.0
            result, log_r = result / nrm, log_r + np.log(nrm)
        n >>= 1
        if n:
            base = base @ base
            log_b *= 2
            nrm = np.linalg.norm(base, 2)
            if nrm > 0:
                base, log_b = base / nrm, log_b + np.log(nrm)
    return result, float(log_r)


# -- characteristic polynomial and its roots ---------------------------------

def char_poly(a) -> np.ndarray:
    """Monic characteristic polynomial coefficients, highest degree first.

    Uses the Faddeev-LeVerrier recursion, exact in exact arithmetic.
    """
    a = as_matrix(a)
    n = a.shape[0]
    coeffs = [1.0 + 0j]
    m = np.zeros_like(a)
    eye = identity(n)
    for k in range(1, n + 1):
        m = a @ m + coeffs[-1] * eye
        coeffs.append(-np.trace(a @ m) / k)
    return np.array(coeffs, dtype=complex)


def cubic_discriminant(coeffs) -> complex:
    """Discriminant of ``x^3 + b x^2 + c x + d`` (coefficients highest first)."""
    one, b, c, d = coeffs
    if one != 1:
        b, c, d = b / one, c / one, d / one
    return 18 * b * c * d - 4 * b**3 * d + b**2 * c**2 - 4 * c**3 - 27 * d**2


def _quadratic_roots(b: complex, c: complex) -> list[complex]:
    # x^2 + b x + c, cancellation-free form
    disc = cmath.sqrt(b * b - 4 * c)
    q = -0.5 * (b + disc) if (b.conjugate() * disc).real >= 0 else -0.5 * (b - disc)
    if q == 0:
        return [0j, 0j]
    return [q, c / q]


def _cubic_roots(b: complex, c: complex, d: complex) -> list[complex]:
    # depressed cubic t^3 + p t + q with x = t - b/3 (Cardano)
    shift = b / 3
    p = c - b * b / 3
    q = 2 * b**3 / 27 - b * c / 3 + d
    if p == 0 and q == 0:
        return [-shift] * 3
    disc = cmath.sqrt(q * q / 4 + p**3 / 27)
    u3 = -q / 2 + disc
    if abs(-q / 2 - disc) > abs(u3):
        u3 = -q / 2 - disc
    u = u3 ** (1 / 3) if u3 != 0 else 0j
    omega = complex(-0.5, np.sqrt(3) / 2)
    roots = []
    for j in range(3):
        uj = u * omega**j
        t = uj - p / (3 * uj) if uj != 0 else 0j
        roots.append(t - shift)
    return roots


def _quartic_roots(b: complex, c: complex, d: complex, e: complex) -> list[complex]:
    # Ferrari: depressed quartic y^4 + p y^2 + q y + r with x = y - b/4
    shift = b / 4
    p = c - 3 * b * b / 8
    q = d - b * c / 2 + b**3 / 8
    r = e - b * d / 4 + b * b * c / 16 - 3 * b**4 / 256
    if abs(q) < 1e-300:
        zs = _quadratic_roots(p, r)
        ys = []
        for z in zs:
            s = cmath.sqrt(z)
            ys += [s, -s]
        return [y - shift for y in ys]
    # resolvent cubic in m: 8m^3 + 8p m^2 + (2p^2 - 8r) m - q^2 = 0
    ms = _cubic_roots(p, (p * p / 4 - r), -q * q / 8)
    m = max(ms, key=abs)
    s = cmath.sqrt(2 * m)
    if s == 0:
        # q is negligible here, so the quartic is biquadratic
        return _quartic_roots(b, c, d - q, e)
    roots = []
    for sign in (1, -1):
        # y^2 -/+ s y + (p/2 + m +/- q/(2s)) = 0
        ys = _quadratic_roots(-sign * s, p / 2 + m + sign * q / (2 * s))
        roots += ys
    return [y - shift for y in roots]


def poly_roots(coeffs) -> list[complex]:
    """Roots of a monic polynomial of degree 2, 3 or 4 (closed form + Newton polish)."""
    coeffs = np.asarray(coeffs, dtype=complex)
    coeffs = coeffs / coeffs[0]
    deg = len(coeffs) - 1
    # x = rho y keeps the closed forms away from under- and overflow
    rho = max(abs(x) ** (1 / k) for k, x in enumerate(coeffs[1:], start=1))
    if rho == 0:
        return [0j] * deg
    tail = []
    for k, x in enumerate(coeffs[1:], start=1):
        x = complex(x)
        for _ in range(k):
            x /= rho
        tail.append(x)
    if deg == 2:
        roots = _quadratic_roots(*tail)
    elif deg == 3:
        roots = _cubic_roots(*tail)
    elif deg == 4:
        roots = _quartic_roots(*tail)
    else:
        raise DimensionError(f"unsupported degree {deg}")
    roots = [x * rho for x in roots]
    deriv = np.polyder(coeffs)
    polished = []
    for x in roots:
        for _ in range(3):
            dp = np.polyval(deriv, x)
            if dp == 0:
                break
            with np.errstate(over="ignore", invalid="ignore"):
                step = np.polyval(coeffs, x) / dp
            if not np.isfinite(step) or abs(step) > 1e-3 * (1 + abs(x)):
                break
            x = x - step
        polished.append(complex(x))
    return polished


# -- eigen-decomposition ------------------------------------------------------

@dataclass(frozen=True)
class EigenDecomposition:
    values: np.ndarray
    vectors: np.ndarray
    defective: bool
    condition: float

    def reconstruct(self) -> np.ndarray:
        return self.vectors @ np.diag(self.values) @ np.linalg.inv(self.vectors)


def _null_vectors(m: np.ndarray, count: int, scale: float) -> tuple[np.ndarray, int]:
    """Up to ``count`` orthonormal vectors spanning the numerical null space of ``m``."""
    _, s, vh = np.linalg.svd(m)
    tol = max(1e-6 * scale, 1e-300)
    nullity = int(np.sum(s <= tol))
    take = max(1, min(count, nullity))
    return vh[-take:].conj().T, nullity


def _poly_backward_error(coeffs: np.ndarray, x: complex) -> float:
    size = np.polyval(np.abs(coeffs), abs(x))
    return float(abs(np.polyval(coeffs, x)) / size) if size > 0 else 0.0


def _polish_root(a: np.ndarray, lam: complex, steps: int = 3) -> complex:
    """Two-sided Rayleigh steps on ``a - lam I``; a step is kept only if it lowers sigma_min."""
    n = a.shape[0]
    u, s, vh = np.linalg.svd(a - lam * identity(n))
    best = s[-1]
    for _ in range(steps):
        if best == 0:
            break
        overlap = np.vdot(u[:, -1], vh[-1].conj())
        if abs(overlap) < 1e-8:
            break
        trial = lam + best / overlap
        u2, s2, vh2 = np.linalg.svd(a - trial * identity(n))
        if not s2[-1] < best:
            break
        lam, u, vh, best = trial, u2, vh2, s2[-1]
    return complex(lam)


def _cluster(values: list[complex], tol: float) -> list[list[int]]:
    groups: list[list[int]] = []
    for i, v in enumerate(values):
        for g in groups:
            if abs(values[g[0]] - v) <= tol:
                g.append(i)
                break
        else:
            groups.append([i])
    return groups


def eigen(a) -> EigenDecomposition:
    """Eigenvalues from the characteristic polynomial, right eigenvectors as columns.

    Roots with a near neighbour or a poor polynomial backward error are refined
    by two-sided Rayleigh steps on ``a`` itself, since the polynomial resolves
    such roots only to about ``eps^(1/m)``.
    Roots closer than ``CLUSTER_TOL`` (relative) share their mean when the
    eigenspace check confirms a semisimple repeated eigenvalue. ``defective`` is
    set when a repeated eigenvalue lacks a full eigenspace, when the eigenvector
    matrix has condition number above ``DEFECTIVE_COND``, or when ``V diag V^-1``
    misses ``a`` by more than ``RECONSTRUCT_TOL`` (relative).
    """
    a = as_matrix(a)
    n = a.shape[0]
    scale = max(np.linalg.norm(a, 2), 1e-300)
    coeffs = char_poly(a)
    values = poly_roots(coeffs)
    # near-coincident or inaccurate roots are refined on the matrix itself
    values = [
        _polish_root(a, v)
        if _poly_backward_error(coeffs, v) > 1e-12
        or any(abs(v - w) <= CLUSTER_TOL * scale for j, w in enumerate(values) if j != i)
        else v
        for i, v in enumerate(values)
    ]

    defective = False
    columns: list[np.ndarray] = []
    ordered: list[complex] = []
    for group in _cluster(values, CLUSTER_TOL * scale):
        if len(group) > 1:
            lam = sum(values[i] for i in group) / len(group)
            vecs, nullity = _null_vectors(a - lam * identity(n), len(group), scale)
            # Rayleigh quotient on the candidate eigenspace sharpens the mean
            lam = complex(np.trace(vecs.conj().T @ a @ vecs)) / vecs.shape[1]
            resid = np.linalg.norm((a - lam * identity(n)) @ vecs, 2)
            if nullity >= len(group) and resid <= SEMISIMPLE_TOL * scale:
                columns.extend(vecs[:, j] for j in range(len(group)))
                ordered.extend([lam] * len(group))
                continue
        # distinct roots, or a cluster without a full eigenspace
        for i in group:
            v, _ = _null_vectors(a - values[i] * identity(n), 1, scale)
            columns.append(v[:, 0])
            ordered.append(values[i])
        if len(group) > 1:
            sep = max(abs(values[i] - values[j]) for i in group for j in group)
            if sep <= 1e-6 * scale:
                defective = True
    vectors = np.column_stack(columns)
    vals = np.array(ordered, dtype=complex)
    cond = float(np.linalg.cond(vectors))
    if not np.isfinite(cond) or cond > DEFECTIVE_COND:
        defective = True
    else:
        recon = vectors @ np.diag(vals) @ np.linalg.inv(vectors)
        if np.linalg.norm(recon - a, 2) > RECONSTRUCT_TOL * scale:
            defective = True
    return EigenDecomposition(vals, vectors, defective, cond)


# -- matrix exponential -------------------------------------------------------

def expm_series(a, scale: complex = 1.0) -> np.ndarray:
    """``exp(scale * a)`` by scaling-and-squaring around a truncated Taylor series."""
    x = as_matrix(a) * scale
    n = x.shape[0]
    norm = np.linalg.norm(x, 1)
    squarings = max(0, int(np.ceil(np.log2(norm / 0.25)))) if norm > 0.25 else 0
    x = x / 2.0**squarings
    result = identity(n)
    term = identity(n)
    for k in range(1, 30):
        term = term @ x / k
        result = result + term
        if np.linalg.norm(term, 1) < 1e-18 * np.linalg.norm(result, 1):
            break
    for _ in range(squarings):
        result = result @ result
    return result


def expm_eigen(a, scale: complex = 1.0, decomposition: EigenDecomposition | None = None) -> np.ndarray:
    a = as_matrix(a)
    dec = decomposition if decomposition is not None else eigen(a)
    v = dec.vectors
    return v @ np.diag(np.exp(scale * dec.values)) @ np.linalg.inv(v)


def mat_exp(a, scale: complex = 1.0) -> np.ndarray:
    """``exp(scale * a)``; eigenbasis route unless the decomposition is defective."""
    a = as_matrix(a)
    if not np.all(np.isfinite(a)):
        raise ValueError("non-finite matrix entries")
    dec = eigen(a)
    if dec.defective:
        return expm_series(a, scale)
    return expm_eigen(a, scale, dec)


# -- linear systems -----------------------------------------------------------

def solve_linear(a, b) -> np.ndarray:
    """Solve ``a @ x = b``; raises :class:`SingularMatrix` for a vanishing determinant."""
    a = as_matrix(a)
    b = np.asarray(b, dtype=complex)
    if b.shape[0] != a.shape[0]:
        raise DimensionError(f"right-hand side of length {b.shape[0]} for {a.shape} matrix")
    n = a.shape[0]
    det = np.linalg.det(a)
    scale = np.linalg.norm(a, 2) ** n
    if not abs(det) > SINGULAR_TOL * scale:
        raise SingularMatrix(f"|det| = {abs(det):.3e} below threshold")
    return np.linalg.solve(a, b)


# -- Pauli matrices -----------------------------------------------------------

PAULI_1 = np.array([[0, 1], [1, 0]], dtype=complex)
PAULI_2 = np.array([[0, -1j], [1j, 0]], dtype=complex)
PAULI_3 = np.array([[1, 0], [0, -1]], dtype=complex)
I2 = identity(2)
