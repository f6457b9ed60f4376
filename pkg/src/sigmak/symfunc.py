"""Elementary symmetric polynomials, Garding cones, and the Hessian quotient operator.

Everything operates on eigenvalue vectors of length n.  The operator of
interest is F(lam) = (sigma_n / sigma_{n-k})^(1/k), defined on the positive
orthant, concave and positively homogeneous of degree one there.  Batched
helpers accept arrays of shape (..., n) and are used heavily by the solver.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ConeViolationError, DomainError

__all__ = [
    "CurvatureVector",
    "SymMatrix",
    "sigma",
    "sigma_all",
    "sigma_minus",
    "in_garding_cone",
    "quotient_F",
    "quotient_F_gradient",
    "matrix_F",
    "maclaurin_chain",
    "quotient_F_many",
    "quotient_F_gradient_many",
    "matrix_F_many",
    "normalization_constant",
]


@dataclass(frozen=True)
class CurvatureVector:
    """An ordered tuple of principal curvatures (or curvature radii)."""

    values: tuple

    def __post_init__(self):
        vals = tuple(float(v) for v in self.values)
        if len(vals) == 0:
            raise DomainError("curvature vector must have at least one entry")
        object.__setattr__(self, "values", vals)

    @property
    def n(self):
        return len(self.values)

    def as_array(self):
        return np.asarray(self.values, dtype=float)


@dataclass(frozen=True)
class SymMatrix:
    """Symmetric matrix wrapper; symmetrizes on construction.

    Entries must be symmetric to within 1e-14 absolute.  Eigenvalues are
    reported descending with orthonormal eigenvectors, each column's sign
    fixed so its largest-magnitude component is positive.
    """

    entries: np.ndarray

    def __init__(self, entries):
        a = np.asarray(entries, dtype=float)
        if a.ndim != 2 or a.shape[0] != a.shape[1]:
            raise DomainError(f"expected a square matrix, got shape {a.shape}")
        skew = np.max(np.abs(a - a.T)) if a.size else 0.0
        if skew > 1e-14 * max(1.0, np.max(np.abs(a))):
            raise DomainError(f"matrix is not symmetric (max asymmetry {skew:.3e})")
        object.__setattr__(self, "entries", 0.5 * (a + a.T))

    @property
    def n(self):
        return self.entries.shape[0]

    def eig(self):
        """Eigenvalues descending, eigenvectors as columns, signs fixed."""
        w, q = np.linalg.eigh(self.entries)
        w = w[::-1]
        q = q[:, ::-1]
        idx = np.argmax(np.abs(q), axis=0)
        signs = np.sign(q[idx, np.arange(q.shape[1])])
        signs[signs == 0] = 1.0
        return w, q * signs


def _as_values(lam):
    if isinstance(lam, CurvatureVector):
        return lam.as_array()
    vals = np.asarray(lam, dtype=float)
    if vals.ndim != 1 or vals.size == 0:
        raise DomainError("expected a nonempty 1-d curvature vector")
    return vals


def _sigma_table(vals):
    """All elementary symmetric polynomials e_0..e_n along the last axis.

    Stable O(n^2) product-expansion recurrence; shape (..., n) -> (..., n+1).
    """
    vals = np.asarray(vals, dtype=float)
    n = vals.shape[-1]
    e = np.zeros(vals.shape[:-1] + (n + 1,), dtype=float)
    e[..., 0] = 1.0
    for i in range(n):
        v = vals[..., i : i + 1]
        e[..., 1 : i + 2] = e[..., 1 : i + 2] + v * e[..., 0 : i + 1]
    return e


def sigma(lam, k):
    """Elementary symmetric polynomial sigma_k(lam); sigma_0 = 1.

    Uses the stable recurrence (never subset enumeration), so large n is fine.
    """
    vals = _as_values(lam)
    n = vals.size
    if not 0 <= k <= n:
        raise DomainError(f"sigma_k needs 0 <= k <= n, got k={k}, n={n}")
    return float(_sigma_table(vals)[k])


def sigma_all(lam):
    """Array [sigma_0, ..., sigma_n]."""
    return _sigma_table(_as_values(lam))


def sigma_minus(lam, k, drop=()):
    """sigma_k with the entries at ``drop`` (0-based, distinct) removed.

    Equivalent to sigma_k of the vector with the dropped entries set to zero.
    """
    vals = _as_values(lam).copy()
    n = vals.size
    drop = tuple(drop)
    if len(set(drop)) != len(drop):
        raise DomainError(f"duplicate drop indices {drop}")
    for i in drop:
        if not 0 <= i < n:
            raise DomainError(f"drop index {i} out of range for n={n}")
        vals[i] = 0.0
    if not 0 <= k <= n:
        raise DomainError(f"sigma_k needs 0 <= k <= n, got k={k}, n={n}")
    return float(_sigma_table(vals)[k])


def in_garding_cone(lam, k):
    """Strict test sigma_1 > 0, ..., sigma_k > 0 (the Garding cone Gamma_k)."""
    vals = _as_values(lam)
    n = vals.size
    if not 1 <= k <= n:
        raise DomainError(f"cone index needs 1 <= k <= n, got k={k}, n={n}")
    table = _sigma_table(vals)
    return bool(np.all(table[1 : k + 1] > 0.0))


def normalization_constant(n, k):
    """binom(n, k)^(-1/k): the F-value of the unit vector (1, ..., 1)."""
    if not 1 <= k <= n:
        raise DomainError(f"need 1 <= k <= n, got k={k}, n={n}")
    return math.comb(n, k) ** (-1.0 / k)


def quotient_F(lam, k):
    """F(lam) = (sigma_n / sigma_{n-k})^(1/k) on the positive orthant."""
    vals = _as_values(lam)
    n = vals.size
    if not 1 <= k <= n:
        raise DomainError(f"quotient needs 1 <= k <= n, got k={k}, n={n}")
    if np.any(vals <= 0.0):
        raise ConeViolationError(f"quotient_F needs all entries positive, got {vals}")
    return float(quotient_F_many(vals[None, :], k)[0])


def quotient_F_many(vals, k):
    """Batched quotient_F for shape (..., n); no cone validation."""
    vals = np.asarray(vals, dtype=float)
    n = vals.shape[-1]
    table = _sigma_table(vals)
    return (table[..., n] / table[..., n - k]) ** (1.0 / k)


def quotient_F_gradient(lam, k):
    """(F(lam), dF/dlam_i) via the closed form

        k F^{k-1} F^i = sigma_{n-1}(lam|i) sigma_{n-k}(lam|i) / sigma_{n-k}(lam)^2,

    where (lam|i) drops the i-th entry.  Requires the positive orthant.
    """
    vals = _as_values(lam)
    n = vals.size
    if not 1 <= k <= n:
        raise DomainError(f"quotient needs 1 <= k <= n, got k={k}, n={n}")
    if np.any(vals <= 0.0):
        raise ConeViolationError(f"quotient_F_gradient needs positive entries, got {vals}")
    value, grad = quotient_F_gradient_many(vals[None, :], k)
    return float(value[0]), grad[0]


def quotient_F_gradient_many(vals, k):
    """Batched (value, gradient) of F for shape (..., n) -> ((...,), (..., n))."""
    vals = np.asarray(vals, dtype=float)
    n = vals.shape[-1]
    table = _sigma_table(vals)
    s_n = table[..., n]
    s_nk = table[..., n - k]
    value = (s_n / s_nk) ** (1.0 / k)
    grad = np.empty_like(vals)
    for i in range(n):
        dropped = vals.copy()
        dropped[..., i] = 0.0
        t_i = _sigma_table(dropped)
        # sigma_l(lam|i) equals sigma_l of the vector with entry i zeroed, l < n
        grad[..., i] = t_i[..., n - 1] * t_i[..., n - k] / (s_nk * s_nk)
    grad /= k * value[..., None] ** (k - 1)
    return value, grad


def matrix_F(A, k):
    """F on a symmetric matrix argument: (value, gradient matrix).

    The gradient is assembled in the eigenbasis, Q diag(dF/dlam) Q^T, which is
    the exact first derivative of the spectral function and remains stable for
    clustered eigenvalues (no divided differences enter at first order).
    """
    if not isinstance(A, SymMatrix):
        A = SymMatrix(A)
    lam, _ = A.eig()
    if np.any(lam <= 0.0):
        raise ConeViolationError(f"matrix_F needs positive definite input, eigenvalues {lam}")
    value, grad = matrix_F_many(A.entries[None, ...], k)
    return float(value[0]), SymMatrix(grad[0])


def matrix_F_many(mats, k):
    """Batched matrix_F for shape (..., n, n); no positivity validation."""
    mats = np.asarray(mats, dtype=float)
    w, q = np.linalg.eigh(mats)
    value, dW = quotient_F_gradient_many(w, k)
    grad = np.einsum("...ip,...p,...jp->...ij", q, dW, q)
    return value, grad


def maclaurin_chain(lam):
    """Normalized means m_k = (sigma_k / binom(n,k))^(1/k), k = 1..n.

    Nonincreasing in k on the positive orthant (Maclaurin), with equality iff
    all entries agree.
    """
    vals = _as_values(lam)
    n = vals.size
    if np.any(vals <= 0.0):
        raise ConeViolationError(f"maclaurin_chain needs positive entries, got {vals}")
    table = _sigma_table(vals)
    return np.array(
        [(table[kk] / math.comb(n, kk)) ** (1.0 / kk) for kk in range(1, n + 1)]
    )
