"""Dense complex linear algebra used by every other module.

Matrices are plain ``numpy`` arrays of dtype ``complex128``.  Real input is
promoted; nothing here ever mutates its arguments.
"""

from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla

from .errors import (
    DimensionMismatch,
    NoComplement,
    NotHermitian,
    NotPositiveDefinite,
    RankDeficient,
)

HERMITIAN_RTOL = 1e-12
PD_MARGIN = 1e-12
RANK_RTOL = 1e-10


def as_matrix(a, name="matrix"):
    """Return ``a`` as a finite 2-D complex128 array (a copy only when needed)."""
    m = np.asarray(a, dtype=np.complex128)
    if m.ndim != 2 or m.shape[0] < 1 or m.shape[1] < 1:
        raise DimensionMismatch(f"{name} must be a non-empty 2-D array, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise ValueError(f"{name} has non-finite entries")
    return m


def _require_square(a, name):
    if a.shape[0] != a.shape[1]:
        raise DimensionMismatch(f"{name} must be square, got shape {a.shape}")


def max_norm(a):
    return float(np.max(np.abs(a))) if a.size else 0.0


def is_hermitian(h, rtol=HERMITIAN_RTOL):
    h = np.asarray(h)
    if h.ndim != 2 or h.shape[0] != h.shape[1]:
        return False
    return max_norm(h - h.conj().T) <= rtol * max(max_norm(h), np.finfo(float).tiny)


def hermitian_part(h, name="matrix"):
    """Check Hermiticity to the fixed tolerance and return ``(h + h^H)/2``."""
    h = as_matrix(h, name)
    _require_square(h, name)
    if not is_hermitian(h):
        raise NotHermitian(f"{name} is not Hermitian to relative tolerance {HERMITIAN_RTOL:g}")
    return 0.5 * (h + h.conj().T)


def identity(n):
    return np.eye(n, dtype=np.complex128)


@dataclass(frozen=True)
class CholeskyFactor:
    l: np.ndarray
    source_dim: int


@dataclass(frozen=True)
class HermitianEigen:
    values: np.ndarray
    vectors: np.ndarray


@dataclass(frozen=True)
class GeneralizedEigen:
    """Solution of ``A u = lambda X u``; columns of ``vectors`` are X-orthonormal."""

    values: np.ndarray
    vectors: np.ndarray
    metric: np.ndarray


def cholesky(h):
    """Lower Cholesky factor of an HPD matrix."""
    h = hermitian_part(h, "h")
    d = np.diag(h)
    if np.any(d.real <= 0):
        raise NotPositiveDefinite("non-positive diagonal entry")
    try:
        l = sla.cholesky(h, lower=True, check_finite=False)
    except sla.LinAlgError as exc:
        raise NotPositiveDefinite(str(exc)) from None
    if np.any(np.diag(l).real <= 0):
        raise NotPositiveDefinite("non-positive pivot")
    return CholeskyFactor(l=np.tril(l), source_dim=h.shape[0])


def eig_hermitian(h):
    h = hermitian_part(h, "h")
    w, v = np.linalg.eigh(h)
    order = np.argsort(w, kind="stable")
    return HermitianEigen(values=w[order], vectors=v[:, order])


def eig_generalized(a, x):
    """Solve ``a u = lambda x u`` for Hermitian ``a`` and HPD ``x``.

    Reduced to the standard problem ``L^{-1} a L^{-H} y = lambda y`` with
    ``x = L L^H``; eigenvectors are mapped back by ``u = L^{-H} y`` and are
    therefore X-orthonormal.
    """
    a = hermitian_part(a, "a")
    x = hermitian_part(x, "x")
    if a.shape != x.shape:
        raise DimensionMismatch(f"shapes {a.shape} and {x.shape} differ")
    l = cholesky(x).l
    t = sla.solve_triangular(l, a, lower=True)
    c = sla.solve_triangular(l, t.conj().T, lower=True)
    c = 0.5 * (c + c.conj().T)
    w, y = np.linalg.eigh(c)
    order = np.argsort(w, kind="stable")
    w, y = w[order], y[:, order]
    u = sla.solve_triangular(l.conj().T, y, lower=False)
    return GeneralizedEigen(values=w, vectors=u, metric=x)


def spectrum_general(s):
    """All eigenvalues (with multiplicity) via a complex Schur reduction."""
    s = as_matrix(s, "s")
    _require_square(s, "s")
    t, _ = sla.schur(s, output="complex")
    return np.diag(t).copy()


def spectral_radius(s):
    return float(np.max(np.abs(spectrum_general(s))))


def orthonormal_complement(u):
    """Orthonormal basis of the Euclidean orthogonal complement of ``range(u)``.

    Trailing columns of a full unitary QR factor of ``u``.
    """
    u = as_matrix(u, "u")
    n, k = u.shape
    if k >= n:
        raise NoComplement(f"{k} columns in dimension {n} leave no complement")
    sv = np.linalg.svd(u, compute_uv=False)
    if sv[-1] <= RANK_RTOL * sv[0]:
        raise RankDeficient(f"smallest singular value {sv[-1]:.3e} relative to {sv[0]:.3e}")
    q, _ = np.linalg.qr(u, mode="complete")
    return q[:, k:]


def column_basis(u):
    """Orthonormal basis of ``range(u)`` (``u`` assumed full column rank)."""
    q, _ = np.linalg.qr(as_matrix(u, "u"))
    return q


def principal_angles(u, v):
    """Principal angles (radians, ascending) between ``range(u)`` and ``range(v)``."""
    return sla.subspace_angles(as_matrix(u, "u"), as_matrix(v, "v"))[::-1]


def same_span(u, v, atol=1e-8):
    if u.shape[1] != v.shape[1]:
        return False
    return float(np.max(principal_angles(u, v))) < atol


def is_positive_definite(h, margin=PD_MARGIN):
    """Smallest eigenvalue of the Hermitian ``h`` exceeds ``margin * ||h||``."""
    return smallest_eigenvalue_margin(h) > margin * max(np.linalg.norm(h, 2), np.finfo(float).tiny)


def smallest_eigenvalue_margin(h):
    h = as_matrix(h, "h")
    _require_square(h, "h")
    return float(np.linalg.eigvalsh(0.5 * (h + h.conj().T))[0])


def _hpd_eigen(a):
    e = eig_hermitian(a)
    if e.values[0] <= PD_MARGIN * max(abs(e.values[-1]), np.finfo(float).tiny):
        raise NotPositiveDefinite(f"smallest eigenvalue {e.values[0]:.3e}")
    return e


def hpd_sqrt(a):
    e = _hpd_eigen(a)
    r = (e.vectors * np.sqrt(e.values)) @ e.vectors.conj().T
    return 0.5 * (r + r.conj().T)


def _hpd_sqrt_pair(a):
    e = _hpd_eigen(a)
    v, vh = e.vectors, e.vectors.conj().T
    return (v * np.sqrt(e.values)) @ vh, (v / np.sqrt(e.values)) @ vh


def operator_a_norm(s, a):
    """``||A^{1/2} S A^{-1/2}||_2`` for HPD ``a``."""
    s = as_matrix(s, "s")
    a = as_matrix(a, "a")
    _require_square(s, "s")
    if s.shape != a.shape:
        raise DimensionMismatch(f"shapes {s.shape} and {a.shape} differ")
    half, inv_half = _hpd_sqrt_pair(a)
    return float(np.linalg.norm(half @ s @ inv_half, 2))


def solve(a, b, error=DimensionMismatch, what="matrix"):
    """Dense solve that raises ``error`` when ``a`` is numerically singular."""
    a = np.asarray(a)
    if a.shape[0] != a.shape[1]:
        raise DimensionMismatch(f"{what} must be square, got shape {a.shape}")
    cond = np.linalg.cond(a)
    if not np.isfinite(cond) or cond > 1.0 / (1e3 * np.finfo(float).eps):
        raise error(f"{what} is numerically singular (condition {cond:.3e})")
    return np.linalg.solve(a, b)


def inverse(a, error=DimensionMismatch, what="matrix"):
    a = np.asarray(a)
    return solve(a, np.eye(a.shape[0], dtype=np.complex128), error=error, what=what)
