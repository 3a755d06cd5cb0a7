"""Spectrum of ``B A`` from orthogonal complements of the transfer operators.

For nonsingular ``A``, ``X``, ``R A P`` and ``R X P``::

    sigma(B A) = {1} U sigma(Pt^H X^{-1} Rt (Pt^H A^{-1} Rt)^{-1})

where the columns of ``Pt`` and ``Rt`` are orthonormal bases of the
Euclidean complements of ``range(P)`` and ``range(R^H)``.  The value 1
carries multiplicity ``r``.
"""

from dataclasses import dataclass

import numpy as np
from scipy.optimize import linear_sum_assignment

from .errors import DimensionMismatch, SingularA, SingularComplementGram, SingularRXP
from .linalg import as_matrix, identity, inverse, orthonormal_complement, spectrum_general
from .smoothers import composed_x
from .twogrid import assemble_error_propagation, check_interpolation, coarse_matrix, preconditioner

DEFAULT_TOL = 1e-8
_SINGULAR_COND = 1.0 / (1e3 * np.finfo(float).eps)


@dataclass(frozen=True)
class ComplementBasis:
    p_tilde: np.ndarray
    r_tilde: np.ndarray


@dataclass(frozen=True)
class IdentityReport:
    direct_spectrum: np.ndarray
    identity_spectrum: np.ndarray
    max_matching_distance: float
    tolerance: float
    passed: bool


def complement_basis(p, r_op):
    return ComplementBasis(p_tilde=orthonormal_complement(p), r_tilde=orthonormal_complement(r_op.conj().T))


def _check_hypotheses(a, x_op, p, r_op):
    a = as_matrix(a, "a")
    p = as_matrix(p, "p")
    r_op = p.conj().T if r_op is None else as_matrix(r_op, "r_op")
    n = a.shape[0]
    check_interpolation(p, n)
    if r_op.shape != (p.shape[1], n):
        raise DimensionMismatch(f"restriction must have shape {(p.shape[1], n)}, got {r_op.shape}")
    if x_op.x_inv.shape != a.shape:
        raise DimensionMismatch(f"X has shape {x_op.x_inv.shape}, expected {a.shape}")
    coarse_matrix(a, p, r_op)
    rxp = r_op @ x_op.x @ p
    if np.linalg.cond(rxp) > _SINGULAR_COND:
        raise SingularRXP("R X P is singular")
    return a, p, r_op


def complement_rayleigh(a, x_op, p, r_op=None, basis=None):
    """``Z = Pt^H X^{-1} Rt (Pt^H A^{-1} Rt)^{-1}``, of order ``n - r``."""
    a, p, r_op = _check_hypotheses(a, x_op, p, r_op)
    basis = complement_basis(p, r_op) if basis is None else basis
    pt, rt = basis.p_tilde, basis.r_tilde
    a_inv = inverse(a, error=SingularA, what="A")
    gram = pt.conj().T @ a_inv @ rt
    if np.linalg.cond(gram) > _SINGULAR_COND:
        raise SingularComplementGram("Pt^H A^{-1} Rt is singular")
    num = pt.conj().T @ x_op.x_inv @ rt
    # num @ gram^{-1} == (gram^{-H} num^H)^H
    return np.linalg.solve(gram.conj().T, num.conj().T).conj().T


def spectrum_via_identity(a, x_op, p, r_op=None):
    z = complement_rayleigh(a, x_op, p, r_op)
    r = np.asarray(p).shape[1]
    return np.concatenate([np.ones(r, dtype=np.complex128), spectrum_general(z)])


def matching_distance(z, w):
    """Largest pairwise distance under the optimal one-to-one matching of two multisets.

    The assignment minimises the bottleneck (largest matched distance):
    a sum-optimal assignment is computed on a thresholded cost and the
    threshold is bisected over the sorted candidate distances.
    """
    z = np.asarray(z, dtype=np.complex128).ravel()
    w = np.asarray(w, dtype=np.complex128).ravel()
    if z.shape != w.shape:
        raise DimensionMismatch(f"multisets have sizes {z.size} and {w.size}")
    if z.size == 0:
        return 0.0
    d = np.abs(z[:, None] - w[None, :])
    rows, cols = linear_sum_assignment(d)
    best = float(d[rows, cols].max())
    candidates = np.unique(d[d <= best])
    lo, hi = 0, len(candidates) - 1
    while lo < hi:
        mid = (lo + hi) // 2
        cost = (d > candidates[mid]).astype(float)
        rows, cols = linear_sum_assignment(cost)
        if cost[rows, cols].sum() == 0:
            hi = mid
        else:
            lo = mid + 1
    return float(candidates[lo])


def _compare(direct, via, ba, tolerance):
    tol = tolerance * max(1.0, float(np.linalg.norm(ba, 2)))
    dist = matching_distance(direct, via)
    return IdentityReport(
        direct_spectrum=direct,
        identity_spectrum=via,
        max_matching_distance=dist,
        tolerance=tol,
        passed=bool(dist <= tol),
    )


def verify_identity(a, x_op, p, r_op=None, tolerance=DEFAULT_TOL):
    """Compare ``sigma(B A)`` from a direct eigensolve with the complement formula.

    The direct side treats ``X`` as a single pre-smoothing sweep,
    ``E = (I - P (R A P)^{-1} R A)(I - X^{-1} A)``.  The tolerance is
    absolute, scaled by ``max(1, ||B A||_2)``.
    """
    a, p, r_op = _check_hypotheses(a, x_op, p, r_op)
    via = spectrum_via_identity(a, x_op, p, r_op)
    n = a.shape[0]
    cgc = identity(n) - p @ np.linalg.solve(r_op @ a @ p, r_op @ a)
    ba = identity(n) - cgc @ (identity(n) - x_op.x_inv @ a)
    return _compare(spectrum_general(ba), via, ba, tolerance)


def verify_config(config, tolerance=DEFAULT_TOL):
    """Same check for a general two-grid cycle with its own pre/post smoothers.

    ``X`` is composed from the smoothers of ``config``; the direct side is
    the assembled ``E_M`` of the configuration.
    """
    nu1 = config.nu1 if config.pre is not None else 0
    nu2 = config.nu2 if config.post is not None else 0
    if nu1 + nu2 == 0:
        raise ValueError("configuration needs at least one smoothing step")
    # a factor raised to the power 0 is never evaluated, any smoother will do
    m1 = config.pre if nu1 else config.post
    m2 = config.post if nu2 else config.pre
    x_op = composed_x(m1, nu1, m2, nu2, config.a)
    a, p, r_op = _check_hypotheses(config.a, x_op, config.p, config.r_op)
    via = spectrum_via_identity(a, x_op, p, r_op)
    ba = preconditioner(assemble_error_propagation(config, "General")).ba
    return _compare(spectrum_general(ba), via, ba, tolerance)
