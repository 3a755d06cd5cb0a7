"""Optimal interpolation operators and the objectives they minimise.

All constructions take the ``r`` eigenvectors of ``X^{-1}A`` (computed as
the pencil ``A u = lambda X u``) belonging to the smallest eigenvalues,
i.e. the modes the smoother damps slowest.  Which ``X`` is used depends on
the objective:

=============  ===================  =========================
variant        X                    predicted optimum
=============  ===================  =========================
GeneralRho     caller supplied      ``1 - lambda_{r+1}``
StgANorm       symmetrized ``M``    ``1 - lambda_{r+1}``
StgKappa       symmetrized ``M``    ``1 / lambda_{r+1}``
TgRho          ``M``                ``1 - lambda_{r+1}``
TgKappa        ``M``                ``lambda_n / lambda_{r+1}``
NonSymBound    ``M``                ``sqrt(mu_{n-r})``, mu from ``(I - M^{-1}A)^2``
=============  ===================  =========================
"""

from dataclasses import dataclass

import numpy as np

from .errors import (
    HypothesisViolated,
    InvalidRank,
    NotConvergent,
    NotHermitian,
    NotPositiveDefinite,
    SmootherNotDominating,
)
from .linalg import (
    as_matrix,
    column_basis,
    eig_generalized,
    is_hermitian,
    is_positive_definite,
    operator_a_norm,
    principal_angles,
    smallest_eigenvalue_margin,
    spectral_radius,
    spectrum_general,
)
from .smoothers import SmootherOperator, check_convergence_conditions, scale_smoother, symmetrized_x
from .twogrid import TwoGridConfig, assemble_error_propagation, preconditioner

VARIANTS = ("GeneralRho", "StgANorm", "TgRho", "NonSymBound", "StgKappa", "TgKappa")
TIE_RTOL = 1e-8
BA_UPPER_SLACK = 1e-10
DOMINATING_ATOL = 1e-10


@dataclass(frozen=True)
class OptimalInterp:
    p_opt: np.ndarray
    predicted_value: float
    variant: str
    spectrum_used: np.ndarray
    non_unique_boundary: bool = False


@dataclass(frozen=True)
class MaxMinResult:
    mu_r_plus_1: float
    w_tilde: np.ndarray
    mu: np.ndarray


@dataclass(frozen=True)
class EquivalenceResult:
    passed: bool
    max_angle: float
    max_polynomial_error: float
    tg_spectrum: np.ndarray
    stg_spectrum: np.ndarray

    def __bool__(self):
        return self.passed


def _require_hpd(a, name):
    a = as_matrix(a, name)
    if not is_hermitian(a) or not is_positive_definite(a):
        raise NotPositiveDefinite(f"{name} must be Hermitian positive definite")
    return a


def _check_rank(r, n):
    if int(r) != r or not 1 <= r < n:
        raise InvalidRank(f"coarse rank must satisfy 1 <= r < n = {n}, got {r}")
    return int(r)


def _normalized(v):
    return v / np.linalg.norm(v, axis=0)


def _is_tie(values, r):
    """True when ``values[r-1] == values[r]`` (1-based ``lambda_r == lambda_{r+1}``)."""
    scale = max(float(np.max(np.abs(values))), np.finfo(float).tiny)
    return abs(values[r] - values[r - 1]) <= TIE_RTOL * scale


def _real_spectrum(s, what):
    z = spectrum_general(s)
    if np.max(np.abs(z.imag)) > 1e-8 * max(1.0, float(np.max(np.abs(z)))):
        raise HypothesisViolated(f"{what} has a non-real spectrum")
    return np.sort(z.real)


# objectives ---------------------------------------------------------------


def general_rho(a, x_op, p):
    """``rho(E)`` for the cycle with one ``X`` sweep and Galerkin coarse correction."""
    cfg = TwoGridConfig(a=a, p=p, pre=SmootherOperator(m=x_op.x, m_inv=x_op.x_inv, hermitian=True), nu1=1)
    return spectral_radius(assemble_error_propagation(cfg, "General").e)


def tg_rho(a, m, p):
    cfg = TwoGridConfig(a=a, p=p, post=m, nu2=1)
    return spectral_radius(assemble_error_propagation(cfg, "TG").e)


def stg_a_norm(a, m, p):
    cfg = TwoGridConfig(a=a, p=p, post=m, nu2=1)
    return operator_a_norm(assemble_error_propagation(cfg, "STG").e, a)


def tg_a_norm(a, m, p):
    cfg = TwoGridConfig(a=a, p=p, post=m, nu2=1)
    return operator_a_norm(assemble_error_propagation(cfg, "TG").e, a)


def kappa_ba(a, m, p, variant):
    """Eigenvalue ratio ``lambda_max(BA) / lambda_min(BA)``."""
    cfg = TwoGridConfig(a=a, p=p, post=m, nu2=1)
    lam = _real_spectrum(preconditioner(assemble_error_propagation(cfg, variant)).ba, f"B_{variant} A")
    if lam[0] <= 0:
        raise HypothesisViolated(f"B_{variant} A has a non-positive eigenvalue {lam[0]:.3e}")
    return float(lam[-1] / lam[0])


def kappa_stg(a, m, p):
    return kappa_ba(a, m, p, "STG")


def kappa_tg(a, m, p):
    """``kappa(B_TG A)`` for the smoother rescaled to ``lambda_max(M^{-1}A) = 1``.

    The eigenvalue 1 that ``B_TG A`` always carries does not scale with
    ``M``, so the optimum ``lambda_n / lambda_{r+1}`` is only attained after
    this normalisation.
    """
    return kappa_ba(a, scale_smoother(m, a), p, "TG")


def kappa_tg_unscaled(a, m, p):
    return kappa_ba(a, m, p, "TG")


def objective(variant, a, op, p):
    """Evaluate the objective a variant minimises; ``op`` is ``X`` for GeneralRho, else ``M``."""
    if variant == "GeneralRho":
        return general_rho(a, op, p)
    if variant == "StgANorm":
        return stg_a_norm(a, op, p)
    if variant in ("TgRho", "NonSymBound"):
        return tg_rho(a, op, p)
    if variant == "StgKappa":
        return kappa_stg(a, op, p)
    if variant == "TgKappa":
        return kappa_tg(a, op, p)
    raise ValueError(f"unknown variant {variant!r}")


def random_interpolation(n, r, rng):
    return rng.standard_normal((n, r)) + 1j * rng.standard_normal((n, r))


def sampled_minimum(variant, a, op, r, trials=200, seed=0):
    """Smallest objective over ``trials`` random full-rank complex interpolations."""
    rng = np.random.default_rng(seed)
    n = np.asarray(a).shape[0]
    return min(objective(variant, a, op, random_interpolation(n, r, rng)) for _ in range(trials))


# constructions ------------------------------------------------------------


def lemma_max_min(a, x_op, r):
    """Largest attainable ``lambda_min(W^H X^{-1} W (W^H A^{-1} W)^{-1})`` over orthonormal ``n x (n-r)`` W.

    The maximiser spans ``{X u_i : i > r}`` for the eigenvectors ``u_i`` of
    ``A u = mu X u``; the maximum is ``mu_{r+1}``.
    """
    a = _require_hpd(a, "a")
    x = _require_hpd(x_op.x, "X")
    r = _check_rank(r, a.shape[0])
    ge = eig_generalized(a, x)
    w = x @ ge.vectors[:, r:]
    return MaxMinResult(mu_r_plus_1=float(ge.values[r]), w_tilde=column_basis(w), mu=ge.values)


def restricted_min_ratio(a, x_inv, w):
    """``lambda_min(W^H X^{-1} W (W^H A^{-1} W)^{-1})`` for orthonormal ``W``."""
    num = w.conj().T @ x_inv @ w
    den = w.conj().T @ np.linalg.solve(a, w)
    return float(eig_generalized(num, den).values[0]) if num.shape[0] else np.inf


def _from_pencil(a, x, r, variant, predicted):
    ge = eig_generalized(a, x)
    lam = ge.values
    return OptimalInterp(
        p_opt=_normalized(ge.vectors[:, :r]),
        predicted_value=float(predicted(lam)),
        variant=variant,
        spectrum_used=lam,
        non_unique_boundary=bool(_is_tie(lam, r)),
    )


def optimal_interpolation(a, x_op, r):
    """Interpolation minimising ``rho(E)`` for a fixed Hermitian positive definite ``X``."""
    a = _require_hpd(a, "a")
    x = _require_hpd(x_op.x, "X")
    r = _check_rank(r, a.shape[0])
    out = _from_pencil(a, x, r, "GeneralRho", lambda lam: 1.0 - lam[r])
    cfg = TwoGridConfig(a=a, p=out.p_opt, pre=SmootherOperator(m=x, m_inv=x_op.x_inv, hermitian=True), nu1=1)
    lam_ba = _real_spectrum(preconditioner(assemble_error_propagation(cfg, "General")).ba, "B A")
    if lam_ba[-1] > 1 + BA_UPPER_SLACK:
        raise HypothesisViolated(f"lambda_max(B A) = {lam_ba[-1]:.12g} exceeds 1")
    return out


def optimize_stg(a, m, r):
    """Optimal interpolation for the symmetrized cycle: (A-norm result, condition-number result)."""
    a = _require_hpd(a, "a")
    r = _check_rank(r, a.shape[0])
    x = symmetrized_x(m, a)
    base = _from_pencil(a, x.x, r, "StgANorm", lambda lam: 1.0 - lam[r])
    lam = base.spectrum_used
    kappa = OptimalInterp(base.p_opt, float(1.0 / lam[r]), "StgKappa", lam, base.non_unique_boundary)
    return base, kappa


def _require_hermitian_pd_smoother(m):
    if not m.hermitian:
        raise NotHermitian("smoother M must be Hermitian")
    if not is_positive_definite(m.m):
        raise NotPositiveDefinite("smoother M must be positive definite")


def _require_dominating(m, a):
    """``M`` Hermitian with ``M - A`` positive semidefinite (to ``DOMINATING_ATOL * ||A||``).

    Semidefiniteness suffices for the optimum and is what ``scale_smoother``
    delivers, whose ``M^ - A`` is singular by construction.
    """
    if not m.hermitian:
        raise SmootherNotDominating("M must be Hermitian with M - A positive semidefinite")
    margin = smallest_eigenvalue_margin(m.m - a)
    if margin < -DOMINATING_ATOL * np.linalg.norm(a, 2):
        raise SmootherNotDominating(
            f"M - A is not positive semidefinite (smallest eigenvalue {margin:.3e}); rescale the smoother first"
        )


def optimize_tg_rho(a, m, r):
    a = _require_hpd(a, "a")
    r = _check_rank(r, a.shape[0])
    _require_dominating(m, a)
    return _from_pencil(a, m.m, r, "TgRho", lambda lam: 1.0 - lam[r])


def optimize_tg_kappa(a, m, r):
    a = _require_hpd(a, "a")
    r = _check_rank(r, a.shape[0])
    _require_hermitian_pd_smoother(m)
    if not check_convergence_conditions(m, a).rho_convergent:
        raise NotConvergent("rho(I - M^{-1} A) >= 1")
    return _from_pencil(a, m.m, r, "TgKappa", lambda lam: lam[-1] / lam[r])


def optimize_tg(a, m, r):
    """Optimal interpolation for the post-smoothing cycle: (spectral radius, condition number)."""
    return optimize_tg_rho(a, m, r), optimize_tg_kappa(a, m, r)


def optimize_nonsym(a, m, r):
    """Interpolation attaining ``sqrt(mu_{n-r})`` for ``rho(E_TG)``, without rescaling ``M``.

    ``mu`` are the ascending eigenvalues of ``(I - M^{-1}A)^2``, obtained as
    ``(1 - t)^2`` from the pencil ``A u = t M u``.  The interpolation takes
    the eigenvectors of the ``r`` largest ``mu``.
    """
    a = _require_hpd(a, "a")
    r = _check_rank(r, a.shape[0])
    if not m.hermitian:
        raise NotHermitian("smoother M must be Hermitian")
    if not check_convergence_conditions(m, a).rho_convergent:
        raise NotConvergent("rho(I - M^{-1} A) >= 1")
    ge = eig_generalized(a, m.m)
    mu = (1.0 - ge.values) ** 2
    order = np.argsort(mu, kind="stable")
    mu, vecs = mu[order], ge.vectors[:, order]
    n = a.shape[0]
    out = OptimalInterp(
        p_opt=_normalized(vecs[:, n - r :]),
        predicted_value=float(np.sqrt(mu[n - r - 1])),
        variant="NonSymBound",
        spectrum_used=mu,
        non_unique_boundary=bool(_is_tie(mu, n - r)),
    )
    achieved = tg_rho(a, m, out.p_opt)
    if achieved > out.predicted_value + 1e-8:
        raise HypothesisViolated(f"achieved rho {achieved:.12g} exceeds bound {out.predicted_value:.12g}")
    return out


def _cluster_bounds(values, r):
    """Indices ``(lo, hi)`` so that ``values[lo:hi]`` is the tie cluster straddling position ``r``."""
    lo, hi = r, r
    while lo > 0 and _is_tie(values, lo):
        lo -= 1
    while hi < len(values) and _is_tie(values, hi):
        hi += 1
    return lo, hi


def _contained(u, v):
    """Largest principal angle of ``range(u)`` inside ``range(v)`` (``u`` has fewer columns)."""
    return float(np.max(principal_angles(u, v)))


def eigenvector_equivalence_check(a, m, angle_tol=1e-8, poly_tol=1e-9):
    """Compare the optimal coarse spaces of the symmetrized and post-smoothing cycles.

    For every ``r`` the span of the ``r`` lowest eigenvectors of
    ``X_STG^{-1}A`` must equal that of ``M^{-1}A``; at a tie across the
    ``r``/``r+1`` boundary only containment in the whole cluster is
    required.  Also checks ``sigma(X_STG^{-1}A) = p(sigma(M^{-1}A))`` with
    ``p(t) = 2t - t^2``.
    """
    a = _require_hpd(a, "a")
    _require_dominating(m, a)
    tg = eig_generalized(a, m.m)
    stg = eig_generalized(a, symmetrized_x(m, a).x)
    poly_err = float(np.max(np.abs(stg.values - (2 * tg.values - tg.values**2))))
    n = a.shape[0]
    worst = 0.0
    for r in range(1, n):
        lo, hi = _cluster_bounds(tg.values, r)
        if lo == r == hi:
            worst = max(worst, float(np.max(principal_angles(stg.vectors[:, :r], tg.vectors[:, :r]))))
        else:
            if lo > 0:
                worst = max(worst, float(np.max(principal_angles(stg.vectors[:, :lo], tg.vectors[:, :lo]))))
            if hi < n:
                worst = max(worst, _contained(stg.vectors[:, :r], tg.vectors[:, :hi]))
    return EquivalenceResult(
        passed=bool(worst < angle_tol and poly_err <= poly_tol),
        max_angle=worst,
        max_polynomial_error=poly_err,
        tg_spectrum=tg.values,
        stg_spectrum=stg.values,
    )
