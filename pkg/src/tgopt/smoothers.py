"""Smoothers ``M`` and the derived operators ``X`` with ``I - X^{-1}A`` equal to a smoothing product."""

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import (
    DimensionMismatch,
    NotAConvergent,
    NotHermitian,
    NotPositiveDefinite,
    SingularSmoother,
    SingularX,
    ZeroDiagonal,
)
from .linalg import (
    PD_MARGIN,
    as_matrix,
    eig_generalized,
    identity,
    inverse,
    is_hermitian,
    is_positive_definite,
    smallest_eigenvalue_margin,
    spectral_radius,
)

SMOOTHER_KINDS = ("Richardson", "Jacobi", "WeightedJacobi", "GaussSeidel", "SOR", "ExplicitMatrix")


@dataclass(frozen=True)
class SmootherSpec:
    kind: str
    omega: float = 1.0
    explicit: Optional[np.ndarray] = None

    def __post_init__(self):
        if self.kind not in SMOOTHER_KINDS:
            raise ValueError(f"unknown smoother kind {self.kind!r}")
        if self.kind in ("Richardson", "WeightedJacobi", "SOR") and not self.omega > 0:
            raise ValueError(f"omega must be positive, got {self.omega}")
        if self.kind == "SOR" and not self.omega < 2:
            raise ValueError(f"SOR requires 0 < omega < 2, got {self.omega}")
        if self.kind == "ExplicitMatrix" and self.explicit is None:
            raise ValueError("ExplicitMatrix smoother needs an explicit matrix")


@dataclass(frozen=True)
class SmootherOperator:
    m: np.ndarray
    m_inv: np.ndarray
    hermitian: bool

    @classmethod
    def from_matrix(cls, m):
        m = as_matrix(m, "m")
        m_inv = inverse(m, error=SingularSmoother, what="smoother M")
        return cls(m=m, m_inv=m_inv, hermitian=is_hermitian(m))

    @classmethod
    def from_inverse(cls, m_inv):
        m_inv = as_matrix(m_inv, "m_inv")
        m = inverse(m_inv, error=SingularSmoother, what="smoother M^{-1}")
        return cls(m=m, m_inv=m_inv, hermitian=is_hermitian(m))

    @property
    def adjoint(self):
        """The smoother ``M^H``."""
        return SmootherOperator(m=self.m.conj().T, m_inv=self.m_inv.conj().T, hermitian=self.hermitian)

    def iteration_matrix(self, a):
        """``I - M^{-1} A``."""
        return identity(a.shape[0]) - self.m_inv @ a


@dataclass(frozen=True)
class XOperator:
    x_inv: np.ndarray
    x: np.ndarray
    provenance: str

    @classmethod
    def from_inverse(cls, x_inv, provenance):
        x_inv = as_matrix(x_inv, "x_inv")
        x = inverse(x_inv, error=SingularX, what="X^{-1}")
        return cls(x_inv=x_inv, x=x, provenance=provenance)

    @classmethod
    def from_smoother(cls, m, provenance="TG"):
        """``X = M``: the operator of a single smoothing sweep."""
        return cls(x_inv=m.m_inv, x=m.m, provenance=provenance)


@dataclass(frozen=True)
class ConvergenceFlags:
    a_norm_convergent: bool
    m_minus_a_hpd: bool
    rho_convergent: bool
    a_norm_margin: float
    m_minus_a_margin: float
    rho: float


def build_smoother(spec, a):
    a = as_matrix(a, "a")
    if a.shape[0] != a.shape[1]:
        raise DimensionMismatch(f"a must be square, got shape {a.shape}")
    n = a.shape[0]
    kind, omega = spec.kind, spec.omega
    if kind == "ExplicitMatrix":
        m = as_matrix(spec.explicit, "explicit")
        if m.shape != a.shape:
            raise DimensionMismatch(f"explicit smoother shape {m.shape} does not match {a.shape}")
        return SmootherOperator.from_matrix(m)
    if kind == "Richardson":
        return SmootherOperator.from_matrix(identity(n) / omega)
    d = np.diag(np.diag(a))
    if np.any(np.diag(a) == 0):
        raise ZeroDiagonal("diagonal of a has zero entries")
    if kind == "Jacobi":
        m = d
    elif kind == "WeightedJacobi":
        m = d / omega
    elif kind == "GaussSeidel":
        m = d + np.tril(a, -1)
    else:
        m = d / omega + np.tril(a, -1)
    return SmootherOperator.from_matrix(m)


def _require_a_convergent(m, a):
    s = m.m + m.m.conj().T - a
    if not is_positive_definite(s):
        raise NotAConvergent(
            f"M + M^H - A is not positive definite (smallest eigenvalue {smallest_eigenvalue_margin(s):.3e})"
        )


def symmetrized_x(m, a):
    """``X^{-1} = M^{-1} + M^{-H} - M^{-1} A M^{-H}`` (one pre- plus one post-sweep)."""
    a = as_matrix(a, "a")
    _require_a_convergent(m, a)
    mi = m.m_inv
    x_inv = mi + mi.conj().T - mi @ a @ mi.conj().T
    x_inv = 0.5 * (x_inv + x_inv.conj().T)
    return XOperator.from_inverse(x_inv, "STG")


def composed_x(m1, nu1, m2, nu2, a):
    """X with ``I - X^{-1}A = (I - M1^{-1}A)^nu1 (I - M2^{-1}A)^nu2``."""
    a = as_matrix(a, "a")
    if nu1 < 0 or nu2 < 0 or nu1 + nu2 < 1:
        raise ValueError("need nu1, nu2 >= 0 and nu1 + nu2 >= 1")
    n = a.shape[0]
    s = np.linalg.matrix_power(m1.iteration_matrix(a), nu1) @ np.linalg.matrix_power(m2.iteration_matrix(a), nu2)
    a_inv = inverse(a, error=SingularX, what="A")
    x_inv = (identity(n) - s) @ a_inv
    return XOperator.from_inverse(x_inv, "Composed")


def check_convergence_conditions(m, a):
    a = as_matrix(a, "a")
    if not is_hermitian(a) or not is_positive_definite(a):
        raise NotPositiveDefinite("a must be Hermitian positive definite")
    norm_a = np.linalg.norm(a, 2)
    s1 = m.m + m.m.conj().T - a
    s2 = m.m - a
    margin1 = smallest_eigenvalue_margin(s1)
    # M - A can only be HPD when M itself is Hermitian
    m_herm = is_hermitian(m.m)
    margin2 = smallest_eigenvalue_margin(s2) if m_herm else -np.inf
    rho = spectral_radius(m.iteration_matrix(a))
    return ConvergenceFlags(
        a_norm_convergent=bool(margin1 > PD_MARGIN * max(np.linalg.norm(s1, 2), norm_a)),
        m_minus_a_hpd=bool(m_herm and margin2 > PD_MARGIN * max(np.linalg.norm(s2, 2), norm_a)),
        rho_convergent=bool(rho < 1 - PD_MARGIN),
        a_norm_margin=float(margin1),
        m_minus_a_margin=float(margin2),
        rho=rho,
    )


def smoother_spectrum(m, a):
    """Eigenpairs of ``M^{-1}A`` (via ``A u = t M u``) for Hermitian positive definite ``M``."""
    if not m.hermitian:
        raise NotHermitian("smoother M must be Hermitian")
    try:
        return eig_generalized(a, m.m)
    except NotPositiveDefinite:
        raise NotPositiveDefinite("smoother M must be positive definite") from None


def scale_smoother(m, a):
    """Rescale a Hermitian positive definite smoother so that ``lambda_max(M^{-1}A) = 1``."""
    a = as_matrix(a, "a")
    if not is_hermitian(a) or not is_positive_definite(a):
        raise NotPositiveDefinite("a must be Hermitian positive definite")
    lam_max = smoother_spectrum(m, a).values[-1]
    m_hat = m.m * lam_max
    m_hat = 0.5 * (m_hat + m_hat.conj().T)
    m_inv_hat = m.m_inv / lam_max
    m_inv_hat = 0.5 * (m_inv_hat + m_inv_hat.conj().T)
    return SmootherOperator(m=m_hat, m_inv=m_inv_hat, hermitian=True)
