"""Two-grid operators: coarse matrix, error propagation, preconditioner, K(V_c), and a cycle solver."""

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import (
    DimensionMismatch,
    Diverged,
    InvalidRank,
    MaxIterExceeded,
    RankDeficient,
    SingularA,
    SingularCoarseMatrix,
)
from .linalg import RANK_RTOL, as_matrix, eig_generalized, identity, solve
from .smoothers import SmootherOperator, symmetrized_x

VARIANTS = ("General", "TG", "STG")


def check_interpolation(p, n):
    """Validate an ``n x r`` interpolation: ``1 <= r < n`` and full column rank."""
    if p.ndim != 2 or p.shape[0] != n:
        raise DimensionMismatch(f"interpolation must have {n} rows, got shape {p.shape}")
    r = p.shape[1]
    if not 1 <= r < n:
        raise InvalidRank(f"coarse rank must satisfy 1 <= r < n = {n}, got r = {r}")
    sv = np.linalg.svd(p, compute_uv=False)
    if sv[-1] <= RANK_RTOL * sv[0]:
        raise RankDeficient(f"interpolation is rank deficient (sigma_min/sigma_max = {sv[-1] / sv[0]:.3e})")


@dataclass(frozen=True)
class TwoGridConfig:
    """Fine matrix, transfer operators and smoothers of one two-grid cycle.

    ``r_op`` defaults to ``p^H``.  For the TG and STG variants the single
    smoother ``M`` is taken from ``post`` (falling back to ``pre``): TG
    post-smooths with ``M^{-H}``, STG additionally pre-smooths with ``M^{-1}``.
    """

    a: np.ndarray
    p: np.ndarray
    r_op: Optional[np.ndarray] = None
    pre: Optional[SmootherOperator] = None
    nu1: int = 0
    post: Optional[SmootherOperator] = None
    nu2: int = 0

    def __post_init__(self):
        a = as_matrix(self.a, "a")
        if a.shape[0] != a.shape[1]:
            raise DimensionMismatch(f"a must be square, got shape {a.shape}")
        p = as_matrix(self.p, "p")
        check_interpolation(p, a.shape[0])
        r_op = p.conj().T if self.r_op is None else as_matrix(self.r_op, "r_op")
        if r_op.shape != (p.shape[1], p.shape[0]):
            raise DimensionMismatch(f"restriction must have shape {(p.shape[1], p.shape[0])}, got {r_op.shape}")
        if self.nu1 < 0 or self.nu2 < 0:
            raise ValueError("smoothing step counts must be non-negative")
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "p", p)
        object.__setattr__(self, "r_op", r_op)

    @classmethod
    def with_smoother(cls, a, p, m):
        """Galerkin configuration with ``M`` on both sides (one sweep each)."""
        return cls(a=a, p=p, pre=m, nu1=1, post=m, nu2=1)

    @property
    def n(self):
        return self.a.shape[0]

    @property
    def r(self):
        return self.p.shape[1]

    @property
    def smoother(self):
        m = self.post if self.post is not None else self.pre
        if m is None:
            raise ValueError("configuration has no smoother")
        return m


@dataclass(frozen=True)
class ErrorPropagation:
    e: np.ndarray
    variant: str
    config: TwoGridConfig = field(repr=False)


@dataclass(frozen=True)
class PreconditionedSystem:
    b: np.ndarray
    ba: np.ndarray


def coarse_matrix(a, p, r_op=None):
    """Galerkin product ``R A P``."""
    a = as_matrix(a, "a")
    p = as_matrix(p, "p")
    r_op = p.conj().T if r_op is None else as_matrix(r_op, "r_op")
    if a.shape[0] != a.shape[1] or p.shape[0] != a.shape[0] or r_op.shape != (p.shape[1], a.shape[0]):
        raise DimensionMismatch(f"incompatible shapes a{a.shape}, p{p.shape}, r{r_op.shape}")
    ac = r_op @ a @ p
    cond = np.linalg.cond(ac)
    if not np.isfinite(cond) or cond > 1.0 / (1e3 * np.finfo(float).eps):
        raise SingularCoarseMatrix(f"coarse matrix R A P is singular (condition {cond:.3e})")
    return ac


def coarse_correction(a, p, r_op=None):
    """``I - P (R A P)^{-1} R A``."""
    r_op = p.conj().T if r_op is None else r_op
    ac = coarse_matrix(a, p, r_op)
    return identity(a.shape[0]) - p @ np.linalg.solve(ac, r_op @ a)


def assemble_error_propagation(config, variant="General"):
    a, n = config.a, config.n
    if variant == "General":
        cgc = coarse_correction(a, config.p, config.r_op)
        e = cgc
        if config.pre is not None and config.nu1:
            e = e @ np.linalg.matrix_power(config.pre.iteration_matrix(a), config.nu1)
        if config.post is not None and config.nu2:
            e = np.linalg.matrix_power(config.post.iteration_matrix(a), config.nu2) @ e
    elif variant in ("TG", "STG"):
        m = config.smoother
        cgc = coarse_correction(a, config.p, config.p.conj().T)
        e = (identity(n) - m.m_inv.conj().T @ a) @ cgc
        if variant == "STG":
            e = e @ m.iteration_matrix(a)
    else:
        raise ValueError(f"unknown variant {variant!r}; expected one of {VARIANTS}")
    return ErrorPropagation(e=e, variant=variant, config=config)


def preconditioner(ep):
    """``B`` with ``E = I - B A``."""
    a = ep.config.a
    ba = identity(a.shape[0]) - ep.e
    # B = (I - E) A^{-1}, i.e. B^H solves A^H B^H = (I - E)^H
    b = solve(a.conj().T, ba.conj().T, error=SingularA, what="A").conj().T
    return PreconditionedSystem(b=b, ba=ba)


def galerkin_projector(p, metric):
    """``P (P^H W P)^{-1} P^H W``, the W-orthogonal projector onto ``range(P)``."""
    g = p.conj().T @ metric @ p
    return p @ np.linalg.solve(g, p.conj().T @ metric)


def kvc(a, m, p):
    """``K(V_c) = sup_v ||(I - Q) v||^2_{M~} / ||v||^2_A``.

    ``M~`` is the symmetrized smoother and ``Q`` the ``M~``-orthogonal
    projector onto the coarse space; the supremum is the largest eigenvalue
    of the pencil ``((I-Q)^H M~ (I-Q), A)``.
    """
    a = as_matrix(a, "a")
    p = as_matrix(p, "p")
    check_interpolation(p, a.shape[0])
    m_tilde = symmetrized_x(m, a).x
    i_q = identity(a.shape[0]) - galerkin_projector(p, m_tilde)
    num = i_q.conj().T @ m_tilde @ i_q
    num = 0.5 * (num + num.conj().T)
    return float(eig_generalized(num, a).values[-1])


@dataclass
class SolveResult:
    solution: np.ndarray
    iterations: int
    observed_factor: float
    residuals: list
    converged: bool


def _observed_factor(residuals):
    ratios = [residuals[k + 1] / residuals[k] for k in range(len(residuals) - 1) if residuals[k] > 0]
    if not ratios:
        return 0.0
    # drop the first ratio (transient) when there is more than one
    k = min(10, len(ratios) - 1) or 1
    tail = np.asarray(ratios[-k:])
    if np.any(tail == 0):
        return 0.0
    return float(np.exp(np.mean(np.log(tail))))


def run_cycle_solver(a, rhs, config, variant="TG", tol=1e-10, max_iter=1000, x0=None):
    """Stationary iteration ``x <- x + B (rhs - A x)`` with the two-grid preconditioner.

    ``observed_factor`` is the geometric mean of the trailing
    ``min(10, iterations - 1)`` residual reduction ratios.
    """
    a = as_matrix(a, "a")
    rhs = np.asarray(rhs, dtype=np.complex128).ravel()
    if rhs.shape[0] != a.shape[0]:
        raise DimensionMismatch(f"rhs has length {rhs.shape[0]}, expected {a.shape[0]}")
    b = preconditioner(assemble_error_propagation(config, variant)).b
    x = np.zeros_like(rhs) if x0 is None else np.asarray(x0, dtype=np.complex128).copy()
    rhs_norm = np.linalg.norm(rhs)
    res = rhs - a @ x
    residuals = [float(np.linalg.norm(res))]
    target = tol * rhs_norm
    if residuals[0] <= target:
        return SolveResult(x, 0, 0.0, residuals, True)
    best_x, best_res = x.copy(), residuals[0]
    for it in range(1, max_iter + 1):
        x = x + b @ res
        res = rhs - a @ x
        rn = float(np.linalg.norm(res))
        residuals.append(rn)
        if rn < best_res:
            best_x, best_res = x.copy(), rn
        if rn <= target:
            return SolveResult(x, it, _observed_factor(residuals), residuals, True)
        if not np.isfinite(rn) or rn > 1e6 * residuals[0]:
            result = SolveResult(best_x, it, _observed_factor(residuals), residuals, False)
            raise Diverged(f"residual grew from {residuals[0]:.3e} to {rn:.3e}", result)
    result = SolveResult(best_x, max_iter, _observed_factor(residuals), residuals, False)
    raise MaxIterExceeded(f"no convergence to {tol:g} in {max_iter} iterations", result)
