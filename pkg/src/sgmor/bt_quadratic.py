"""Balanced truncation for linear systems with a quadratic output.

The controllability Gramian P and the output-weighted observability Gramian Q
(right-hand side N P N) are solved successively, factored, and the SVD of
Z_P^T Z_Q delivers the projection bases.  The induced H2 norm of a system is
sqrt(trace(B^T Q B)); the reduction error in that norm is computable exactly
from two Sylvester equations coupling the full and reduced systems.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as la

from .errors import ConvergenceError, RankError, StabilityError
from .galerkin import QuadraticOutputSystem
from .lyapsylv import SchurFactors, real_schur, solve_lyapunov, solve_sylvester, symmetric_factor

__all__ = [
    "GramianCache",
    "gramian_cache",
    "BalancedFactorization",
    "ReducedModel",
    "balance",
    "truncate",
    "h2_norm",
    "h2_error",
    "ReductionRow",
    "write_report_csv",
]

RANK_RTOL = 1e-13


@dataclass(frozen=True)
class GramianCache:
    """Reusable per-system quantities: Schur form, Gramians, H2 norm."""

    factors: SchurFactors
    controllability: np.ndarray
    observability: np.ndarray
    norm_squared: float

    @property
    def norm(self) -> float:
        return float(np.sqrt(max(self.norm_squared, 0.0)))


def gramian_cache(sys: QuadraticOutputSystem) -> GramianCache:
    """Solve the Gramian chain of a stable quadratic-output system once."""
    fac = real_schur(sys.A)
    if fac.abscissa >= 0.0:
        raise StabilityError(
            f"{sys.label}: spectral abscissa {fac.abscissa:.3e} >= 0, Gramians undefined"
        )
    P = solve_lyapunov(sys.A, sys.B @ sys.B.T, factors=fac)
    Q = solve_lyapunov(sys.A, sys.N @ P @ sys.N, factors=fac, transposed=True)
    norm_sq = float(np.trace(sys.B.T @ Q @ sys.B))
    return GramianCache(factors=fac, controllability=P, observability=Q, norm_squared=norm_sq)


@dataclass(frozen=True)
class BalancedFactorization:
    """Gramian factors and the SVD data of Z_P^T Z_Q (descending singular values)."""

    Zp: np.ndarray
    Zq: np.ndarray
    sigma: np.ndarray
    left: np.ndarray
    right_t: np.ndarray
    cache: GramianCache = field(repr=False)

    @property
    def numerical_rank(self) -> int:
        """Number of singular values above sigma_1 * 1e-13."""
        if self.sigma.size == 0 or self.sigma[0] <= 0.0:
            return 0
        return int(np.count_nonzero(self.sigma > RANK_RTOL * self.sigma[0]))


@dataclass(frozen=True)
class ReducedModel:
    """Reduced system with its oblique projection matrices (W^T V = I_r)."""

    r: int
    system: QuadraticOutputSystem
    V: np.ndarray
    W: np.ndarray
    meta: dict = field(default_factory=dict)

    @property
    def spectral_abscissa(self) -> float:
        return float(np.linalg.eigvals(self.system.A).real.max())

    @property
    def is_stable(self) -> bool:
        # abscissa >= -1e-12 counts as unstable, matching the sweep omission rule
        return self.spectral_abscissa < -1e-12


def balance(fom: QuadraticOutputSystem, factor_tol: float = 1e-12) -> BalancedFactorization:
    """Gramians, symmetric factors, and the balancing SVD of a stable system."""
    cache = gramian_cache(fom)
    Zp = symmetric_factor(cache.controllability, tol=factor_tol)
    Zq = symmetric_factor(cache.observability, tol=factor_tol)
    if Zp.shape[1] == 0 or Zq.shape[1] == 0:
        k = min(Zp.shape[1], Zq.shape[1])
        return BalancedFactorization(
            Zp=Zp, Zq=Zq, sigma=np.zeros(k), left=np.zeros((Zp.shape[1], k)),
            right_t=np.zeros((k, Zq.shape[1])), cache=cache,
        )
    left, sigma, right_t = la.svd(Zp.T @ Zq, full_matrices=False)
    return BalancedFactorization(Zp=Zp, Zq=Zq, sigma=sigma, left=left, right_t=right_t, cache=cache)


def truncate(bal: BalancedFactorization, fom: QuadraticOutputSystem, r: int) -> ReducedModel:
    """Project the full system onto the r dominant balanced directions.

    V = Z_P U_1 S_1^{-1/2}, W = Z_Q V_1 S_1^{-1/2}; the reduced matrices are
    A_r = W^T A V, B_r = W^T B, N_r = V^T N V.  ``r`` may not exceed the
    numerical rank of the factorization (inverse square roots of vanishing
    singular values would blow up).
    """
    rank = bal.numerical_rank
    if not 1 <= r <= rank:
        raise RankError(f"reduced dimension {r} outside 1..{rank} (numerical rank)")
    scale = 1.0 / np.sqrt(bal.sigma[:r])
    V = (bal.Zp @ bal.left[:, :r]) * scale
    W = (bal.Zq @ bal.right_t[:r, :].T) * scale
    A_r = W.T @ fom.A @ V
    B_r = W.T @ fom.B
    N_r = V.T @ fom.N @ V
    N_r = 0.5 * (N_r + N_r.T)
    rom = QuadraticOutputSystem(A=A_r, B=B_r, N=N_r, label="rom")
    return ReducedModel(r=r, system=rom, V=V, W=W)


def h2_norm(sys: QuadraticOutputSystem, cache: GramianCache | None = None) -> float:
    """H2 norm sqrt(trace(B^T Q B)) of a stable quadratic-output system."""
    if cache is None:
        cache = gramian_cache(sys)
    return cache.norm


def h2_error(
    fom: QuadraticOutputSystem,
    rom: ReducedModel | QuadraticOutputSystem,
    cache: GramianCache | None = None,
) -> float:
    """H2 norm of the error system between a full and a reduced model.

    Evaluates sqrt(trace(B^T Q B + B_r^T Q_r B_r - 2 B^T Z B_r)) where Z
    couples the two systems through a pair of Sylvester equations.  The trace
    argument is a difference of like-sized terms, so its magnitude below
    1e-10 of the term scale is pure cancellation noise; that dead zone maps
    to 0.  Anything more negative signals inaccurate Gramians and raises.
    """
    rsys = rom.system if isinstance(rom, ReducedModel) else rom
    if cache is None:
        cache = gramian_cache(fom)
    rom_cache = gramian_cache(rsys)

    # cross terms: A X + X A_r^T + B B_r^T = 0, then A^T Z + Z A_r + N X N_r = 0
    X = solve_sylvester(fom.A, rsys.A.T, fom.B @ rsys.B.T, factors_a=cache.factors)
    Z = solve_sylvester(
        fom.A, rsys.A, fom.N @ X @ rsys.N, factors_a=cache.factors, transpose_a=True
    )
    cross = float(np.trace(fom.B.T @ Z @ rsys.B))
    value = cache.norm_squared + rom_cache.norm_squared - 2.0 * cross
    scale = abs(cache.norm_squared) + abs(rom_cache.norm_squared)
    if value < -1e-10 * scale:
        raise ConvergenceError(
            f"error-norm trace argument {value:.3e} is negative beyond tolerance"
        )
    if value <= 1e-10 * scale:
        return 0.0
    return float(np.sqrt(value))


@dataclass(frozen=True)
class ReductionRow:
    """One reduced dimension of a sweep; missing entries stay None."""

    r: int
    sigma: float | None
    h2_abs: float | None
    h2_rel: float | None
    lambda_max: float | None
    stable: bool


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    return f"{value:.17g}"


def write_report_csv(rows, path, include_stable: bool = False) -> None:
    """Write sweep rows as CSV with 17-significant-digit numeric fields."""
    header = ["r", "sigma_r", "h2_abs", "h2_rel", "lambda_max"]
    if include_stable:
        header.append("stable")
    with open(path, "w", encoding="ascii", newline="\n") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fields = [str(row.r), _fmt(row.sigma), _fmt(row.h2_abs), _fmt(row.h2_rel), _fmt(row.lambda_max)]
            if include_stable:
                fields.append(_fmt(row.stable))
            fh.write(",".join(fields) + "\n")
