"""Dense direct solvers for Lyapunov and Sylvester equations.

Bartels-Stewart style: reduce the coefficients to real Schur form once and
solve the quasi-triangular equation with LAPACK's trsyl kernel.  A Schur
factorization can be computed up front and passed to repeated solves against
the same coefficient matrix; every solution is verified against its residual
before it is returned.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np
import scipy.linalg as la

from .errors import ConvergenceError, DefinitenessError, SpectralOverlapError, StabilityError

__all__ = [
    "SchurFactors",
    "real_schur",
    "spectral_abscissa",
    "solve_lyapunov",
    "solve_sylvester",
    "symmetric_factor",
]

RESIDUAL_RTOL = 1e-10


def _quasi_triangular_eigenvalues(T: np.ndarray) -> np.ndarray:
    """Eigenvalues read off the 1x1 and 2x2 diagonal blocks of a real Schur form."""
    n = T.shape[0]
    evs = np.empty(n, dtype=complex)
    i = 0
    while i < n:
        if i + 1 < n and T[i + 1, i] != 0.0:
            a, b = T[i, i], T[i, i + 1]
            c, d = T[i + 1, i], T[i + 1, i + 1]
            re = 0.5 * (a + d)
            disc = 0.25 * (a - d) ** 2 + b * c
            if disc < 0.0:
                im = np.sqrt(-disc)
                evs[i], evs[i + 1] = re + 1j * im, re - 1j * im
            else:
                rt = np.sqrt(disc)
                evs[i], evs[i + 1] = re + rt, re - rt
            i += 2
        else:
            evs[i] = T[i, i]
            i += 1
    return evs


@dataclass(frozen=True)
class SchurFactors:
    """Real Schur decomposition A = U T U^T with the spectrum of A attached."""

    T: np.ndarray
    U: np.ndarray
    eigenvalues: np.ndarray

    @cached_property
    def abscissa(self) -> float:
        """Largest real part of the spectrum."""
        return float(self.eigenvalues.real.max())


def real_schur(A: np.ndarray) -> SchurFactors:
    """Compute the real Schur form of a square matrix."""
    A = np.asarray(A, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {A.shape}")
    T, U = la.schur(A, output="real")
    return SchurFactors(T=T, U=U, eigenvalues=_quasi_triangular_eigenvalues(T))


def spectral_abscissa(A: np.ndarray) -> float:
    """Largest real part of the eigenvalues of A."""
    return float(np.linalg.eigvals(np.asarray(A, dtype=float)).real.max())


def _trsyl(Ta, Tb, C, trana: str, tranb: str):
    (trsyl,) = la.get_lapack_funcs(("trsyl",), (Ta, C))
    y, scale, info = trsyl(Ta, Tb, C, trana=trana, tranb=tranb, isgn=1)
    if info < 0:
        raise ValueError(f"illegal argument {-info} passed to trsyl")
    return y, scale, info


def solve_lyapunov(
    A: np.ndarray,
    C: np.ndarray,
    factors: SchurFactors | None = None,
    transposed: bool = False,
    rtol: float = RESIDUAL_RTOL,
) -> np.ndarray:
    """Solve A X + X A^T + C = 0 for symmetric C and asymptotically stable A.

    With ``transposed`` the adjoint equation A^T X + X A + C = 0 is solved
    instead, reusing the same Schur factorization of A.  The result is
    symmetrized; a StabilityError is raised for unstable A and a
    ConvergenceError if the relative residual exceeds ``rtol``.
    """
    A = np.asarray(A, dtype=float)
    C = np.asarray(C, dtype=float)
    if C.shape != A.shape:
        raise ValueError(f"right-hand side shape {C.shape} does not match A {A.shape}")
    cnorm = la.norm(C, "fro")
    if not np.allclose(C, C.T, rtol=0.0, atol=1e-12 * max(cnorm, 1.0)):
        raise ValueError("Lyapunov right-hand side must be symmetric")

    fac = factors if factors is not None else real_schur(A)
    if fac.abscissa >= 0.0:
        raise StabilityError(f"coefficient matrix has spectral abscissa {fac.abscissa:.3e} >= 0")

    T, U = fac.T, fac.U
    rhs = -(U.T @ C @ U)
    trana, tranb = ("T", "N") if transposed else ("N", "T")
    y, scale, info = _trsyl(T, T, rhs, trana, tranb)
    if info == 1:
        raise ConvergenceError("trsyl perturbed nearly singular Lyapunov spectrum")
    X = U @ (y / scale) @ U.T
    X = 0.5 * (X + X.T)

    if transposed:
        residual = la.norm(A.T @ X + X @ A + C, "fro")
    else:
        residual = la.norm(A @ X + X @ A.T + C, "fro")
    if cnorm > 0.0 and residual / cnorm > rtol:
        raise ConvergenceError(
            f"Lyapunov residual {residual / cnorm:.3e} exceeds tolerance {rtol:.1e}"
        )
    return X


def solve_sylvester(
    A: np.ndarray,
    F: np.ndarray,
    C: np.ndarray,
    factors_a: SchurFactors | None = None,
    transpose_a: bool = False,
    rtol: float = RESIDUAL_RTOL,
) -> np.ndarray:
    """Solve A Y + Y F + C = 0 (the spectra of A and -F must be disjoint).

    ``transpose_a`` solves A^T Y + Y F + C = 0 while reusing a Schur
    factorization of A, which is what repeated error-bound evaluations
    against one full-order A need.
    """
    A = np.asarray(A, dtype=float)
    F = np.asarray(F, dtype=float)
    C = np.asarray(C, dtype=float)
    if C.shape != (A.shape[0], F.shape[0]):
        raise ValueError(f"right-hand side shape {C.shape} does not match ({A.shape[0]}, {F.shape[0]})")

    fac_a = factors_a if factors_a is not None else real_schur(A)
    fac_f = real_schur(F)
    spectrum_a = np.conj(fac_a.eigenvalues) if transpose_a else fac_a.eigenvalues
    gaps = np.abs(spectrum_a[:, None] + fac_f.eigenvalues[None, :])
    scale = max(np.abs(spectrum_a).max(), np.abs(fac_f.eigenvalues).max(), 1.0)
    if gaps.min() <= 1e-13 * scale:
        raise SpectralOverlapError(
            f"spectra of A and -F nearly intersect (gap {gaps.min():.3e})"
        )

    rhs = -(fac_a.U.T @ C @ fac_f.U)
    y, scl, info = _trsyl(fac_a.T, fac_f.T, rhs, "T" if transpose_a else "N", "N")
    if info == 1:
        raise SpectralOverlapError("trsyl perturbed nearly common eigenvalues")
    Y = fac_a.U @ (y / scl) @ fac_f.U.T

    lhs = A.T @ Y if transpose_a else A @ Y
    residual = la.norm(lhs + Y @ F + C, "fro")
    denom = max(la.norm(C, "fro"), 1.0)
    if residual / denom > rtol:
        raise ConvergenceError(
            f"Sylvester residual {residual / denom:.3e} exceeds tolerance {rtol:.1e}"
        )
    return Y


def symmetric_factor(X: np.ndarray, tol: float = 1e-12) -> np.ndarray:
    """Low-rank symmetric factor Z with Z Z^T ~= X for numerically PSD X.

    Eigendecomposition with truncation: columns are kept for eigenvalues
    above tol * lambda_max(X), so rank-deficient Gramians yield thin factors.
    Raises DefinitenessError when X is indefinite beyond tol * ||X||_2.
    """
    X = np.asarray(X, dtype=float)
    if not np.allclose(X, X.T, rtol=0.0, atol=1e-12 * max(np.abs(X).max(initial=0.0), 1.0)):
        raise ValueError("matrix must be symmetric")
    w, V = la.eigh(0.5 * (X + X.T))
    norm2 = np.abs(w).max(initial=0.0)
    if w[0] < -tol * norm2:
        raise DefinitenessError(
            f"matrix has eigenvalue {w[0]:.3e} below the PSD tolerance {-tol * norm2:.3e}"
        )
    cutoff = tol * max(w[-1], 0.0)
    keep = w > cutoff
    Z = V[:, keep] * np.sqrt(w[keep])
    # descending eigenvalue order keeps the dominant directions first
    Z = Z[:, ::-1]
    err = la.norm(Z @ Z.T - X, "fro")
    xnorm = la.norm(X, "fro")
    if xnorm > 0.0 and err > 10.0 * tol * xnorm:
        raise ConvergenceError(
            f"factorization defect {err / xnorm:.3e} exceeds 10*tol={10 * tol:.1e}"
        )
    return Z
