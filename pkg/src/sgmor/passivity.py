"""Dissipation and passivity checks for quadratic-output systems.

For the energy N the matrix T = A^T N + N A governs the internal dissipation:
d/dt (x^T N x) = x^T T x + input terms.  A system is passive with respect to
the energy supply when T is negative semidefinite.  The reduced systems lose
that property in general; lambda_max(T) measures by how much, and shifting the
dissipation inequality by lambda_max(T) I restores a certificate.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .galerkin import QuadraticOutputSystem

__all__ = [
    "dissipation_matrix",
    "DissipationReport",
    "DissipationCertificate",
    "check_passivity",
    "supply_lmi_matrix",
    "shifted_dissipation_certificate",
]

PASSIVITY_RTOL = 1e-10


def dissipation_matrix(sys: QuadraticOutputSystem) -> np.ndarray:
    """Symmetric part of A^T N + N A (exactly symmetric up to roundoff)."""
    T = sys.A.T @ sys.N + sys.N @ sys.A
    return 0.5 * (T + T.T)


@dataclass(frozen=True)
class DissipationReport:
    lambda_max: float
    passive: bool
    tolerance: float


def check_passivity(sys: QuadraticOutputSystem) -> DissipationReport:
    """Largest eigenvalue of the dissipation matrix and the sign verdict.

    The verdict uses a relative zero threshold: lambda_max <= 1e-10 * ||T||_2
    still counts as passive, so roundoff at the semidefinite boundary does not
    flip the answer.
    """
    T = dissipation_matrix(sys)
    eigs = np.linalg.eigvalsh(T)
    lam = float(eigs[-1])
    spectral_norm = float(max(abs(eigs[0]), abs(eigs[-1])))
    tol = PASSIVITY_RTOL * spectral_norm
    return DissipationReport(lambda_max=lam, passive=lam <= tol, tolerance=tol)


def supply_lmi_matrix(
    sys: QuadraticOutputSystem,
    R: np.ndarray | None = None,
    S: np.ndarray | None = None,
    L: np.ndarray | None = None,
) -> np.ndarray:
    """Composite block matrix of the dissipation inequality for a supply rate.

    [[A^T N + N A - L,  N B - S^T],
     [B^T N - S,        -R       ]]

    Negative semidefiniteness of this matrix certifies dissipativity with
    storage x^T N x against the supply u^T R u + 2 y_s^T S u-type rates; the
    defaults R = 0, S = B^T N, L = 0 reproduce the plain energy balance.
    """
    m = sys.A.shape[0]
    n_in = sys.n_in
    if R is None:
        R = np.zeros((n_in, n_in))
    if S is None:
        S = sys.B.T @ sys.N
    if L is None:
        L = np.zeros((m, m))
    top_left = sys.A.T @ sys.N + sys.N @ sys.A - L
    top_right = sys.N @ sys.B - S.T
    block = np.block([[top_left, top_right], [top_right.T, -R]])
    return 0.5 * (block + block.T)


@dataclass(frozen=True)
class DissipationCertificate:
    """Feasible supply-rate triple (R, S, L) with its verification residual.

    ``composite_lambda_max`` is the largest eigenvalue of the composite LMI
    matrix evaluated at the triple; non-positivity (up to roundoff) certifies
    the shifted dissipation inequality.
    """

    lambda_max: float
    R: np.ndarray
    S: np.ndarray
    L: np.ndarray
    composite_lambda_max: float


def shifted_dissipation_certificate(sys: QuadraticOutputSystem) -> DissipationCertificate:
    """Supply-rate triple (R = 0, S = B^T N, L = lambda_max(T) I).

    With S = B^T N the off-diagonal blocks of the composite matrix vanish,
    and shifting the dissipation matrix by its own largest eigenvalue makes
    the remaining block negative semidefinite by construction.  The triple is
    verified by an eigensolve of the composite matrix; the resulting largest
    eigenvalue is returned as the certificate residual.
    """
    m = sys.A.shape[0]
    report = check_passivity(sys)
    R = np.zeros((sys.n_in, sys.n_in))
    S = sys.B.T @ sys.N
    L = report.lambda_max * np.eye(m)
    composite = supply_lmi_matrix(sys, R=R, S=S, L=L)
    residual = float(np.linalg.eigvalsh(composite)[-1])
    return DissipationCertificate(
        lambda_max=report.lambda_max, R=R, S=S, L=L, composite_lambda_max=residual
    )
