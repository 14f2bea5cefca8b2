"""Shared helpers: small random systems with a known-good construction."""

from __future__ import annotations

import numpy as np
import numpy.linalg as la
import pytest

from sgmor import QuadraticOutputSystem


def make_stable_system(
    rng: np.random.Generator, m: int, n_in: int = 2, margin: float = 0.5
) -> QuadraticOutputSystem:
    """Random asymptotically stable system with a symmetric PSD output matrix.

    The spectral abscissa is pushed below -margin by a diagonal shift, so the
    Lyapunov solves stay well conditioned across seeds.
    """
    A = rng.standard_normal((m, m))
    A -= (np.max(la.eigvals(A).real) + margin + rng.uniform(0.5, 2.0)) * np.eye(m)
    B = rng.standard_normal((m, n_in))
    G = rng.standard_normal((m, m))
    N = G @ G.T + 0.1 * np.eye(m)
    return QuadraticOutputSystem(A=A, B=B, N=N)


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(20240517)
