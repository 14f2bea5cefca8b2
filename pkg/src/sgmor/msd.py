"""Parametric mass-spring-damper benchmark model.

A chain of lumped masses connected by springs and dampers; endpoint 0 denotes
the ground.  Every physical coefficient (mass, stiffness, damping) is an
independent uniform random variable varying by a relative half-width delta
around its nominal value, which gives an affine parametric second-order
system.  The default configuration is a 4-mass chain with 6 springs (5 chain
plus one cross coupling) and 4 dampers, 14 parameters in total, driven
through the lowest ground spring.
"""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass, field

import numpy as np

from .galerkin import ParametricSecondOrderSystem

__all__ = [
    "MsdConfig",
    "default_config",
    "load_config",
    "config_from_dict",
    "build_msd",
    "corner_definiteness_check",
]

# (end_a, end_b, nominal value); 0 = ground.  The nominal values are chosen
# so that the degree-2 Galerkin system keeps a numerical Hankel rank above
# 100 (light damping on the chain) while its passivity-loss measure still
# shrinks between r = 10 and r = 100 (heterogeneous stiffness and damping).
DEFAULT_MASSES = (1.0, 1.5, 2.0, 2.5)
DEFAULT_SPRINGS = ((0, 1, 120.0), (1, 2, 100.0), (2, 3, 90.0), (3, 4, 140.0), (1, 3, 50.0), (4, 0, 110.0))
DEFAULT_DAMPERS = ((1, 2, 0.05), (2, 3, 0.22), (3, 4, 0.04), (4, 0, 0.55))


@dataclass(frozen=True)
class MsdConfig:
    """Connectivity table and nominal coefficients of the benchmark.

    ``springs`` and ``dampers`` are (end_a, end_b, value) triples with mass
    indices 1..n and 0 for the ground.  ``input_spring`` is the 1-based index
    of the grounded spring through which the excitation enters.  ``delta`` is
    the relative half-width of the uniform parameter variation.
    """

    masses: tuple[float, ...] = DEFAULT_MASSES
    springs: tuple[tuple[int, int, float], ...] = DEFAULT_SPRINGS
    dampers: tuple[tuple[int, int, float], ...] = DEFAULT_DAMPERS
    input_spring: int = 6
    delta: float = 0.10

    def __post_init__(self):
        n = len(self.masses)
        if n == 0:
            raise ValueError("at least one mass is required")
        for v in self.masses:
            if v <= 0:
                raise ValueError("nominal masses must be positive")
        for kind, elems in (("spring", self.springs), ("damper", self.dampers)):
            for a, b, v in elems:
                if v <= 0:
                    raise ValueError(f"nominal {kind} values must be positive")
                if not (0 <= a <= n and 0 <= b <= n):
                    raise ValueError(f"{kind} endpoint out of range: ({a}, {b})")
                if a == b:
                    raise ValueError(f"{kind} must connect two distinct endpoints, got ({a}, {b})")
        if not 0 <= self.delta < 1:
            raise ValueError(f"relative variation delta must lie in [0, 1), got {self.delta}")
        if not 1 <= self.input_spring <= len(self.springs):
            raise ValueError(f"input_spring must index a spring (1..{len(self.springs)})")
        a, b, _ = self.springs[self.input_spring - 1]
        if a != 0 and b != 0:
            raise ValueError("the input spring must have one ground endpoint")

    @property
    def n(self) -> int:
        return len(self.masses)

    @property
    def q(self) -> int:
        """Parameter count: one per mass, spring, and damper."""
        return len(self.masses) + len(self.springs) + len(self.dampers)


def default_config() -> MsdConfig:
    """Benchmark nominals: graded masses, stiff chain, light damping."""
    return MsdConfig()


def load_config(path) -> MsdConfig:
    """Read an MsdConfig from a JSON model file."""
    with open(path, "r", encoding="utf-8") as fh:
        raw = json.load(fh)
    return config_from_dict(raw)


def config_from_dict(raw: dict) -> MsdConfig:
    """Build an MsdConfig from a parsed model description.

    Keys: ``masses`` (list), ``springs`` (list of {"ends": [a, b],
    "stiffness": v}), ``dampers`` (list of {"ends": [a, b], "coefficient": v}
    or {"mass": i, "coefficient": v} for a ground attachment),
    ``input_spring`` (1-based), ``delta``.
    """

    def element(entry, value_key):
        if "ends" in entry:
            a, b = entry["ends"]
        else:
            a, b = entry["mass"], 0
        return int(a), int(b), float(entry[value_key])

    return MsdConfig(
        masses=tuple(float(m) for m in raw["masses"]),
        springs=tuple(element(e, "stiffness") for e in raw["springs"]),
        dampers=tuple(element(e, "coefficient") for e in raw["dampers"]),
        input_spring=int(raw.get("input_spring", 1)),
        delta=float(raw.get("delta", 0.10)),
    )


def _incidence(n: int, a: int, b: int) -> np.ndarray:
    """Stiffness/damping pattern of one element between endpoints a and b."""
    e = np.zeros((n, n))
    for end in (a, b):
        if end > 0:
            e[end - 1, end - 1] += 1.0
    if a > 0 and b > 0:
        e[a - 1, b - 1] -= 1.0
        e[b - 1, a - 1] -= 1.0
    return e


def build_msd(cfg: MsdConfig) -> ParametricSecondOrderSystem:
    """Assemble the affine-parametric system of the configured network.

    Parameter order: masses, then springs, then dampers, each entering only
    its own matrix family.  The input vector is the nominal stiffness of the
    input spring times the unit vector of the mass it is attached to.
    """
    n, q = cfg.n, cfg.q
    zero = np.zeros((n, n))
    M_terms = [np.diag(np.asarray(cfg.masses, dtype=float))] + [zero] * q
    K_terms = [np.zeros((n, n))] + [zero] * q
    D_terms = [np.zeros((n, n))] + [zero] * q

    k = 1
    for i, m in enumerate(cfg.masses):
        M_terms[k] = cfg.delta * m * _incidence(n, i + 1, 0)
        k += 1
    for a, b, stiffness in cfg.springs:
        pattern = _incidence(n, a, b)
        K_terms[0] = K_terms[0] + stiffness * pattern
        K_terms[k] = cfg.delta * stiffness * pattern
        k += 1
    for a, b, coeff in cfg.dampers:
        pattern = _incidence(n, a, b)
        D_terms[0] = D_terms[0] + coeff * pattern
        D_terms[k] = cfg.delta * coeff * pattern
        k += 1

    a, b, stiffness = cfg.springs[cfg.input_spring - 1]
    driven_mass = a if a > 0 else b
    B = np.zeros((n, 1))
    B[driven_mass - 1, 0] = stiffness

    return ParametricSecondOrderSystem(
        M_terms=tuple(M_terms), D_terms=tuple(D_terms), K_terms=tuple(K_terms), B=B
    )


def corner_definiteness_check(
    sys: ParametricSecondOrderSystem,
    max_exhaustive_q: int = 20,
    samples: int = 4096,
    seed: int = 0,
) -> bool:
    """Check definiteness of M, D, K at the corners of the parameter box.

    The smallest eigenvalue of an affine symmetric matrix is concave in mu,
    so its minimum over the box is attained at a corner.  All 2^q corners are
    visited for q <= max_exhaustive_q; beyond that a seeded random sample of
    corners is used.  Returns True iff M and K stay positive definite and D
    stays above -1e-12.
    """
    q = sys.q
    if q <= max_exhaustive_q:
        corners = np.array(list(itertools.product((-1.0, 1.0), repeat=q)))
    else:
        rng = np.random.default_rng(seed)
        corners = rng.choice((-1.0, 1.0), size=(samples, q))

    def min_eig(terms):
        stack = np.stack(terms[1:])  # (q, n, n)
        mats = terms[0][None, :, :] + np.tensordot(corners, stack, axes=(1, 0))
        return np.linalg.eigvalsh(mats)[:, 0].min()

    return (
        min_eig(sys.M_terms) > 0.0
        and min_eig(sys.K_terms) > 0.0
        and min_eig(sys.D_terms) >= -1e-12
    )
