"""Bell's inequality for three coplanar directions.

Local hidden variables are pre-existing values X_a, X_b, X_c in {-1, +1} for
the left particle, with the right particle's values fixed to their
negatives. Any stochastic local model is a mixture of the 8 deterministic
tables, so the minimum over those tables bounds every mixture.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError
from .rng import derive_seed
from .spin import (MeasurementAxis, TwoQubitState, anticorrelation_probability,
                   sample_sequential_measurement)

PAIRS = (("a", "b"), ("b", "c"), ("c", "a"))
LHV_BOUND = 1.0


@dataclass(frozen=True)
class LhvAssignment:
    x_a: int
    x_b: int
    x_c: int

    def __post_init__(self):
        if any(v not in (-1, 1) for v in self.left):
            raise ConfigError("pre-existing values must be -1 or +1")

    @property
    def left(self) -> tuple[int, int, int]:
        return self.x_a, self.x_b, self.x_c

    @property
    def right(self) -> tuple[int, int, int]:
        return -self.x_a, -self.x_b, -self.x_c

    def value(self, side: str, direction: str) -> int:
        vals = self.left if side == "L" else self.right
        return vals["abc".index(direction)]

    def anticorrelation_events(self) -> tuple[bool, bool, bool]:
        """X_y^(L) = -X_z^(R) for (y, z) in (a, b), (b, c), (c, a)."""
        return tuple(self.value("L", y) == -self.value("R", z) for y, z in PAIRS)

    def bell_sum(self) -> int:
        return sum(self.anticorrelation_events())


ASSIGNMENTS = tuple(LhvAssignment(*v) for v in itertools.product((1, -1), repeat=3))


@dataclass(frozen=True)
class LhvMixture:
    weights: tuple[float, ...]

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=float)
        if w.shape != (8,) or np.any(w < 0) or abs(w.sum() - 1.0) > 1e-12:
            raise ConfigError("need 8 nonnegative weights summing to 1")
        object.__setattr__(self, "weights", tuple(float(v) for v in w))

    @classmethod
    def point(cls, assignment: LhvAssignment) -> LhvMixture:
        w = [0.0] * 8
        w[ASSIGNMENTS.index(assignment)] = 1.0
        return cls(tuple(w))

    @classmethod
    def uniform(cls) -> LhvMixture:
        return cls((0.125,) * 8)

    @classmethod
    def random(cls, rng: np.random.Generator) -> LhvMixture:
        w = rng.dirichlet(np.ones(8))
        return cls(tuple(w / w.sum()))


def bell_sum_lhv(mix: LhvMixture) -> float:
    """Mixture-weighted sum of the three anticorrelation-event indicators."""
    return float(sum(w * s.bell_sum() for w, s in zip(mix.weights, ASSIGNMENTS)))


@dataclass(frozen=True)
class BellCertificate:
    min_sum: float
    witness: LhvAssignment
    sums: tuple[int, ...]


def bell_bound_certificate() -> BellCertificate:
    sums = tuple(s.bell_sum() for s in ASSIGNMENTS)
    k = int(np.argmin(sums))
    return BellCertificate(float(sums[k]), ASSIGNMENTS[k], sums)


@dataclass(frozen=True)
class AngleTriple:
    a: float
    b: float
    c: float

    def __post_init__(self):
        for name in "abc":
            object.__setattr__(self, name, MeasurementAxis(getattr(self, name)).theta)

    @classmethod
    def degrees(cls, a, b, c) -> AngleTriple:
        return cls(*np.deg2rad([a, b, c]))

    def axis(self, name: str) -> MeasurementAxis:
        return MeasurementAxis(getattr(self, name))


def pair_probabilities(angles: AngleTriple) -> tuple[float, float, float]:
    """Singlet P(opposite outcomes) for the pairs (a,b), (b,c), (c,a)."""
    singlet = TwoQubitState.singlet()
    return tuple(anticorrelation_probability(singlet, angles.axis(y), angles.axis(z))
                 for y, z in PAIRS)


def bell_sum_quantum(angles: AngleTriple) -> float:
    return float(sum(pair_probabilities(angles)))


@dataclass(frozen=True)
class BellReport:
    lhv_bound: float
    witness: tuple[int, int, int]
    quantum_sum_analytic: float
    quantum_sum_mc: float
    mc_sigma: float
    verdict: str
    angles: tuple[float, float, float]
    n: int
    seed: int
    pair_counts: tuple[dict, ...]

    @property
    def violation(self) -> bool:
        return self.verdict == "VIOLATION"

    def to_json_dict(self) -> dict:
        return {
            "lhv_bound": self.lhv_bound,
            "witness": list(self.witness),
            "quantum_sum_analytic": self.quantum_sum_analytic,
            "quantum_sum_mc": self.quantum_sum_mc,
            "mc_sigma": self.mc_sigma,
            "verdict": self.verdict,
        }


def nonlocality_demonstration(angles: AngleTriple, n: int, seed: int) -> BellReport:
    """LHV bound, analytic and Monte Carlo quantum sums, and a 3-sigma verdict.

    VIOLATION is declared only when the Monte Carlo sum plus three standard
    errors stays below the LHV bound.
    """
    if n < 1:
        raise ConfigError("n must be >= 1")
    cert = bell_bound_certificate()
    singlet = TwoQubitState.singlet()
    estimate, var, counts = 0.0, 0.0, []
    for k, (y, z) in enumerate(PAIRS):
        cnt = sample_sequential_measurement(singlet, angles.axis(y), angles.axis(z), n,
                                            derive_seed(seed, k))
        p = (cnt["ij"] + cnt["ji"]) / n
        estimate += p
        var += p * (1.0 - p) / n
        counts.append(cnt)
    sigma = float(np.sqrt(var))
    verdict = "VIOLATION" if estimate + 3.0 * sigma < cert.min_sum else "NO-VIOLATION"
    return BellReport(cert.min_sum, cert.witness.left, bell_sum_quantum(angles), float(estimate),
                      sigma, verdict, (angles.a, angles.b, angles.c), n, seed, tuple(counts))
