"""Two-qubit Stern-Gerlach algebra: basis rotation, collapse, and the no-signaling identity.

States are a|up,down> + b|down,up> + c|down,down> + d|up,up> (left qubit
first). Measurement axes lie in one plane and are given by their angle
``theta`` from the z axis. The left-qubit basis along such an axis is

    i = cos(g)|up> - sin(g)|down>,   j = sin(g)|up> + cos(g)|down>,   g = theta / 2

so that |up> = i cos g + j sin g and |down> = -i sin g + j cos g. Outcome
``i`` is "spin up along the axis", ``j`` is "spin down". A right-qubit state
is a length-2 complex array ``[up, down]``.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Literal

import numpy as np

from .errors import ConfigError, ImpossibleOutcome
from .rng import stream

TWO_PI = 2.0 * np.pi
IMPOSSIBLE = 1e-15
CELLS = ("ii", "ij", "ji", "jj")
Outcome = Literal["i", "j"]


@dataclass(frozen=True)
class TwoQubitState:
    a: complex
    b: complex
    c: complex
    d: complex

    def __post_init__(self):
        for name in "abcd":
            object.__setattr__(self, name, complex(getattr(self, name)))
        n2 = self.norm_squared()
        if abs(n2 - 1.0) > 1e-12:
            raise ConfigError(f"|a|^2+|b|^2+|c|^2+|d|^2 = {n2!r}, expected 1")

    def norm_squared(self) -> float:
        return sum(abs(z) ** 2 for z in self.amplitudes)

    @property
    def amplitudes(self) -> tuple[complex, complex, complex, complex]:
        return self.a, self.b, self.c, self.d

    @classmethod
    def normalized(cls, a, b, c, d) -> TwoQubitState:
        v = np.array([a, b, c, d], dtype=complex)
        return cls(*(v / np.linalg.norm(v)))

    @classmethod
    def singlet(cls) -> TwoQubitState:
        r = np.sqrt(0.5)
        return cls(r, -r, 0, 0)

    @classmethod
    def product(cls, left, right) -> TwoQubitState:
        """Product of a left and a right ``[up, down]`` state (each normalized)."""
        lu, ld = np.asarray(left, dtype=complex) / np.linalg.norm(left)
        ru, rd = np.asarray(right, dtype=complex) / np.linalg.norm(right)
        return cls(lu * rd, ld * ru, ld * rd, lu * ru)

    @classmethod
    def random(cls, rng: np.random.Generator) -> TwoQubitState:
        """Haar-random pure state."""
        v = rng.standard_normal(4) + 1j * rng.standard_normal(4)
        return cls.normalized(*v)


@dataclass(frozen=True)
class MeasurementAxis:
    """Planar direction at ``theta`` radians from z, canonicalized to [0, 2 pi)."""

    theta: float

    def __post_init__(self):
        if not np.isfinite(self.theta):
            raise ConfigError("axis angle must be finite")
        object.__setattr__(self, "theta", float(self.theta) % TWO_PI)

    @classmethod
    def degrees(cls, deg: float) -> MeasurementAxis:
        return cls(np.deg2rad(deg))

    @property
    def gamma(self) -> float:
        """Basis mixing angle entering cos/sin in the branch formulas."""
        return 0.5 * self.theta


def _gamma(axis) -> float:
    return axis.gamma if isinstance(axis, MeasurementAxis) else float(axis)


def _branches(a, b, c, d, g):
    """i- and j-branch amplitudes over [up, down] of the right qubit (broadcasting)."""
    cg, sg = np.cos(g), np.sin(g)
    i_up = cg * d - sg * b
    i_down = cg * a - sg * c
    j_up = sg * d + cg * b
    j_down = sg * a + cg * c
    return i_up, i_down, j_up, j_down


@dataclass(frozen=True)
class BranchDecomposition:
    i_branch: np.ndarray
    j_branch: np.ndarray

    @property
    def weights(self) -> tuple[float, float]:
        return (float(np.sum(np.abs(self.i_branch) ** 2)),
                float(np.sum(np.abs(self.j_branch) ** 2)))


def rotate_left_basis(state: TwoQubitState, axis) -> BranchDecomposition:
    """Rewrite ``state`` as i_1 (x) psi_i + j_1 (x) psi_j along ``axis``.

    ``axis`` is a :class:`MeasurementAxis` or a bare mixing angle ``g``.
    """
    i_up, i_down, j_up, j_down = _branches(*state.amplitudes, _gamma(axis))
    return BranchDecomposition(np.array([i_up, i_down]), np.array([j_up, j_down]))


def rotate_left_state(state: TwoQubitState, axis) -> TwoQubitState:
    """Express the left qubit in the rotated basis, relabelling i -> up, j -> down."""
    i_up, i_down, j_up, j_down = _branches(*state.amplitudes, _gamma(axis))
    return TwoQubitState(a=i_down, b=j_up, c=j_down, d=i_up)


def collapse(decomp: BranchDecomposition, outcome: Outcome) -> np.ndarray:
    """Normalized right-qubit state left behind by ``outcome`` on the left."""
    if outcome not in ("i", "j"):
        raise ConfigError("outcome must be 'i' or 'j'")
    branch = decomp.i_branch if outcome == "i" else decomp.j_branch
    w = decomp.weights[0 if outcome == "i" else 1]
    if w <= IMPOSSIBLE:
        raise ImpossibleOutcome(f"outcome {outcome!r} has weight {w:.3e}")
    return branch / np.sqrt(w)


def right_outcome_probabilities(right, axis) -> tuple[float, float]:
    """P(i), P(j) for a right-qubit state measured along ``axis``."""
    up, down = np.asarray(right, dtype=complex)
    g = _gamma(axis)
    amp_i = np.cos(g) * up - np.sin(g) * down
    amp_j = np.sin(g) * up + np.cos(g) * down
    return float(abs(amp_i) ** 2), float(abs(amp_j) ** 2)


def marginal_up_right(state: TwoQubitState) -> float:
    return abs(state.b) ** 2 + abs(state.d) ** 2


@dataclass(frozen=True)
class NoSignalingAudit:
    post_measurement_marginal: float
    unmeasured_marginal: float
    discrepancy: float


def _post_measurement_up(a, b, c, d, g):
    # sum over left outcomes of weight * P(up_2 | collapse); an empty branch adds 0
    i_up, i_down, j_up, j_down = _branches(a, b, c, d, g)
    total = 0.0
    for up, down in ((i_up, i_down), (j_up, j_down)):
        w = np.abs(up) ** 2 + np.abs(down) ** 2
        live = w > IMPOSSIBLE
        cond = np.where(live, np.abs(up) ** 2 / np.where(live, w, 1.0), 0.0)
        total = total + np.where(live, w, 0.0) * cond
    return total


def no_signaling_audit(state: TwoQubitState, axis) -> NoSignalingAudit:
    post = float(_post_measurement_up(*state.amplitudes, _gamma(axis)))
    marg = marginal_up_right(state)
    return NoSignalingAudit(post, marg, abs(post - marg))


def no_signaling_sweep(amplitudes, axes) -> np.ndarray:
    """Discrepancies for every (state, axis) pair; ``amplitudes`` is (m, 4)."""
    amps = np.asarray(amplitudes, dtype=complex)
    g = np.array([_gamma(ax) for ax in axes])[None, :]
    a, b, c, d = (amps[:, k:k + 1] for k in range(4))
    post = _post_measurement_up(a, b, c, d, g)
    return np.abs(post - (np.abs(b) ** 2 + np.abs(d) ** 2))


def cell_probabilities(state: TwoQubitState, left_axis, right_axis) -> dict[str, float]:
    """Exact P(left outcome, right outcome) from branch weights and collapse."""
    decomp = rotate_left_basis(state, left_axis)
    out = {}
    for lo, w in zip("ij", decomp.weights):
        if w <= IMPOSSIBLE:
            pr = (0.0, 0.0)
        else:
            pr = right_outcome_probabilities(collapse(decomp, lo), right_axis)
        out[lo + "i"] = w * pr[0]
        out[lo + "j"] = w * pr[1]
    return out


def anticorrelation_probability(state: TwoQubitState, left_axis, right_axis) -> float:
    """P(opposite outcomes) = P(ij) + P(ji)."""
    p = cell_probabilities(state, left_axis, right_axis)
    return p["ij"] + p["ji"]


def sample_sequential_measurement(state: TwoQubitState, left_axis, right_axis, n: int,
                                  seed: int) -> dict[str, int]:
    """Monte Carlo left-then-right measurement; returns counts for ii, ij, ji, jj."""
    if n < 1:
        raise ConfigError("n must be >= 1")
    rng = stream(seed)
    decomp = rotate_left_basis(state, left_axis)
    w_i, _ = decomp.weights
    left_j = rng.random(n) >= w_i
    cond_i = np.empty(2)
    for k, lo in enumerate("ij"):
        w = decomp.weights[k]
        cond_i[k] = (right_outcome_probabilities(collapse(decomp, lo), right_axis)[0]
                     if w > IMPOSSIBLE else 0.0)
    right_j = rng.random(n) >= cond_i[left_j.astype(int)]
    cell = 2 * left_j.astype(int) + right_j.astype(int)
    counts = np.bincount(cell, minlength=4)
    return {name: int(cnt) for name, cnt in zip(CELLS, counts)}
