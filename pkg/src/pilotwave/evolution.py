"""Split-step spectral Schrödinger propagation and the measurement models built on it.

Units are hbar = 1 with an explicit mass. Boundaries are periodic, so every
run checks that essentially no probability reaches the grid edge.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Literal

import numpy as np

from .errors import (BoundaryMassError, ConfigError, GeometryError, GridMismatch,
                     PhaseWrapRisk, ZeroBranch)
from .wavefn import Density, Grid, WaveFunction, gaussian, normalize, overlap

BOUNDARY_FRACTION = 1.0 / 16.0
BOUNDARY_MASS_LIMIT = 1e-6
# |<Psi_1|Psi_2>| below this counts as decoherent for all practical purposes
FAPP_OVERLAP = 1e-10


@dataclass(frozen=True)
class Potential:
    kind: str = "zero"
    params: tuple = ()

    @classmethod
    def zero(cls) -> Potential:
        return cls("zero")

    @classmethod
    def harmonic(cls, omega: float = 1.0, center: float = 0.0) -> Potential:
        return cls("harmonic", (float(omega), float(center)))

    @classmethod
    def linear(cls, slope: float) -> Potential:
        return cls("linear", (float(slope),))

    @classmethod
    def slit_barrier(cls, height: float, separation: float, width: float,
                     open: str = "both") -> Potential:
        if not height > 0:
            raise ConfigError("slit barrier height must be positive")
        if open not in SLIT_CHOICES:
            raise ConfigError(f"open must be one of {SLIT_CHOICES}")
        return cls("slit_barrier", (float(height), float(separation), float(width), open))

    def on(self, grid: Grid) -> np.ndarray:
        x = grid.mesh()[0]
        if self.kind == "zero":
            v = np.zeros(grid.shape)
        elif self.kind == "harmonic":
            omega, c = self.params
            v = 0.5 * omega**2 * sum((m - c) ** 2 for m in grid.mesh())
        elif self.kind == "linear":
            (slope,) = self.params
            v = slope * x
        elif self.kind == "slit_barrier":
            height, sep, width, open_ = self.params
            v = np.full(grid.shape, height)
            for center in gap_centers(sep, open_):
                v[np.abs(x - center) <= 0.5 * width] = 0.0
        else:
            raise ConfigError(f"unknown potential kind {self.kind!r}")
        if not np.all(np.isfinite(v)):
            raise ConfigError("potential is not finite on the grid")
        return v


@dataclass(frozen=True)
class EvolutionSpec:
    dt: float
    steps: int
    mass: float = 1.0
    potential: Potential = field(default_factory=Potential.zero)

    def __post_init__(self):
        if not np.isfinite(self.dt) or self.dt == 0:
            raise ConfigError("dt must be finite and nonzero")
        if self.steps < 0:
            raise ConfigError("steps must be >= 0")
        if not self.mass > 0:
            raise ConfigError("mass must be positive")

    @property
    def duration(self) -> float:
        return self.dt * self.steps

    def reversed(self) -> EvolutionSpec:
        return EvolutionSpec(-self.dt, self.steps, self.mass, self.potential)


def boundary_mass(obj, fraction: float = BOUNDARY_FRACTION) -> float:
    """Probability held in the outer ``fraction`` of points at each end of every axis."""
    grid = obj.grid
    w = np.abs(obj.values) ** 2 if isinstance(obj, WaveFunction) else np.asarray(obj.weights)
    mask = np.zeros(grid.shape, dtype=bool)
    for ax, n in enumerate(grid.points):
        edge = max(1, int(n * fraction))
        sl = [slice(None)] * grid.ndim
        sl[ax] = np.r_[0:edge, n - edge:n]
        mask[tuple(sl)] = True
    return float(w[mask].sum() * grid.cell_volume)


def check_boundary(obj, limit: float = BOUNDARY_MASS_LIMIT) -> float:
    mass = boundary_mass(obj)
    if mass > limit:
        raise BoundaryMassError(f"boundary mass {mass:.3e} exceeds {limit:.0e}; enlarge the grid")
    return mass


def _kinetic_phase(grid: Grid, dt: float, mass: float) -> np.ndarray:
    k2 = sum(k**2 for k in np.meshgrid(*(grid.wavenumbers(i) for i in range(grid.ndim)),
                                        indexing="ij"))
    return np.exp(-0.5j * dt * k2 / mass)


def _validate(wf: WaveFunction, spec: EvolutionSpec) -> np.ndarray:
    if not wf.grid.is_spectral:
        raise GridMismatch(f"grid points {wf.grid.points} must be powers of two")
    v = spec.potential.on(wf.grid)
    vmax = float(np.max(np.abs(v)))
    if abs(spec.dt) * vmax >= np.pi:
        raise PhaseWrapRisk(f"|dt| * V_max = {abs(spec.dt) * vmax:.3g} >= pi")
    return v


def propagate(wf: WaveFunction, spec: EvolutionSpec, record_every: int = 0):
    """Yield ``(step, values)`` after every ``record_every`` Strang steps (and step 0).

    One step is half a kinetic kick in Fourier space, a full potential phase,
    then another half kick. Adjacent half kicks are fused.
    """
    v = _validate(wf, spec)
    grid = wf.grid
    half_k = _kinetic_phase(grid, 0.5 * spec.dt, spec.mass)
    full_k = half_k * half_k
    pot = np.exp(-1j * spec.dt * v)
    free = spec.potential.kind == "zero"
    psi = np.array(wf.values)
    if record_every:
        yield 0, psi.copy()
    if spec.steps == 0:
        return
    # chunk = steps between recordings (or all steps)
    chunk = record_every or spec.steps
    done = 0
    while done < spec.steps:
        n = min(chunk, spec.steps - done)
        spectrum = np.fft.fftn(psi) * half_k
        for i in range(n):
            if not free:
                spectrum = np.fft.fftn(pot * np.fft.ifftn(spectrum))
            spectrum *= full_k if i < n - 1 else half_k
        psi = np.fft.ifftn(spectrum)
        done += n
        if record_every:
            yield done, psi.copy()
    if not record_every:
        yield done, psi


def evolve(wf: WaveFunction, spec: EvolutionSpec, *, guard: bool = True) -> WaveFunction:
    values = wf.values
    for _, values in propagate(wf, spec):
        pass
    out = WaveFunction(wf.grid, values)
    if guard:
        check_boundary(out)
    return out


def evolve_snapshots(wf: WaveFunction, spec: EvolutionSpec, record_every: int = 1,
                     *, guard: bool = True) -> list[WaveFunction]:
    """States at t = 0, record_every*dt, ... ; ``steps`` must be a multiple of ``record_every``."""
    if record_every < 1 or spec.steps % record_every:
        raise ConfigError("steps must be a positive multiple of record_every")
    snaps = [WaveFunction(wf.grid, v) for _, v in propagate(wf, spec, record_every)]
    if guard:
        for s in snaps:
            check_boundary(s)
    return snaps


# --- von Neumann pointer measurement ---------------------------------------

@dataclass(frozen=True)
class SpinorField:
    """c1|1> x up(y) + c2|2> x down(y); the coefficients are folded into the components."""

    up: WaveFunction
    down: WaveFunction

    def __post_init__(self):
        if self.up.grid != self.down.grid:
            raise GridMismatch("spinor components must share a grid")

    @property
    def grid(self) -> Grid:
        return self.up.grid

    def branch_masses(self) -> tuple[float, float]:
        return self.up.norm_squared(), self.down.norm_squared()

    def norm_squared(self) -> float:
        return sum(self.branch_masses())

    def density(self) -> Density:
        w = np.abs(self.up.values) ** 2 + np.abs(self.down.values) ** 2
        return Density(self.grid, w)


def _translate(pointer: WaveFunction, shift: float, duration: float, mass: float | None):
    grid = pointer.grid
    k = grid.wavenumbers(0)
    phase = np.exp(-1j * k * shift)
    if mass is not None:
        phase = phase * np.exp(-0.5j * duration * k**2 / mass)
    return np.fft.ifft(np.fft.fft(pointer.values) * phase)


def pointer_state(c1: complex, c2: complex, pointer0: WaveFunction, coupling: float,
                  t: float, mass: float | None = None) -> SpinorField:
    """Coupled state at time ``t`` under H = coupling * sigma_z * p (+ p^2/2m if ``mass``).

    The interaction term is the generator of translations, so branch 1 moves
    rigidly by +coupling*t and branch 2 by -coupling*t. With ``mass=None`` the
    interaction is impulsive and the free pointer Hamiltonian is neglected.
    """
    if pointer0.grid.ndim != 1 or not pointer0.grid.is_spectral:
        raise GridMismatch("pointer lives on a 1D power-of-two grid")
    up = _translate(pointer0, coupling * t, t, mass)
    down = _translate(pointer0, -coupling * t, t, mass)
    return SpinorField(WaveFunction(pointer0.grid, c1 * up), WaveFunction(pointer0.grid, c2 * down))


def pointer_measure(c1: complex, c2: complex, pointer0: WaveFunction, coupling: float,
                    duration: float, mass: float | None = None, *,
                    guard: bool = True) -> SpinorField:
    """Evolve (c1 phi_1 + c2 phi_2) Psi_0 into c1 phi_1 Psi_1 + c2 phi_2 Psi_2."""
    if abs(abs(c1) ** 2 + abs(c2) ** 2 - 1.0) > 1e-9:
        raise ConfigError("|c1|^2 + |c2|^2 must equal 1")
    if abs(pointer0.norm_squared() - 1.0) > 1e-9:
        raise ConfigError("ready-state pointer must be normalized")
    sf = pointer_state(c1, c2, pointer0, coupling, duration, mass)
    if guard:
        check_boundary(sf.density())
    return sf


def decoherence_overlap(sf: SpinorField) -> float:
    """|<Psi_1|Psi_2>| of the normalized branches; 0 means fully decohered."""
    n_up, n_down = sf.up.norm(), sf.down.norm()
    if n_up < 1e-15 or n_down < 1e-15:
        raise ZeroBranch("a branch is empty; overlap is not applicable")
    return abs(overlap(sf.up, sf.down)) / (n_up * n_down)


# --- double slit ------------------------------------------------------------

SLIT_CHOICES = ("slit1", "slit2", "both")
SlitChoice = Literal["slit1", "slit2", "both"]


def gap_centers(separation: float, open: str) -> list[float]:
    """Slit 1 is the upper gap (+separation/2), slit 2 the lower one."""
    return {"slit1": [0.5 * separation], "slit2": [-0.5 * separation],
            "both": [0.5 * separation, -0.5 * separation]}[open]


@dataclass(frozen=True)
class SlitConfig:
    open: SlitChoice = "both"
    separation: float = 4.0
    width: float = 0.5
    forward_momentum: float = 10.0

    def __post_init__(self):
        if self.open not in SLIT_CHOICES:
            raise ConfigError(f"open must be one of {SLIT_CHOICES}")
        if not self.separation > self.width > 0:
            raise GeometryError("need separation > width > 0")

    @property
    def packet_sigma(self) -> float:
        return 0.5 * self.width

    def screen_distance(self, t: float, mass: float = 1.0) -> float:
        """Longitudinal flight distance folded into the transverse evolution time."""
        return self.forward_momentum * t / mass


def slit_packets(grid: Grid, cfg: SlitConfig) -> np.ndarray:
    if grid.ndim != 1:
        raise GeometryError("double slit runs on a 1D transverse grid")
    reach = 0.5 * cfg.separation + 4 * cfg.width
    if -reach < grid.lower[0] or reach > grid.upper[0]:
        raise GeometryError(f"slits at +/-{0.5 * cfg.separation} do not fit inside the grid")
    psi = sum(gaussian(grid, c, cfg.packet_sigma) for c in gap_centers(cfg.separation, cfg.open))
    return psi


def prepare_double_slit(grid: Grid, slit_config: SlitConfig, evolve_spec: EvolutionSpec,
                        *, guard: bool = True) -> WaveFunction:
    """Post-slit wavefunction at the screen time ``evolve_spec.duration``.

    Gaussian packets (sigma = width/2, no transverse momentum) start on each
    open gap and fly freely; the forward momentum only sets the screen
    distance.
    """
    psi0 = normalize(WaveFunction(grid, slit_packets(grid, slit_config)))
    return evolve(psi0, evolve_spec, guard=guard)


@dataclass(frozen=True)
class InterferenceDecomposition:
    sum_density: Density
    no_interference_density: Density
    cross_term: np.ndarray
    raw_sum: np.ndarray
    raw_parts: np.ndarray

    def identity_residual(self) -> float:
        """max |(|psi1+psi2|^2) - (|psi1|^2 + |psi2|^2 + 2 Re psi1* psi2)|."""
        return float(np.max(np.abs(self.raw_sum - (self.raw_parts + self.cross_term))))

    def interference_strength(self) -> float:
        """Peak |cross term| relative to the peak of |psi1+psi2|^2."""
        return float(np.max(np.abs(self.cross_term)) / np.max(self.raw_sum))


def interference_decomposition(psi1: WaveFunction, psi2: WaveFunction) -> InterferenceDecomposition:
    if psi1.grid != psi2.grid:
        raise GridMismatch("psi1 and psi2 live on different grids")
    grid = psi1.grid
    a, b = psi1.values, psi2.values
    raw_sum = np.abs(a + b) ** 2
    raw_parts = np.abs(a) ** 2 + np.abs(b) ** 2
    cross = 2.0 * (a.conj() * b).real
    s = raw_sum.sum() * grid.cell_volume
    p = raw_parts.sum() * grid.cell_volume
    if not s > 0:
        raise ConfigError("psi1 + psi2 has zero norm")
    return InterferenceDecomposition(
        sum_density=Density(grid, raw_sum / s, check=False),
        no_interference_density=Density(grid, raw_parts / p, check=False),
        cross_term=cross,
        raw_sum=raw_sum,
        raw_parts=raw_parts,
    )
