"""Bohmian trajectories: the guidance equation on stored wavefunction snapshots.

Particle velocities are (1/m) Im(grad psi / psi) (hbar = 1), evaluated from
spectrally differentiated snapshots. psi and grad psi are interpolated
separately (bilinear in space, linear in time) before the quotient is formed.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
from scipy import stats

from . import kernels
from .errors import ConfigError, InsufficientEnsemble, NearNode, NodeEncounter
from .evolution import (EvolutionSpec, SlitConfig, SpinorField, evolve_snapshots,
                        pointer_state, slit_packets)
from .wavefn import Density, Grid, WaveFunction, normalize, sample_positions, write_columns

NODE_THRESHOLD = 1e-12
MAX_HALVINGS = 20
MIN_UNFLAGGED = 0.99


def ks_threshold(n: int) -> float:
    return 1.95 / np.sqrt(n)


@dataclass(frozen=True, eq=False)
class GuidanceField:
    """Wavefunction snapshots at t0, t0 + dt, ... plus the constants of the guidance law.

    ``snapshots`` has shape (K, C, *grid.shape); C > 1 for multi-component
    states such as the pointer spinor, whose components may also carry a
    constant ``drift`` velocity (C, D).
    """

    grid: Grid
    snapshots: np.ndarray
    dt: float = 1.0
    t0: float = 0.0
    masses: tuple[float, ...] = (1.0,)
    drift: np.ndarray | None = None
    velocity_scale: float = 1.0

    def __post_init__(self):
        snaps = np.asarray(self.snapshots, dtype=np.complex128)
        if snaps.shape[2:] != self.grid.shape:
            raise ConfigError("snapshot shape does not match the grid")
        if snaps.shape[0] > 1 and not self.dt > 0:
            raise ConfigError("snapshot spacing must be positive")
        masses = tuple(float(m) for m in np.broadcast_to(self.masses, (self.grid.ndim,)))
        norms = np.sum(np.abs(snaps) ** 2, axis=tuple(range(1, snaps.ndim))) * self.grid.cell_volume
        if np.any(np.abs(norms - 1.0) > 1e-8):
            raise ConfigError(f"snapshots must be normalized (worst {norms.max():.12g})")
        drift = np.zeros((snaps.shape[1], self.grid.ndim)) if self.drift is None else np.asarray(
            self.drift, dtype=float).reshape(snaps.shape[1], self.grid.ndim)
        object.__setattr__(self, "snapshots", snaps)
        object.__setattr__(self, "masses", masses)
        object.__setattr__(self, "drift", drift)

    # -- constructors --------------------------------------------------------

    @classmethod
    def static(cls, wf: WaveFunction, mass=1.0) -> GuidanceField:
        return cls(wf.grid, wf.values[None, None], masses=mass)

    @classmethod
    def from_wavefunctions(cls, snaps: list[WaveFunction], dt: float, mass=1.0,
                           t0: float = 0.0) -> GuidanceField:
        grid = snaps[0].grid
        return cls(grid, np.stack([s.values for s in snaps])[:, None], dt=dt, t0=t0, masses=mass)

    @classmethod
    def evolved(cls, wf: WaveFunction, spec: EvolutionSpec, record_every: int = 1) -> GuidanceField:
        snaps = evolve_snapshots(wf, spec, record_every)
        return cls.from_wavefunctions(snaps, spec.dt * record_every, spec.mass)

    @classmethod
    def from_spinors(cls, snaps: list[SpinorField], dt: float, coupling: float,
                     mass: float | None = None) -> GuidanceField:
        """Pointer field for H = coupling * sigma_z * p (+ p^2 / 2m)."""
        vals = np.stack([[s.up.values, s.down.values] for s in snaps])
        m = np.inf if mass is None else mass
        return cls(snaps[0].grid, vals, dt=dt, masses=m, drift=[[coupling], [-coupling]])

    # -- accessors -------------------------------------------------------------

    @property
    def n_snapshots(self) -> int:
        return self.snapshots.shape[0]

    @property
    def t_end(self) -> float:
        return self.t0 + self.dt * (self.n_snapshots - 1)

    @property
    def times(self) -> np.ndarray:
        return self.t0 + self.dt * np.arange(self.n_snapshots)

    def scaled(self, factor: float) -> GuidanceField:
        """Same field with every velocity multiplied by ``factor`` (negative controls)."""
        return GuidanceField(self.grid, self.snapshots, self.dt, self.t0, self.masses,
                             self.drift, self.velocity_scale * factor)

    def density_at(self, t: float) -> Density:
        """|psi_t|^2, linearly interpolating amplitudes between snapshots."""
        if not self.t0 - 1e-12 <= t <= self.t_end + 1e-12:
            raise ConfigError(f"t={t} outside the snapshot range [{self.t0}, {self.t_end}]")
        if self.n_snapshots == 1:
            vals = self.snapshots[0]
        else:
            s = (t - self.t0) / self.dt
            k = int(np.clip(np.floor(s + 1e-9), 0, self.n_snapshots - 2))
            w = float(np.clip(s - k, 0.0, 1.0))
            vals = (1 - w) * self.snapshots[k] + w * self.snapshots[k + 1]
        w = np.sum(np.abs(vals) ** 2, axis=0)
        return Density(self.grid, w / (w.sum() * self.grid.cell_volume), check=False)

    @cached_property
    def kernel_data(self) -> dict:
        g = self.grid
        K, C = self.snapshots.shape[:2]
        D = g.ndim
        spectrum = np.fft.fftn(self.snapshots, axes=tuple(range(2, 2 + D)))
        grads = []
        for ax in range(D):
            shape = [1] * (2 + D)
            shape[2 + ax] = g.points[ax]
            ik = 1j * g.wavenumbers(ax).reshape(shape)
            grads.append(np.fft.ifftn(ik * spectrum, axes=tuple(range(2, 2 + D))))
        grad = np.stack(grads, axis=2)
        psi = self.snapshots
        if D == 1:
            psi = psi[..., None]
            grad = grad[..., None]
        amp = np.sqrt(np.max(np.sum(np.abs(self.snapshots) ** 2, axis=1).reshape(K, -1), axis=1))
        inv_mass = np.array([0.0 if np.isinf(m) else 1.0 / m for m in self.masses] + [0.0] * (2 - D))
        origin = list(g.lower) + [0.0] * (2 - D)
        spacing = list(g.spacing) + [1.0] * (2 - D)
        return {
            "psi": np.ascontiguousarray(psi),
            "grad": np.ascontiguousarray(grad),
            "amp": amp,
            "drift": np.ascontiguousarray(self.drift * self.velocity_scale),
            "inv_mass": inv_mass * self.velocity_scale,
            "origin": (float(origin[0]), float(origin[1])),
            "spacing": (float(spacing[0]), float(spacing[1])),
            "t0": float(self.t0),
            "snap_dt": float(self.dt),
            "node_rel": NODE_THRESHOLD,
        }

    def velocities(self, points, t: float = None, backend=None):
        """Velocity and node mask at many points ``(m, D)``."""
        X = np.asarray(points, dtype=float).reshape(-1, self.grid.ndim)
        return kernels.velocity(self.kernel_data, X, self.t0 if t is None else t, backend)


def velocity(wf: WaveFunction, x, mass=1.0) -> np.ndarray:
    """Guidance velocity (1/m) Im(grad psi / psi) at position ``x``.

    Raises :class:`NearNode` where |psi(x)| < 1e-12 max|psi|.
    """
    x = np.asarray(x, dtype=float).reshape(wf.grid.ndim)
    if not wf.grid.contains(x):
        raise ConfigError(f"position {x} lies outside the grid")
    v, ok = GuidanceField.static(wf, mass).velocities(x[None, :])
    if not ok[0]:
        raise NearNode(f"|psi| below the node threshold at {x}")
    return v[0]


@dataclass(frozen=True, eq=False)
class TrajectoryEnsemble:
    positions: np.ndarray           # (n, T, D)
    times: np.ndarray               # (T,)
    flagged: np.ndarray             # (n,) bool, node encounters
    dt: float
    seed: int | None = None

    @property
    def n(self) -> int:
        return self.positions.shape[0]

    @property
    def n_flagged(self) -> int:
        return int(self.flagged.sum())

    def endpoints(self, include_flagged: bool = False) -> np.ndarray:
        end = self.positions[:, -1]
        end = end if include_flagged else end[~self.flagged]
        return end[:, 0] if end.shape[1] == 1 else end

    def to_csv(self, path=None) -> str:
        n, T, D = self.positions.shape
        ids = np.repeat(np.arange(n), T)
        ts = np.tile(self.times, n)
        cols = [ids, ts] + [self.positions[:, :, d].ravel() for d in range(D)]
        return write_columns(["traj_id", "t", "x", "y"][: 2 + D], cols, path)


def integrate_ensemble(field: GuidanceField, initial, dt: float | None = None, *,
                       t_end: float | None = None, record_every: int | None = None,
                       seed: int | None = None, strict: bool = False,
                       backend: str | None = None) -> TrajectoryEnsemble:
    """Integrate the guidance ODE with classical RK4 from ``field.t0``.

    ``dt`` must divide the snapshot spacing. Positions are recorded at every
    snapshot time unless ``record_every`` (in RK4 steps) is given. A
    trajectory that still hits a node after 20 step halvings is flagged and
    frozen; with ``strict`` a :class:`NodeEncounter` is raised instead.
    """
    X0 = np.asarray(initial, dtype=float).reshape(-1, field.grid.ndim)
    lo, hi = np.asarray(field.grid.lower), np.asarray(field.grid.upper)
    h = np.asarray(field.grid.spacing)
    if np.any(X0 < lo - 0.5 * h) or np.any(X0 > hi):
        raise ConfigError("initial positions must lie inside the grid")
    t_end = field.t_end if t_end is None else t_end
    span = t_end - field.t0
    if field.n_snapshots > 1:
        dt = field.dt if dt is None else dt
        ratio = field.dt / dt
        if abs(ratio - round(ratio)) > 1e-9 or round(ratio) < 1:
            raise ConfigError("dt must divide the snapshot spacing")
        per_snap = int(round(ratio))
        if t_end > field.t_end + 1e-12:
            raise ConfigError("t_end beyond the last snapshot")
    else:
        if dt is None:
            raise ConfigError("dt is required for a static field")
        per_snap = 1
    n_steps = int(round(span / dt))
    if abs(n_steps * dt - span) > 1e-9 * max(1.0, abs(span)):
        raise ConfigError("dt must divide the integration span")
    rec = per_snap if record_every is None else record_every
    if n_steps % rec:
        rec = 1 if n_steps == 0 else np.gcd(n_steps, rec)
    rec = max(int(rec), 1)
    pos, flags = kernels.transport(field.kernel_data, X0, field.t0, dt, n_steps, rec,
                                   MAX_HALVINGS, backend)
    flagged = flags.astype(bool)
    if strict and flagged.any():
        raise NodeEncounter(f"{int(flagged.sum())} trajectories hit a node")
    times = field.t0 + dt * rec * np.arange(pos.shape[1])
    return TrajectoryEnsemble(pos, times, flagged, dt, seed)


@dataclass(frozen=True)
class EquivarianceResult:
    ks_statistic: float
    threshold: float
    passed: bool
    n_used: int
    n_flagged: int
    marginal_statistics: tuple[float, ...] = ()


def _ks(samples: np.ndarray, cdf) -> float:
    return float(stats.kstest(samples, cdf).statistic)


def equivariance_check(field: GuidanceField, n: int, seed: int, t_check: float,
                       dt: float | None = None, *, reference_cdf=None,
                       backend: str | None = None,
                       ensemble_out: list | None = None) -> EquivarianceResult:
    """Sample |psi_0|^2, transport to ``t_check``, KS-compare with |psi_t|^2.

    In 2D each marginal is tested and the largest statistic is reported.
    ``reference_cdf`` replaces the grid CDF of |psi_t|^2 (1D only), e.g.
    with an analytic one.
    """
    x0 = sample_positions(field.density_at(field.t0), n, seed)
    ens = integrate_ensemble(field, x0, dt, t_end=t_check, seed=seed, backend=backend)
    if ensemble_out is not None:
        ensemble_out.append(ens)
    used = n - ens.n_flagged
    if used < MIN_UNFLAGGED * n:
        raise InsufficientEnsemble(f"only {used}/{n} trajectories unflagged")
    end = ens.endpoints()
    thr = ks_threshold(used)
    if field.grid.ndim == 1:
        cdf = reference_cdf or field.density_at(t_check).cdf
        stat = _ks(end, cdf)
        marg = (stat,)
    else:
        dens = field.density_at(t_check)
        marg = tuple(_ks(end[:, ax], dens.marginal(ax).cdf) for ax in range(2))
        stat = max(marg)
    return EquivarianceResult(stat, thr, bool(stat < thr), used, ens.n_flagged, marg)


@dataclass(frozen=True)
class NonlocalityProbe:
    v1_given_a: float
    v1_given_b: float
    delta: float


def two_particle_nonlocality_probe(entangled: WaveFunction, x1: float, x2a: float, x2b: float,
                                   mass: float = 1.0) -> NonlocalityProbe:
    """Velocity of particle 1 at ``x1`` with particle 2 held at ``x2a`` versus ``x2b``."""
    if entangled.grid.ndim != 2:
        raise ConfigError("the two-particle probe needs a 2D configuration grid")
    va = velocity(entangled, (x1, x2a), (mass, mass))[0]
    vb = velocity(entangled, (x1, x2b), (mass, mass))[0]
    return NonlocalityProbe(float(va), float(vb), float(abs(va - vb)))


# --- scripted experiments -----------------------------------------------------

@dataclass(frozen=True, eq=False)
class DoubleSlitRun:
    field: GuidanceField
    config: SlitConfig


def double_slit_run(grid: Grid, config: SlitConfig, spec: EvolutionSpec,
                    record_every: int = 1) -> DoubleSlitRun:
    """Guidance field of the both-slits state from the slit plane to the screen."""
    if config.open != "both":
        raise ConfigError("trajectory runs need both slits open")
    psi0 = normalize(WaveFunction(grid, slit_packets(grid, config)))
    return DoubleSlitRun(GuidanceField.evolved(psi0, spec, record_every), config)


@dataclass(frozen=True, eq=False)
class DoubleSlitTrajectories:
    ensemble: TrajectoryEnsemble
    slit_attribution: np.ndarray    # 1 or 2 per trajectory
    crossings: int
    arrival_ks: float
    threshold: float


def double_slit_trajectories(slit_run: DoubleSlitRun, n: int, seed: int,
                             dt: float | None = None, *,
                             backend: str | None = None) -> DoubleSlitTrajectories:
    """Transport a |psi_0|^2 ensemble through both slits to the screen.

    A trajectory is attributed to slit 1 when it starts on the slit-1 side
    of the symmetry axis x = 0.
    """
    field = slit_run.field
    x0 = sample_positions(field.density_at(field.t0), n, seed)
    ens = integrate_ensemble(field, x0, dt, seed=seed, backend=backend)
    x = ens.positions[:, :, 0]
    attribution = np.where(x[:, 0] > 0, 1, 2)
    side = np.sign(x)
    crossed = np.any(side != side[:, :1], axis=1) & ~ens.flagged
    end = ens.endpoints()
    ks = _ks(end, field.density_at(field.t_end).cdf)
    return DoubleSlitTrajectories(ens, attribution, int(crossed.sum()), ks,
                                  ks_threshold(len(end)))


@dataclass(frozen=True, eq=False)
class PointerTrajectories:
    ensemble: TrajectoryEnsemble
    branch1_fraction: float
    field: GuidanceField


def pointer_trajectories(c1: complex, c2: complex, pointer0: WaveFunction, coupling: float,
                         duration: float, n: int, seed: int, *, snapshots: int = 200,
                         steps_per_snapshot: int = 1, mass: float | None = None,
                         backend: str | None = None) -> PointerTrajectories:
    """Bohmian pointer positions through a von Neumann measurement.

    Initial positions are drawn from |Psi_0|^2; a trajectory ends in branch 1
    when its final position is above the midpoint of the two pointer packets.
    """
    times = np.linspace(0.0, duration, snapshots + 1)
    snaps = [pointer_state(c1, c2, pointer0, coupling, t, mass) for t in times]
    field = GuidanceField.from_spinors(snaps, duration / snapshots, coupling, mass)
    x0 = sample_positions(field.density_at(0.0), n, seed)
    ens = integrate_ensemble(field, x0, field.dt / steps_per_snapshot, seed=seed, backend=backend)
    y0 = pointer_center(pointer0)
    end = ens.endpoints()
    return PointerTrajectories(ens, float(np.mean(end > y0)), field)


def pointer_center(wf: WaveFunction) -> float:
    w = np.abs(wf.values) ** 2
    return float(np.sum(w * wf.grid.axis(0)) / np.sum(w))
