"""Wavefunctions and densities on uniform periodic grids.

Quadrature is the rectangle rule (sum times cell volume), which is the
trapezoidal rule on a periodic grid. Grid point ``k`` sits at
``lower + k * spacing``; the upper edge is the periodic image of the lower
edge and is not a sample point.
"""
from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import ConfigError, DegenerateDensity, GridMismatch, ZeroNorm
from .rng import stream

MIN_POINTS = 8
ZERO_NORM = 1e-300


@dataclass(frozen=True)
class Grid:
    lower: tuple[float, ...]
    upper: tuple[float, ...]
    points: tuple[int, ...]

    def __post_init__(self):
        lower = tuple(float(v) for v in self.lower)
        upper = tuple(float(v) for v in self.upper)
        points = tuple(int(v) for v in self.points)
        object.__setattr__(self, "lower", lower)
        object.__setattr__(self, "upper", upper)
        object.__setattr__(self, "points", points)
        if not (len(lower) == len(upper) == len(points)) or len(points) not in (1, 2):
            raise ConfigError("grid must be 1D or 2D with matching extents and point counts")
        for lo, hi, n in zip(lower, upper, points):
            if not (np.isfinite(lo) and np.isfinite(hi)) or hi <= lo:
                raise ConfigError(f"invalid extent [{lo}, {hi}]")
            if n < MIN_POINTS:
                raise ConfigError(f"need at least {MIN_POINTS} points per axis, got {n}")

    @classmethod
    def line(cls, lower: float, upper: float, points: int) -> Grid:
        return cls((lower,), (upper,), (points,))

    @classmethod
    def plane(cls, lower: tuple[float, float], upper: tuple[float, float],
              points: tuple[int, int]) -> Grid:
        return cls(tuple(lower), tuple(upper), tuple(points))

    @property
    def ndim(self) -> int:
        return len(self.points)

    @property
    def shape(self) -> tuple[int, ...]:
        return self.points

    @property
    def spacing(self) -> tuple[float, ...]:
        return tuple((hi - lo) / n for lo, hi, n in zip(self.lower, self.upper, self.points))

    @property
    def cell_volume(self) -> float:
        return float(np.prod(self.spacing))

    @property
    def is_spectral(self) -> bool:
        """True when every axis length is a power of two."""
        return all(n & (n - 1) == 0 for n in self.points)

    def axis(self, i: int = 0) -> np.ndarray:
        return self.lower[i] + np.arange(self.points[i]) * self.spacing[i]

    def mesh(self) -> tuple[np.ndarray, ...]:
        return tuple(np.meshgrid(*(self.axis(i) for i in range(self.ndim)), indexing="ij"))

    def wavenumbers(self, i: int = 0) -> np.ndarray:
        return 2.0 * np.pi * np.fft.fftfreq(self.points[i], d=self.spacing[i])

    def contains(self, x) -> bool:
        x = np.atleast_1d(np.asarray(x, dtype=float))
        return bool(np.all((x >= np.asarray(self.lower)) & (x <= np.asarray(self.upper))))

    def mirror_index(self, axis: int = 0) -> np.ndarray:
        """Index map sending the point at x to the point at -x.

        Only meaningful for grids symmetric about the origin
        (``lower == -upper``).
        """
        n = self.points[axis]
        return (-np.arange(n)) % n


def _frozen(values: np.ndarray) -> np.ndarray:
    values = np.array(values, copy=True)
    values.flags.writeable = False
    return values


class WaveFunction:
    """Complex amplitudes sampled on a :class:`Grid`."""

    __slots__ = ("grid", "values")

    def __init__(self, grid: Grid, values):
        values = np.asarray(values, dtype=np.complex128)
        if values.shape != grid.shape:
            raise GridMismatch(f"values shape {values.shape} != grid shape {grid.shape}")
        if not np.all(np.isfinite(values)):
            raise ConfigError("wavefunction values must be finite")
        self.grid = grid
        self.values = _frozen(values)

    def __repr__(self):
        return f"WaveFunction(grid={self.grid}, norm={self.norm():.12g})"

    def norm_squared(self) -> float:
        return float(np.sum(np.abs(self.values) ** 2) * self.grid.cell_volume)

    def norm(self) -> float:
        return float(np.sqrt(self.norm_squared()))

    def scaled(self, factor: complex) -> WaveFunction:
        return WaveFunction(self.grid, self.values * factor)

    def __add__(self, other: WaveFunction) -> WaveFunction:
        _check_same_grid(self, other)
        return WaveFunction(self.grid, self.values + other.values)

    def __sub__(self, other: WaveFunction) -> WaveFunction:
        _check_same_grid(self, other)
        return WaveFunction(self.grid, self.values - other.values)

    def __rmul__(self, factor: complex) -> WaveFunction:
        return self.scaled(factor)

    def gradient(self) -> tuple[np.ndarray, ...]:
        """Spectral derivative along every axis."""
        return spectral_gradient(self.grid, self.values)


class Density:
    """Nonnegative weights per grid point, normalized to unit mass."""

    __slots__ = ("grid", "weights")

    def __init__(self, grid: Grid, weights, *, check: bool = True):
        weights = np.asarray(weights, dtype=np.float64)
        if weights.shape != grid.shape:
            raise GridMismatch(f"weights shape {weights.shape} != grid shape {grid.shape}")
        if check:
            if np.any(weights < 0) or not np.all(np.isfinite(weights)):
                raise ConfigError("density weights must be finite and nonnegative")
            mass = weights.sum() * grid.cell_volume
            if abs(mass - 1.0) > 1e-9:
                raise ConfigError(f"density integrates to {mass!r}, expected 1")
        self.grid = grid
        self.weights = _frozen(weights)

    def __repr__(self):
        return f"Density(grid={self.grid})"

    def mass(self, mask=None) -> float:
        w = self.weights if mask is None else self.weights[mask]
        return float(w.sum() * self.grid.cell_volume)

    def marginal(self, axis: int) -> Density:
        """1D marginal along ``axis`` of a 2D density."""
        g = self.grid
        if g.ndim == 1:
            return self
        other = 1 - axis
        w = self.weights.sum(axis=other) * g.spacing[other]
        line = Grid.line(g.lower[axis], g.upper[axis], g.points[axis])
        return Density(line, w, check=False)

    def cdf(self, x) -> np.ndarray:
        """CDF of the piecewise-constant density on cells centred at grid points."""
        if self.grid.ndim != 1:
            raise ConfigError("cdf is defined for 1D densities; take a marginal first")
        h = self.grid.spacing[0]
        edges = self.grid.axis(0) - 0.5 * h
        edges = np.append(edges, edges[-1] + h)
        cum = np.concatenate([[0.0], np.cumsum(self.weights) * h])
        cum /= cum[-1]
        return np.interp(x, edges, cum, left=0.0, right=1.0)


def _check_same_grid(f, g):
    if f.grid != g.grid:
        raise GridMismatch("operands live on different grids")


def spectral_gradient(grid: Grid, values: np.ndarray) -> tuple[np.ndarray, ...]:
    spectrum = np.fft.fftn(values)
    out = []
    for i in range(grid.ndim):
        shape = [1] * grid.ndim
        shape[i] = grid.points[i]
        ik = 1j * grid.wavenumbers(i).reshape(shape)
        out.append(np.fft.ifftn(ik * spectrum))
    return tuple(out)


def normalize(wf: WaveFunction) -> WaveFunction:
    n2 = wf.norm_squared()
    if not n2 >= ZERO_NORM:
        raise ZeroNorm(f"cannot normalize a wavefunction with squared norm {n2!r}")
    return wf.scaled(1.0 / np.sqrt(n2))


def density(wf: WaveFunction) -> Density:
    return Density(wf.grid, np.abs(wf.values) ** 2)


def overlap(f: WaveFunction, g: WaveFunction) -> complex:
    """Quadrature of conj(f) * g."""
    _check_same_grid(f, g)
    return complex(np.vdot(f.values, g.values) * f.grid.cell_volume)


def sample_positions(d: Density, n: int, seed: int, *, batch: int = 65536) -> np.ndarray:
    """Draw ``n`` i.i.d. positions from ``d`` by rejection sampling.

    Proposals are uniform over the grid box; a proposal is accepted with
    probability weight(cell) / max weight, where cells are centred on grid
    points. Returns shape ``(n,)`` in 1D and ``(n, 2)`` in 2D.
    """
    if n < 1:
        raise ConfigError("n must be >= 1")
    wmax = float(d.weights.max())
    if not wmax > 0:
        raise DegenerateDensity("density has zero maximum weight")
    g = d.grid
    h = np.asarray(g.spacing)
    lo = np.asarray(g.lower) - 0.5 * h
    span = np.asarray(g.points) * h
    rng = stream(seed)
    accepted = []
    count = 0
    while count < n:
        u = rng.random((batch, g.ndim))
        x = lo + u * span
        idx = np.minimum(((x - lo) / h).astype(np.int64), np.asarray(g.points) - 1)
        w = d.weights[tuple(idx.T)]
        keep = rng.random(batch) * wmax < w
        accepted.append(x[keep])
        count += int(keep.sum())
    out = np.concatenate(accepted)[:n]
    return out[:, 0].copy() if g.ndim == 1 else out


def gaussian(grid: Grid, center: float = 0.0, sigma: float = 1.0, k: float = 0.0,
             axis: int = 0) -> np.ndarray:
    """Unit-norm Gaussian amplitude exp(-(x-c)^2 / 4 sigma^2 + i k x) along one axis."""
    x = grid.axis(axis)
    return (2 * np.pi * sigma**2) ** -0.25 * np.exp(-((x - center) ** 2) / (4 * sigma**2) + 1j * k * x)


def gaussian_wavefunction(grid: Grid, center: float = 0.0, sigma: float = 1.0,
                          k: float = 0.0) -> WaveFunction:
    if grid.ndim != 1:
        raise ConfigError("gaussian_wavefunction builds 1D packets")
    return WaveFunction(grid, gaussian(grid, center, sigma, k))


# --- CSV -----------------------------------------------------------------

_AXES = ("x", "y")


def _grid_columns(grid: Grid) -> list[np.ndarray]:
    return [m.ravel() for m in grid.mesh()]


def to_csv(obj, path=None) -> str:
    """Serialize a WaveFunction or Density; returns the text and optionally writes it."""
    grid = obj.grid
    coords = _grid_columns(grid)
    names = list(_AXES[: grid.ndim])
    if isinstance(obj, WaveFunction):
        names += ["re", "im"]
        cols = coords + [obj.values.real.ravel(), obj.values.imag.ravel()]
    elif isinstance(obj, Density):
        names += ["weight"]
        cols = coords + [obj.weights.ravel()]
    else:
        raise TypeError(f"cannot serialize {type(obj).__name__}")
    return write_columns(names, cols, path)


def write_columns(names, cols, path=None) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(names)
    for row in zip(*cols):
        writer.writerow([repr(float(v)) if isinstance(v, (float, np.floating)) else v for v in row])
    text = buf.getvalue()
    if path is not None:
        Path(path).write_text(text, encoding="utf-8", newline="")
    return text


def from_csv(text: str, grid: Grid):
    """Parse CSV produced by :func:`to_csv` back onto ``grid``."""
    rows = list(csv.reader(io.StringIO(text)))
    header, body = rows[0], rows[1:]
    data = np.array(body, dtype=float)
    nd = grid.ndim
    if header[:nd] != list(_AXES[:nd]) or data.shape[0] != int(np.prod(grid.shape)):
        raise GridMismatch("CSV does not match the grid")
    if header[nd:] == ["re", "im"]:
        return WaveFunction(grid, (data[:, nd] + 1j * data[:, nd + 1]).reshape(grid.shape))
    if header[nd:] == ["weight"]:
        return Density(grid, data[:, nd].reshape(grid.shape), check=False)
    raise ConfigError(f"unrecognized CSV header {header}")
