"""Scripted states and default geometries shared by the CLI and the acceptance suite."""
from __future__ import annotations

import numpy as np

from .evolution import EvolutionSpec, SlitConfig
from .wavefn import Grid, WaveFunction, normalize

# transverse double-slit geometry: packets must stay clear of the edges until the screen
DOUBLE_SLIT_GRID = dict(lower=-64.0, upper=64.0, points=4096)
DOUBLE_SLIT_SLITS = dict(separation=4.0, width=0.5, forward_momentum=10.0)
DOUBLE_SLIT_FLIGHT = dict(dt=0.005, steps=400, record_every=4)

POINTER_GRID = dict(lower=-40.0, upper=40.0, points=4096)
POINTER_RUN = dict(c1_sq=0.3, sigma=1.0, coupling=1.0, duration=10.0, snapshots=200)

FREE_GRID = dict(lower=-40.0, upper=40.0, points=4096)
FREE_RUN = dict(sigma=1.0, k=0.0, dt=0.01, t_check=2.0)

TWO_PARTICLE_GRID = dict(lower=-16.0, upper=16.0, points=256)
# (x1, x2a, x2b) with particle 2 moved while particle 1 is held fixed
PROBE_POINTS = ((0.5, 0.0, 1.0), (0.25, -0.5, 0.75), (1.0, 0.0, 2.0))


def line(spec: dict) -> Grid:
    return Grid.line(spec["lower"], spec["upper"], spec["points"])


def plane(spec: dict) -> Grid:
    lo, hi, n = spec["lower"], spec["upper"], spec["points"]
    return Grid.plane((lo, lo), (hi, hi), (n, n))


def double_slit_setup(open: str = "both", **overrides):
    p = {**DOUBLE_SLIT_GRID, **DOUBLE_SLIT_SLITS, **DOUBLE_SLIT_FLIGHT, **overrides}
    grid = Grid.line(p["lower"], p["upper"], p["points"])
    cfg = SlitConfig(open, p["separation"], p["width"], p["forward_momentum"])
    spec = EvolutionSpec(p["dt"], p["steps"])
    return grid, cfg, spec, p["record_every"]


def entangled_pair(grid: Grid, sigma: float = 1.0, k: float = 1.0,
                   envelope: float = 1.5) -> WaveFunction:
    """g(x - y) + g(x + y) with g(u) = exp(-u^2 / 4 sigma^2 + i k u).

    A wide Gaussian envelope in x and y keeps the state normalizable.
    """
    x, y = grid.mesh()

    def g(u):
        return np.exp(-u**2 / (4 * sigma**2) + 1j * k * u)

    env = np.exp(-(x**2 + y**2) / (4 * envelope**2))
    return normalize(WaveFunction(grid, (g(x - y) + g(x + y)) * env))


def product_pair(grid: Grid) -> WaveFunction:
    """phi(x) Phi(y) with distinct, complex factors."""
    x, y = grid.mesh()
    phi = np.exp(-x**2 / 4 + 1j * x)
    Phi = np.exp(-((y - 1.0) ** 2) / 2 + 0.5j * y**2)
    return normalize(WaveFunction(grid, phi * Phi))


def chirped_gaussian(grid: Grid, sigma: float = 4.0, beta: float = 1.0) -> WaveFunction:
    """exp(-x^2/4 sigma^2 + i beta x^2): static field with velocity 2 beta x."""
    x = grid.axis(0)
    return normalize(WaveFunction(grid, np.exp(-x**2 / (4 * sigma**2) + 1j * beta * x**2)))


def free_gaussian_width(sigma: float, t: float, mass: float = 1.0) -> float:
    """Position spread of a free Gaussian: sigma_t^2 = sigma^2 + t^2 / (4 sigma^2 m^2)."""
    return float(np.sqrt(sigma**2 + t**2 / (4 * sigma**2 * mass**2)))
