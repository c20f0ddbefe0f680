"""Closed-form references that share no code with the solvers."""
import numpy as np


def free_gaussian(x, t, sigma=1.0, k=0.0, x0=0.0, mass=1.0):
    """Exact free evolution of (2 pi sigma^2)^(-1/4) exp(-(x-x0)^2/4sigma^2 + i k (x-x0))."""
    tau = 1.0 + 1j * t / (2 * mass * sigma**2)
    u = x - x0 - k * t / mass
    return ((2 * np.pi * sigma**2) ** -0.25 / np.sqrt(tau)
            * np.exp(-u**2 / (4 * sigma**2 * tau) + 1j * k * (x - x0) - 0.5j * k**2 * t / mass))


def free_gaussian_trajectory(x_start, t, sigma=1.0, k=0.0, x0=0.0, mass=1.0):
    """Bohmian path of a free Gaussian: the scaling flow about the moving centre."""
    scale = np.sqrt(1 + (t / (2 * mass * sigma**2)) ** 2)
    return x0 + k * t / mass + (x_start - x0) * scale


def two_slit_screen(x, t, separation, sigma):
    """Direct sum of the two freely spread slit packets, normalized on the sample points."""
    psi = sum(free_gaussian(x, t, sigma, 0.0, c) for c in (0.5 * separation, -0.5 * separation))
    return psi


def singlet_anticorrelation(theta):
    return np.cos(0.5 * theta) ** 2
