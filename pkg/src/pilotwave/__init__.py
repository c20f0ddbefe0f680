"""Pilot-wave (de Broglie-Bohm) simulations: wave evolution, guided trajectories and Bell tests."""
from .bell import AngleTriple, bell_bound_certificate, bell_sum_quantum, nonlocality_demonstration
from .errors import ConfigError, GuardError, PilotWaveError
from .evolution import EvolutionSpec, Potential, SlitConfig, evolve, pointer_measure
from .kernels import BACKEND
from .spin import MeasurementAxis, TwoQubitState, no_signaling_audit
from .trajectories import GuidanceField, equivariance_check, integrate_ensemble
from .wavefn import Density, Grid, WaveFunction, gaussian_wavefunction, normalize

__version__ = "0.1.0"

__all__ = [
    "AngleTriple", "BACKEND", "ConfigError", "Density", "EvolutionSpec", "Grid",
    "GuardError", "GuidanceField", "MeasurementAxis", "PilotWaveError", "Potential",
    "SlitConfig", "TwoQubitState", "WaveFunction", "bell_bound_certificate",
    "bell_sum_quantum", "equivariance_check", "evolve", "gaussian_wavefunction",
    "integrate_ensemble", "no_signaling_audit", "nonlocality_demonstration", "normalize",
    "pointer_measure",
]
