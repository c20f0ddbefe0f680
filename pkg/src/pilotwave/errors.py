"""Exception hierarchy.

Configuration-type problems derive from :class:`ConfigError`; runtime guard
and invariant violations derive from :class:`GuardError`. The CLI maps the
two families to exit codes 2 and 3.
"""


class PilotWaveError(Exception):
    """Base class for all package errors."""


class ConfigError(PilotWaveError, ValueError):
    """Invalid parameters or inputs that violate a precondition."""


class GuardError(PilotWaveError, RuntimeError):
    """A runtime guard or invariant check failed."""


class ZeroNorm(ConfigError):
    pass


class GridMismatch(ConfigError):
    pass


class DegenerateDensity(ConfigError):
    pass


class GeometryError(ConfigError):
    pass


class PhaseWrapRisk(ConfigError):
    pass


class ImpossibleOutcome(ConfigError):
    pass


class ZeroBranch(GuardError):
    """A branch is empty, so its overlap is not applicable."""


class BoundaryMassError(GuardError):
    pass


class NearNode(GuardError):
    """The wavefunction amplitude at the query point is below the node threshold."""


class NodeEncounter(GuardError):
    pass


class InsufficientEnsemble(GuardError):
    pass
