"""Exception hierarchy shared by the simulator packages."""


class SimulatorError(Exception):
    """Base class for every error raised by the simulator."""


class StructuralError(SimulatorError):
    """Dimension mismatch or a degenerate set of map inputs."""


class DomainError(SimulatorError):
    """A state carries amplitude outside a map's domain and identity complement."""


class PreconditionError(SimulatorError):
    """An operation received a state it cannot act on (unnormalized, no photon support)."""


class ParameterError(SimulatorError, ValueError):
    """A physical parameter is outside its allowed range."""


class SequencingError(SimulatorError):
    """A pipeline stage was applied to a state from the wrong stage."""


class ConfigurationError(SimulatorError, ValueError):
    """Invalid scenario configuration or command-line input."""


class PhysicsAssertionError(SimulatorError):
    """A correct-evolution audit failed. This is always a bug, never valid output."""
