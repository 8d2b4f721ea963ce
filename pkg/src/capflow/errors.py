"""Exception types shared across the solver."""


class CapflowError(Exception):
    """Base class for all library errors."""


class NonPhysical(CapflowError):
    """A state left the admissible set (negative partial density, p + Pi <= 0,
    volume fraction outside (0, 1), ...)."""


class PredictorDiverged(CapflowError):
    """The local space-time predictor iteration failed to reduce its residual
    within the iteration budget; the caller should treat the cell as troubled."""


class SimulationBlowup(CapflowError):
    """The limiter cascade could not produce admissible data; carries the
    simulation time at which the run failed."""

    def __init__(self, message: str, time: float):
        super().__init__(message)
        self.time = time


class ConfigError(CapflowError):
    """A run configuration is malformed or inconsistent."""
