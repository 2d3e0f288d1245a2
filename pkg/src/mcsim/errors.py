"""Shared exception types."""


class ContractViolation(ValueError):
    """An argument or call violated a documented precondition."""


class SimulationDiverged(RuntimeError):
    """The ODE integration produced a non-finite state.

    Carries the last time at which the state was still finite.
    """

    def __init__(self, message, last_valid_time):
        super().__init__(message)
        self.last_valid_time = last_valid_time


class EstimationFailed(RuntimeError):
    """A waveform feature estimator could not produce a value."""


class InsufficientData(ValueError):
    """The input series is too short for the requested summary."""
