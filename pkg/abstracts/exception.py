from typing import Optional


class SimulationError(Exception):
    """Base error for every failure raised by the simulator"""

    def __init__(self, message: Optional[str] = "Simulation failed"):
        self.message = message
        super().__init__(self.message)


class InvalidInputError(SimulationError, ValueError):
    """Input outside the domain of an operation"""

    def __init__(self, message: Optional[str] = "Invalid input"):
        super().__init__(message)


class NumericalOverflowError(SimulationError, ArithmeticError):
    """A computation produced a non-finite value"""

    def __init__(self, message: Optional[str] = "Numerical overflow"):
        super().__init__(message)


class DivergenceError(SimulationError):
    """Training left the configured divergence guard"""

    def __init__(
        self,
        message: Optional[str] = "Training diverged",
        epoch: Optional[int] = None,
        tier: Optional[str] = None,
    ):
        self.epoch = epoch
        self.tier = tier
        # partial TrainTrace up to the failing epoch, attached by the tier
        self.trace = None
        super().__init__(message)


class OutOfRangeError(SimulationError, IndexError):
    """Evaluation requested outside the simulated horizon"""

    def __init__(self, message: Optional[str] = "Evaluation time out of range"):
        super().__init__(message)


class SubthresholdViolationError(SimulationError):
    """A circuit current left the weak-inversion window or lost positivity"""

    def __init__(
        self,
        message: Optional[str] = "Subthreshold validity violated",
        time: Optional[float] = None,
        current: Optional[float] = None,
        label: Optional[str] = None,
    ):
        self.time = time
        self.current = current
        self.label = label
        super().__init__(message)


class InfeasibleMappingError(SimulationError):
    """No circuit parameter set reaches the requested hyperparameters"""

    def __init__(
        self,
        message: Optional[str] = "Hyperparameters cannot be mapped to circuit values",
        suggested_stack_depth: Optional[int] = None,
    ):
        self.suggested_stack_depth = suggested_stack_depth
        super().__init__(message)


class DatasetFormatError(SimulationError, ValueError):
    """Dataset file content does not match the expected layout"""

    def __init__(self, message: Optional[str] = "Malformed dataset"):
        super().__init__(message)


class DatasetIOError(SimulationError, OSError):
    """Dataset file cannot be read"""

    def __init__(self, message: Optional[str] = "Dataset file not readable"):
        super().__init__(message)


class ConfigError(SimulationError, ValueError):
    """Experiment configuration is invalid"""

    def __init__(self, message: Optional[str] = "Invalid configuration"):
        super().__init__(message)
