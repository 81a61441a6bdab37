"""
Exception hierarchy shared by every stage
"""
from typing import Any, Dict, Optional, Sequence


class LevyExtractError(Exception):
    """Base class for all levy-extract failures"""

    exit_code = 1

    def __init__(self, message: str):
        super().__init__(message)
        self.message = message
        self.z: Optional[tuple] = None

    def tag_z(self, z: Sequence[float]) -> "LevyExtractError":
        """Attach the initial point whose burst or grid point failed"""
        self.z = tuple(float(v) for v in z)
        self.args = (f"{self.message} (z={list(self.z)})",)
        return self

    def __reduce__(self):
        # worker processes send errors back pickled; subclasses take extra constructor args
        return _rebuild_error, (self.__class__, self.args, dict(self.__dict__))


class ParameterError(LevyExtractError, ValueError):
    """Invalid numeric parameter"""

    exit_code = 2


class ConfigValidationError(ParameterError):
    """Run-config or SDE spec validation failure"""

    def __init__(self, message: str, path: str = "", line: Optional[int] = None):
        location = path or "<root>"
        if line is not None:
            location = f"line {line}: {location}"
        super().__init__(f"{location}: {message}")
        self.detail = message
        self.path = path
        self.line = line


class NumericalError(LevyExtractError, ArithmeticError):
    """Numerical failure during simulation, training or estimation"""

    exit_code = 3


class IntegrationError(NumericalError):
    """Non-finite state encountered by the Euler-Maruyama integrator"""

    def __init__(self, message: str, step: int):
        super().__init__(f"{message} at step {step}")
        self.step = step


class TrainingError(NumericalError):
    """Non-finite loss during flow training"""

    def __init__(self, message: str, epoch: Optional[int] = None, batch: Optional[int] = None):
        super().__init__(f"{message} (epoch={epoch}, batch={batch})")
        self.epoch = epoch
        self.batch = batch


class EstimationError(NumericalError):
    """Jump-parameter or field estimation could not be carried out"""

    def __init__(self, message: str, diagnostics: Optional[Dict[str, Any]] = None):
        super().__init__(message)
        self.diagnostics = diagnostics or {}


class DomainError(NumericalError):
    """Closed form evaluated outside its domain"""


class MissingInputError(LevyExtractError, FileNotFoundError):
    """A required input file or stage output is absent"""

    exit_code = 4


class ArtifactWriteError(LevyExtractError, OSError):
    """A stage output could not be written"""


class LowStatisticsWarning(UserWarning):
    """An annulus or ball contained no (or very few) samples"""


def _rebuild_error(cls, args, state):
    error = cls.__new__(cls)
    error.args = args
    error.__dict__.update(state)
    return error
