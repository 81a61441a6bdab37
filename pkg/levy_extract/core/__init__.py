"""
Core package: samplers, simulator, quadrature and Kramers-Moyal estimators
"""
from .errors import (
    ArtifactWriteError,
    ConfigValidationError,
    DomainError,
    EstimationError,
    IntegrationError,
    LevyExtractError,
    LowStatisticsWarning,
    MissingInputError,
    NumericalError,
    ParameterError,
    TrainingError,
)

__all__ = [
    "LevyExtractError",
    "ParameterError",
    "ConfigValidationError",
    "NumericalError",
    "IntegrationError",
    "TrainingError",
    "EstimationError",
    "DomainError",
    "MissingInputError",
    "ArtifactWriteError",
    "LowStatisticsWarning",
]
