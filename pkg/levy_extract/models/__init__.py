"""
Models package for levy-extract
"""
from .base import RecordBase
from .extraction import ExtractionResult, ExtractionSettings, FieldEstimate, JumpEstimate
from .flow import FlowArchitecture, RqSplineParams, TrainConfig
from .report import AcceptanceCheck, ErrorNorm, ReportTables, RunReport
from .sde import Burst, BurstDataset, SdeSpec, StableParams

__all__ = [
    "RecordBase",
    "StableParams",
    "SdeSpec",
    "Burst",
    "BurstDataset",
    "RqSplineParams",
    "FlowArchitecture",
    "TrainConfig",
    "ExtractionSettings",
    "JumpEstimate",
    "FieldEstimate",
    "ExtractionResult",
    "ErrorNorm",
    "AcceptanceCheck",
    "ReportTables",
    "RunReport",
]
