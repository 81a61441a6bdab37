"""
Base class for serializable records
"""
import hashlib
import json
from dataclasses import dataclass, fields
from typing import Any

import numpy as np


def to_jsonable(value: Any) -> Any:
    """Convert numpy values and nested records into plain JSON types"""
    if isinstance(value, RecordBase):
        return value.to_dict()
    if isinstance(value, np.ndarray):
        return value.tolist()
    if isinstance(value, np.generic):
        return value.item()
    if isinstance(value, dict):
        return {str(k): to_jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [to_jsonable(v) for v in value]
    return value


def canonical_json(payload: Any) -> str:
    """Key-sorted compact JSON used for digests"""
    return json.dumps(to_jsonable(payload), sort_keys=True, separators=(",", ":"))


def digest_of(payload: Any) -> str:
    """SHA-256 of the canonical JSON form"""
    return hashlib.sha256(canonical_json(payload).encode("utf-8")).hexdigest()


@dataclass
class RecordBase:
    """Base class for all persisted records"""

    def to_dict(self) -> dict:
        """Convert to dictionary for serialization"""
        return {f.name: to_jsonable(getattr(self, f.name)) for f in fields(self)}

    @classmethod
    def from_dict(cls, data: dict):
        """Create instance from dictionary"""
        known = {f.name for f in fields(cls)}
        return cls(**{k: v for k, v in data.items() if k in known})

    @property
    def digest(self) -> str:
        """Provenance digest of this record"""
        return digest_of(self.to_dict())
