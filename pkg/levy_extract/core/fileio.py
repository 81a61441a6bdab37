"""
Atomic file writes, JSON and CSV tables, file digests
"""
import hashlib
import io
import json
import os
import tempfile
from pathlib import Path
from typing import Any, Callable, Dict, IO, List, Union

import numpy as np

from .errors import MissingInputError, ParameterError
from ..models.base import to_jsonable

PathLike = Union[str, os.PathLike]
FLOAT_FORMAT = "%.17g"


def atomic_write(path: PathLike, write: Callable[[IO], None], binary: bool = False) -> Path:
    """
    Write through a temp file in the target directory, then rename over the target

    Args:
        path: destination
        write: callback receiving the open temp file
        binary: open in binary mode

    Returns:
        destination path
    """
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(prefix=f".{path.name}.", suffix=".tmp", dir=path.parent)
    try:
        mode = "wb" if binary else "w"
        kwargs = {} if binary else {"encoding": "utf-8", "newline": ""}
        with os.fdopen(fd, mode, **kwargs) as file:
            write(file)
            file.flush()
            os.fsync(file.fileno())
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    return path


def atomic_write_text(path: PathLike, text: str) -> Path:
    return atomic_write(path, lambda f: f.write(text))


def atomic_write_bytes(path: PathLike, payload: bytes) -> Path:
    return atomic_write(path, lambda f: f.write(payload), binary=True)


def file_sha256(path: PathLike) -> str:
    """SHA-256 of a file's bytes"""
    digest = hashlib.sha256()
    with open(path, "rb") as file:
        for chunk in iter(lambda: file.read(1 << 20), b""):
            digest.update(chunk)
    return digest.hexdigest()


def write_json(path: PathLike, payload: Any) -> Path:
    """Pretty, key-sorted JSON written atomically"""
    text = json.dumps(to_jsonable(payload), indent=2, sort_keys=True, ensure_ascii=False)
    return atomic_write_text(path, text + "\n")


def read_json(path: PathLike) -> Any:
    path = Path(path)
    if not path.is_file():
        raise MissingInputError(f"file not found: {path}")
    try:
        return json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as e:
        raise MissingInputError(f"unreadable JSON {path}: {e}") from e


def write_table(path: PathLike, columns: List[str], values: np.ndarray) -> Path:
    """Comma-separated table with a header row and 17 significant digits"""
    buffer = io.StringIO()
    np.savetxt(buffer, np.atleast_2d(values), fmt=FLOAT_FORMAT, delimiter=",",
               header=",".join(columns), comments="")
    return atomic_write_text(path, buffer.getvalue())


def read_table(path: PathLike) -> Dict[str, np.ndarray]:
    """Columns of a table written by write_table"""
    path = Path(path)
    if not path.is_file():
        raise MissingInputError(f"table not found: {path}")
    with open(path, encoding="utf-8") as file:
        header = file.readline().strip().split(",")
    values = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    if values.size and values.shape[1] != len(header):
        raise ParameterError(f"{path}: {values.shape[1]} columns for header {header}")
    values = values.reshape(-1, len(header))
    return {name: values[:, i] for i, name in enumerate(header)}
