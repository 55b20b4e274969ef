"""
utils.py

Serialization helpers for pm_fusion records: dataclasses, enums, numpy
arrays and type distributions to plain dicts or JSON, and deterministic CSV
tables.
"""

import csv
import json
import math
from dataclasses import fields, is_dataclass
from enum import Enum
from pathlib import Path
from typing import Any, Iterable, List, Sequence, Union

import numpy as np

from .model import TypeDistribution

FLOAT_FORMAT = ".10g"


def to_dict(obj: Any) -> Any:
    """
    Recursively converts a dataclass or nested structure to JSON-safe values.

    Enums become their values, numpy arrays and type distributions become
    lists, numpy scalars become Python numbers. Dict keys are stringified.

    Args:
        obj (Any): A dataclass instance or nested structure.

    Returns:
        Any: Representation suitable for serialization.
    """
    if isinstance(obj, TypeDistribution):
        return obj.tolist()
    if is_dataclass(obj) and not isinstance(obj, type):
        return {f.name: to_dict(getattr(obj, f.name)) for f in fields(obj)}
    if isinstance(obj, Enum):
        return obj.value
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, np.generic):
        return obj.item()
    if isinstance(obj, Path):
        return str(obj)
    if isinstance(obj, (list, tuple)):
        return [to_dict(item) for item in obj]
    if isinstance(obj, dict):
        return {str(to_dict(k)): to_dict(v) for k, v in obj.items()}
    return obj


def to_json(obj: Any, indent: int = 2) -> str:
    """
    Serializes a dataclass (or list/dict thereof) as a formatted JSON string.

    Args:
        obj (Any): A serializable object.
        indent (int): Indentation level for JSON output.

    Returns:
        str: JSON-formatted string representing the object.
    """
    return json.dumps(to_dict(obj), indent=indent, default=str)


def format_cell(value: Any) -> str:
    """Render one CSV cell; floats use a fixed precision."""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, (float, np.floating)):
        value = float(value)
        if math.isnan(value):
            return "nan"
        return format(value, FLOAT_FORMAT)
    if isinstance(value, Enum):
        return str(value.value)
    return str(value)


def write_csv(path: Union[str, Path], header: Sequence[str], rows: Iterable[Sequence[Any]]) -> Path:
    """
    Write a table with a header row.

    Raises:
        OSError: If the file cannot be written; the message names the path.
    """
    path = Path(path)
    lines: List[List[str]] = [[format_cell(v) for v in row] for row in rows]
    try:
        with path.open("w", encoding="utf-8", newline="") as f:
            writer = csv.writer(f, lineterminator="\n")
            writer.writerow(header)
            writer.writerows(lines)
    except OSError as exc:
        raise OSError(f"Cannot write {path}: {exc.strerror or exc}") from exc
    return path
