"""CSV and JSON emission with a pinned schema line and 12-significant-digit
floats, so the two formats carry identical values."""

from __future__ import annotations

import csv
import json
import math
from typing import IO, Iterable, Sequence

SCHEMA_VERSION = 1

__all__ = ["SCHEMA_VERSION", "schema_id", "fmt", "round12", "write_csv", "write_json"]


def schema_id(command: str) -> str:
    return f"alohagame.{command}.v{SCHEMA_VERSION}"


def fmt(value) -> str:
    """Render a value for CSV; floats get 12 significant digits."""
    if isinstance(value, bool):
        return str(value).lower()
    if isinstance(value, float):
        if math.isinf(value):
            return "inf"
        return f"{value:.12g}"
    if value is None:
        return ""
    return str(value)


def round12(value: float) -> float:
    """Float rounded through the 12-significant-digit representation."""
    if math.isinf(value) or math.isnan(value):
        return value
    return float(f"{value:.12g}")


def _jsonable(value):
    import numpy as np

    if isinstance(value, dict):
        return {k: _jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    if isinstance(value, np.ndarray):
        return [_jsonable(v) for v in value.tolist()]
    if isinstance(value, (np.floating, float)):
        v = float(value)
        return "inf" if math.isinf(v) else round12(v)
    if isinstance(value, (np.integer, np.bool_)):
        return value.item()
    return value


def write_csv(stream: IO[str], command: str, header: Sequence[str], rows: Iterable[Sequence]):
    stream.write(f"# schema: {schema_id(command)}\n")
    writer = csv.writer(stream, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([fmt(v) for v in row])


def write_json(stream: IO[str], command: str, payload: dict):
    doc = {"schema": schema_id(command), **_jsonable(payload)}
    json.dump(doc, stream, indent=2)
    stream.write("\n")
