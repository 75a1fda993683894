"""CSV and JSON report files."""

import csv
import json
import math
import os
from typing import Any, Dict, Iterable, Mapping, Sequence

import numpy as np


def detail_path(csv_path: str) -> str:
    """The JSON detail file written next to a CSV report."""
    return os.path.splitext(csv_path)[0] + ".json"


def plain(value: Any) -> Any:
    """numpy scalars and arrays to built-in types; nan and inf to None."""
    if isinstance(value, dict):
        return {str(k): plain(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [plain(v) for v in value]
    if isinstance(value, np.ndarray):
        return plain(value.tolist())
    if isinstance(value, np.generic):
        value = value.item()
    if isinstance(value, float) and not math.isfinite(value):
        return None
    return value


def _ensure_parent(path: str) -> None:
    parent = os.path.dirname(os.path.abspath(path))
    os.makedirs(parent, exist_ok=True)


def write_csv(path: str, columns: Sequence[str], rows: Iterable[Mapping[str, Any]]) -> None:
    _ensure_parent(path)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.DictWriter(fh, fieldnames=list(columns), extrasaction="ignore", lineterminator="\n")
        writer.writeheader()
        for row in rows:
            writer.writerow({key: plain(row.get(key)) for key in columns})


def write_json(path: str, payload: Dict[str, Any]) -> None:
    _ensure_parent(path)
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(plain(payload), fh, indent=2, sort_keys=True)
        fh.write("\n")
