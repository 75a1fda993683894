"""Utility functions for formatting output."""

import math
from typing import Any, Dict, Iterable, List, Mapping, Sequence


def format_number(value: Any) -> str:
    """Format a report value for terminal output.

    Args:
        value: Number, string or None.

    Returns:
        str: Integers as-is, reals with 6 significant digits, "-" for missing.
    """
    if value is None:
        return "-"
    if isinstance(value, bool) or isinstance(value, int):
        return str(value)
    if isinstance(value, float):
        if math.isnan(value):
            return "nan"
        return f"{value:.6g}"
    return str(value)


def format_metrics(metrics: Mapping[str, float], constants: Mapping[str, float]) -> List[str]:
    """One line per metric, flagging values above their constant.

    Args:
        metrics: Measured maxima keyed by metric name.
        constants: Calibrated constants keyed by metric name; may be partial.

    Returns:
        list: Lines such as "ratio   0.812 <= 1.1".
    """
    if not metrics:
        return []
    width = max(len(name) for name in metrics)
    lines = []
    for name in sorted(metrics):
        line = f"{name.ljust(width)}  {format_number(metrics[name])}"
        if name in constants:
            relation = "<=" if metrics[name] <= constants[name] else ">"
            line += f" {relation} {format_number(constants[name])}"
        lines.append(line)
    return lines


def format_table(rows: Iterable[Dict[str, Any]], columns: Sequence[str]) -> List[str]:
    """Left-aligned text table with a header line.

    Args:
        rows: Report rows.
        columns: Column names, in order.

    Returns:
        list: Header followed by one line per row.
    """
    cells = [[format_number(row.get(col)) for col in columns] for row in rows]
    widths = [max([len(col)] + [len(line[i]) for line in cells]) for i, col in enumerate(columns)]
    lines = ["  ".join(col.ljust(w) for col, w in zip(columns, widths)).rstrip()]
    for line in cells:
        lines.append("  ".join(cell.ljust(w) for cell, w in zip(line, widths)).rstrip())
    return lines
