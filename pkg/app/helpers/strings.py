"""String formatting for logs, tables and summaries"""

import math
from typing import Optional, Sequence

from .constants import UNDEFINED_METRIC


def pluralize(count: int, singular: str, plural: Optional[str] = None) -> str:
    """Return singular or plural form based on count"""
    if count == 1:
        return singular
    if plural is not None:
        return plural
    return f"{singular}s"


def count_noun(count: int, singular: str, plural: Optional[str] = None) -> str:
    """'1 fold', '3 folds'"""
    return f"{count} {pluralize(count, singular, plural)}"


def format_metric(value: Optional[float], digits: int = 3) -> str:
    """Fixed-precision metric; undefined values print as the n/a marker"""
    if value is None or (isinstance(value, float) and math.isnan(value)):
        return UNDEFINED_METRIC
    if math.isinf(value):
        return "+inf" if value > 0 else "-inf"
    return f"{value:.{digits}f}"


def format_ci(
    lower: Optional[float], upper: Optional[float], digits: int = 3
) -> str:
    if lower is None or upper is None:
        return UNDEFINED_METRIC
    return f"[{format_metric(lower, digits)}, {format_metric(upper, digits)}]"


def format_percent(level: float) -> str:
    """0.95 -> '95%'"""
    return f"{level * 100:g}%"


def markdown_table(header: Sequence[str], rows: Sequence[Sequence[str]]) -> str:
    """Pipe table with columns padded to equal width"""
    widths = [len(h) for h in header]
    for row in rows:
        widths = [max(w, len(cell)) for w, cell in zip(widths, row)]

    def line(cells: Sequence[str]) -> str:
        return "| " + " | ".join(c.ljust(w) for c, w in zip(cells, widths)) + " |"

    separator = "|" + "|".join("-" * (w + 2) for w in widths) + "|"
    return "\n".join([line(header), separator, *(line(r) for r in rows)]) + "\n"


def angle_suffix(angle: int) -> str:
    """Sample-id suffix of a rotated copy"""
    return f"_rot{angle}"
