"""Tests for string formatting utilities"""

import math
from typing import Optional

import pytest

from app.helpers.strings import (
    angle_suffix,
    count_noun,
    format_ci,
    format_metric,
    format_percent,
    markdown_table,
    pluralize,
)


@pytest.mark.parametrize(
    "count,singular,plural,expected",
    [
        (1, "fold", None, "fold"),
        (2, "fold", None, "folds"),
        (0, "fold", None, "folds"),
        (2, "matrix", "matrices", "matrices"),
        (1, "matrix", "matrices", "matrix"),
    ],
)
def test_pluralize(count: int, singular: str, plural: Optional[str], expected: str):
    """Test pluralization of words"""
    assert pluralize(count, singular, plural) == expected


def test_count_noun():
    assert count_noun(1, "fold") == "1 fold"
    assert count_noun(3, "fold") == "3 folds"


@pytest.mark.parametrize(
    "value,digits,expected",
    [
        (0.84321, 3, "0.843"),
        (1.0, 2, "1.00"),
        (None, 3, "n/a"),
        (math.nan, 3, "n/a"),
        (math.inf, 3, "+inf"),
        (-math.inf, 3, "-inf"),
    ],
)
def test_format_metric(value, digits, expected):
    """Test fixed precision and the undefined marker"""
    assert format_metric(value, digits) == expected


def test_format_ci():
    assert format_ci(0.8, 0.9) == "[0.800, 0.900]"
    assert format_ci(None, 0.9) == "n/a"


@pytest.mark.parametrize(
    "level,expected", [(0.95, "95%"), (0.9, "90%"), (0.995, "99.5%")]
)
def test_format_percent(level: float, expected: str):
    assert format_percent(level) == expected


def test_markdown_table_pads_columns():
    table = markdown_table(["name", "v"], [["auroc", "0.9"], ["f1", "0.75"]])
    lines = table.splitlines()
    assert lines[0] == "| name  | v    |"
    assert lines[1] == "|-------|------|"
    assert lines[3] == "| f1    | 0.75 |"
    assert table.endswith("\n")


def test_angle_suffix():
    assert angle_suffix(90) == "_rot90"
