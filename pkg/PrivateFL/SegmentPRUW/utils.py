"""
Utility functions for the segmented PRUW simulator
"""

import json
import os
from fractions import Fraction

from config import OUTPUT_CONFIG


def parse_fraction(value):
    """
    Parse a rate given as a number or a fraction string

    Args:
        value: Fraction, int, float, or string such as "1/4" or "0.25"

    Returns:
        Fraction: The exact rational value

    Raises:
        ValueError: If the value is not a rational number
    """
    if isinstance(value, Fraction):
        return value
    if isinstance(value, bool):
        raise ValueError(f"Expected a rational number, got: {value!r}")
    try:
        return Fraction(str(value).strip())
    except (ValueError, ZeroDivisionError):
        raise ValueError(f"Expected a rational number such as 1/4, got: {value!r}")


def parse_int_list(list_string):
    """
    Parse comma-separated integers

    Args:
        list_string: String such as "1,2,3,6,9"

    Returns:
        list: Parsed integers, empty entries dropped

    Raises:
        ValueError: If an entry is not an integer
    """
    if not list_string:
        return []

    items = [item.strip() for item in str(list_string).split(',')]
    try:
        return [int(item) for item in items if item]
    except ValueError:
        raise ValueError(f"Expected comma-separated integers, got: {list_string}")


def format_fraction(value):
    """
    Format a rational cost for display

    Args:
        value: Fraction or number

    Returns:
        str: "a/b (decimal)" for non-integers, plain integer otherwise
    """
    value = Fraction(value)
    if value.denominator == 1:
        return str(value.numerator)
    precision = OUTPUT_CONFIG['float_precision']
    return f"{value} ({float(value):.{precision}f})"


def ensure_output_dir(path):
    """
    Create an output directory if needed

    Args:
        path: Directory path

    Returns:
        str: The same path
    """
    os.makedirs(path, exist_ok=True)
    return path


def dump_json(data):
    """Deterministic JSON text: sorted keys, fixed indent, trailing newline"""
    return json.dumps(data, indent=OUTPUT_CONFIG['json_indent'], sort_keys=True) + '\n'


def write_json(path, data):
    with open(path, 'w', encoding='utf-8') as f:
        f.write(dump_json(data))
    return path
