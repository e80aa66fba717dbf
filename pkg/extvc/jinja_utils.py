"""Jinja util functions"""
from typing import Any, Iterable, List, Optional
from fractions import Fraction

import jinja2

from extvc.lattice import format_subset


__all__ = [
    "filter_fraction",
    "filter_subset",
    "filter_family",
    "filter_percent",
    "create_jinja_env",
]


def filter_fraction(value: Any) -> str:
    """Jinja filter to print a rational as ``p/q`` (integers without denominator).

    Args:
        value (Any): Anything ``Fraction`` accepts.

    Returns:
        str: Formatted rational, empty for ``None``.
    """
    if value is None:
        return ""
    value = Fraction(value)
    if value.denominator == 1:
        return str(value.numerator)
    return f"{value.numerator}/{value.denominator}"


def filter_percent(value: Any, digits: int = 1) -> str:
    if value is None:
        return ""
    return f"{float(value) * 100:.{digits}f}%"


def filter_subset(value: Any) -> str:
    """Jinja filter to print a subset bitmask as ``{1,3}``.

    Args:
        value (Any): Subset bitmask.

    Returns:
        str: Formatted subset.
    """
    return format_subset(int(value))


def filter_family(value: Iterable[int]) -> str:
    """Jinja filter to print a family (or any iterable of bitmasks) in canonical order.

    Args:
        value (Iterable[int]): Family members.

    Returns:
        str: Formatted family, e.g. ``{{1}, {2}, {1,2}}``.
    """
    return "{" + ", ".join(format_subset(m) for m in sorted(value)) + "}"


def create_jinja_env(
    paths: Optional[List[str]],
    search_paths: Optional[List[str]],
    pkg_path: str,
    check: Optional[str] = None,
) -> jinja2.Environment:
    all_paths = paths or search_paths or []
    loaders: List[jinja2.BaseLoader] = [
        jinja2.FileSystemLoader(searchpath=path) for path in all_paths
    ]
    loaders.append(jinja2.PackageLoader("extvc", pkg_path))
    env = jinja2.Environment(
        loader=jinja2.ChoiceLoader(loaders), trim_blocks=True, lstrip_blocks=True
    )
    if check:
        env.get_template(check)  # canary, fails early when no search path holds the templates

    env.filters["fraction"] = filter_fraction
    env.filters["percent"] = filter_percent
    env.filters["subset"] = filter_subset
    env.filters["family"] = filter_family

    return env
