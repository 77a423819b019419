from __future__ import annotations

import sys
from typing import Any, Iterable

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib


def parse_override(text: str) -> tuple[str, Any]:
    """
    "grids.times=[0.1, 1]" -> ("grids.times", [0.1, 1.0]).

    The right-hand side is read as a TOML value; anything that does not parse
    is kept as a bare string.
    """
    key, sep, raw = text.partition("=")
    key = key.strip()
    if not sep or not key or any(not part for part in key.split(".")):
        raise ValueError(f"override {text!r} is not of the form dotted.key=value")
    raw = raw.strip()
    try:
        value = tomllib.loads(f"v = {raw}")["v"]
    except tomllib.TOMLDecodeError:
        value = raw
    return key, value


def build_tree(flat: dict[str, Any]) -> dict[str, Any]:
    """{"model.alpha": 1.5} -> {"model": {"alpha": 1.5}}"""
    tree: dict[str, Any] = {}
    for key, value in flat.items():
        *parents, leaf = key.split(".")
        node = tree
        for part in parents:
            child = node.setdefault(part, {})
            if not isinstance(child, dict):
                raise ValueError(f"override {key!r} descends into the scalar {part!r}")
            node = child
        node[leaf] = value
    return tree


def merge_tree(base: dict[str, Any], overlay: dict[str, Any]) -> dict[str, Any]:
    """Deep merge; overlay scalars and lists replace, tables merge key by key."""
    merged = dict(base)
    for key, value in overlay.items():
        if isinstance(value, dict) and isinstance(merged.get(key), dict):
            merged[key] = merge_tree(merged[key], value)
        else:
            merged[key] = value
    return merged


def apply_overrides(tree: dict[str, Any], overrides: Iterable[str]) -> dict[str, Any]:
    flat = dict(parse_override(item) for item in overrides)
    return merge_tree(tree, build_tree(flat)) if flat else tree
