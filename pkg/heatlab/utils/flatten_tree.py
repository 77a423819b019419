from __future__ import annotations

import hashlib
import json
from typing import Any


def flatten_tree(tree: dict[str, Any], prefix: str = "") -> dict[str, Any]:
    """Nested tables to dotted keys in sorted order; lists stay leaves."""
    flat: dict[str, Any] = {}
    for key in sorted(tree):
        value = tree[key]
        full_key = f"{prefix}.{key}" if prefix else str(key)
        if isinstance(value, dict):
            flat.update(flatten_tree(value, full_key))
        else:
            flat[full_key] = value
    return flat


def echo_lines(tree: dict[str, Any]) -> list[str]:
    """`key = value` lines used as the config echo in artifact headers."""
    return [f"{key} = {json.dumps(value, default=str)}" for key, value in flatten_tree(tree).items()]


def tree_hash(tree: dict[str, Any]) -> str:
    payload = json.dumps(flatten_tree(tree), sort_keys=True, default=str, separators=(",", ":"))
    return hashlib.sha256(payload.encode()).hexdigest()[:12]
