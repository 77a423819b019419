from __future__ import annotations

import logging
import re
import sys
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Iterable, Optional

from pydantic import ValidationError

from ..errors import ConfigError
from ..schemas.campaign import CampaignConfig
from ..utils.build_tree import apply_overrides
from ..utils.flatten_tree import echo_lines, tree_hash

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

logger = logging.getLogger(__name__)

_AT_LINE = re.compile(r"line (\d+)")
_HEADER = re.compile(r"^\s*\[\s*([A-Za-z0-9_.\-]+)\s*\]\s*(#.*)?$")
_KEY = re.compile(r"^\s*([A-Za-z0-9_\-]+)\s*=")


@dataclass(frozen=True)
class LoadedCampaign:
    config: CampaignConfig
    tree: dict[str, Any]
    config_hash: str
    source: Optional[Path] = None

    @property
    def echo(self) -> list[str]:
        return echo_lines(self.tree)


# ----------------------------
# Loading
# ----------------------------
def load_campaign(path: Path | str, overrides: Iterable[str] = ()) -> LoadedCampaign:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc.strerror or exc}", field="path") from exc
    return parse_campaign(text, overrides, source=path)


def parse_campaign(text: str, overrides: Iterable[str] = (), *, source: Optional[Path] = None) -> LoadedCampaign:
    try:
        tree = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        match = _AT_LINE.search(str(exc))
        raise ConfigError(f"TOML syntax error: {exc}", line=int(match.group(1)) if match else None) from exc

    try:
        tree = apply_overrides(tree, overrides)
    except ValueError as exc:
        raise ConfigError(str(exc), field="--set") from exc

    try:
        config = CampaignConfig.model_validate(tree)
    except ValidationError as exc:
        first = exc.errors()[0]
        loc = _dotted(first["loc"])
        raise ConfigError(
            f"{loc or 'config'}: {first['msg']}",
            field=loc or None,
            line=locate_key(text, first["loc"]),
        ) from exc

    # the hash covers the validated tree, so defaults count as configuration
    resolved = config.model_dump(mode="json")
    logger.info("loaded campaign %s (%s)", source or "<text>", tree_hash(resolved))
    return LoadedCampaign(config=config, tree=resolved, config_hash=tree_hash(resolved), source=source)


# ----------------------------
# Helpers
# ----------------------------
def _dotted(loc: tuple) -> str:
    # discriminated unions insert the tag ("model", "stable", "alpha"); drop it
    parts = [str(p) for p in loc if not isinstance(p, int)]
    if len(parts) >= 3 and parts[0] in ("model", "domain"):
        parts.pop(1)
    return ".".join(parts)


def locate_key(text: str, loc: tuple) -> Optional[int]:
    """Line of the deepest key of `loc` present in the TOML source, else of its table header."""
    parts = [str(p) for p in loc if not isinstance(p, int)]
    if not parts:
        return None
    table = ""
    header_line: Optional[int] = None
    best: Optional[int] = None
    for number, line in enumerate(text.splitlines(), start=1):
        header = _HEADER.match(line)
        if header:
            table = header.group(1)
            if table == parts[0]:
                header_line = number
            continue
        key = _KEY.match(line)
        if not key:
            continue
        name = key.group(1)
        if not table and name == parts[0]:
            best = number
        elif table == parts[0] and name in parts[1:]:
            best = number
    return best or header_line
