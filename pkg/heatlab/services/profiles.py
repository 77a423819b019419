from __future__ import annotations

import dataclasses
import datetime
import json
import logging
import threading
import warnings
from pathlib import Path
from typing import Iterable, Optional

import numpy as np

from ..config import settings
from ..errors import AccuracyWarning, ConfigError
from ..models import ConstantProfile, ProcessModel, RenewalTable
from ..processors import free_kernel as fk

logger = logging.getLogger(__name__)

_lock = threading.Lock()
_cache: dict[Path, dict[str, ConstantProfile]] = {}


def load_profiles(path: Optional[Path] = None) -> dict[str, ConstantProfile]:
    path = Path(path or settings.profiles_path)
    with _lock:
        if path in _cache:
            return _cache[path]
    if not path.exists():
        raise ConfigError(f"profile file {path} does not exist", field="profile")
    raw = json.loads(path.read_text(encoding="utf-8"))
    try:
        profiles = {name: ConstantProfile(name=name, **values) for name, values in raw.items()}
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"invalid profile in {path}: {exc}", field="profile") from exc
    with _lock:
        _cache[path] = profiles
    return profiles


def get_profile(name: str, path: Optional[Path] = None) -> ConstantProfile:
    profiles = load_profiles(path)
    if name not in profiles:
        raise ConfigError(
            f"unknown profile {name!r}; available: {', '.join(sorted(profiles))}", field="profile"
        )
    return profiles[name]


def save_profile(profile: ConstantProfile, path: Optional[Path] = None) -> Path:
    """Add or replace `profile` in the profile file."""
    path = Path(path or settings.profiles_path)
    raw = json.loads(path.read_text(encoding="utf-8")) if path.exists() else {}
    values = dataclasses.asdict(profile)
    values.pop("name")
    raw[profile.name] = values
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(raw, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    with _lock:
        _cache.pop(path, None)
    logger.info("saved profile %s to %s", profile.name, path)
    return path


def calibrate_profile(
        model: ProcessModel,
        table: RenewalTable,
        times: Iterable[float],
        radii: Iterable[float],
        *,
        name: str,
        base: Optional[ConstantProfile] = None,
) -> ConstantProfile:
    """
    Kernel constants measured as the extreme ratios p_free / expression over
    the (t, r) grid, clipped so that low <= 1 <= up. Survival, factorization
    and exit-time constants are carried over from `base`.
    """
    base = base or get_profile("default")
    window = fk.scaling_window(model, table)
    pairs = [
        (float(t), float(r))
        for t in times
        for r in radii
        if window is None or (t < window[0] and r < window[1])
    ]
    if not pairs:
        raise ConfigError("calibration grid lies outside the scaling window", field="grids")
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", AccuracyWarning)
        density = fk.p_free_grid(model, pairs)
    expression = np.array([fk.kernel_expression(table, model.dimension, t, r)[0] for t, r in pairs])
    ratio = density / expression
    if not np.all(np.isfinite(ratio)) or np.any(ratio <= 0):
        raise ConfigError("free kernel is not positive on the calibration grid", field="grids")
    low, up = float(ratio.min()), float(ratio.max())
    logger.info("calibrated kernel constants for %s: [%.4g, %.4g] over %d points", model.fingerprint, low, up, len(pairs))
    ts = sorted({t for t, _ in pairs})
    rs = sorted({r for _, r in pairs})
    return dataclasses.replace(
        base,
        name=name,
        kernel_low=min(low, 1.0),
        kernel_up=max(up, 1.0),
        provenance=(
            f"calibrated {model.fingerprint} ({table.backend}) on t in [{ts[0]:g}, {ts[-1]:g}] x {len(ts)}, "
            f"r in [{rs[0]:g}, {rs[-1]:g}] x {len(rs)}; {datetime.date.today().isoformat()}"
        ),
    )

