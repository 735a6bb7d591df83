"""``key=value`` configuration files for :class:`DetectorConfig`.

Blank lines and ``#`` comments are ignored.  Unknown keys are an error so a
typo never silently falls back to a default.
"""

from __future__ import annotations

from dataclasses import replace
from pathlib import Path
from typing import Optional

from .detector import DetectorConfig
from .errors import ConfigError

# key -> (section, attribute, parser); section None is DetectorConfig itself
KEYS = {
    "alpha_s": (None, "alpha_s", float),
    "alpha_1": (None, "alpha_1", float),
    "alpha_2": (None, "alpha_2", float),
    "k_min": (None, "k_min", int),
    "k_max": (None, "k_max", int),
    "piece_edge": ("grid", "piece_edge", int),
    "sample_fraction": ("grid", "sample_fraction", float),
    "ransac_iterations": ("ransac", "iterations", int),
    "inlier_threshold": ("ransac", "inlier_threshold", float),
    "seed": ("ransac", "seed", int),
    "model": (None, "model_kind", str),
    "threshold": (None, "threshold_kind", str),
    "fixed_threshold": (None, "fixed_threshold", float),
    "interval": (None, "interval_kind", str),
    "fixed_interval": (None, "fixed_interval", int),
    "norm": (None, "norm", str),
}


def parse_config(text: str, base: Optional[DetectorConfig] = None, source: str = "<config>") -> DetectorConfig:
    top: dict = {}
    sections: dict = {"grid": {}, "ransac": {}}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = (part.strip() for part in line.partition("="))
        if not sep:
            raise ConfigError(f"{source}:{lineno}: expected key=value, got {raw!r}")
        if key not in KEYS:
            raise ConfigError(f"{source}:{lineno}: unknown key {key!r}")
        section, attr, conv = KEYS[key]
        try:
            parsed = conv(value)
        except ValueError:
            raise ConfigError(f"{source}:{lineno}: bad value {value!r} for {key}") from None
        (top if section is None else sections[section])[attr] = parsed

    cfg = base or DetectorConfig()
    try:
        grid = replace(cfg.grid, **sections["grid"])
        ransac = replace(cfg.ransac, **sections["ransac"])
        return replace(cfg, grid=grid, ransac=ransac, **top)
    except ValueError as exc:
        raise ConfigError(f"{source}: {exc}") from None


def load_config(path) -> DetectorConfig:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    return parse_config(text, source=str(path))


def config_items(cfg: DetectorConfig) -> list[tuple[str, object]]:
    """Every settable key with its current value, in a stable order."""
    out = []
    for key, (section, attr, _) in KEYS.items():
        holder = cfg if section is None else getattr(cfg, section)
        out.append((key, getattr(holder, attr)))
    return out


def format_config(cfg: DetectorConfig) -> str:
    return "".join(f"{k}={v}\n" for k, v in config_items(cfg))

