"""Flat ``key = value`` run configuration.

Blank lines and lines starting with ``#`` are ignored. There are no inline
comments, so color values like ``#1f4e9c`` need no quoting. Unknown keys and
out-of-range values raise :class:`ConfigError` naming the key.
"""
from __future__ import annotations

import hashlib
from dataclasses import dataclass, fields, replace
from pathlib import Path

from cvtnet.depstats import CDF_MODES, CORRELATION_KINDS


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class RunConfig:
    data: str = ""  # empty: bundled Iris
    label_column: str = "species"
    train_fraction: float = 0.8
    seed: int = 7
    normalize: str = "minmax"
    hidden: tuple[int, ...] = (6, 6)
    learning_rate: float = 0.02
    momentum: float = 0.9
    epochs: int = 1000
    batch_size: int = 16
    cdf_mode: str = "histogram"
    bins: int = 20
    correlation: str = "kendall_tau_b"
    n_trees: int = 100
    max_features: str = "sqrt"
    bootstrap: bool = True
    min_samples_split: int = 2
    render_threshold: float = 0.5
    color_low: str = "#1f4e9c"
    color_high: str = "#c0182a"
    output_dir: str = "cvt_out"

    def echo(self, with_output_dir: bool = True) -> str:
        """Normalized text form; stable across runs and key order."""
        lines = []
        for f in fields(self):
            if f.name == "output_dir" and not with_output_dir:
                continue
            v = getattr(self, f.name)
            if isinstance(v, tuple):
                v = ",".join(str(x) for x in v)
            elif isinstance(v, bool):
                v = "true" if v else "false"
            elif isinstance(v, float):
                v = repr(v)
            lines.append(f"{f.name} = {v}")
        return "\n".join(lines) + "\n"

    def digest(self) -> str:
        # output_dir does not change results
        return hashlib.sha256(self.echo(with_output_dir=False).encode()).hexdigest()[:16]


_CORRELATION_ALIASES = {"kendall": "kendall_tau_b", "kendall_tau": "kendall_tau_b",
                        "tau": "kendall_tau_b"}


def _parse_value(key: str, raw: str, kind):
    raw = raw.strip()
    try:
        if kind is bool:
            low = raw.lower()
            if low in ("true", "yes", "on", "1"):
                return True
            if low in ("false", "no", "off", "0"):
                return False
            raise ValueError(raw)
        if kind is int:
            return int(raw)
        if kind is float:
            return float(raw)
        if key == "hidden":
            return tuple(int(p) for p in raw.replace(" ", "").split(",") if p)
        return raw
    except ValueError:
        raise ConfigError(f"{key}: cannot parse {raw!r}") from None


_TYPES = {"train_fraction": float, "seed": int, "learning_rate": float, "momentum": float,
          "epochs": int, "batch_size": int, "bins": int, "n_trees": int,
          "bootstrap": bool, "min_samples_split": int, "render_threshold": float}


def _check(cfg: RunConfig) -> RunConfig:
    def bad(key, why):
        raise ConfigError(f"{key}: {why} (got {getattr(cfg, key)!r})")

    if not 0 < cfg.train_fraction < 1:
        bad("train_fraction", "must lie in (0, 1)")
    if cfg.seed < 0:
        bad("seed", "must be >= 0")
    if cfg.normalize not in ("none", "minmax"):
        bad("normalize", "must be 'none' or 'minmax'")
    if not cfg.hidden or any(w < 1 for w in cfg.hidden):
        bad("hidden", "needs at least one positive width")
    if not cfg.learning_rate > 0:
        bad("learning_rate", "must be > 0")
    if not 0 <= cfg.momentum < 1:
        bad("momentum", "must lie in [0, 1)")
    if cfg.epochs < 0:
        bad("epochs", "must be >= 0")
    if cfg.batch_size < 1:
        bad("batch_size", "must be >= 1")
    if cfg.cdf_mode not in CDF_MODES:
        bad("cdf_mode", f"must be one of {', '.join(CDF_MODES)}")
    if cfg.bins < 1:
        bad("bins", "must be >= 1")
    if cfg.correlation not in CORRELATION_KINDS:
        bad("correlation", f"must be one of {', '.join(CORRELATION_KINDS)}")
    if cfg.n_trees < 1:
        bad("n_trees", "must be >= 1")
    if cfg.max_features not in ("sqrt", "all"):
        bad("max_features", "must be 'sqrt' or 'all'")
    if cfg.min_samples_split < 2:
        bad("min_samples_split", "must be >= 2")
    if not 0 <= cfg.render_threshold <= 1:
        bad("render_threshold", "must lie in [0, 1]")
    for key in ("color_low", "color_high"):
        c = getattr(cfg, key)
        if len(c) != 7 or c[0] != "#" or any(ch not in "0123456789abcdefABCDEF" for ch in c[1:]):
            bad(key, "must be #rrggbb")
    if not cfg.output_dir:
        bad("output_dir", "must not be empty")
    return cfg


def apply_overrides(cfg: RunConfig, pairs) -> RunConfig:
    """Apply ``(key, raw_value)`` pairs on top of ``cfg``."""
    known = {f.name for f in fields(RunConfig)}
    updates = {}
    for key, raw in pairs:
        key = key.strip()
        if key not in known:
            raise ConfigError(f"{key}: unknown key")
        value = _parse_value(key, raw, _TYPES.get(key, str))
        if key == "correlation":
            value = _CORRELATION_ALIASES.get(value, value)
        updates[key] = value
    return _check(replace(cfg, **updates))


def parse_config_text(text: str) -> list[tuple[str, str]]:
    pairs = []
    for n, line in enumerate(text.splitlines(), start=1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ConfigError(f"line {n}: expected 'key = value', got {line!r}")
        key, value = line.split("=", 1)
        pairs.append((key.strip(), value.strip()))
    return pairs


def validate_config(path=None, overrides=()) -> RunConfig:
    """Defaults, then file keys, then ``overrides``; validated."""
    pairs = []
    if path is not None:
        path = Path(path)
        try:
            pairs = parse_config_text(path.read_text(encoding="utf-8"))
        except OSError as exc:
            raise ConfigError(f"config: cannot read {path} ({exc.strerror})") from None
    return apply_overrides(RunConfig(), [*pairs, *overrides])
