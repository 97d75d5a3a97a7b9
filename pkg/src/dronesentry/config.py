"""One configuration object for every knob in the pipeline.

Loadable from a JSON file with the same nested layout; unknown keys are
errors. CLI overrides use dotted paths, e.g. ``rules.min_support=0.1``.
"""

import dataclasses
import json
from dataclasses import dataclass, field

from .detectors import DEFAULT_FEATURES
from .errors import ConfigError
from .rules import (
    DEFAULT_BINS,
    DEFAULT_HOLDING_THRESHOLD,
    DEFAULT_LATENCY_MS,
    DEFAULT_MIN_SUPPORT,
    DEFAULT_WIDEN_BUDGET,
    RULE_CATEGORICAL_FEATURES,
    RULE_NUMERIC_FEATURES,
)


@dataclass
class PhaseConfig:
    alt_tol_m: float = 0.5
    pos_tol_m: float = 1.0


@dataclass
class RulesConfig:
    min_support: float = DEFAULT_MIN_SUPPORT
    holding_threshold: float = DEFAULT_HOLDING_THRESHOLD
    widen_budget: float = DEFAULT_WIDEN_BUDGET
    bins: int = DEFAULT_BINS
    latency_ms: int = DEFAULT_LATENCY_MS
    numeric_features: tuple[str, ...] = RULE_NUMERIC_FEATURES
    categorical_features: tuple[str, ...] = RULE_CATEGORICAL_FEATURES


@dataclass
class DetectConfig:
    features: tuple[str, ...] = DEFAULT_FEATURES
    max_train: int = 450
    kmeans_k: int = 5
    kmeans_threshold_pct: float = 99.5
    dbscan_eps: float | None = None       # None: 90th pct of 4-NN distances
    dbscan_min_pts: int = 5
    optics_min_pts: int = 5
    optics_threshold_pct: float = 99.0
    lof_k: int = 20
    lof_threshold: float = 1.5
    ocsvm_nu: float = 0.05
    ocsvm_gamma: float | None = None      # None: 1 / (d * mean feature variance)


@dataclass
class WindowConfig:
    length: int = 10
    alert_fraction: float = 0.3
    sustained_run: int = 3


@dataclass
class Config:
    phase: PhaseConfig = field(default_factory=PhaseConfig)
    rules: RulesConfig = field(default_factory=RulesConfig)
    detect: DetectConfig = field(default_factory=DetectConfig)
    window: WindowConfig = field(default_factory=WindowConfig)

    def to_dict(self) -> dict:
        def convert(obj):
            if dataclasses.is_dataclass(obj):
                return {f.name: convert(getattr(obj, f.name))
                        for f in dataclasses.fields(obj)}
            if isinstance(obj, tuple):
                return list(obj)
            return obj
        return convert(self)

    @classmethod
    def from_dict(cls, doc: dict) -> "Config":
        cfg = cls()
        for section, values in doc.items():
            if not hasattr(cfg, section):
                raise ConfigError(f"unknown config section {section!r}")
            sub = getattr(cfg, section)
            if not isinstance(values, dict):
                raise ConfigError(f"section {section!r} must be an object")
            for key, value in values.items():
                if not hasattr(sub, key):
                    raise ConfigError(f"unknown config key {section}.{key}")
                setattr(sub, key, _coerce(getattr(sub, key), value, f"{section}.{key}"))
        return cfg

    @classmethod
    def load(cls, path) -> "Config":
        try:
            with open(path, encoding="utf-8") as fh:
                doc = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        return cls.from_dict(doc)

    def apply_override(self, dotted: str):
        """Apply one ``section.key=value`` override."""
        path, _, raw = dotted.partition("=")
        if not _:
            raise ConfigError(f"override must look like section.key=value: {dotted!r}")
        section, _, key = path.strip().partition(".")
        if not key or not hasattr(self, section):
            raise ConfigError(f"unknown config key {path!r}")
        sub = getattr(self, section)
        if not hasattr(sub, key):
            raise ConfigError(f"unknown config key {path!r}")
        current = getattr(sub, key)
        setattr(sub, key, _coerce(current, _parse_raw(raw), path))


def _parse_raw(raw: str):
    raw = raw.strip()
    try:
        return json.loads(raw)
    except json.JSONDecodeError:
        return raw


def _coerce(current, value, name: str):
    if current is None or value is None:
        return value
    if isinstance(current, bool):
        if isinstance(value, bool):
            return value
    elif isinstance(current, int) and not isinstance(current, bool):
        if isinstance(value, (int, float)) and float(value).is_integer():
            return int(value)
    elif isinstance(current, float):
        if isinstance(value, (int, float)):
            return float(value)
    elif isinstance(current, tuple):
        if isinstance(value, (list, tuple)):
            return tuple(value)
    elif isinstance(current, str):
        if isinstance(value, str):
            return value
    else:
        return value
    raise ConfigError(f"bad value for {name}: {value!r}")
