"""Audit configuration: thresholds, lexicons, and value-matching policy."""
from __future__ import annotations

import json
from dataclasses import dataclass, field, fields

DEFAULT_WHITELIST = frozenset({0.0, 1.0, -1.0, 100.0})

DEFAULT_GENERIC_LABELS = frozenset(
    {"cost", "costs", "total", "margin", "rate", "value", "amount", "wages"}
)

DEFAULT_INPUT_SECTION_LABELS = frozenset(
    {"assumptions", "inputs", "input", "data", "parameters"}
)

# label substring -> numfmt classes it announces
DEFAULT_UNIT_CUES: dict[str, tuple[str, ...]] = {
    "%": ("percent",),
    "percent": ("percent",),
    "percentage": ("percent",),
    "$": ("currency",),
    "cost": ("currency",),
    "salary": ("currency",),
    "expense": ("currency",),
    "bid": ("currency",),
    "wage": ("currency",),
    "hours": ("general", "integer"),
    "days": ("general", "integer"),
    "ft": ("general", "integer"),
    "cu": ("general", "integer"),
}

_SUPPORTED_SYNTHESIS_OPS = ("+", "*")


class ConfigError(ValueError):
    """Raised for malformed or out-of-range configuration documents."""


@dataclass(frozen=True)
class AuditConfig:
    """Tunable audit policy. Defaults suit small single-screen models."""

    whitelist_literals: frozenset[float] = DEFAULT_WHITELIST
    tolerance_abs: float = 1e-6
    tolerance_rel: float = 1e-9
    max_blank_run: int = 8
    backward_arc_ratio_max: float = 0.2
    screen_rows: int = 50
    screen_cols: int = 26
    generic_labels: frozenset[str] = DEFAULT_GENERIC_LABELS
    unit_cues: dict[str, tuple[str, ...]] = field(
        default_factory=lambda: dict(DEFAULT_UNIT_CUES)
    )
    input_section_labels: frozenset[str] = DEFAULT_INPUT_SECTION_LABELS
    synthesis_ops: tuple[str, ...] = ("+", "*")
    synthesis_max_operands: int = 3
    synthesis_cell_cap: int = 300

    def __post_init__(self) -> None:
        if self.tolerance_abs <= 0 or self.tolerance_rel <= 0:
            raise ConfigError("tolerances must be positive")
        for name in ("max_blank_run", "screen_rows", "screen_cols",
                     "synthesis_max_operands", "synthesis_cell_cap"):
            if getattr(self, name) <= 0:
                raise ConfigError(f"{name} must be positive")
        bad = [op for op in self.synthesis_ops if op not in _SUPPORTED_SYNTHESIS_OPS]
        if bad:
            raise ConfigError(f"unsupported synthesis ops: {bad}")

    def values_close(self, a: float, b: float) -> bool:
        """Single value-matching rule shared by every detector."""
        return abs(a - b) <= max(self.tolerance_abs,
                                 self.tolerance_rel * max(abs(a), abs(b)))

    def is_whitelisted(self, value: float) -> bool:
        return any(self.values_close(value, w) for w in self.whitelist_literals)


def load_config(text: str) -> AuditConfig:
    """Parse a JSON configuration document; absent fields keep defaults."""
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"invalid config document: {exc}") from exc
    if not isinstance(data, dict):
        raise ConfigError("config document must be an object")

    known = {f.name for f in fields(AuditConfig)}
    unknown = sorted(set(data) - known)
    if unknown:
        raise ConfigError(f"unknown config keys: {', '.join(unknown)}")

    kwargs: dict[str, object] = {}
    for key, raw in data.items():
        if key == "whitelist_literals":
            kwargs[key] = frozenset(float(v) for v in _expect_list(key, raw))
        elif key in ("generic_labels", "input_section_labels"):
            kwargs[key] = frozenset(str(v) for v in _expect_list(key, raw))
        elif key == "unit_cues":
            if not isinstance(raw, dict):
                raise ConfigError("unit_cues must be an object")
            kwargs[key] = {
                str(cue): tuple(str(c) for c in _expect_list(cue, classes))
                for cue, classes in raw.items()
            }
        elif key == "synthesis_ops":
            kwargs[key] = tuple(str(v) for v in _expect_list(key, raw))
        elif key in ("tolerance_abs", "tolerance_rel", "backward_arc_ratio_max"):
            kwargs[key] = float(_expect_number(key, raw))
        else:
            kwargs[key] = int(_expect_number(key, raw))
    try:
        return AuditConfig(**kwargs)
    except TypeError as exc:
        raise ConfigError(str(exc)) from exc


def _expect_list(key: str, raw: object) -> list:
    if not isinstance(raw, list):
        raise ConfigError(f"{key} must be an array")
    return raw


def _expect_number(key: str, raw: object) -> float:
    if isinstance(raw, bool) or not isinstance(raw, (int, float)):
        raise ConfigError(f"{key} must be a number")
    return raw
