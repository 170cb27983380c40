"""Scenario parameters and the flat ``key=value`` config format."""
from __future__ import annotations

import dataclasses
import math
import re
from dataclasses import dataclass


def db_to_linear(db: float) -> float:
    return 10.0 ** (db / 10.0)


def linear_to_db(x: float) -> float:
    return 10.0 * math.log10(x)


FAST_EPS_U = 1e-3


class ConfigError(ValueError):
    """Raised for malformed or inconsistent scenario configs."""


@dataclass(frozen=True)
class ScenarioConfig:
    """Physical parameters of one slicing scenario, all gains linear.

    ``n_per_resource`` (symbols per resource) is informational only; the rate
    analysis is asymptotic in the blocklength.
    """

    gamma_b: float
    gamma_u: float
    gamma_m: float
    eps_b: float
    eps_u: float
    eps_m: float
    f: int
    s: int
    a_u: float
    r_m: float
    f_u: int = 0
    n_per_resource: int | None = None
    # smoke-test mode: eps_u may equal eps_b
    fast: int = 0

    def __post_init__(self):
        for name in ("gamma_b", "gamma_u", "gamma_m", "r_m"):
            if not getattr(self, name) > 0:
                raise ConfigError(f"{name} must be > 0")
        for name in ("eps_b", "eps_u", "eps_m"):
            if not 0 < getattr(self, name) < 1:
                raise ConfigError(f"{name} must lie in (0, 1)")
        if self.fast not in (0, 1):
            raise ConfigError("fast must be 0 or 1")
        if not (self.eps_u < self.eps_b or (self.fast and self.eps_u == self.eps_b)):
            raise ConfigError("eps_u must be < eps_b")
        if not self.eps_b < self.eps_m:
            raise ConfigError("eps_b must be < eps_m")
        if self.f < 1:
            raise ConfigError("f must be >= 1")
        if not 0 <= self.f_u <= self.f:
            raise ConfigError("f_u must satisfy 0 <= f_u <= f")
        if self.s < 1:
            raise ConfigError("s must be >= 1")
        if not 0 <= self.a_u <= 1:
            raise ConfigError("a_u must lie in [0, 1]")

    def replace(self, **changes) -> ScenarioConfig:
        return dataclasses.replace(self, **changes)

    def to_items(self) -> list[tuple[str, str]]:
        items = []
        for fld in dataclasses.fields(self):
            value = getattr(self, fld.name)
            if value is None or (fld.name == "fast" and not value):
                continue
            items.append((fld.name, repr(value) if isinstance(value, float) else str(value)))
        return items

    def fast_variant(self, eps_u: float = FAST_EPS_U) -> ScenarioConfig:
        """Copy with the URLLC target loosened to ``eps_u`` for quick runs."""
        return self.replace(eps_u=max(self.eps_u, eps_u), fast=1)

    def to_text(self) -> str:
        return "".join(f"{k}={v}\n" for k, v in self.to_items())


_GAIN_KEYS = ("gamma_b", "gamma_u", "gamma_m")
_FLOAT_KEYS = ("eps_b", "eps_u", "eps_m", "a_u", "r_m")
_INT_KEYS = ("f", "s", "f_u", "n_per_resource", "fast")
_OPTIONAL = {"f_u", "n_per_resource", "fast"}
VALID_KEYS = tuple(sorted(
    list(_GAIN_KEYS) + [k + "_db" for k in _GAIN_KEYS] + list(_FLOAT_KEYS) + list(_INT_KEYS)
))

_TOKEN = re.compile(r"^([A-Za-z_][A-Za-z0-9_]*)=(\S+)$")


def parse_config(text: str) -> ScenarioConfig:
    """Parse whitespace-separated ``key=value`` pairs; ``#`` starts a comment.

    Gains may be given linear (``gamma_b=10``) or in dB (``gamma_b_db=10``).
    """
    values: dict[str, object] = {}
    seen_at: dict[str, int] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        for token in line.split():
            m = _TOKEN.match(token)
            if not m:
                raise ConfigError(f"line {lineno}: expected key=value, got {token!r}")
            key, val = m.groups()
            if key not in VALID_KEYS:
                raise ConfigError(f"line {lineno}: unknown key {key!r}; valid keys: {', '.join(VALID_KEYS)}")
            field_name = key[:-3] if key.endswith("_db") else key
            if field_name in seen_at:
                raise ConfigError(f"line {lineno}: {field_name} already set on line {seen_at[field_name]}")
            seen_at[field_name] = lineno
            try:
                if key in _INT_KEYS:
                    parsed: object = int(val)
                else:
                    parsed = float(val)
            except ValueError:
                raise ConfigError(f"line {lineno}: {key} expects a number, got {val!r}") from None
            if key.endswith("_db"):
                parsed = db_to_linear(parsed)
            values[field_name] = parsed
    required = [f.name for f in dataclasses.fields(ScenarioConfig) if f.name not in _OPTIONAL]
    missing = [k for k in required if k not in values]
    if missing:
        raise ConfigError(f"missing required key(s): {', '.join(missing)}")
    return ScenarioConfig(**values)


def load_config(path) -> ScenarioConfig:
    with open(path, encoding="utf-8") as fh:
        return parse_config(fh.read())
