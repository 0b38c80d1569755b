"""Versioned JSON experiment configuration.

Schema (version 1); every key except ``version`` is optional::

    {
      "version": 1,
      "suite": "lemma_326",
      "domain": {"dimension": 1, "L": 0, "J": 8, "shifts": [[0]]},
      "J_sweep": [6, 8, 10],
      "expressions": {"p": "2 + 0.5*sin(3*x1)", "w": "abs(x1)^0.2"},
      "operator": {"kind": "czo", "kernel": "hilbert", "alpha": 0.5, "m": 1},
      "trials": 100,
      "seed": 0,
      "slack": 8.0,
      "tolerances": {"rel": 1e-7},
      "params": {"s": 2.0},
      "output": {"dir": "out"}
    }

Expressions are parsed at load time against the configured dimension, so a
config that loads is one whose names all resolve.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

from ..expr import ExpressionError, parse_expression
from ..grid import Domain, GridError

SCHEMA_VERSION = 1

_TOP_KEYS = {
    "version", "suite", "domain", "J_sweep", "expressions", "operator",
    "trials", "seed", "slack", "tolerances", "params", "output",
}
_DOMAIN_KEYS = {"dimension", "L", "J", "shifts"}
_OPERATOR_KEYS = {"kind", "kernel", "alpha", "m"}


class ConfigError(ValueError):
    """Raised for any malformed or inconsistent configuration."""


def _int(value, name, lo=None) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise ConfigError(f"{name} must be an integer, got {value!r}")
    if lo is not None and value < lo:
        raise ConfigError(f"{name} must be >= {lo}, got {value}")
    return value


def _num(value, name, positive=False) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)) or not math.isfinite(value):
        raise ConfigError(f"{name} must be a finite number, got {value!r}")
    if positive and not value > 0:
        raise ConfigError(f"{name} must be positive, got {value}")
    return float(value)


def _keys(d, allowed, where):
    if not isinstance(d, dict):
        raise ConfigError(f"{where} must be an object")
    extra = set(d) - allowed
    if extra:
        raise ConfigError(f"unknown key(s) in {where}: {', '.join(sorted(extra))}")


@dataclass(frozen=True)
class ExperimentConfig:
    suite: str | None = None
    dimension: int = 1
    L: int = 0
    J: int = 8
    shifts: tuple | None = None
    J_sweep: tuple | None = None
    expressions: dict = field(default_factory=dict)
    operator: dict = field(default_factory=dict)
    trials: int = 100
    seed: int = 0
    slack: float = 8.0
    tolerances: dict = field(default_factory=dict)
    params: dict = field(default_factory=dict)
    output: dict = field(default_factory=dict)

    # ------------------------------------------------------------------ loading

    @classmethod
    def from_dict(cls, raw: dict) -> "ExperimentConfig":
        _keys(raw, _TOP_KEYS, "config")
        if "version" not in raw:
            raise ConfigError("config is missing 'version'")
        if raw["version"] != SCHEMA_VERSION:
            raise ConfigError(f"unsupported config version {raw['version']!r} (expected {SCHEMA_VERSION})")
        kw: dict[str, Any] = {}
        if "suite" in raw:
            if not isinstance(raw["suite"], str) or not raw["suite"]:
                raise ConfigError("suite must be a non-empty string")
            kw["suite"] = raw["suite"]
        dom = raw.get("domain", {})
        _keys(dom, _DOMAIN_KEYS, "domain")
        kw["dimension"] = _int(dom.get("dimension", 1), "domain.dimension", 1)
        if kw["dimension"] > 2:
            raise ConfigError("domain.dimension must be 1 or 2")
        kw["L"] = _int(dom.get("L", 0), "domain.L", -1)
        kw["J"] = _int(dom.get("J", 8), "domain.J", 1)
        if "shifts" in dom:
            sh = dom["shifts"]
            if not isinstance(sh, list) or not sh:
                raise ConfigError("domain.shifts must be a non-empty list")
            out = []
            for s in sh:
                if not isinstance(s, list) or len(s) != kw["dimension"] or any(c not in (0, 1, 2) or isinstance(c, bool) for c in s):
                    raise ConfigError(f"bad shift {s!r}: need {kw['dimension']} codes from {{0, 1, 2}}")
                out.append(tuple(s))
            kw["shifts"] = tuple(out)
        if "J_sweep" in raw:
            js = raw["J_sweep"]
            if not isinstance(js, list) or not js:
                raise ConfigError("J_sweep must be a non-empty list")
            js = [_int(j, "J_sweep entry", 1) for j in js]
            if js != sorted(set(js)):
                raise ConfigError("J_sweep must be strictly increasing")
            kw["J_sweep"] = tuple(js)
        exprs = raw.get("expressions", {})
        if not isinstance(exprs, dict):
            raise ConfigError("expressions must be an object")
        for name, src in exprs.items():
            if not isinstance(src, str):
                raise ConfigError(f"expression {name!r} must be a string")
            try:
                parse_expression(src, kw["dimension"])
            except ExpressionError as exc:
                raise ConfigError(f"expression {name!r}: {exc}") from exc
        kw["expressions"] = dict(exprs)
        op = raw.get("operator", {})
        _keys(op, _OPERATOR_KEYS, "operator")
        if "kind" in op and op["kind"] not in ("czo", "fractional"):
            raise ConfigError("operator.kind must be 'czo' or 'fractional'")
        if "kernel" in op and op["kernel"] not in ("hilbert", "riesz1"):
            raise ConfigError("operator.kernel must be 'hilbert' or 'riesz1'")
        if "alpha" in op:
            a = _num(op["alpha"], "operator.alpha", positive=True)
            if not a < kw["dimension"]:
                raise ConfigError("operator.alpha must lie in (0, n)")
        if "m" in op:
            _int(op["m"], "operator.m", 0)
        kw["operator"] = dict(op)
        kw["trials"] = _int(raw.get("trials", 100), "trials", 1)
        kw["seed"] = _int(raw.get("seed", 0), "seed", 0)
        kw["slack"] = _num(raw.get("slack", 8.0), "slack", positive=True)
        tol = raw.get("tolerances", {})
        if not isinstance(tol, dict):
            raise ConfigError("tolerances must be an object")
        kw["tolerances"] = {k: _num(v, f"tolerances.{k}", positive=True) for k, v in tol.items()}
        params = raw.get("params", {})
        if not isinstance(params, dict):
            raise ConfigError("params must be an object")
        kw["params"] = dict(params)
        out = raw.get("output", {})
        if not isinstance(out, dict):
            raise ConfigError("output must be an object")
        kw["output"] = dict(out)
        cfg = cls(**kw)
        try:
            cfg.domain()
        except GridError as exc:
            raise ConfigError(f"domain: {exc}") from exc
        return cfg

    @classmethod
    def load(cls, path: str | Path) -> "ExperimentConfig":
        try:
            text = Path(path).read_text()
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        try:
            raw = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: invalid JSON ({exc.msg} at line {exc.lineno})") from exc
        return cls.from_dict(raw)

    # ------------------------------------------------------------------ accessors

    def domain(self, J: int | None = None) -> Domain:
        return Domain(self.dimension, self.L, self.J if J is None else J, self.shifts)

    def sweep(self, default: tuple) -> tuple:
        return self.J_sweep if self.J_sweep is not None else tuple(default)

    def expr(self, name: str, default: str | None = None) -> str | None:
        return self.expressions.get(name, default)

    def param(self, name: str, default=None):
        return self.params.get(name, default)

    def tol(self, name: str, default: float) -> float:
        return self.tolerances.get(name, default)

    def with_overrides(self, **changes) -> "ExperimentConfig":
        d = {k: getattr(self, k) for k in self.__dataclass_fields__}
        d.update(changes)
        return ExperimentConfig(**d)
