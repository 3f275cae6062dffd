"""Experiment configuration documents and named model presets."""

from __future__ import annotations

import hashlib
import json
from dataclasses import asdict, dataclass, field
from functools import lru_cache
from pathlib import Path
from typing import Any, Callable

import jsonschema
import numpy as np

from ..fracsim import AR1Toeplitz, ModelSpec, WhiteNoise


class ConfigError(ValueError):
    """Invalid or unreadable experiment configuration."""


def _alt(n: int, period: int) -> np.ndarray:
    """+-1 loadings flipping sign every ``period`` rows (Walsh-type patterns)."""
    return np.where((np.arange(n) // period) % 2 == 0, 1.0, -1.0)


def _walsh_loadings(n: int, q: int) -> np.ndarray:
    cols = [np.ones(n)] + [_alt(n, 2 ** k) for k in range(q - 1)]
    return np.column_stack(cols)


def _alpha(n: int, lo: float = 0.2, hi: float = 0.8) -> np.ndarray:
    return np.linspace(lo, hi, n)


def _table12(n: int) -> ModelSpec:
    return ModelSpec.one_pole(np.full(n, 0.4), 1.0, _alpha(n), idio=WhiteNoise(1.0))


def _factor_memory(n: int, d: tuple[float, ...]) -> ModelSpec:
    q = len(d)
    return ModelSpec.one_pole(np.tile(d, (n, 1)), _walsh_loadings(n, q), np.tile(_alpha(n)[:, None], (1, q)),
                              idio=AR1Toeplitz(1.0, 0.4, 0.6))


def _rank1_rowpert(n: int) -> ModelSpec:
    d = np.full(n, 0.35)
    d[min(9, n - 1)] = 0.25
    return ModelSpec.one_pole(d, 1.0, _alpha(n), idio=WhiteNoise(1.0))


def _rank2_entrypert(n: int) -> ModelSpec:
    d = np.full((n, 2), 0.35)
    d[min(9, n - 1), 0] = 0.25
    return ModelSpec.one_pole(d, 1.0, np.tile(_alpha(n)[:, None], (1, 2)), idio=WhiteNoise(1.0))


def _rank2_equalpert(n: int) -> ModelSpec:
    d = np.column_stack([np.linspace(0.1, 0.3, n), np.linspace(0.15, 0.35, n)])
    alpha = np.column_stack([np.linspace(0.2, 0.7, n), np.linspace(0.5, 0.9, n)])
    return ModelSpec.one_pole(d, 1.0, alpha, idio=AR1Toeplitz(1.0, 0.4, 0.0))


PRESETS: dict[str, tuple[Callable[[int], ModelSpec], int]] = {
    # name -> (factory(n), default n)
    "table12": (_table12, 50),
    "rank2-factor": (lambda n: _factor_memory(n, (0.35, 0.10)), 80),
    "rank3-factor": (lambda n: _factor_memory(n, (0.45, 0.25, 0.20)), 80),
    "rank1-rowpert": (_rank1_rowpert, 80),
    "rank2-entrypert": (_rank2_entrypert, 80),
    "rank2-equalpert": (_rank2_equalpert, 80),
    "companion-rank2": (lambda n: _factor_memory(n, (0.40, 0.25)), 80),
}


@lru_cache(maxsize=64)
def preset_model(name: str, n: int | None = None) -> ModelSpec:
    """Model of a named preset at cross-section size n (cached, so oracle banks are reused)."""
    try:
        factory, default_n = PRESETS[name]
    except KeyError:
        raise ConfigError(f"unknown preset {name!r}; choose from {sorted(PRESETS)}") from None
    return factory(default_n if n is None else int(n))


CONFIG_SCHEMA: dict[str, Any] = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "title": "ExperimentConfig",
    "type": "object",
    "additionalProperties": False,
    "required": ["model", "grid"],
    "properties": {
        "model": {"oneOf": [{"type": "string", "enum": sorted(PRESETS)}, {"type": "object"}]},
        "grid": {
            "type": "array",
            "minItems": 1,
            "items": {"type": "array", "prefixItems": [{"type": "integer"}, {"type": "integer"}],
                      "minItems": 2, "maxItems": 2},
        },
        "methods": {"type": "array", "minItems": 1, "uniqueItems": True,
                    "items": {"enum": ["dynamic", "static", "oracle"]}},
        "b": {"type": "number", "exclusiveMinimum": 0, "exclusiveMaximum": 1},
        "M": {"type": ["integer", "null"], "minimum": 0},
        "beta": {"type": "number", "exclusiveMinimum": 0, "exclusiveMaximum": 1},
        "C_M": {"type": "number", "exclusiveMinimum": 0},
        "kernel": {"enum": ["epanechnikov", "bartlett-priestley"]},
        "N_grid": {"type": ["integer", "null"], "minimum": 4},
        "replications": {"type": "integer", "minimum": 1},
        "seed": {"type": "integer", "minimum": 0},
        "t_rule": {"enum": ["central", "center", "full"]},
        "q_static": {"type": ["integer", "null"], "minimum": 1},
    },
}


@dataclass(frozen=True)
class ExperimentConfig:
    """Declarative Monte Carlo experiment.

    ``M`` fixes the truncation lag; when it is None the lag follows
    ``floor((C_M / (delta sqrt n))^beta)``.  ``t_rule`` picks the time points
    entering the recovery criterion: ``central`` uses ceil(0.2T)..floor(0.8T),
    ``center`` the single point floor(T/2), ``full`` every t.
    """

    model: str | dict
    grid: tuple[tuple[int, int], ...]
    methods: tuple[str, ...] = ("dynamic", "static")
    b: float = 0.5
    M: int | None = None
    beta: float = 0.6
    C_M: float = 100.0
    kernel: str = "epanechnikov"
    N_grid: int | None = None
    replications: int = 50
    seed: int = 0
    t_rule: str = "central"
    q_static: int | None = None
    _model_spec: ModelSpec | None = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "grid", tuple((int(n), int(T)) for n, T in self.grid))
        object.__setattr__(self, "methods", tuple(self.methods))
        try:
            jsonschema.validate(self.to_dict(), CONFIG_SCHEMA)
        except jsonschema.ValidationError as exc:
            raise ConfigError(f"invalid config: {exc.message}") from None
        if isinstance(self.model, dict):
            try:
                object.__setattr__(self, "_model_spec", ModelSpec.from_dict(self.model))
            except (KeyError, TypeError, ValueError) as exc:
                raise ConfigError(f"invalid model: {exc}") from None
        for n, T in self.grid:
            q = self.model_for(n).q
            if n < q + 1:
                raise ConfigError(f"cell (n={n}, T={T}) needs n >= q + 1 = {q + 1}")
            if T < 16:
                raise ConfigError(f"cell (n={n}, T={T}) needs T >= 16")

    def model_for(self, n: int) -> ModelSpec:
        if self._model_spec is None:
            return preset_model(self.model, n)
        if self._model_spec.n != n:
            raise ConfigError(f"explicit model has n={self._model_spec.n}, grid asks for n={n}")
        return self._model_spec

    def to_dict(self) -> dict[str, Any]:
        doc = asdict(self)
        doc.pop("_model_spec")
        doc["grid"] = [list(c) for c in self.grid]
        doc["methods"] = list(self.methods)
        return doc

    @classmethod
    def from_dict(cls, doc: dict[str, Any]) -> "ExperimentConfig":
        if not isinstance(doc, dict):
            raise ConfigError("config must be a JSON object")
        try:
            jsonschema.validate(doc, CONFIG_SCHEMA)
        except jsonschema.ValidationError as exc:
            raise ConfigError(f"invalid config: {exc.message}") from None
        return cls(**doc)

    def config_hash(self) -> str:
        text = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(text.encode()).hexdigest()[:16]

    def replace(self, **changes) -> "ExperimentConfig":
        doc = self.to_dict()
        doc.update(changes)
        return ExperimentConfig.from_dict(doc)


def load_config(path) -> ExperimentConfig:
    path = Path(path)
    try:
        doc = json.loads(path.read_text())
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}") from None
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    return ExperimentConfig.from_dict(doc)


def preset_config(name: str, **overrides) -> ExperimentConfig:
    """Default experiment around a model preset; table12 uses the n=50, T=200 cell."""
    preset_model(name)  # validates the name
    n = PRESETS[name][1]
    doc = {"model": name, "grid": [[n, 200]]}
    doc.update(overrides)
    return ExperimentConfig.from_dict(doc)
