"""Run configuration: one JSON document holding every stage's parameters and the master seed."""

from __future__ import annotations

import copy
import json
from dataclasses import dataclass, field
from pathlib import Path

from .errors import ConfigError
from .eval.protocols import (BALANCE_AXES, METHOD1_REPEATS, METHOD2_REPEATS, METHODS,
                             POPULATIONS, ModelSettings)
from .eval.importance import AGGREGATIONS
from .features.extract import FeatureConfig
from .forest import ForestParams
from .synth import GeneratorConfig

BALANCED_POPULATIONS = {f"{axis}_balanced": axis for axis in BALANCE_AXES}
EVAL_POPULATIONS = ("all", "gender_balanced", "female", "male", "age_balanced", "student",
                    "non_student")
IMPORTANCE_POPULATIONS = ("all", "UK", "ES", "PE", "CO", "CL")

DEFAULTS = {
    "seed": 0,
    "paths": {"out": "run", "manifest": None},
    "synth": {k: v for k, v in GeneratorConfig().to_dict().items() if k != "seed"},
    "features": FeatureConfig().to_dict(),
    "impute": {"threshold": 0.30, "max_sweeps": 10, "tol": 1e-3, "clip": True},
    "forest": {"n_trees": 100, "max_depth": None, "min_leaf": 1, "features_per_split": None,
               "bootstrap": True},
    "rfe": {"enabled": True, "target_k": 50, "drop_frac": 0.10},
    "evaluate": {"methods": list(METHODS), "populations": list(EVAL_POPULATIONS),
                 "method1_repeats": METHOD1_REPEATS, "method2_repeats": METHOD2_REPEATS,
                 "balance_repeats": 10},
    "importance": {"populations": list(IMPORTANCE_POPULATIONS), "aggregate": "sum"},
    "distributions": {"features": None, "top_k": 3, "bins": 20},
}

# Sections whose contents are validated by the owning module rather than here.
_OPEN_SECTIONS = {"synth"}


def _merge(base: dict, override: dict, where: str) -> dict:
    out = copy.deepcopy(base)
    for key, value in override.items():
        path = f"{where}.{key}" if where else key
        if key not in base:
            raise ConfigError(f"unknown config key {path!r}")
        if isinstance(base[key], dict) and key not in _OPEN_SECTIONS:
            if not isinstance(value, dict):
                raise ConfigError(f"config key {path!r} must be an object")
            out[key] = _merge(base[key], value, path)
        elif isinstance(base[key], dict):
            if not isinstance(value, dict):
                raise ConfigError(f"config key {path!r} must be an object")
            unknown = sorted(set(value) - set(base[key]))
            if unknown:
                raise ConfigError(f"unknown config key {path + '.' + unknown[0]!r}")
            out[key] = {**base[key], **copy.deepcopy(value)}
        else:
            out[key] = copy.deepcopy(value)
    return out


@dataclass(frozen=True)
class RunConfig:
    """Validated run settings. ``data`` mirrors DEFAULTS with overrides applied."""

    data: dict = field(default_factory=lambda: copy.deepcopy(DEFAULTS))

    def __post_init__(self):
        self._validate()

    @classmethod
    def from_dict(cls, overrides: dict | None = None) -> "RunConfig":
        if overrides is not None and not isinstance(overrides, dict):
            raise ConfigError("config must be a JSON object")
        return cls(_merge(DEFAULTS, overrides or {}, ""))

    @classmethod
    def load(cls, path) -> "RunConfig":
        try:
            text = Path(path).read_text()
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config {path} is not valid JSON: {exc}") from exc
        return cls.from_dict(data)

    def with_overrides(self, **changes) -> "RunConfig":
        data = copy.deepcopy(self.data)
        for dotted, value in changes.items():
            *parents, leaf = dotted.split(".")
            node = data
            for p in parents:
                node = node[p]
            node[leaf] = value
        return RunConfig(data)

    # Typed views ---------------------------------------------------------------

    @property
    def seed(self) -> int:
        return int(self.data["seed"])

    @property
    def out(self) -> Path:
        return Path(self.data["paths"]["out"])

    @property
    def manifest_path(self) -> Path:
        given = self.data["paths"]["manifest"]
        return Path(given) if given else self.out / "cohort" / "manifest.csv"

    def generator(self) -> GeneratorConfig:
        return GeneratorConfig.from_dict({**self.data["synth"], "seed": self.seed})

    def feature_config(self) -> FeatureConfig:
        return FeatureConfig(**self.data["features"])

    def forest_params(self) -> ForestParams:
        return ForestParams(**self.data["forest"], rng_seed=self.seed)

    def model_settings(self) -> ModelSettings:
        rfe = self.data["rfe"]
        return ModelSettings(self.forest_params(), bool(rfe["enabled"]), int(rfe["target_k"]),
                             float(rfe["drop_frac"]))

    def to_json(self) -> str:
        return json.dumps(self.data, indent=2, sort_keys=True) + "\n"

    # Validation ----------------------------------------------------------------

    def _validate(self) -> None:
        d = self.data
        if not isinstance(d["seed"], int) or isinstance(d["seed"], bool) or d["seed"] < 0:
            raise ConfigError("seed must be a non-negative integer")
        try:
            self.generator()
            self.feature_config()
            self.forest_params().mtry(1)
        except ConfigError:
            raise
        except (TypeError, ValueError) as exc:
            raise ConfigError(str(exc)) from exc
        imp = d["impute"]
        if not 0.0 < float(imp["threshold"]) < 1.0:
            raise ConfigError("impute.threshold must lie in (0, 1)")
        if int(imp["max_sweeps"]) < 1:
            raise ConfigError("impute.max_sweeps must be >= 1")
        ev = d["evaluate"]
        bad = [m for m in ev["methods"] if m not in METHODS]
        if bad or not ev["methods"]:
            raise ConfigError(f"evaluate.methods must be a non-empty subset of {list(METHODS)}")
        known = set(POPULATIONS) | set(BALANCED_POPULATIONS)
        bad = [p for p in ev["populations"] if p not in known]
        if bad:
            raise ConfigError(f"unknown evaluation population {bad[0]!r}")
        for key in ("method1_repeats", "method2_repeats", "balance_repeats"):
            if int(ev[key]) < 1:
                raise ConfigError(f"evaluate.{key} must be >= 1")
        im = d["importance"]
        bad = [p for p in im["populations"] if p not in POPULATIONS]
        if bad:
            raise ConfigError(f"unknown importance population {bad[0]!r}")
        if im["aggregate"] not in AGGREGATIONS:
            raise ConfigError(f"importance.aggregate must be one of {list(AGGREGATIONS)}")
        dist = d["distributions"]
        if int(dist["bins"]) < 1 or int(dist["top_k"]) < 1:
            raise ConfigError("distributions.bins and distributions.top_k must be >= 1")
        rfe = d["rfe"]
        if not 0.0 < float(rfe["drop_frac"]) < 1.0 or int(rfe["target_k"]) < 1:
            raise ConfigError("rfe.drop_frac must lie in (0, 1) and rfe.target_k be >= 1")
