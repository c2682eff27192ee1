"""Strict JSON run configuration.

Unknown keys anywhere are errors. Component seeds are never set in the file;
they are derived from the single global ``seed`` (see :mod:`voltforecast.seeding`).
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, fields, replace
from pathlib import Path
from typing import Any, Optional

from . import baselines
from .dataset import IMPUTE_STRATEGIES, SplitSpec
from .errors import ConfigError, VoltForecastError
from .evaluation import (
    MODEL_KINDS,
    FeatureElimination,
    ModelSpec,
    Preprocessing,
    Stage,
    StagePlan,
    TuningGrid,
    default_stage_plan,
)
from .metrics import ZERO_POLICIES
from .neural import TrainConfig
from .seeding import U64, derive_seed
from .synthgen import BatteryModelParams

DEFAULT_FEATURES = ("cycle_number", "voltage_V", "current_A", "temperature_C")


def _check_keys(d: Any, allowed, path: str) -> dict:
    if not isinstance(d, dict):
        raise ConfigError(f"{path or 'config'} must be a JSON object", key=path)
    for k in d:
        if k not in allowed:
            where = f"{path}.{k}" if path else k
            raise ConfigError(f"unknown config key {where!r}", key=where)
    return d


def _build(cls, d: dict, path: str, exclude=("seed",)):
    allowed = [f.name for f in fields(cls) if f.name not in exclude]
    _check_keys(d, allowed, path)
    try:
        return cls(**d)
    except (VoltForecastError, ValueError, TypeError) as exc:
        key = next(iter(d), path)
        for k in d:
            if k in str(exc):
                key = k
        raise ConfigError(f"{path}: {exc}", key=f"{path}.{key}" if path else key) from None


@dataclass(frozen=True)
class SynthBlock:
    n_cycles: int = 12
    dt_s: float = 30.0
    max_steps: int = 2000
    missing_fraction: float = 0.0
    current: dict = field(default_factory=lambda: {"i_max": 2.0, "i_min": 0.4, "taper_soc": 0.8})
    battery: BatteryModelParams = BatteryModelParams()

    def __post_init__(self):
        if not isinstance(self.n_cycles, int) or self.n_cycles < 1:
            raise ConfigError("data.synth.n_cycles must be an integer >= 1", key="n_cycles")
        if not self.dt_s > 0:
            raise ConfigError("data.synth.dt_s must be positive", key="dt_s")
        if not isinstance(self.max_steps, int) or self.max_steps < 1:
            raise ConfigError("data.synth.max_steps must be an integer >= 1", key="max_steps")
        if not 0 <= self.missing_fraction < 1:
            raise ConfigError("data.synth.missing_fraction must be in [0, 1)", key="missing_fraction")


@dataclass(frozen=True)
class DataPreprocessing:
    impute: str = "forward_fill_then_mean"
    window_length: int = 16
    horizon: int = 1
    features: tuple[str, ...] = DEFAULT_FEATURES
    split: SplitSpec = SplitSpec()


@dataclass(frozen=True)
class EvaluationBlock:
    k: int = 5
    zero_policy: str = "skip_zero_targets"
    stages: Optional[StagePlan] = None


@dataclass(frozen=True)
class RunConfig:
    seed: int = 0
    output_dir: str = "out"
    data_path: Optional[str] = None
    synth: Optional[SynthBlock] = None
    data: DataPreprocessing = DataPreprocessing()
    model_preprocessing: Preprocessing = Preprocessing()
    models: tuple[ModelSpec, ...] = ()
    evaluation: EvaluationBlock = EvaluationBlock()
    raw: dict = field(default_factory=dict, compare=False)

    def model(self, name: str) -> ModelSpec:
        for m in self.models:
            if m.name == name:
                return m
        names = ", ".join(m.name for m in self.models) or "(none)"
        raise ConfigError(f"unknown model {name!r}; configured models: {names}", key="models")

    def derived_seeds(self) -> dict:
        return {
            "synth": derive_seed(self.seed, "synth"),
            "missing": derive_seed(self.seed, "missing"),
            "split": derive_seed(self.seed, "split"),
            "compare": derive_seed(self.seed, "compare"),
            "cv": derive_seed(self.seed, "cv"),
            "train": derive_seed(self.seed, "train"),
            "stages": derive_seed(self.seed, "stages"),
        }

    def with_overrides(self, seed: Optional[int] = None, output_dir: Optional[str] = None) -> "RunConfig":
        cfg = self
        if seed is not None:
            if not 0 <= seed < U64:
                raise ConfigError("--seed must be a 64-bit unsigned integer", key="seed")
            cfg = replace(cfg, seed=seed)
        if output_dir is not None:
            cfg = replace(cfg, output_dir=output_dir)
        return cfg

    def split_spec(self) -> SplitSpec:
        return replace(self.data.split, seed=derive_seed(self.seed, "split"))


# --------------------------------------------------------------- parsers


def _parse_train(d: Optional[dict], path: str, base: TrainConfig = TrainConfig()) -> TrainConfig:
    if d is None:
        return base
    _check_keys(d, [f.name for f in fields(TrainConfig) if f.name != "seed"], path)
    try:
        return replace(base, **d)
    except (VoltForecastError, ValueError, TypeError) as exc:
        raise ConfigError(f"{path}: {exc}", key=path) from None


def _parse_model_pre(d: Optional[dict], path: str, base: Preprocessing) -> Preprocessing:
    if d is None:
        return base
    allowed = ("standardize", "outlier_z", "feature_elimination", "fusion", "fusion_bottleneck", "fusion_train")
    _check_keys(d, allowed, path)
    d = dict(d)
    if d.get("feature_elimination") is not None:
        d["feature_elimination"] = _build(FeatureElimination, d["feature_elimination"], f"{path}.feature_elimination")
    if "fusion_train" in d:
        d["fusion_train"] = _parse_train(d["fusion_train"], f"{path}.fusion_train", base.fusion_train)
    try:
        return replace(base, **d)
    except (VoltForecastError, ValueError, TypeError) as exc:
        raise ConfigError(f"{path}: {exc}", key=path) from None


def _parse_model(d: dict, path: str, pre: Preprocessing) -> ModelSpec:
    _check_keys(d, ("name", "kind", "options", "train", "preprocessing"), path)
    kind = d.get("kind")
    if kind not in MODEL_KINDS:
        raise ConfigError(f"{path}.kind must be one of {MODEL_KINDS}, got {kind!r}", key=f"{path}.kind")
    options = d.get("options", {})
    if kind in baselines.CONFIG_TYPES:
        allowed = [f.name for f in fields(baselines.CONFIG_TYPES[kind]) if f.name != "seed"]
    elif kind == "lstm":
        allowed = ["hidden_size"]
    else:
        allowed = ["hidden"]
    _check_keys(options, allowed, f"{path}.options")
    try:
        return ModelSpec(
            kind,
            d.get("name", kind),
            dict(options),
            _parse_train(d.get("train"), f"{path}.train"),
            _parse_model_pre(d.get("preprocessing"), f"{path}.preprocessing", pre),
        )
    except (VoltForecastError, ValueError, TypeError) as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(f"{path}: {exc}", key=path) from None


def _parse_grid(d: Optional[dict], path: str, base: TuningGrid) -> TuningGrid:
    if d is None:
        return base
    _check_keys(d, [f.name for f in fields(TuningGrid)], path)
    d = {k: tuple(v) if isinstance(v, list) else v for k, v in d.items()}
    try:
        return replace(base, **d)
    except (VoltForecastError, ValueError, TypeError) as exc:
        raise ConfigError(f"{path}: {exc}", key=path) from None


def _parse_stages(d: dict, path: str) -> StagePlan:
    _check_keys(d, ("hidden_size", "base", "stage1", "stage2"), path)
    plan = default_stage_plan(d.get("hidden_size", 32))
    stages = {}
    for key, (name, default) in zip(("base", "stage1", "stage2"), plan.stages()):
        sd = d.get(key) or {}
        sp = f"{path}.{key}"
        _check_keys(sd, ("train", "preprocessing", "grid"), sp)
        spec = replace(
            default.spec,
            train=_parse_train(sd.get("train"), f"{sp}.train", default.spec.train),
            preprocessing=_parse_model_pre(sd.get("preprocessing"), f"{sp}.preprocessing", default.spec.preprocessing),
        )
        stages[key] = Stage(spec, _parse_grid(sd.get("grid"), f"{sp}.grid", default.grid))
    return StagePlan(**stages)


def _parse_synth(d: dict) -> SynthBlock:
    path = "data.synth"
    battery_keys = [f.name for f in fields(BatteryModelParams) if f.name != "seed"]
    block_keys = [f.name for f in fields(SynthBlock) if f.name != "battery"]
    _check_keys(d, battery_keys + block_keys, path)
    bat = {k: v for k, v in d.items() if k in battery_keys}
    rest = {k: v for k, v in d.items() if k in block_keys}
    if "current" in rest:
        cur = rest["current"]
        if isinstance(cur, (int, float)):
            rest["current"] = {"constant": float(cur)}
        else:
            _check_keys(cur, ("constant", "i_max", "i_min", "taper_soc"), f"{path}.current")
    for k, v in rest.items():
        if k in ("n_cycles", "max_steps") and (isinstance(v, bool) or not isinstance(v, int)):
            raise ConfigError(f"{path}.{k} must be an integer", key=k)
    try:
        battery = BatteryModelParams(**bat)
    except (VoltForecastError, ValueError, TypeError) as exc:
        key = next((k for k in bat if k in str(exc)), "params")
        raise ConfigError(f"{path}: {exc}", key=key) from None
    return SynthBlock(battery=battery, **rest)


def parse_config(d: dict) -> RunConfig:
    _check_keys(d, ("seed", "output_dir", "data", "preprocessing", "models", "evaluation"), "")
    seed = d.get("seed", 0)
    if isinstance(seed, bool) or not isinstance(seed, int) or not 0 <= seed < U64:
        raise ConfigError("seed must be a 64-bit unsigned integer", key="seed")

    data = d.get("data")
    if data is None:
        raise ConfigError("missing data block", key="data")
    _check_keys(data, ("path", "synth"), "data")
    if ("path" in data) == ("synth" in data):
        raise ConfigError("data block needs exactly one of 'path' or 'synth'", key="data")
    synth = _parse_synth(data["synth"]) if "synth" in data else None

    pre = dict(d.get("preprocessing", {}))
    data_keys = ("impute", "window_length", "horizon", "features", "split")
    model_keys = ("standardize", "outlier_z", "feature_elimination", "fusion", "fusion_bottleneck", "fusion_train")
    _check_keys(pre, data_keys + model_keys, "preprocessing")
    dp = {k: pre[k] for k in data_keys if k in pre}
    if "impute" in dp and dp["impute"] not in IMPUTE_STRATEGIES:
        raise ConfigError(f"preprocessing.impute must be one of {IMPUTE_STRATEGIES}", key="preprocessing.impute")
    for k in ("window_length", "horizon"):
        if k in dp and (isinstance(dp[k], bool) or not isinstance(dp[k], int) or dp[k] < 1):
            raise ConfigError(f"preprocessing.{k} must be an integer >= 1", key=f"preprocessing.{k}")
    if "features" in dp:
        if not isinstance(dp["features"], list) or not dp["features"]:
            raise ConfigError("preprocessing.features must be a non-empty list", key="preprocessing.features")
        dp["features"] = tuple(dp["features"])
    if "split" in dp:
        dp["split"] = _build(SplitSpec, dp["split"], "preprocessing.split")
    data_pre = DataPreprocessing(**dp)
    model_pre = _parse_model_pre({k: pre[k] for k in model_keys if k in pre}, "preprocessing", Preprocessing())

    models_raw = d.get("models", [])
    if not isinstance(models_raw, list):
        raise ConfigError("models must be a list", key="models")
    models = tuple(_parse_model(m, f"models[{i}]", model_pre) for i, m in enumerate(models_raw))
    names = [m.name for m in models]
    if len(set(names)) != len(names):
        raise ConfigError("model names must be unique", key="models")

    ev = d.get("evaluation", {})
    _check_keys(ev, ("k", "zero_policy", "stages"), "evaluation")
    k = ev.get("k", 5)
    if isinstance(k, bool) or not isinstance(k, int):
        raise ConfigError("evaluation.k must be an integer", key="evaluation.k")
    zp = ev.get("zero_policy", "skip_zero_targets")
    if zp not in ZERO_POLICIES:
        raise ConfigError(f"evaluation.zero_policy must be one of {ZERO_POLICIES}", key="evaluation.zero_policy")
    stages = _parse_stages(ev["stages"], "evaluation.stages") if "stages" in ev else None

    return RunConfig(
        seed=seed,
        output_dir=d.get("output_dir", "out"),
        data_path=data.get("path"),
        synth=synth,
        data=data_pre,
        model_preprocessing=model_pre,
        models=models,
        evaluation=EvaluationBlock(k, zp, stages),
        raw=d,
    )


def load_config(path) -> RunConfig:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror}", key="--config") from None
    try:
        d = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config {path} is not valid JSON: {exc}", key="--config") from None
    cfg = parse_config(d)
    if cfg.data_path is not None and not Path(cfg.data_path).is_absolute():
        cfg = replace(cfg, data_path=str(path.parent / cfg.data_path))
    return cfg
