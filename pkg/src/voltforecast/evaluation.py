"""Cross-validation, model comparison, feature elimination and staged tuning.

Preprocessing is always fitted on the source rows touched by the training
windows of the current split, never on test rows. The fitted state travels in
a :class:`FittedPreprocessor` that transforms any window set over the same
source table.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Callable, Optional, Sequence

import numpy as np

from . import baselines, neural
from .dataset import (
    TARGET,
    RawTable,
    SplitSpec,
    StandardizationParams,
    WindowedSeries,
    apply_standardizer,
    fit_standardizer,
    outlier_rows,
    split,
)
from .errors import OverAggressiveThresholdError, ParameterError, PlanError, VoltForecastError
from .metrics import DEFAULT_ZERO_POLICY, MetricsBundle, bundle
from .seeding import derive_seed

MODEL_KINDS = ("linear", "sgd_linear", "knn", "tree", "forest", "mlp", "lstm")

# display names of the comparison table, in its row order
TABLE1_MODELS = (
    ("Linear regressor", "linear"),
    ("Neural Network", "mlp"),
    ("LSTM", "lstm"),
    ("SGD", "sgd_linear"),
    ("Random Forest", "forest"),
    ("Decision Tree", "tree"),
    ("KNN", "knn"),
)
STAGE_NAMES = ("LSTM Base model", "LSTM Stage1", "LSTM Stage2")
METRIC_NAMES = ("mse", "rmse", "mae", "mape")


# ---------------------------------------------------------------- folds


@dataclass(frozen=True, eq=False)
class FoldPlan:
    K: int
    n: int
    seed: int
    folds: tuple[np.ndarray, ...]

    def train_index(self, k: int) -> np.ndarray:
        return np.sort(np.concatenate([f for j, f in enumerate(self.folds) if j != k]))

    def test_index(self, k: int) -> np.ndarray:
        return np.sort(self.folds[k])


def kfold_split(n: int, K: int, seed: int = 0) -> FoldPlan:
    """Seeded shuffle, then contiguous slices of size ceil(n/K) or floor(n/K)."""
    if K < 2:
        raise ParameterError(f"K must be >= 2, got {K}")
    if K > n:
        raise ParameterError(f"K={K} exceeds sample count n={n}")
    perm = np.random.default_rng(seed).permutation(n)
    return FoldPlan(K, n, seed, tuple(np.array_split(perm, K)))


# ----------------------------------------------------- feature elimination


@dataclass(frozen=True)
class FeatureElimination:
    target_corr_min: float = 0.1
    pair_corr_max: float = 0.95

    def __post_init__(self):
        if not 0 <= self.target_corr_min <= 1:
            raise ParameterError("target_corr_min must be in [0, 1]")
        if not 0 < self.pair_corr_max <= 1:
            raise ParameterError("pair_corr_max must be in (0, 1]")


def _pearson(a: np.ndarray, b: np.ndarray) -> float:
    a = a - a.mean()
    b = b - b.mean()
    den = math.sqrt(float(a @ a) * float(b @ b))
    if den == 0:
        return 0.0
    return max(-1.0, min(1.0, float(a @ b) / den))


def feature_eliminate(
    X,
    y,
    names: Sequence[str],
    target_corr_min: float = 0.1,
    pair_corr_max: float = 0.95,
) -> tuple[list[str], list[dict]]:
    """Drop weakly target-correlated and mutually redundant features.

    Features are ranked by ``|corr(feature, target)|``; one passes if it clears
    ``target_corr_min`` and its ``|corr|`` with every already-kept feature is
    at most ``pair_corr_max``. The strongest feature always survives.
    Returns the retained names (input order) and a per-feature report.
    """
    FeatureElimination(target_corr_min, pair_corr_max)
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64).ravel()
    names = list(names)
    if X.ndim != 2 or X.shape[1] != len(names) or X.shape[0] != len(y):
        raise ParameterError("feature matrix, target and names disagree in shape")
    if len(names) < 2:
        raise ParameterError("feature elimination needs at least 2 features")
    report = []
    corr = []
    for j, name in enumerate(names):
        col = X[:, j]
        entry = {"feature": name, "target_corr": 0.0, "kept": False, "reason": ""}
        if np.ptp(col) == 0:
            entry["reason"] = "constant feature (correlation taken as 0)"
            c = 0.0
        else:
            c = _pearson(col, y)
        entry["target_corr"] = c
        corr.append(c)
        report.append(entry)
    strength = np.abs(corr)
    ranking = sorted(range(len(names)), key=lambda j: (-strength[j], j))
    kept: list[int] = []
    for j in ranking:
        if strength[j] < target_corr_min:
            report[j]["reason"] = report[j]["reason"] or f"|target corr| {strength[j]:.3g} < {target_corr_min}"
            continue
        clash = next((k for k in kept if abs(_pearson(X[:, j], X[:, k])) > pair_corr_max), None)
        if clash is not None:
            report[j]["reason"] = f"redundant with {names[clash]}"
            continue
        kept.append(j)
    if not kept:
        kept = [ranking[0]]
        report[ranking[0]]["reason"] = "retained as strongest feature"
    for j in kept:
        report[j]["kept"] = True
    return [names[j] for j in sorted(kept)], report


def feature_eliminate_table(table: RawTable, features: Sequence[str], **kw):
    X = np.column_stack([table.column(f) for f in features])
    return feature_eliminate(X, table.column(TARGET), features, **kw)


# ------------------------------------------------------------ preprocessing


@dataclass(frozen=True)
class Preprocessing:
    standardize: bool = True
    outlier_z: Optional[float] = None
    feature_elimination: Optional[FeatureElimination] = None
    fusion: bool = False
    fusion_bottleneck: Optional[int] = None
    fusion_train: neural.TrainConfig = neural.TrainConfig(epochs=20, batch_size=32, learning_rate=0.05)

    def __post_init__(self):
        if self.outlier_z is not None and not self.outlier_z > 0:
            raise ParameterError("outlier_z must be positive or None")


@dataclass(frozen=True, eq=False)
class Prepared:
    """Model-ready arrays; ``y`` is in model units (standardized if enabled)."""

    X: np.ndarray
    y: np.ndarray
    starts: np.ndarray
    feature_names: tuple[str, ...]

    def __len__(self):
        return len(self.y)

    def flat(self) -> np.ndarray:
        return self.X.reshape(len(self.X), -1)


@dataclass(frozen=True, eq=False)
class FittedPreprocessor:
    config: Preprocessing
    features: tuple[str, ...]
    standardizer: Optional[StandardizationParams]
    train_keep: np.ndarray  # positions of training windows surviving outlier removal
    removed_rows: int = 0
    elimination_report: tuple = ()
    autoencoder: Optional[neural.AutoencoderParams] = None

    def transform(self, ws: WindowedSeries) -> Prepared:
        src = ws.source
        if self.standardizer is not None:
            src = apply_standardizer(src, self.standardizer)
        view = ws.with_source(src, self.features)
        X, y = view.X, view.y
        names = self.features
        if self.autoencoder is not None:
            n, L, d = X.shape
            X = neural.encode(self.autoencoder, X.reshape(n * L, d)).reshape(n, L, -1)
            names = tuple(f"code{j}" for j in range(X.shape[2]))
        return Prepared(X, y, ws.starts, names)

    def inverse_target(self, y_model) -> np.ndarray:
        y_model = np.asarray(y_model, dtype=np.float64)
        if self.standardizer is None:
            return y_model
        mu, sd = self.standardizer.lookup(TARGET)
        return y_model * sd + mu


def fit_preprocessor(train: WindowedSeries, config: Preprocessing, seed: int = 0) -> FittedPreprocessor:
    rows = train.rows_touched()
    sub = train.source.take(rows)
    keep = np.arange(len(train))
    removed = 0
    if config.outlier_z is not None:
        flagged = outlier_rows(sub, config.outlier_z)
        removed = int(flagged.sum())
        if len(sub) - removed < 2:
            raise OverAggressiveThresholdError(f"outlier_z={config.outlier_z} leaves fewer than 2 rows")
        if removed:
            bad = np.zeros(len(train.source), dtype=bool)
            bad[rows[flagged]] = True
            L = train.window_length
            idx = train.starts[:, None] + np.arange(L)[None, :]
            touches = bad[idx].any(axis=1) | bad[train.target_rows]
            keep = np.flatnonzero(~touches)
            if len(keep) == 0:
                raise PlanError("outlier removal discarded every training window")
            sub = sub.take(np.flatnonzero(~flagged))
    features = tuple(train.feature_names)
    report = ()
    if config.feature_elimination is not None and len(features) >= 2:
        fe = config.feature_elimination
        kept, rep = feature_eliminate_table(sub, features, target_corr_min=fe.target_corr_min,
                                            pair_corr_max=fe.pair_corr_max)
        features, report = tuple(kept), tuple(rep)
    std = None
    if config.standardize:
        cols = list(features) + ([TARGET] if TARGET not in features else [])
        std = fit_standardizer(sub, cols)
    ae = None
    if config.fusion:
        src = apply_standardizer(sub, std) if std is not None else sub
        rows_x = np.column_stack([src.column(f) for f in features])
        ae = neural.init_autoencoder(len(features), config.fusion_bottleneck, seed=derive_seed(seed, "ae-init"))
        tc = replace(config.fusion_train, seed=derive_seed(seed, "ae-train"),
                     batch_size=min(config.fusion_train.batch_size, len(rows_x)))
        ae, _ = neural.train(ae, rows_x, None, tc)
    return FittedPreprocessor(config, features, std, keep, removed, report, ae)


# ------------------------------------------------------------------ models


@dataclass(frozen=True)
class ModelSpec:
    kind: str
    name: str = ""
    options: dict = field(default_factory=dict)
    train: neural.TrainConfig = neural.TrainConfig()
    preprocessing: Preprocessing = Preprocessing()

    def __post_init__(self):
        if self.kind not in MODEL_KINDS and self.kind not in EXTRA_FITTERS:
            raise ParameterError(f"unknown model kind {self.kind!r}; expected one of {MODEL_KINDS}")
        if not self.name:
            object.__setattr__(self, "name", self.kind)
        if self.kind in baselines.CONFIG_TYPES:
            baselines.make_config(self.kind, self.options)  # validate early


class Predictor:
    """Fitted model bound to the window layout it was trained on."""

    trace: Optional[neural.TrainTrace] = None

    def predict(self, data: Prepared) -> np.ndarray:
        raise NotImplementedError

    def to_json(self) -> dict:
        raise NotImplementedError


@dataclass(eq=False)
class BaselinePredictor(Predictor):
    model: baselines.FittedBaseline

    def predict(self, data):
        return baselines.predict_all(self.model, data.flat())

    def to_json(self):
        return self.model.to_json()


@dataclass(eq=False)
class NeuralPredictor(Predictor):
    model: neural.Model
    trace: neural.TrainTrace = None
    sequential: bool = True

    def predict(self, data):
        return self.model.predict(data.X if self.sequential else data.flat())

    def to_json(self):
        return neural.model_to_json(self.model)


# Test fixtures and extensions register extra kinds here: kind -> fit(spec, data, seed)
EXTRA_FITTERS: dict[str, Callable] = {}


def _neural_train_cfg(spec: ModelSpec, n: int, seed: int) -> neural.TrainConfig:
    tc = replace(spec.train, seed=derive_seed(seed, "train"))
    n_tr = n - math.floor(n * tc.validation_fraction)
    if tc.batch_size > n_tr:
        tc = replace(tc, batch_size=max(1, n_tr))
    return tc


def fit_model(spec: ModelSpec, data: Prepared, seed: int = 0) -> Predictor:
    if spec.kind in EXTRA_FITTERS:
        return EXTRA_FITTERS[spec.kind](spec, data, seed)
    if spec.kind in baselines.CONFIG_TYPES:
        opts = dict(spec.options)
        if spec.kind in ("sgd_linear", "forest"):
            opts["seed"] = derive_seed(seed, spec.kind)
        cfg = baselines.make_config(spec.kind, opts)
        flat = baselines.FlatDataset(data.flat(), data.y)
        return BaselinePredictor(baselines.fit(spec.kind, flat, cfg))
    tc = _neural_train_cfg(spec, len(data), seed)
    init_seed = derive_seed(seed, "init")
    if spec.kind == "lstm":
        model = neural.init_lstm(data.X.shape[2], int(spec.options.get("hidden_size", neural.DEFAULT_HIDDEN)),
                                 seed=init_seed)
        fitted, trace = neural.train(model, data.X, data.y, tc)
        return NeuralPredictor(fitted, trace, sequential=True)
    hidden = tuple(spec.options.get("hidden", (neural.DEFAULT_HIDDEN,)))
    model = neural.init_mlp(data.flat().shape[1], hidden, seed=init_seed)
    fitted, trace = neural.train(model, data.flat(), data.y, tc)
    return NeuralPredictor(fitted, trace, sequential=False)


@dataclass(eq=False)
class FitResult:
    spec: ModelSpec
    preprocessor: FittedPreprocessor
    predictor: Predictor
    bundle: Optional[MetricsBundle] = None


def fit_and_score(
    spec: ModelSpec,
    train: WindowedSeries,
    test: Optional[WindowedSeries],
    seed: int = 0,
    zero_policy: str = DEFAULT_ZERO_POLICY,
) -> FitResult:
    pre = fit_preprocessor(train, spec.preprocessing, seed=derive_seed(seed, "preprocessing"))
    tr = pre.transform(train.subset(pre.train_keep))
    if len(tr) == 0:
        raise PlanError("empty training set after preprocessing")
    predictor = fit_model(spec, tr, seed=seed)
    result = FitResult(spec, pre, predictor)
    if test is not None:
        te = pre.transform(test)
        pred = pre.inverse_target(predictor.predict(te))
        if not np.isfinite(pred).all():
            raise VoltForecastError("model produced non-finite predictions")
        result.bundle = bundle(test.y, pred, zero_policy)
    return result


# ----------------------------------------------------------------- reports


@dataclass(frozen=True)
class ReportRow:
    name: str
    bundle: Optional[MetricsBundle]
    error: Optional[str] = None
    details: dict = field(default_factory=dict)

    @property
    def failed(self) -> bool:
        return self.bundle is None


@dataclass(frozen=True)
class ComparisonReport:
    rows: tuple[ReportRow, ...]
    fingerprint: dict = field(default_factory=dict)
    timestamp: Optional[str] = None

    def __post_init__(self):
        names = [r.name for r in self.rows]
        if len(set(names)) != len(names):
            raise ParameterError(f"report row names must be unique: {names}")

    def row(self, name: str) -> ReportRow:
        for r in self.rows:
            if r.name == name:
                return r
        raise KeyError(name)


def fingerprint(series: WindowedSeries, seed: int, test: Optional[WindowedSeries] = None) -> dict:
    return {
        "rows": len(series.source),
        "windows": len(series),
        "test_windows": None if test is None else len(test),
        "features": list(series.feature_names),
        "window_length": series.window_length,
        "horizon": series.horizon,
        "seed": int(seed),
    }


def compare_models(
    specs: Sequence[ModelSpec],
    train: WindowedSeries,
    test: WindowedSeries,
    seed: int = 0,
    zero_policy: str = DEFAULT_ZERO_POLICY,
) -> ComparisonReport:
    """Fit every spec on ``train`` and score it on ``test``.

    A spec that raises becomes a failed row carrying the error message.
    """
    if not specs:
        raise ParameterError("compare_models needs at least one model spec")
    rows = []
    for spec in specs:
        try:
            res = fit_and_score(spec, train, test, seed=derive_seed(seed, "model", spec.name), zero_policy=zero_policy)
            rows.append(ReportRow(spec.name, res.bundle))
        except VoltForecastError as exc:
            rows.append(ReportRow(spec.name, None, f"{type(exc).__name__}: {exc}"))
    return ComparisonReport(tuple(rows), fingerprint(train, seed, test))


@dataclass(frozen=True)
class CvReport:
    name: str
    bundles: tuple[MetricsBundle, ...]
    mean: dict
    std: dict
    preprocessors: tuple[FittedPreprocessor, ...] = field(default=(), compare=False, repr=False)

    @property
    def K(self) -> int:
        return len(self.bundles)


def _summarize(bundles: Sequence[MetricsBundle]) -> tuple[dict, dict]:
    mean, std = {}, {}
    for m in METRIC_NAMES:
        vals = [getattr(b, m) for b in bundles if getattr(b, m) is not None]
        if not vals:
            mean[m] = std[m] = None
            continue
        a = np.array(vals)
        mean[m] = float(np.mean(a))
        std[m] = float(np.std(a, ddof=1)) if len(a) > 1 else 0.0
    return mean, std


def cross_validate(
    spec: ModelSpec,
    series: WindowedSeries,
    K: int = 5,
    seed: int = 0,
    zero_policy: str = DEFAULT_ZERO_POLICY,
) -> CvReport:
    """K rounds, each holding out one fold; preprocessing refits per round."""
    plan = kfold_split(len(series), K, derive_seed(seed, "folds"))
    bundles, preps = [], []
    for k in range(plan.K):
        tr_idx, te_idx = plan.train_index(k), plan.test_index(k)
        if len(tr_idx) == 0:
            raise PlanError(f"fold {k} has an empty training side")
        res = fit_and_score(spec, series.subset(tr_idx), series.subset(te_idx),
                            seed=derive_seed(seed, "fold", k), zero_policy=zero_policy)
        bundles.append(res.bundle)
        preps.append(res.preprocessor)
    mean, std = _summarize(bundles)
    return CvReport(spec.name, tuple(bundles), mean, std, tuple(preps))


# ------------------------------------------------------------------ stages


@dataclass(frozen=True)
class TuningGrid:
    """Hyperparameter grid searched on a validation tail of the training set.

    Empty tuples mean "use the model spec's own value". With ``inherit`` the stage
    takes epochs and batch size from the previous stage's selection.
    """

    epochs: tuple[int, ...] = ()
    batch_sizes: tuple[int, ...] = ()
    learning_rates: tuple[float, ...] = ()
    validation_fraction: float = 0.2
    inherit: bool = False

    def __post_init__(self):
        if not 0 < self.validation_fraction < 1:
            raise ParameterError("validation_fraction must be in (0, 1)")
        if any(e < 1 for e in self.epochs) or any(b < 1 for b in self.batch_sizes):
            raise ParameterError("grid epochs and batch sizes must be >= 1")
        if any(not lr > 0 for lr in self.learning_rates):
            raise ParameterError("grid learning rates must be positive")

    @property
    def active(self) -> bool:
        return bool(self.epochs or self.batch_sizes or self.learning_rates or self.inherit)


@dataclass(frozen=True)
class Stage:
    spec: ModelSpec
    grid: TuningGrid = TuningGrid()


@dataclass(frozen=True)
class StagePlan:
    base: Stage
    stage1: Stage
    stage2: Stage

    def __post_init__(self):
        kinds = {self.base.spec.kind, self.stage1.spec.kind, self.stage2.spec.kind}
        if len(kinds) != 1:
            raise ParameterError(f"all stages must share one model kind, got {sorted(kinds)}")

    def stages(self) -> tuple[tuple[str, Stage], ...]:
        return tuple(zip(STAGE_NAMES, (self.base, self.stage1, self.stage2)))


def default_stage_plan(hidden_size: int = neural.DEFAULT_HIDDEN) -> StagePlan:
    """Base, stage-1 and stage-2 LSTM configurations.

    base:   raw (unscaled) features, default hyperparameters.
    stage1: standardized data, epochs x batch-size grid.
    stage2: stage1 plus outlier removal, feature elimination and a
            learning-rate grid at stage1's chosen epochs and batch size.
    """
    opts = {"hidden_size": hidden_size}
    train = neural.TrainConfig(epochs=30, batch_size=32, learning_rate=0.01)
    base = ModelSpec("lstm", STAGE_NAMES[0], opts, train, Preprocessing(standardize=False))
    s1 = ModelSpec("lstm", STAGE_NAMES[1], opts, train, Preprocessing(standardize=True))
    s2 = ModelSpec(
        "lstm",
        STAGE_NAMES[2],
        opts,
        train,
        Preprocessing(standardize=True, outlier_z=4.0, feature_elimination=FeatureElimination(0.1, 0.95)),
    )
    return StagePlan(
        Stage(base),
        Stage(s1, TuningGrid(epochs=(30, 60, 120), batch_sizes=(16, 32, 64))),
        Stage(s2, TuningGrid(learning_rates=(0.003, 0.01, 0.03), inherit=True)),
    )


@dataclass(frozen=True)
class GridPoint:
    epochs: int
    batch_size: int
    learning_rate: float
    val_mse: float


def _tune(stage: Stage, train: WindowedSeries, prev: Optional[GridPoint], seed: int):
    """Grid search; returns the chosen fit (trained on the grid's training part)."""
    spec = stage.spec
    grid = stage.grid
    base = spec.train
    if grid.inherit and prev is not None:
        epochs_opts, batch_opts = (prev.epochs,), (prev.batch_size,)
    else:
        epochs_opts = grid.epochs or (base.epochs,)
        batch_opts = grid.batch_sizes or (base.batch_size,)
    lr_opts = grid.learning_rates or (base.learning_rate,)
    pre = fit_preprocessor(train, spec.preprocessing, seed=derive_seed(seed, "preprocessing"))
    data = pre.transform(train.subset(pre.train_keep))
    if spec.kind != "lstm" and spec.kind != "mlp":
        raise ParameterError("grid tuning applies to gradient-trained models only")
    X = data.X if spec.kind == "lstm" else data.flat()
    points = []
    for bs in sorted(batch_opts):
        for lr in sorted(lr_opts):
            tc = replace(base, batch_size=bs, learning_rate=lr, validation_fraction=grid.validation_fraction)
            tc = _neural_train_cfg(replace(spec, train=tc), len(data), seed)
            init_seed = derive_seed(seed, "init")
            if spec.kind == "lstm":
                model = neural.init_lstm(X.shape[2], int(spec.options.get("hidden_size", neural.DEFAULT_HIDDEN)),
                                         seed=init_seed)
            else:
                model = neural.init_mlp(X.shape[1], tuple(spec.options.get("hidden", (neural.DEFAULT_HIDDEN,))),
                                        seed=init_seed)
            snaps = neural.train_snapshots(model, X, data.y, tc, epochs_opts)
            for e in sorted(epochs_opts):
                fitted, trace = snaps[e]
                point = GridPoint(e, bs, lr, trace.val_loss[-1])
                points.append((point, NeuralPredictor(fitted, trace, sequential=spec.kind == "lstm")))
    # lowest validation error; ties -> fewer epochs, smaller batch, smaller rate
    best_point, best_pred = min(points, key=lambda p: (p[0].val_mse, p[0].epochs, p[0].batch_size, p[0].learning_rate))
    return pre, best_point, best_pred, [p for p, _ in points]


def run_stages(
    plan: StagePlan,
    series: WindowedSeries,
    split_spec: SplitSpec = SplitSpec(),
    seed: int = 0,
    zero_policy: str = DEFAULT_ZERO_POLICY,
) -> ComparisonReport:
    """Run base -> stage1 -> stage2 on one shared train/test split.

    Every stage uses the same seed so identical stages give identical rows.
    """
    train, test = split(series, split_spec)
    stage_seed = derive_seed(seed, "stages")
    rows = []
    prev: Optional[GridPoint] = None
    for name, stage in plan.stages():
        try:
            if stage.grid.active:
                pre, point, predictor, points = _tune(stage, train, prev, stage_seed)
                prev = point
                details = {
                    "epochs": point.epochs,
                    "batch_size": point.batch_size,
                    "learning_rate": point.learning_rate,
                    "grid": [vars(p) for p in points],
                }
            else:
                res = fit_and_score(stage.spec, train, None, seed=stage_seed)
                pre, predictor = res.preprocessor, res.predictor
                tc = stage.spec.train
                prev = GridPoint(tc.epochs, tc.batch_size, tc.learning_rate, math.nan)
                details = {"epochs": tc.epochs, "batch_size": tc.batch_size, "learning_rate": tc.learning_rate}
            details["features"] = list(pre.features)
            details["removed_rows"] = pre.removed_rows
            pred = pre.inverse_target(predictor.predict(pre.transform(test)))
            if not np.isfinite(pred).all():
                raise VoltForecastError("model produced non-finite predictions")
            rows.append(ReportRow(name, bundle(test.y, pred, zero_policy), details=details))
        except VoltForecastError as exc:
            rows.append(ReportRow(name, None, f"{type(exc).__name__}: {exc}"))
    return ComparisonReport(tuple(rows), fingerprint(train, seed, test))


def table1_specs(overrides: Optional[dict] = None) -> list[ModelSpec]:
    """The seven comparison models in Table-1 order.

    ``overrides`` maps a kind to ``{"options": {...}, "train": TrainConfig}``.
    """
    overrides = overrides or {}
    specs = []
    for name, kind in TABLE1_MODELS:
        o = overrides.get(kind, {})
        specs.append(ModelSpec(kind, name, dict(o.get("options", {})), o.get("train", neural.TrainConfig())))
    return specs


# ------------------------------------------------------------ persistence

MODEL_FORMAT = "voltforecast-model/1"


def fit_to_json(result: FitResult, seed: int) -> dict:
    """Model weights plus the fitted preprocessing needed to reuse them."""
    pre = result.preprocessor
    return {
        "format": MODEL_FORMAT,
        "name": result.spec.name,
        "kind": result.spec.kind,
        "seed": int(seed),
        "options": dict(result.spec.options),
        "train_config": result.spec.train.to_dict(),
        "preprocessing": {
            "features": list(pre.features),
            "standardizer": pre.standardizer.to_dict() if pre.standardizer else None,
            "autoencoder": neural.model_to_json(pre.autoencoder) if pre.autoencoder else None,
        },
        "model": result.predictor.to_json(),
    }


def load_fit(d: dict) -> tuple[FittedPreprocessor, Predictor]:
    if d.get("format") != MODEL_FORMAT:
        raise ParameterError(f"unsupported model file format {d.get('format')!r}")
    p = d["preprocessing"]
    std = StandardizationParams.from_dict(p["standardizer"]) if p["standardizer"] else None
    ae = neural.model_from_json(p["autoencoder"]) if p["autoencoder"] else None
    pre = FittedPreprocessor(
        Preprocessing(standardize=std is not None, fusion=ae is not None),
        tuple(p["features"]), std, np.zeros(0, dtype=np.int64), autoencoder=ae,
    )
    if d["kind"] in baselines.CONFIG_TYPES:
        predictor: Predictor = BaselinePredictor(baselines.FittedBaseline.from_json(d["model"]))
    else:
        predictor = NeuralPredictor(neural.model_from_json(d["model"]), sequential=d["kind"] == "lstm")
    return pre, predictor
