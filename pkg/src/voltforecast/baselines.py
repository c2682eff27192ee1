"""Classical regressors used as comparison models.

All models consume a flat ``(n, d)`` matrix; windows are flattened
timestep-major before reaching them. Every fitted model is an immutable
:class:`FittedBaseline` that serializes to a plain JSON dict.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from typing import Optional

import numpy as np

from .errors import DivergenceError, ParameterError, ShapeError, SingularSystemError

KINDS = ("linear", "sgd_linear", "knn", "tree", "forest")


@dataclass(frozen=True, eq=False)
class FlatDataset:
    X: np.ndarray
    y: np.ndarray

    def __post_init__(self):
        X = np.asarray(self.X, dtype=np.float64)
        y = np.asarray(self.y, dtype=np.float64).ravel()
        if X.ndim == 1:
            X = X[:, None]
        if X.ndim != 2 or X.shape[0] != y.shape[0]:
            raise ShapeError(f"X shape {X.shape} incompatible with y length {y.shape[0]}")
        if X.shape[0] < 1:
            raise ShapeError("dataset must contain at least one row")
        if not (np.isfinite(X).all() and np.isfinite(y).all()):
            raise ShapeError("dataset contains non-finite values")
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "y", y)

    @property
    def n(self) -> int:
        return self.X.shape[0]

    @property
    def d(self) -> int:
        return self.X.shape[1]


# ----------------------------------------------------------------- configs


@dataclass(frozen=True)
class LinearConfig:
    ridge_lambda: float = 1e-3

    def __post_init__(self):
        if not self.ridge_lambda >= 0:
            raise ParameterError("ridge_lambda must be >= 0")


@dataclass(frozen=True)
class SgdConfig:
    learning_rate: float = 0.01
    epochs: int = 50
    batch_size: int = 32
    seed: int = 0

    def __post_init__(self):
        if not self.learning_rate >= 0:
            raise ParameterError("learning_rate must be >= 0")
        if self.epochs < 1 or self.batch_size < 1:
            raise ParameterError("epochs and batch_size must be >= 1")


@dataclass(frozen=True)
class KnnConfig:
    k: int = 5

    def __post_init__(self):
        if self.k < 1:
            raise ParameterError("k must be >= 1")


@dataclass(frozen=True)
class TreeConfig:
    max_depth: Optional[int] = 12
    min_leaf: int = 1

    def __post_init__(self):
        if self.max_depth is not None and self.max_depth < 1:
            raise ParameterError("max_depth must be >= 1 or None")
        if self.min_leaf < 1:
            raise ParameterError("min_leaf must be >= 1")


@dataclass(frozen=True)
class ForestConfig:
    n_trees: int = 100
    bootstrap: bool = True
    max_features: Optional[int] = None  # None -> ceil(d / 3)
    max_depth: Optional[int] = 12
    min_leaf: int = 1
    seed: int = 0

    def __post_init__(self):
        if self.n_trees < 1:
            raise ParameterError("n_trees must be >= 1")
        if self.max_features is not None and self.max_features < 1:
            raise ParameterError("max_features must be >= 1")
        TreeConfig(self.max_depth, self.min_leaf)

    def features_for(self, d: int) -> int:
        m = math.ceil(d / 3) if self.max_features is None else self.max_features
        if not 1 <= m <= d:
            raise ParameterError(f"max_features={m} outside [1, {d}]")
        return m


CONFIG_TYPES = {
    "linear": LinearConfig,
    "sgd_linear": SgdConfig,
    "knn": KnnConfig,
    "tree": TreeConfig,
    "forest": ForestConfig,
}


def make_config(kind: str, options: dict | None = None):
    if kind not in CONFIG_TYPES:
        raise ParameterError(f"unknown baseline kind {kind!r}")
    return CONFIG_TYPES[kind](**(options or {}))


# ------------------------------------------------------------ fitted model


@dataclass(frozen=True, eq=False)
class FittedBaseline:
    kind: str
    n_features: int
    params: dict
    config: object
    trace: tuple[float, ...] = field(default=())

    def predict(self, x) -> float:
        return float(predict_all(self, np.asarray(x, dtype=np.float64)[None, :])[0])

    def to_json(self) -> dict:
        arrays = {}
        for name, value in self.params.items():
            a = np.asarray(value)
            arrays[name] = {"shape": list(a.shape), "dtype": str(a.dtype), "data": a.ravel().tolist()}
        return {
            "kind": self.kind,
            "n_features": self.n_features,
            "config": asdict(self.config),
            "arrays": arrays,
            "trace": list(self.trace),
        }

    @classmethod
    def from_json(cls, d: dict) -> "FittedBaseline":
        params = {
            name: np.asarray(spec["data"], dtype=spec["dtype"]).reshape(spec["shape"])
            for name, spec in d["arrays"].items()
        }
        return cls(d["kind"], int(d["n_features"]), params, make_config(d["kind"], d["config"]),
                   tuple(d.get("trace", ())))


def predict_all(model: FittedBaseline, X) -> np.ndarray:
    X = np.asarray(X, dtype=np.float64)
    if X.ndim == 1 and X.size == 0:
        return np.zeros(0)
    if X.ndim != 2 or X.shape[1] != model.n_features:
        raise ShapeError(f"expected {model.n_features} columns, got shape {X.shape}")
    if X.shape[0] == 0:
        return np.zeros(0)
    p = model.params
    if model.kind in ("linear", "sgd_linear"):
        out = X @ p["weights"] + float(p["intercept"])
    elif model.kind == "knn":
        out = _knn_predict(p["X"], p["y"], int(p["k"]), X)
    elif model.kind == "tree":
        out = _tree_predict(p, X)
    elif model.kind == "forest":
        out = np.mean([_tree_predict(_tree_slice(p, t), X) for t in range(int(p["n_trees"]))], axis=0)
    else:
        raise ParameterError(f"unknown baseline kind {model.kind!r}")
    return np.asarray(out, dtype=np.float64)


# ------------------------------------------------------------------ linear


def linear_fit(data: FlatDataset, cfg: LinearConfig = LinearConfig()) -> FittedBaseline:
    """Ridge regression via the normal equations; the intercept is unpenalized."""
    n, d = data.X.shape
    A = np.hstack([data.X, np.ones((n, 1))])
    if cfg.ridge_lambda == 0 and np.linalg.matrix_rank(A) < d + 1:
        raise SingularSystemError(
            "normal equations are singular (rank-deficient design); use ridge_lambda > 0"
        )
    gram = A.T @ A
    gram[np.arange(d), np.arange(d)] += cfg.ridge_lambda
    try:
        theta = np.linalg.solve(gram, A.T @ data.y)
    except np.linalg.LinAlgError:
        raise SingularSystemError("normal equations are singular; use ridge_lambda > 0") from None
    return FittedBaseline("linear", d, {"weights": theta[:d], "intercept": np.float64(theta[d])}, cfg)


def sgd_linear_fit(data: FlatDataset, cfg: SgdConfig = SgdConfig()) -> FittedBaseline:
    """Linear model trained by seeded mini-batch SGD from zero weights.

    Each step descends the gradient of half the batch mean squared error. The
    trace holds the full-data MSE after every epoch.
    """
    n, d = data.X.shape
    w = np.zeros(d)
    b = 0.0
    rng = np.random.default_rng(cfg.seed)
    bs = min(cfg.batch_size, n)
    trace = []
    for epoch in range(1, cfg.epochs + 1):
        order = rng.permutation(n)
        with np.errstate(over="ignore", invalid="ignore"):
            for lo in range(0, n, bs):
                idx = order[lo : lo + bs]
                Xb = data.X[idx]
                r = Xb @ w + b - data.y[idx]
                w = w - cfg.learning_rate * (Xb.T @ r) / len(idx)
                b = b - cfg.learning_rate * float(r.mean())
            resid = data.X @ w + b - data.y
            loss = float(np.mean(resid * resid))
        if not math.isfinite(loss):
            raise DivergenceError(
                f"SGD diverged at epoch {epoch} (learning_rate={cfg.learning_rate})", epoch=epoch
            )
        trace.append(loss)
    return FittedBaseline("sgd_linear", d, {"weights": w, "intercept": np.float64(b)}, cfg, tuple(trace))


# --------------------------------------------------------------------- knn


def knn_fit(data: FlatDataset, cfg: KnnConfig = KnnConfig()) -> FittedBaseline:
    if cfg.k > data.n:
        raise ParameterError(f"k={cfg.k} exceeds training size {data.n}")
    return FittedBaseline("knn", data.d, {"X": data.X.copy(), "y": data.y.copy(), "k": np.int64(cfg.k)}, cfg)


def knn_predict(model: FittedBaseline, x) -> float:
    return model.predict(x)


def _knn_predict(Xtr: np.ndarray, ytr: np.ndarray, k: int, Xq: np.ndarray) -> np.ndarray:
    out = np.empty(Xq.shape[0])
    for i, q in enumerate(Xq):
        diff = Xtr - q
        dist = np.sqrt(np.einsum("ij,ij->i", diff, diff))
        # stable sort keeps the lower training index first among equal distances
        nbrs = np.argsort(dist, kind="stable")[:k]
        out[i] = math.fsum(ytr[nbrs].tolist()) / k
    return out


# -------------------------------------------------------------------- tree


def best_split(X: np.ndarray, y: np.ndarray, features: np.ndarray, min_leaf: int):
    """Best ``(feature, threshold, reduction)`` by SSE reduction, or None.

    Thresholds are midpoints between consecutive distinct sorted values; a
    split is admissible when both children hold at least ``min_leaf`` rows.
    Ties resolve to the lower feature index, then the lower threshold.
    """
    n = len(y)
    if n < 2 * min_leaf:
        return None
    features = np.sort(np.asarray(features))
    Xs = X[:, features]
    order = np.argsort(Xs, axis=0, kind="stable")
    xs = np.take_along_axis(Xs, order, axis=0)
    yc = y - y.mean()
    ys = yc[order]
    csum = np.cumsum(ys, axis=0)[:-1]  # left sums for a split after position i
    total = ys.sum(axis=0)
    n_left = np.arange(1, n)[:, None].astype(np.float64)
    n_right = n - n_left
    # SSE reduction = S_L^2/n_L + S_R^2/n_R - S^2/n on centered targets
    gain = csum**2 / n_left + (total - csum) ** 2 / n_right - total**2 / n
    valid = (xs[1:] > xs[:-1]) & (n_left >= min_leaf) & (n_right >= min_leaf)
    gain = np.where(valid, gain, -np.inf)
    flat = gain.T.ravel()  # feature-major: argmax picks lowest feature, then lowest threshold
    top = flat.max()
    if not np.isfinite(top) or top <= 0:
        return None
    # gains equal up to rounding noise count as ties, so the ordering rule decides
    best = int(np.argmax(flat >= top - 1e-9 * max(1.0, top)))
    fj, pos = divmod(best, n - 1)
    thr = 0.5 * (xs[pos, fj] + xs[pos + 1, fj])
    return int(features[fj]), float(thr), float(flat[best])


def _grow(X, y, max_depth, min_leaf, n_candidates, rng):
    d = X.shape[1]
    feat, thr, left, right, value = [], [], [], [], []

    def new_node(idx):
        feat.append(-1)
        thr.append(0.0)
        left.append(-1)
        right.append(-1)
        value.append(float(np.mean(y[idx])))
        return len(feat) - 1

    stack = [(new_node(np.arange(len(y))), np.arange(len(y)), 0)]
    while stack:
        nid, idx, depth = stack.pop()
        yn = y[idx]
        if (max_depth is not None and depth >= max_depth) or np.ptp(yn) == 0:
            continue
        if n_candidates < d:
            cand = rng.choice(d, size=n_candidates, replace=False)
        else:
            cand = np.arange(d)
        found = best_split(X[idx], yn, cand, min_leaf)
        if found is None:
            continue
        f, t, _ = found
        go_left = X[idx, f] <= t
        feat[nid], thr[nid] = f, t
        left[nid] = new_node(idx[go_left])
        right[nid] = new_node(idx[~go_left])
        stack.append((right[nid], idx[~go_left], depth + 1))
        stack.append((left[nid], idx[go_left], depth + 1))

    return {
        "feature": np.array(feat, dtype=np.int64),
        "threshold": np.array(thr, dtype=np.float64),
        "left": np.array(left, dtype=np.int64),
        "right": np.array(right, dtype=np.int64),
        "value": np.array(value, dtype=np.float64),
    }


def _tree_predict(p: dict, X: np.ndarray) -> np.ndarray:
    feat, thr, left, right, value = p["feature"], p["threshold"], p["left"], p["right"], p["value"]
    nodes = np.zeros(X.shape[0], dtype=np.int64)
    rows = np.arange(X.shape[0])
    active = feat[nodes] >= 0
    while active.any():
        r, nd = rows[active], nodes[active]
        go_left = X[r, feat[nd]] <= thr[nd]
        nodes[active] = np.where(go_left, left[nd], right[nd])
        active = feat[nodes] >= 0
    return value[nodes]


def tree_fit(data: FlatDataset, cfg: TreeConfig = TreeConfig()) -> FittedBaseline:
    """Greedy CART regression tree grown by variance reduction."""
    params = _grow(data.X, data.y, cfg.max_depth, cfg.min_leaf, data.d, None)
    return FittedBaseline("tree", data.d, params, cfg)


# ------------------------------------------------------------------ forest

_TREE_KEYS = ("feature", "threshold", "left", "right", "value")


def _tree_slice(p: dict, t: int) -> dict:
    lo, hi = int(p["offsets"][t]), int(p["offsets"][t + 1])
    return {k: p[k][lo:hi] for k in _TREE_KEYS}


def forest_fit(data: FlatDataset, cfg: ForestConfig = ForestConfig()) -> FittedBaseline:
    """Bagged trees with per-split feature subsampling.

    Tree ``t`` draws from its own generator spawned off ``cfg.seed``, so the
    ensemble is reproducible and trees could be grown in any order.
    """
    m = cfg.features_for(data.d)
    streams = np.random.SeedSequence(cfg.seed).spawn(cfg.n_trees)
    trees = []
    for ss in streams:
        rng = np.random.default_rng(ss)
        if cfg.bootstrap:
            rows = rng.integers(0, data.n, size=data.n)
            X, y = data.X[rows], data.y[rows]
        else:
            X, y = data.X, data.y
        trees.append(_grow(X, y, cfg.max_depth, cfg.min_leaf, m, rng))
    sizes = [len(t["value"]) for t in trees]
    params = {k: np.concatenate([t[k] for t in trees]) for k in _TREE_KEYS}
    # child pointers stay tree-local; _tree_slice restores them per tree
    params["offsets"] = np.concatenate([[0], np.cumsum(sizes)]).astype(np.int64)
    params["n_trees"] = np.int64(cfg.n_trees)
    return FittedBaseline("forest", data.d, params, cfg)


FITTERS = {
    "linear": linear_fit,
    "sgd_linear": sgd_linear_fit,
    "knn": knn_fit,
    "tree": tree_fit,
    "forest": forest_fit,
}


def fit(kind: str, data: FlatDataset, cfg=None) -> FittedBaseline:
    if kind not in FITTERS:
        raise ParameterError(f"unknown baseline kind {kind!r}; expected one of {KINDS}")
    return FITTERS[kind](data, cfg if cfg is not None else CONFIG_TYPES[kind]())
