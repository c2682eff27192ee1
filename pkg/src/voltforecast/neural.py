"""Gradient-trained models in plain numpy.

Three models share one interface: an ``arrays`` dict of named float64
parameters, ``predict(X)`` and ``loss_and_grad(X, Y)``. The training
objective for every model is half the batch mean squared error, so for a
single regression sample the loss is ``0.5 * (prediction - target) ** 2``.
Reported losses (traces, metrics) are the plain MSE.

LSTM cell, per step::

    i = sigmoid(W_i x + U_i h + b_i)      f = sigmoid(W_f x + U_f h + b_f)
    o = sigmoid(W_o x + U_o h + b_o)      g = tanh(W_c x + U_c h + b_c)
    c = f * c_prev + i * g                h = o * tanh(c)

with ``h0 = c0 = 0`` and a linear readout ``w_y . h_L + b_y``.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from typing import Optional, Sequence

import numpy as np
from scipy.special import expit

from .errors import DivergenceError, ParameterError, ShapeError, VoltForecastError

GATES = ("i", "f", "o", "c")

DEFAULT_HIDDEN = 32
DEFAULT_CLIP = 5.0


sigmoid = expit


def _copy_arrays(arrays: dict) -> dict:
    return {k: np.array(v, dtype=np.float64, copy=True) for k, v in arrays.items()}


def _arrays_to_json(arrays: dict) -> dict:
    return {k: {"shape": list(np.shape(v)), "data": np.asarray(v).ravel().tolist()} for k, v in arrays.items()}


def _arrays_from_json(d: dict) -> dict:
    return {k: np.asarray(v["data"], dtype=np.float64).reshape(v["shape"]) for k, v in d.items()}


# -------------------------------------------------------------------- LSTM


@dataclass(eq=False)
class LstmParams:
    arrays: dict
    hidden_size: int
    input_size: int

    kind = "lstm"

    def __post_init__(self):
        h, d = self.hidden_size, self.input_size
        expected = {"w_y": (h,), "b_y": ()}
        for g in GATES:
            expected[f"W_{g}"] = (h, d)
            expected[f"U_{g}"] = (h, h)
            expected[f"b_{g}"] = (h,)
        if set(self.arrays) != set(expected):
            raise ShapeError(f"LSTM parameter names {sorted(self.arrays)} != {sorted(expected)}")
        for k, shape in expected.items():
            a = np.asarray(self.arrays[k], dtype=np.float64)
            if a.shape != shape:
                raise ShapeError(f"{k} has shape {a.shape}, expected {shape}")
            self.arrays[k] = a

    @classmethod
    def zeros(cls, input_size: int, hidden_size: int) -> "LstmParams":
        h, d = hidden_size, input_size
        arrays = {"w_y": np.zeros(h), "b_y": np.zeros(())}
        for g in GATES:
            arrays[f"W_{g}"] = np.zeros((h, d))
            arrays[f"U_{g}"] = np.zeros((h, h))
            arrays[f"b_{g}"] = np.zeros(h)
        return cls(arrays, h, d)

    def fan_in(self, name: str) -> int:
        return self.hidden_size if name in ("w_y", "b_y") else self.input_size + self.hidden_size

    def replace(self, arrays: dict) -> "LstmParams":
        return LstmParams(arrays, self.hidden_size, self.input_size)

    def _stacked(self):
        a = self.arrays
        Wx = np.concatenate([a[f"W_{g}"] for g in GATES], axis=0).T  # (d, 4h)
        Uh = np.concatenate([a[f"U_{g}"] for g in GATES], axis=0).T  # (h, 4h)
        b = np.concatenate([a[f"b_{g}"] for g in GATES])
        return Wx, Uh, b

    def forward_batch(self, X: np.ndarray):
        """Predictions ``(B,)`` and the per-step cache for :meth:`backward_batch`."""
        X = np.asarray(X, dtype=np.float64)
        if X.ndim != 3 or X.shape[2] != self.input_size:
            raise ShapeError(f"expected (batch, L, {self.input_size}) input, got {X.shape}")
        B, L, _ = X.shape
        h = self.hidden_size
        Wx, Uh, b = self._stacked()
        h_t = np.zeros((B, h))
        c_t = np.zeros((B, h))
        steps = []
        xz = X @ Wx + b  # (B, L, 4h)
        for t in range(L):
            z = xz[:, t] + h_t @ Uh
            s = sigmoid(z[:, : 3 * h])
            i, f, o = s[:, :h], s[:, h : 2 * h], s[:, 2 * h :]
            g = np.tanh(z[:, 3 * h :])
            c_prev, h_prev = c_t, h_t
            c_t = f * c_prev + i * g
            tc = np.tanh(c_t)
            h_t = o * tc
            steps.append((i, f, o, g, c_prev, h_prev, c_t, tc))
        pred = h_t @ self.arrays["w_y"] + float(self.arrays["b_y"])
        return pred, {"X": X, "steps": steps, "h_last": h_t}

    def backward_batch(self, cache: dict, dpred: np.ndarray) -> dict:
        """Gradients given ``dLoss/dprediction`` for each batch row."""
        X, steps = cache["X"], cache["steps"]
        h = self.hidden_size
        _, Uh, _ = self._stacked()
        dWx = np.zeros((self.input_size, 4 * h))
        dUh = np.zeros((h, 4 * h))
        db = np.zeros(4 * h)
        grads = {"w_y": cache["h_last"].T @ dpred, "b_y": np.asarray(dpred.sum())}
        dh = np.outer(dpred, self.arrays["w_y"])
        dc = np.zeros_like(dh)
        for t in range(len(steps) - 1, -1, -1):
            i, f, o, g, c_prev, h_prev, c_t, tc = steps[t]
            do = dh * tc
            dc = dc + dh * o * (1.0 - tc * tc)
            dz = np.concatenate(
                [
                    dc * g * i * (1.0 - i),
                    dc * c_prev * f * (1.0 - f),
                    do * o * (1.0 - o),
                    dc * i * (1.0 - g * g),
                ],
                axis=1,
            )
            dWx += X[:, t].T @ dz
            dUh += h_prev.T @ dz
            db += dz.sum(axis=0)
            dh = dz @ Uh.T
            dc = dc * f
        for k, g in enumerate(GATES):
            sl = slice(k * h, (k + 1) * h)
            grads[f"W_{g}"] = dWx[:, sl].T
            grads[f"U_{g}"] = dUh[:, sl].T
            grads[f"b_{g}"] = db[sl]
        return grads

    def predict(self, X) -> np.ndarray:
        return self.forward_batch(X)[0]

    def loss_and_grad(self, X, Y):
        pred, cache = self.forward_batch(X)
        r = pred - np.asarray(Y, dtype=np.float64).ravel()
        n = len(r)
        return 0.5 * float(r @ r) / n, self.backward_batch(cache, r / n)


def lstm_forward(params: LstmParams, window):
    """Forward pass over one ``(L, d)`` window; returns ``(prediction, cache)``."""
    window = np.asarray(window, dtype=np.float64)
    if window.ndim != 2:
        raise ShapeError(f"window must be (L, d), got shape {window.shape}")
    pred, cache = params.forward_batch(window[None])
    return float(pred[0]), cache


def lstm_backward(params: LstmParams, window, target: float, cache) -> dict:
    """Gradients of ``0.5 * (prediction - target) ** 2`` by backprop through time."""
    window = np.asarray(window, dtype=np.float64)
    cached = cache["X"]
    if cached.shape != (1,) + window.shape or not np.array_equal(cached[0], window):
        raise VoltForecastError("cache does not belong to this window")
    pred = float(cache["h_last"][0] @ params.arrays["w_y"] + float(params.arrays["b_y"]))
    return params.backward_batch(cache, np.array([pred - float(target)]))


# --------------------------------------------------------------------- MLP


@dataclass(eq=False)
class MlpParams:
    """Dense network with tanh hidden layers and a scalar linear output."""

    arrays: dict
    layer_sizes: tuple[int, ...]  # input, hidden..., 1
    activation: str = "tanh"

    kind = "mlp"

    def __post_init__(self):
        self.layer_sizes = tuple(int(s) for s in self.layer_sizes)
        if len(self.layer_sizes) < 2 or self.layer_sizes[-1] != 1:
            raise ShapeError("layer_sizes must chain input -> ... -> 1")
        if self.activation not in ("tanh", "linear"):
            raise ParameterError(f"unknown activation {self.activation!r}")
        for k in range(len(self.layer_sizes) - 1):
            shape_w = (self.layer_sizes[k + 1], self.layer_sizes[k])
            for name, shape in ((f"W{k}", shape_w), (f"b{k}", shape_w[:1])):
                a = np.asarray(self.arrays[name], dtype=np.float64)
                if a.shape != shape:
                    raise ShapeError(f"{name} has shape {a.shape}, expected {shape}")
                self.arrays[name] = a

    @property
    def n_layers(self) -> int:
        return len(self.layer_sizes) - 1

    def fan_in(self, name: str) -> int:
        return self.layer_sizes[int(name[1:])]

    def replace(self, arrays: dict) -> "MlpParams":
        return MlpParams(arrays, self.layer_sizes, self.activation)

    def _forward(self, X):
        X = np.asarray(X, dtype=np.float64)
        if X.ndim != 2 or X.shape[1] != self.layer_sizes[0]:
            raise ShapeError(f"expected (batch, {self.layer_sizes[0]}) input, got {X.shape}")
        acts = [X]
        a = X
        for k in range(self.n_layers):
            z = a @ self.arrays[f"W{k}"].T + self.arrays[f"b{k}"]
            last = k == self.n_layers - 1
            a = z if (last or self.activation == "linear") else np.tanh(z)
            acts.append(a)
        return acts[-1][:, 0], acts

    def predict(self, X) -> np.ndarray:
        return self._forward(X)[0]

    def loss_and_grad(self, X, Y):
        pred, acts = self._forward(X)
        r = pred - np.asarray(Y, dtype=np.float64).ravel()
        n = len(r)
        grads = {}
        delta = (r / n)[:, None]
        for k in range(self.n_layers - 1, -1, -1):
            grads[f"W{k}"] = delta.T @ acts[k]
            grads[f"b{k}"] = delta.sum(axis=0)
            if k > 0:
                delta = delta @ self.arrays[f"W{k}"]
                if self.activation == "tanh":
                    delta = delta * (1.0 - acts[k] ** 2)
        return 0.5 * float(r @ r) / n, grads


# ------------------------------------------------------------- autoencoder


@dataclass(eq=False)
class AutoencoderParams:
    """``d -> h`` encoder (tanh or linear) and linear ``h -> d`` decoder."""

    arrays: dict
    input_size: int
    bottleneck: int
    activation: str = "tanh"

    kind = "autoencoder"

    def __post_init__(self):
        d, h = self.input_size, self.bottleneck
        if not 1 <= h <= d:
            raise ShapeError(f"bottleneck must be in [1, {d}], got {h}")
        if self.activation not in ("tanh", "linear"):
            raise ParameterError(f"unknown activation {self.activation!r}")
        expected = {"W_enc": (h, d), "b_enc": (h,), "W_dec": (d, h), "b_dec": (d,)}
        for name, shape in expected.items():
            a = np.asarray(self.arrays[name], dtype=np.float64)
            if a.shape != shape:
                raise ShapeError(f"{name} has shape {a.shape}, expected {shape}")
            self.arrays[name] = a

    def fan_in(self, name: str) -> int:
        return self.input_size if name.endswith("enc") else self.bottleneck

    def replace(self, arrays: dict) -> "AutoencoderParams":
        return AutoencoderParams(arrays, self.input_size, self.bottleneck, self.activation)

    def encode_batch(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=np.float64)
        if X.ndim != 2 or X.shape[1] != self.input_size:
            raise ShapeError(f"expected (batch, {self.input_size}) input, got {X.shape}")
        z = X @ self.arrays["W_enc"].T + self.arrays["b_enc"]
        return np.tanh(z) if self.activation == "tanh" else z

    def predict(self, X) -> np.ndarray:
        """Reconstruction of ``X``."""
        return self.encode_batch(X) @ self.arrays["W_dec"].T + self.arrays["b_dec"]

    def loss_and_grad(self, X, Y=None):
        X = np.asarray(X, dtype=np.float64)
        Y = X if Y is None else np.asarray(Y, dtype=np.float64)
        code = self.encode_batch(X)
        recon = code @ self.arrays["W_dec"].T + self.arrays["b_dec"]
        r = recon - Y
        scale = 1.0 / r.size  # mean over batch and dimensions
        dr = r * scale
        dcode = dr @ self.arrays["W_dec"]
        if self.activation == "tanh":
            dcode = dcode * (1.0 - code**2)
        grads = {
            "W_dec": dr.T @ code,
            "b_dec": dr.sum(axis=0),
            "W_enc": dcode.T @ X,
            "b_enc": dcode.sum(axis=0),
        }
        return 0.5 * float(np.sum(r * r)) * scale, grads


def encode(params: AutoencoderParams, x) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    if x.ndim == 1:
        return params.encode_batch(x[None])[0]
    return params.encode_batch(x)


Model = LstmParams | MlpParams | AutoencoderParams


# ------------------------------------------------------------ initialization


def _uniform_init(model, rng: np.random.Generator):
    arrays = {}
    for name in sorted(model.arrays):
        bound = 1.0 / math.sqrt(model.fan_in(name))
        arrays[name] = rng.uniform(-bound, bound, size=np.shape(model.arrays[name]))
    return model.replace(arrays)


def init_lstm(input_size: int, hidden_size: int = DEFAULT_HIDDEN, seed: int = 0) -> LstmParams:
    """Uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)); gate fan-in is ``d + hidden``."""
    return _uniform_init(LstmParams.zeros(input_size, hidden_size), np.random.default_rng(seed))


def init_mlp(input_size: int, hidden: Sequence[int] = (DEFAULT_HIDDEN,), seed: int = 0,
             activation: str = "tanh") -> MlpParams:
    sizes = (input_size, *hidden, 1)
    arrays = {}
    for k in range(len(sizes) - 1):
        arrays[f"W{k}"] = np.zeros((sizes[k + 1], sizes[k]))
        arrays[f"b{k}"] = np.zeros(sizes[k + 1])
    return _uniform_init(MlpParams(arrays, sizes, activation), np.random.default_rng(seed))


def default_bottleneck(d: int) -> int:
    return math.ceil(d / 2)


def init_autoencoder(input_size: int, bottleneck: Optional[int] = None, seed: int = 0,
                     activation: str = "tanh") -> AutoencoderParams:
    h = default_bottleneck(input_size) if bottleneck is None else bottleneck
    d = input_size
    zeros = {"W_enc": np.zeros((h, d)), "b_enc": np.zeros(h), "W_dec": np.zeros((d, h)), "b_dec": np.zeros(d)}
    return _uniform_init(AutoencoderParams(zeros, d, h, activation), np.random.default_rng(seed))


# ------------------------------------------------------------------ training


@dataclass(frozen=True)
class TrainConfig:
    epochs: int = 30
    batch_size: int = 32
    learning_rate: float = 0.01
    seed: int = 0
    grad_clip: Optional[float] = DEFAULT_CLIP
    shuffle_each_epoch: bool = True
    validation_fraction: float = 0.0

    def __post_init__(self):
        if int(self.epochs) < 1:
            raise ParameterError("epochs must be >= 1")
        if int(self.batch_size) < 1:
            raise ParameterError("batch_size must be >= 1")
        if not self.learning_rate >= 0:
            raise ParameterError("learning_rate must be >= 0")
        if self.grad_clip is not None and not self.grad_clip > 0:
            raise ParameterError("grad_clip must be positive or None")
        if not 0 <= self.validation_fraction < 1:
            raise ParameterError("validation_fraction must be in [0, 1)")
        if not 0 <= int(self.seed) < 2**64:
            raise ParameterError("seed must be a 64-bit unsigned integer")

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class TrainTrace:
    train_loss: tuple[float, ...]
    val_loss: tuple[float, ...] = field(default=())

    def __len__(self):
        return len(self.train_loss)


def _global_norm(grads: dict) -> float:
    return math.sqrt(sum(float(np.sum(g * g)) for g in grads.values()))


def _mse(model, X, Y) -> float:
    pred = model.predict(X)
    return float(np.mean((pred - Y) ** 2))


def train(model: Model, X, Y=None, cfg: TrainConfig = TrainConfig()):
    """Mini-batch SGD; returns ``(fitted_model, TrainTrace)``.

    The last ``floor(n * validation_fraction)`` samples are held out for
    validation. Per-epoch training loss is the sample-weighted mean of the
    batch MSEs seen during that epoch.
    """
    return train_snapshots(model, X, Y, cfg, (cfg.epochs,))[cfg.epochs]


def train_snapshots(model: Model, X, Y, cfg: TrainConfig, epochs: Sequence[int]) -> dict:
    """Train for ``max(epochs)`` and snapshot the state after each listed epoch.

    The snapshot at epoch ``e`` is bit-identical to ``train`` run with
    ``cfg.epochs = e``, so an epoch grid costs a single run.
    """
    X = np.asarray(X, dtype=np.float64)
    if isinstance(model, AutoencoderParams):
        Y = X if Y is None else np.asarray(Y, dtype=np.float64)
    else:
        Y = np.asarray(Y, dtype=np.float64).ravel()
    n = len(X)
    if n == 0 or len(Y) != n:
        raise ShapeError("training data must be non-empty with matching X and Y")
    wanted = sorted({int(e) for e in epochs})
    if not wanted or wanted[0] < 1:
        raise ParameterError("snapshot epochs must be >= 1")
    n_val = math.floor(n * cfg.validation_fraction)
    n_tr = n - n_val
    if cfg.batch_size > n_tr:
        raise ParameterError(f"batch_size={cfg.batch_size} exceeds training-set size {n_tr}")
    Xtr, Ytr, Xva, Yva = X[:n_tr], Y[:n_tr], X[n_tr:], Y[n_tr:]
    rng = np.random.default_rng(cfg.seed)
    current = model.replace(_copy_arrays(model.arrays))
    arrays = current.arrays
    train_hist, val_hist = [], []
    out = {}
    for epoch in range(1, wanted[-1] + 1):
        order = rng.permutation(n_tr) if cfg.shuffle_each_epoch else np.arange(n_tr)
        total = 0.0
        with np.errstate(over="ignore", invalid="ignore"):
            for lo in range(0, n_tr, cfg.batch_size):
                idx = order[lo : lo + cfg.batch_size]
                loss, grads = current.loss_and_grad(Xtr[idx], Ytr[idx])
                if not math.isfinite(loss):
                    raise DivergenceError(
                        f"non-finite training loss at epoch {epoch} (learning_rate={cfg.learning_rate})",
                        epoch=epoch,
                    )
                total += 2.0 * loss * len(idx)
                scale = cfg.learning_rate
                if cfg.grad_clip is not None:
                    norm = _global_norm(grads)
                    if norm > cfg.grad_clip:
                        scale *= cfg.grad_clip / norm
                if scale:
                    for k in arrays:
                        arrays[k] -= scale * grads[k]
            train_hist.append(total / n_tr)
            if n_val:
                v = _mse(current, Xva, Yva)
                if not math.isfinite(v):
                    raise DivergenceError(f"non-finite validation loss at epoch {epoch}", epoch=epoch)
                val_hist.append(v)
        if epoch in wanted:
            out[epoch] = (current.replace(_copy_arrays(arrays)), TrainTrace(tuple(train_hist), tuple(val_hist)))
    return out


# ---------------------------------------------------------- gradient check


def _flat_loss(model, X, Y) -> float:
    return model.loss_and_grad(X, Y)[0]


def gradient_check(model: Model, X, Y=None, epsilon: float = 1e-5) -> float:
    """Max relative error between analytic and central-difference gradients.

    Relative error per coordinate is ``|a - n| / max(|a|, |n|, 1e-12)``.
    """
    if not 1e-7 <= epsilon <= 1e-3:
        raise ParameterError("epsilon must be in [1e-7, 1e-3]")
    _, analytic = model.loss_and_grad(X, Y)
    worst = 0.0
    for name, base in model.arrays.items():
        flat = base.ravel()
        ga = np.asarray(analytic[name]).ravel()
        for j in range(flat.size):
            plus = _copy_arrays(model.arrays)
            minus = _copy_arrays(model.arrays)
            plus[name].ravel()[j] += epsilon
            minus[name].ravel()[j] -= epsilon
            num = (_flat_loss(model.replace(plus), X, Y) - _flat_loss(model.replace(minus), X, Y)) / (2 * epsilon)
            a = float(ga[j])
            err = abs(a - num) / max(abs(a), abs(num), 1e-12)
            worst = max(worst, err)
    return worst


# ------------------------------------------------------------------ JSON


def model_to_json(model: Model) -> dict:
    d = {"kind": model.kind, "arrays": _arrays_to_json(model.arrays)}
    if isinstance(model, LstmParams):
        d.update(hidden_size=model.hidden_size, input_size=model.input_size)
    elif isinstance(model, MlpParams):
        d.update(layer_sizes=list(model.layer_sizes), activation=model.activation)
    else:
        d.update(input_size=model.input_size, bottleneck=model.bottleneck, activation=model.activation)
    return d


def model_from_json(d: dict) -> Model:
    arrays = _arrays_from_json(d["arrays"])
    if d["kind"] == "lstm":
        return LstmParams(arrays, int(d["hidden_size"]), int(d["input_size"]))
    if d["kind"] == "mlp":
        return MlpParams(arrays, tuple(d["layer_sizes"]), d["activation"])
    if d["kind"] == "autoencoder":
        return AutoencoderParams(arrays, int(d["input_size"]), int(d["bottleneck"]), d["activation"])
    raise ParameterError(f"unknown neural model kind {d['kind']!r}")
