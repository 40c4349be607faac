"""Fixed-width ReLU network, its losses, gradients, Adam, and training.

The model is a fully connected net with H hidden layers of equal width
(7 x 110 by default) and a scalar affine head; hidden layers apply
componentwise ReLU.  Two losses ship: plain mean squared error and a
radial variant that adds a penalty tying the realization at x to the
realization at -x, which steers the fit toward even functions.
Gradients are exact reverse-mode differentiation (ReLU slope at the
kink taken as 0), updates are standard bias-corrected Adam, and the
minibatch loop samples without replacement each iteration.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, DataError, NumericsError
from .sampler import RngStream

HIDDEN_LAYERS = 7
WIDTH = 110

ADAM_BETA1 = 0.9
ADAM_BETA2 = 0.999
ADAM_EPS = 1e-8


@dataclass
class MlpModel:
    """Weights W_i (k_i x k_{i-1}) and biases B_i (k_i,), i = 1..H+1."""

    weights: list
    biases: list

    def __post_init__(self):
        if len(self.weights) != len(self.biases) or not self.weights:
            raise ConfigError("weights and biases must be nonempty, same length")
        weights = [np.asarray(w, dtype=float) for w in self.weights]
        biases = [np.asarray(b, dtype=float) for b in self.biases]
        for i, (w, b) in enumerate(zip(weights, biases), start=1):
            if w.ndim != 2 or b.shape != (w.shape[0],):
                raise ConfigError(
                    f"layer {i}: weight shape {w.shape} and bias shape {b.shape} disagree")
            if i > 1 and w.shape[1] != weights[i - 2].shape[0]:
                raise ConfigError(
                    f"layer {i}: fan-in {w.shape[1]} does not match previous width "
                    f"{weights[i - 2].shape[0]}")
            if not (np.all(np.isfinite(w)) and np.all(np.isfinite(b))):
                raise ConfigError(f"layer {i}: non-finite parameters")
        self.weights = weights
        self.biases = biases

    @property
    def layer_dims(self) -> tuple:
        return (self.weights[0].shape[1],) + tuple(w.shape[0] for w in self.weights)

    @property
    def param_count(self) -> int:
        return sum(w.size + b.size for w, b in zip(self.weights, self.biases))

    def copy(self) -> "MlpModel":
        return MlpModel([w.copy() for w in self.weights],
                        [b.copy() for b in self.biases])


def init_mlp(d: int, rng: RngStream, hidden_layers: int = HIDDEN_LAYERS,
             width: int = WIDTH) -> MlpModel:
    """Fresh model: weights uniform on (-1, 1)/sqrt(fan_in), biases zero.

    Layers draw in order 1..H+1, each weight matrix row-major, so a
    seed pins every parameter.
    """
    if d < 1:
        raise ConfigError(f"d must be >= 1, got {d}")
    if hidden_layers < 1 or width < 1:
        raise ConfigError("hidden_layers and width must be >= 1")
    gen = rng.generator()
    dims = [d] + [width] * hidden_layers + [1]
    weights, biases = [], []
    for fan_in, fan_out in zip(dims[:-1], dims[1:]):
        weights.append(gen.uniform(-1.0, 1.0, (fan_out, fan_in)) / math.sqrt(fan_in))
        biases.append(np.zeros(fan_out))
    return MlpModel(weights, biases)


def realize_batch(m: MlpModel, xs) -> np.ndarray:
    """Network outputs for rows of xs, shape (n,)."""
    a = np.asarray(xs, dtype=float)
    d = m.weights[0].shape[1]
    if a.ndim != 2 or a.shape[1] != d:
        raise ValueError(f"xs must be (n, {d}), got shape {a.shape}")
    for w, b in zip(m.weights[:-1], m.biases[:-1]):
        a = np.maximum(a @ w.T + b, 0.0)
    out = a @ m.weights[-1].T + m.biases[-1]
    return out[:, 0]


def realize(m: MlpModel, x) -> float:
    """Network output at a single point (the batch path applied to one row)."""
    x = np.atleast_1d(np.asarray(x, dtype=float))
    return float(realize_batch(m, x[None, :])[0])


def _forward_cached(m, xs):
    acts = [np.asarray(xs, dtype=float)]
    pre = []
    a = acts[0]
    for w, b in zip(m.weights[:-1], m.biases[:-1]):
        z = a @ w.T + b
        pre.append(z)
        a = np.maximum(z, 0.0)
        acts.append(a)
    out = a @ m.weights[-1].T + m.biases[-1]
    return acts, pre, out[:, 0]


def _backward(m, acts, pre, dl_dy):
    """Parameter gradients given d(loss)/d(output) per row."""
    gw = [None] * len(m.weights)
    gb = [None] * len(m.biases)
    delta = dl_dy[:, None]
    for i in range(len(m.weights) - 1, -1, -1):
        gw[i] = delta.T @ acts[i]
        gb[i] = delta.sum(axis=0)
        if i > 0:
            delta = (delta @ m.weights[i]) * (pre[i - 1] > 0.0)
    return gw, gb


def loss_mse(m: MlpModel, xs, u_hats) -> float:
    """(1/L) sum (realize(x_l) - u_hat_l)^2."""
    xs = np.asarray(xs, dtype=float)
    u_hats = np.asarray(u_hats, dtype=float)
    if len(xs) == 0:
        raise ValueError("loss needs a nonempty batch")
    err = realize_batch(m, xs) - u_hats
    return float(np.mean(err**2))


def loss_radial(m: MlpModel, xs, u_hats) -> float:
    """(1/2L) sum [(y_l - u_hat_l)^2 + (y_l - y(-x_l))^2].

    The second term penalizes asymmetry under x -> -x; for an exactly
    even realization this loss is half of loss_mse.
    """
    xs = np.asarray(xs, dtype=float)
    u_hats = np.asarray(u_hats, dtype=float)
    if len(xs) == 0:
        raise ValueError("loss needs a nonempty batch")
    y = realize_batch(m, xs)
    y_neg = realize_batch(m, -xs)
    return float(0.5 * np.mean((y - u_hats) ** 2 + (y - y_neg) ** 2))


def _loss_and_gradient(m, xs, u_hats, radial_loss):
    """Selected loss value and its exact parameter gradient."""
    n = len(xs)
    if n == 0:
        raise ValueError("loss needs a nonempty batch")
    acts, pre, y = _forward_cached(m, xs)
    if not radial_loss:
        err = y - u_hats
        loss = float(np.mean(err**2))
        gw, gb = _backward(m, acts, pre, 2.0 * err / n)
        return loss, gw, gb
    acts_n, pre_n, y_neg = _forward_cached(m, -np.asarray(xs, dtype=float))
    err = y - u_hats
    asym = y - y_neg
    loss = float(0.5 * np.mean(err**2 + asym**2))
    gw, gb = _backward(m, acts, pre, (err + asym) / n)
    gw_n, gb_n = _backward(m, acts_n, pre_n, -asym / n)
    for i in range(len(gw)):
        gw[i] += gw_n[i]
        gb[i] += gb_n[i]
    return loss, gw, gb


def gradient(m: MlpModel, xs, u_hats, radial_loss: bool = False):
    """Exact gradient of the selected loss: (dW list, dB list)."""
    xs = np.asarray(xs, dtype=float)
    u_hats = np.asarray(u_hats, dtype=float)
    _, gw, gb = _loss_and_gradient(m, xs, u_hats, radial_loss)
    return gw, gb


@dataclass
class AdamState:
    """First/second moment accumulators, shaped like the model."""

    mw: list
    vw: list
    mb: list
    vb: list
    t: int = 0

    @classmethod
    def zeros_like(cls, m: MlpModel) -> "AdamState":
        return cls(mw=[np.zeros_like(w) for w in m.weights],
                   vw=[np.zeros_like(w) for w in m.weights],
                   mb=[np.zeros_like(b) for b in m.biases],
                   vb=[np.zeros_like(b) for b in m.biases])


def adam_step(m: MlpModel, s: AdamState, grad, gamma: float):
    """One bias-corrected Adam update; returns the new (model, state)."""
    gw, gb = grad
    for g in list(gw) + list(gb):
        if not np.all(np.isfinite(g)):
            raise NumericsError("non-finite gradient in adam_step")
    t = s.t + 1
    c1 = 1.0 - ADAM_BETA1**t
    c2 = 1.0 - ADAM_BETA2**t
    new_w, new_b = [], []
    new_state = AdamState(mw=[], vw=[], mb=[], vb=[], t=t)
    for w, g, mo, vo in zip(m.weights, gw, s.mw, s.vw):
        mo = ADAM_BETA1 * mo + (1.0 - ADAM_BETA1) * g
        vo = ADAM_BETA2 * vo + (1.0 - ADAM_BETA2) * g**2
        new_w.append(w - gamma * (mo / c1) / (np.sqrt(vo / c2) + ADAM_EPS))
        new_state.mw.append(mo)
        new_state.vw.append(vo)
    for b, g, mo, vo in zip(m.biases, gb, s.mb, s.vb):
        mo = ADAM_BETA1 * mo + (1.0 - ADAM_BETA1) * g
        vo = ADAM_BETA2 * vo + (1.0 - ADAM_BETA2) * g**2
        new_b.append(b - gamma * (mo / c1) / (np.sqrt(vo / c2) + ADAM_EPS))
        new_state.mb.append(mo)
        new_state.vb.append(vo)
    return MlpModel(new_w, new_b), new_state


@dataclass(frozen=True)
class TrainConfig:
    """Minibatch training knobs.

    seed is bookkeeping for checkpoints and reports; the stream that
    actually drives initialization and batch picks is the rng handed to
    train.
    """

    n_iter: int = 1000
    batch_size: int = 400
    gamma: float = 5e-3
    radial_loss: bool = False
    seed: int = 0

    def __post_init__(self):
        if self.n_iter < 0:
            raise ConfigError(f"n_iter must be >= 0, got {self.n_iter}")
        if self.batch_size < 1:
            raise ConfigError(f"batch_size must be >= 1, got {self.batch_size}")
        if not (0.0 < self.gamma < 1.0):
            raise ConfigError(f"gamma must lie in (0, 1), got {self.gamma}")


@dataclass
class TrainResult:
    model: MlpModel
    loss_trace: np.ndarray = field(default_factory=lambda: np.empty(0))


def train(ts, cfg: TrainConfig, rng: RngStream, model: MlpModel = None) -> TrainResult:
    """Run cfg.n_iter Adam steps on minibatches of the training set.

    Each iteration samples batch_size pairs uniformly without
    replacement and records the batch loss.  When no model is passed,
    one is initialized on rng.substream(0); batch picks always come
    from rng.substream(1), so a warm start changes nothing about which
    batches a seed yields.
    """
    if cfg.batch_size > len(ts):
        raise ConfigError(
            f"batch_size {cfg.batch_size} exceeds training set size {len(ts)}")
    if model is None:
        model = init_mlp(ts.dim, rng.substream(0))
    elif model.layer_dims[0] != ts.dim:
        raise ConfigError(
            f"model expects d={model.layer_dims[0]}, training set has d={ts.dim}")
    batch_gen = rng.substream(1).generator()
    state = AdamState.zeros_like(model)
    trace = np.empty(cfg.n_iter)
    xs, us = ts.xs, ts.u_hats
    for it in range(cfg.n_iter):
        idx = batch_gen.permutation(len(xs))[:cfg.batch_size]
        loss, gw, gb = _loss_and_gradient(model, xs[idx], us[idx], cfg.radial_loss)
        trace[it] = loss
        model, state = adam_step(model, state, (gw, gb), cfg.gamma)
    return TrainResult(model=model, loss_trace=trace)


def save_checkpoint(path, m: MlpModel, meta: dict = None) -> None:
    """JSON checkpoint: layer_dims, row-major weights, biases, meta.

    Floats serialize at full precision (shortest round-trip decimal),
    so load_checkpoint reproduces the parameters bit-for-bit.
    """
    payload = {
        "layer_dims": list(m.layer_dims),
        "weights": [w.tolist() for w in m.weights],
        "biases": [b.tolist() for b in m.biases],
        "meta": dict(meta or {}),
    }
    text = json.dumps(payload)
    if hasattr(path, "write"):
        path.write(text)
    else:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(text)


def load_checkpoint(path):
    """Inverse of save_checkpoint: returns (model, meta)."""
    if hasattr(path, "read"):
        text = path.read()
    else:
        with open(path, "r", encoding="utf-8") as fh:
            text = fh.read()
    try:
        payload = json.loads(text)
    except json.JSONDecodeError as exc:
        raise DataError(f"checkpoint is not valid JSON: {exc}") from None
    try:
        dims = tuple(payload["layer_dims"])
        weights = [np.asarray(w, dtype=float) for w in payload["weights"]]
        biases = [np.asarray(b, dtype=float) for b in payload["biases"]]
        meta = dict(payload.get("meta", {}))
    except (KeyError, TypeError, ValueError) as exc:
        raise DataError(f"malformed checkpoint: {exc}") from None
    try:
        model = MlpModel(weights, biases)
    except ConfigError as exc:
        raise DataError(f"malformed checkpoint: {exc}") from None
    if model.layer_dims != dims:
        raise DataError(
            f"checkpoint layer_dims {dims} disagree with stored shapes "
            f"{model.layer_dims}")
    return model, meta
