"""Temporal binary rally classifier.

Two interchangeable kinds:

  pooled-logistic   sigmoid(w . meanpool_t(features) + b). Convex objective,
                    the reference implementation used for acceptance.
  recurrent         two stacked tanh recurrences (hidden sizes 256 and 64 by
                    default) with a sigmoid output unit, trained by BPTT.

Training minimizes mean binary cross-entropy computed in logit space
(log-sum-exp form, no overflow at confident predictions) plus l2*||w||^2 on
the weight matrices, by full-batch gradient descent.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ClassifierError
from .sampler import WindowSample

_P_CLIP = 1e-12  # keeps predictions strictly inside (0, 1)

KIND_POOLED = "pooled-logistic"
KIND_RECURRENT = "recurrent"


@dataclass(frozen=True, eq=False)
class PooledLogisticModel:
    w: np.ndarray
    b: float

    kind = KIND_POOLED

    @property
    def d_in(self) -> int:
        return int(self.w.shape[0])

    def params(self) -> dict[str, np.ndarray]:
        return {"w": self.w, "b": np.asarray([self.b])}

    def replace(self, values: dict[str, np.ndarray]) -> "PooledLogisticModel":
        return PooledLogisticModel(values["w"].copy(), float(values["b"][0]))


@dataclass(frozen=True, eq=False)
class RecurrentModel:
    wx1: np.ndarray  # (d_in, h1)
    wh1: np.ndarray  # (h1, h1)
    b1: np.ndarray   # (h1,)
    wx2: np.ndarray  # (h1, h2)
    wh2: np.ndarray  # (h2, h2)
    b2: np.ndarray   # (h2,)
    w_out: np.ndarray  # (h2,)
    b_out: float

    kind = KIND_RECURRENT

    @property
    def d_in(self) -> int:
        return int(self.wx1.shape[0])

    def params(self) -> dict[str, np.ndarray]:
        return {
            "wx1": self.wx1, "wh1": self.wh1, "b1": self.b1,
            "wx2": self.wx2, "wh2": self.wh2, "b2": self.b2,
            "w_out": self.w_out, "b_out": np.asarray([self.b_out]),
        }

    def replace(self, values: dict[str, np.ndarray]) -> "RecurrentModel":
        return RecurrentModel(
            values["wx1"].copy(), values["wh1"].copy(), values["b1"].copy(),
            values["wx2"].copy(), values["wh2"].copy(), values["b2"].copy(),
            values["w_out"].copy(), float(values["b_out"][0]),
        )


ClassifierModel = PooledLogisticModel | RecurrentModel


def _sigmoid(z: float) -> float:
    if z >= 0:
        return 1.0 / (1.0 + np.exp(-z))
    e = np.exp(z)
    return e / (1.0 + e)


def _softplus(z: np.ndarray) -> np.ndarray:
    return np.maximum(z, 0.0) + np.log1p(np.exp(-np.abs(z)))


def _check_features(model: ClassifierModel, features: np.ndarray) -> np.ndarray:
    feats = np.asarray(features, dtype=float)
    if feats.ndim != 2 or feats.shape[1] != model.d_in:
        raise ClassifierError(
            f"features of shape {feats.shape} do not match model d_in={model.d_in}"
        )
    return feats


def logit(model: ClassifierModel, features: np.ndarray) -> float:
    feats = _check_features(model, features)
    if model.kind == KIND_POOLED:
        return float(model.w @ feats.mean(axis=0) + model.b)
    h2 = _recurrent_forward(model, feats)[1][-1]
    return float(model.w_out @ h2 + model.b_out)


def predict(model: ClassifierModel, features: np.ndarray) -> float:
    """Rally confidence in the open interval (0, 1)."""
    p = _sigmoid(logit(model, features))
    return float(min(max(p, _P_CLIP), 1.0 - _P_CLIP))


def _recurrent_forward(
    model: RecurrentModel, feats: np.ndarray
) -> tuple[np.ndarray, np.ndarray]:
    t_steps = feats.shape[0]
    h1 = np.zeros(model.b1.shape[0])
    h2 = np.zeros(model.b2.shape[0])
    hs1 = np.empty((t_steps, h1.shape[0]))
    hs2 = np.empty((t_steps, h2.shape[0]))
    for t in range(t_steps):
        h1 = np.tanh(feats[t] @ model.wx1 + h1 @ model.wh1 + model.b1)
        h2 = np.tanh(h1 @ model.wx2 + h2 @ model.wh2 + model.b2)
        hs1[t] = h1
        hs2[t] = h2
    return hs1, hs2


def sample_loss(model: ClassifierModel, features: np.ndarray, label: int) -> float:
    """Binary cross-entropy of one sample, computed from the logit."""
    z = logit(model, features)
    return float(_softplus(np.asarray(z)) - label * z)


def sample_grad(
    model: ClassifierModel, features: np.ndarray, label: int
) -> dict[str, np.ndarray]:
    """Analytic gradient of sample_loss with respect to every parameter."""
    feats = _check_features(model, features)
    if model.kind == KIND_POOLED:
        z = float(model.w @ feats.mean(axis=0) + model.b)
        dz = _sigmoid(z) - label
        return {"w": dz * feats.mean(axis=0), "b": np.asarray([dz])}
    return _recurrent_grad(model, feats, label)


def _recurrent_grad(
    model: RecurrentModel, feats: np.ndarray, label: int
) -> dict[str, np.ndarray]:
    hs1, hs2 = _recurrent_forward(model, feats)
    t_steps = feats.shape[0]
    z = float(model.w_out @ hs2[-1] + model.b_out)
    dz = _sigmoid(z) - label

    g = {name: np.zeros_like(arr) for name, arr in model.params().items()}
    g["w_out"] = dz * hs2[-1]
    g["b_out"] = np.asarray([dz])

    d_h1 = np.zeros_like(hs1[0])
    d_h2 = dz * model.w_out
    for t in range(t_steps - 1, -1, -1):
        da2 = d_h2 * (1.0 - hs2[t] ** 2)
        h1_prev = hs1[t - 1] if t > 0 else np.zeros_like(hs1[0])
        h2_prev = hs2[t - 1] if t > 0 else np.zeros_like(hs2[0])
        g["wx2"] += np.outer(hs1[t], da2)
        g["wh2"] += np.outer(h2_prev, da2)
        g["b2"] += da2

        d_h1 = d_h1 + da2 @ model.wx2.T
        da1 = d_h1 * (1.0 - hs1[t] ** 2)
        g["wx1"] += np.outer(feats[t], da1)
        g["wh1"] += np.outer(h1_prev, da1)
        g["b1"] += da1

        d_h2 = da2 @ model.wh2.T
        d_h1 = da1 @ model.wh1.T
    return g


def gradient_check(
    model: ClassifierModel, features: np.ndarray, label: int, eps: float = 1e-5
) -> float:
    """Max relative error between analytic and central-difference gradients."""
    if not 0.0 < eps <= 1e-2:
        raise ClassifierError(f"eps must be in (0, 1e-2], got {eps}")
    analytic = sample_grad(model, features, label)
    values = {name: arr.astype(float).copy() for name, arr in model.params().items()}
    worst = 0.0
    for name, arr in values.items():
        flat = arr.ravel()
        for i in range(flat.shape[0]):
            orig = flat[i]
            flat[i] = orig + eps
            up = sample_loss(model.replace(values), features, label)
            flat[i] = orig - eps
            down = sample_loss(model.replace(values), features, label)
            flat[i] = orig
            g_num = (up - down) / (2.0 * eps)
            g_ana = float(analytic[name].ravel()[i])
            rel = abs(g_ana - g_num) / max(1e-8, abs(g_ana) + abs(g_num))
            worst = max(worst, rel)
    return worst


# ---------------------------------------------------------------------------
# training


@dataclass(frozen=True)
class TrainConfig:
    lr: float = 0.1
    epochs: int = 500
    l2: float = 1e-4
    seed: int = 0
    kind: str = KIND_POOLED
    hidden: tuple[int, int] = (256, 64)


def init_model(kind: str, d_in: int, seed: int, hidden: tuple[int, int] = (256, 64)) -> ClassifierModel:
    rng = np.random.default_rng(seed)
    if kind == KIND_POOLED:
        return PooledLogisticModel(rng.normal(0.0, 0.01, d_in), 0.0)
    if kind == KIND_RECURRENT:
        h1, h2 = hidden
        scale = lambda fan_in: 1.0 / np.sqrt(max(fan_in, 1))
        return RecurrentModel(
            wx1=rng.normal(0.0, scale(d_in), (d_in, h1)),
            wh1=rng.normal(0.0, scale(h1), (h1, h1)),
            b1=np.zeros(h1),
            wx2=rng.normal(0.0, scale(h1), (h1, h2)),
            wh2=rng.normal(0.0, scale(h2), (h2, h2)),
            b2=np.zeros(h2),
            w_out=rng.normal(0.0, scale(h2), h2),
            b_out=0.0,
        )
    raise ClassifierError(f"unknown classifier kind {kind!r}")


def train(
    samples: list[WindowSample], config: TrainConfig = TrainConfig()
) -> tuple[ClassifierModel, list[tuple[int, float]]]:
    """Full-batch gradient descent; returns the model and per-epoch loss log."""
    if not samples:
        raise ClassifierError("empty training set")
    labels = np.asarray([s.label for s in samples], dtype=float)
    if labels.min() == labels.max():
        raise ClassifierError("training set contains a single class")
    d_in = samples[0].features.shape[1]
    for s in samples:
        if s.features.shape[1] != d_in:
            raise ClassifierError("inconsistent feature dimensions across samples")

    if config.kind == KIND_POOLED:
        return _train_pooled(samples, labels, d_in, config)
    if config.kind == KIND_RECURRENT:
        return _train_recurrent(samples, labels, d_in, config)
    raise ClassifierError(f"unknown classifier kind {config.kind!r}")


def _train_pooled(samples, labels, d_in, config):
    x = np.stack([s.features.mean(axis=0) for s in samples])
    y = labels
    n = x.shape[0]
    model = init_model(KIND_POOLED, d_in, config.seed)
    w, b = model.w.copy(), model.b
    log: list[tuple[int, float]] = []
    for epoch in range(config.epochs):
        z = x @ w + b
        loss = float(np.mean(_softplus(z) - y * z) + config.l2 * (w @ w))
        log.append((epoch, loss))
        p = np.where(z >= 0, 1.0 / (1.0 + np.exp(-np.abs(z))), np.exp(-np.abs(z)) / (1.0 + np.exp(-np.abs(z))))
        grad_z = p - y
        gw = x.T @ grad_z / n + 2.0 * config.l2 * w
        gb = float(grad_z.mean())
        w = w - config.lr * gw
        b = b - config.lr * gb
    return PooledLogisticModel(w, b), log


def _train_recurrent(samples, labels, d_in, config):
    model = init_model(KIND_RECURRENT, d_in, config.seed, config.hidden)
    n = len(samples)
    log: list[tuple[int, float]] = []
    weight_names = ("wx1", "wh1", "wx2", "wh2", "w_out")
    for epoch in range(config.epochs):
        values = model.params()
        total = {name: np.zeros_like(arr) for name, arr in values.items()}
        loss = 0.0
        for s, y in zip(samples, labels):
            loss += sample_loss(model, s.features, int(y))
            g = sample_grad(model, s.features, int(y))
            for name in total:
                total[name] += g[name]
        loss = loss / n + config.l2 * sum(
            float(np.sum(values[name] ** 2)) for name in weight_names
        )
        log.append((epoch, loss))
        updated = {}
        for name, arr in values.items():
            grad = total[name] / n
            if name in weight_names:
                grad = grad + 2.0 * config.l2 * values[name]
            updated[name] = arr - config.lr * grad
        model = model.replace(updated)
    return model, log


# ---------------------------------------------------------------------------
# serialization


def model_to_payload(model: ClassifierModel) -> dict:
    if model.kind == KIND_POOLED:
        return {
            "model_kind": KIND_POOLED,
            "d_in": model.d_in,
            "w": model.w.tolist(),
            "b": model.b,
        }
    return {
        "model_kind": KIND_RECURRENT,
        "d_in": model.d_in,
        "hidden": [int(model.b1.shape[0]), int(model.b2.shape[0])],
        "wx1": model.wx1.tolist(), "wh1": model.wh1.tolist(), "b1": model.b1.tolist(),
        "wx2": model.wx2.tolist(), "wh2": model.wh2.tolist(), "b2": model.b2.tolist(),
        "w_out": model.w_out.tolist(), "b_out": model.b_out,
    }


def model_from_payload(payload: dict) -> ClassifierModel:
    kind = payload.get("model_kind")
    if kind == KIND_POOLED:
        return PooledLogisticModel(
            np.asarray(payload["w"], dtype=float), float(payload["b"])
        )
    if kind == KIND_RECURRENT:
        as_arr = lambda key: np.asarray(payload[key], dtype=float)
        return RecurrentModel(
            wx1=as_arr("wx1"), wh1=as_arr("wh1"), b1=as_arr("b1"),
            wx2=as_arr("wx2"), wh2=as_arr("wh2"), b2=as_arr("b2"),
            w_out=as_arr("w_out"), b_out=float(payload["b_out"]),
        )
    raise ClassifierError(f"unknown classifier kind {kind!r}")
