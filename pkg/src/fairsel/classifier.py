"""Deterministic full-batch logistic regression."""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np
from scipy.special import expit

from .errors import ContractError, LookupFailure, TrainingError


@dataclass(frozen=True)
class TrainConfig:
    learning_rate: float = 0.1
    iterations: int = 2000
    l2: float = 1e-3
    standardize: bool = True
    seed: int = 0


@dataclass(frozen=True)
class LogRegModel:
    """Parameters are stored on the raw input scale; ``scales`` keeps the
    training standard deviations used for importance."""

    features: tuple[str, ...]
    weights: tuple[float, ...]
    bias: float
    config: TrainConfig = field(default_factory=TrainConfig)
    scales: tuple[float, ...] = ()
    grad_norm: float = 0.0
    loss_history: tuple[float, ...] = ()

    def to_json(self) -> dict:
        return {
            "features": list(self.features),
            "weights": list(self.weights),
            "bias": self.bias,
            "scales": list(self.scales),
            "grad_norm": self.grad_norm,
            "config": asdict(self.config),
        }

    @classmethod
    def from_json(cls, obj: Mapping) -> "LogRegModel":
        return cls(
            tuple(obj["features"]),
            tuple(float(w) for w in obj["weights"]),
            float(obj["bias"]),
            TrainConfig(**obj.get("config", {})),
            tuple(float(s) for s in obj.get("scales", ())),
            float(obj.get("grad_norm", 0.0)),
        )

    def save(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.to_json(), indent=2, sort_keys=True) + "\n")


def loss_and_grad(params: np.ndarray, X: np.ndarray, y: np.ndarray, l2: float) -> tuple[float, np.ndarray]:
    """Mean log-loss plus ``l2/2 * |w|^2`` (bias unpenalized); params = [w..., b]."""
    w, b = params[:-1], params[-1]
    z = X @ w + b
    # log(1 + e^z) - y z, computed stably
    loss = float(np.mean(np.logaddexp(0.0, z) - y * z) + 0.5 * l2 * (w @ w))
    r = expit(z) - y
    n = len(y)
    grad = np.empty_like(params)
    grad[:-1] = X.T @ r / n + l2 * w
    grad[-1] = r.mean()
    return loss, grad


def _columns(data, names: Sequence[str]) -> np.ndarray:
    cols = []
    for c in names:
        try:
            cols.append(np.asarray(data[c], dtype=float))
        except (KeyError, LookupFailure):
            raise ContractError(f"missing feature column {c!r}") from None
    n = data.n_rows if hasattr(data, "n_rows") else len(next(iter(data.values())))
    return np.column_stack(cols) if cols else np.empty((n, 0))


def train(data, features: Sequence[str], target: str, config: TrainConfig = TrainConfig()) -> LogRegModel:
    """Gradient descent on standardized inputs.

    A step that raises the loss is rejected and the step size halved; ten
    consecutive rejections raise :class:`TrainingError`.
    """
    features = tuple(features)
    X = _columns(data, features)
    y = np.asarray(data[target], dtype=float)
    if not np.isin(y, (0.0, 1.0)).all():
        raise ContractError(f"target {target!r} must be binary 0/1")
    n, d = X.shape
    if n < d + 1:
        raise ContractError(f"need at least {d + 1} rows to fit {d} features")
    if config.standardize:
        mu, sd = X.mean(axis=0), X.std(axis=0)
        sd = np.where(sd > 0, sd, 1.0)
    else:
        mu, sd = np.zeros(d), np.ones(d)
    Xs = (X - mu) / sd
    params = np.zeros(d + 1)
    lr = config.learning_rate
    loss, grad = loss_and_grad(params, Xs, y, config.l2)
    history = [loss]
    rejected = 0
    for _ in range(config.iterations):
        cand = params - lr * grad
        new_loss, new_grad = loss_and_grad(cand, Xs, y, config.l2)
        if math.isfinite(new_loss) and new_loss > loss and new_loss - loss <= 1e-12 * max(1.0, abs(loss)):
            break  # converged to rounding level
        if not math.isfinite(new_loss) or new_loss > loss:
            rejected += 1
            if rejected >= 10:
                raise TrainingError("loss increased on 10 consecutive iterations")
            lr *= 0.5
            continue
        rejected = 0
        params, loss, grad = cand, new_loss, new_grad
        history.append(loss)
    w_std, b_std = params[:-1], params[-1]
    w = w_std / sd
    b = b_std - float(w @ mu)
    return LogRegModel(
        features,
        tuple(float(v) for v in w),
        float(b),
        config,
        tuple(float(s) for s in sd),
        float(np.linalg.norm(grad)),
        tuple(history),
    )


def predict(model: LogRegModel, data) -> tuple[np.ndarray, np.ndarray]:
    """Probabilities and 0/1 predictions at threshold 0.5."""
    X = _columns(data, model.features)
    z = X @ np.asarray(model.weights) + model.bias if model.features else np.full(len(X), model.bias)
    proba = expit(z)
    # keep probabilities strictly inside (0, 1)
    eps = np.finfo(float).eps
    proba = np.clip(proba, eps, 1 - eps)
    return proba, (proba >= 0.5).astype(np.int64)


def feature_importance(model: LogRegModel) -> dict[str, float]:
    """|weight| on the standardized scale, largest first."""
    if not model.config.standardize:
        raise ContractError("feature importance needs a model trained with standardization")
    imp = {f: abs(w) * s for f, w, s in zip(model.features, model.weights, model.scales)}
    return dict(sorted(imp.items(), key=lambda kv: (-kv[1], kv[0])))


def accuracy(y_true: np.ndarray, y_pred: np.ndarray) -> float:
    return float(np.mean(np.asarray(y_true) == np.asarray(y_pred)))
