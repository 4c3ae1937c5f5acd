"""Class-level fault-proneness classifier.

A 104-300-1 feed-forward network, sigmoid hidden and output units, trained
with a differentiable F1 surrogate. Every training iteration sees all buggy
samples plus a fresh random subset of the clean ones.
"""

from __future__ import annotations

import json
import logging
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np
from scipy.special import expit

from .data import N_FEATURES, VersionRecord
from .errors import DegenerateDataError, NoPositivesError, NonFiniteInputError

log = logging.getLogger(__name__)

HIDDEN = 300
SOFT_F1_EPS = 1e-7
#: Score above which a buggy class counts as predicted.
PREDICTED_THRESHOLD = 0.1


@dataclass(frozen=True)
class TrainConfig:
    iterations: int = 20
    neg_pos_ratio: float = 3.0
    learning_rate: float = 0.3
    epochs_per_iteration: int = 10
    seed: int = 0
    hidden: int = HIDDEN

    def __post_init__(self):
        if self.iterations < 1:
            raise ValueError("iterations must be >= 1")
        if not self.neg_pos_ratio > 0:
            raise ValueError("neg_pos_ratio must be > 0")
        if not self.learning_rate > 0:
            raise ValueError("learning_rate must be > 0")
        if self.epochs_per_iteration < 1:
            raise ValueError("epochs_per_iteration must be >= 1")


@dataclass(frozen=True)
class TrainingSet:
    features: np.ndarray  # (N, f)
    labels: np.ndarray  # (N,) of 0.0 / 1.0
    provenance: tuple = ()  # (version_id, class_id) per sample

    @property
    def n_positive(self) -> int:
        return int(self.labels.sum())

    @property
    def n_negative(self) -> int:
        return int(self.labels.size - self.labels.sum())

    def __len__(self):
        return int(self.labels.size)


def build_training_set(history: Sequence[VersionRecord], upto_version: int) -> TrainingSet:
    """Stack every class of every version strictly before ``upto_version``."""
    window = [v for v in history if v.version_id < upto_version]
    if not window:
        raise NoPositivesError(f"no versions before {upto_version}")
    feats, labels, prov = [], [], []
    for v in window:
        for c in v.class_features:
            feats.append(c.features)
            labels.append(1.0 if c.is_buggy else 0.0)
            prov.append((v.version_id, c.class_id))
    labels = np.array(labels)
    if not labels.any():
        raise NoPositivesError(f"no buggy classes in versions before {upto_version}")
    X = np.vstack(feats) if feats else np.zeros((0, N_FEATURES))
    return TrainingSet(X, labels, tuple(prov))


@dataclass(frozen=True)
class DefectModel:
    W1: np.ndarray  # (f, h)
    b1: np.ndarray  # (h,)
    W2: np.ndarray  # (h,)
    b2: float
    feature_mean: np.ndarray
    feature_scale: np.ndarray
    rng_seed: int = 0
    config: dict = field(default_factory=dict)
    history: tuple = ()  # (iteration, n_pos, n_neg, loss) per iteration

    def __post_init__(self):
        for name in ("W1", "b1", "W2", "feature_mean", "feature_scale"):
            arr = np.array(getattr(self, name), dtype=float)
            if not np.all(np.isfinite(arr)):
                raise DegenerateDataError(f"non-finite values in {name}")
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        object.__setattr__(self, "b2", float(self.b2))

    @property
    def n_features(self) -> int:
        return self.W1.shape[0]

    @classmethod
    def zeros(cls, n_features: int = N_FEATURES, hidden: int = HIDDEN) -> "DefectModel":
        return cls(
            np.zeros((n_features, hidden)), np.zeros(hidden), np.zeros(hidden), 0.0,
            np.zeros(n_features), np.ones(n_features),
        )

    def predict_many(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        if X.ndim == 1:
            X = X[None, :]
        if X.shape[1] != self.n_features:
            raise ValueError(f"expected {self.n_features} features, got {X.shape[1]}")
        if not np.all(np.isfinite(X)):
            raise NonFiniteInputError("non-finite feature value")
        Z = (X - self.feature_mean) / self.feature_scale
        _, p = _forward(self.W1, self.b1, self.W2, self.b2, Z)
        return p

    def save(self, path) -> None:
        Path(path).write_text(json.dumps(model_to_dict(self)), encoding="utf-8")

    @classmethod
    def load(cls, path) -> "DefectModel":
        return model_from_dict(json.loads(Path(path).read_text(encoding="utf-8")))


def predict(model: DefectModel, features) -> float:
    """Fault-proneness score in (0, 1) for one feature vector."""
    return float(model.predict_many(np.asarray(features, dtype=float).reshape(1, -1))[0])


def _forward(W1, b1, W2, b2, Z):
    H = expit(Z @ W1 + b1)
    p = expit(H @ W2 + b2)
    return H, p


def soft_f1_loss(p, y, eps: float = SOFT_F1_EPS) -> float:
    """``1 - (2 sum(p*y) + eps) / (sum(p) + sum(y) + eps)``."""
    p = np.asarray(p, dtype=float)
    y = np.asarray(y, dtype=float)
    return float(1.0 - (2.0 * np.dot(p, y) + eps) / (p.sum() + y.sum() + eps))


def loss_and_grads(params, Z, y, eps: float = SOFT_F1_EPS):
    """Soft-F1 loss of the network on a batch and its gradient w.r.t. ``(W1, b1, W2, b2)``."""
    W1, b1, W2, b2 = params
    H, p = _forward(W1, b1, W2, b2, Z)
    num = 2.0 * np.dot(p, y) + eps
    den = p.sum() + y.sum() + eps
    loss = 1.0 - num / den
    dp = -(2.0 * y * den - num) / den**2
    dz2 = dp * p * (1.0 - p)
    gW2 = H.T @ dz2
    gb2 = dz2.sum()
    dH = np.outer(dz2, W2) * H * (1.0 - H)
    gW1 = Z.T @ dH
    gb1 = dH.sum(axis=0)
    return float(loss), (gW1, gb1, gW2, float(gb2))


def init_params(n_features: int, hidden: int, rng: np.random.Generator):
    lim1 = math.sqrt(6.0 / (n_features + hidden))
    lim2 = math.sqrt(6.0 / (hidden + 1))
    W1 = rng.uniform(-lim1, lim1, size=(n_features, hidden))
    W2 = rng.uniform(-lim2, lim2, size=hidden)
    return W1, np.zeros(hidden), W2, 0.0


def standardization(X):
    """Per-feature mean and divisor; zero-variance columns get divisor 1."""
    mean = X.mean(axis=0)
    std = X.std(axis=0)
    scale = np.where(std > 0, std, 1.0)
    return mean, scale


def train(ts: TrainingSet, cfg: TrainConfig = TrainConfig()) -> DefectModel:
    X = np.asarray(ts.features, dtype=float)
    y = np.asarray(ts.labels, dtype=float)
    if not np.all(np.isfinite(X)):
        raise DegenerateDataError("training features contain non-finite values")
    pos = np.flatnonzero(y == 1.0)
    neg = np.flatnonzero(y == 0.0)
    if pos.size == 0 or neg.size == 0:
        raise NoPositivesError("training needs at least one positive and one negative sample")

    mean, scale = standardization(X)
    Z = (X - mean) / scale
    rng = np.random.default_rng(cfg.seed)
    W1, b1, W2, b2 = init_params(X.shape[1], cfg.hidden, rng)
    n_neg = min(neg.size, math.ceil(cfg.neg_pos_ratio * pos.size))
    lr = cfg.learning_rate
    history = []
    for it in range(cfg.iterations):
        batch = np.concatenate([pos, np.sort(rng.choice(neg, size=n_neg, replace=False))])
        Zb, yb = Z[batch], y[batch]
        for _ in range(cfg.epochs_per_iteration):
            loss, (gW1, gb1, gW2, gb2) = loss_and_grads((W1, b1, W2, b2), Zb, yb)
            W1 = W1 - lr * gW1
            b1 = b1 - lr * gb1
            W2 = W2 - lr * gW2
            b2 = b2 - lr * gb2
        history.append((it, int(pos.size), int(n_neg), loss))
        log.debug("iteration %d: %d positives + %d negatives, loss %.6f", it, pos.size, n_neg, loss)
    return DefectModel(W1, b1, W2, b2, mean, scale, cfg.seed, asdict(cfg), tuple(history))


def class_scores(model: DefectModel, version: VersionRecord) -> dict:
    """Score every class of a version; returns ``{class_id: score}``."""
    if not version.class_features:
        return {}
    scores = model.predict_many(version.feature_matrix())
    return {c.class_id: float(s) for c, s in zip(version.class_features, scores)}


def predicted_bug_diagnostic(model: DefectModel, version: VersionRecord, scores: dict | None = None) -> bool:
    """True when some truly buggy class of ``version`` scores above 0.1."""
    if scores is None:
        scores = class_scores(model, version)
    return any(scores[c] > PREDICTED_THRESHOLD for c in version.buggy_classes())


def f1_score(y_true, y_pred) -> float:
    y_true = np.asarray(y_true, dtype=bool)
    y_pred = np.asarray(y_pred, dtype=bool)
    tp = np.sum(y_true & y_pred)
    denom = y_true.sum() + y_pred.sum()
    return float(2 * tp / denom) if denom else 0.0


# ------------------------------------------------------------- serialization


def model_to_dict(model: DefectModel) -> dict:
    f, h = model.W1.shape
    return {
        "format": "tcp-rank-defect-model/1",
        "n_features": f,
        "hidden": h,
        "W1": model.W1.ravel(order="C").tolist(),
        "b1": model.b1.tolist(),
        "W2": model.W2.tolist(),
        "b2": model.b2,
        "feature_norms": {"mean": model.feature_mean.tolist(), "scale": model.feature_scale.tolist()},
        "seed": model.rng_seed,
        "config": dict(model.config),
        "history": [list(h_) for h_ in model.history],
    }


def model_from_dict(d: dict) -> DefectModel:
    f, h = int(d["n_features"]), int(d["hidden"])
    return DefectModel(
        W1=np.array(d["W1"], dtype=float).reshape(f, h),
        b1=np.array(d["b1"], dtype=float),
        W2=np.array(d["W2"], dtype=float),
        b2=float(d["b2"]),
        feature_mean=np.array(d["feature_norms"]["mean"], dtype=float),
        feature_scale=np.array(d["feature_norms"]["scale"], dtype=float),
        rng_seed=int(d["seed"]),
        config=dict(d.get("config", {})),
        history=tuple(tuple(x) for x in d.get("history", [])),
    )
