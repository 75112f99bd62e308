"""Linear classifier for the retrain step: hinge-loss SGD plus calibration.

The model is a soft-margin linear separator trained by stochastic
subgradient descent on the weighted regularized hinge objective

    F(w, b) = (lam/2) * (||w||^2 + b^2)
              + (1/n) * sum_i c_i * max(0, 1 - y_i * (w.x_i + b))

with y in {-1, +1}, per-example weights c_i set by the balancing mode,
learning rate eta_t = 1 / (lam * t) over a global step counter t, and a
fresh shuffle of the training set each epoch. The bias is treated as
the weight of a constant feature and shares the L2 shrinkage; leaving
it unregularized lets the enormous first-step rate (1/lam) wedge the
intercept so far out that the minority class never recovers. Weights
use a lazily-applied scale factor so each step costs O(nnz(x_i))
regardless of dimensionality.

Training is retrain-from-scratch and fully deterministic: the same
matrix, labels, mode, and seed give bit-identical weight vectors.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .corpus import RELEVANT
from .features import FeatureMatrix

DEFAULT_LAMBDA = 1e-4
DEFAULT_EPOCHS = 20

BALANCING_MODES = ("none", "aggressive_undersampling", "class_weighting")


@dataclass(frozen=True)
class TrainingConfig:
    balancing: str
    epochs: int
    lam: float
    seed: int


@dataclass(frozen=True)
class LinearModel:
    """Trained separator: score(x) = weights.x + bias, positive => relevant."""

    weights: np.ndarray
    bias: float
    training_config: TrainingConfig

    def __post_init__(self) -> None:
        if not np.all(np.isfinite(self.weights)) or not math.isfinite(self.bias):
            raise ValueError("model has non-finite parameters")


def _label_value(label) -> str:
    return getattr(label, "value", label)


def _training_arrays(
    matrix: FeatureMatrix, labels
) -> tuple[np.ndarray, np.ndarray, list[str]]:
    """Rows and +/-1 targets in load order; errors on a single-class set."""
    ids = sorted(labels, key=matrix.row_of)
    rows = np.asarray([matrix.row_of(i) for i in ids], dtype=np.intp)
    y = np.asarray(
        [1.0 if _label_value(labels[i]) == RELEVANT else -1.0 for i in ids]
    )
    if not (np.any(y > 0) and np.any(y < 0)):
        raise ValueError("insufficient classes: need at least one label per class")
    return rows, y, ids


def _sample_weights(y: np.ndarray, mode: str) -> np.ndarray:
    if mode == "class_weighting":
        n = len(y)
        n_pos = int(np.sum(y > 0))
        n_neg = n - n_pos
        w = np.where(y > 0, n / (2.0 * n_pos), n / (2.0 * n_neg))
        return w
    return np.ones(len(y))


def _sgd_fit(
    X, rows: np.ndarray, y: np.ndarray, c: np.ndarray, lam: float, epochs: int, seed: int
) -> tuple[np.ndarray, float]:
    """Pegasos-style weighted hinge SGD. X is the CSR matrix."""
    n_features = X.shape[1]
    v = np.zeros(n_features)
    scale = 1.0  # w = scale * v
    bias = 0.0
    indptr, indices, data = X.indptr, X.indices, X.data
    rng = np.random.default_rng(seed)
    t = 0
    for _ in range(epochs):
        order = rng.permutation(len(rows))
        for k in order:
            t += 1
            row = rows[k]
            start, end = indptr[row], indptr[row + 1]
            idx = indices[start:end]
            vals = data[start:end]
            eta = 1.0 / (lam * t)
            margin = y[k] * (scale * float(v[idx] @ vals) + bias)
            shrink = 1.0 - eta * lam  # == 1 - 1/t; zero only at t=1 where w is 0
            if shrink > 0.0:
                scale *= shrink
                bias *= shrink
            if margin < 1.0:
                v[idx] += (eta * c[k] * y[k] / scale) * vals
                bias += eta * c[k] * y[k]
    return scale * v, bias


def train(
    matrix: FeatureMatrix,
    labels,
    mode: str = "none",
    seed: int = 0,
    *,
    lam: float = DEFAULT_LAMBDA,
    epochs: int = DEFAULT_EPOCHS,
) -> LinearModel:
    """Fit the linear classifier on the labeled subset.

    ``labels`` maps document id to a Label (or bare label value). Under
    ``class_weighting`` each example is weighted |labeled|/(2*class count);
    under ``aggressive_undersampling`` a provisional unbalanced model ranks
    the negatives and those closest to the positive side are dropped until
    the classes balance, then the model is refit on the reduced set.
    """
    if mode not in BALANCING_MODES:
        raise ValueError(f"unknown balancing mode {mode!r}")
    rows, y, ids = _training_arrays(matrix, labels)

    if mode == "aggressive_undersampling":
        c = np.ones(len(y))
        w, b = _sgd_fit(matrix.matrix, rows, y, c, lam, epochs, seed)
        provisional = LinearModel(w, b, TrainingConfig("none", epochs, lam, seed))
        scores = decision_scores(provisional, matrix, ids)
        reduced = aggressive_undersample(labels, scores)
        if set(reduced) != set(labels):
            rows, y, ids = _training_arrays(matrix, reduced)
        c = np.ones(len(y))
    else:
        c = _sample_weights(y, mode)

    w, b = _sgd_fit(matrix.matrix, rows, y, c, lam, epochs, seed)
    return LinearModel(w, b, TrainingConfig(mode, epochs, lam, seed))


def aggressive_undersample(labels, scores) -> dict:
    """Drop the negatives scored closest to the positive side.

    Keeps every relevant example and discards irrelevant ones in
    decreasing score order until the class counts match. No-op when the
    classes already balance or positives dominate.
    """
    pos = {i: v for i, v in labels.items() if _label_value(v) == RELEVANT}
    neg = {i: v for i, v in labels.items() if i not in pos}
    if len(neg) <= len(pos):
        return dict(labels)
    missing = [i for i in neg if i not in scores]
    if missing:
        raise ValueError(f"no provisional score for labeled ids {missing[:3]!r}")
    # Highest-scoring negatives go first; ties resolve by id for determinism.
    drop_order = sorted(neg, key=lambda i: (-scores[i], i))
    keep_neg = set(drop_order[len(neg) - len(pos):])
    return {i: v for i, v in labels.items() if i in pos or i in keep_neg}


def decision_scores(model: LinearModel, matrix: FeatureMatrix, row_ids) -> dict[str, float]:
    """w.x + b for each requested document; sign is the predicted class."""
    if model.weights.shape[0] != matrix.matrix.shape[1]:
        raise ValueError(
            f"dimension mismatch: model has {model.weights.shape[0]} features, "
            f"matrix has {matrix.matrix.shape[1]}"
        )
    ids = list(row_ids)
    rows = np.asarray([matrix.row_of(i) for i in ids], dtype=np.intp)
    raw = matrix.matrix[rows] @ model.weights + model.bias
    return {doc_id: float(s) for doc_id, s in zip(ids, raw)}


def hinge_objective(
    weights: np.ndarray, bias: float, X, y: np.ndarray, c: np.ndarray, lam: float
) -> float:
    """The regularized training objective F(w, b); used for gradient checks."""
    margins = y * (X @ weights + bias)
    hinge = np.maximum(0.0, 1.0 - margins)
    reg = 0.5 * lam * (float(weights @ weights) + bias * bias)
    return reg + float(np.mean(c * hinge))


def hinge_gradient(
    weights: np.ndarray, bias: float, X, y: np.ndarray, c: np.ndarray, lam: float
) -> tuple[np.ndarray, float]:
    """Analytic (sub)gradient of :func:`hinge_objective` at (w, b)."""
    margins = y * (X @ weights + bias)
    active = (margins < 1.0).astype(float)
    coef = c * active * y / len(y)
    Xd = X.toarray() if hasattr(X, "toarray") else np.asarray(X)
    grad_w = lam * weights - Xd.T @ coef
    grad_b = lam * bias - float(np.sum(coef))
    return grad_w, grad_b


@dataclass(frozen=True)
class ScoreCalibration:
    """Monotone map from decision score to P(relevant).

    p(s) = 1 / (1 + exp(a*s + b)); a < 0 when higher scores mean more
    likely relevant. A degenerate fit (all training scores equal) falls
    back to the constant class prevalence.
    """

    a: float
    b: float
    degenerate: bool
    prevalence: float

    def __call__(self, score):
        if self.degenerate:
            return np.full_like(np.asarray(score, dtype=float), self.prevalence) \
                if np.ndim(score) else self.prevalence
        z = self.a * np.asarray(score, dtype=float) + self.b
        p = 1.0 / (1.0 + np.exp(np.clip(z, -500, 500)))
        return p if np.ndim(score) else float(p)


def calibrate_probabilities(scores, labels, max_iter: int = 100) -> ScoreCalibration:
    """Fit the 1-D logistic calibration by (smoothed) maximum likelihood.

    Plain MLE diverges on separable scores, so the positive/negative
    targets are smoothed to (n+ + 1)/(n+ + 2) and 1/(n- + 2), which keeps
    the optimum finite; a damped Newton iteration then solves for (a, b).
    """
    s = np.asarray(list(scores), dtype=float)
    y = np.asarray([1.0 if _label_value(v) == RELEVANT else 0.0 for v in labels])
    if len(s) != len(y) or len(s) == 0:
        raise ValueError("scores and labels must be non-empty and equal length")
    if not (np.any(y > 0) and np.any(y < 1)):
        raise ValueError("insufficient classes: need at least one label per class")
    prevalence = float(np.mean(y))
    if float(np.ptp(s)) < 1e-12:
        return ScoreCalibration(a=0.0, b=0.0, degenerate=True, prevalence=prevalence)

    n_pos = float(np.sum(y))
    n_neg = float(len(y) - n_pos)
    t = np.where(y > 0, (n_pos + 1.0) / (n_pos + 2.0), 1.0 / (n_neg + 2.0))

    def nll(a: float, b: float) -> float:
        z = np.clip(a * s + b, -500, 500)
        p = 1.0 / (1.0 + np.exp(z))
        eps = 1e-12
        return -float(np.sum(t * np.log(p + eps) + (1.0 - t) * np.log(1.0 - p + eps)))

    a = 0.0
    b = math.log((n_neg + 1.0) / (n_pos + 1.0))
    current = nll(a, b)
    for _ in range(max_iter):
        z = np.clip(a * s + b, -500, 500)
        p = 1.0 / (1.0 + np.exp(z))
        # NLL gradient wrt (a, b): dNLL/dz = t - p, dp/dz = -p(1-p).
        g_a = float(np.sum((t - p) * s))
        g_b = float(np.sum(t - p))
        w = p * (1.0 - p)
        h_aa = float(np.sum(w * s * s)) + 1e-12
        h_ab = float(np.sum(w * s))
        h_bb = float(np.sum(w)) + 1e-12
        det = h_aa * h_bb - h_ab * h_ab
        if abs(det) < 1e-12:
            break
        da = -(h_bb * g_a - h_ab * g_b) / det
        db = -(h_aa * g_b - h_ab * g_a) / det
        step = 1.0
        for _ in range(20):
            candidate = nll(a + step * da, b + step * db)
            if candidate <= current + 1e-12:
                break
            step *= 0.5
        a += step * da
        b += step * db
        if candidate >= current - 1e-10:
            current = min(current, candidate)
            break
        current = candidate
    return ScoreCalibration(a=a, b=b, degenerate=False, prevalence=prevalence)
