"""Gaussian naive Bayes trained on integer class labels.

Each feature is modelled as an independent normal distribution per class,
with maximum-likelihood (population) mean and variance.  Scores are kept in
log space: the features this package deals with span several orders of
magnitude and plain density products underflow.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from somnb.dataset import as_matrix
from somnb.errors import DimensionMismatch, EmptyInput, LengthMismatch, SchemaError, UnknownLabel

SCHEMA = "somnb.nb-model/1"
DEFAULT_EPSILON = 1e-9
_LOG_2PI = math.log(2 * math.pi)


@dataclass(frozen=True, eq=False)
class NbModel:
    """Fitted class priors and per-class feature Gaussians.

    Attributes
    ----------
    labels : tuple of int
        Distinct training labels, ascending.  Row ``k`` of every array below
        belongs to ``labels[k]``.
    priors : ndarray of shape (K,)
    means : ndarray of shape (K, d)
    variances : ndarray of shape (K, d)
        Floored at ``epsilon`` times the largest overall feature variance.
    epsilon : float
    """

    labels: tuple[int, ...]
    priors: np.ndarray
    means: np.ndarray
    variances: np.ndarray
    epsilon: float = DEFAULT_EPSILON

    @property
    def dim(self) -> int:
        return self.means.shape[1]

    def index(self, label: int) -> int:
        try:
            return self.labels.index(label)
        except ValueError:
            raise UnknownLabel(f"label {label} was not seen in training (known: {list(self.labels)})") from None

    def to_dict(self) -> dict:
        return {
            "schema": SCHEMA,
            "labels": list(self.labels),
            "priors": self.priors.tolist(),
            "means": self.means.tolist(),
            "variances": self.variances.tolist(),
            "epsilon": self.epsilon,
        }

    @classmethod
    def from_dict(cls, d) -> "NbModel":
        if d.get("schema") != SCHEMA:
            raise SchemaError(f"expected schema {SCHEMA!r}, got {d.get('schema')!r}")
        return cls(
            labels=tuple(int(v) for v in d["labels"]),
            priors=np.array(d["priors"], dtype=np.float64),
            means=np.array(d["means"], dtype=np.float64),
            variances=np.array(d["variances"], dtype=np.float64),
            epsilon=float(d["epsilon"]),
        )


def fit_nb(rows, labels, epsilon: float = DEFAULT_EPSILON) -> NbModel:
    x = as_matrix(rows)
    y = np.asarray(list(labels), dtype=np.int64)
    if len(x) != len(y):
        raise LengthMismatch(f"{len(x)} rows but {len(y)} labels")
    if len(y) == 0:
        raise EmptyInput("cannot fit on zero rows")
    if not epsilon > 0:
        raise ValueError("epsilon must be positive")

    classes = np.unique(y)
    overall = x.var(axis=0).max()
    floor = epsilon * (overall if overall > 0 else 1.0)
    means = np.empty((len(classes), x.shape[1]))
    variances = np.empty_like(means)
    counts = np.empty(len(classes))
    for k, c in enumerate(classes):
        xc = x[y == c]
        counts[k] = len(xc)
        means[k] = xc.mean(axis=0)
        variances[k] = np.maximum(xc.var(axis=0), floor)
    return NbModel(tuple(classes.tolist()), counts / counts.sum(), means, variances, epsilon)


def _vector(model: NbModel, x) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    if x.shape != (model.dim,):
        raise DimensionMismatch(f"expected {model.dim} features, got shape {x.shape}")
    return x


def log_likelihood(model: NbModel, x, label: int) -> float:
    """``log P(x | label)`` as a sum of independent per-feature Gaussian terms."""
    k = model.index(label)
    x = _vector(model, x)
    var = model.variances[k]
    return float(np.sum(-0.5 * (_LOG_2PI + np.log(var)) - (x - model.means[k]) ** 2 / (2 * var)))


def _joint_log_scores(model: NbModel, x: np.ndarray) -> np.ndarray:
    # (n, K): log prior + log likelihood for every row and class
    var = model.variances[None, :, :]
    ll = -0.5 * (_LOG_2PI + np.log(var)) - (x[:, None, :] - model.means[None, :, :]) ** 2 / (2 * var)
    return np.log(model.priors)[None, :] + ll.sum(axis=-1)


def _posteriors(scores: np.ndarray) -> np.ndarray:
    z = np.exp(scores - scores.max(axis=-1, keepdims=True))
    return z / z.sum(axis=-1, keepdims=True)


def predict(model: NbModel, x) -> tuple[int, dict[int, float]]:
    """Maximum-posterior label of one row and the full posterior distribution.

    Ties go to the lowest label id.
    """
    scores = _joint_log_scores(model, _vector(model, x)[None, :])[0]
    post = _posteriors(scores)
    return model.labels[int(np.argmax(scores))], dict(zip(model.labels, post.tolist()))


def predict_many(model: NbModel, rows) -> tuple[list[int], np.ndarray]:
    """Vectorised :func:`predict`: winners in input order and an (n, K) posterior matrix."""
    x = as_matrix(rows)
    if x.shape[0] == 0:
        return [], np.zeros((0, len(model.labels)))
    if x.shape[1] != model.dim:
        raise DimensionMismatch(f"expected {model.dim} features, got {x.shape[1]}")
    scores = _joint_log_scores(model, x)
    winners = [model.labels[k] for k in scores.argmax(axis=1).tolist()]
    return winners, _posteriors(scores)
