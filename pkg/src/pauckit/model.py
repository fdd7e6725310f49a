"""Shallow scoring models f: R^d -> (0, 1) with hand-written gradients.

Two kinds are supported:

``linear``
    ``logistic(w.x + c)``, weights laid out as ``[w (d), c]``.
``mlp1``
    ``logistic(W2.tanh(W1 x + c1) + c2)``, weights laid out as
    ``[W1 (h*d, row-major), c1 (h), W2 (h), c2]``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

KINDS = ("linear", "mlp1")

# |logit| cap; keeps float64 logistic strictly inside (0, 1)
LOGIT_CAP = 30.0


class ShapeError(ValueError):
    pass


@dataclass
class ModelParams:
    kind: str
    weights: np.ndarray
    layout: tuple

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown model kind {self.kind!r}")
        self.weights = np.asarray(self.weights, dtype=np.float64)
        self.layout = tuple(int(v) for v in self.layout)
        if self.weights.shape != (n_params(self.kind, self.layout),):
            raise ShapeError(
                f"{self.kind} layout {self.layout} needs {n_params(self.kind, self.layout)} "
                f"weights, got {self.weights.shape}"
            )

    @property
    def dim(self) -> int:
        return self.layout[0]

    def copy(self):
        return ModelParams(self.kind, self.weights.copy(), self.layout)


def n_params(kind, layout):
    d = layout[0]
    if kind == "linear":
        return d + 1
    h = layout[1]
    return h * d + h + h + 1


def init_params(kind, d, hidden=16, seed=0):
    """Uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)) weights, zero biases."""
    rng = np.random.default_rng(seed)
    if kind == "linear":
        lim = 1.0 / np.sqrt(d)
        w = np.concatenate([rng.uniform(-lim, lim, d), [0.0]])
        return ModelParams(kind, w, (d,))
    if kind == "mlp1":
        h = hidden
        lim1, lim2 = 1.0 / np.sqrt(d), 1.0 / np.sqrt(h)
        w = np.concatenate([
            rng.uniform(-lim1, lim1, h * d),
            np.zeros(h),
            rng.uniform(-lim2, lim2, h),
            [0.0],
        ])
        return ModelParams(kind, w, (d, h))
    raise ValueError(f"unknown model kind {kind!r}")


def _unpack_mlp(params):
    d, h = params.layout
    w = params.weights
    W1 = w[: h * d].reshape(h, d)
    c1 = w[h * d: h * d + h]
    W2 = w[h * d + h: h * d + 2 * h]
    c2 = w[-1]
    return W1, c1, W2, c2


def _logistic(z):
    return 0.5 * (1.0 + np.tanh(0.5 * z))


def _check_batch(params, X):
    X = np.asarray(X, dtype=np.float64)
    if X.ndim == 1:
        X = X[None, :]
    if X.ndim != 2 or X.shape[1] != params.dim:
        raise ShapeError(f"expected features of width {params.dim}, got shape {X.shape}")
    return X


def _forward_parts(params, X):
    if params.kind == "linear":
        z = X @ params.weights[:-1] + params.weights[-1]
        return z, None
    W1, c1, W2, c2 = _unpack_mlp(params)
    hidden = np.tanh(X @ W1.T + c1)
    return hidden @ W2 + c2, hidden


def forward(params, X):
    """Scores in (0, 1) for each row of ``X``."""
    X = _check_batch(params, X)
    z, _ = _forward_parts(params, X)
    return _logistic(np.clip(z, -LOGIT_CAP, LOGIT_CAP))


def backward(params, X, dL_dscore):
    """Gradient of ``sum_i dL_dscore[i] * score_i`` with respect to the weights."""
    X = _check_batch(params, X)
    g = np.asarray(dL_dscore, dtype=np.float64)
    if g.shape != (X.shape[0],):
        raise ShapeError(f"dL_dscore has shape {g.shape}, batch has {X.shape[0]} rows")
    z, hidden = _forward_parts(params, X)
    s = _logistic(np.clip(z, -LOGIT_CAP, LOGIT_CAP))
    # clipped logits have zero derivative
    dz = g * s * (1.0 - s) * (np.abs(z) <= LOGIT_CAP)
    if params.kind == "linear":
        return np.concatenate([dz @ X, [dz.sum()]])
    W1, c1, W2, c2 = _unpack_mlp(params)
    dpre = np.outer(dz, W2) * (1.0 - hidden**2)
    return np.concatenate([(dpre.T @ X).ravel(), dpre.sum(axis=0), dz @ hidden, [dz.sum()]])


def save_checkpoint(params, path):
    record = {"kind": params.kind, "layout": list(params.layout), "weights": params.weights.tolist()}
    Path(path).write_text(json.dumps(record))


def load_checkpoint(path):
    record = json.loads(Path(path).read_text())
    return ModelParams(record["kind"], np.array(record["weights"], dtype=np.float64), tuple(record["layout"]))
