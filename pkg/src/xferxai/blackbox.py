"""Pluggable prediction sources the surrogates are fitted against.

Three kinds: stored prediction files, linear models, and a small
one-hidden-layer network that stands in for an opaque system when no
predictions ship with the data.
"""

import csv
from pathlib import Path

import numpy as np

from . import jsonio
from .errors import (
    DataFormatError,
    DimensionMismatchError,
    DivergenceError,
    NonFiniteError,
)


class PredictorSpec:
    """Tagged predictor description: kind 'file', 'linear', or 'mlp'."""

    def __init__(self, kind, params):
        if kind not in ("file", "linear", "mlp"):
            raise DataFormatError(f"unknown predictor kind {kind!r}")
        self.kind = kind
        self.params = params

    def to_doc(self):
        return {"format_version": 1, "kind": self.kind, "params": self.params}

    @classmethod
    def from_doc(cls, doc):
        try:
            return cls(doc["kind"], doc["params"])
        except KeyError as exc:
            raise DataFormatError(f"predictor document missing {exc}") from exc

    @classmethod
    def load(cls, path):
        path = Path(path)
        if not path.exists():
            raise DataFormatError(f"predictor file not found: {path}")
        return cls.from_doc(jsonio.load(path))

    def save(self, path):
        jsonio.dump(self.to_doc(), path)

    @classmethod
    def linear(cls, weights, bias):
        return cls("linear", {
            "weights": [float(w) for w in np.asarray(weights, dtype=float)],
            "bias": float(bias),
        })


def _predict_file(params, instances):
    path = Path(params["path"])
    if not path.exists():
        raise DataFormatError(f"prediction file not found: {path}")
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        header = [h.strip() for h in header]
        columns = params.get("columns", header)
        for c in columns:
            if c not in header:
                raise DataFormatError(f"{path}: missing prediction column {c!r}")
        idx = [header.index(c) for c in columns]
        values = [[float(row[i]) for i in idx] for row in reader if row]
    out = np.asarray(values, dtype=float)
    if out.shape[0] != instances.shape[0]:
        raise DimensionMismatchError(
            "stored predictions must cover every dataset row",
            expected=instances.shape[0], got=out.shape[0],
        )
    return out[:, 0] if out.shape[1] == 1 else out


def _mlp_forward(params, z):
    w1 = np.asarray(params["w1"], dtype=float)
    b1 = np.asarray(params["b1"], dtype=float)
    w2 = np.asarray(params["w2"], dtype=float)
    b2 = np.asarray(params["b2"], dtype=float)
    if params.get("activation", "tanh") != "tanh":
        raise DataFormatError(f"unknown activation {params.get('activation')!r}")
    hidden = np.tanh(z @ w1 + b1)
    return hidden @ w2 + b2, hidden


def predict(spec, instances):
    """Deterministic predictions of the declared system on raw instances.

    Returns a vector for single-task predictors, a matrix with one
    column per task otherwise.
    """
    instances = np.atleast_2d(np.asarray(instances, dtype=float))
    if spec.kind == "file":
        return _predict_file(spec.params, instances)
    if spec.kind == "linear":
        weights = np.asarray(spec.params["weights"], dtype=float)
        if instances.shape[1] != weights.shape[0]:
            raise DimensionMismatchError(
                "instance width must match weights",
                expected=weights.shape[0], got=instances.shape[1],
            )
        return instances @ weights + float(spec.params["bias"])
    # mlp
    params = spec.params
    x_mean = np.asarray(params["x_mean"], dtype=float)
    x_std = np.asarray(params["x_std"], dtype=float)
    if instances.shape[1] != x_mean.shape[0]:
        raise DimensionMismatchError(
            "instance width must match the network input",
            expected=x_mean.shape[0], got=instances.shape[1],
        )
    z = (instances - x_mean) / x_std
    out, _ = _mlp_forward(params, z)
    y_mean = np.asarray(params["y_mean"], dtype=float)
    y_std = np.asarray(params["y_std"], dtype=float)
    out = out * y_std + y_mean
    return out[:, 0] if out.shape[1] == 1 else out


def train_mlp(data, labels, hidden=12, epochs=1000, step=0.5, seed=0):
    """Train a one-hidden-layer tanh network by full-batch gradient descent.

    Inputs and labels are standardized internally; the returned spec
    folds the standardization back in, so predict takes raw values.
    Backtracking halves the step whenever a move would increase the
    loss, so the recorded loss curve is non-increasing. Deterministic
    per seed.
    """
    data = np.asarray(data, dtype=float)
    labels = np.asarray(labels, dtype=float)
    if labels.ndim == 1:
        labels = labels[:, None]
    m = data.shape[0]
    if m < 10:
        raise DataFormatError("need at least 10 rows to train")
    if not (np.all(np.isfinite(data)) and np.all(np.isfinite(labels))):
        raise NonFiniteError("training data contains non-finite entries")
    if labels.shape[0] != m:
        raise DimensionMismatchError(
            "labels row count mismatch", expected=m, got=labels.shape[0]
        )

    x_mean = data.mean(axis=0)
    x_std = data.std(axis=0)
    x_std[x_std == 0] = 1.0
    y_mean = labels.mean(axis=0)
    y_std = labels.std(axis=0)
    y_std[y_std == 0] = 1.0
    z = (data - x_mean) / x_std
    t = (labels - y_mean) / y_std

    n_in = z.shape[1]
    n_out = t.shape[1]
    rng = np.random.default_rng(seed)
    w1 = rng.normal(size=(n_in, hidden)) / np.sqrt(n_in)
    b1 = np.zeros(hidden)
    w2 = rng.normal(size=(hidden, n_out)) / np.sqrt(hidden)
    b2 = np.zeros(n_out)

    def loss_of(w1, b1, w2, b2):
        out = np.tanh(z @ w1 + b1) @ w2 + b2
        return float(np.mean((out - t) ** 2))

    loss = loss_of(w1, b1, w2, b2)
    step = float(step)
    step_floor = 1e-14
    stalled = False
    for _ in range(int(epochs)):
        if stalled:
            break
        hidden_act = np.tanh(z @ w1 + b1)
        out = hidden_act @ w2 + b2
        d_out = 2.0 * (out - t) / (m * n_out)
        g_w2 = hidden_act.T @ d_out
        g_b2 = d_out.sum(axis=0)
        d_hidden = (d_out @ w2.T) * (1.0 - hidden_act ** 2)
        g_w1 = z.T @ d_hidden
        g_b1 = d_hidden.sum(axis=0)
        while True:
            cand = (w1 - step * g_w1, b1 - step * g_b1,
                    w2 - step * g_w2, b2 - step * g_b2)
            cand_loss = loss_of(*cand)
            if np.isfinite(cand_loss) and cand_loss <= loss:
                w1, b1, w2, b2 = cand
                loss = cand_loss
                step = min(step * 1.1, 10.0)
                break
            step *= 0.5
            if step < step_floor:
                if not np.isfinite(cand_loss):
                    raise DivergenceError(
                        "loss is non-finite even at a vanishing step; "
                        "the starting step is too large"
                    )
                # no direction of decrease at the floor: converged
                stalled = True
                break

    return PredictorSpec("mlp", {
        "activation": "tanh",
        "hidden": int(hidden),
        "seed": int(seed),
        "w1": [[float(v) for v in row] for row in w1],
        "b1": [float(v) for v in b1],
        "w2": [[float(v) for v in row] for row in w2],
        "b2": [float(v) for v in b2],
        "x_mean": [float(v) for v in x_mean],
        "x_std": [float(v) for v in x_std],
        "y_mean": [float(v) for v in y_mean],
        "y_std": [float(v) for v in y_std],
        "final_loss": loss,
    })
