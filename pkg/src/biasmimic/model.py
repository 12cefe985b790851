"""Small classifier with manual gradients.

Topology: a shared feature extractor (affine, or affine-relu-affine),
one binary logit head per class, and a separate multiclass head used
for inference. The multiclass head trains on detached features by
default: its gradients never reach the extractor. Forward and backward
are split so a training loop can push a batch through the extractor
once and reuse the features for several heads.
"""

from __future__ import annotations

import json

import numpy as np

from . import rng
from .errors import DataError

__all__ = ["Classifier", "save_checkpoint", "load_checkpoint"]


def _sigmoid(z):
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


class Classifier:
    """Extractor + per-class binary heads + multiclass inference head.

    `hidden_dim=0` selects a purely affine extractor. All parameters
    initialize uniformly in +-1/sqrt(fan_in) from a seeded stream; the
    multiclass head's initial values are kept so it can be reset to the
    exact same state later. `forward_sample_count` counts every sample
    pushed through the extractor, which makes pass-count accounting
    testable.
    """

    def __init__(self, input_dim: int, num_classes: int, feature_dim: int = 8,
                 hidden_dim: int = 0, seed: int = 0):
        if input_dim < 1 or num_classes < 2 or feature_dim < 1 or hidden_dim < 0:
            raise DataError("bad model dimensions")
        self.input_dim = input_dim
        self.num_classes = num_classes
        self.feature_dim = feature_dim
        self.hidden_dim = hidden_dim
        self.seed = seed
        self.arch = "linear" if hidden_dim == 0 else "one-hidden-layer"
        gen = rng.stream(seed, rng.INIT)

        def init(fan_in, *shape):
            s = 1.0 / np.sqrt(fan_in)
            return gen.uniform(-s, s, size=shape)

        self.params: dict[str, np.ndarray] = {}
        if hidden_dim == 0:
            self.params["w0"] = init(input_dim, input_dim, feature_dim)
            self.params["b0"] = init(input_dim, feature_dim)
        else:
            self.params["w0"] = init(input_dim, input_dim, hidden_dim)
            self.params["b0"] = init(input_dim, hidden_dim)
            self.params["w1"] = init(hidden_dim, hidden_dim, feature_dim)
            self.params["b1"] = init(hidden_dim, feature_dim)
        self.params["bin_w"] = init(feature_dim, num_classes, feature_dim)
        self.params["bin_b"] = init(feature_dim, num_classes)
        self.params["head_w"] = init(feature_dim, num_classes, feature_dim)
        self.params["head_b"] = init(feature_dim, num_classes)
        self._head_init = (self.params["head_w"].copy(), self.params["head_b"].copy())
        self.forward_sample_count = 0

    @property
    def extractor_keys(self) -> tuple[str, ...]:
        return ("w0", "b0") if self.hidden_dim == 0 else ("w0", "b0", "w1", "b1")

    def reset_multiclass_head(self) -> None:
        """Restore the multiclass head to its seeded initial values."""
        self.params["head_w"] = self._head_init[0].copy()
        self.params["head_b"] = self._head_init[1].copy()

    # -- forward ----------------------------------------------------------

    def _check_input(self, X: np.ndarray) -> np.ndarray:
        X = np.asarray(X, dtype=np.float64)
        if X.ndim == 1:
            X = X[None, :]
        if X.shape[1] != self.input_dim:
            raise DataError(f"input dim {X.shape[1]}, model expects {self.input_dim}")
        return X

    def features_cached(self, X: np.ndarray):
        """Latents plus the intermediates backward needs."""
        X = self._check_input(X)
        self.forward_sample_count += len(X)
        if self.hidden_dim == 0:
            F = X @ self.params["w0"] + self.params["b0"]
            return F, (X, None)
        A = X @ self.params["w0"] + self.params["b0"]
        H = np.maximum(A, 0.0)
        F = H @ self.params["w1"] + self.params["b1"]
        return F, (X, (A, H))

    def forward_features(self, X: np.ndarray) -> np.ndarray:
        return self.features_cached(X)[0]

    def extractor_backward(self, cache, dF: np.ndarray) -> dict[str, np.ndarray]:
        """Parameter gradients from a feature-space gradient."""
        X, hidden = cache
        if self.hidden_dim == 0:
            return {"w0": X.T @ dF, "b0": dF.sum(axis=0)}
        A, H = hidden
        dH = dF @ self.params["w1"].T
        dA = dH * (A > 0)
        return {
            "w0": X.T @ dA,
            "b0": dA.sum(axis=0),
            "w1": H.T @ dF,
            "b1": dF.sum(axis=0),
        }

    # -- binary one-vs-rest heads ------------------------------------------

    def binary_head_backward(self, y: int, F: np.ndarray, labels: np.ndarray):
        """Mean binary cross-entropy of head y on precomputed features.

        Returns (loss, dF, dw, db) where dF is the gradient the caller
        scatters back through the extractor.
        """
        w = self.params["bin_w"][y]
        z = F @ w + self.params["bin_b"][y]
        t = np.asarray(labels, dtype=np.float64)
        if len(t) == 0:
            raise DataError("empty batch")
        # max(z,0) - z t + log(1 + exp(-|z|)) is the overflow-safe BCE.
        loss = float(np.mean(np.maximum(z, 0.0) - z * t + np.log1p(np.exp(-np.abs(z)))))
        dz = (_sigmoid(z) - t) / len(t)
        return loss, np.outer(dz, w), dz @ F, float(dz.sum())

    def binary_loss_and_grad(self, y: int, X: np.ndarray, labels: np.ndarray):
        """Loss and full gradient dict (head y + extractor) for one batch."""
        if not 0 <= y < self.num_classes:
            raise DataError(f"no binary head {y}")
        labels = np.asarray(labels)
        X = self._check_input(X)
        if len(labels) != len(X):
            raise DataError("labels and batch disagree in length")
        F, cache = self.features_cached(X)
        loss, dF, dw, db = self.binary_head_backward(y, F, labels)
        grads = self.extractor_backward(cache, dF)
        gw = np.zeros_like(self.params["bin_w"])
        gb = np.zeros_like(self.params["bin_b"])
        gw[y] = dw
        gb[y] = db
        grads["bin_w"] = gw
        grads["bin_b"] = gb
        return loss, grads

    # -- multiclass inference head ------------------------------------------

    def multiclass_head_backward(self, F: np.ndarray, labels: np.ndarray,
                                 sample_weights: np.ndarray | None = None):
        """Weighted-mean softmax cross-entropy on precomputed features.

        Returns (loss, dW, db, dF).
        """
        labels = np.asarray(labels, dtype=np.int64)
        if len(labels) == 0:
            raise DataError("empty batch")
        if labels.min() < 0 or labels.max() >= self.num_classes:
            raise DataError("label outside class range")
        Z = F @ self.params["head_w"].T + self.params["head_b"]
        Z = Z - Z.max(axis=1, keepdims=True)
        lse = np.log(np.exp(Z).sum(axis=1))
        n = len(labels)
        losses = lse - Z[np.arange(n), labels]
        if sample_weights is None:
            w = np.ones(n)
        else:
            w = np.asarray(sample_weights, dtype=np.float64)
            if len(w) != n:
                raise DataError("sample_weights and batch disagree in length")
            if (w <= 0).any():
                raise DataError("sample weights must be positive")
        loss = float((w * losses).sum() / n)
        P = np.exp(Z - lse[:, None])
        P[np.arange(n), labels] -= 1.0
        dZ = P * (w / n)[:, None]
        return loss, dZ.T @ F, dZ.sum(axis=0), dZ @ self.params["head_w"]

    def multiclass_loss_and_grad(self, X: np.ndarray, labels: np.ndarray,
                                 sample_weights: np.ndarray | None = None,
                                 detach_features: bool = True):
        """Loss and gradients for the multiclass head.

        With `detach_features` (the default) the gradient dict contains
        head parameters only, so updates can never move the extractor.
        Joint training passes False.
        """
        X = self._check_input(X)
        if len(np.asarray(labels)) != len(X):
            raise DataError("labels and batch disagree in length")
        F, cache = self.features_cached(X)
        loss, dW, db, dF = self.multiclass_head_backward(F, labels, sample_weights)
        grads = {"head_w": dW, "head_b": db}
        if not detach_features:
            grads.update(self.extractor_backward(cache, dF))
        return loss, grads

    # -- inference -----------------------------------------------------------

    def logits(self, X: np.ndarray) -> np.ndarray:
        F = self.forward_features(X)
        return F @ self.params["head_w"].T + self.params["head_b"]

    def predict(self, X: np.ndarray) -> np.ndarray:
        """Argmax over multiclass logits; ties go to the lowest class."""
        return np.argmax(self.logits(X), axis=1)

    # -- state ----------------------------------------------------------------

    def state_dict(self) -> dict[str, np.ndarray]:
        return {k: v.copy() for k, v in self.params.items()}

    def load_state_dict(self, state: dict[str, np.ndarray]) -> None:
        for k, v in self.params.items():
            if k not in state:
                raise DataError(f"checkpoint is missing parameter {k!r}")
            arr = np.asarray(state[k], dtype=np.float64)
            if arr.shape != v.shape:
                raise DataError(
                    f"parameter {k!r} has shape {arr.shape}, expected {v.shape}"
                )
            self.params[k] = arr.copy()


def save_checkpoint(m: Classifier, path) -> None:
    """Write a model as JSON: shape header plus row-major parameter data."""
    payload = {
        "format": "grouped-classifier-v1",
        "arch": m.arch,
        "input_dim": m.input_dim,
        "num_classes": m.num_classes,
        "feature_dim": m.feature_dim,
        "hidden_dim": m.hidden_dim,
        "seed": m.seed,
        "params": {
            k: {"shape": list(v.shape), "data": v.ravel().tolist()}
            for k, v in m.params.items()
        },
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh)
        fh.write("\n")


def load_checkpoint(path) -> Classifier:
    try:
        fh = open(path, encoding="utf-8")
    except OSError as e:
        raise DataError(f"{path}: cannot open ({e})") from None
    with fh:
        try:
            payload = json.load(fh)
        except json.JSONDecodeError as e:
            raise DataError(f"{path}: not valid JSON ({e})") from None
    try:
        if payload["format"] != "grouped-classifier-v1":
            raise DataError(f"{path}: unknown checkpoint format {payload['format']!r}")
        m = Classifier(
            input_dim=int(payload["input_dim"]),
            num_classes=int(payload["num_classes"]),
            feature_dim=int(payload["feature_dim"]),
            hidden_dim=int(payload["hidden_dim"]),
            seed=int(payload["seed"]),
        )
        state = {
            k: np.asarray(spec["data"], dtype=np.float64).reshape(spec["shape"])
            for k, spec in payload["params"].items()
        }
    except (KeyError, TypeError, ValueError) as e:
        raise DataError(f"{path}: malformed checkpoint ({e})") from None
    m.load_state_dict(state)
    return m
