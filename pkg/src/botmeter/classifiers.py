"""From-scratch binary classifiers: Gaussian NB, KNN, random forest and
L2-regularized logistic regression.

All four share fit(spec, X, y) / predict(model, X) with deterministic
behaviour for a fixed seed.  KNN and LR standardize features internally
(sample std, stored in the model); NB and RF consume raw features.  Tie
conventions all resolve to class 0.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass

import numpy as np

from .errors import ValidationError

KINDS = ("NB", "KNN", "RF", "LR")

MODEL_FORMAT_VERSION = 1


@dataclass(frozen=True)
class ModelSpec:
    """Classifier kind plus hyperparameters (unused groups are ignored)."""

    kind: str
    seed: int = 0
    # NB
    var_smoothing: float = 1e-9
    # KNN
    k: int = 5
    # RF
    n_trees: int = 100
    max_features: int | None = None  # None -> ceil(sqrt(d))
    min_samples_split: int = 2
    bootstrap: bool = True
    # LR
    l2_lambda: float = 1.0
    learning_rate: float = 0.1
    max_iters: int = 1000
    tol: float = 1e-6

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValidationError(f"unknown classifier kind {self.kind!r}")
        if self.k < 1:
            raise ValidationError("k must be >= 1")
        if self.n_trees < 1:
            raise ValidationError("n_trees must be >= 1")
        if self.l2_lambda < 0:
            raise ValidationError("l2_lambda must be >= 0")
        if self.var_smoothing < 0:
            raise ValidationError("var_smoothing must be >= 0")


def default_specs(seed: int = 0) -> list[ModelSpec]:
    """The four classifiers in report order."""
    return [ModelSpec(kind=k, seed=seed) for k in KINDS]


def _validate_training_input(X, y):
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.int64)
    if X.ndim != 2:
        raise ValidationError("X must be a 2-D matrix")
    if len(y) != len(X):
        raise ValidationError("X and y lengths differ")
    bad = np.argwhere(~np.isfinite(X))
    if len(bad):
        r, c = bad[0]
        raise ValidationError(f"non-finite value at row {r}, column {c}")
    classes = np.unique(y)
    if not np.array_equal(classes, [0, 1]):
        raise ValidationError(
            f"need both classes 0 and 1 in y (got {classes.tolist()})")
    return X, y


def _validate_predict_input(X, width):
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2 or X.shape[1] != width:
        raise ValidationError(
            f"query width {X.shape} does not match training width {width}")
    return X


def _standardize_fit(X):
    """Per-column mean and sample std; constant columns get std 1 so they
    map to zeros instead of dividing by zero."""
    mu = X.mean(axis=0)
    sigma = X.std(axis=0, ddof=1) if len(X) > 1 else np.zeros(X.shape[1])
    sigma = np.where(sigma == 0.0, 1.0, sigma)
    return mu, sigma


# --- Gaussian Naive Bayes ---------------------------------------------------

@dataclass
class NBModel:
    spec: ModelSpec
    log_priors: np.ndarray   # (2,)
    means: np.ndarray        # (2, d)
    variances: np.ndarray    # (2, d), smoothing floor already added

    def joint_log_likelihood(self, X) -> np.ndarray:
        X = _validate_predict_input(X, self.means.shape[1])
        scores = np.empty((len(X), 2))
        for cls in (0, 1):
            var = self.variances[cls]
            scores[:, cls] = self.log_priors[cls] - 0.5 * np.sum(
                np.log(2 * np.pi * var) + (X - self.means[cls]) ** 2 / var,
                axis=1)
        return scores

    def predict_proba(self, X) -> np.ndarray:
        scores = self.joint_log_likelihood(X)
        shifted = scores - scores.max(axis=1, keepdims=True)
        expd = np.exp(shifted)
        return expd / expd.sum(axis=1, keepdims=True)

    def predict(self, X) -> np.ndarray:
        scores = self.joint_log_likelihood(X)
        return (scores[:, 1] > scores[:, 0]).astype(np.int64)  # tie -> 0


def _fit_nb(spec: ModelSpec, X, y) -> NBModel:
    priors = np.array([(y == 0).mean(), (y == 1).mean()])
    pooled_var = X.var(axis=0)
    max_var = float(pooled_var.max()) if X.size else 0.0
    eps = spec.var_smoothing * max_var if max_var > 0 else spec.var_smoothing
    means = np.vstack([X[y == cls].mean(axis=0) for cls in (0, 1)])
    variances = np.vstack([X[y == cls].var(axis=0) + eps for cls in (0, 1)])
    return NBModel(spec, np.log(priors), means, variances)


# --- K nearest neighbours ---------------------------------------------------

@dataclass
class KNNModel:
    spec: ModelSpec
    mu: np.ndarray
    sigma: np.ndarray
    train_x: np.ndarray  # standardized
    train_y: np.ndarray

    def predict(self, X) -> np.ndarray:
        X = _validate_predict_input(X, self.train_x.shape[1])
        Xs = (X - self.mu) / self.sigma
        k = min(self.spec.k, len(self.train_x))
        out = np.empty(len(Xs), dtype=np.int64)
        for start in range(0, len(Xs), 256):
            chunk = Xs[start:start + 256]
            d2 = ((chunk[:, None, :] - self.train_x[None, :, :]) ** 2).sum(axis=2)
            # Stable sort: equal distances resolve to the lower train index.
            nearest = np.argsort(d2, axis=1, kind="stable")[:, :k]
            votes = self.train_y[nearest].sum(axis=1)
            out[start:start + 256] = (votes * 2 > k).astype(np.int64)  # tie -> 0
        return out


def _fit_knn(spec: ModelSpec, X, y) -> KNNModel:
    mu, sigma = _standardize_fit(X)
    return KNNModel(spec, mu, sigma, (X - mu) / sigma, y.copy())


# --- Logistic regression ----------------------------------------------------

def lr_loss_and_grad(w, b, X, y, l2_lambda):
    """Mean regularized log-loss and its analytic gradient.

    loss = mean(log(1 + exp(-margin))) + l2_lambda/(2n) * ||w||^2, bias
    unpenalized.  Used by both the trainer and the finite-difference check.
    """
    n = len(X)
    z = X @ w + b
    # log(1 + exp(-t)) evaluated stably for both signs of t.
    margins = np.where(y == 1, z, -z)
    loss = float(np.mean(np.logaddexp(0.0, -margins)))
    loss += l2_lambda / (2 * n) * float(w @ w)
    p = _sigmoid(z)
    residual = p - y
    grad_w = X.T @ residual / n + (l2_lambda / n) * w
    grad_b = float(residual.mean())
    return loss, grad_w, grad_b


def _sigmoid(z):
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


@dataclass
class LRModel:
    spec: ModelSpec
    mu: np.ndarray
    sigma: np.ndarray
    weights: np.ndarray
    bias: float
    n_iters: int = 0

    def decision_function(self, X) -> np.ndarray:
        X = _validate_predict_input(X, len(self.weights))
        return ((X - self.mu) / self.sigma) @ self.weights + self.bias

    def predict_proba(self, X) -> np.ndarray:
        return _sigmoid(self.decision_function(X))

    def predict(self, X) -> np.ndarray:
        return (self.predict_proba(X) >= 0.5).astype(np.int64)


def _fit_lr(spec: ModelSpec, X, y) -> LRModel:
    mu, sigma = _standardize_fit(X)
    Xs = (X - mu) / sigma
    w = np.zeros(X.shape[1])
    b = 0.0
    iters = 0
    for iters in range(1, spec.max_iters + 1):
        _, grad_w, grad_b = lr_loss_and_grad(w, b, Xs, y, spec.l2_lambda)
        step_w = spec.learning_rate * grad_w
        w -= step_w
        b -= spec.learning_rate * grad_b
        if np.max(np.abs(step_w)) < spec.tol:
            break
    return LRModel(spec, mu, sigma, w, b, iters)


# --- Random forest ----------------------------------------------------------

@dataclass
class RFModel:
    spec: ModelSpec
    n_features: int
    trees: list  # nested dicts; leaves carry class counts

    def predict(self, X) -> np.ndarray:
        X = _validate_predict_input(X, self.n_features)
        votes = np.zeros(len(X), dtype=np.int64)
        for tree in self.trees:
            votes += _tree_predict(tree, X)
        return (votes * 2 > len(self.trees)).astype(np.int64)  # tie -> 0


def _tree_predict(tree, X) -> np.ndarray:
    out = np.empty(len(X), dtype=np.int64)
    for i, row in enumerate(X):
        node = tree
        while "feature" in node:
            node = node["left"] if row[node["feature"]] <= node["threshold"] \
                else node["right"]
        counts = node["counts"]
        out[i] = int(counts[1] > counts[0])  # tie -> 0
    return out


def _gini_best_split(values, ones_total, labels):
    """Best (impurity, threshold) along one feature column, or None if the
    column is constant.  Ties keep the first candidate (ascending order)."""
    order = np.argsort(values, kind="stable")
    sv = values[order]
    sy = labels[order]
    boundaries = np.flatnonzero(sv[1:] != sv[:-1]) + 1
    if len(boundaries) == 0:
        return None
    n = len(sv)
    ones_left = np.cumsum(sy)[boundaries - 1]
    n_left = boundaries.astype(np.float64)
    n_right = n - n_left
    ones_right = ones_total - ones_left
    p1l = ones_left / n_left
    p1r = ones_right / n_right
    gini_l = 1.0 - p1l ** 2 - (1.0 - p1l) ** 2
    gini_r = 1.0 - p1r ** 2 - (1.0 - p1r) ** 2
    weighted = (n_left * gini_l + n_right * gini_r) / n
    best = int(np.argmin(weighted))
    cut = boundaries[best]
    threshold = float((sv[cut - 1] + sv[cut]) / 2.0)
    return float(weighted[best]), threshold


def _grow_tree(X, y, indices, max_features, min_samples_split, rng):
    sub_y = y[indices]
    ones = int(sub_y.sum())
    counts = [len(indices) - ones, ones]
    if ones in (0, len(indices)) or len(indices) < min_samples_split:
        return {"counts": counts}
    # Examine a random feature subset; keep scanning past it only while no
    # examined feature admitted a split.
    permuted = rng.permutation(X.shape[1])
    best = None
    examined = 0
    for f in permuted:
        examined += 1
        result = _gini_best_split(X[indices, f], ones, sub_y)
        if result is not None:
            impurity, threshold = result
            if best is None or impurity < best[0]:
                best = (impurity, int(f), threshold)
        if examined >= max_features and best is not None:
            break
    if best is None:
        return {"counts": counts}
    _, feature, threshold = best
    mask = X[indices, feature] <= threshold
    left = _grow_tree(X, y, indices[mask], max_features, min_samples_split, rng)
    right = _grow_tree(X, y, indices[~mask], max_features, min_samples_split, rng)
    return {"feature": feature, "threshold": threshold,
            "left": left, "right": right}


def _fit_rf(spec: ModelSpec, X, y) -> RFModel:
    d = X.shape[1]
    max_features = spec.max_features or math.ceil(math.sqrt(d))
    max_features = min(max_features, d)
    trees = []
    for t in range(spec.n_trees):
        rng = np.random.default_rng([spec.seed, t])
        if spec.bootstrap:
            indices = rng.integers(0, len(X), len(X))
        else:
            indices = np.arange(len(X))
        trees.append(_grow_tree(X, y, indices, max_features,
                                spec.min_samples_split, rng))
    return RFModel(spec, d, trees)


# --- Uniform interface ------------------------------------------------------

Model = NBModel | KNNModel | LRModel | RFModel

_FITTERS = {"NB": _fit_nb, "KNN": _fit_knn, "LR": _fit_lr, "RF": _fit_rf}


def fit(spec: ModelSpec, X, y) -> Model:
    """Train a classifier; X rows are flows, y is the binary attack label."""
    X, y = _validate_training_input(X, y)
    return _FITTERS[spec.kind](spec, X, y)


def predict(model: Model, X) -> np.ndarray:
    return model.predict(X)


# --- Serialization ----------------------------------------------------------

def save_model(model: Model, path) -> None:
    """Versioned JSON dump; floats round-trip exactly via repr."""
    state: dict = {}
    if isinstance(model, NBModel):
        state = {"log_priors": model.log_priors.tolist(),
                 "means": model.means.tolist(),
                 "variances": model.variances.tolist()}
    elif isinstance(model, KNNModel):
        state = {"mu": model.mu.tolist(), "sigma": model.sigma.tolist(),
                 "train_x": model.train_x.tolist(),
                 "train_y": model.train_y.tolist()}
    elif isinstance(model, LRModel):
        state = {"mu": model.mu.tolist(), "sigma": model.sigma.tolist(),
                 "weights": model.weights.tolist(), "bias": model.bias,
                 "n_iters": model.n_iters}
    elif isinstance(model, RFModel):
        state = {"n_features": model.n_features, "trees": model.trees}
    else:
        raise ValidationError(f"cannot serialize {type(model).__name__}")
    doc = {"format_version": MODEL_FORMAT_VERSION,
           "kind": model.spec.kind,
           "spec": asdict(model.spec),
           "state": state}
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh)


def load_model(path) -> Model:
    with open(path, encoding="utf-8") as fh:
        doc = json.load(fh)
    version = doc.get("format_version")
    if version != MODEL_FORMAT_VERSION:
        raise ValidationError(f"unsupported model format version {version!r}")
    spec = ModelSpec(**doc["spec"])
    state = doc["state"]
    arr = lambda v: np.asarray(v, dtype=np.float64)
    if spec.kind == "NB":
        return NBModel(spec, arr(state["log_priors"]), arr(state["means"]),
                       arr(state["variances"]))
    if spec.kind == "KNN":
        return KNNModel(spec, arr(state["mu"]), arr(state["sigma"]),
                        arr(state["train_x"]),
                        np.asarray(state["train_y"], dtype=np.int64))
    if spec.kind == "LR":
        return LRModel(spec, arr(state["mu"]), arr(state["sigma"]),
                       arr(state["weights"]), state["bias"], state["n_iters"])
    return RFModel(spec, state["n_features"], state["trees"])
