"""Linear and gradient-boosted regressors with JSON-portable fitted state.

Both estimators follow the scikit-learn fit/predict/get_params protocol so
they compose with pipelines and model-selection tooling. The boosted model
grows its own axis-aligned regression trees so fitted artifacts serialize to
plain JSON and partial-dependence code can rely on constant-leaf structure.
"""

from __future__ import annotations

import json
import warnings
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from sklearn.base import BaseEstimator, RegressorMixin
from sklearn.utils.validation import check_array, check_is_fitted, check_X_y

MODEL_SCHEMA = "lanesig.model/1"


@dataclass
class RegressionTree:
    """Axis-aligned binary tree with constant leaves, stored as flat arrays.

    ``feature[k] == -1`` marks a leaf; internal nodes route rows with
    ``x[feature] <= threshold`` to ``left`` and the rest to ``right``.
    """

    feature: np.ndarray
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    value: np.ndarray

    def predict(self, X: np.ndarray) -> np.ndarray:
        node = np.zeros(len(X), dtype=np.int64)
        active = self.feature[node] >= 0
        while active.any():
            rows = np.nonzero(active)[0]
            cur = node[rows]
            go_left = X[rows, self.feature[cur]] <= self.threshold[cur]
            node[rows] = np.where(go_left, self.left[cur], self.right[cur])
            active = self.feature[node] >= 0
        return self.value[node]

    @property
    def n_nodes(self) -> int:
        return len(self.feature)

    def to_dict(self) -> dict:
        return {
            "feature": self.feature.tolist(),
            "threshold": self.threshold.tolist(),
            "left": self.left.tolist(),
            "right": self.right.tolist(),
            "value": self.value.tolist(),
        }

    @classmethod
    def from_dict(cls, payload: dict) -> "RegressionTree":
        return cls(
            feature=np.asarray(payload["feature"], dtype=np.int64),
            threshold=np.asarray(payload["threshold"], dtype=float),
            left=np.asarray(payload["left"], dtype=np.int64),
            right=np.asarray(payload["right"], dtype=np.int64),
            value=np.asarray(payload["value"], dtype=float),
        )


def _best_split(
    X: np.ndarray, y: np.ndarray, rows: np.ndarray, min_samples_leaf: int
) -> tuple[int, float] | None:
    """Split minimizing the summed squared error of the two children."""
    n = rows.size
    y_node = y[rows]
    total = y_node.sum()
    base_score = total * total / n
    best_gain = 0.0
    best: tuple[int, float] | None = None
    for col in range(X.shape[1]):
        values = X[rows, col]
        order = np.argsort(values, kind="stable")
        v_sorted = values[order]
        prefix = np.cumsum(y_node[order])
        left_n = np.arange(1, n)
        right_n = n - left_n
        left_sum = prefix[:-1]
        right_sum = total - left_sum
        score = left_sum * left_sum / left_n + right_sum * right_sum / right_n
        valid = (
            (v_sorted[:-1] < v_sorted[1:])
            & (left_n >= min_samples_leaf)
            & (right_n >= min_samples_leaf)
        )
        if not valid.any():
            continue
        gains = np.where(valid, score - base_score, -np.inf)
        k = int(np.argmax(gains))
        if gains[k] > best_gain:
            best_gain = float(gains[k])
            best = (col, float((v_sorted[k] + v_sorted[k + 1]) / 2.0))
    return best


def grow_tree(
    X: np.ndarray, y: np.ndarray, max_depth: int, min_samples_leaf: int = 1
) -> RegressionTree:
    """Greedy depth-first CART-style fit of ``y`` on ``X``."""
    feature: list[int] = []
    threshold: list[float] = []
    left: list[int] = []
    right: list[int] = []
    value: list[float] = []

    def build(rows: np.ndarray, depth: int) -> int:
        node_id = len(feature)
        feature.append(-1)
        threshold.append(0.0)
        left.append(-1)
        right.append(-1)
        value.append(float(y[rows].mean()))
        if depth >= max_depth or rows.size < 2 * min_samples_leaf:
            return node_id
        split = _best_split(X, y, rows, min_samples_leaf)
        if split is None:
            return node_id
        col, thr = split
        mask = X[rows, col] <= thr
        feature[node_id] = col
        threshold[node_id] = thr
        left[node_id] = build(rows[mask], depth + 1)
        right[node_id] = build(rows[~mask], depth + 1)
        return node_id

    build(np.arange(len(X)), 0)
    return RegressionTree(
        feature=np.asarray(feature, dtype=np.int64),
        threshold=np.asarray(threshold, dtype=float),
        left=np.asarray(left, dtype=np.int64),
        right=np.asarray(right, dtype=np.int64),
        value=np.asarray(value, dtype=float),
    )


class LinearFlowRegressor(RegressorMixin, BaseEstimator):
    """Ordinary least squares with an intercept.

    A rank-deficient design falls back to a tiny ridge penalty and sets
    ``rank_deficient_`` so callers can tell the solution was regularized.
    """

    def __init__(self, ridge_lambda: float = 1e-8):
        self.ridge_lambda = ridge_lambda

    def fit(self, X, y):
        X, y = check_X_y(X, y, y_numeric=True)
        if X.shape[0] <= X.shape[1]:
            raise ValueError(
                f"need more rows than features, got {X.shape[0]} rows x {X.shape[1]} features"
            )
        A = np.column_stack([np.ones(len(X)), X])
        solution, _, rank, _ = np.linalg.lstsq(A, y, rcond=None)
        self.rank_deficient_ = rank < A.shape[1]
        if self.rank_deficient_:
            warnings.warn(
                "design matrix is rank deficient; falling back to ridge",
                stacklevel=2,
            )
            gram = A.T @ A + self.ridge_lambda * np.eye(A.shape[1])
            solution = np.linalg.solve(gram, A.T @ y)
        self.intercept_ = float(solution[0])
        self.coef_ = solution[1:]
        self.n_features_in_ = X.shape[1]
        return self

    def predict(self, X):
        check_is_fitted(self, "coef_")
        X = check_array(X)
        if X.shape[1] != self.n_features_in_:
            raise ValueError(
                f"model expects {self.n_features_in_} features, got {X.shape[1]}"
            )
        return X @ self.coef_ + self.intercept_

    def to_dict(self) -> dict:
        check_is_fitted(self, "coef_")
        return {
            "coef": self.coef_.tolist(),
            "intercept": self.intercept_,
            "rank_deficient": bool(self.rank_deficient_),
            "params": {"ridge_lambda": self.ridge_lambda},
        }

    @classmethod
    def from_dict(cls, payload: dict) -> "LinearFlowRegressor":
        model = cls(**payload["params"])
        model.coef_ = np.asarray(payload["coef"], dtype=float)
        model.intercept_ = float(payload["intercept"])
        model.rank_deficient_ = bool(payload["rank_deficient"])
        model.n_features_in_ = len(model.coef_)
        return model


class GradientBoostedRegressor(RegressorMixin, BaseEstimator):
    """Stagewise squared-loss boosting over shallow regression trees.

    Prediction is the target mean plus ``learning_rate`` times the sum of the
    trees, each fit to the residuals left by the previous stage. With exact
    leaf means and a learning rate at most 1 the training MSE never increases.
    """

    def __init__(
        self,
        n_iterations: int = 1000,
        learning_rate: float = 0.1,
        max_depth: int = 3,
        min_samples_leaf: int = 1,
    ):
        self.n_iterations = n_iterations
        self.learning_rate = learning_rate
        self.max_depth = max_depth
        self.min_samples_leaf = min_samples_leaf

    def _check_params(self):
        if self.n_iterations < 0:
            raise ValueError("n_iterations must be >= 0")
        if not (0.0 < self.learning_rate <= 1.0):
            raise ValueError("learning_rate must be in (0, 1]")
        if self.max_depth < 1:
            raise ValueError("max_depth must be >= 1")

    def fit(self, X, y):
        self._check_params()
        X, y = check_X_y(X, y, y_numeric=True)
        if len(y) < 2:
            raise ValueError("need at least 2 rows")
        self.init_ = float(y.mean())
        residual = y - self.init_
        self.trees_ = []
        self.train_mse_path_ = []
        for _ in range(self.n_iterations):
            tree = grow_tree(X, residual, self.max_depth, self.min_samples_leaf)
            residual = residual - self.learning_rate * tree.predict(X)
            self.trees_.append(tree)
            mse = float(np.mean(residual**2))
            self.train_mse_path_.append(mse)
            if mse == 0.0:
                break
        self.n_features_in_ = X.shape[1]
        return self

    def predict(self, X):
        check_is_fitted(self, "trees_")
        X = check_array(X)
        if X.shape[1] != self.n_features_in_:
            raise ValueError(
                f"model expects {self.n_features_in_} features, got {X.shape[1]}"
            )
        out = np.full(len(X), self.init_)
        for tree in self.trees_:
            out += self.learning_rate * tree.predict(X)
        return out

    def staged_predict(self, X):
        """Yield predictions after each boosting stage (stage 0 = mean only)."""
        check_is_fitted(self, "trees_")
        X = check_array(X)
        out = np.full(len(X), self.init_)
        yield out.copy()
        for tree in self.trees_:
            out += self.learning_rate * tree.predict(X)
            yield out.copy()

    def to_dict(self) -> dict:
        check_is_fitted(self, "trees_")
        return {
            "init": self.init_,
            "trees": [tree.to_dict() for tree in self.trees_],
            "params": {
                "n_iterations": self.n_iterations,
                "learning_rate": self.learning_rate,
                "max_depth": self.max_depth,
                "min_samples_leaf": self.min_samples_leaf,
            },
        }

    @classmethod
    def from_dict(cls, payload: dict) -> "GradientBoostedRegressor":
        model = cls(**payload["params"])
        model.init_ = float(payload["init"])
        model.trees_ = [RegressionTree.from_dict(t) for t in payload["trees"]]
        model.train_mse_path_ = []
        model.n_features_in_ = None
        if model.trees_:
            max_feature = max(int(t.feature.max()) for t in model.trees_)
            model.n_features_in_ = max(max_feature + 1, 1)
        return model


_MODEL_KINDS = {
    "linear": LinearFlowRegressor,
    "gbrt": GradientBoostedRegressor,
}


def save_model(
    model,
    path: str | Path,
    variant: str,
    feature_names: list[str] | tuple[str, ...],
) -> None:
    """Write a fitted model as a versioned JSON artifact."""
    for kind, cls in _MODEL_KINDS.items():
        if isinstance(model, cls):
            break
    else:
        raise TypeError(f"cannot serialize model of type {type(model).__name__}")
    document = {
        "schema": MODEL_SCHEMA,
        "kind": kind,
        "variant": variant,
        "feature_names": list(feature_names),
        "payload": model.to_dict(),
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(document, fh)
        fh.write("\n")


def load_model(path: str | Path):
    """Load a model artifact; returns (model, variant, feature_names)."""
    with open(path, encoding="utf-8") as fh:
        document = json.load(fh)
    schema = document.get("schema")
    if schema != MODEL_SCHEMA:
        raise ValueError(f"unsupported model schema {schema!r}, expected {MODEL_SCHEMA!r}")
    cls = _MODEL_KINDS.get(document.get("kind"))
    if cls is None:
        raise ValueError(f"unknown model kind {document.get('kind')!r}")
    model = cls.from_dict(document["payload"])
    # restore the authoritative feature count from the artifact
    model.n_features_in_ = len(document["feature_names"])
    return model, document["variant"], list(document["feature_names"])
