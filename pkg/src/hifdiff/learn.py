"""Classifier fitting, stratified cross-validation and grid search.

Estimators are scikit-learn implementations configured to the required
semantics; the random forest is bagged here so that every tree's bootstrap
sample is inspectable.  Inputs are z-scored with training-set statistics that
travel with the fitted model.
"""

from __future__ import annotations

import itertools
import json
import pickle
import warnings
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Any, Mapping, Sequence

import numpy as np
from sklearn.ensemble import GradientBoostingClassifier
from sklearn.exceptions import ConvergenceWarning
from sklearn.naive_bayes import GaussianNB
from sklearn.neighbors import KNeighborsClassifier
from sklearn.neural_network import MLPClassifier
from sklearn.svm import SVC
from sklearn.tree import DecisionTreeClassifier

from .features.catalog import FeatureVector
from .features.selection import FeatureTable
from .metrics import EXTERNAL, INTERNAL, ConfusionCounts, UndefinedMetricError, balanced_accuracy

MODEL_SCHEMA = "hifdiff.trained-model/1"


class ClassifierKind(str, Enum):
    DECISION_TREE = "decision_tree"
    RANDOM_FOREST = "random_forest"
    GRADIENT_BOOST = "gradient_boost"
    MLP = "mlp"
    NAIVE_BAYES = "naive_bayes"
    KNN = "knn"
    SVM = "svm"


class InvalidDataError(ValueError):
    pass


class InvalidInputError(ValueError):
    pass


class StratificationError(ValueError):
    pass


# continuous ranges discretized coarsely; well-known good points are kept on the grid
DEFAULT_GRID: dict[str, dict[str, list]] = {
    "decision_tree": {"criterion": ["entropy", "gini"]},
    "random_forest": {
        "max_depth": [5, 20],
        "max_features": [0.1, 0.5, 1.0],
        "min_samples_leaf": [5, 60],
        "estimators": [500],
    },
    "gradient_boost": {
        "learning_rate": [0.01, 0.1],
        "max_depth": [5],
        "estimators": [500],
        "subsample": [0.5, 1.0],
    },
    "mlp": {
        "activation": ["logistic", "identity", "tanh", "relu"],
        "alpha": [0.0001, 0.01],
        "hidden_layer": [[88, 23], [30, 8]],
        "learning_rate": ["adaptive"],
        "solver": ["lbfgs"],
    },
    "naive_bayes": {},
    "knn": {
        "leaf_size": [3, 15],
        "neighbors": [3, 4, 5, 10],
        "distance": ["manhattan", "euclidean"],
    },
    "svm": {
        "C": [0.1, 1, 10, 100, 1000],
        "gamma": [0.0001, 0.001, 0.01, 0.1, 1],
        "kernel": ["rbf", "poly"],
    },
}

MAX_ESTIMATORS = 1000


def load_grid(path: str | Path | None = None, max_estimators: int = MAX_ESTIMATORS) -> dict[str, dict[str, list]]:
    """Grid from a JSON file keyed by classifier kind; missing kinds keep the defaults."""
    grid = json.loads(json.dumps(DEFAULT_GRID))
    if path is not None:
        user = json.loads(Path(path).read_text())
        unknown = set(user) - {k.value for k in ClassifierKind}
        if unknown:
            raise ValueError(f"unknown classifier kinds in grid file: {sorted(unknown)}")
        grid.update(user)
    for kind, params in grid.items():
        for name, values in params.items():
            if not values:
                raise ValueError(f"empty candidate list for {kind}.{name}")
        if "estimators" in params:
            params["estimators"] = sorted({min(int(v), max_estimators) for v in params["estimators"]})
    return grid


def expand_grid(params: Mapping[str, Sequence]) -> list[dict[str, Any]]:
    keys = list(params)
    return [dict(zip(keys, combo)) for combo in itertools.product(*(params[k] for k in keys))]


# ---------------------------------------------------------------------------
# random forest
# ---------------------------------------------------------------------------


class BaggedForest:
    """Trees grown on bootstrap resamples with per-split feature subsampling; soft voting."""

    def __init__(self, n_estimators=500, max_depth=None, max_features=1.0, min_samples_leaf=1,
                 criterion="gini", random_state=0):
        self.n_estimators = n_estimators
        self.max_depth = max_depth
        self.max_features = max_features
        self.min_samples_leaf = min_samples_leaf
        self.criterion = criterion
        self.random_state = random_state

    def fit(self, X, y):
        X, y = np.asarray(X), np.asarray(y)
        rng = np.random.default_rng(self.random_state)
        self.classes_ = np.unique(y)
        self.trees_, self.bootstrap_indices_ = [], []
        for _ in range(self.n_estimators):
            idx = rng.integers(0, len(y), len(y))
            tree = DecisionTreeClassifier(
                criterion=self.criterion,
                max_depth=self.max_depth,
                max_features=self.max_features,
                min_samples_leaf=self.min_samples_leaf,
                random_state=int(rng.integers(2**31 - 1)),
            )
            tree.fit(X[idx], y[idx])
            self.trees_.append(tree)
            self.bootstrap_indices_.append(idx)
        return self

    def predict_proba(self, X):
        proba = np.zeros((len(X), self.classes_.size))
        for tree in self.trees_:
            cols = np.searchsorted(self.classes_, tree.classes_)
            proba[:, cols] += tree.predict_proba(X)
        return proba / len(self.trees_)

    def predict(self, X):
        return self.classes_[np.argmax(self.predict_proba(X), axis=1)]


class _ConstantClassifier:
    def __init__(self, label: int):
        self.label = label

    def predict(self, X):
        return np.full(len(X), self.label)


# ---------------------------------------------------------------------------
# fitting and prediction
# ---------------------------------------------------------------------------


def make_estimator(kind: ClassifierKind | str, hp: Mapping[str, Any], seed: int = 0):
    kind = ClassifierKind(kind)
    if kind is ClassifierKind.DECISION_TREE:
        return DecisionTreeClassifier(
            criterion=hp.get("criterion", "gini"), max_depth=hp.get("max_depth"), random_state=seed
        )
    if kind is ClassifierKind.RANDOM_FOREST:
        return BaggedForest(
            n_estimators=int(hp.get("estimators", 500)),
            max_depth=hp.get("max_depth"),
            max_features=hp.get("max_features", 1.0),
            min_samples_leaf=int(hp.get("min_samples_leaf", 1)),
            random_state=seed,
        )
    if kind is ClassifierKind.GRADIENT_BOOST:
        return GradientBoostingClassifier(
            loss="log_loss",
            learning_rate=hp.get("learning_rate", 0.1),
            max_depth=hp.get("max_depth", 3),
            n_estimators=int(hp.get("estimators", 100)),
            subsample=hp.get("subsample", 1.0),
            random_state=seed,
        )
    if kind is ClassifierKind.MLP:
        hidden = tuple(int(h) for h in hp.get("hidden_layer", (88, 23)))
        if len(hidden) != 2:
            raise ValueError("mlp needs exactly two hidden layers")
        return MLPClassifier(
            hidden_layer_sizes=hidden,
            activation=hp.get("activation", "relu"),
            alpha=hp.get("alpha", 1e-4),
            solver=hp.get("solver", "lbfgs"),
            learning_rate=hp.get("learning_rate", "adaptive"),
            tol=1e-4,
            max_iter=500,
            random_state=seed,
        )
    if kind is ClassifierKind.NAIVE_BAYES:
        # inputs are z-scored, so the largest feature variance is 1 and the floor is 1e-9
        return GaussianNB(var_smoothing=1e-9)
    if kind is ClassifierKind.KNN:
        return KNeighborsClassifier(
            n_neighbors=int(hp.get("neighbors", 5)),
            leaf_size=int(hp.get("leaf_size", 30)),
            metric=hp.get("distance", "euclidean"),
        )
    return SVC(
        C=hp.get("C", 1.0),
        gamma=hp.get("gamma", "scale"),
        kernel=hp.get("kernel", "rbf"),
        tol=1e-3,
        random_state=seed,
    )


def encode_labels(labels) -> np.ndarray:
    labels = np.asarray(labels, dtype=object)
    bad = set(labels.tolist()) - {INTERNAL, EXTERNAL}
    if bad:
        raise InvalidDataError(f"unknown labels {sorted(map(str, bad))}")
    return (labels == INTERNAL).astype(int)


def decode_labels(codes) -> np.ndarray:
    return np.where(np.asarray(codes) == 1, INTERNAL, EXTERNAL).astype(object)


@dataclass
class TrainedModel:
    kind: ClassifierKind
    hyperparameters: dict[str, Any]
    selected_features: list[str]
    mean: np.ndarray
    scale: np.ndarray
    estimator: Any
    train_seed: int
    schema: str = field(default=MODEL_SCHEMA)

    def standardize(self, X: np.ndarray) -> np.ndarray:
        return (X - self.mean) / self.scale


def fit(
    kind: ClassifierKind | str,
    hyperparameters: Mapping[str, Any],
    train: FeatureTable,
    seed: int = 0,
    allow_single_class: bool = False,
) -> TrainedModel:
    """Fit one classifier on z-scored features.

    A single-class training set is rejected unless ``allow_single_class`` is
    set, in which case the model always predicts that class.
    """
    kind = ClassifierKind(kind)
    X = np.asarray(train.values, dtype=float)
    if X.ndim != 2 or X.shape[0] == 0:
        raise InvalidDataError("empty training set")
    if not np.all(np.isfinite(X)):
        raise InvalidDataError("training features contain non-finite values")
    y = encode_labels(train.labels)

    mean = X.mean(axis=0)
    scale = X.std(axis=0)
    scale[scale == 0] = 1.0
    Z = (X - mean) / scale

    if np.unique(y).size < 2:
        if not allow_single_class:
            raise InvalidDataError("training set holds a single class")
        estimator = _ConstantClassifier(int(y[0]))
    else:
        estimator = make_estimator(kind, hyperparameters, seed)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", ConvergenceWarning)
            estimator.fit(Z, y)
    return TrainedModel(kind, dict(hyperparameters), list(train.names), mean, scale, estimator, seed)


def _as_matrix(model: TrainedModel, x) -> np.ndarray:
    if isinstance(x, FeatureTable):
        if x.names != model.selected_features:
            missing = [n for n in model.selected_features if n not in x.names]
            if missing:
                raise InvalidInputError(f"missing features {missing[:5]}")
            x = x.subset(model.selected_features)
        return x.values
    if isinstance(x, FeatureVector):
        x = x.values
    if isinstance(x, Mapping):
        if set(x) != set(model.selected_features):
            missing = sorted(set(model.selected_features) - set(x))
            extra = sorted(set(x) - set(model.selected_features))
            raise InvalidInputError(f"schema mismatch: missing {missing[:5]}, unexpected {extra[:5]}")
        return np.array([[x[n] for n in model.selected_features]], dtype=float)
    X = np.atleast_2d(np.asarray(x, dtype=float))
    if X.shape[1] != len(model.selected_features):
        raise InvalidInputError(
            f"expected {len(model.selected_features)} feature columns, got {X.shape[1]}"
        )
    return X


def predict(model: TrainedModel, x):
    """Label(s) for a FeatureVector, a name->value mapping, a FeatureTable or a raw matrix.

    A single vector yields a single label string; tables and matrices yield arrays.
    """
    single = isinstance(x, (FeatureVector, Mapping))
    X = _as_matrix(model, x)
    labels = decode_labels(model.estimator.predict(model.standardize(X)))
    return labels[0] if single else labels


def save_model(model: TrainedModel, path: str | Path) -> None:
    with open(path, "wb") as fh:
        pickle.dump({"schema": MODEL_SCHEMA, "model": model}, fh)


def load_model(path: str | Path) -> TrainedModel:
    with open(path, "rb") as fh:
        payload = pickle.load(fh)
    if not isinstance(payload, dict) or payload.get("schema") != MODEL_SCHEMA:
        raise InvalidInputError(f"{path} is not a {MODEL_SCHEMA} artifact")
    return payload["model"]


# ---------------------------------------------------------------------------
# cross-validation and grid search
# ---------------------------------------------------------------------------


def stratified_folds(spec_ids, labels, folds: int, seed: int) -> np.ndarray:
    """Fold number per row, a function of (id, label, seed) only.

    Each class is shuffled by sorted id and the classes are laid end to end
    before dealing folds round-robin, so every fold gets its share of each
    class (within one sample) and ``folds == n`` gives leave-one-out.
    """
    spec_ids = np.asarray(spec_ids)
    labels = np.asarray(labels, dtype=object)
    n = spec_ids.size
    if folds < 2:
        raise ValueError("folds must be >= 2")
    if folds > n:
        raise StratificationError(f"{folds} folds requested for {n} samples")
    if np.unique(spec_ids).size != n:
        raise ValueError("spec ids must be unique")
    rng = np.random.default_rng(seed)
    order = []
    for label in sorted(set(labels.tolist())):
        ids = np.sort(spec_ids[labels == label])
        order.extend(ids[rng.permutation(ids.size)].tolist())
    fold_of_id = {sid: pos % folds for pos, sid in enumerate(order)}
    return np.array([fold_of_id[sid] for sid in spec_ids.tolist()])


@dataclass
class CVResult:
    kind: ClassifierKind
    hyperparameters: dict[str, Any]
    fold_of_row: np.ndarray
    fold_counts: list[ConfusionCounts]
    predictions: np.ndarray  # out-of-fold label per row

    @property
    def pooled(self) -> ConfusionCounts:
        total = ConfusionCounts(0, 0, 0, 0)
        for c in self.fold_counts:
            total = total + c
        return total

    @property
    def fold_scores(self) -> list[float | None]:
        scores = []
        for c in self.fold_counts:
            try:
                scores.append(balanced_accuracy(c))
            except UndefinedMetricError:
                scores.append(None)
        return scores

    @property
    def mean_score(self) -> float:
        defined = [s for s in self.fold_scores if s is not None]
        return float(np.mean(defined)) if defined else balanced_accuracy(self.pooled)


def cross_validate(
    kind: ClassifierKind | str,
    hyperparameters: Mapping[str, Any],
    data: FeatureTable,
    folds: int = 5,
    seed: int = 0,
) -> CVResult:
    kind = ClassifierKind(kind)
    fold_of_row = stratified_folds(data.spec_ids, data.labels, folds, seed)
    predictions = np.empty(len(data.labels), dtype=object)
    counts = []
    for f in range(folds):
        val = fold_of_row == f
        train = data.take(~val)
        if np.unique(train.labels).size < 2:
            raise StratificationError(f"fold {f}: training split holds a single class")
        model = fit(kind, hyperparameters, train, seed)
        pred = predict(model, data.take(val))
        predictions[val] = pred
        counts.append(ConfusionCounts.from_predictions(data.labels[val], pred))
    return CVResult(kind, dict(hyperparameters), fold_of_row, counts, predictions)


@dataclass
class GridSearchResult:
    kind: ClassifierKind
    best_hyperparameters: dict[str, Any]
    best_score: float
    scores: list[tuple[dict[str, Any], float]]
    best_cv: CVResult


def grid_search(
    kind: ClassifierKind | str,
    grid: Mapping[str, Sequence],
    data: FeatureTable,
    folds: int = 5,
    seed: int = 0,
) -> GridSearchResult:
    """Exhaustive search by mean per-fold balanced accuracy; the first of equal scores wins."""
    kind = ClassifierKind(kind)
    best: CVResult | None = None
    best_score = -np.inf
    scores = []
    for hp in expand_grid(grid):
        res = cross_validate(kind, hp, data, folds, seed)
        score = res.mean_score
        scores.append((hp, score))
        if score > best_score:
            best, best_score = res, score
    return GridSearchResult(kind, best.hyperparameters, float(best_score), scores, best)
