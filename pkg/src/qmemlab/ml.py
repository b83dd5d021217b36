"""Surrogate regressors for the form factor, metrics, and a benchmark.

Everything here is implemented on numpy directly: k-nearest-neighbors,
Gaussian-process regression (RBF kernel, Cholesky solve), and a family of
variance-reduction regression trees (single tree, bootstrap-bagged random
forest, extremely randomized trees, gradient boosting, and histogram-binned
gradient boosting with optional gradient-based one-sided sampling). A
shared tree engine guarantees that histogram boosting with enough bins and
sampling disabled reproduces exact gradient boosting; split ties break
deterministically toward the lowest feature index, then lowest threshold.

Model persistence is a one-line magic header ``QMLMODEL1`` followed by a
JSON document; floats survive the round-trip exactly.
"""

from __future__ import annotations

import json
import math
import time
from dataclasses import dataclass

import numpy as np

from .rng import SplitMix64

MODEL_MAGIC = "QMLMODEL1"

REGRESSOR_KINDS = ("knn", "gaussian-process", "decision-tree", "random-forest",
                   "extra-trees", "gbdt", "hist-gbdt")


class MLError(ValueError):
    """Raised for invalid training data, shapes, or unfitted predictors."""


@dataclass(frozen=True)
class SplitSpec:
    train_fraction: float = 2.0 / 3.0
    seed: int = 0

    def __post_init__(self):
        if not 0.0 < self.train_fraction < 1.0:
            raise MLError("train fraction must be in (0, 1)")


def split(x: np.ndarray, y: np.ndarray, spec: SplitSpec = SplitSpec()):
    """Seeded shuffle, then partition into (x_train, y_train, x_test, y_test).

    The train size is floor(n * fraction); the parts are disjoint and
    exhaustive.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    n = x.shape[0]
    if n < 3 or y.shape[0] != n:
        raise MLError("need at least 3 consistent rows to split")
    order = list(range(n))
    SplitMix64(spec.seed).shuffle(order)
    order = np.asarray(order)
    n_train = int(math.floor(n * spec.train_fraction))
    tr, te = order[:n_train], order[n_train:]
    return x[tr], y[tr], x[te], y[te]


# ---------------------------------------------------------------------------
# Metrics
# ---------------------------------------------------------------------------

def r2_score(y: np.ndarray, y_hat: np.ndarray) -> float:
    y = np.asarray(y, dtype=float)
    y_hat = np.asarray(y_hat, dtype=float)
    if y.shape != y_hat.shape:
        raise MLError("metric inputs must have equal length")
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    if ss_tot == 0.0:
        raise MLError("R^2 is undefined for a zero-variance target")
    ss_res = float(np.sum((y - y_hat) ** 2))
    return 1.0 - ss_res / ss_tot


def adjusted_r2(y: np.ndarray, y_hat: np.ndarray, p: int) -> float:
    n = len(y)
    if n <= p + 1:
        raise MLError("adjusted R^2 needs n > p + 1")
    r2 = r2_score(y, y_hat)
    return 1.0 - (1.0 - r2) * (n - 1) / (n - p - 1)


def rmse(y: np.ndarray, y_hat: np.ndarray) -> float:
    y = np.asarray(y, dtype=float)
    y_hat = np.asarray(y_hat, dtype=float)
    if y.shape != y_hat.shape:
        raise MLError("metric inputs must have equal length")
    return float(np.sqrt(np.mean((y - y_hat) ** 2)))


@dataclass(frozen=True)
class EvalMetrics:
    r2: float
    adjusted_r2: float
    rmse: float
    fit_seconds: float


# ---------------------------------------------------------------------------
# Shared tree engine
# ---------------------------------------------------------------------------

def _leaf(values: np.ndarray, weights: np.ndarray) -> dict:
    return {"value": float(np.average(values, weights=weights))}


def _best_exact_split(x: np.ndarray, y: np.ndarray, w: np.ndarray,
                      min_leaf: int):
    """Best (feature, threshold, gain) over midpoints of sorted values.

    Gain is the weighted SSE reduction. Ties keep the first candidate in
    (feature asc, threshold asc) scan order, so results are deterministic.
    """
    n, d = x.shape
    best = None
    for f in range(d):
        order = np.argsort(x[:, f], kind="stable")
        xs = x[order, f]
        ys = y[order]
        ws = w[order]
        cw = np.cumsum(ws)
        cwy = np.cumsum(ws * ys)
        cwy2 = np.cumsum(ws * ys * ys)
        tw, twy = cw[-1], cwy[-1]
        # candidate boundaries between distinct consecutive values
        idx = np.nonzero(xs[1:] > xs[:-1])[0]
        for i in idx:
            left_n = i + 1
            if left_n < min_leaf or n - left_n < min_leaf:
                continue
            lw, lwy = cw[i], cwy[i]
            rw, rwy = tw - lw, twy - lwy
            if lw <= 0.0 or rw <= 0.0:
                continue
            gain = lwy * lwy / lw + rwy * rwy / rw - twy * twy / tw
            if gain > 1e-12 and (best is None or gain > best[2]):
                best = (f, 0.5 * (xs[i] + xs[i + 1]), gain)
    return best


def _best_random_split(x: np.ndarray, y: np.ndarray, w: np.ndarray,
                       min_leaf: int, rng: SplitMix64):
    """One uniform threshold per feature; keep the best-scoring feature."""
    n, d = x.shape
    tw = float(np.sum(w))
    twy = float(np.sum(w * y))
    best = None
    for f in range(d):
        lo = float(x[:, f].min())
        hi = float(x[:, f].max())
        if hi <= lo:
            continue
        thr = rng.uniform(lo, hi)
        mask = x[:, f] <= thr
        left_n = int(mask.sum())
        if left_n < min_leaf or n - left_n < min_leaf:
            continue
        lw = float(np.sum(w[mask]))
        lwy = float(np.sum(w[mask] * y[mask]))
        rw, rwy = tw - lw, twy - lwy
        if lw <= 0.0 or rw <= 0.0:
            continue
        gain = lwy * lwy / lw + rwy * rwy / rw - twy * twy / tw
        if gain > 1e-12 and (best is None or gain > best[2]):
            best = (f, thr, gain)
    return best


class _Binner:
    """Global per-feature quantile binning for histogram tree growth.

    Thresholds between adjacent occupied bins are midpoints between the
    maximum raw value of the left bin and the minimum of the right bin;
    with at least as many bins as distinct values this reproduces the exact
    engine's candidate set.
    """

    def __init__(self, x: np.ndarray, n_bins: int):
        n, d = x.shape
        self.codes = np.empty((n, d), dtype=np.int32)
        self.bin_min: list[np.ndarray] = []
        self.bin_max: list[np.ndarray] = []
        for f in range(d):
            col = x[:, f]
            uniq = np.unique(col)
            if uniq.size <= n_bins:
                edges = uniq
            else:
                qs = np.quantile(col, np.linspace(0.0, 1.0, n_bins + 1)[1:-1])
                edges = np.unique(qs)
            codes = np.searchsorted(edges, col, side="right").astype(np.int32)
            self.codes[:, f] = codes
            k = int(codes.max()) + 1
            bmin = np.full(k, np.inf)
            bmax = np.full(k, -np.inf)
            np.minimum.at(bmin, codes, col)
            np.maximum.at(bmax, codes, col)
            self.bin_min.append(bmin)
            self.bin_max.append(bmax)


def _best_hist_split(codes: np.ndarray, binner: _Binner, y: np.ndarray,
                     w: np.ndarray, min_leaf: int):
    n, d = codes.shape
    best = None
    for f in range(d):
        c = codes[:, f]
        k = binner.bin_min[f].size
        cnt = np.bincount(c, minlength=k)
        sw = np.bincount(c, weights=w, minlength=k)
        swy = np.bincount(c, weights=w * y, minlength=k)
        occupied = np.nonzero(cnt)[0]
        if occupied.size < 2:
            continue
        ccnt = np.cumsum(cnt[occupied])
        csw = np.cumsum(sw[occupied])
        cswy = np.cumsum(swy[occupied])
        tw, twy = csw[-1], cswy[-1]
        for i in range(occupied.size - 1):
            left_n = ccnt[i]
            if left_n < min_leaf or n - left_n < min_leaf:
                continue
            lw, lwy = csw[i], cswy[i]
            rw, rwy = tw - lw, twy - lwy
            if lw <= 0.0 or rw <= 0.0:
                continue
            gain = lwy * lwy / lw + rwy * rwy / rw - twy * twy / tw
            if gain > 1e-12 and (best is None or gain > best[2]):
                thr = 0.5 * (binner.bin_max[f][occupied[i]]
                             + binner.bin_min[f][occupied[i + 1]])
                best = (f, thr, gain)
    return best


def _grow_tree(x: np.ndarray, y: np.ndarray, w: np.ndarray, depth: int,
               max_depth: int, min_leaf: int, mode: str,
               rng: SplitMix64 | None = None,
               binner: _Binner | None = None,
               codes: np.ndarray | None = None) -> dict:
    if depth >= max_depth or y.size < 2 * min_leaf or np.all(y == y[0]):
        return _leaf(y, w)
    if mode == "exact":
        found = _best_exact_split(x, y, w, min_leaf)
    elif mode == "random":
        found = _best_random_split(x, y, w, min_leaf, rng)
    else:
        found = _best_hist_split(codes, binner, y, w, min_leaf)
    if found is None:
        return _leaf(y, w)
    f, thr, _ = found
    mask = x[:, f] <= thr
    kw = dict(max_depth=max_depth, min_leaf=min_leaf, mode=mode, rng=rng,
              binner=binner)
    return {
        "feature": int(f),
        "threshold": float(thr),
        "left": _grow_tree(x[mask], y[mask], w[mask], depth + 1,
                           codes=codes[mask] if codes is not None else None, **kw),
        "right": _grow_tree(x[~mask], y[~mask], w[~mask], depth + 1,
                            codes=codes[~mask] if codes is not None else None, **kw),
    }


def _predict_tree(node: dict, x: np.ndarray) -> np.ndarray:
    out = np.empty(x.shape[0])
    stack = [(node, np.arange(x.shape[0]))]
    while stack:
        nd, idx = stack.pop()
        if "value" in nd:
            out[idx] = nd["value"]
            continue
        mask = x[idx, nd["feature"]] <= nd["threshold"]
        stack.append((nd["left"], idx[mask]))
        stack.append((nd["right"], idx[~mask]))
    return out


# ---------------------------------------------------------------------------
# Regressors
# ---------------------------------------------------------------------------

class Regressor:
    """Base regressor: fit(X, y) -> self, predict(X) -> ndarray."""

    kind = "base"

    def __init__(self, seed: int = 0):
        self.seed = seed
        self.fitted = False

    def _check_training(self, x, y):
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        if x.ndim != 2 or y.ndim != 1 or x.shape[0] != y.shape[0]:
            raise MLError(f"bad training shapes {x.shape} / {y.shape}")
        if not (np.all(np.isfinite(x)) and np.all(np.isfinite(y))):
            raise MLError("training data contains NaN or Inf")
        return x, y

    def _check_predict(self, x):
        if not self.fitted:
            raise MLError(f"{self.kind}: predict before fit")
        x = np.asarray(x, dtype=float)
        if x.ndim != 2 or x.shape[1] != self.n_features:
            raise MLError(
                f"{self.kind}: expected (m, {self.n_features}) input, got {x.shape}")
        return x

    def fit(self, x, y) -> "Regressor":
        raise NotImplementedError

    def predict(self, x) -> np.ndarray:
        raise NotImplementedError

    def state(self) -> dict:
        raise NotImplementedError

    def load_state(self, state: dict) -> None:
        raise NotImplementedError


class _Standardizer:
    def fit(self, x: np.ndarray) -> "_Standardizer":
        self.mean = x.mean(axis=0)
        std = x.std(axis=0)
        self.std = np.where(std > 0.0, std, 1.0)
        return self

    def transform(self, x: np.ndarray) -> np.ndarray:
        return (x - self.mean) / self.std


class KNNRegressor(Regressor):
    kind = "knn"

    def __init__(self, k: int = 5, seed: int = 0):
        super().__init__(seed)
        self.k = k

    def fit(self, x, y):
        x, y = self._check_training(x, y)
        self.n_features = x.shape[1]
        self.scaler = _Standardizer().fit(x)
        self.x_train = self.scaler.transform(x)
        self.y_train = y
        self.fitted = True
        return self

    def predict(self, x):
        x = self._check_predict(x)
        xs = self.scaler.transform(x)
        d2 = ((xs[:, None, :] - self.x_train[None, :, :]) ** 2).sum(axis=2)
        k = min(self.k, self.x_train.shape[0])
        idx = np.argsort(d2, axis=1, kind="stable")[:, :k]
        return self.y_train[idx].mean(axis=1)

    def state(self):
        return {"k": self.k, "x": self.x_train.tolist(), "y": self.y_train.tolist(),
                "mean": self.scaler.mean.tolist(), "std": self.scaler.std.tolist()}

    def load_state(self, state):
        self.k = state["k"]
        self.x_train = np.asarray(state["x"])
        self.y_train = np.asarray(state["y"])
        self.n_features = self.x_train.shape[1]
        self.scaler = _Standardizer()
        self.scaler.mean = np.asarray(state["mean"])
        self.scaler.std = np.asarray(state["std"])
        self.fitted = True


class GPRegressor(Regressor):
    """Zero-mean Gaussian-process regression with an RBF kernel.

    The length scale defaults to the median pairwise distance of the
    standardized training inputs. Predictions far from all data revert to
    the prior mean 0.
    """

    kind = "gaussian-process"

    def __init__(self, length_scale: float | None = None, noise: float = 1e-6,
                 seed: int = 0):
        super().__init__(seed)
        self.length_scale = length_scale
        self.noise = noise

    @staticmethod
    def _sq_dists(a: np.ndarray, b: np.ndarray) -> np.ndarray:
        return ((a[:, None, :] - b[None, :, :]) ** 2).sum(axis=2)

    def fit(self, x, y):
        x, y = self._check_training(x, y)
        self.scaler = _Standardizer().fit(x)
        xs = self.scaler.transform(x)
        d2 = self._sq_dists(xs, xs)
        if self.length_scale is None:
            upper = d2[np.triu_indices(d2.shape[0], k=1)]
            med = float(np.sqrt(np.median(upper))) if upper.size else 1.0
            self.scale_ = med if med > 0.0 else 1.0
        else:
            self.scale_ = float(self.length_scale)
        k = np.exp(-0.5 * d2 / self.scale_**2)
        k[np.diag_indices_from(k)] += self.noise
        try:
            chol = np.linalg.cholesky(k)
        except np.linalg.LinAlgError as exc:
            raise MLError("kernel matrix is not positive definite; "
                          "increase the noise term") from exc
        z = np.linalg.solve(chol, y)
        self.alpha = np.linalg.solve(chol.conj().T, z)
        self.x_train = xs
        self.n_features = xs.shape[1]
        self.fitted = True
        return self

    def predict(self, x):
        x = self._check_predict(x)
        xs = self.scaler.transform(x)
        k_star = np.exp(-0.5 * self._sq_dists(xs, self.x_train) / self.scale_**2)
        return k_star @ self.alpha

    def state(self):
        return {"x": self.x_train.tolist(), "alpha": self.alpha.tolist(),
                "scale": self.scale_, "noise": self.noise,
                "mean": self.scaler.mean.tolist(), "std": self.scaler.std.tolist()}

    def load_state(self, state):
        self.x_train = np.asarray(state["x"])
        self.alpha = np.asarray(state["alpha"])
        self.n_features = self.x_train.shape[1]
        self.scale_ = state["scale"]
        self.noise = state["noise"]
        self.scaler = _Standardizer()
        self.scaler.mean = np.asarray(state["mean"])
        self.scaler.std = np.asarray(state["std"])
        self.fitted = True


class DecisionTreeRegressor(Regressor):
    kind = "decision-tree"

    def __init__(self, max_depth: int = 12, min_samples_leaf: int = 2, seed: int = 0):
        super().__init__(seed)
        self.max_depth = max_depth
        self.min_samples_leaf = min_samples_leaf

    def fit(self, x, y):
        x, y = self._check_training(x, y)
        self.n_features = x.shape[1]
        w = np.ones_like(y)
        self.tree = _grow_tree(x, y, w, 0, self.max_depth, self.min_samples_leaf,
                               mode="exact")
        self.fitted = True
        return self

    def predict(self, x):
        x = self._check_predict(x)
        return _predict_tree(self.tree, x)

    def state(self):
        return {"max_depth": self.max_depth, "min_leaf": self.min_samples_leaf,
                "n_features": self.n_features, "tree": self.tree}

    def load_state(self, state):
        self.max_depth = state["max_depth"]
        self.min_samples_leaf = state["min_leaf"]
        self.n_features = state["n_features"]
        self.tree = state["tree"]
        self.fitted = True


class _EnsembleOfTrees(Regressor):
    """Average of trees grown on per-tree substreams of the master seed."""

    bootstrap = True
    split_mode = "exact"

    def __init__(self, n_trees: int = 200, max_depth: int = 12,
                 min_samples_leaf: int = 2, seed: int = 0):
        super().__init__(seed)
        self.n_trees = n_trees
        self.max_depth = max_depth
        self.min_samples_leaf = min_samples_leaf

    def fit(self, x, y):
        x, y = self._check_training(x, y)
        self.n_features = x.shape[1]
        master = SplitMix64(self.seed)
        self.trees = []
        n = x.shape[0]
        for b in range(self.n_trees):
            stream = master.spawn(b)
            if self.bootstrap:
                idx = np.asarray([stream.randint(n) for _ in range(n)])
                xb, yb = x[idx], y[idx]
            else:
                xb, yb = x, y
            w = np.ones(xb.shape[0])
            self.trees.append(_grow_tree(xb, yb, w, 0, self.max_depth,
                                         self.min_samples_leaf,
                                         mode=self.split_mode, rng=stream))
        self.fitted = True
        return self

    def predict(self, x):
        x = self._check_predict(x)
        acc = np.zeros(x.shape[0])
        for tree in self.trees:
            acc += _predict_tree(tree, x)
        return acc / len(self.trees)

    def state(self):
        return {"n_trees": self.n_trees, "max_depth": self.max_depth,
                "min_leaf": self.min_samples_leaf, "n_features": self.n_features,
                "trees": self.trees}

    def load_state(self, state):
        self.n_trees = state["n_trees"]
        self.max_depth = state["max_depth"]
        self.min_samples_leaf = state["min_leaf"]
        self.n_features = state["n_features"]
        self.trees = state["trees"]
        self.fitted = True


class RandomForestRegressor(_EnsembleOfTrees):
    """Bagged variance-reduction trees on bootstrap resamples."""

    kind = "random-forest"
    bootstrap = True
    split_mode = "exact"


class ExtraTreesRegressor(_EnsembleOfTrees):
    """Extremely randomized trees: whole sample, random split thresholds."""

    kind = "extra-trees"
    bootstrap = False
    split_mode = "random"


class GBDTRegressor(Regressor):
    """Least-squares gradient boosting: trees fit the running residuals.

    The round-0 prediction is the target mean; each round adds
    ``learning_rate`` times a regression tree fit to the residuals.
    ``train_rmse_path`` records the training RMSE after every round.
    """

    kind = "gbdt"

    def __init__(self, n_rounds: int = 300, learning_rate: float = 0.1,
                 max_depth: int = 12, min_samples_leaf: int = 2, seed: int = 0):
        super().__init__(seed)
        self.n_rounds = n_rounds
        self.learning_rate = learning_rate
        self.max_depth = max_depth
        self.min_samples_leaf = min_samples_leaf

    def fit(self, x, y):
        x, y = self._check_training(x, y)
        self.n_features = x.shape[1]
        self.init_value = float(np.mean(y))
        pred = np.full(y.shape, self.init_value)
        w = np.ones_like(y)
        self.trees = []
        self.train_rmse_path = [rmse(y, pred)]
        for _ in range(self.n_rounds):
            residual = y - pred
            tree = _grow_tree(x, residual, w, 0, self.max_depth,
                              self.min_samples_leaf, mode="exact")
            pred = pred + self.learning_rate * _predict_tree(tree, x)
            self.trees.append(tree)
            self.train_rmse_path.append(rmse(y, pred))
        self.fitted = True
        return self

    def predict(self, x):
        x = self._check_predict(x)
        acc = np.full(x.shape[0], self.init_value)
        for tree in self.trees:
            acc += self.learning_rate * _predict_tree(tree, x)
        return acc

    def state(self):
        return {"n_rounds": self.n_rounds, "learning_rate": self.learning_rate,
                "max_depth": self.max_depth, "min_leaf": self.min_samples_leaf,
                "n_features": self.n_features, "init": self.init_value,
                "trees": self.trees}

    def load_state(self, state):
        self.n_rounds = state["n_rounds"]
        self.learning_rate = state["learning_rate"]
        self.max_depth = state["max_depth"]
        self.min_samples_leaf = state["min_leaf"]
        self.n_features = state["n_features"]
        self.init_value = state["init"]
        self.trees = state["trees"]
        self.fitted = True


class HistGBDTRegressor(Regressor):
    """Gradient boosting on quantile-binned features.

    With ``goss=True``, each round keeps the ``top_rate`` fraction of rows
    with the largest residual gradients, samples ``other_rate`` of the rest,
    and up-weights the sampled remainder by (1-top)/other so split gains
    stay unbiased. With enough bins and sampling off this reproduces the
    exact gbdt model.
    """

    kind = "hist-gbdt"

    def __init__(self, n_rounds: int = 300, learning_rate: float = 0.1,
                 max_depth: int = 12, min_samples_leaf: int = 2,
                 n_bins: int = 64, goss: bool = False, top_rate: float = 0.2,
                 other_rate: float = 0.1, seed: int = 0):
        super().__init__(seed)
        self.n_rounds = n_rounds
        self.learning_rate = learning_rate
        self.max_depth = max_depth
        self.min_samples_leaf = min_samples_leaf
        self.n_bins = n_bins
        self.goss = goss
        self.top_rate = top_rate
        self.other_rate = other_rate

    def fit(self, x, y):
        x, y = self._check_training(x, y)
        self.n_features = x.shape[1]
        binner = _Binner(x, self.n_bins)
        self.init_value = float(np.mean(y))
        pred = np.full(y.shape, self.init_value)
        n = y.size
        master = SplitMix64(self.seed)
        self.trees = []
        self.train_rmse_path = [rmse(y, pred)]
        for round_no in range(self.n_rounds):
            residual = y - pred
            if self.goss:
                stream = master.spawn(round_no)
                n_top = int(self.top_rate * n)
                n_other = int(self.other_rate * n)
                order = np.argsort(-np.abs(residual), kind="stable")
                top = order[:n_top]
                rest = list(order[n_top:])
                stream.shuffle(rest)
                sampled = np.asarray(rest[:n_other], dtype=int)
                idx = np.concatenate([top, sampled])
                w = np.ones(idx.size)
                if n_other > 0 and self.other_rate > 0.0:
                    w[n_top:] = (1.0 - self.top_rate) / self.other_rate
                xb, rb = x[idx], residual[idx]
                cb = binner.codes[idx]
            else:
                xb, rb, w = x, residual, np.ones_like(residual)
                cb = binner.codes
            tree = _grow_tree(xb, rb, w, 0, self.max_depth,
                              self.min_samples_leaf, mode="hist",
                              binner=binner, codes=cb)
            pred = pred + self.learning_rate * _predict_tree(tree, x)
            self.trees.append(tree)
            self.train_rmse_path.append(rmse(y, pred))
        self.fitted = True
        return self

    def predict(self, x):
        x = self._check_predict(x)
        acc = np.full(x.shape[0], self.init_value)
        for tree in self.trees:
            acc += self.learning_rate * _predict_tree(tree, x)
        return acc

    def state(self):
        return {"n_rounds": self.n_rounds, "learning_rate": self.learning_rate,
                "max_depth": self.max_depth, "min_leaf": self.min_samples_leaf,
                "n_bins": self.n_bins, "goss": self.goss,
                "top_rate": self.top_rate, "other_rate": self.other_rate,
                "n_features": self.n_features, "init": self.init_value,
                "trees": self.trees}

    def load_state(self, state):
        self.n_rounds = state["n_rounds"]
        self.learning_rate = state["learning_rate"]
        self.max_depth = state["max_depth"]
        self.min_samples_leaf = state["min_leaf"]
        self.n_bins = state["n_bins"]
        self.goss = state["goss"]
        self.top_rate = state["top_rate"]
        self.other_rate = state["other_rate"]
        self.n_features = state["n_features"]
        self.init_value = state["init"]
        self.trees = state["trees"]
        self.fitted = True


_REGISTRY = {cls.kind: cls for cls in
             (KNNRegressor, GPRegressor, DecisionTreeRegressor,
              RandomForestRegressor, ExtraTreesRegressor, GBDTRegressor,
              HistGBDTRegressor)}


def make_regressor(kind: str, seed: int = 0, **hyper) -> Regressor:
    if kind not in _REGISTRY:
        raise MLError(f"unknown regressor kind {kind!r}; known: {sorted(_REGISTRY)}")
    return _REGISTRY[kind](seed=seed, **hyper)


# ---------------------------------------------------------------------------
# Persistence
# ---------------------------------------------------------------------------

def save_model(model: Regressor, path: str) -> None:
    if not model.fitted:
        raise MLError("refusing to save an unfitted model")
    doc = {"kind": model.kind, "seed": model.seed, "state": model.state()}
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(MODEL_MAGIC + "\n")
        json.dump(doc, fh)
        fh.write("\n")


def load_model(path: str) -> Regressor:
    with open(path, "r", encoding="utf-8") as fh:
        magic = fh.readline().rstrip("\n")
        if magic != MODEL_MAGIC:
            raise MLError(f"{path}: bad magic header {magic!r}")
        doc = json.load(fh)
    model = make_regressor(doc["kind"], seed=doc.get("seed", 0))
    model.load_state(doc["state"])
    return model


# ---------------------------------------------------------------------------
# Benchmark
# ---------------------------------------------------------------------------

@dataclass
class LeaderboardRow:
    kind: str
    metrics: EvalMetrics | None
    error: str = ""


@dataclass
class Leaderboard:
    rows: list[LeaderboardRow]

    def to_text(self) -> str:
        header = f"{'model':>17} {'adj_r2':>9} {'r2':>9} {'rmse':>11} {'fit_s':>8}"
        lines = [header]
        for row in self.rows:
            if row.metrics is None:
                lines.append(f"{row.kind:>17} {'error':>9} ({row.error})")
            else:
                m = row.metrics
                lines.append(f"{row.kind:>17} {m.adjusted_r2:9.4f} {m.r2:9.4f} "
                             f"{m.rmse:11.6f} {m.fit_seconds:8.3f}")
        return "\n".join(lines)

    def to_csv(self, path: str) -> None:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write("model,adjusted_r2,r2,rmse,fit_seconds\n")
            for row in self.rows:
                if row.metrics is None:
                    fh.write(f"{row.kind},error,error,error,error\n")
                else:
                    m = row.metrics
                    fh.write(f"{row.kind},{m.adjusted_r2:.17g},{m.r2:.17g},"
                             f"{m.rmse:.17g},{m.fit_seconds:.17g}\n")

    def best(self) -> LeaderboardRow:
        fitted = [r for r in self.rows if r.metrics is not None]
        if not fitted:
            raise MLError("no model produced metrics")
        return fitted[0]


def evaluate(model: Regressor, x_test: np.ndarray, y_test: np.ndarray,
             fit_seconds: float) -> EvalMetrics:
    pred = model.predict(x_test)
    p = x_test.shape[1]
    return EvalMetrics(r2=r2_score(y_test, pred),
                       adjusted_r2=adjusted_r2(y_test, pred, p),
                       rmse=rmse(y_test, pred), fit_seconds=fit_seconds)


def benchmark(x: np.ndarray, y: np.ndarray, spec: SplitSpec = SplitSpec(),
              kinds: tuple[str, ...] = REGRESSOR_KINDS,
              hyper: dict | None = None) -> Leaderboard:
    """Fit every kind on one shared split; sort by adjusted R^2 descending.

    A model that raises is kept in the table as an error row so one bad
    configuration cannot hide the rest.
    """
    x_tr, y_tr, x_te, y_te = split(x, y, spec)
    rows: list[LeaderboardRow] = []
    for i, kind in enumerate(kinds):
        kw = dict((hyper or {}).get(kind, {}))
        try:
            model = make_regressor(kind, seed=SplitMix64(spec.seed).spawn(i).seed, **kw)
            t0 = time.perf_counter()
            model.fit(x_tr, y_tr)
            elapsed = time.perf_counter() - t0
            rows.append(LeaderboardRow(kind, evaluate(model, x_te, y_te, elapsed)))
        except MLError as exc:
            rows.append(LeaderboardRow(kind, None, error=str(exc)))
    rows.sort(key=lambda r: (-(r.metrics.adjusted_r2) if r.metrics else math.inf))
    return Leaderboard(rows)
