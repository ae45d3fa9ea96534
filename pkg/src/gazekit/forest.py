"""Window-based random forest gaze classifier: weighted-Gini CART trees over
bootstrap resamples, with a feature subset drawn once per tree by default."""
from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field, asdict
from pathlib import Path
from typing import List, Optional, Sequence

import numpy as np

from .core import CollapsedClass
from .features import ALL_CHANNELS, build_feature_matrix, feature_dim
from .signal import VelocityTrace

_FORMAT_VERSION = 1


@dataclass(frozen=True)
class ForestConfig:
    n_trees: int = 40
    min_leaf: float = 15.0              # minimum training weight per leaf
    features_per_subset: Optional[int] = None   # default floor(sqrt(g))
    per_split_subsets: bool = False     # standard RF variant; default per tree
    window_half_s: int = 7
    channels: Sequence[int] = ALL_CHANNELS
    rng_seed: int = 0

    def __post_init__(self):
        if self.n_trees < 1:
            raise ValueError("need at least one tree")
        if self.min_leaf < 1:
            raise ValueError("min_leaf must be at least 1")


@dataclass
class _Tree:
    feature: np.ndarray      # -1 at leaves
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    dist: np.ndarray         # (n_nodes, n_classes) leaf class distributions

    def predict_proba(self, X: np.ndarray) -> np.ndarray:
        out = np.empty((len(X), self.dist.shape[1]))
        node = np.zeros(len(X), dtype=np.int64)
        active = np.arange(len(X))
        while active.size:
            f = self.feature[node[active]]
            at_leaf = f < 0
            leaves = active[at_leaf]
            out[leaves] = self.dist[node[leaves]]
            active = active[~at_leaf]
            if active.size == 0:
                break
            nd = node[active]
            go_left = X[active, self.feature[nd]] <= self.threshold[nd]
            node[active] = np.where(go_left, self.left[nd], self.right[nd])
        return out


@dataclass
class ForestModel:
    trees: List[_Tree]
    config: ForestConfig
    classes: np.ndarray
    schema_hash: str

    def predict_proba(self, X: np.ndarray) -> np.ndarray:
        acc = np.zeros((len(X), len(self.classes)))
        for tree in self.trees:
            acc += tree.predict_proba(X)
        return acc / len(self.trees)

    def predict(self, X: np.ndarray) -> np.ndarray:
        return self.classes[np.argmax(self.predict_proba(X), axis=1)]

    def model_hash(self) -> str:
        h = hashlib.sha256()
        for tree in self.trees:
            for arr in (tree.feature, tree.threshold, tree.left, tree.right, tree.dist):
                h.update(np.ascontiguousarray(arr).tobytes())
        return h.hexdigest()


def schema_hash(n_features: int, cfg: ForestConfig) -> str:
    payload = json.dumps({"g": n_features, "s": cfg.window_half_s,
                          "channels": list(cfg.channels)}, sort_keys=True)
    return hashlib.sha256(payload.encode()).hexdigest()[:16]


def _gini(class_weights: np.ndarray, total: float) -> float:
    if total <= 0:
        return 0.0
    p = class_weights / total
    return 1.0 - float(np.dot(p, p))


def _best_split(X, y_idx, w, feat_subset, n_classes, min_leaf):
    """Weighted-Gini split search. Ties resolve to the lowest feature index,
    then the lowest threshold."""
    total = w.sum()
    parent_counts = np.zeros(n_classes)
    np.add.at(parent_counts, y_idx, w)
    parent_gini = _gini(parent_counts, total)
    best = None  # (decrease, feature, threshold)
    for f in feat_subset:
        order = np.argsort(X[:, f], kind="stable")
        xs = X[order, f]
        ys = y_idx[order]
        ws = w[order]
        cum = np.zeros((len(xs), n_classes))
        cum[np.arange(len(xs)), ys] = ws
        cum = np.cumsum(cum, axis=0)
        wl = np.cumsum(ws)
        # split between i and i+1 where the value changes
        cut = np.flatnonzero(xs[:-1] < xs[1:])
        if cut.size == 0:
            continue
        wl_c = wl[cut]
        wr_c = total - wl_c
        ok = (wl_c >= min_leaf) & (wr_c >= min_leaf)
        cut = cut[ok]
        if cut.size == 0:
            continue
        left_counts = cum[cut]
        right_counts = parent_counts[None, :] - left_counts
        gl = 1.0 - np.einsum("ij,ij->i", left_counts, left_counts) / (wl[cut] ** 2)
        gr = 1.0 - np.einsum("ij,ij->i", right_counts, right_counts) / ((total - wl[cut]) ** 2)
        dec = parent_gini - (wl[cut] * gl + (total - wl[cut]) * gr) / total
        i = int(np.argmax(dec))   # first max -> lowest threshold for this feature
        if dec[i] > 1e-12 and (best is None or dec[i] > best[0] + 1e-12):
            thr = 0.5 * (xs[cut[i]] + xs[cut[i] + 1])
            best = (float(dec[i]), int(f), float(thr))
    return best


def _grow_tree(X, y_idx, w, n_classes, cfg: ForestConfig, rng, tree_subset):
    feature, threshold, left, right, dist = [], [], [], [], []

    def leaf(idx):
        counts = np.zeros(n_classes)
        np.add.at(counts, y_idx[idx], w[idx])
        node = len(feature)
        feature.append(-1)
        threshold.append(0.0)
        left.append(-1)
        right.append(-1)
        dist.append(counts / counts.sum())
        return node

    def build(idx):
        if w[idx].sum() < 2 * cfg.min_leaf or len(np.unique(y_idx[idx])) == 1:
            return leaf(idx)
        subset = tree_subset if not cfg.per_split_subsets else np.sort(
            rng.choice(X.shape[1], size=len(tree_subset), replace=False))
        split = _best_split(X[idx], y_idx[idx], w[idx], subset, n_classes, cfg.min_leaf)
        if split is None:
            return leaf(idx)
        _, f, thr = split
        go_left = X[idx, f] <= thr
        node = len(feature)
        feature.append(f)
        threshold.append(thr)
        left.append(-1)
        right.append(-1)
        dist.append(np.zeros(n_classes))
        left_child = build(idx[go_left])
        right_child = build(idx[~go_left])
        left[node] = left_child
        right[node] = right_child
        return node

    build(np.arange(len(X)))
    return _Tree(np.array(feature, dtype=np.int64), np.array(threshold),
                 np.array(left, dtype=np.int64), np.array(right, dtype=np.int64),
                 np.array(dist))


def _canonical_order(X, y, w):
    """Sort rows by a content hash so training is invariant to row order."""
    digests = [hashlib.sha256(X[i].tobytes() + bytes([int(y[i]) & 0xFF])
                              + np.float64(w[i]).tobytes()).digest()
               for i in range(len(X))]
    return np.argsort(np.frombuffer(b"".join(d[:8] for d in digests),
                                    dtype=">u8"), kind="stable")


def train_forest(X, y, weights=None, cfg: ForestConfig = ForestConfig()) -> ForestModel:
    """Train the ensemble: per-tree bootstrap over rows and (by default) a
    per-tree random feature subset of size floor(sqrt(g)). Deterministic for
    a fixed rng_seed and invariant to training row permutation."""
    X = np.ascontiguousarray(X, dtype=float)
    y = np.asarray(y)
    if len(X) == 0:
        raise ValueError("empty training set")
    weights = np.ones(len(X)) if weights is None else np.asarray(weights, dtype=float)
    if np.any(weights <= 0):
        raise ValueError("weights must be positive")
    classes = np.unique(y)
    if len(classes) < 2:
        raise ValueError("need at least two classes to train")
    order = _canonical_order(X, y, weights)
    X, y, weights = X[order], y[order], weights[order]
    y_idx = np.searchsorted(classes, y)
    g = X.shape[1]
    m = cfg.features_per_subset or max(1, int(np.sqrt(g)))
    rng = np.random.default_rng(cfg.rng_seed)
    trees = []
    for _ in range(cfg.n_trees):
        boot = rng.integers(0, len(X), size=len(X))
        subset = np.sort(rng.choice(g, size=m, replace=False))
        trees.append(_grow_tree(X[boot], y_idx[boot], weights[boot],
                                len(classes), cfg, rng, subset))
    return ForestModel(trees, cfg, classes, schema_hash(g, cfg))


def classify_rf(model: ForestModel, trace: VelocityTrace, eye_dirs, head_dirs,
                none_id: int = int(CollapsedClass.NONE)) -> np.ndarray:
    """Per-sample 3-class labels from the forest; confidence-masked samples
    pass through as the none class."""
    cfg = model.config
    X, idx, _ = build_feature_matrix(trace, eye_dirs, head_dirs,
                                     cfg.window_half_s, channels=cfg.channels,
                                     pad_edges=True)
    if model.schema_hash != schema_hash(X.shape[1], cfg):
        raise ValueError("feature schema mismatch between model and input")
    labels = np.full(len(trace), none_id, dtype=np.int64)
    labels[idx] = model.predict(X)
    labels[~trace.valid] = none_id
    return labels


# ---------------------------------------------------------------------------
# versioned binary container

def save_forest(model: ForestModel, path):
    path = Path(path)
    arrays = {}
    for i, tree in enumerate(model.trees):
        arrays[f"t{i}_feature"] = tree.feature
        arrays[f"t{i}_threshold"] = tree.threshold
        arrays[f"t{i}_left"] = tree.left
        arrays[f"t{i}_right"] = tree.right
        arrays[f"t{i}_dist"] = tree.dist
    header = {"format": "gazekit-forest", "version": _FORMAT_VERSION,
              "n_trees": len(model.trees), "schema_hash": model.schema_hash,
              "config": {**asdict(model.config), "channels": list(model.config.channels)}}
    arrays["header"] = np.frombuffer(json.dumps(header).encode(), dtype=np.uint8)
    arrays["classes"] = model.classes
    np.savez_compressed(path, **arrays)


def load_forest(path) -> ForestModel:
    data = np.load(Path(path), allow_pickle=False)
    header = json.loads(bytes(data["header"]).decode())
    if header.get("format") != "gazekit-forest":
        raise ValueError("not a forest model file")
    if header["version"] > _FORMAT_VERSION:
        raise ValueError(f"unsupported model version {header['version']}")
    cfg_dict = dict(header["config"])
    cfg_dict["channels"] = tuple(cfg_dict["channels"])
    cfg = ForestConfig(**cfg_dict)
    trees = [_Tree(data[f"t{i}_feature"], data[f"t{i}_threshold"],
                   data[f"t{i}_left"], data[f"t{i}_right"], data[f"t{i}_dist"])
             for i in range(header["n_trees"])]
    return ForestModel(trees, cfg, data["classes"], header["schema_hash"])
