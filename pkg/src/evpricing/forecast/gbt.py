"""Gradient-boosted regression trees with exact greedy split finding (squared loss).

Trees are grown level by level. For every feature the rows are kept in one
presorted order; at each level a stable sort on the node id groups the rows
of each open node while preserving the feature order, so a segmented
cumulative sum yields the left-child gradient sums for every candidate
threshold of every node at once.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..errors import EmptyData, ShapeMismatch

# Gains closer than this (relative to the node's scale) count as ties.
TIE_RTOL = 1e-12


def split_gain(G_L, H_L, G_R, H_R, lam: float, gamma: float):
    """Structure-score improvement of a split; vectorizes over arrays."""
    G_L, H_L, G_R, H_R = (np.asarray(v, dtype=float) for v in (G_L, H_L, G_R, H_R))
    out = 0.5 * (G_L ** 2 / (H_L + lam) + G_R ** 2 / (H_R + lam) - (G_L + G_R) ** 2 / (H_L + H_R + lam)) - gamma
    return float(out) if out.ndim == 0 else out


def leaf_weight(G: float, H: float, lam: float) -> float:
    return -G / (H + lam)


@dataclass
class TreeNode:
    split_feature: int | None = None
    split_threshold: float | None = None
    left: "TreeNode | None" = None
    right: "TreeNode | None" = None
    leaf_weight: float | None = None

    @property
    def is_leaf(self) -> bool:
        return self.left is None

    def depth(self) -> int:
        return 0 if self.is_leaf else 1 + max(self.left.depth(), self.right.depth())

    def to_dict(self) -> dict:
        if self.is_leaf:
            return {"leaf": self.leaf_weight}
        return {"feature": self.split_feature, "threshold": self.split_threshold,
                "left": self.left.to_dict(), "right": self.right.to_dict()}

    @classmethod
    def from_dict(cls, d: dict) -> "TreeNode":
        if "leaf" in d:
            return cls(leaf_weight=float(d["leaf"]))
        return cls(int(d["feature"]), float(d["threshold"]), cls.from_dict(d["left"]), cls.from_dict(d["right"]))


@dataclass
class FlatTree:
    """Array form of one tree; ``feature == -1`` marks a leaf. Rows with x < threshold go left."""

    feature: np.ndarray
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    value: np.ndarray

    def predict(self, X: np.ndarray) -> np.ndarray:
        node = np.zeros(X.shape[0], dtype=np.int64)
        rows = np.arange(X.shape[0])
        while True:
            f = self.feature[node]
            internal = f >= 0
            if not internal.any():
                return self.value[node]
            go_left = X[rows[internal], f[internal]] < self.threshold[node[internal]]
            node[internal] = np.where(go_left, self.left[node[internal]], self.right[node[internal]])

    def to_node(self, i: int = 0) -> TreeNode:
        if self.feature[i] < 0:
            return TreeNode(leaf_weight=float(self.value[i]))
        return TreeNode(int(self.feature[i]), float(self.threshold[i]),
                        self.to_node(int(self.left[i])), self.to_node(int(self.right[i])))

    @classmethod
    def from_node(cls, root: TreeNode) -> "FlatTree":
        feat, thr, left, right, val = [], [], [], [], []

        def visit(n: TreeNode) -> int:
            i = len(feat)
            feat.append(-1 if n.is_leaf else n.split_feature)
            thr.append(0.0 if n.is_leaf else n.split_threshold)
            left.append(-1)
            right.append(-1)
            val.append(n.leaf_weight if n.is_leaf else 0.0)
            if not n.is_leaf:
                left[i] = visit(n.left)
                right[i] = visit(n.right)
            return i

        visit(root)
        return cls(np.array(feat, dtype=np.int64), np.array(thr, dtype=float), np.array(left, dtype=np.int64),
                   np.array(right, dtype=np.int64), np.array(val, dtype=float))

    @property
    def n_leaves(self) -> int:
        return int(np.sum(self.feature < 0))


@dataclass
class GbtModel:
    trees: list[FlatTree]
    learning_rate: float
    lam: float
    gamma: float
    base_prediction: float
    n_features: int
    max_depth: int
    rounds: int = field(default=0)

    def predict(self, X, n_trees: int | None = None) -> np.ndarray:
        X = _as_matrix(X)
        if X.shape[1] != self.n_features:
            raise ShapeMismatch(f"model expects {self.n_features} columns, got {X.shape[1]}")
        out = np.full(X.shape[0], self.base_prediction)
        for tree in self.trees[: n_trees if n_trees is not None else len(self.trees)]:
            out += tree.predict(X)
        return out

    def staged_predict(self, X):
        """Predictions after 0, 1, ..., len(trees) rounds."""
        X = _as_matrix(X)
        out = np.full(X.shape[0], self.base_prediction)
        yield out.copy()
        for tree in self.trees:
            out += tree.predict(X)
            yield out.copy()

    def truncated(self, n_trees: int) -> "GbtModel":
        return GbtModel(self.trees[:n_trees], self.learning_rate, self.lam, self.gamma, self.base_prediction,
                        self.n_features, self.max_depth, min(n_trees, self.rounds))

    @property
    def roots(self) -> list[TreeNode]:
        return [t.to_node() for t in self.trees]

    def to_dict(self) -> dict:
        return {
            "learning_rate": self.learning_rate, "lambda": self.lam, "gamma": self.gamma,
            "base_prediction": self.base_prediction, "n_features": self.n_features,
            "max_depth": self.max_depth, "rounds": self.rounds,
            "trees": [t.to_node().to_dict() for t in self.trees],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "GbtModel":
        trees = [FlatTree.from_node(TreeNode.from_dict(t)) for t in d["trees"]]
        return cls(trees, float(d["learning_rate"]), float(d["lambda"]), float(d["gamma"]),
                   float(d["base_prediction"]), int(d["n_features"]), int(d["max_depth"]), int(d["rounds"]))


def _as_matrix(X) -> np.ndarray:
    X = np.asarray(getattr(X, "values", X), dtype=float)
    if X.ndim != 2:
        raise ShapeMismatch("feature matrix must be 2-D")
    return X


def _best_splits(XT, order, g, node_of, n_nodes, lam, gamma):
    """Best (gain, feature, threshold) for every open node id in [0, n_nodes).

    ``node_of[i]`` is the open node of row i or -1 if the row sits in a
    finished leaf. Among candidates whose gain is within TIE_RTOL of a
    node's best, the lowest feature index wins, then the smallest threshold.
    """
    n_feat = XT.shape[0]
    active = node_of >= 0
    G_tot = np.bincount(node_of[active], weights=g[active], minlength=n_nodes)
    H_tot = np.bincount(node_of[active], minlength=n_nodes).astype(float)
    best_gain = np.full(n_nodes, -np.inf)
    best_feat = np.full(n_nodes, -1, dtype=np.int64)
    best_thr = np.zeros(n_nodes)
    m = int(active.sum())
    if m < 2:
        return best_gain, best_feat, best_thr, G_tot, H_tot
    parent_score = G_tot ** 2 / (H_tot + lam)

    # Group rows by node within every feature while keeping the feature
    # order; finished rows get the largest key and fall off the end.
    # ``order`` and ``XT`` are feature-major, so each feature is one contiguous row.
    key_dtype = np.int16 if n_nodes < 2 ** 15 - 1 else np.int64
    key = node_of[order]
    key[key < 0] = n_nodes
    key = key.astype(key_dtype)
    grp = np.argsort(key, axis=1, kind="stable")[:, :m]
    idx = np.take_along_axis(order, grp, axis=1)
    # After grouping, every feature sees the same node-id sequence.
    nid = np.sort(node_of[active])
    x = np.take_along_axis(XT, idx, axis=1)
    csum = np.cumsum(g[idx], axis=1)
    starts = np.concatenate([[0], np.cumsum(H_tot)[:-1]]).astype(np.int64)
    seg_start = starts[nid]
    prev = np.maximum(seg_start - 1, 0)
    before = np.where(seg_start > 0, csum[:, prev], 0.0)
    G_L = csum - before
    H_L = (np.arange(m) - seg_start + 1).astype(float)

    # A candidate at position i splits between positions i and i+1 of one node.
    same = np.zeros((n_feat, m), dtype=bool)
    same[:, :-1] = (nid[1:] == nid[:-1]) & (x[:, 1:] > x[:, :-1])
    # Row-major flattening of (feature, position) is the tie-break order.
    flat = np.flatnonzero(same)
    if flat.size == 0:
        return best_gain, best_feat, best_thr, G_tot, H_tot
    f, i = np.divmod(flat, m)
    nd = nid[i]
    GL, HL = G_L[f, i], H_L[i]
    GR, HR = G_tot[nd] - GL, H_tot[nd] - HL
    gain = 0.5 * (GL ** 2 / (HL + lam) + GR ** 2 / (HR + lam) - parent_score[nd]) - gamma

    np.maximum.at(best_gain, nd, gain)
    tol = TIE_RTOL * np.maximum(np.abs(parent_score), 1e-300)
    cand = np.flatnonzero(gain >= best_gain[nd] - tol[nd])
    first = np.full(n_nodes, flat.size, dtype=np.int64)
    np.minimum.at(first, nd[cand], cand)
    has = first < flat.size
    pick = first[has]
    best_gain[has] = gain[pick]
    best_feat[has] = f[pick]
    best_thr[has] = 0.5 * (x[f[pick], i[pick]] + x[f[pick], i[pick] + 1])
    return best_gain, best_feat, best_thr, G_tot, H_tot


def _grow_tree(X, XT, order, g, max_depth, lam, gamma, lr) -> FlatTree:
    n = X.shape[0]
    feat, thr, left, right, val = [-1], [0.0], [-1], [-1], [0.0]
    # open nodes at the current level: tree index per open id
    open_tree_idx = [0]
    node_of = np.zeros(n, dtype=np.int64)  # open id per row, -1 once finished
    for depth in range(max_depth + 1):
        n_open = len(open_tree_idx)
        if n_open == 0:
            break
        if depth < max_depth:
            gain, bf, bt, G_tot, H_tot = _best_splits(XT, order, g, node_of, n_open, lam, gamma)
        else:
            mask = node_of >= 0
            G_tot = np.bincount(node_of[mask], weights=g[mask], minlength=n_open)
            H_tot = np.bincount(node_of[mask], minlength=n_open).astype(float)
            gain = np.full(n_open, -np.inf)
            bf, bt = np.full(n_open, -1), np.zeros(n_open)
        new_open: list[int] = []
        remap = np.full(n_open, -1, dtype=np.int64)
        go_left_id = np.full(n_open, -1, dtype=np.int64)
        for k, ti in enumerate(open_tree_idx):
            if gain[k] > 0:
                feat[ti], thr[ti] = int(bf[k]), float(bt[k])
                for side in (left, right):
                    side[ti] = len(feat)
                    feat.append(-1)
                    thr.append(0.0)
                    left.append(-1)
                    right.append(-1)
                    val.append(0.0)
                go_left_id[k] = len(new_open)
                new_open.extend([left[ti], right[ti]])
                remap[k] = 1
            else:
                val[ti] = lr * leaf_weight(G_tot[k], H_tot[k], lam)
        if not new_open:
            break
        active = node_of >= 0
        k_rows = node_of[active]
        splitting = remap[k_rows] >= 0
        rows = np.flatnonzero(active)
        new_ids = np.full(rows.size, -1, dtype=np.int64)
        r = rows[splitting]
        kk = k_rows[splitting]
        goes_left = X[r, bf[kk]] < bt[kk]
        new_ids[splitting] = go_left_id[kk] + (~goes_left)
        node_of[rows] = new_ids
        open_tree_idx = new_open
    return FlatTree(np.array(feat, dtype=np.int64), np.array(thr), np.array(left, dtype=np.int64),
                    np.array(right, dtype=np.int64), np.array(val))


def fit_gbt(X, y, rounds: int = 100, max_depth: int = 3, learning_rate: float = 0.1,
            lam: float = 1.0, gamma: float = 0.0) -> GbtModel:
    """Boost ``rounds`` depth-limited trees on squared loss (g = pred - y, h = 1)."""
    X = _as_matrix(X)
    y = np.asarray(y, dtype=float).ravel()
    if X.shape[0] == 0 or y.size == 0:
        raise EmptyData("cannot fit on an empty dataset")
    if X.shape[0] != y.size:
        raise ShapeMismatch("X and y row counts differ")
    if X.shape[0] < 2:
        raise EmptyData("need at least two rows")
    if rounds < 1 or max_depth < 0:
        raise ValueError("rounds must be >= 1 and max_depth >= 0")
    if not 0 < learning_rate <= 1 or lam < 0 or gamma < 0:
        raise ValueError("need learning_rate in (0, 1], lambda >= 0 and gamma >= 0")
    XT = np.ascontiguousarray(X.T)
    order = np.argsort(XT, axis=1, kind="stable")
    base = float(np.mean(y))
    pred = np.full(y.size, base)
    trees = []
    for _ in range(rounds):
        tree = _grow_tree(X, XT, order, pred - y, max_depth, lam, gamma, learning_rate)
        pred += tree.predict(X)
        trees.append(tree)
    return GbtModel(trees, learning_rate, lam, gamma, base, X.shape[1], max_depth, rounds)


def predict_gbt(model: GbtModel, X) -> np.ndarray:
    return model.predict(X)
