"""Pure-numpy implementations of the hot kernels.

Kept operation-for-operation aligned with the Cython versions so the two
backends agree: prefix sums use ``np.cumsum`` (sequential accumulation,
matching the C loop), gain expressions are written identically, and ties in
the split search resolve to the first candidate in (feature, position)
order on both sides.
"""

from __future__ import annotations

import numpy as np

NAME = "numpy"


def best_split(
    x: np.ndarray,
    g: np.ndarray,
    h: np.ndarray,
    l2_lambda: float,
    min_child_weight: float,
) -> tuple[float, int, float] | None:
    """Exact greedy split search over all features of one tree node.

    Returns (gain, feature, threshold) for the best positive-gain split, or
    None when no admissible split improves on the parent. Thresholds are
    midpoints between consecutive distinct sorted values; a split is
    admissible when both children's hessian sums reach min_child_weight.
    """
    m, n_feat = x.shape
    if m < 2:
        return None
    g_total = float(np.cumsum(g)[-1])
    h_total = float(np.cumsum(h)[-1])
    parent = g_total * g_total / (h_total + l2_lambda)

    best_gain = 0.0
    best_feat = -1
    best_thr = 0.0
    for j in range(n_feat):
        order = np.argsort(x[:, j], kind="stable")
        v = x[order, j]
        gl = np.cumsum(g[order])
        hl = np.cumsum(h[order])
        cut = np.nonzero(v[:-1] < v[1:])[0]
        if cut.size == 0:
            continue
        g_left = gl[cut]
        h_left = hl[cut]
        g_right = g_total - g_left
        h_right = h_total - h_left
        gains = (
            g_left * g_left / (h_left + l2_lambda)
            + g_right * g_right / (h_right + l2_lambda)
            - parent
        )
        ok = (h_left >= min_child_weight) & (h_right >= min_child_weight)
        if not ok.any():
            continue
        gains = np.where(ok, gains, -np.inf)
        i = int(np.argmax(gains))
        gain = float(gains[i])
        if gain > best_gain:
            best_gain = gain
            best_feat = j
            best_thr = float((v[cut[i]] + v[cut[i] + 1]) / 2.0)
    if best_feat < 0:
        return None
    return best_gain, best_feat, best_thr


def tree_leaf_values(
    feature: np.ndarray,
    threshold: np.ndarray,
    left: np.ndarray,
    right: np.ndarray,
    value: np.ndarray,
    x: np.ndarray,
) -> np.ndarray:
    """Route every row of ``x`` to its leaf and return the leaf values.

    Internal nodes have feature >= 0; rows go left when x[f] < threshold.
    """
    n = x.shape[0]
    node = np.zeros(n, dtype=np.int32)
    rows = np.arange(n)
    while rows.size:
        cur = node[rows]
        feat = feature[cur]
        go_left = x[rows, feat] < threshold[cur]
        node[rows] = np.where(go_left, left[cur], right[cur])
        rows = rows[feature[node[rows]] >= 0]
    return value[node]


def knn(points: np.ndarray, k: int, chunk: int = 512) -> tuple[np.ndarray, np.ndarray]:
    """k nearest neighbors of every point among the others (Euclidean).

    Ties on distance resolve to the lower index. Returns (ids, dists), both
    (n, k), with neighbors ordered nearest-first.
    """
    pts = np.ascontiguousarray(points, dtype=np.float64)
    n = pts.shape[0]
    sq = np.einsum("ij,ij->i", pts, pts)
    ids = np.empty((n, k), dtype=np.int64)
    dists = np.empty((n, k), dtype=np.float64)
    for start in range(0, n, chunk):
        stop = min(start + chunk, n)
        d = sq[start:stop, None] + sq[None, :] - 2.0 * (pts[start:stop] @ pts.T)
        np.maximum(d, 0.0, out=d)
        d[np.arange(stop - start), np.arange(start, stop)] = np.inf
        part = np.argpartition(d, k - 1, axis=1)[:, :k]
        for r in range(stop - start):
            row = d[r]
            worst = row[part[r]].max()
            cand = np.nonzero(row <= worst)[0]
            order = np.lexsort((cand, row[cand]))[:k]
            chosen = cand[order]
            ids[start + r] = chosen
            dists[start + r] = row[chosen]
    np.sqrt(dists, out=dists)
    return ids, dists
