"""Clustering and regression primitives behind the pruning strategies.

Everything here is hand-rolled on numpy so tie-breaking and iteration order
are pinned exactly; determinism per seed matters more than raw speed at the
scales involved (a few hundred rows). Conventions used throughout:

- nearest/argmin ties resolve to the lowest index,
- split-candidate thresholds are midpoints between consecutive distinct
  sorted feature values,
- equal-quality splits prefer the lower feature index, then lower threshold,
- values exactly equal to a threshold go to the right branch.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass

import numpy as np

from .errors import DataError, DimensionMismatch
from .rng import KMEANS_STREAM, Xoshiro256StarStar, derive_seed


class KTooLarge(DataError):
    pass


class TooFewPoints(DataError):
    pass


@dataclass
class KMeansResult:
    centroids: np.ndarray     # (k, C)
    assignments: np.ndarray   # (P,) int
    inertia: float
    iterations: int


@dataclass
class HdbscanResult:
    labels: np.ndarray               # (P,) int, -1 = noise
    cluster_medoids: tuple[int, ...]  # per-cluster point index
    stabilities: tuple[float, ...]


# ---------------------------------------------------------------- k-means

def _dist2_to_centroids(points: np.ndarray, centroids: np.ndarray) -> np.ndarray:
    # plain (x - c)^2 per centroid so exact ties stay exact
    d2 = np.empty((len(points), len(centroids)))
    for j in range(len(centroids)):
        diff = points - centroids[j]
        d2[:, j] = np.einsum("ij,ij->i", diff, diff)
    return d2


def _kmeanspp_init(points: np.ndarray, k: int, rng: Xoshiro256StarStar) -> np.ndarray:
    p = len(points)
    first = rng.below(p)
    chosen = [first]
    diff = points - points[first]
    d2 = np.einsum("ij,ij->i", diff, diff)
    while len(chosen) < k:
        total = float(d2.sum())
        if total <= 0.0:
            idx = rng.below(p)  # all mass on existing centroids; any point works
        else:
            u = rng.random() * total
            idx = int(np.searchsorted(np.cumsum(d2), u, side="right"))
            idx = min(idx, p - 1)
        chosen.append(idx)
        diff = points - points[idx]
        d2 = np.minimum(d2, np.einsum("ij,ij->i", diff, diff))
    return points[chosen].astype(np.float64, copy=True)


def kmeans(points, k: int, seed: int, restarts: int = 10, max_iter: int = 300,
           _trace=None) -> KMeansResult:
    """Lloyd's algorithm with k-means++ seeding, best inertia over restarts.

    Restart r draws from the stream (seed, KMEANS_STREAM, r), so increasing
    the restart count can only keep or improve the returned inertia. Empty
    clusters keep their previous centroid.
    """
    pts = np.asarray(points, dtype=np.float64)
    if pts.ndim != 2 or len(pts) == 0:
        raise DataError("points must be a non-empty 2-D array")
    if k < 1:
        raise ValueError("k must be >= 1")
    if k > len(pts):
        raise KTooLarge(f"k={k} exceeds point count {len(pts)}")
    if restarts < 1:
        raise ValueError("restarts must be >= 1")
    best = None
    for rep in range(restarts):
        rng = Xoshiro256StarStar(derive_seed(seed, KMEANS_STREAM, rep))
        centroids = _kmeanspp_init(pts, k, rng)
        assign = _dist2_to_centroids(pts, centroids).argmin(axis=1)
        iterations = 0
        while iterations < max_iter:
            for j in range(k):
                members = pts[assign == j]
                if len(members):
                    centroids[j] = members.mean(axis=0)
            d2 = _dist2_to_centroids(pts, centroids)
            new_assign = d2.argmin(axis=1)
            iterations += 1
            if _trace is not None:
                _trace.append(float(d2[np.arange(len(pts)), new_assign].sum()))
            if np.array_equal(new_assign, assign):
                break
            assign = new_assign
        diff = pts - centroids[assign]
        inertia = float(np.einsum("ij,ij->", diff, diff))
        if best is None or inertia < best.inertia:
            best = KMeansResult(centroids.copy(), assign.copy(), inertia, iterations)
    return best


# ---------------------------------------------------- density clustering

def _pairwise_distances(points: np.ndarray) -> np.ndarray:
    p = len(points)
    d = np.empty((p, p))
    for i in range(p):
        diff = points - points[i]
        d[i] = np.sqrt(np.einsum("ij,ij->i", diff, diff))
    np.fill_diagonal(d, 0.0)
    return d


def _prim_mst(weights: np.ndarray) -> list[tuple[int, int, float]]:
    # O(P^2) Prim from vertex 0; ties pick the lowest vertex index
    p = len(weights)
    in_tree = np.zeros(p, dtype=bool)
    in_tree[0] = True
    key = weights[0].copy()
    parent = np.zeros(p, dtype=np.int64)
    edges = []
    for _ in range(p - 1):
        masked = np.where(in_tree, np.inf, key)
        v = int(masked.argmin())
        edges.append((int(parent[v]), v, float(key[v])))
        in_tree[v] = True
        better = (weights[v] < key) & ~in_tree
        key[better] = weights[v][better]
        parent[better] = v
    return edges


def _single_linkage(edges, p: int) -> list[tuple[int, int, float, int]]:
    # rows of (left node, right node, distance, merged size); new node P+i
    canon = sorted(((min(u, v), max(u, v), w) for u, v, w in edges),
                   key=lambda e: (e[2], e[0], e[1]))
    uf = list(range(p))

    def find(x):
        root = x
        while uf[root] != root:
            root = uf[root]
        while uf[x] != root:
            uf[x], x = root, uf[x]
        return root

    node_of = list(range(p))
    size_of = [1] * p
    rows = []
    for i, (a, b, w) in enumerate(canon):
        ra, rb = find(a), find(b)
        na, nb = node_of[ra], node_of[rb]
        size = size_of[ra] + size_of[rb]
        rows.append((min(na, nb), max(na, nb), w, size))
        uf[ra] = rb
        node_of[rb] = p + i
        size_of[rb] = size
    return rows


def _leaf_points(node: int, p: int, left, right) -> list[int]:
    out, stack = [], [node]
    while stack:
        cur = stack.pop()
        if cur < p:
            out.append(cur)
        else:
            stack.append(left[cur])
            stack.append(right[cur])
    return out


def _excess(lam: float, birth: float) -> float:
    # duplicate points make both infinite; that mass contributes nothing
    if math.isinf(lam) and math.isinf(birth):
        return 0.0
    return lam - birth


def hdbscan(points, min_cluster_size: int = 3, min_samples: int = 2) -> HdbscanResult:
    """Density-based hierarchical clustering over mutual-reachability space.

    Pipeline: core distances (min_samples-th nearest other point), mutual
    reachability max(core_a, core_b, d_ab), exact Prim MST, single-linkage
    hierarchy, condensation by min_cluster_size, and leaf-first
    excess-of-mass cluster selection. The root is never a candidate unless
    the condensed tree has no sub-clusters at all, in which case the whole
    input is one cluster. Medoids minimize summed in-cluster mutual
    reachability (lowest index on ties).
    """
    pts = np.asarray(points, dtype=np.float64)
    if pts.ndim != 2 or len(pts) == 0:
        raise DataError("points must be a non-empty 2-D array")
    p = len(pts)
    if min_cluster_size < 2:
        raise ValueError("min_cluster_size must be >= 2")
    if min_samples < 1:
        raise ValueError("min_samples must be >= 1")
    if p < min_cluster_size:
        raise TooFewPoints(f"need at least {min_cluster_size} points, got {p}")
    if min_samples > p - 1:
        raise TooFewPoints(f"min_samples={min_samples} needs at least {min_samples + 1} points")

    dist = _pairwise_distances(pts)
    core = np.sort(dist, axis=1)[:, min_samples]
    mreach = np.maximum(np.maximum.outer(core, core), dist)
    np.fill_diagonal(mreach, 0.0)

    linkage = _single_linkage(_prim_mst(mreach), p)
    n_nodes = 2 * p - 1
    left = np.full(n_nodes, -1, dtype=np.int64)
    right = np.full(n_nodes, -1, dtype=np.int64)
    dist_of = np.zeros(n_nodes)
    size_of = np.ones(n_nodes, dtype=np.int64)
    for i, (l, r, w, s) in enumerate(linkage):
        node = p + i
        left[node], right[node], dist_of[node], size_of[node] = l, r, w, s

    # condense: clusters are numbered in BFS creation order, root = 0
    root = 2 * p - 2
    relabel = {root: 0}
    children: dict[int, list[int]] = {0: []}
    births = {0: 0.0}
    cluster_size = {0: p}
    point_rows: list[tuple[int, int, float]] = []      # (cluster, point, lambda)
    cluster_rows: list[tuple[int, int, float, int]] = []  # (parent, child, lambda, size)
    next_cluster = 1
    queue = deque([root])
    while queue:
        node = queue.popleft()
        cluster = relabel[node]
        l, r = int(left[node]), int(right[node])
        d = dist_of[node]
        lam = math.inf if d == 0.0 else 1.0 / d
        small = []
        big = []
        for child in (l, r):
            csize = 1 if child < p else int(size_of[child])
            (big if csize >= min_cluster_size else small).append(child)
        if len(big) == 2:
            # a real split: both sides become new clusters (big => internal node)
            for child in (l, r):
                cid = next_cluster
                next_cluster += 1
                relabel[child] = cid
                children[cluster].append(cid)
                children[cid] = []
                births[cid] = lam
                cluster_size[cid] = int(size_of[child])
                cluster_rows.append((cluster, cid, lam, cluster_size[cid]))
                queue.append(child)
        else:
            for child in small:
                for pt in _leaf_points(child, p, left, right):
                    point_rows.append((cluster, pt, lam))
            if big:
                relabel[big[0]] = cluster  # cluster survives the shedding
                queue.append(big[0])

    stability = {c: 0.0 for c in children}
    for cluster, _, lam in point_rows:
        stability[cluster] += _excess(lam, births[cluster])
    for parent, _, lam, size in cluster_rows:
        stability[parent] += _excess(lam, births[parent]) * size

    # leaf-first excess of mass; root (id 0) excluded from candidacy
    selected = {}
    subtree = {}
    for c in range(next_cluster - 1, 0, -1):
        kid_sum = sum(subtree[k] for k in children[c])
        if children[c] and kid_sum > stability[c]:
            selected[c] = False
            subtree[c] = kid_sum
        else:
            selected[c] = True
            subtree[c] = stability[c]
    chosen: list[int] = []
    stack = [(0, False)]
    while stack:
        c, blocked = stack.pop()
        take = c != 0 and not blocked and selected.get(c, False)
        if take:
            chosen.append(c)
        for k in children[c]:
            stack.append((k, blocked or take))
    chosen.sort()
    if not children[0]:
        chosen = [0]  # no split survived condensation: everything is one cluster

    rank = {c: i for i, c in enumerate(chosen)}
    parent_of = {0: None}
    for c, kids in children.items():
        for k in kids:
            parent_of[k] = c
    labels = np.full(p, -1, dtype=np.int64)
    for cluster, pt, _ in point_rows:
        c = cluster
        while c is not None:
            if c in rank:
                labels[pt] = rank[c]
                break
            c = parent_of[c]

    medoids = []
    stabilities = []
    for c in chosen:
        members = np.nonzero(labels == rank[c])[0]
        sub = mreach[np.ix_(members, members)]
        medoids.append(int(members[int(sub.sum(axis=1).argmin())]))
        stabilities.append(float(stability[c]))
    return HdbscanResult(labels, tuple(medoids), tuple(stabilities))


# ------------------------------------------------- multi-output CART

@dataclass
class TreeLeaf:
    value: np.ndarray  # mean target vector of the member rows
    count: int


@dataclass
class TreeSplit:
    feature: int
    threshold: float
    left: "TreeSplit | TreeLeaf"
    right: "TreeSplit | TreeLeaf"


@dataclass
class RegressionTree:
    root: "TreeSplit | TreeLeaf"
    leaf_count: int
    n_features: int


def _node_sse(y: np.ndarray) -> float:
    return float(((y - y.mean(axis=0)) ** 2).sum())


def _best_split(x: np.ndarray, y: np.ndarray, rows: np.ndarray, base_sse: float):
    """Best (reduction, feature, threshold) over all candidates, or None.

    Candidate SSEs use prefix sums; a relative tolerance keeps cancellation
    noise from manufacturing splits on constant targets.
    """
    best = None
    n = len(rows)
    if n < 2:
        return None
    tol = 1e-9 * (1.0 + base_sse)
    yr = y[rows]
    sq = np.einsum("ij,ij->i", yr, yr)
    for f in range(x.shape[1]):
        vals = x[rows, f]
        order = np.argsort(vals, kind="stable")
        sv = vals[order]
        ys = yr[order]
        cum = np.cumsum(ys, axis=0)
        cumsq = np.cumsum(sq[order])
        total = cum[-1]
        totalsq = cumsq[-1]
        for i in range(1, n):
            if sv[i] == sv[i - 1]:
                continue
            nl, nr = i, n - i
            left_sum = cum[i - 1]
            sse_l = cumsq[i - 1] - float(left_sum @ left_sum) / nl
            right_sum = total - left_sum
            sse_r = (totalsq - cumsq[i - 1]) - float(right_sum @ right_sum) / nr
            reduction = base_sse - sse_l - sse_r
            if reduction > tol and (best is None or reduction > best[0]):
                best = (reduction, f, (sv[i - 1] + sv[i]) / 2.0)
    return best


def fit_regression_tree(features, targets, max_leaves: int) -> RegressionTree:
    """Best-first CART: always split the leaf with the largest SSE reduction.

    Ties between leaves keep the earliest-created leaf; within a leaf, the
    lower feature index then lower threshold wins. Growth stops at max_leaves
    or when no split reduces error.
    """
    x = np.atleast_2d(np.asarray(features, dtype=np.float64))
    y = np.atleast_2d(np.asarray(targets, dtype=np.float64))
    if len(x) != len(y) or len(x) == 0:
        raise DataError("features and targets must have the same non-zero length")
    if max_leaves < 1:
        raise ValueError("max_leaves must be >= 1")

    leaves: dict[int, dict] = {}
    structure: dict[int, tuple[int, float, int, int]] = {}
    order: list[int] = []
    next_id = 0

    def make_leaf(rows: np.ndarray) -> int:
        nonlocal next_id
        lid = next_id
        next_id += 1
        base = _node_sse(y[rows])
        leaves[lid] = {"rows": rows, "sse": base, "best": _best_split(x, y, rows, base)}
        order.append(lid)
        return lid

    root_id = make_leaf(np.arange(len(x)))
    while len(leaves) < max_leaves:
        pick = None
        for lid in order:
            rec = leaves.get(lid)
            if rec is None or rec["best"] is None:
                continue
            if pick is None or rec["best"][0] > leaves[pick]["best"][0]:
                pick = lid
        if pick is None:
            break
        _, f, thr = leaves[pick]["best"]
        rows = leaves[pick]["rows"]
        mask = x[rows, f] < thr
        del leaves[pick]
        lid = make_leaf(rows[mask])
        rid = make_leaf(rows[~mask])
        structure[pick] = (f, thr, lid, rid)

    def build(nid: int):
        if nid in structure:
            f, thr, lid, rid = structure[nid]
            return TreeSplit(f, thr, build(lid), build(rid))
        rows = leaves[nid]["rows"]
        return TreeLeaf(y[rows].mean(axis=0), len(rows))

    return RegressionTree(build(root_id), len(leaves), x.shape[1])


def predict_tree(tree: RegressionTree, row) -> np.ndarray:
    """Route one feature row to its leaf mean; threshold ties go right."""
    r = np.asarray(row, dtype=np.float64)
    if r.shape != (tree.n_features,):
        raise DimensionMismatch(f"expected {tree.n_features} features, got shape {r.shape}")
    node = tree.root
    while isinstance(node, TreeSplit):
        node = node.left if r[node.feature] < node.threshold else node.right
    return node.value.copy()


def tree_leaves(tree: RegressionTree) -> list[TreeLeaf]:
    """Leaves in left-to-right (preorder) order."""
    out, stack = [], [tree.root]
    while stack:
        node = stack.pop()
        if isinstance(node, TreeSplit):
            stack.append(node.right)
            stack.append(node.left)
        else:
            out.append(node)
    return out
