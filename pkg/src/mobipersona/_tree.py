"""Numba kernels for CART growth and traversal.

Trees are stored as flat parallel arrays. A node with ``feature == -1`` is a
leaf; ``value`` holds the fraction of class-1 (high) samples that reached it.
Samples with ``x <= threshold`` go left.
"""

import numpy as np
from numba import njit

_EPS = 1e-12


@njit(cache=True)
def grow_tree(X, y, order, sorted_x, seed, mtry, max_depth, min_leaf, bootstrap,
              feature, threshold, left, right, value, importance):
    n, d = X.shape
    np.random.seed(seed)

    weight = np.zeros(n, np.int64)
    if bootstrap:
        for _ in range(n):
            weight[np.random.randint(0, n)] += 1
    else:
        weight[:] = 1

    cap = feature.shape[0]
    node_n = np.zeros(cap, np.int64)
    node_pos = np.zeros(cap, np.int64)
    node_depth = np.zeros(cap, np.int64)
    node_of = np.full(n, -1, np.int64)
    for i in range(n):
        if weight[i] > 0:
            node_of[i] = 0
            node_n[0] += weight[i]
            node_pos[0] += weight[i] * y[i]

    feats = np.arange(d)
    stack = np.empty(cap, np.int64)
    stack[0] = 0
    sp = 1
    n_nodes = 1
    while sp > 0:
        sp -= 1
        node = stack[sp]
        nn = node_n[node]
        npos = node_pos[node]
        value[node] = npos / nn
        feature[node] = -1
        left[node] = -1
        right[node] = -1
        if npos == 0 or npos == nn or nn < 2 * min_leaf:
            continue
        if max_depth >= 0 and node_depth[node] >= max_depth:
            continue

        parent_cost = 2.0 * npos * (nn - npos) / nn
        best_cost = np.inf
        best_f = -1
        best_thr = 0.0
        visited = 0

        for k in range(d):
            if visited >= mtry:
                break
            j = k + np.random.randint(0, d - k)
            tmp = feats[k]
            feats[k] = feats[j]
            feats[j] = tmp
            f = feats[k]

            nl = 0
            pl = 0
            prev = 0.0
            seen = False
            nonconst = False
            for t in range(n):
                r = order[f, t]
                if node_of[r] != node:
                    continue
                v = sorted_x[f, t]
                if seen and v > prev:
                    nonconst = True
                    nr = nn - nl
                    if nl >= min_leaf and nr >= min_leaf:
                        pr = npos - pl
                        cost = 2.0 * pl * (nl - pl) / nl + 2.0 * pr * (nr - pr) / nr
                        thr = 0.5 * (prev + v)
                        if thr >= v:
                            thr = prev
                        better = cost < best_cost - _EPS
                        if not better and abs(cost - best_cost) <= _EPS:
                            better = f < best_f or (f == best_f and thr < best_thr)
                        if better:
                            best_cost = cost
                            best_f = f
                            best_thr = thr
                seen = True
                nl += weight[r]
                pl += weight[r] * y[r]
                prev = v
            if nonconst:
                visited += 1

        if best_f < 0:
            continue

        lc = n_nodes
        rc = n_nodes + 1
        n_nodes += 2
        for i in range(n):
            if node_of[i] == node:
                if X[i, best_f] <= best_thr:
                    node_of[i] = lc
                    node_n[lc] += weight[i]
                    node_pos[lc] += weight[i] * y[i]
                else:
                    node_of[i] = rc
                    node_n[rc] += weight[i]
                    node_pos[rc] += weight[i] * y[i]
        node_depth[lc] = node_depth[node] + 1
        node_depth[rc] = node_depth[node] + 1
        feature[node] = best_f
        threshold[node] = best_thr
        left[node] = lc
        right[node] = rc
        importance[best_f] += max(parent_cost - best_cost, 0.0)
        stack[sp] = rc
        stack[sp + 1] = lc
        sp += 2
    return n_nodes


@njit(cache=True)
def presort(X):
    """Stable per-feature row order and the sorted values, each shaped (d, n)."""
    n, d = X.shape
    order = np.empty((d, n), np.int64)
    sorted_x = np.empty((d, n), np.float64)
    for f in range(d):
        order[f] = np.argsort(X[:, f], kind="mergesort")
        sorted_x[f] = X[order[f], f]
    return order, sorted_x


@njit(cache=True)
def grow_forest(X, y, order, sorted_x, seeds, mtry, max_depth, min_leaf, bootstrap):
    n, d = X.shape
    n_trees = seeds.shape[0]
    cap = 2 * n + 1
    feature = np.full((n_trees, cap), -1, np.int64)
    threshold = np.zeros((n_trees, cap), np.float64)
    left = np.full((n_trees, cap), -1, np.int64)
    right = np.full((n_trees, cap), -1, np.int64)
    value = np.zeros((n_trees, cap), np.float64)
    importance = np.zeros((n_trees, d), np.float64)
    n_nodes = np.empty(n_trees, np.int64)
    for t in range(n_trees):
        n_nodes[t] = grow_tree(X, y, order, sorted_x, seeds[t], mtry, max_depth, min_leaf,
                               bootstrap, feature[t], threshold[t], left[t],
                               right[t], value[t], importance[t])
    return feature, threshold, left, right, value, importance, n_nodes


@njit(cache=True)
def tree_leaf_values(X, feature, threshold, left, right, value):
    """Per-tree leaf value for every row: shape (n_trees, n_rows)."""
    n_trees = feature.shape[0]
    n = X.shape[0]
    out = np.empty((n_trees, n), np.float64)
    for t in range(n_trees):
        for i in range(n):
            node = 0
            while feature[t, node] >= 0:
                if X[i, feature[t, node]] <= threshold[t, node]:
                    node = left[t, node]
                else:
                    node = right[t, node]
            out[t, i] = value[t, node]
    return out
