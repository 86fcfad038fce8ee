"""Compiled kernels for growing and querying binary Gini trees.

Trees are stored as flat parallel arrays indexed by node id. Leaves have
``feature == -1``. Samples go left when ``x[feature] <= threshold``.
"""

import numpy as np
from numba import njit

_LEAF = -1


@njit(cache=True)
def _splitmix_next(state):
    # state is a length-1 uint64 array, advanced in place
    state[0] = state[0] + np.uint64(0x9E3779B97F4A7C15)
    z = state[0]
    z = (z ^ (z >> np.uint64(30))) * np.uint64(0xBF58476D1CE4E5B9)
    z = (z ^ (z >> np.uint64(27))) * np.uint64(0x94D049BB133111EB)
    return z ^ (z >> np.uint64(31))


@njit(cache=True)
def _randint(state, high):
    u = (_splitmix_next(state) >> np.uint64(11)) * (1.0 / 9007199254740992.0)
    k = int(u * high)
    if k >= high:
        k = high - 1
    return k


@njit(cache=True)
def build_tree(X, y, order, counts, max_features, max_depth, min_samples_split, seed):
    """Grow one tree on a weighted resample of the rows of ``X``.

    ``order`` is the per-feature ascending argsort of ``X`` (shape n x d) and
    ``counts[r]`` is how many times row ``r`` appears in the resample.
    ``max_depth < 0`` means unbounded. Returns the node arrays trimmed to the
    number of nodes grown.
    """
    n_rows, d = X.shape
    n_total = 0
    for r in range(n_rows):
        n_total += counts[r]
    cap = 2 * n_total + 1

    feature = np.full(cap, _LEAF, dtype=np.int64)
    threshold = np.zeros(cap, dtype=np.float64)
    left = np.full(cap, _LEAF, dtype=np.int64)
    right = np.full(cap, _LEAF, dtype=np.int64)
    value = np.zeros(cap, dtype=np.float64)
    n_node = np.zeros(cap, dtype=np.int64)
    impurity = np.zeros(cap, dtype=np.float64)
    decrease = np.zeros(cap, dtype=np.float64)

    # sorted_rows[f] lists the resampled rows in ascending order of feature f;
    # a node owns the same [start, end) slice of every feature's list
    sorted_rows = np.empty((d, n_total), dtype=np.int64)
    for f in range(d):
        k = 0
        for i in range(n_rows):
            r = order[i, f]
            for _ in range(counts[r]):
                sorted_rows[f, k] = r
                k += 1
    goes_left = np.zeros(n_rows, dtype=np.bool_)
    buf = np.empty(n_total, dtype=np.int64)
    order_feat = np.arange(d)
    state = np.empty(1, dtype=np.uint64)
    state[0] = np.uint64(seed)

    st_node = np.empty(cap, dtype=np.int64)
    st_start = np.empty(cap, dtype=np.int64)
    st_end = np.empty(cap, dtype=np.int64)
    st_depth = np.empty(cap, dtype=np.int64)
    st_node[0] = 0
    st_start[0] = 0
    st_end[0] = n_total
    st_depth[0] = 0
    top = 1
    n_nodes = 1

    while top > 0:
        top -= 1
        node = st_node[top]
        start = st_start[top]
        end = st_end[top]
        depth = st_depth[top]
        n = end - start

        pos = 0
        for i in range(start, end):
            pos += y[sorted_rows[0, i]]
        p = pos / n
        imp = 2.0 * p * (1.0 - p)
        value[node] = p
        n_node[node] = n
        impurity[node] = imp

        if n < min_samples_split or depth == max_depth or pos == 0 or pos == n:
            continue

        # Fisher-Yates shuffle of the candidate feature order
        for i in range(d):
            order_feat[i] = i
        for i in range(d - 1, 0, -1):
            j = _randint(state, i + 1)
            tmp = order_feat[i]
            order_feat[i] = order_feat[j]
            order_feat[j] = tmp

        best_gain = -np.inf
        best_f = -1
        best_thr = 0.0
        visited = 0
        for k in range(d):
            if visited >= max_features:
                break
            f = order_feat[k]
            if X[sorted_rows[f, end - 1], f] <= X[sorted_rows[f, start], f]:
                continue
            visited += 1
            left_pos = 0
            for i in range(start, end - 1):
                left_pos += y[sorted_rows[f, i]]
                a = X[sorted_rows[f, i], f]
                b = X[sorted_rows[f, i + 1], f]
                if b <= a:
                    continue
                nl = i + 1 - start
                nr = n - nl
                pl = left_pos / nl
                pr = (pos - left_pos) / nr
                gain = imp - (nl / n) * (2.0 * pl * (1.0 - pl)) - (nr / n) * (2.0 * pr * (1.0 - pr))
                if gain < best_gain:
                    continue
                thr = 0.5 * (a + b)
                if thr >= b:
                    thr = a
                # equal gains go to the lowest threshold value, then the
                # lowest feature index: a total order that does not depend on
                # the visiting order, nor (short of exact threshold ties) on
                # where a feature sits among the columns
                if gain > best_gain or thr < best_thr or (thr == best_thr and f < best_f):
                    best_gain = gain
                    best_f = f
                    best_thr = thr

        if best_f < 0:
            continue

        nl = 0
        for i in range(start, end):
            r = sorted_rows[best_f, i]
            flag = X[r, best_f] <= best_thr
            goes_left[r] = flag
            if flag:
                nl += 1
        # stable partition keeps both halves of every slice sorted
        for f in range(d):
            a_n = 0
            b_n = 0
            for i in range(start, end):
                r = sorted_rows[f, i]
                if goes_left[r]:
                    sorted_rows[f, start + a_n] = r
                    a_n += 1
                else:
                    buf[b_n] = r
                    b_n += 1
            for i in range(b_n):
                sorted_rows[f, start + a_n + i] = buf[i]

        feature[node] = best_f
        threshold[node] = best_thr
        decrease[node] = (n / n_total) * best_gain
        lnode = n_nodes
        rnode = n_nodes + 1
        n_nodes += 2
        left[node] = lnode
        right[node] = rnode

        st_node[top] = rnode
        st_start[top] = start + nl
        st_end[top] = end
        st_depth[top] = depth + 1
        top += 1
        st_node[top] = lnode
        st_start[top] = start
        st_end[top] = start + nl
        st_depth[top] = depth + 1
        top += 1

    return (
        feature[:n_nodes].copy(),
        threshold[:n_nodes].copy(),
        left[:n_nodes].copy(),
        right[:n_nodes].copy(),
        value[:n_nodes].copy(),
        n_node[:n_nodes].copy(),
        impurity[:n_nodes].copy(),
        decrease[:n_nodes].copy(),
    )


@njit(cache=True)
def tree_leaf_values(feature, threshold, left, right, value, X):
    """Class-1 frequency of the leaf each row of ``X`` lands in."""
    n = X.shape[0]
    out = np.empty(n, dtype=np.float64)
    for i in range(n):
        node = 0
        while feature[node] != _LEAF:
            if X[i, feature[node]] <= threshold[node]:
                node = left[node]
            else:
                node = right[node]
        out[i] = value[node]
    return out
