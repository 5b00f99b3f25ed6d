"""Numba kernels for tree building, prediction, and Shapley attribution.

All kernels are sequential and allocation-free on the hot path, so results
are bit-identical regardless of how callers schedule them across threads.

Split search details:
  - Columns are pre-sorted once per training set; NaN sorts to the tail of
    each column, so the missing g/h mass of a node is aggregated by
    scanning only that tail.
  - One prepare pass per tree drops unsampled rows and gathers g/h into
    each feature's sorted order, making the level scans sequential reads.
  - Candidate splits are rejected against the incumbent with a
    cross-multiplied comparison (no divisions); the exact divided score is
    only computed when a candidate actually beats the incumbent, and the
    stored gain is always the divided form, identical to the reference
    implementation in gbt.best_split.
"""
import numpy as np
from numba import njit

LEAF = np.int32(-1)
INF = np.inf


@njit(cache=True, nogil=True)
def build_tree(
    x,              # (n*m,) float64, row-major feature matrix
    n, m,
    sorted_ids,     # (m*n,) int32, per-column row order, valid ascending then NaN tail
    sorted_vals,    # (m*n,) float64, values in the same order
    valid_n,        # (m,) int64, non-missing count per column
    g, h,           # (n,) float64
    sampled,        # (n,) uint8
    reg_lambda, min_split_loss, max_depth, learning_rate,
    # tree output arrays, capacity 2**(max_depth+1) - 1:
    t_feat, t_thr, t_dleft, t_left, t_right, t_value,
    # scratch:
    row_slot,       # (n,) int32
    slot_node,      # (2**(max_depth+1),) int32: tree index of each active slot
    node_g, node_h,  # per-slot totals
    bs_gain, bs_feat, bs_thr, bs_dleft, bs_gl, bs_hl, bs_bar,  # per-slot best
    sc_last, sc_gl, sc_hl, sc_gm, sc_hm, sc_parent,            # per-slot state
    child_base,     # (2**(max_depth+1),) int32
    c_ids, c_vals, c_g, c_h,  # (m*n,) compacted sampled rows, per feature
    c_valid, c_count,         # (m,) int64 per-feature counts after compaction
):
    """Grow one depth-wise tree; returns the number of nodes written."""
    g_tot = 0.0
    h_tot = 0.0
    for r in range(n):
        if sampled[r] != 0:
            row_slot[r] = 0
            g_tot += g[r]
            h_tot += h[r]
        else:
            row_slot[r] = -1
    for j in range(m):
        base = j * n
        nv = valid_n[j]
        w = base
        for pos in range(nv):
            r = sorted_ids[base + pos]
            if sampled[r] != 0:
                c_ids[w] = r
                c_vals[w] = sorted_vals[base + pos]
                c_g[w] = g[r]
                c_h[w] = h[r]
                w += 1
        c_valid[j] = w - base
        for pos in range(nv, n):
            r = sorted_ids[base + pos]
            if sampled[r] != 0:
                c_ids[w] = r
                c_g[w] = g[r]
                c_h[w] = h[r]
                w += 1
        c_count[j] = w - base

    node_g[0] = g_tot
    node_h[0] = h_tot
    slot_node[0] = 0
    n_nodes = 1
    n_slots = 1

    for depth in range(max_depth):
        for s in range(n_slots):
            bs_gain[s] = 0.0
            bs_feat[s] = -1
            dt = node_h[s] + reg_lambda
            parent = node_g[s] * node_g[s] / dt if dt > 0.0 else 0.0
            sc_parent[s] = parent
            bs_bar[s] = 2.0 * min_split_loss + parent
        for j in range(m):
            base = j * n
            nv = c_valid[j]
            nc = c_count[j]
            if nv < 2:
                continue
            has_tail = nc > nv
            if depth == 0:
                # single root slot: register accumulators, no row lookups
                gm = 0.0
                hm = 0.0
                for pos in range(base + nv, base + nc):
                    gm += c_g[pos]
                    hm += c_h[pos]
                gt = node_g[0]
                ht = node_h[0]
                bar = bs_bar[0]
                acc_g = 0.0
                acc_h = 0.0
                last = INF
                has_miss = gm != 0.0 or hm != 0.0
                for pos in range(base, base + nv):
                    v = c_vals[pos]
                    if v > last:
                        dl = acc_h + reg_lambda
                        dr = ht - acc_h + reg_lambda
                        gl = acc_g
                        gr = gt - acc_g
                        hit = False
                        if dl > 0.0 and dr > 0.0 and (
                            gl * gl * dr + gr * gr * dl > bar * dl * dr
                        ):
                            hit = True
                        if has_miss and not hit:
                            gl2 = acc_g + gm
                            hl2 = acc_h + hm
                            dl2 = hl2 + reg_lambda
                            dr2 = ht - hl2 + reg_lambda
                            gr2 = gt - gl2
                            if dl2 > 0.0 and dr2 > 0.0 and (
                                gl2 * gl2 * dr2 + gr2 * gr2 * dl2 > bar * dl2 * dr2
                            ):
                                hit = True
                        if hit:
                            bar = _accept(
                                0, j, last, v, acc_g, acc_h, gm, hm, gt, ht,
                                has_miss, reg_lambda, min_split_loss, sc_parent,
                                bs_gain, bs_feat, bs_thr, bs_dleft, bs_gl, bs_hl,
                            )
                            bs_bar[0] = bar
                    acc_g += c_g[pos]
                    acc_h += c_h[pos]
                    last = v
            else:
                for s in range(n_slots):
                    sc_last[s] = INF
                    sc_gl[s] = 0.0
                    sc_hl[s] = 0.0
                    sc_gm[s] = 0.0
                    sc_hm[s] = 0.0
                if has_tail:
                    for pos in range(base + nv, base + nc):
                        s = row_slot[c_ids[pos]]
                        if s >= 0:
                            sc_gm[s] += c_g[pos]
                            sc_hm[s] += c_h[pos]
                for pos in range(base, base + nv):
                    s = row_slot[c_ids[pos]]
                    if s < 0:
                        continue
                    v = c_vals[pos]
                    acc_g = sc_gl[s]
                    acc_h = sc_hl[s]
                    last = sc_last[s]
                    if v > last:
                        gt = node_g[s]
                        ht = node_h[s]
                        bar = bs_bar[s]
                        gm = sc_gm[s]
                        hm = sc_hm[s]
                        has_miss = gm != 0.0 or hm != 0.0
                        dl = acc_h + reg_lambda
                        dr = ht - acc_h + reg_lambda
                        gl = acc_g
                        gr = gt - acc_g
                        hit = False
                        if dl > 0.0 and dr > 0.0 and (
                            gl * gl * dr + gr * gr * dl > bar * dl * dr
                        ):
                            hit = True
                        if has_miss and not hit:
                            gl2 = acc_g + gm
                            hl2 = acc_h + hm
                            dl2 = hl2 + reg_lambda
                            dr2 = ht - hl2 + reg_lambda
                            gr2 = gt - gl2
                            if dl2 > 0.0 and dr2 > 0.0 and (
                                gl2 * gl2 * dr2 + gr2 * gr2 * dl2 > bar * dl2 * dr2
                            ):
                                hit = True
                        if hit:
                            bs_bar[s] = _accept(
                                s, j, last, v, acc_g, acc_h, gm, hm, gt, ht,
                                has_miss, reg_lambda, min_split_loss, sc_parent,
                                bs_gain, bs_feat, bs_thr, bs_dleft, bs_gl, bs_hl,
                            )
                    sc_gl[s] = acc_g + c_g[pos]
                    sc_hl[s] = acc_h + c_h[pos]
                    sc_last[s] = v

        # materialize splits and leaves for this level
        n_new = 0
        for s in range(n_slots):
            t = slot_node[s]
            if bs_feat[s] >= 0:
                t_feat[t] = bs_feat[s]
                t_thr[t] = bs_thr[s]
                t_dleft[t] = bs_dleft[s]
                t_left[t] = n_nodes
                t_right[t] = n_nodes + 1
                child_base[s] = n_new
                n_new += 2
                n_nodes += 2
            else:
                if node_h[s] + reg_lambda > 0.0:
                    t_value[t] = learning_rate * (-node_g[s] / (node_h[s] + reg_lambda))
                else:
                    t_value[t] = 0.0
                t_feat[t] = LEAF
                child_base[s] = -1
        if n_new == 0:
            break
        # stage child slots past the current ones, route rows, then compact
        for s in range(n_slots):
            if child_base[s] >= 0:
                cl = child_base[s]
                t = slot_node[s]
                node_g[cl + n_slots] = bs_gl[s]
                node_h[cl + n_slots] = bs_hl[s]
                node_g[cl + 1 + n_slots] = node_g[s] - bs_gl[s]
                node_h[cl + 1 + n_slots] = node_h[s] - bs_hl[s]
                slot_node[cl + n_slots] = t_left[t]
                slot_node[cl + 1 + n_slots] = t_right[t]
        for r in range(n):
            s = row_slot[r]
            if s < 0:
                continue
            if child_base[s] < 0:
                row_slot[r] = -1
                continue
            t = slot_node[s]
            v = x[r * m + t_feat[t]]
            if np.isnan(v):
                go_left = t_dleft[t] == 1
            else:
                go_left = v < t_thr[t]
            if go_left:
                row_slot[r] = child_base[s] + n_slots
            else:
                row_slot[r] = child_base[s] + 1 + n_slots
        for s2 in range(n_new):
            slot_node[s2] = slot_node[s2 + n_slots]
            node_g[s2] = node_g[s2 + n_slots]
            node_h[s2] = node_h[s2 + n_slots]
        for r in range(n):
            if row_slot[r] >= 0:
                row_slot[r] -= n_slots
        n_slots = n_new

    # any slots still active at max depth become leaves
    for s in range(n_slots):
        t = slot_node[s]
        if node_h[s] + reg_lambda > 0.0:
            t_value[t] = learning_rate * (-node_g[s] / (node_h[s] + reg_lambda))
        else:
            t_value[t] = 0.0
        t_feat[t] = LEAF
    if n_nodes == 1:
        # no split cleared the gain bar: contribute nothing beyond the base score
        t_value[0] = 0.0
        t_feat[0] = LEAF
    return n_nodes


@njit(cache=True, nogil=True, inline="always")
def _accept(
    s, j, last, v, acc_g, acc_h, gm, hm, gt, ht, has_miss,
    reg_lambda, min_split_loss, sc_parent,
    bs_gain, bs_feat, bs_thr, bs_dleft, bs_gl, bs_hl,
):
    """Exact divided evaluation of a candidate that beat the incumbent bar.

    Scores both missing directions, prefers left on ties, and records the
    split when the divided gain is strictly above the incumbent. Returns
    the updated rejection bar.
    """
    score_r = -1.0
    dl = acc_h + reg_lambda
    dr = ht - acc_h + reg_lambda
    if dl > 0.0 and dr > 0.0:
        gr = gt - acc_g
        score_r = acc_g * acc_g / dl + gr * gr / dr
    if has_miss:
        score_l = -1.0
        gl2 = acc_g + gm
        hl2 = acc_h + hm
        dl2 = hl2 + reg_lambda
        dr2 = ht - hl2 + reg_lambda
        if dl2 > 0.0 and dr2 > 0.0:
            gr2 = gt - gl2
            score_l = gl2 * gl2 / dl2 + gr2 * gr2 / dr2
    else:
        score_l = score_r
    if score_l >= score_r:
        score = score_l
        go_left = np.uint8(1)
        cand_gl = acc_g + gm
        cand_hl = acc_h + hm
    else:
        score = score_r
        go_left = np.uint8(0)
        cand_gl = acc_g
        cand_hl = acc_h
    gain = 0.5 * (score - sc_parent[s]) - min_split_loss
    if score >= 0.0 and gain > bs_gain[s]:
        thr = 0.5 * (last + v)
        if not (last < thr and thr <= v):
            thr = v
        bs_gain[s] = gain
        bs_feat[s] = j
        bs_thr[s] = thr
        bs_dleft[s] = go_left
        bs_gl[s] = cand_gl
        bs_hl[s] = cand_hl
    return 2.0 * (bs_gain[s] + min_split_loss) + sc_parent[s]


@njit(cache=True, nogil=True)
def add_tree_margins(x, n, m, t_feat, t_thr, t_dleft, t_left, t_right, t_value, out):
    """Add one tree's leaf values to the margin vector for every row of x."""
    for r in range(n):
        node = 0
        while t_feat[node] >= 0:
            v = x[r * m + t_feat[node]]
            if np.isnan(v):
                go_left = t_dleft[node] == 1
            else:
                go_left = v < t_thr[node]
            node = t_left[node] if go_left else t_right[node]
        out[r] += t_value[node]


@njit(cache=True, nogil=True)
def tree_leaf_of(x_row, t_feat, t_thr, t_dleft, t_left, t_right):
    node = 0
    while t_feat[node] >= 0:
        v = x_row[t_feat[node]]
        if np.isnan(v):
            go_left = t_dleft[node] == 1
        else:
            go_left = v < t_thr[node]
        node = t_left[node] if go_left else t_right[node]
    return node


@njit(cache=True, nogil=True)
def shap_single(
    x,                # (m,) float64 explicand
    bg,               # (b*m,) float64 background rows
    b, m,
    leaf_ptr,         # (L+1,) int64 CSR offsets into path arrays
    leaf_w,           # (L,) float64 leaf weights
    path_feat,        # (E,) int32
    path_lo, path_hi,  # (E,) float64, satisfied iff lo <= v < hi
    path_miss,        # (E,) uint8, 1 if NaN follows this leaf's path
    satz,             # (b*E,) uint8 background satisfaction, z-major
    wu,               # (d+1, d+1) float64: (u-1)! v! / (u+v)!  for u >= 1
    phi,              # (m,) float64 out, zeroed by caller
    satx_buf,         # (max_path,) uint8 scratch
):
    """Interventional Shapley values of one explicand, summed over all leaves.

    Returns the base contribution (mean over background of the leaf mass
    reachable with no explicand feature fixed).
    """
    base = 0.0
    n_entries = path_feat.shape[0]
    n_leaves = leaf_ptr.shape[0] - 1
    for leaf in range(n_leaves):
        s = leaf_ptr[leaf]
        e = leaf_ptr[leaf + 1]
        plen = e - s
        w = leaf_w[leaf]
        for i in range(plen):
            v = x[path_feat[s + i]]
            if np.isnan(v):
                satx_buf[i] = path_miss[s + i]
            else:
                satx_buf[i] = 1 if (path_lo[s + i] <= v and v < path_hi[s + i]) else 0
        for zi in range(b):
            zoff = zi * n_entries + s
            u = 0
            nv = 0
            dead = False
            for i in range(plen):
                sx = satx_buf[i]
                sz = satz[zoff + i]
                if sx == 1:
                    if sz == 0:
                        u += 1
                elif sz == 1:
                    nv += 1
                else:
                    dead = True
                    break
            if dead:
                continue
            if u == 0:
                base += w
            for i in range(plen):
                sx = satx_buf[i]
                sz = satz[zoff + i]
                if sx == 1 and sz == 0:
                    phi[path_feat[s + i]] += w * wu[u, nv]
                elif sx == 0 and sz == 1:
                    phi[path_feat[s + i]] -= w * wu[nv, u]
    inv_b = 1.0 / b
    for j in range(m):
        phi[j] *= inv_b
    return base * inv_b


@njit(cache=True, nogil=True)
def fill_satz(bg, b, m, path_feat, path_lo, path_hi, path_miss, satz):
    """Background satisfaction bits, laid out row-major per background sample."""
    n_entries = path_feat.shape[0]
    for zi in range(b):
        zoff = zi * n_entries
        for i in range(n_entries):
            v = bg[zi * m + path_feat[i]]
            if np.isnan(v):
                satz[zoff + i] = path_miss[i]
            else:
                satz[zoff + i] = 1 if (path_lo[i] <= v and v < path_hi[i]) else 0
