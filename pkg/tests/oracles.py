"""Independent reference implementations shared by the test suite.

These stay deliberately naive (direct sums, full enumeration, arbitrary
precision finite differences) so they cannot share a bug with the library code
they check.
"""
import mpmath
import numpy as np

from runwaygrip import gbt
from runwaygrip.gbt import LossKind


def loss_fn_mp(loss, y, f):
    if loss is LossKind.LOGISTIC:
        p = 1 / (1 + mpmath.exp(-f))
        return -y * mpmath.log(p) - (1 - y) * mpmath.log(1 - p)
    return (y - f) ** 2


def fd_grad_hess(loss, y, f, eps=1e-6):
    """Central finite differences of the loss at step eps.

    Evaluated in 50-digit arithmetic so the step-squared second difference
    is not drowned by float64 cancellation.
    """
    with mpmath.workdps(50):
        f = mpmath.mpf(f)
        e = mpmath.mpf(eps)
        lp = loss_fn_mp(loss, y, f + e)
        lm = loss_fn_mp(loss, y, f - e)
        l0 = loss_fn_mp(loss, y, f)
        return float((lp - lm) / (2 * e)), float((lp - 2 * l0 + lm) / (e * e))


def enumerate_best_split(col, g, h, lam, gamma):
    """Split oracle: try every boundary and both missing directions directly."""
    col = np.asarray(col, float)
    g = np.asarray(g, float)
    h = np.asarray(h, float)
    valid = ~np.isnan(col)
    vals = np.unique(col[valid])
    if len(vals) < 2:
        return None
    g_tot, h_tot = g.sum(), h.sum()
    parent = g_tot**2 / (h_tot + lam) if h_tot + lam > 0 else 0.0
    best = None
    for i in range(len(vals) - 1):
        thr = 0.5 * (vals[i] + vals[i + 1])
        if not (vals[i] < thr <= vals[i + 1]):
            thr = float(vals[i + 1])
        for go_left in (True, False):
            left = valid & (col < thr)
            gl = g[left].sum() + (g[~valid].sum() if go_left else 0.0)
            hl = h[left].sum() + (h[~valid].sum() if go_left else 0.0)
            gr = g_tot - gl
            hr = h_tot - hl
            if hl + lam <= 0 or hr + lam <= 0:
                continue
            gain = 0.5 * (gl**2 / (hl + lam) + gr**2 / (hr + lam) - parent) - gamma
            if gain > 0 and (best is None or gain > best.gain):
                best = gbt.BestSplit(threshold=thr, gain=gain, default_left=go_left)
    return best


def pairwise_auc(scores, labels):
    """Concordance-counting oracle: ties count half."""
    scores = np.asarray(scores, float)
    labels = np.asarray(labels).astype(bool)
    pos = scores[labels]
    neg = scores[~labels]
    wins = 0.0
    for p in pos:
        for q in neg:
            if p > q:
                wins += 1.0
            elif p == q:
                wins += 0.5
    return wins / (len(pos) * len(neg))
