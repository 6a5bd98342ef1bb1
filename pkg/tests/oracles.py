"""Slow, obviously-correct reference implementations used by the tests."""

import itertools


def dominated_by(a, b):
    """True when b is at least as good as a everywhere and strictly better somewhere."""
    ge = b.epsilon <= a.epsilon and b.utility >= a.utility and b.fairness_violation <= a.fairness_violation
    gt = b.epsilon < a.epsilon or b.utility > a.utility or b.fairness_violation < a.fairness_violation
    return ge and gt


def brute_force_front(points):
    """Indices of points that no other point dominates (all-pairs check)."""
    return [i for i, a in enumerate(points) if not any(dominated_by(a, b) for b in points)]


def best_threshold_pair(scores, labels, groups, target):
    """Exhaustive search over every distinct way to cut each group's scores.

    Returns (best gap, best overall correct count among gap minimisers).
    """
    cells = {}
    for g in (0, 1):
        rows = [(s, y) for s, y, a in zip(scores, labels, groups) if a == g]
        cuts = sorted({s for s, _ in rows}) + [float("inf")]
        options = []
        for c in cuts:
            pred = [int(s >= c) for s, _ in rows]
            ys = [y for _, y in rows]
            pos = sum(pred) / len(pred)
            neg = [p for p, y in zip(pred, ys) if y == 0]
            posl = [p for p, y in zip(pred, ys) if y == 1]
            fpr = sum(neg) / len(neg) if neg else None
            tpr = sum(posl) / len(posl) if posl else None
            correct = sum(int(p == y) for p, y in zip(pred, ys))
            options.append((pos, fpr, tpr, correct))
        cells[g] = options
    best = None
    for a, b in itertools.product(cells[0], cells[1]):
        if target == "demographic_parity":
            gap = abs(a[0] - b[0])
        else:
            gap = max(abs(a[1] - b[1]), abs(a[2] - b[2]))
        key = (round(gap, 12), -(a[3] + b[3]))
        if best is None or key < best:
            best = key
    return best[0], -best[1]


def brute_force_front_array(keys):
    """All-pairs nondominated mask for rows (epsilon, utility, violation), vectorised.

    Row j dominates row i when it is no worse in every coordinate and
    strictly better in one.
    """
    import numpy as np

    k = np.asarray(keys, dtype=float)
    e, u, f = k[:, 0], k[:, 1], k[:, 2]
    no_worse = (e[None, :] <= e[:, None]) & (u[None, :] >= u[:, None]) & (f[None, :] <= f[:, None])
    better = (e[None, :] < e[:, None]) | (u[None, :] > u[:, None]) | (f[None, :] < f[:, None])
    return ~np.any(no_worse & better, axis=1)
