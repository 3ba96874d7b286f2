"""Rank statistics for comparing replicated runs."""

from __future__ import annotations

import math

import numpy as np

EXACT_MAX_N = 16


def _midranks(values):
    """1-based ranks with ties given the average of the ranks they span."""
    order = np.argsort(values, kind="mergesort")
    ranks = np.empty(len(values))
    sorted_vals = values[order]
    i = 0
    while i < len(values):
        j = i
        while j + 1 < len(values) and sorted_vals[j + 1] == sorted_vals[i]:
            j += 1
        ranks[order[i:j + 1]] = (i + j) / 2 + 1
        i = j + 1
    return ranks


def _subset_sum_counts(weights, k):
    """counts[s] = number of size-k subsets of integer ``weights`` summing to s."""
    total = int(sum(weights))
    dp = np.zeros((k + 1, total + 1), dtype=object)
    dp[0, 0] = 1
    for w in weights:
        for size in range(k, 0, -1):
            dp[size, w:] = dp[size, w:] + dp[size - 1, :total + 1 - w]
    return dp[k]


def mann_whitney_u(a, b, exact=None):
    """Two-sided Mann-Whitney U test.

    Returns ``(U, p)`` where U counts pairs with ``a > b`` (ties count one
    half). The p-value is exact, by enumerating rank assignments, when the
    combined size is at most 16; otherwise a tie-corrected normal
    approximation with continuity correction is used.
    """
    a = np.asarray(a, dtype=float).ravel()
    b = np.asarray(b, dtype=float).ravel()
    if a.size == 0 or b.size == 0:
        raise ValueError("both samples must be non-empty")
    if not (np.all(np.isfinite(a)) and np.all(np.isfinite(b))):
        raise ValueError("samples must be finite")
    n1, n2 = a.size, b.size
    n = n1 + n2
    ranks = _midranks(np.concatenate([a, b]))
    u = float(ranks[:n1].sum() - n1 * (n1 + 1) / 2)
    mean_u = n1 * n2 / 2
    if exact is None:
        exact = n <= EXACT_MAX_N

    if exact:
        doubled = np.rint(2 * ranks).astype(int)
        counts = _subset_sum_counts(doubled, n1)
        offset = n1 * (n1 + 1)  # doubled rank sum -> doubled U
        obs = abs(2 * u - 2 * mean_u)
        extreme = 0
        for s in np.flatnonzero(counts):
            if abs(s - offset - 2 * mean_u) >= obs - 1e-9:
                extreme += counts[s]
        p = extreme / math.comb(n, n1)
        return u, float(min(1.0, p))

    _, tie_sizes = np.unique(ranks, return_counts=True)
    tie_term = float(np.sum(tie_sizes ** 3 - tie_sizes)) / (n * (n - 1))
    var = n1 * n2 / 12 * ((n + 1) - tie_term)
    if var <= 0:
        return u, 1.0
    z = max(0.0, abs(u - mean_u) - 0.5) / math.sqrt(var)
    return u, float(min(1.0, math.erfc(z / math.sqrt(2))))


def bonferroni(p_values, m=None):
    """Bonferroni adjustment: each p becomes ``min(1, p * m)``."""
    p = np.atleast_1d(np.asarray(p_values, dtype=float))
    m = len(p) if m is None else int(m)
    if m < len(p):
        raise ValueError("m must be at least the number of p-values")
    if np.any((p < 0) | (p > 1)):
        raise ValueError("p-values must lie in [0, 1]")
    return np.minimum(1.0, p * m)
