"""Exact binomial confidence intervals."""

from __future__ import annotations

from scipy.special import betainc

from ..errors import DomainError


def _bisect(fn, target, increasing, tol=1e-12, max_iter=200):
    lo, hi = 0.0, 1.0
    for _ in range(max_iter):
        mid = 0.5 * (lo + hi)
        if (fn(mid) < target) == increasing:
            lo = mid
        else:
            hi = mid
        if hi - lo < tol:
            break
    return 0.5 * (lo + hi)


def clopper_pearson(k: int, n: int, confidence: float = 0.95) -> tuple:
    """Two-sided Clopper-Pearson interval for ``k`` successes in ``n`` trials.

    The bounds are Beta quantiles, found by bisection on the regularized
    incomplete beta function.
    """
    if int(n) != n or n < 1:
        raise DomainError(f"n must be a positive integer, got {n}")
    if int(k) != k or not 0 <= k <= n:
        raise DomainError(f"k must be an integer in [0, n], got {k}")
    if not 0.0 < confidence < 1.0:
        raise DomainError(f"confidence must be in (0, 1), got {confidence}")
    k, n = int(k), int(n)
    alpha = 1.0 - confidence
    # lower: alpha/2 quantile of Beta(k, n - k + 1)
    lower = 0.0 if k == 0 else _bisect(lambda p: betainc(k, n - k + 1, p), alpha / 2, True)
    # upper: 1 - alpha/2 quantile of Beta(k + 1, n - k)
    upper = 1.0 if k == n else _bisect(lambda p: betainc(k + 1, n - k, p), 1.0 - alpha / 2, True)
    return lower, upper


def one_sided_bounds(k: int, n: int, confidence: float = 0.95) -> tuple:
    """One-sided (lower, upper) bounds, each at ``confidence``."""
    return clopper_pearson(k, n, 2.0 * confidence - 1.0)
