"""One-dimensional search helpers."""
from __future__ import annotations

import math

_INVPHI = (math.sqrt(5.0) - 1.0) / 2.0


def golden_section_min(f, a, b, rtol=1e-8, atol=0.0, maxiter=500):
    """Minimize a unimodal ``f`` on ``[a, b]``.

    Only interior points are evaluated, so ``f`` may be undefined at the ends.
    Stops when the bracket is below ``rtol * max(|a|, |b|) + atol``.
    Returns ``(x, f(x))`` for the best point seen.
    """
    if b < a:
        a, b = b, a
    x1 = b - _INVPHI * (b - a)
    x2 = a + _INVPHI * (b - a)
    f1, f2 = f(x1), f(x2)
    for _ in range(maxiter):
        if b - a <= rtol * max(abs(a), abs(b)) + atol:
            break
        if f1 <= f2:
            b, x2, f2 = x2, x1, f1
            x1 = b - _INVPHI * (b - a)
            f1 = f(x1)
        else:
            a, x1, f1 = x1, x2, f2
            x2 = a + _INVPHI * (b - a)
            f2 = f(x2)
    return (x1, f1) if f1 <= f2 else (x2, f2)


def bisect_increasing(pred, lo, hi, rtol=1e-12, maxiter=200, geometric=False):
    """Smallest x in [lo, hi] with ``pred(x)`` true, for a monotone predicate.

    ``pred(lo)`` is assumed false and ``pred(hi)`` true. Returns ``hi`` of the
    final bracket.
    """
    for _ in range(maxiter):
        if hi - lo <= rtol * abs(hi):
            break
        mid = math.sqrt(lo * hi) if geometric and lo > 0 else 0.5 * (lo + hi)
        if pred(mid):
            hi = mid
        else:
            lo = mid
    return hi
