"""Analytic time-average age of information under periodic updates.

A device sends one update per round of ``M = m_c + m_r`` symbols and each
update fails independently with probability ``eps``. The sample delivered at
the end of a round was taken at the start of that round, so the age just after
a successful delivery is ``M``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import fblmath
from .fblmath import EPS_FLOOR
from .errors import DivergentAoI


def _out(x):
    x = np.asarray(x)
    return float(x) if x.ndim == 0 else x


def event_probability(eps, k):
    """Probability that the freshest delivered sample is ``k`` rounds old (k >= 1).

    The newest delivered update is the k-th one back: it succeeded and the
    ``k - 1`` after it failed.
    """
    if np.any(np.asarray(k) < 1):
        raise ValueError("k counts rounds back and starts at 1")
    eps = np.asarray(eps, dtype=float)
    return _out(eps ** (np.asarray(k) - 1) * (1.0 - eps))


def event_area(M, k):
    """Age accumulated over one round whose starting age is ``k * M``: (k + 1/2) M^2."""
    M = np.asarray(M, dtype=float)
    return _out((np.asarray(k) + 0.5) * M * M)


def avg_aoi(M, eps):
    """Expected time-average age M * (1/2 + 1/(1 - eps)) in symbols."""
    eps = np.asarray(eps, dtype=float)
    if np.any(eps >= 1.0 - EPS_FLOOR):
        raise DivergentAoI("error probability too close to 1; average age diverges")
    return _out(np.asarray(M, dtype=float) * (0.5 + 1.0 / (1.0 - eps)))


def series_aoi(M: float, eps: float, rtol: float = 1e-14) -> float:
    """Average age by summing round areas weighted by event probabilities.

    Independent of the closed form in :func:`avg_aoi`; used to cross-check it.
    """
    if eps == 0.0:
        return event_area(M, 1) / M
    n = int(math.ceil(math.log(rtol) / math.log(eps))) + 2
    k = np.arange(1, n + 1)
    terms = event_probability(eps, k) * event_area(M, k) / M
    return float(math.fsum(terms))


def aoi_from_durations(z, m_c, m_r, d):
    """Average age for a device with time-wrapped gain ``z`` and round (m_c, m_r)."""
    gamma = np.asarray(z, dtype=float) * np.asarray(m_c, dtype=float) / np.asarray(m_r, dtype=float)
    eps = fblmath.error_probability(gamma, m_r, d)
    return avg_aoi(np.asarray(m_c) + np.asarray(m_r), eps)


@dataclass(frozen=True)
class UpdateRound:
    m_c: float
    m_r: float
    eps: float

    def __post_init__(self):
        if self.m_c < 0 or not self.m_r > 0:
            raise ValueError("need m_c >= 0 and m_r > 0")
        if not 0.0 <= self.eps < 1.0:
            raise ValueError("eps must be in [0, 1)")

    @property
    def M(self) -> float:
        return self.m_c + self.m_r

    @property
    def avg_aoi(self) -> float:
        return avg_aoi(self.M, self.eps)
