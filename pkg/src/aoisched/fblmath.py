"""Finite-blocklength coding math for a single short-packet transmission.

All functions accept scalars or numpy arrays and broadcast. Blocklengths are
real-valued here; integer rounding lives in :mod:`aoisched.cluster`.

The packet error probability follows the normal approximation

    eps = Q( sqrt(m_r / V(gamma)) * (C(gamma) - d / m_r) * ln 2 )

with ``C = log2(1 + gamma)`` and ``V = 1 - (1 + gamma)**-2``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import erfc, ndtri

from .errors import DegenerateSnr

LN2 = math.log(2.0)
EPS_FLOOR = 1e-15
_INV_SQRT2 = 1.0 / math.sqrt(2.0)
_INV_SQRT2PI = 1.0 / math.sqrt(2.0 * math.pi)
# Lower bound on the rate condition evaluated at gamma = 1.
RATE_BOUND_AT_UNIT_SNR = (16.0 - 18.0 * LN2) / (87.0 - 12.0 * LN2)


def _out(x):
    x = np.asarray(x)
    return float(x) if x.ndim == 0 else x


def q_func(x):
    """Gaussian tail probability Q(x) = P(N(0,1) > x)."""
    return _out(0.5 * erfc(np.asarray(x, dtype=float) * _INV_SQRT2))


def q_inv(p):
    """Inverse of :func:`q_func` on (0, 1)."""
    return _out(-ndtri(np.asarray(p, dtype=float)))


def normal_pdf(x):
    x = np.asarray(x, dtype=float)
    return _out(_INV_SQRT2PI * np.exp(-0.5 * x * x))


def shannon_capacity(gamma):
    """AWGN capacity in bits per symbol."""
    return _out(np.log1p(np.asarray(gamma, dtype=float)) / LN2)


def dispersion(gamma):
    """AWGN channel dispersion 1 - (1 + gamma)^-2, computed without cancellation."""
    return _out(-np.expm1(-2.0 * np.log1p(np.asarray(gamma, dtype=float))))


def _check_snr(gamma):
    if np.any(np.asarray(gamma) <= 0):
        raise DegenerateSnr("SNR must be strictly positive")


def omega(gamma, m_r, d):
    """Argument of the Q-function in the error probability.

    Positive when the coding rate ``d / m_r`` is below capacity, zero on the
    capacity boundary and negative above it.
    """
    _check_snr(gamma)
    gamma = np.asarray(gamma, dtype=float)
    m_r = np.asarray(m_r, dtype=float)
    # ln2 * (C - d/m) == ln(1+gamma) - d*ln2/m
    w = np.sqrt(m_r / dispersion(gamma)) * (np.log1p(gamma) - d * LN2 / m_r)
    return _out(w)


def clamp_eps(eps):
    return _out(np.clip(eps, EPS_FLOOR, 1.0 - EPS_FLOOR))


def error_probability(gamma, m_r, d):
    """Packet error probability, clamped to ``[1e-15, 1 - 1e-15]``.

    Raises :class:`DegenerateSnr` for ``gamma <= 0``.
    """
    return clamp_eps(q_func(omega(gamma, m_r, d)))


def convexity_condition(gamma, m_r, d):
    """Sufficient condition for joint convexity of eps in (m_c, m_r).

    True iff ``C*m_r + 3d >= 4/ln 2`` and
    ``d/m_r >= (16 - 18 ln(1+gamma)) / (87 - 12 ln 2)``.
    """
    gamma = np.asarray(gamma, dtype=float)
    m_r = np.asarray(m_r, dtype=float)
    first = shannon_capacity(gamma) * m_r + 3.0 * d >= 4.0 / LN2
    bound = (16.0 - 18.0 * np.log1p(gamma)) / (87.0 - 12.0 * LN2)
    second = d / m_r >= bound
    res = np.logical_and(first, second)
    return bool(res) if res.ndim == 0 else res


def omega_derivatives(z, m_c, m_r, d):
    """omega and its first/second partials w.r.t. (m_c, m_r) with gamma = z*m_c/m_r.

    Returns ``(w, (w_c, w_r), (w_cc, w_cr, w_rr))``; every entry broadcasts
    over the inputs.
    """
    z = np.asarray(z, dtype=float)
    c = np.asarray(m_c, dtype=float)
    r = np.asarray(m_r, dtype=float)
    g = z * c / r
    _check_snr(g)
    s = 1.0 + g
    L = np.log1p(g)
    V = dispersion(g)
    W = V ** -0.5
    W_g = -(s ** -3) * V ** -1.5
    W_gg = 3.0 * s ** -4 * V ** -1.5 + 3.0 * s ** -6 * V ** -2.5
    kappa = d * LN2
    sq = np.sqrt(r)
    A = sq * L - kappa / sq
    A_g = sq / s
    A_gg = -sq / s ** 2
    A_m = 0.5 * L / sq + 0.5 * kappa / (sq * r)
    A_mm = -0.25 * L / (sq * r) - 0.75 * kappa / (sq * r * r)
    A_gm = 0.5 / (sq * s)

    w = W * A
    w_g = W_g * A + W * A_g
    w_m = W * A_m
    w_gg = W_gg * A + 2.0 * W_g * A_g + W * A_gg
    w_gm = W_g * A_m + W * A_gm
    w_mm = W * A_mm

    g_c = z / r
    g_r = -g / r
    g_cr = -z / r ** 2
    g_rr = 2.0 * g / r ** 2

    w_c = w_g * g_c
    w_r = w_g * g_r + w_m
    w_cc = w_gg * g_c ** 2
    w_cr = w_gg * g_c * g_r + w_gm * g_c + w_g * g_cr
    w_rr = w_gg * g_r ** 2 + 2.0 * w_gm * g_r + w_g * g_rr + w_mm
    return w, (w_c, w_r), (w_cc, w_cr, w_rr)


def eps_derivatives(z, m_c, m_r, d):
    """Unclamped eps = Q(omega) with gradient and Hessian in (m_c, m_r)."""
    w, (w_c, w_r), (w_cc, w_cr, w_rr) = omega_derivatives(z, m_c, m_r, d)
    e = 0.5 * erfc(w * _INV_SQRT2)
    e1 = -_INV_SQRT2PI * np.exp(-0.5 * w * w)  # dQ/dw
    e2 = -w * e1  # d2Q/dw2
    grad = (e1 * w_c, e1 * w_r)
    hess = (
        e2 * w_c * w_c + e1 * w_cc,
        e2 * w_c * w_r + e1 * w_cr,
        e2 * w_r * w_r + e1 * w_rr,
    )
    return e, grad, hess


@dataclass(frozen=True)
class FblPoint:
    """One transmission: linear SNR, blocklength in symbols, packet size in bits."""

    gamma: float
    m_r: float
    d: int

    def __post_init__(self):
        if not self.gamma > 0:
            raise DegenerateSnr(f"gamma must be > 0, got {self.gamma}")
        if not self.m_r > 0 or not math.isfinite(self.m_r):
            raise ValueError(f"m_r must be finite and > 0, got {self.m_r}")
        if int(self.d) != self.d or self.d < 1:
            raise ValueError(f"d must be a positive integer, got {self.d}")

    @property
    def rate(self) -> float:
        return self.d / self.m_r

    def omega(self) -> float:
        return omega(self.gamma, self.m_r, self.d)

    def error_probability(self) -> float:
        return error_probability(self.gamma, self.m_r, self.d)

    def convexity_condition(self) -> bool:
        return convexity_condition(self.gamma, self.m_r, self.d)
