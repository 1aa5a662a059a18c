"""Solvers for the min-max AoI allocation and its single-device variants.

The allocation is order independent: a common charge ``m_c`` followed by one
update slot ``m_r[i]`` per device, so the round is ``M = m_c + sum(m_r)`` and
device ``i`` charges for ``M - m_r[i]`` symbols (it harvests while the others
transmit).

``solve_minmax`` bisects on the target age. For a fixed target every
constraint ``M - target * q(eps_i) <= 0`` with ``q(eps) = 2(1 - eps)/(3 - eps)``
is convex (concave ``q`` of convex ``eps``), so feasibility is decided by a
phase-I log-barrier method with analytic derivatives of eps through omega.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import NamedTuple, Optional, Sequence

import numpy as np

from . import fblmath
from ._search import bisect_increasing, golden_section_min
from .aoimodel import avg_aoi
from .errors import Infeasible
from .fblmath import q_inv
from .linkmodel import Device, SystemParams


@dataclass
class SolverOptions:
    bisect_rtol: float = 1e-6
    barrier_gap: float = 1e-8
    barrier_growth: float = 20.0
    newton_tol: float = 1e-10
    max_newton: int = 200
    golden_rtol: float = 1e-10
    m_cap: float = 1e7
    saturation_rtol: float = 1e-4
    polish: bool = True
    debug_checks: bool = False


@dataclass(frozen=True)
class AllocationPolicy:
    """Common charge ``m_c`` plus per-device update durations ``m_r``."""

    m_c: float
    m_r: tuple

    def __post_init__(self):
        object.__setattr__(self, "m_c", float(self.m_c))
        object.__setattr__(self, "m_r", tuple(float(v) for v in self.m_r))
        if not len(self.m_r):
            raise ValueError("policy needs at least one device")
        if not (math.isfinite(self.m_c) and self.m_c >= 0):
            raise ValueError(f"m_c must be finite and >= 0, got {self.m_c}")
        if not all(math.isfinite(v) and v > 0 for v in self.m_r):
            raise ValueError("every m_r must be finite and > 0")

    @property
    def M(self) -> float:
        return self.m_c + math.fsum(self.m_r)

    @property
    def m_c_per_device(self) -> np.ndarray:
        """Charge time of each device: the common charge plus everyone else's slots."""
        return self.M - np.asarray(self.m_r)

    def permuted(self, order: Sequence[int]) -> "AllocationPolicy":
        return AllocationPolicy(self.m_c, tuple(self.m_r[i] for i in order))


@dataclass
class SolveReport:
    policy: Optional[AllocationPolicy]
    delta_max: float
    gamma: np.ndarray
    eps: np.ndarray
    aoi: np.ndarray
    saturated: bool
    status: str  # optimal | infeasible | condition_violated
    capacity: Optional[int] = None
    info: dict = field(default_factory=dict)

    @property
    def per_device(self) -> list:
        return list(zip(self.gamma.tolist(), self.eps.tolist(), self.aoi.tolist()))


class SingleSolution(NamedTuple):
    m_c: float
    m_r: float
    aoi: float


def _gains(devices) -> np.ndarray:
    return np.array([dv.z for dv in devices], dtype=float)


def evaluate_policy(params: SystemParams, devices, policy: AllocationPolicy,
                    options: Optional[SolverOptions] = None, status: str = "optimal", **info) -> SolveReport:
    """Per-device SNR, error probability and age for a given allocation."""
    opts = options or SolverOptions()
    z = _gains(devices)
    m_r = np.asarray(policy.m_r)
    if len(m_r) != len(z):
        raise ValueError("policy and device list differ in length")
    mc = policy.m_c_per_device
    gamma = z * mc / m_r
    eps = fblmath.error_probability(np.maximum(gamma, 1e-300), m_r, params.d_bits)
    aoi = avg_aoi(policy.M, eps)
    if status == "optimal" and not np.all(fblmath.convexity_condition(gamma, m_r, params.d_bits)):
        status = "condition_violated"
    return SolveReport(
        policy=policy,
        delta_max=float(np.max(aoi)),
        gamma=np.atleast_1d(gamma),
        eps=np.atleast_1d(eps),
        aoi=np.atleast_1d(aoi),
        saturated=bool(policy.m_c <= opts.saturation_rtol * policy.M),
        status=status,
        info=dict(info),
    )


def gradient_of_eps(device: Device, m_c, m_r, d: int):
    """Analytic (d eps/d m_c, d eps/d m_r) of the unclamped error probability."""
    _, grad, _ = fblmath.eps_derivatives(device.z, m_c, m_r, d)
    return tuple(float(g) if np.ndim(g) == 0 else g for g in grad)


# --------------------------------------------------------------------------
# single device


def _omega_line(z: float, M: float, m: float, d: int) -> float:
    return fblmath.omega(z * (M - m) / m, m, d)


def best_split(z: float, M: float, d: int, gamma_th: float, rtol: float = 1e-10):
    """Update duration in (0, M) that minimizes eps for a fixed round ``M``.

    SNR >= gamma_th restricts the update to ``m_r <= z M / (z + gamma_th)``.
    Returns ``(m_r, omega)``; eps is ``Q(omega)``.
    """
    upper = z * M / (z + gamma_th)
    m, neg_w = golden_section_min(lambda m: -_omega_line(z, M, m, d), 0.0, upper, rtol=rtol)
    w_edge = _omega_line(z, M, upper, d)
    if w_edge > -neg_w:
        return upper, w_edge
    return m, -neg_w


def solve_fixed_round(params: SystemParams, device: Device, M_total: float,
                      options: Optional[SolverOptions] = None) -> SingleSolution:
    """Minimize one device's age when its round length is fixed to ``M_total``.

    With ``M`` fixed the age only depends on eps, so this is a 1-D search over
    the split between charging and updating.
    """
    opts = options or SolverOptions()
    if not M_total > 0:
        raise Infeasible(f"round length must be > 0, got {M_total}")
    m, w = best_split(device.z, M_total, params.d_bits, params.gamma_th, rtol=min(opts.golden_rtol, 1e-8))
    if w < q_inv(params.eps_max) - 1e-9:
        raise Infeasible(
            f"device {device.id}: best eps {fblmath.q_func(w):.3g} in a round of {M_total:.6g} symbols "
            f"exceeds eps_max={params.eps_max}"
        )
    eps = fblmath.clamp_eps(fblmath.q_func(w))
    return SingleSolution(M_total - m, m, avg_aoi(M_total, eps))


def _min_feasible_round(z: float, d: int, params: SystemParams, opts: SolverOptions) -> float:
    """Shortest round in which the best split meets eps_max.

    The best achievable omega grows with M (scaling a split keeps the SNR and
    lengthens the code), so a bisection on M applies.
    """
    thr = q_inv(params.eps_max)

    def ok(M):
        return best_split(z, M, d, params.gamma_th, opts.golden_rtol)[1] >= thr

    hi = float(d)
    while not ok(hi):
        hi *= 2.0
        if hi > opts.m_cap:
            raise Infeasible(f"no round below {opts.m_cap:g} symbols meets eps_max={params.eps_max} (z={z:.3g})")
    lo = hi / 2.0
    while ok(lo):
        hi, lo = lo, lo / 2.0
        if lo < 1e-9:
            return hi
    return bisect_increasing(ok, lo, hi, rtol=1e-13, geometric=True)


def solve_single(params: SystemParams, device: Device, options: Optional[SolverOptions] = None) -> SingleSolution:
    """Minimum-age (m_c, m_r) for a device alone in the cluster.

    The optimal age as a function of the round length is unimodal, so a
    golden-section search over log M wraps :func:`best_split`. The search
    interval runs from the shortest feasible round to ``age(M_min) / 1.5``,
    beyond which even an error-free round is worse.
    """
    opts = options or SolverOptions()
    z, d = device.z, params.d_bits
    M_min = _min_feasible_round(z, d, params, opts)

    def age(M):
        _, w = best_split(z, M, d, params.gamma_th, opts.golden_rtol)
        return avg_aoi(M, fblmath.clamp_eps(fblmath.q_func(w)))

    a_min = age(M_min)
    M_hi = a_min / 1.5
    best_M, best_a = M_min, a_min
    if M_hi > M_min * (1.0 + 1e-12):
        lx, la = golden_section_min(lambda s: age(math.exp(s)), math.log(M_min), math.log(M_hi),
                                    rtol=0.0, atol=1e-11)
        if la < best_a:
            best_M, best_a = math.exp(lx), la
    m, _ = best_split(z, best_M, d, params.gamma_th, opts.golden_rtol)
    return SingleSolution(best_M - m, m, best_a)


# --------------------------------------------------------------------------
# min-max over a cluster


class _Problem:
    """Constraint bundle for the phase-I feasibility problem at a fixed target age.

    Works in scaled variables ``y = x / scale`` with ``x = (m_c, m_r[0..I-1])``.
    """

    def __init__(self, params: SystemParams, z: np.ndarray, scale: float):
        self.z = z
        self.I = len(z)
        self.n = self.I + 1
        self.d = params.d_bits
        self.thr = q_inv(params.eps_max)
        self.kappa = z / (z + params.gamma_th)
        self.scale = scale
        self.eps_max = params.eps_max
        self.gamma_th = params.gamma_th
        n, I = self.n, self.I
        self.U = np.ones(n)
        self.B = np.zeros((I, n))
        self.B[np.arange(I), np.arange(1, n)] = 1.0
        self.A = self.U[None, :] - self.B  # gradient of m_c,i in x

    def split(self, y):
        x = y * self.scale
        M = x.sum()
        m_r = x[1:]
        return x, M, M - m_r, m_r

    def _map(self, gc, gr, hcc, hcr, hrr):
        """Gradient/Hessian w.r.t. x from partials in (m_c,i, m_r,i)."""
        A, B = self.A, self.B
        G = gc[:, None] * A + gr[:, None] * B
        H = (hcc[:, None, None] * A[:, :, None] * A[:, None, :]
             + hcr[:, None, None] * (A[:, :, None] * B[:, None, :] + B[:, :, None] * A[:, None, :])
             + hrr[:, None, None] * B[:, :, None] * B[:, None, :])
        return G, H

    def constraints(self, y, target):
        """Values, gradients (m x n) and Hessians (m x n x n) in y-space."""
        x, M, mc, mr = self.split(y)
        S = self.scale
        w, (wc, wr), (wcc, wcr, wrr) = fblmath.omega_derivatives(self.z, mc, mr, self.d)
        e, (ec, er), (ecc, ecr, err) = fblmath.eps_derivatives(self.z, mc, mr, self.d)
        q = 2.0 * (1.0 - e) / (3.0 - e)
        q1 = -4.0 / (3.0 - e) ** 2
        q2 = -8.0 / (3.0 - e) ** 3
        # age: M/target - q(eps)
        c_age = M / target - q
        G_age, H_age = self._map(-q1 * ec, -q1 * er,
                                 -(q2 * ec * ec + q1 * ecc), -(q2 * ec * er + q1 * ecr), -(q2 * er * er + q1 * err))
        G_age = G_age + self.U[None, :] / target
        # reliability: thr - omega
        c_eps = self.thr - w
        G_eps, H_eps = self._map(-wc, -wr, -wcc, -wcr, -wrr)
        # SNR: m_r,i - kappa_i * M  (linear)
        c_gam = (mr - self.kappa * M) / S
        G_gam = self.B - self.kappa[:, None] * self.U[None, :]
        c = np.concatenate([c_age, c_eps, c_gam])
        G = np.concatenate([G_age * S, G_eps * S, G_gam])
        H = np.concatenate([H_age * S * S, H_eps * S * S, np.zeros((self.I, self.n, self.n))])
        return c, G, H

    def check_convexity(self, y):
        """Assert eps Hessian PSD for every device inside the proven-convex region."""
        _, M, mc, mr = self.split(y)
        gamma = self.z * mc / mr
        e, _, (hcc, hcr, hrr) = fblmath.eps_derivatives(self.z, mc, mr, self.d)
        inside = (fblmath.convexity_condition(gamma, mr, self.d) & (gamma >= self.gamma_th)
                  & (e <= self.eps_max) & (e >= 1e-12))
        det = hcc * hrr - hcr * hcr
        tol = 1e-6 * (np.abs(hcc * hrr) + hcr * hcr)
        bad = inside & ((hcc < -1e-9 * np.abs(hcc)) | (hrr < -1e-9 * np.abs(hrr)) | (det < -tol))
        assert not np.any(bad), f"eps Hessian not PSD at accepted iterate (devices {np.nonzero(bad)[0]})"


def _phase1(prob: _Problem, target: float, y0: np.ndarray, opts: SolverOptions):
    """Decide whether all constraints can hold at ``target``.

    Minimizes s subject to c_j(y) <= s with a log barrier. Returns
    ``(feasible, y, s_lower_bound)``; ``y`` is strictly feasible when feasible.
    """
    y = y0.copy()
    c, _, _ = prob.constraints(y, target)
    if np.all(c < 0):
        return True, y, None
    s = float(c.max()) + 1.0
    m = len(c) + len(y)
    t = m / max(abs(s), 1.0)
    newton_steps = 0

    def barrier(yv, sv, tv):
        if np.any(yv <= 0):
            return math.inf, None
        cv, Gv, Hv = prob.constraints(yv, target)
        sl = sv - cv
        if np.any(sl <= 0) or not np.all(np.isfinite(cv)):
            return math.inf, None
        return tv * sv - np.log(sl).sum() - np.log(yv).sum(), (cv, Gv, Hv, sl)

    while True:
        for _ in range(opts.max_newton):
            F, pack = barrier(y, s, t)
            cv, Gv, Hv, sl = pack
            inv = 1.0 / sl
            inv2 = inv * inv
            gy = Gv.T @ inv - 1.0 / y
            gs = t - inv.sum()
            Hyy = np.einsum("j,jab->ab", inv, Hv) + (Gv.T * inv2) @ Gv + np.diag(1.0 / (y * y))
            Hys = -(Gv.T @ inv2)
            Hss = inv2.sum()
            n = len(y)
            H = np.empty((n + 1, n + 1))
            H[:n, :n] = Hyy
            H[:n, n] = Hys
            H[n, :n] = Hys
            H[n, n] = Hss
            g = np.concatenate([gy, [gs]])
            # eigenvalue clipping keeps the step a descent direction outside the convex region
            dscale = 1.0 / np.sqrt(np.maximum(np.abs(np.diag(H)), 1e-300))
            Hn = H * dscale[:, None] * dscale[None, :]
            lam, V = np.linalg.eigh(Hn)
            lam = np.maximum(np.abs(lam), 1e-12 * max(lam.max(), 1e-300))
            step = -dscale * (V @ ((V.T @ (g * dscale)) / lam))
            dec = -float(g @ step)
            if dec / 2.0 <= opts.newton_tol:
                break
            alpha = 1.0
            while alpha > 1e-14:
                yn = y + alpha * step[:n]
                sn = s + alpha * step[n]
                Fn, packn = barrier(yn, sn, t)
                if Fn <= F - 0.25 * alpha * dec:
                    break
                alpha *= 0.5
            else:
                break
            y, s = yn, sn
            newton_steps += 1
            if s < 0:
                if opts.debug_checks:
                    prob.check_convexity(y)
                return True, y, None
            if opts.debug_checks:
                prob.check_convexity(y)
        gap = m / t
        if s - gap > 0:
            return False, y, s - gap
        if gap < opts.barrier_gap:
            return False, y, None
        t *= opts.barrier_growth


def _initial_point(params: SystemParams, z: np.ndarray, opts: SolverOptions) -> np.ndarray:
    """Equal update slots, worst-device SNR at twice the threshold, inflated until eps <= eps_max."""
    I = len(z)
    d = params.d_bits
    r = float(d)
    frac = 2.0 * params.gamma_th / z.min() - (I - 1)
    m_c = r * frac if frac > 0 else 0.1 * r
    x = np.concatenate([[m_c], np.full(I, r)])
    thr = q_inv(params.eps_max)
    while True:
        if x.sum() > opts.m_cap:
            raise Infeasible(
                f"no allocation with round below {opts.m_cap:g} symbols meets eps_max={params.eps_max}, "
                f"gamma_th={params.gamma_th}"
            )
        M = x.sum()
        mc = M - x[1:]
        w = fblmath.omega(z * mc / x[1:], x[1:], d)
        if np.all(w >= thr + 1e-6):
            return x
        x = 2.0 * x


def _lowest_update(z, M, m_hi, theta, d):
    """Smallest m_r in (0, m_hi] with omega(M - m_r, m_r) >= theta."""
    m_pk, neg = golden_section_min(lambda m: -_omega_line(z, M, m, d), 0.0, m_hi, rtol=1e-12)
    if -neg < theta:
        m_pk = m_hi
    if _omega_line(z, M, m_pk, d) < theta:
        return None
    lo = m_pk
    while _omega_line(z, M, lo, d) >= theta:
        lo /= 2.0
        if lo < 1e-12 * M:
            return m_pk
    return bisect_increasing(lambda m: _omega_line(z, M, m, d) >= theta, lo, m_pk, rtol=1e-13)


def _polish(params: SystemParams, z: np.ndarray, x: np.ndarray, target: float) -> np.ndarray:
    """Shrink every update slot to the least that still meets ``target`` at the same M.

    Among allocations with equal worst-case age this prefers the largest
    common charge.
    """
    M = x.sum()
    d = params.d_bits
    level = (2.0 * target - 3.0 * M) / (2.0 * target - M)
    if not level > 0:
        return x
    theta = max(q_inv(max(level, 1e-300)), q_inv(params.eps_max))
    out = x.copy()
    for i in range(len(z)):
        m = _lowest_update(z[i], M, x[i + 1], theta, d)
        if m is not None and m <= x[i + 1]:
            out[i + 1] = m
    out[0] = M - out[1:].sum()
    if out[0] < 0:
        return x
    return out


def _to_policy(x: np.ndarray) -> AllocationPolicy:
    return AllocationPolicy(max(float(x[0]), 0.0), tuple(x[1:].tolist()))


def check_feasible(params: SystemParams, devices, target: float, options: Optional[SolverOptions] = None,
                   start: Optional[AllocationPolicy] = None):
    """Whether some allocation keeps every device's age at or below ``target``.

    Returns ``(feasible, policy_or_None)``.
    """
    opts = options or SolverOptions()
    z = _gains(devices)
    if start is None:
        x0 = _initial_point(params, z, opts)
    else:
        x0 = np.concatenate([[max(start.m_c, 1e-9 * start.M)], start.m_r])
    scale = x0.sum()
    prob = _Problem(params, z, scale)
    ok, y, _ = _phase1(prob, target, x0 / scale, opts)
    return ok, (_to_policy(y * scale) if ok else None)


def solve_minmax(params: SystemParams, devices, options: Optional[SolverOptions] = None) -> SolveReport:
    """Allocation minimizing the largest per-device average age.

    Bisection on the target age; each probe is a convex feasibility problem
    solved by :func:`_phase1`. The final bracket ``(lo, hi)`` is stored in
    ``report.info``: ``hi`` is feasible, ``lo`` was rejected.
    """
    opts = options or SolverOptions()
    if not len(devices):
        raise ValueError("need at least one device")
    z = _gains(devices)
    x0 = _initial_point(params, z, opts)
    scale = x0.sum()
    prob = _Problem(params, z, scale)

    def probe(target, x_start):
        ok, y, _ = _phase1(prob, target, x_start / scale, opts)
        return ok, y * scale

    def worst(x):
        M = x.sum()
        mc = M - x[1:]
        eps = fblmath.error_probability(z * mc / x[1:], x[1:], params.d_bits)
        return float(np.max(avg_aoi(M, eps)))

    x_hi = x0
    hi = worst(x0)
    lo = hi / 2.0
    probes = 0
    while True:
        ok, x = probe(lo, x_hi)
        probes += 1
        if not ok:
            break
        x_hi, hi = x, min(lo, worst(x))
        lo = hi / 2.0
    while hi - lo > opts.bisect_rtol * hi:
        mid = 0.5 * (lo + hi)
        ok, x = probe(mid, x_hi)
        probes += 1
        if ok:
            x_hi, hi = x, min(mid, worst(x))
        else:
            lo = mid
    x_final = _polish(params, z, x_hi, hi) if opts.polish else x_hi
    if worst(x_final) > hi * (1.0 + 1e-12):
        x_final = x_hi
    return evaluate_policy(params, devices, _to_policy(x_final), opts, bracket=(lo, hi), probes=probes)
