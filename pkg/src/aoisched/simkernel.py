"""Monte Carlo replay of scheduled updates, plus two reference schedulers.

The simulator draws one Bernoulli decode outcome per scheduled update and
integrates the age sawtooth exactly between deliveries, so no per-symbol
stepping is needed. Every device draws from its own Philox stream keyed by
``(seed, device.id)``, so permuting or shifting a schedule replays the same
failure sequence.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq

from . import fblmath
from ._search import golden_section_min
from .cluster import TimeSchedule, device_update_cycle, validate_schedule
from .errors import GridTooLarge, Infeasible, InvalidSchedule, NoFixedPoint
from .linkmodel import SystemParams
from .optimizer import AllocationPolicy, SolveReport, evaluate_policy

MAX_GRID_POINTS = 10_000_000


@dataclass(frozen=True)
class SimConfig:
    rounds: int = 100_000
    seed: int = 0
    warmup: int = 10
    batches: int = 100
    allow_multiple_updates: bool = False

    def __post_init__(self):
        if self.rounds < 1 or self.warmup < 0:
            raise ValueError("need rounds >= 1 and warmup >= 0")
        if self.rounds - self.warmup < 2:
            raise ValueError("rounds must exceed the warm-up by at least two")
        if not 0 <= self.seed < 2 ** 64:
            raise ValueError("seed must fit in 64 unsigned bits")


@dataclass
class SimResult:
    per_device_time_avg_aoi: np.ndarray
    per_device_success_rate: np.ndarray
    confidence: np.ndarray  # standard error of the age estimate


def device_rng(seed: int, device_id: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([int(seed), int(device_id)])))


def _replay(T: np.ndarray, eps: np.ndarray, rounds: int, rng: np.random.Generator, warmup: int,
            batches: int, init_age: float):
    """Age statistics for one device whose round holds ``len(T)`` deliveries.

    ``T[u]`` is the time from the previous delivery to delivery ``u``, which
    is also the age of the sample delivery ``u`` carries. Returns
    ``(time_avg_age, success_rate, standard_error)``.
    """
    K = len(T)
    n = rounds * K
    ok = rng.random(n) >= np.tile(eps, rounds)
    Tn = np.tile(T.astype(float), rounds)
    cum = np.cumsum(Tn)
    idx = np.arange(n)
    last = np.maximum.accumulate(np.where(ok, idx, -1))
    before = np.where(last > 0, cum[np.maximum(last - 1, 0)], 0.0)
    # age just after each delivery
    A = np.where(last >= 0, cum - before, cum + init_age)
    nxt = Tn[1:]
    area = A[:-1] * nxt + 0.5 * nxt * nxt
    w0 = warmup * K
    area, span = area[w0:], nxt[w0:]
    est = area.sum() / span.sum()
    b = max(2, min(batches, len(area) // 2))
    cuts = np.linspace(0, len(area), b + 1).astype(int)
    ba = np.add.reduceat(area, cuts[:-1])
    bt = np.add.reduceat(span, cuts[:-1])
    se = float(np.std(ba / bt, ddof=1) / math.sqrt(b))
    return float(est), float(ok[w0:].mean()), se


def simulate_rounds(M: float, eps: float, rounds: int, seed: int = 0, warmup: int = 10, batches: int = 100):
    """Replay one periodic device with fixed round ``M`` and error probability ``eps``.

    Returns ``(time_avg_age, success_rate, standard_error)``.
    """
    return _replay(np.array([float(M)]), np.array([float(eps)]), rounds, device_rng(seed, 0), warmup, batches,
                   float(M))


def simulate(schedule: TimeSchedule, devices, params: SystemParams, cfg: SimConfig = SimConfig()) -> SimResult:
    """Time-average age, delivery rate and standard error per device."""
    rep = validate_schedule(schedule, params, devices, single_update=not cfg.allow_multiple_updates)
    if not rep.ok:
        raise InvalidSchedule("; ".join(rep.violations))
    I = len(devices)
    aoi = np.empty(I)
    rate = np.empty(I)
    se = np.empty(I)
    for i, dv in enumerate(devices):
        cyc = device_update_cycle(schedule, i)
        T = np.array([c + m for c, m in cyc], dtype=float)
        eps = np.array([fblmath.error_probability(dv.z * c / m, m, params.d_bits) for c, m in cyc])
        aoi[i], rate[i], se[i] = _replay(T, eps, cfg.rounds, device_rng(cfg.seed, dv.id), cfg.warmup, cfg.batches,
                                         float(schedule.M))
    return SimResult(aoi, rate, se)


# --------------------------------------------------------------------------
# exhaustive search


@dataclass(frozen=True)
class GridSpec:
    """Candidate values for the common charge and for the update slots.

    ``m_r`` is either one axis shared by every device or a tuple of axes,
    one per device.
    """

    m_c: tuple
    m_r: tuple

    def __post_init__(self):
        object.__setattr__(self, "m_c", tuple(float(v) for v in self.m_c))
        if len(self.m_r) and np.ndim(self.m_r[0]) > 0:
            axes = tuple(tuple(float(v) for v in ax) for ax in self.m_r)
        else:
            axes = tuple(float(v) for v in self.m_r)
        object.__setattr__(self, "m_r", axes)
        flat = [v for ax in self.axes(len(axes) if self.per_device else 1) for v in ax]
        if not self.m_c or not self.m_r or not flat:
            raise ValueError("grid axes must be nonempty")
        if min(self.m_c) < 0 or min(flat) <= 0:
            raise ValueError("need m_c >= 0 and m_r > 0 on the grid")

    @property
    def per_device(self) -> bool:
        return isinstance(self.m_r[0], tuple)

    def axes(self, n_devices: int) -> list:
        if self.per_device:
            if len(self.m_r) != n_devices:
                raise ValueError(f"grid has {len(self.m_r)} update axes for {n_devices} devices")
            return [np.array(ax) for ax in self.m_r]
        return [np.array(self.m_r)] * n_devices

    @classmethod
    def linear(cls, m_c_max, m_r_max, s_c=1.0, s_r=1.0, m_c_min=0.0, m_r_min=1.0) -> "GridSpec":
        return cls(tuple(np.arange(m_c_min, m_c_max + 0.5 * s_c, s_c)),
                   tuple(np.arange(m_r_min, m_r_max + 0.5 * s_r, s_r)))

    @classmethod
    def around(cls, policy: AllocationPolicy, cells: int, s_c: float, s_r: float) -> "GridSpec":
        """Per-device grid of ``2*cells + 1`` points per axis on multiples of the steps, centred on ``policy``."""
        k = np.arange(-cells, cells + 1)
        c = (round(policy.m_c / s_c) + k) * s_c
        axes = []
        for m in policy.m_r:
            r = (round(m / s_r) + k) * s_r
            axes.append(tuple(r[r > 0]))
        return cls(tuple(c[c >= 0]), tuple(axes))

    def size(self, n_devices: int) -> int:
        return len(self.m_c) * int(np.prod([len(ax) for ax in self.axes(n_devices)]))


def _grid_max_aoi(params, z, mc_val, R):
    """Worst age over devices for charge ``mc_val`` and update arrays ``R`` (I x ...)."""
    M = mc_val + R.sum(axis=0)
    worst = np.zeros(R.shape[1:])
    for i, zi in enumerate(z):
        mci = M - R[i]
        with np.errstate(divide="ignore", invalid="ignore"):
            gamma = zi * mci / R[i]
        ok = gamma >= params.gamma_th
        eps = np.full(R.shape[1:], 1.0)
        if np.any(ok):
            eps[ok] = fblmath.error_probability(gamma[ok], R[i][ok], params.d_bits)
        ok &= eps <= params.eps_max
        a = np.where(ok, M * (0.5 + 1.0 / (1.0 - np.where(ok, eps, 0.0))), np.inf)
        worst = np.maximum(worst, a)
    return worst


def exhaustive_search(params: SystemParams, devices, grid: GridSpec) -> SolveReport:
    """Best grid allocation by brute force over every (m_c, m_r...) combination.

    Ties go to the lexicographically smallest point. ``info['cell_variation']``
    is the largest change in the worst-case age when one coordinate of the
    winner moves by one grid step.
    """
    I = len(devices)
    if I == 0:
        raise ValueError("need at least one device")
    if I > 3:
        raise GridTooLarge("exhaustive search supports at most three devices")
    if grid.size(I) > MAX_GRID_POINTS:
        raise GridTooLarge(f"{grid.size(I)} grid points exceed the limit of {MAX_GRID_POINTS}")
    z = np.array([dv.z for dv in devices])
    axes_r = grid.axes(I)
    R = np.stack(np.meshgrid(*axes_r, indexing="ij"))
    best, best_pt = math.inf, None
    for ic, mc in enumerate(grid.m_c):
        worst = _grid_max_aoi(params, z, mc, R)
        k = int(np.argmin(worst))
        if worst.flat[k] < best:
            best = float(worst.flat[k])
            best_pt = (ic,) + np.unravel_index(k, worst.shape)
    if best_pt is None:
        raise Infeasible("no grid point meets eps_max and gamma_th")
    mc = grid.m_c[best_pt[0]]
    mr = tuple(float(axes_r[i][j]) for i, j in enumerate(best_pt[1:]))
    policy = AllocationPolicy(mc, mr)
    var = 0.0
    axes = [np.array(grid.m_c)] + axes_r
    for ax, pos in enumerate(best_pt):
        for step in (-1, 1):
            j = pos + step
            if 0 <= j < len(axes[ax]):
                pt = list(best_pt)
                pt[ax] = j
                R1 = np.array([axes_r[i][p] for i, p in enumerate(pt[1:])], dtype=float).reshape(I, 1)
                v = float(_grid_max_aoi(params, z, axes[0][pt[0]], R1)[0])
                if math.isfinite(v):
                    var = max(var, abs(v - best))
    return evaluate_policy(params, devices, policy, status="optimal", cell_variation=var,
                           grid_points=grid.size(I), grid_index=tuple(int(p) for p in best_pt))


# --------------------------------------------------------------------------
# infinite-blocklength baseline


def _capacity_fraction(z: float, x):
    """Bits per round symbol when a fraction ``x`` of the round is the update: x log2(1 + z (1-x)/x)."""
    return x * np.log2(1.0 + z * (1.0 - x) / x)


def ibl_baseline(params: SystemParams, devices) -> SolveReport:
    """Shortest round in which every device could deliver its packet at Shannon capacity.

    Scaling a round keeps the SNR and scales the carried bits, so for each
    device the shortest update at round ``M`` is ``M * x_i(D/M)`` with
    ``x_i`` the smaller root of ``x log2(1 + z(1-x)/x) = D/M``. The round is
    the smallest ``M`` with ``sum_i M x_i <= M``, found by root bracketing.
    Thresholds are ignored, as the baseline has no notion of decoding errors;
    the returned report is evaluated with the finite-blocklength model, where
    every slot sits at eps = 0.5.
    """
    if not len(devices):
        raise ValueError("need at least one device")
    D = params.d_bits
    z = np.array([dv.z for dv in devices])
    peaks = []
    for zi in z:
        x, neg = golden_section_min(lambda x: -_capacity_fraction(zi, x), 0.0, 1.0, rtol=1e-14)
        peaks.append((x, -neg))
    M_lo = max(D / p for _, p in peaks) * (1.0 + 1e-12)

    def lowest(i, M):
        x_pk, p = peaks[i]
        target = D / M
        if p < target:
            return None
        f = lambda x: _capacity_fraction(z[i], x) - target
        if f(x_pk) <= 0.0:
            return x_pk * M
        lo = x_pk
        while f(lo) > 0:
            lo *= 0.5
            if lo < 1e-300:
                raise NoFixedPoint(f"device {i}: no capacity root below the peak")
        return brentq(f, lo, x_pk, xtol=1e-300, rtol=4 * np.finfo(float).eps, maxiter=1000) * M

    def slack(M):
        parts = [lowest(i, M) for i in range(len(z))]
        if any(p is None for p in parts):
            return -math.inf, parts
        return M - math.fsum(parts), parts

    s, parts = slack(M_lo)
    if s >= 0:
        M = M_lo
    else:
        hi = M_lo
        for _ in range(1000):
            hi *= 2.0
            if slack(hi)[0] >= 0:
                break
        else:
            raise NoFixedPoint("no round length fits every device at capacity")
        M = brentq(lambda m: slack(m)[0], M_lo, hi, xtol=1e-14 * hi, rtol=4 * np.finfo(float).eps, maxiter=1000)
        s, parts = slack(M)
        if s < 0:
            M = M - s
            s, parts = slack(M)
    m_r = np.array(parts, dtype=float)
    policy = AllocationPolicy(max(M - math.fsum(m_r), 0.0), tuple(m_r))
    return evaluate_policy(params, devices, policy, status="baseline", round_length=float(M))
