"""Cluster capacity, the low-complexity scheduler, and time-indexed schedules.

A :class:`TimeSchedule` is one periodic round of ``M`` integer symbols with
one or more transmission slots. Rounds repeat back to back, so slot
positions are taken modulo ``M`` and a slot may wrap past the round edge.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from . import fblmath
from .aoimodel import aoi_from_durations
from .errors import ConstraintBrokenByRounding, Infeasible, InfeasibleSaturated, RoundingOverflow
from .linkmodel import SystemParams
from .optimizer import (AllocationPolicy, SolveReport, SolverOptions, evaluate_policy, solve_fixed_round,
                        solve_single)


@dataclass(frozen=True)
class CapacityReport:
    i_min: int
    m_c_single: float
    m_r_single: float
    M_single: float
    aoi_single: float
    c_cap: int
    saturated: bool


def cluster_capacity(params: SystemParams, devices, options: Optional[SolverOptions] = None) -> CapacityReport:
    """How many devices fit into the worst device's optimal round without raising its age.

    Only the worst-gain device matters: its single-device optimum leaves
    ``m_c`` symbols of free charging time, which other devices can fill with
    their own slots.
    """
    if not len(devices):
        raise ValueError("need at least one device")
    z = np.array([dv.z for dv in devices])
    i_min = int(np.argsort(z, kind="stable")[0])
    sol = solve_single(params, devices[i_min], options)
    M = sol.m_c + sol.m_r
    c_cap = max(1, int(math.floor(M / sol.m_r * (1.0 + 1e-12))))
    return CapacityReport(i_min, sol.m_c, sol.m_r, M, sol.aoi, c_cap, len(devices) > c_cap)


def algorithm1(params: SystemParams, devices, options: Optional[SolverOptions] = None) -> SolveReport:
    """Sort-and-fill scheduler.

    Solve the worst device alone; if the cluster fits (``c_cap >= I``) keep
    its round, otherwise stretch the round to ``I * m_r`` of the worst device.
    Every other device then minimizes its own age at that round length and is
    given at least the worst device's update duration. Globally optimal when
    the cluster is unsaturated.
    """
    cap = cluster_capacity(params, devices, options)
    I = len(devices)
    unsaturated = cap.c_cap >= I
    M0 = cap.M_single if unsaturated else I * cap.m_r_single
    m_r = np.empty(I)
    for j, dev in enumerate(devices):
        if j == cap.i_min:
            m_r[j] = cap.m_r_single
            continue
        try:
            sol = solve_fixed_round(params, dev, M0, options)
        except Infeasible as exc:
            if unsaturated:
                raise
            raise InfeasibleSaturated(str(exc)) from exc
        m_r[j] = max(sol.m_r, cap.m_r_single)
    m_c = max(M0 - float(m_r.sum()), 0.0)
    policy = AllocationPolicy(m_c, tuple(m_r.tolist()))
    report = evaluate_policy(params, devices, policy, options,
                             branch="unsaturated" if unsaturated else "saturated", round_target=M0)
    report.capacity = cap.c_cap
    return report


# --------------------------------------------------------------------------
# integer schedules


@dataclass(frozen=True)
class Slot:
    device: int
    start: int
    length: int


@dataclass(frozen=True)
class TimeSchedule:
    """One round of ``M`` symbols; device ``slot.device`` transmits in ``[start, start+length)`` mod M."""

    M: int
    slots: tuple

    def __post_init__(self):
        object.__setattr__(self, "slots", tuple(self.slots))

    @property
    def n_devices(self) -> int:
        return max(s.device for s in self.slots) + 1 if self.slots else 0

    def slots_of(self, device: int) -> list:
        return sorted((s for s in self.slots if s.device == device), key=lambda s: s.start)

    @property
    def starts(self) -> tuple:
        return tuple(self.slots_of(i)[0].start for i in range(self.n_devices))

    @property
    def m_r_int(self) -> tuple:
        return tuple(self.slots_of(i)[0].length for i in range(self.n_devices))

    def start_time(self, device: int, k: int) -> int:
        """Start symbol of the k-th round (k >= 1) for a single-slot device."""
        return (k - 1) * self.M + self.slots_of(device)[0].start

    def shifted(self, offset: int) -> "TimeSchedule":
        return TimeSchedule(self.M, tuple(Slot(s.device, (s.start + offset) % self.M, s.length) for s in self.slots))


def _is_integral(v: float) -> bool:
    return abs(v - round(v)) <= 1e-9 * max(1.0, abs(v))


def _meets_thresholds(params, z, M, m):
    mc = M - m
    if mc <= 0:
        return False
    gamma = z * mc / m
    if gamma < params.gamma_th * (1.0 - 1e-12):
        return False
    return fblmath.error_probability(gamma, m, params.d_bits) <= params.eps_max * (1.0 + 1e-9)


def round_policy(params: SystemParams, devices, policy: AllocationPolicy, extend_round: bool = True) -> AllocationPolicy:
    """Integer-valued allocation near a relaxed one.

    Each ``m_r`` goes to whichever integer neighbour gives that device the
    lower age in a round of ``ceil(M)`` symbols; the common charge absorbs
    the remainder. If the rounded slots no longer fit, the round is extended
    (``m_c = 0``) unless ``extend_round`` is false.
    """
    if _is_integral(policy.m_c) and all(_is_integral(v) for v in policy.m_r):
        return AllocationPolicy(float(round(policy.m_c)), tuple(float(round(v)) for v in policy.m_r))
    z = np.array([dv.z for dv in devices])
    d = params.d_bits
    M_int = math.ceil(policy.M - 1e-9 * policy.M)
    options = []
    for zi, m in zip(z, policy.m_r):
        cands = sorted({max(1, math.floor(m)), max(1, math.ceil(m))})
        cands = [c for c in cands if c < M_int] or [max(1, min(cands[0], M_int - 1))]
        cands.sort(key=lambda c: (not _meets_thresholds(params, zi, M_int, c),
                                  aoi_from_durations(zi, M_int - c, c, d) if c < M_int else math.inf))
        options.append(cands)
    choice = [c[0] for c in options]

    def settle(choice):
        total = sum(choice)
        M = M_int
        if total > M_int:
            if not extend_round:
                raise RoundingOverflow(f"rounded slots need {total} symbols, round has {M_int}")
            M = total
        bad = [i for i, (zi, c) in enumerate(zip(z, choice)) if not _meets_thresholds(params, zi, M, c)]
        return M, bad

    M, bad = settle(choice)
    for i in list(bad):
        if len(options[i]) > 1:
            trial = list(choice)
            trial[i] = options[i][1]
            M_t, bad_t = settle(trial)
            if len(bad_t) < len(bad):
                choice, M, bad = trial, M_t, bad_t
    if bad:
        raise ConstraintBrokenByRounding(f"devices {bad} violate eps_max/gamma_th after rounding")
    return AllocationPolicy(float(M - sum(choice)), tuple(float(c) for c in choice))


def reconstruct_schedule(policy: AllocationPolicy, params: Optional[SystemParams] = None, devices=None,
                         order: Optional[Sequence[int]] = None) -> TimeSchedule:
    """Time-indexed round: common charge first, then slots back to back.

    Device ``order[k]`` starts at ``m_c + sum of the earlier slots``; the
    default order is the device index. A relaxed policy is rounded first,
    which needs ``params`` and ``devices``.
    """
    if not (_is_integral(policy.m_c) and all(_is_integral(v) for v in policy.m_r)):
        if params is None or devices is None:
            raise ValueError("rounding a real-valued policy needs params and devices")
    if params is not None and devices is not None:
        policy = round_policy(params, devices, policy)
    m_c = int(round(policy.m_c))
    m_r = [int(round(v)) for v in policy.m_r]
    order = list(range(len(m_r))) if order is None else list(order)
    if sorted(order) != list(range(len(m_r))):
        raise ValueError("order must be a permutation of the device indices")
    slots = []
    t = m_c
    for i in order:
        slots.append(Slot(i, t, m_r[i]))
        t += m_r[i]
    return TimeSchedule(m_c + sum(m_r), tuple(sorted(slots, key=lambda s: s.device)))


@dataclass
class ValidationReport:
    ok: bool
    violations: list = field(default_factory=list)
    collisions: list = field(default_factory=list)


def _overlap(a: Slot, b: Slot, M: int) -> bool:
    return (b.start - a.start) % M < a.length or (a.start - b.start) % M < b.length


def validate_schedule(s: TimeSchedule, params: SystemParams, devices, single_update: bool = True) -> ValidationReport:
    """Collision, one-update-per-round and threshold checks for a schedule."""
    rep = ValidationReport(ok=True)
    M = s.M
    if not (isinstance(M, (int, np.integer)) and M > 0):
        rep.violations.append(f"round length {M!r} is not a positive integer")
    for sl in s.slots:
        if not (0 <= sl.start < M) or not (1 <= sl.length <= M):
            rep.violations.append(f"slot {sl} outside the round")
        if not (0 <= sl.device < len(devices)):
            rep.violations.append(f"slot {sl} refers to an unknown device")
    for a_i in range(len(s.slots)):
        for b_i in range(a_i + 1, len(s.slots)):
            a, b = s.slots[a_i], s.slots[b_i]
            if _overlap(a, b, M):
                rep.collisions.append((a, b))
    if rep.collisions:
        rep.violations.append(f"{len(rep.collisions)} colliding slot pair(s)")
    z = np.array([dv.z for dv in devices])
    for i in range(len(devices)):
        mine = s.slots_of(i)
        if not mine:
            rep.violations.append(f"device {i} never transmits")
            continue
        if single_update and len(mine) > 1:
            rep.violations.append(f"device {i} transmits {len(mine)} times per round")
            continue
        for k, (charge, sl) in enumerate(zip(_charges(mine, M), mine)):
            if not _meets_thresholds(params, z[i], charge + sl.length, sl.length):
                rep.violations.append(f"device {i} slot {k} misses eps_max/gamma_th")
    rep.ok = not rep.violations
    return rep


def _charges(mine: list, M: int) -> list:
    """Charging time before each of a device's slots (time since its previous slot ended)."""
    if len(mine) == 1:
        return [M - mine[0].length]
    out = []
    for k, sl in enumerate(mine):
        prev = mine[k - 1]
        out.append((sl.start - (prev.start + prev.length)) % M)
    return out


def device_update_cycle(s: TimeSchedule, device: int):
    """(charge, update) durations of each of a device's slots, in round order."""
    mine = s.slots_of(device)
    return [(c, sl.length) for c, sl in zip(_charges(mine, s.M), mine)]


def schedule_aoi(s: TimeSchedule, params: SystemParams, devices) -> np.ndarray:
    """Exact average age per device for a periodic schedule, any number of slots per device.

    Slot ``u`` of a device delivers, with probability ``1 - eps_u``, a sample
    taken when its charging began, i.e. ``T_u = charge_u + m_u`` before
    delivery. The mean age right after delivery ``u`` obeys
    ``A_u = T_u + eps_u * A_{u-1}`` around the cycle.
    """
    out = np.empty(len(devices))
    d = params.d_bits
    for i, dv in enumerate(devices):
        cyc = device_update_cycle(s, i)
        T = np.array([c + m for c, m in cyc], dtype=float)
        if np.any(np.array([c for c, _ in cyc]) <= 0):
            out[i] = math.inf
            continue
        eps = np.array([fblmath.error_probability(dv.z * c / m, m, d) for c, m in cyc])
        K = len(cyc)
        # (I - diag(eps) P) A = T with P the cyclic predecessor shift
        Amat = np.eye(K)
        for u in range(K):
            Amat[u, (u - 1) % K] -= eps[u]
        A = np.linalg.solve(Amat, T)
        T_next = np.roll(T, -1)
        out[i] = float(np.sum(A * T_next + 0.5 * T_next ** 2) / T.sum())
    return out
