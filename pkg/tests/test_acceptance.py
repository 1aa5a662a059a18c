"""Acceptance checks, one test per criterion.

Run ``pytest tests/test_acceptance.py -v``; the terminal summary lists one
PASS/FAIL line per criterion.
"""
import math
import os
import subprocess
import sys

import numpy as np
import pytest

from aoisched import (GridSpec, SimConfig, algorithm1, cluster_capacity, exhaustive_search, ibl_baseline,
                      reconstruct_schedule, simulate, solve_minmax)
from aoisched import fblmath
from aoisched.aoimodel import avg_aoi
from aoisched.cluster import schedule_aoi
from aoisched.expcli import main
from aoisched.linkmodel import SystemParams, make_devices
from aoisched.simkernel import simulate_rounds

from conftest import WEAK_CANCELLATION
from oracles import cyclic_schedule_search, fd_hessian


@pytest.mark.criterion(1, "error probability is one half on the capacity boundary")
def test_eps_half_on_capacity_boundary():
    rng = np.random.default_rng(101)
    worst = 0.0
    for _ in range(2000):
        d = int(rng.choice([8, 32, 64, 128, 256, 1024]))
        m_r = 10 ** rng.uniform(0.5, 4)
        gamma = 2.0 ** (d / m_r) - 1.0
        if not np.isfinite(gamma) or gamma <= 0:
            continue
        # through the gain form as well: gamma = z m_c / m_r
        z = 10 ** rng.uniform(-1, 10)
        m_c = gamma * m_r / z
        for e in (fblmath.error_probability(gamma, m_r, d), fblmath.error_probability(z * m_c / m_r, m_r, d)):
            worst = max(worst, abs(e - 0.5))
    print(f"max |eps - 0.5| on the boundary: {worst:.3e}")
    assert worst <= 1e-12


SIM_PAIRS = [(M, e) for M in (5.0, 37.5, 683.0, 2048.0) for e in (0.0, 0.01, 0.1, 0.5, 0.9)]


@pytest.mark.criterion(2, "simulated time-average age matches the closed form")
def test_closed_form_age_against_simulation(weak_params, weak_devices):
    assert len(SIM_PAIRS) >= 20
    for k, (M, e) in enumerate(SIM_PAIRS):
        est, rate, se = simulate_rounds(M, e, 10 ** 6, seed=1000 + k)
        ref = avg_aoi(M, e)
        err = abs(est - ref)
        print(f"M={M:<7g} eps={e:<5g} sim={est:.6g} closed={ref:.6g} rel={err / ref:.2e} se={se:.2e}")
        assert err <= 0.01 * ref
        # exact at eps = 0 up to float summation
        assert err <= max(3.0 * se, 1e-9 * ref)
    # the same check through a real schedule and the per-device streams
    pol = solve_minmax(weak_params, weak_devices).policy
    s = reconstruct_schedule(pol, weak_params, weak_devices)
    res = simulate(s, weak_devices, weak_params, SimConfig(rounds=10 ** 6, seed=7))
    ref = schedule_aoi(s, weak_params, weak_devices)
    for est, r, se in zip(res.per_device_time_avg_aoi, ref, res.confidence):
        print(f"schedule device: sim={est:.6g} closed={r:.6g} se={se:.2e}")
        assert abs(est - r) <= 0.01 * r
        assert abs(est - r) <= 3.0 * se


@pytest.mark.criterion(3, "error probability is convex in (m_c, m_r) inside the condition region")
def test_hessian_suite():
    rng = np.random.default_rng(202)
    checked = 0
    while checked < 1000:
        d = int(rng.choice([32, 64, 128, 256]))
        gamma = 10 ** rng.uniform(0, 4)
        m_r = 10 ** rng.uniform(0, 3.5)
        z = 10 ** rng.uniform(-1, 10)
        m_c = gamma * m_r / z
        e = fblmath.error_probability(gamma, m_r, d)
        if not (1e-12 <= e <= 0.1) or not fblmath.convexity_condition(gamma, m_r, d):
            continue
        checked += 1
        f = lambda a, b: fblmath.q_func(fblmath.omega(z * a / b, b, d))
        hxx, hxy, hyy = fd_hessian(f, m_c, m_r)
        scale = abs(hxx * hyy) + hxy ** 2
        assert hxx >= 0 and hyy >= 0, (z, m_c, m_r, d)
        assert hxx * hyy - hxy ** 2 >= -1e-6 * scale, (z, m_c, m_r, d)


@pytest.mark.criterion(4, "convex solver matches integer-grid exhaustive search")
@pytest.mark.parametrize("over,distances", [
    (WEAK_CANCELLATION, [1.6]),
    (WEAK_CANCELLATION, [1.0, 1.6]),
    (WEAK_CANCELLATION, [1.0, 1.3, 1.6]),
    (dict(WEAK_CANCELLATION, mu=0.8), [1.0, 1.0, 1.0]),  # saturated
    (dict(h_i_db=-6.0), [1.0, 1.0, 1.05]),  # over capacity, charge still positive
])
def test_minmax_against_exhaustive(over, distances):
    p = SystemParams(**over)
    devs = make_devices(p, distances)
    convex = solve_minmax(p, devs)
    coarse = exhaustive_search(p, devs, GridSpec.linear(1200, 300, 20, 10, m_r_min=10))
    # integer resolution over the whole coarse cell around the coarse winner
    fine = exhaustive_search(p, devs, GridSpec.around(coarse.policy, 20, 1.0, 1.0))
    gap = fine.delta_max - convex.delta_max
    print(f"I={len(devs)} convex={convex.delta_max:.6f} grid={fine.delta_max:.6f} gap={gap:.4f} "
          f"cell variation={fine.info['cell_variation']:.4f}")
    assert abs(gap) <= fine.info["cell_variation"]


def _c5_scenarios():
    """Fixed recipe: three radio setups, random distances in [1.0, 1.6] m, two draws per device count."""
    rng = np.random.default_rng(1)
    setups = [dict(WEAK_CANCELLATION), dict(WEAK_CANCELLATION, mu=0.8), dict(h_i_db=-6.0)]
    out = []
    for over in setups:
        p = SystemParams(**over)
        for I in range(1, 7):
            for _ in range(2):
                out.append((over, p, make_devices(p, np.sort(rng.uniform(1.0, 1.6, I)))))
    return out


@pytest.mark.criterion(5, "low-complexity scheduler is optimal when unsaturated")
def test_algorithm1_against_minmax():
    unsat = sat = 0
    for over, p, devs in _c5_scenarios():
        a = algorithm1(p, devs)
        b = solve_minmax(p, devs)
        rel = (a.delta_max - b.delta_max) / b.delta_max
        label = "unsaturated" if a.capacity >= len(devs) else "saturated"
        print(f"{over} I={len(devs)} c_cap={a.capacity} {label}: alg={a.delta_max:.6f} "
              f"convex={b.delta_max:.6f} gap={rel:.2e}")
        if label == "unsaturated":
            unsat += 1
            assert abs(rel) <= 1e-4
        else:
            sat += 1
            assert a.delta_max >= b.delta_max * (1 - 1e-9)
    assert unsat >= 10 and sat >= 1


def _default_fixtures():
    base = SystemParams()
    out = []
    for seed in range(3):
        dist = np.random.default_rng(seed).uniform(0.8, 1.6, 30)
        for over in ({}, {"mu": 0.1}, {"mu": 0.9}, {"d_bits": 64}, {"d_bits": 256}):
            p = base.replace(**over)
            out.append((seed, over, p, make_devices(p, dist)))
    p = base
    out.append(("single", {}, p, make_devices(p, [1.6])))
    return out


@pytest.mark.criterion(6, "infinite-blocklength baseline is worse than the convex schedule")
def test_ibl_is_worse():
    for tag, over, p, devs in _default_fixtures():
        ibl = ibl_baseline(p, devs)
        convex = solve_minmax(p, devs)
        print(f"{tag} {over}: ibl={ibl.delta_max:.4f} (2.5 M={2.5 * ibl.policy.M:.4f}) convex={convex.delta_max:.4f}")
        assert np.allclose(ibl.eps, 0.5, atol=1e-9)
        assert ibl.delta_max == pytest.approx(2.5 * ibl.policy.M, rel=1e-9)
        assert convex.delta_max < ibl.delta_max


@pytest.mark.criterion(7, "homogeneous sweep is flat up to the capacity and increasing beyond")
@pytest.mark.parametrize("over", [{}, WEAK_CANCELLATION], ids=["defaults", "weak-cancellation"])
def test_capacity_breakpoint(over):
    p = SystemParams(**over)
    caps = []
    for dist in (1.4, 1.5, 1.6):
        cap = cluster_capacity(p, make_devices(p, [dist])).c_cap
        caps.append(cap)
        ages = [solve_minmax(p, make_devices(p, [dist] * I)).delta_max for I in range(1, cap + 4)]
        print(f"d={dist} c_cap={cap} ages={[round(a, 4) for a in ages]}")
        flat = np.array(ages[:cap])
        assert np.all(np.abs(flat / flat[0] - 1) <= 0.005)
        assert np.all(np.diff(ages[cap - 1:]) > 0)
    assert caps == sorted(caps)


@pytest.mark.criterion(8, "cyclic start shifts leave simulated age unchanged")
def test_shift_invariance(weak_params, weak_devices):
    pol = solve_minmax(weak_params, weak_devices).policy
    base = reconstruct_schedule(pol, weak_params, weak_devices)
    cfg = SimConfig(rounds=50000, seed=3)
    ref = simulate(base, weak_devices, weak_params, cfg).per_device_time_avg_aoi
    variants = [base.shifted(k) for k in (1, 17, base.M // 2, base.M - 1)]
    variants.append(reconstruct_schedule(pol, weak_params, weak_devices, order=[2, 0, 1]).shifted(5))
    for s in variants:
        got = simulate(s, weak_devices, weak_params, cfg).per_device_time_avg_aoi
        assert np.array_equal(got, ref)


@pytest.mark.criterion(9, "a second update per round never helps")
@pytest.mark.parametrize("distances", [[1.0, 1.6], [1.6, 1.6], [0.9, 1.2]])
def test_single_update_is_enough(weak_params, distances):
    devs = make_devices(weak_params, distances)
    lengths = range(4, 23)
    single = cyclic_schedule_search(weak_params, devs, 40, lengths, multi=False)
    multi = cyclic_schedule_search(weak_params, devs, 40, lengths, multi=True)
    print(f"{distances}: single-update best={single:.6f} with second updates={multi:.6f}")
    assert math.isfinite(single)
    assert multi >= single * (1 - 1e-12)


SPEC = """\
scenario: custom
seed: 11
params:
  h_i: -3 dB
devices:
  distances: [1.0, 1.6]
sweep:
  variable: added_distance
  values: [1.2, 1.5]
methods: [convex, algorithm1, ibl, exhaustive, simulate]
exhaustive:
  cells: 4
simulate:
  rounds: 20000
"""


@pytest.mark.criterion(10, "repeated runs give byte-identical outputs")
def test_determinism(tmp_path):
    spec = tmp_path / "spec.yaml"
    spec.write_text(SPEC)
    outs = []
    for k in range(2):
        out = tmp_path / f"run{k}.csv"
        assert main(["run", str(spec), "--out", str(out)]) == 0
        outs.append(out)
    out = tmp_path / "sub.csv"
    env = dict(os.environ, AOI_SCHED_THREADS="2")
    subprocess.run([sys.executable, "-m", "aoisched", "run", str(spec), "--out", str(out)], check=True, env=env)
    outs.append(out)
    csvs = [o.read_bytes() for o in outs]
    jsons = [o.with_suffix(".json").read_bytes() for o in outs]
    assert b"simulate" in csvs[0]
    assert csvs[0] == csvs[1] == csvs[2]
    assert jsons[0] == jsons[1] == jsons[2]
