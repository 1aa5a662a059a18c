"""
Checking a schedule three ways
==============================

Solve a small cluster with the convex solver, compare against a brute
force grid and against a scheduler that assumes error-free links at
Shannon capacity, then turn the allocation into a concrete integer
schedule and replay it with random packet losses.
"""
import numpy as np

from aoisched import (GridSpec, SimConfig, SystemParams, exhaustive_search, ibl_baseline, make_devices,
                      reconstruct_schedule, simulate, solve_minmax, validate_schedule)
from aoisched.cluster import schedule_aoi

params = SystemParams(h_i_db=-3.0)
devs = make_devices(params, [1.0, 1.3, 1.6])

conv = solve_minmax(params, devs)
print(f"convex:     max age {conv.delta_max:9.3f}  m_c {conv.policy.m_c:7.2f}  "
      f"m_r {np.round(conv.policy.m_r, 2)}")

coarse = exhaustive_search(params, devs, GridSpec.linear(1200, 300, 20, 10, m_r_min=10))
fine = exhaustive_search(params, devs, GridSpec.around(coarse.policy, 20, 1.0, 1.0))
print(f"grid:       max age {fine.delta_max:9.3f}  (one grid step moves it by up to "
      f"{fine.info['cell_variation']:.3f})")

ibl = ibl_baseline(params, devs)
print(f"error-free: max age {ibl.delta_max:9.3f}  every slot decodes with probability {1 - ibl.eps.max():.2f}\n")

# %%
# Integer schedule: common charge first, then one slot per device.
sched = reconstruct_schedule(conv.policy, params, devs)
print(f"round of {sched.M} symbols, slots:")
for s in sched.slots:
    print(f"  device {s.device}: symbols [{s.start}, {s.start + s.length})")
print("valid:", validate_schedule(sched, params, devs).ok)

# %%
# Replay 200k rounds with losses drawn per device.
res = simulate(sched, devs, params, SimConfig(rounds=200_000, seed=1))
exact = schedule_aoi(sched, params, devs)
print("\ndevice  simulated     exact   std err  delivery rate")
for i in range(len(devs)):
    print(f"{i:>6} {res.per_device_time_avg_aoi[i]:10.2f} {exact[i]:9.2f} {res.confidence[i]:9.3f} "
          f"{res.per_device_success_rate[i]:14.4f}")
