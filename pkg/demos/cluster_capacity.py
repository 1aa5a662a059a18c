"""
How many devices fit in one round
=================================

The worst-gain device alone fixes a round length. Its charging time is
free for everyone else: other devices can put their update slots there
without making that device wait longer. The number of worst-device slots
that fit is the cluster capacity. Past it, the round has to stretch and
the worst-case age grows.
"""
from aoisched import SystemParams, algorithm1, cluster_capacity, make_devices, solve_minmax

params = SystemParams(h_i_db=-3.0)

for dist in (1.4, 1.5, 1.6):
    cap = cluster_capacity(params, make_devices(params, [dist]))
    print(f"d = {dist} m: single-device round {cap.M_single:.1f} symbols, slot {cap.m_r_single:.1f}, "
          f"capacity {cap.c_cap}")

# %%
# Identical devices at 1.6 m: flat up to the capacity, then rising.
print("\n  I   convex max age   low-complexity   saturated")
for I in range(1, 9):
    devs = make_devices(params, [1.6] * I)
    conv = solve_minmax(params, devs)
    fast = algorithm1(params, devs)
    print(f"{I:>3} {conv.delta_max:16.2f} {fast.delta_max:16.2f} {str(conv.saturated):>11}")

# %%
# With the default radio constants the self-interference is cancelled so
# well that each round is only a few symbols and the capacity is one.
default = SystemParams()
cap = cluster_capacity(default, make_devices(default, [1.6]))
print(f"\ndefault constants: round {cap.M_single:.2f} symbols, capacity {cap.c_cap}")
