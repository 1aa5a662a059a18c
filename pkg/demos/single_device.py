"""
One device: trading charge time against update time
===================================================

A device first harvests energy for ``m_c`` symbols, then spends it sending
one short packet over ``m_r`` symbols. Longer charging raises the SNR but
also the round length, and a longer update lowers the coding rate but
spreads the energy thinner. The age is the product of the round length and
the expected number of tries.
"""
from aoisched import SystemParams, make_device, solve_single
from aoisched.errors import Infeasible
from aoisched.fblmath import error_probability
from aoisched.optimizer import solve_fixed_round

# A strong residual loop interference keeps the round long enough to read.
params = SystemParams(h_i_db=-3.0)
dev = make_device(params, 1.6)
print(f"time-wrapped gain z = {dev.z:.4f}")

best = solve_single(params, dev)
print(f"optimum: m_c = {best.m_c:.1f}, m_r = {best.m_r:.1f}, average age = {best.aoi:.2f} symbols\n")

# %%
# Fix the round length and pick the best split inside it. Short rounds
# cannot meet the reliability target; long rounds decode almost surely but
# each round takes longer. The age is lowest in between.
print("   round   m_c     m_r      eps      age")
for scale in (0.9, 0.95, 1.0, 1.1, 1.25, 1.5, 2.0, 3.0):
    M = scale * (best.m_c + best.m_r)
    try:
        s = solve_fixed_round(params, dev, M)
    except Infeasible:
        print(f"{M:8.1f}   misses eps_max = {params.eps_max}")
        continue
    eps = error_probability(dev.z * s.m_c / s.m_r, s.m_r, params.d_bits)
    print(f"{M:8.1f} {s.m_c:6.1f} {s.m_r:7.1f} {eps:9.2e} {s.aoi:8.1f}")
print()

# %%
# Packet size pushes everything up roughly in proportion.
for d in (32, 64, 128, 256):
    s = solve_single(params.replace(d_bits=d), dev)
    eps = error_probability(dev.z * s.m_c / s.m_r, s.m_r, d)
    print(f"D = {d:>3} bits: m_c = {s.m_c:7.1f}  m_r = {s.m_r:6.1f}  eps = {eps:.2e}  age = {s.aoi:8.1f}")
