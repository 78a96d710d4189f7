"""Flows as cumulative curves: build, query, cut, and push through a time map.

Run:  python3 demos/01_flow_curves.py
"""

import numpy as np

from dynwardrop import CumulativeFlow, ExitTimeCurve, pushforward, sum_flows

# A morning's worth of departures: a steady stream plus a burst of carpools
# leaving together at 7:30 (time unit: hours from 7:00).
stream = CumulativeFlow.constant_rate(0.0, 1.5, 40.0)   # 40 users/h for 90 min
burst = CumulativeFlow.atom_at(0.5, 15.0)               # 15 users at once
demand = sum_flows([stream, burst])

print("total users:", demand.total)
print("users in ]7:15, 7:45]:", demand.mass_between(0.25, 0.75))
print("the burst is included by right-continuity:",
      demand.mass_between(0.499, 0.5))

# Restriction keeps only what happened up to a cut instant; cutting twice is
# the same as cutting once, bit for bit.
early = demand.restrict(0.75)
print("\nmass by 7:45:", early.total)
print("restrict(1.0).restrict(0.75) == restrict(0.75):",
      demand.restrict(1.0).restrict(0.75) == early)

# Push the demand through an exit-time map: a stretch that doubles the pace
# of time on [0, 1.5].  Mass is conserved; densities halve.
dilation = ExitTimeCurve(np.array([0.0, 1.5]), np.array([0.0, 3.0]))
arrived = pushforward(demand, dilation)
print("\npushforward conserves mass:", arrived.total, "==", demand.total)
print("rate before:", demand.slope_at(0.2), " rate after:", arrived.slope_at(0.4))
print("the burst lands at the mapped instant:", arrived.atom_mass(1.0))
