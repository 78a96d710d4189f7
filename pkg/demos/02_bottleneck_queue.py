"""A point queue in cumulative-curve form, solved without any time grid.

Twice the capacity arrives for one hour; the queue grows linearly and then
drains at exactly the service rate.  Run:  python3 demos/02_bottleneck_queue.py
"""

import numpy as np

from dynwardrop import BottleneckModel, CumulativeFlow

model = BottleneckModel(free_flow_time=1.0, capacity=1.0)
inflow = CumulativeFlow.constant_rate(0.0, 1.0, 2.0)

profile = model.exit_profile(inflow)
curve, outflow = profile.curve, profile.outflow

print("entry  exit   wait   (exit = 1 + 2*entry while the queue builds)")
for h in np.linspace(0.0, 1.0, 6):
    print(f"{h:5.2f}  {curve.value(h):5.2f}  {curve.travel_time(h) - 1:5.2f}")

print("\nserver is busy at exactly its capacity on [1, 3]:")
for a, b in [(1.0, 1.5), (1.5, 2.0), (2.0, 3.0)]:
    rate = outflow.mass_between(a, b) / (b - a)
    print(f"  outflow rate on [{a}, {b}] = {rate:.6f}")

# A platoon that shows up all at once is released over mass/capacity.
platoon = CumulativeFlow.atom_at(0.0, 2.0)
spread = model.exit_profile(platoon).outflow
print("\nplatoon of 2 released over [1, 3]:",
      [round(spread.value(t), 3) for t in (1.0, 1.5, 2.0, 2.5, 3.0)])
