"""Departure-time choice at a bottleneck with a preferred arrival instant.

Users trade queueing time against arriving early (cheap) or late (expensive).
At equilibrium the server runs at capacity over a window around the preferred
instant, with the early side `gamma/(beta+gamma)` of the mass.

Run:  python3 demos/05_departure_choice.py
"""

import numpy as np

from dynwardrop import (
    Arc,
    BottleneckModel,
    Horizon,
    Network,
    SolverConfig,
    UserClass,
    solve_departure_choice,
)

network = Network({"gate": Arc("A", "B", BottleneckModel(0.1, 1.0))}, {"r": ("gate",)})
horizon = Horizon(4.0)
commuters = UserClass(
    "A", "B", mass=1.0, h_star=2.0, alpha=1.0, beta=0.5, gamma=2.0
)

state = solve_departure_choice(
    network,
    [commuters],
    SolverConfig(bin_width=1 / 64, max_iters=500, tolerance=1e-2),
    horizon,
)
print(f"regret {state.gap:.2e} after {state.iterations} iterations")

flow = state.flows["r"]
arr = state.times.arrivals["r"]
print("\ndeparture rate and arrival time by window:")
for a in np.arange(1.0, 2.2, 0.1):
    b = a + 0.1
    rate = flow.mass_between(a, b) / 0.1
    if rate > 0.01:
        print(f"  dep [{a:4.2f},{b:4.2f})  rate {rate:5.2f}  arrives ~{arr.value((a + b) / 2):.2f}")

mean_arrival = 0.0
pts = np.unique(np.concatenate([flow.times, np.linspace(0, 4, 257)]))
for a, b in zip(pts[:-1], pts[1:]):
    mean_arrival += flow.mass_between(float(a), float(b)) * arr.value(float((a + b) / 2))
mean_arrival /= flow.total
early = flow.total and sum(
    flow.mass_between(float(a), float(b))
    for a, b in zip(pts[:-1], pts[1:])
    if arr.value(float((a + b) / 2)) < 2.0
)
print(f"\nmean arrival {mean_arrival:.3f} (preferred 2.0); "
      f"{100 * early / flow.total:.0f}% arrive early "
      f"(theory: gamma/(beta+gamma) = {100 * 2.0 / 2.5:.0f}%)")
