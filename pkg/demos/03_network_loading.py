"""Loading route inflows through a small network, arc by arc.

Two routes feed one bottleneck through different access links.  The loader
finds the unique family of arc flows consistent with every arc's exit
behaviour, and route travel times come from composing the exit curves.

Run:  python3 demos/03_network_loading.py
"""

import numpy as np

from dynwardrop import (
    Arc,
    BottleneckModel,
    ConstantModel,
    CumulativeFlow,
    Horizon,
    Network,
    load,
    route_time_by_recursion,
    route_times,
)

network = Network(
    arcs={
        "north": Arc("A", "M", ConstantModel(0.50)),
        "south": Arc("B", "M", ConstantModel(0.25)),
        "gate": Arc("M", "Z", BottleneckModel(0.5, 1.0)),
    },
    routes={"r_north": ("north", "gate"), "r_south": ("south", "gate")},
)
flows = {
    "r_north": CumulativeFlow.constant_rate(0.0, 1.0, 1.0),
    "r_south": CumulativeFlow.constant_rate(0.0, 1.0, 0.8),
}

bundle = load(network, flows)

gate_in = bundle.total("gate")
gate_out = bundle.outflow_total("gate")
print("gate arrivals by t / departures by t:")
for t in np.linspace(0.5, 3.5, 7):
    print(f"  t={t:4.2f}  in={gate_in.value(t):5.3f}  out={gate_out.value(t):5.3f}")

print("\nmass is conserved per route across the whole trip:")
for rid, f in flows.items():
    last = network.routes[rid][-1]
    print(f"  {rid}: sent {f.total:.3f}, delivered {bundle.inflow(last, rid).total:.3f}")

horizon = Horizon(4.0)
pattern = route_times(network, bundle, horizon)
print("\nroute travel times (composition == arc-by-arc recursion):")
for h in (0.0, 0.5, 1.0):
    for rid in network.routes:
        a = pattern.travel_time(rid, h)
        b = route_time_by_recursion(network, bundle, rid, h)
        print(f"  {rid} at h={h}: {a:.4f} (recursion {b:.4f})")
