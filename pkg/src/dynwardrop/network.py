"""Network loading: propagate route inflows into per-arc flows and times.

Given route inflow measures, the loader advances a frontier in steps of the
network's smallest arc travel-time floor.  At each step every arc's outflow is
recomputed from the inflows discovered so far and truncated at the frontier;
because no arc can be traversed faster than that floor, everything behind the
frontier is already settled.  The procedure stabilizes once all mass has left
its route, and the final bundle satisfies the per-arc exit-flow equations at
the solvers' exact piecewise-linear resolution.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping

import numpy as np

from .arcs import ArcModel, ExitProfile
from .curves import ExitTimeCurve
from .errors import NonTermination, ValidationError
from .flows import CumulativeFlow, Horizon, sum_flows

#: route id -> route inflow measure
RouteFlowPattern = dict[str, CumulativeFlow]


@dataclass(frozen=True)
class Arc:
    tail: str
    head: str
    model: ArcModel


@dataclass(frozen=True)
class Network:
    """Directed graph with arc models and a fixed set of simple-path routes."""

    arcs: Mapping[str, Arc]
    routes: Mapping[str, tuple[str, ...]]

    def __post_init__(self):
        object.__setattr__(self, "arcs", dict(self.arcs))
        object.__setattr__(self, "routes", {r: tuple(a) for r, a in self.routes.items()})
        for rid, arc_ids in self.routes.items():
            if not arc_ids:
                raise ValidationError(f"route {rid!r} is empty")
            if len(set(arc_ids)) != len(arc_ids):
                raise ValidationError(f"route {rid!r} repeats an arc")
            for aid in arc_ids:
                if aid not in self.arcs:
                    raise ValidationError(f"route {rid!r} references unknown arc {aid!r}")
            for prev, nxt in zip(arc_ids[:-1], arc_ids[1:]):
                if self.arcs[prev].head != self.arcs[nxt].tail:
                    raise ValidationError(
                        f"route {rid!r} is not connected at {prev!r} -> {nxt!r}"
                    )

    @property
    def nodes(self) -> set[str]:
        out = set()
        for arc in self.arcs.values():
            out.add(arc.tail)
            out.add(arc.head)
        return out

    def od_of_route(self, route_id: str) -> tuple[str, str]:
        arc_ids = self.routes[route_id]
        return self.arcs[arc_ids[0]].tail, self.arcs[arc_ids[-1]].head

    def routes_between(self, origin: str, destination: str) -> list[str]:
        return sorted(
            r for r in self.routes if self.od_of_route(r) == (origin, destination)
        )

    @property
    def t_min_star(self) -> float:
        """Smallest travel-time floor over all arcs."""
        return min(arc.model.t_min for arc in self.arcs.values())

    def passage_bound(self, total_mass: float) -> float:
        """Upper bound on the time any user can still be travelling."""
        tau = max(arc.model.t_max(total_mass) for arc in self.arcs.values())
        longest = max(len(a) for a in self.routes.values()) if self.routes else 0
        return longest * tau


@dataclass(frozen=True)
class ArcFlowBundle:
    """Per-arc, per-route inflow measures plus cached totals and exit data."""

    inflows: dict[str, dict[str, CumulativeFlow]]
    totals: dict[str, CumulativeFlow]
    profiles: dict[str, ExitProfile]

    def inflow(self, arc_id: str, route_id: str) -> CumulativeFlow:
        return self.inflows[arc_id].get(route_id, CumulativeFlow.zero())

    def total(self, arc_id: str) -> CumulativeFlow:
        return self.totals[arc_id]

    def outflow_total(self, arc_id: str) -> CumulativeFlow:
        return self.profiles[arc_id].outflow


def _route_share(route_flow: CumulativeFlow, total_flow: CumulativeFlow) -> tuple[np.ndarray, np.ndarray]:
    """The route's cumulative mass as a function of the total cumulative mass.

    Returns piecewise-linear vertices (total mass m, route mass c); inside a
    shared point mass the split is proportional.
    """
    ts = np.union1d(route_flow.times, total_flow.times)
    ms: list[float] = [0.0]
    cs: list[float] = [0.0]
    for t in ts:
        for m, c in (
            (total_flow.left_value(t), route_flow.left_value(t)),
            (total_flow.value(t), route_flow.value(t)),
        ):
            if m > ms[-1]:
                ms.append(m)
                cs.append(c)
            elif c > cs[-1]:
                cs[-1] = c
    return np.array(ms), np.array(cs)


def _share_at(ms: np.ndarray, cs: np.ndarray, m: float) -> float:
    i = int(np.searchsorted(ms, m, side="right")) - 1
    if i < 0:
        return 0.0
    if i >= ms.size - 1:
        return float(cs[-1])
    dm = ms[i + 1] - ms[i]
    if dm == 0.0:
        return float(cs[i])
    return float(cs[i] + (m - ms[i]) * (cs[i + 1] - cs[i]) / dm)


def flowing(
    model: ArcModel, inflows_by_route: Mapping[str, CumulativeFlow]
) -> dict[str, CumulativeFlow]:
    """Per-route outflows of one arc, given its per-route inflows.

    The total outflow is the image of the total inflow under the arc's exit
    behaviour; each route receives the share it holds among the entrants, in
    first-in-first-out mass order (proportional inside shared point masses).
    Mass is conserved per route.
    """
    live = {r: f for r, f in inflows_by_route.items() if not f.is_zero}
    if not live:
        return {r: CumulativeFlow.zero() for r in inflows_by_route}
    total = sum_flows(list(live.values()))
    profile = model.exit_profile(total)
    exit_total = profile.outflow
    out: dict[str, CumulativeFlow] = {}
    if len(live) == 1:
        (rid, _), = live.items()
        for r in inflows_by_route:
            out[r] = exit_total if r == rid else CumulativeFlow.zero()
        return out
    for r, f in inflows_by_route.items():
        if f.is_zero:
            out[r] = CumulativeFlow.zero()
            continue
        ms, cs = _route_share(f, total)
        # compose the share with the exit totals: vertices wherever the exit
        # curve has one, plus preimages of the share's vertices
        taus = set(float(t) for t in exit_total.times)
        for m in ms:
            lo = exit_total.times[0] if not exit_total.is_zero else 0.0
            hi = exit_total.times[-1] if not exit_total.is_zero else 0.0
            # invert the exit cumulative at mass level m
            taus.add(_mass_preimage(exit_total, float(m)))
        taus_a = np.array(sorted(t for t in taus if np.isfinite(t)))
        times: list[float] = []
        lo_v: list[float] = []
        hi_v: list[float] = []
        for tau in taus_a:
            vl = _share_at(ms, cs, exit_total.left_value(tau))
            vr = _share_at(ms, cs, exit_total.value(tau))
            if not times or tau > times[-1]:
                times.append(float(tau))
                lo_v.append(vl)
                hi_v.append(vr)
            else:
                hi_v[-1] = max(hi_v[-1], vr)
        out[r] = _from_vertices(times, lo_v, hi_v)
    return out


def _mass_preimage(flow: CumulativeFlow, m: float) -> float:
    """Earliest time the cumulative curve reaches mass level m."""
    if flow.is_zero:
        return float("nan")
    if m <= 0.0:
        return float(flow.times[0])
    if m >= flow.total:
        return float(flow.times[-1])
    i = int(np.searchsorted(flow.cums, m, side="left"))
    t_hi, c_hi = float(flow.times[i]), float(flow.cums[i])
    if i == 0:
        return t_hi
    c_lo = float(flow.cums[i - 1])
    t_lo = float(flow.times[i - 1])
    if c_hi - flow.atoms[i] <= m or flow.slopes[i - 1] == 0.0:
        return t_hi
    return t_lo + (m - c_lo) / flow.slopes[i - 1]


def _from_vertices(times: list[float], lo_v: list[float], hi_v: list[float]) -> CumulativeFlow:
    from .flows import _build

    t = np.array(times)
    cums = np.array(hi_v)
    atoms = cums - np.array(lo_v)
    slopes = np.zeros_like(t)
    if t.size > 1:
        dt = np.diff(t)
        dm = np.maximum(np.array(lo_v[1:]) - np.array(hi_v[:-1]), 0.0)
        slopes[:-1] = dm / dt
    return _build(t, np.maximum.accumulate(cums), np.maximum(atoms, 0.0), slopes)


def load(
    network: Network,
    route_flows: Mapping[str, CumulativeFlow],
    frontier_step: float | None = None,
) -> ArcFlowBundle:
    """Propagate route inflows through the network until all mass has exited.

    Each pass recomputes, for every route position, the upstream arc's
    outflow from the previous pass's bundle and truncates it at the advancing
    frontier.  Once the frontier clears every exit, consecutive bundles are
    identical and the fixed point has been reached.

    Raises:
        NonTermination: the frontier exceeded the passage-time budget, which
            indicates an arc model without a finite passage envelope.
    """
    step = network.t_min_star if frontier_step is None else float(frontier_step)
    if step <= 0:
        raise ValueError("frontier step must be positive")
    x = {r: route_flows.get(r, CumulativeFlow.zero()) for r in network.routes}
    if all(len(arc_ids) == 1 for arc_ids in network.routes.values()):
        # no propagation needed: each arc's inflow is already settled
        inflows = {aid: {} for aid in network.arcs}
        for rid, (aid,) in network.routes.items():
            inflows[aid][rid] = x[rid]
        totals = {aid: sum_flows(list(d.values())) for aid, d in inflows.items()}
        profiles = {
            aid: network.arcs[aid].model.exit_profile(totals[aid]) for aid in network.arcs
        }
        return ArcFlowBundle(inflows, totals, profiles)
    total_mass = sum(f.total for f in x.values())
    horizon_end = max((f.times[-1] for f in x.values() if not f.is_zero), default=0.0)
    budget = horizon_end + network.passage_bound(total_mass) + 1.0 + step

    empty = {
        aid: {r: CumulativeFlow.zero() for r in network.routes if aid in network.routes[r]}
        for aid in network.arcs
    }
    tiny = 1e-12 * (1.0 + total_mass)
    bundle = {aid: dict(d) for aid, d in empty.items()}
    frontier = 0.0
    while frontier <= budget:
        frontier += step
        new_bundle = {aid: dict(d) for aid, d in empty.items()}
        outflow_cache: dict[str, dict[str, CumulativeFlow]] = {}
        for rid, arc_ids in network.routes.items():
            new_bundle[arc_ids[0]][rid] = x[rid].restrict(frontier)
            for prev, nxt in zip(arc_ids[:-1], arc_ids[1:]):
                if prev not in outflow_cache:
                    outflow_cache[prev] = flowing(
                        network.arcs[prev].model, bundle[prev]
                    )
                new_bundle[nxt][rid] = outflow_cache[prev][rid].restrict(frontier)
        # done only when stable AND every route's mass reached its last arc
        # (curves can stall for a while between separated inflow pulses)
        arrived = all(
            new_bundle[arc_ids[-1]][rid].total >= x[rid].total - tiny
            for rid, arc_ids in network.routes.items()
        )
        if arrived and _bundles_equal(bundle, new_bundle):
            totals = {aid: sum_flows(list(d.values())) for aid, d in new_bundle.items()}
            profiles = {
                aid: network.arcs[aid].model.exit_profile(totals[aid])
                for aid in network.arcs
            }
            return ArcFlowBundle(new_bundle, totals, profiles)
        bundle = new_bundle
    raise NonTermination(
        f"loading frontier passed its budget of {budget:.3g}; "
        "an arc is holding mass beyond its finiteness envelope"
    )


def _bundles_equal(a, b) -> bool:
    for aid, d in a.items():
        for rid, f in d.items():
            if not (f == b[aid][rid]):
                return False
    return True


@dataclass(frozen=True)
class TravelTimePattern:
    """Per-route arrival curves over the study period; travel time is arrival - departure."""

    arrivals: dict[str, ExitTimeCurve]
    horizon: Horizon

    def travel_time(self, route_id: str, h: float) -> float:
        return self.arrivals[route_id].travel_time(h)

    def mean_travel_time(self, route_id: str, lo: float, hi: float) -> float:
        """Exact time-average of the route's travel time over [lo, hi]."""
        if hi <= lo:
            return self.travel_time(route_id, lo)
        area = self.arrivals[route_id].integrate(lo, hi)
        return (area - 0.5 * (hi * hi - lo * lo)) / (hi - lo)


def route_times(network: Network, bundle: ArcFlowBundle, horizon: Horizon) -> TravelTimePattern:
    """Compose each route's arc exit curves into an arrival curve on the horizon."""
    arrivals: dict[str, ExitTimeCurve] = {}
    for rid, arc_ids in network.routes.items():
        comp = bundle.profiles[arc_ids[0]].curve
        for aid in arc_ids[1:]:
            comp = bundle.profiles[aid].curve.compose_after(comp)
        arrivals[rid] = comp
    return TravelTimePattern(arrivals, horizon)


def route_time_by_recursion(
    network: Network, bundle: ArcFlowBundle, route_id: str, h: float
) -> float:
    """Route travel time evaluated arc by arc: each arc is entered when the
    previous one is exited."""
    t = float(h)
    for aid in network.routes[route_id]:
        t = bundle.profiles[aid].curve.value(t)
    return t - h
