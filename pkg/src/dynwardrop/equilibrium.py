"""Route and departure-time equilibrium search with a quantitative gap.

The route-choice solver looks for patterns where, at almost every departure
instant, no used route of an origin-destination pair is slower than an unused
alternative.  Departure choice generalizes this to scheduling utilities with
earliness/lateness penalties around a preferred arrival time.

Both solvers discretize departures into uniform bins, iterate an
all-or-nothing best response, and average with a vanishing (or fixed) step.
No convergence guarantee is claimed; the certificate is the reported gap:
the mass-weighted excess travel time (or utility regret) relative to the best
available alternative, normalized to [0, 1].
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from .errors import DegenerateDemand, NoRoute, ValidationError
from .flows import CumulativeFlow, Horizon, sum_flows
from .network import Network, RouteFlowPattern, TravelTimePattern, load, route_times

OD = tuple[str, str]


@dataclass(frozen=True)
class DemandTable:
    """Departure-rate measures per origin-destination pair, atom-free."""

    rates: Mapping[OD, CumulativeFlow]
    horizon: Horizon

    def __post_init__(self):
        object.__setattr__(self, "rates", dict(self.rates))
        for od, q in self.rates.items():
            if np.any(q.atoms > 0):
                raise ValidationError(f"demand for {od} carries point masses")
            if not q.is_zero and (q.times[0] < 0 or q.times[-1] > self.horizon.end):
                raise ValidationError(f"demand for {od} leaves the horizon")

    @property
    def total(self) -> float:
        return sum(q.total for q in self.rates.values())


@dataclass(frozen=True)
class UserClass:
    """A group of identical users choosing a route and a departure bin.

    Utility of departing at h on route r with arrival a(h) = h + travel time:
    ``-alpha * travel - beta * max(0, h_star - a) - gamma * max(0, a - h_star)``.
    A class with ``departure_rate`` set keeps its given departure profile and
    only chooses routes.
    """

    origin: str
    destination: str
    mass: float
    h_star: float = 0.0
    alpha: float = 1.0
    beta: float = 0.0
    gamma: float = 0.0
    departure_rate: CumulativeFlow | None = None

    def __post_init__(self):
        if not self.mass > 0:
            raise ValidationError("user class mass must be positive")
        if self.alpha <= 0 or self.beta < 0 or self.gamma < 0:
            raise ValidationError("utility weights out of range")

    @property
    def od(self) -> OD:
        return (self.origin, self.destination)

    @property
    def chooses_departure(self) -> bool:
        return self.departure_rate is None


@dataclass(frozen=True)
class SolverConfig:
    """Knobs of the averaged best-response iteration.

    Route choice reassigns each (od, bin) all-or-nothing and averages with the
    chosen step rule.  Departure choice smooths the reassignment through a
    logit response whose temperature anneals toward ``logit_floor`` (the
    zero-temperature limit is the all-or-nothing response): whole-mass dumps
    into single departure bins otherwise leave queue holes that keep the
    regret certificate stuck well above its target at practical iteration
    counts.  Everything is deterministic.
    """

    bin_width: float
    max_iters: int = 200
    tolerance: float = 1e-3
    step_rule: str = "msa"  # or "fixed"
    fixed_step: float = 0.25
    tie_tolerance: float = 1e-12
    logit_start: float = 0.5
    logit_floor: float = 0.025
    seed: int = 0

    def __post_init__(self):
        if self.bin_width <= 0 or self.tolerance <= 0:
            raise ValidationError("bin width and tolerance must be positive")
        if self.step_rule not in ("msa", "fixed"):
            raise ValidationError(f"unknown step rule {self.step_rule!r}")
        if self.logit_floor <= 0 or self.logit_start < self.logit_floor:
            raise ValidationError("logit temperatures out of range")

    def bins_for(self, horizon: Horizon) -> int:
        n = horizon.end / self.bin_width
        if abs(n - round(n)) > 1e-9 * max(1.0, n):
            raise ValidationError("bin width must divide the horizon")
        return int(round(n))


@dataclass
class EquilibriumState:
    """Solver output: per-class splits, flows, times, and the gap trace."""

    flows: RouteFlowPattern
    times: TravelTimePattern
    gap: float
    gap_trace: list[tuple[int, float]]
    converged: bool
    splits: dict = field(default_factory=dict)
    max_margin_error: float = 0.0

    @property
    def iterations(self) -> int:
        return len(self.gap_trace)


# -- flows from splits ---------------------------------------------------------


def induced_flows(
    network: Network,
    demand: DemandTable,
    shares: Mapping[OD, np.ndarray],
    edges: np.ndarray,
) -> RouteFlowPattern:
    """Assemble route inflows from per-(od, bin) route shares.

    ``shares[od]`` has shape (routes of od, bins); each column sums to one.
    Within a bin, demand keeps its own departure profile, so the od margins
    reproduce the demand bin by bin.
    """
    flows: RouteFlowPattern = {r: CumulativeFlow.zero() for r in network.routes}
    for od, share in shares.items():
        rset = network.routes_between(*od)
        q = demand.rates[od]
        slices = [q.clip(float(a), float(b)) for a, b in zip(edges[:-1], edges[1:])]
        for k, rid in enumerate(rset):
            parts = [
                s.scaled(float(share[k, b]))
                for b, s in enumerate(slices)
                if share[k, b] > 0 and not s.is_zero
            ]
            if parts:
                flows[rid] = sum_flows([flows[rid], *parts])
    return flows


def margin_error(
    network: Network,
    demand: DemandTable,
    flows: RouteFlowPattern,
    edges: np.ndarray,
) -> float:
    """Worst relative mismatch between route-flow margins and demand, per bin."""
    worst = 0.0
    for od, q in demand.rates.items():
        rset = network.routes_between(*od)
        for a, b in zip(edges[:-1], edges[1:]):
            want = q.mass_between(float(a), float(b))
            got = sum(flows[r].mass_between(float(a), float(b)) for r in rset)
            worst = max(worst, abs(got - want) / (1.0 + want))
    return worst


# -- gap ------------------------------------------------------------------------


def _integrate_against(flow: CumulativeFlow, fn, kinks: np.ndarray) -> float:
    """Exact integral of a piecewise-linear fn against the flow measure."""
    if flow.is_zero:
        return 0.0
    lo, hi = flow.support()
    pts = np.unique(np.concatenate([flow.times, kinks[(kinks > lo) & (kinks < hi)]]))
    total = 0.0
    for t, atom in zip(flow.times, flow.atoms):
        if atom > 0:
            total += atom * fn(float(t))
    for a, b in zip(pts[:-1], pts[1:]):
        rate = flow.slope_at(float((a + b) / 2))
        if rate > 0:
            total += rate * 0.5 * (fn(float(a)) + fn(float(b))) * (b - a)
    return total


def wardrop_gap(
    network: Network, flows: RouteFlowPattern, times: TravelTimePattern
) -> float:
    """Normalized mass-weighted excess travel time over the per-od minimum.

    Zero exactly when, at the quadrature resolution (all curve breakpoints
    plus pairwise crossing points), no used departure instant rides a route
    slower than an alternative of the same od pair.

    Raises:
        DegenerateDemand: the flow pattern carries no mass.
    """
    num = 0.0
    den = 0.0
    by_od: dict[OD, list[str]] = {}
    for rid in network.routes:
        by_od.setdefault(network.od_of_route(rid), []).append(rid)
    for od, rset in sorted(by_od.items()):
        live = [r for r in rset if not flows[r].is_zero]
        if not live:
            continue
        curves = {r: times.arrivals[r] for r in rset}
        kinks = [c.xs for c in curves.values()]
        # pairwise crossings refine the quadrature so min() is exact piecewise
        cross: list[float] = []
        for i, r1 in enumerate(rset):
            for r2 in rset[i + 1:]:
                cross.extend(_crossings(curves[r1], curves[r2]))
        refine = np.unique(np.concatenate([*kinks, np.array(cross)])) if cross else np.unique(np.concatenate(kinks))

        def tmin(h: float) -> float:
            return min(c.travel_time(h) for c in curves.values())

        for r in live:
            tr = curves[r]
            num += _integrate_against(
                flows[r], lambda h: tr.travel_time(h) - tmin(h), refine
            )
            den += _integrate_against(flows[r], lambda h: tr.travel_time(h), refine)
    if den <= 0.0:
        raise DegenerateDemand("gap undefined for a massless pattern")
    return max(0.0, num / den)


def _crossings(c1, c2) -> list[float]:
    """Abscissae where two piecewise-linear maps cross."""
    xs = np.unique(np.concatenate([c1.xs, c2.xs]))
    if xs.size == 0:
        return []
    out: list[float] = []
    span = np.concatenate([[xs[0] - 1.0], xs, [xs[-1] + 1.0]])
    for a, b in zip(span[:-1], span[1:]):
        f_a = c1.value(float(a)) - c2.value(float(a))
        f_b = c1.left_value(float(b)) - c2.left_value(float(b))
        if f_a * f_b < 0:
            out.append(float(a + (b - a) * f_a / (f_a - f_b)))
    return out


# -- route-choice equilibrium ----------------------------------------------------


def solve_wardrop(
    network: Network, demand: DemandTable, config: SolverConfig
) -> EquilibriumState:
    """Averaged all-or-nothing iteration toward a route-choice equilibrium.

    Starts from uniform splits.  Every iteration loads the induced flows,
    measures the gap, and reassigns each (od, bin) to its fastest route by
    bin-averaged travel time (ties to the lowest route id).  Returns the
    best-gap state visited.

    Raises:
        NoRoute: some od pair has positive demand but no route.
    """
    horizon = demand.horizon
    bins = config.bins_for(horizon)
    edges = np.linspace(0.0, horizon.end, bins + 1)
    ods = [od for od, q in sorted(demand.rates.items()) if q.total > 0]
    for od in ods:
        if not network.routes_between(*od):
            raise NoRoute(f"demand between {od} has no route")
    shares = {
        od: np.full((len(network.routes_between(*od)), bins), 1.0 / len(network.routes_between(*od)))
        for od in ods
    }

    best: EquilibriumState | None = None
    trace: list[tuple[int, float]] = []
    worst_margin = 0.0
    for it in range(1, config.max_iters + 1):
        flows = induced_flows(network, demand, shares, edges)
        worst_margin = max(worst_margin, margin_error(network, demand, flows, edges))
        bundle = load(network, flows)
        times = route_times(network, bundle, horizon)
        gap = wardrop_gap(network, flows, times)
        trace.append((it, gap))
        if best is None or gap < best.gap:
            best = EquilibriumState(
                flows=flows,
                times=times,
                gap=gap,
                gap_trace=[],
                converged=gap <= config.tolerance,
                splits={od: s.copy() for od, s in shares.items()},
                max_margin_error=worst_margin,
            )
        if gap <= config.tolerance:
            break
        step = 1.0 / (it + 1) if config.step_rule == "msa" else config.fixed_step
        for od in ods:
            rset = network.routes_between(*od)
            if len(rset) <= 1:
                continue
            target = np.zeros_like(shares[od])
            for b in range(bins):
                lo, hi = float(edges[b]), float(edges[b + 1])
                costs = np.array([times.mean_travel_time(r, lo, hi) for r in rset])
                # deterministic tie break toward the lowest route id
                k = int(np.flatnonzero(costs <= costs.min() + config.tie_tolerance)[0])
                target[k, b] = 1.0
            shares[od] = (1.0 - step) * shares[od] + step * target
    assert best is not None
    best.gap_trace = trace
    best.max_margin_error = worst_margin
    return best


# -- departure-time choice ---------------------------------------------------------


def _class_utilities(
    cls: UserClass,
    rset: Sequence[str],
    times: TravelTimePattern,
    edges: np.ndarray,
) -> np.ndarray:
    """Bin-averaged utility of each (route, bin) option for one class."""
    out = np.empty((len(rset), edges.size - 1))
    for k, rid in enumerate(rset):
        arr = times.arrivals[rid]
        for b in range(edges.size - 1):
            lo, hi = float(edges[b]), float(edges[b + 1])
            pts = [lo, hi]
            for x in arr.xs:
                if lo < x < hi:
                    pts.append(float(x))
            # break where the arrival crosses the preferred instant
            c = arr.preimage_sup(cls.h_star)
            if lo < c < hi:
                pts.append(float(c))
            c = arr.preimage_inf(cls.h_star)
            if lo < c < hi:
                pts.append(float(c))
            pts_a = np.unique(np.array(pts))
            total = 0.0
            for a, b2 in zip(pts_a[:-1], pts_a[1:]):
                u_a = _utility_at(cls, arr, a)
                u_b = _utility_at(cls, arr, b2, left=True)
                total += 0.5 * (u_a + u_b) * (b2 - a)
            out[k, b] = total / (hi - lo)
    return out


def _utility_at(cls: UserClass, arrival_curve, h: float, left: bool = False) -> float:
    a = arrival_curve.left_value(h) if left else arrival_curve.value(h)
    travel = a - h
    early = max(0.0, cls.h_star - a)
    late = max(0.0, a - cls.h_star)
    return -cls.alpha * travel - cls.beta * early - cls.gamma * late


def solve_departure_choice(
    network: Network, classes: Sequence[UserClass], config: SolverConfig, horizon: Horizon
) -> EquilibriumState:
    """Averaged best response over joint (route, departure-bin) choices.

    The certificate is utility regret: the mass-weighted average shortfall
    against each class's best available option, normalized by the weighted
    magnitude of the best utilities plus one.

    Raises:
        NoRoute: a class's od pair has no connecting route.
    """
    if not classes:
        raise ValidationError("need at least one user class")
    bins = config.bins_for(horizon)
    edges = np.linspace(0.0, horizon.end, bins + 1)
    widths = np.diff(edges)
    rsets = []
    for cls in classes:
        rset = network.routes_between(*cls.od)
        if not rset:
            raise NoRoute(f"class between {cls.od} has no route")
        rsets.append(rset)
        reach = min(network.arcs[a].model.t_min for r in rset for a in network.routes[r])
        if cls.chooses_departure and cls.h_star > horizon.end + reach:
            import warnings

            warnings.warn(
                f"preferred arrival {cls.h_star} may be unreachable inside the horizon",
                stacklevel=2,
            )

    # splits[c]: probability over (route, bin); fixed-departure classes hold
    # per-bin route splits weighted by their own departure profile
    splits: list[np.ndarray] = []
    fixed_bin_mass: list[np.ndarray | None] = []
    for cls, rset in zip(classes, rsets):
        if cls.chooses_departure:
            splits.append(np.full((len(rset), bins), 1.0 / (len(rset) * bins)))
            fixed_bin_mass.append(None)
        else:
            q = cls.departure_rate
            bm = np.array([q.mass_between(float(a), float(b)) for a, b in zip(edges[:-1], edges[1:])])
            bm = bm * (cls.mass / bm.sum()) if bm.sum() > 0 else bm
            splits.append(np.full((len(rset), bins), 1.0 / len(rset)))
            fixed_bin_mass.append(bm)

    def flows_from_splits() -> RouteFlowPattern:
        flows: RouteFlowPattern = {r: CumulativeFlow.zero() for r in network.routes}
        for cls, rset, split, bm in zip(classes, rsets, splits, fixed_bin_mass):
            for k, rid in enumerate(rset):
                segs = []
                for b in range(bins):
                    m = (
                        cls.mass * split[k, b]
                        if bm is None
                        else bm[b] * split[k, b]
                    )
                    if m > 0:
                        segs.append((float(edges[b]), float(edges[b + 1]), m / widths[b]))
                if segs:
                    flows[rid] = sum_flows([flows[rid], CumulativeFlow.piecewise_rate(segs)])
        return flows

    best: EquilibriumState | None = None
    trace: list[tuple[int, float]] = []
    worst_margin = 0.0
    for it in range(1, config.max_iters + 1):
        flows = flows_from_splits()
        total_mass = sum(f.total for f in flows.values())
        worst_margin = max(
            worst_margin,
            abs(total_mass - sum(c.mass for c in classes)) / (1 + total_mass),
        )
        bundle = load(network, flows)
        times = route_times(network, bundle, horizon)

        temperature = max(config.logit_floor, config.logit_start * 0.985**it)
        regret_mass = 0.0
        norm = 0.0
        targets = []
        for cls, rset, split, bm in zip(classes, rsets, splits, fixed_bin_mass):
            u = _class_utilities(cls, rset, times, edges)
            if cls.chooses_departure:
                best_u = float(u.max())
                achieved = float(np.sum(split * u))
                regret_mass += cls.mass * (best_u - achieved)
                norm += cls.mass * abs(best_u)
                z = np.clip((u - best_u) / temperature, -700.0, 0.0)
                target = np.exp(z)
                target /= target.sum()
                targets.append(target)
            else:
                target = np.zeros_like(split)
                best_w = 0.0
                ach_w = 0.0
                for b in range(bins):
                    k = int(np.flatnonzero(u[:, b] >= u[:, b].max() - config.tie_tolerance)[0])
                    target[k, b] = 1.0
                    w = bm[b] / cls.mass if cls.mass > 0 else 0.0
                    best_w += w * u[k, b]
                    ach_w += w * float(np.dot(split[:, b], u[:, b]))
                regret_mass += cls.mass * (best_w - ach_w)
                norm += cls.mass * abs(best_w)
                targets.append(target)
        gap = max(0.0, regret_mass) / (norm + 1.0)
        trace.append((it, gap))
        if best is None or gap < best.gap:
            best = EquilibriumState(
                flows=flows,
                times=times,
                gap=gap,
                gap_trace=[],
                converged=gap <= config.tolerance,
                splits={i: s.copy() for i, s in enumerate(splits)},
                max_margin_error=worst_margin,
            )
        if gap <= config.tolerance:
            break
        if config.step_rule == "fixed":
            step = config.fixed_step
        else:
            # annealed averaging: vanishing 1/n steps freeze transients in
            # before the joint simplex has taken the equilibrium shape
            step = max(0.03, 0.3 * 0.99**it)
        for i in range(len(splits)):
            splits[i] = (1.0 - step) * splits[i] + step * targets[i]
    assert best is not None
    best.gap_trace = trace
    best.max_margin_error = worst_margin
    return best
