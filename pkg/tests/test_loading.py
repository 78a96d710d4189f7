"""Network loading: propagation, conservation, causality, composition."""

import numpy as np
import pytest

from dynwardrop.arcs import ArcPerformanceModel, BottleneckModel, ConstantModel
from dynwardrop.errors import ValidationError
from dynwardrop.flows import CumulativeFlow, Horizon
from dynwardrop.network import (
    Arc,
    Network,
    flowing,
    load,
    route_time_by_recursion,
    route_times,
)

from helpers import curve_linf


def two_constant_chain() -> Network:
    return Network(
        arcs={
            "a1": Arc("A", "B", ConstantModel(1.0)),
            "a2": Arc("B", "C", ConstantModel(1.0)),
        },
        routes={"r": ("a1", "a2")},
    )


def shared_bottleneck() -> Network:
    return Network(
        arcs={
            "in1": Arc("A", "M", ConstantModel(0.5)),
            "in2": Arc("B", "M", ConstantModel(0.5)),
            "out": Arc("M", "C", BottleneckModel(1.0, 1.0)),
        },
        routes={"r1": ("in1", "out"), "r2": ("in2", "out")},
    )


# -- structural validation -----------------------------------------------------

def test_disconnected_route_rejected():
    with pytest.raises(ValidationError):
        Network(
            arcs={
                "a1": Arc("A", "B", ConstantModel(1.0)),
                "a2": Arc("C", "D", ConstantModel(1.0)),
            },
            routes={"r": ("a1", "a2")},
        )


def test_route_repeating_arc_rejected():
    with pytest.raises(ValidationError):
        Network(
            arcs={"a1": Arc("A", "A", ConstantModel(1.0))},
            routes={"r": ("a1", "a1")},
        )


# -- flowing --------------------------------------------------------------------

def test_flowing_single_route_constant_shifts_atom():
    out = flowing(ConstantModel(1.0), {"r": CumulativeFlow.atom_at(0.0, 1.0)})
    assert out["r"].atom_mass(1.0) == 1.0


def test_flowing_zero_in_zero_out():
    out = flowing(ConstantModel(1.0), {"r": CumulativeFlow.zero()})
    assert out["r"].is_zero


def test_flowing_two_atoms_share_bottleneck_release():
    model = BottleneckModel(1.0, 1.0)
    out = flowing(
        model,
        {
            "r1": CumulativeFlow.atom_at(0.0, 1.0),
            "r2": CumulativeFlow.atom_at(0.0, 1.0),
        },
    )
    # combined release spans [1, 3]; both routes share identical timing
    for r in ("r1", "r2"):
        assert out[r].total == pytest.approx(1.0, rel=1e-12)
        assert out[r].value(1.0) == pytest.approx(0.0, abs=1e-12)
        assert out[r].value(2.0) == pytest.approx(0.5, abs=1e-12)
        assert out[r].value(3.0) == pytest.approx(1.0, abs=1e-12)


def test_flowing_conserves_mass_per_route():
    model = ArcPerformanceModel.affine(0.5, 0.5)
    inflows = {
        "r1": CumulativeFlow.constant_rate(0.0, 1.0, 1.0),
        "r2": CumulativeFlow.constant_rate(0.5, 2.0, 0.6),
    }
    out = flowing(model, inflows)
    for r, f in inflows.items():
        assert out[r].total == pytest.approx(f.total, rel=1e-12)


# -- load -----------------------------------------------------------------------

def test_chained_constants_shift_atom_twice():
    net = two_constant_chain()
    bundle = load(net, {"r": CumulativeFlow.atom_at(0.0, 1.0)})
    assert bundle.inflow("a2", "r").atom_mass(1.0) == pytest.approx(1.0)
    assert bundle.outflow_total("a2").atom_mass(2.0) == pytest.approx(1.0)


def test_zero_pattern_loads_to_zero():
    net = two_constant_chain()
    bundle = load(net, {"r": CumulativeFlow.zero()})
    for aid in net.arcs:
        assert bundle.total(aid).is_zero


def test_shared_bottleneck_splits_proportionally():
    net = shared_bottleneck()
    x = {
        "r1": CumulativeFlow.constant_rate(0.0, 1.0, 1.0),
        "r2": CumulativeFlow.constant_rate(0.0, 1.0, 1.0),
    }
    bundle = load(net, x)
    shared_in = bundle.total("out")
    # arrives shifted by the 0.5 feeder, combined rate 2 on [0.5, 1.5]
    assert shared_in.mass_between(0.5, 1.5) == pytest.approx(2.0, rel=1e-12)
    out_r1 = flowing(net.arcs["out"].model, bundle.inflows["out"])["r1"]
    # release at capacity 1 over [1.5, 3.5], half per route
    assert out_r1.mass_between(1.5, 3.5) == pytest.approx(1.0, rel=1e-9)
    assert out_r1.mass_between(1.5, 2.5) == pytest.approx(0.5, abs=1e-9)


def test_global_conservation_on_mixed_network():
    net = Network(
        arcs={
            "a": Arc("A", "B", ConstantModel(0.7)),
            "b": Arc("B", "C", BottleneckModel(0.5, 0.8)),
            "c": Arc("B", "C", ArcPerformanceModel.affine(0.6, 0.4)),
            "d": Arc("C", "D", ConstantModel(0.3)),
        },
        routes={"r1": ("a", "b", "d"), "r2": ("a", "c", "d")},
    )
    x = {
        "r1": CumulativeFlow.constant_rate(0.0, 2.0, 1.2),
        "r2": CumulativeFlow.piecewise_rate([(0.0, 1.0, 0.5), (1.0, 3.0, 1.5)]),
    }
    bundle = load(net, x)
    out = flowing(net.arcs["d"].model, bundle.inflows["d"])
    for rid, f in x.items():
        assert out[rid].total == pytest.approx(f.total, rel=1e-9)
        # mass conserved along every arc of the route
        for aid in net.routes[rid]:
            assert bundle.inflow(aid, rid).total == pytest.approx(f.total, rel=1e-9)


def test_frontier_step_refinement_does_not_change_curves():
    net = shared_bottleneck()
    x = {
        "r1": CumulativeFlow.constant_rate(0.0, 1.0, 1.4),
        "r2": CumulativeFlow.constant_rate(0.2, 1.2, 0.9),
    }
    coarse = load(net, x)
    fine = load(net, x, frontier_step=net.t_min_star / 2)
    for aid in net.arcs:
        for rid in coarse.inflows[aid]:
            d = curve_linf(coarse.inflow(aid, rid), fine.inflow(aid, rid))
            assert d < 1e-9


def test_prefix_causality_of_loading():
    # truncating the route inflows at h leaves every arc's outflow (hence
    # every downstream arc's inflow) unchanged up to h plus the network-wide
    # travel-time floor
    net = shared_bottleneck()
    x = {
        "r1": CumulativeFlow.constant_rate(0.0, 2.0, 1.0),
        "r2": CumulativeFlow.constant_rate(0.0, 2.0, 1.0),
    }
    full = load(net, x)
    tstar = net.t_min_star
    for h in (0.4, 1.1, 1.7):
        cut = load(net, {r: f.restrict(h) for r, f in x.items()})
        for rid, arc_ids in net.routes.items():
            for aid in arc_ids[1:]:
                a, b = full.inflow(aid, rid), cut.inflow(aid, rid)
                grid = np.linspace(0.0, h + tstar, 23)
                worst = max(abs(a.value(float(t)) - b.value(float(t))) for t in grid)
                assert worst <= 1e-9
        for aid in net.arcs:
            a, b = full.outflow_total(aid), cut.outflow_total(aid)
            grid = np.linspace(0.0, h + tstar, 23)
            worst = max(abs(a.value(float(t)) - b.value(float(t))) for t in grid)
            assert worst <= 1e-9


# -- route times ------------------------------------------------------------------

def test_two_constant_arcs_give_constant_route_time():
    net = two_constant_chain()
    x = {"r": CumulativeFlow.constant_rate(0.0, 1.0, 1.0)}
    bundle = load(net, x)
    pattern = route_times(net, bundle, Horizon(4.0))
    for h in np.linspace(0.0, 4.0, 9):
        assert pattern.travel_time("r", float(h)) == pytest.approx(2.0, abs=1e-12)


def test_bottleneck_route_time_grows_linearly_while_queue_builds():
    net = Network(
        arcs={"b": Arc("A", "B", BottleneckModel(1.0, 1.0))},
        routes={"r": ("b",)},
    )
    x = {"r": CumulativeFlow.constant_rate(0.0, 1.0, 2.0)}
    pattern = route_times(net, load(net, x), Horizon(4.0))
    for h in np.linspace(0.0, 1.0, 11):
        assert pattern.travel_time("r", float(h)) == pytest.approx(1.0 + h, abs=1e-9)


def test_recursion_equals_composition():
    net = Network(
        arcs={
            "a": Arc("A", "B", ConstantModel(0.7)),
            "b": Arc("B", "C", BottleneckModel(0.5, 0.9)),
            "c": Arc("C", "D", ArcPerformanceModel.affine(0.6, 0.5)),
        },
        routes={"r": ("a", "b", "c")},
    )
    x = {"r": CumulativeFlow.piecewise_rate([(0.0, 1.0, 2.0), (1.5, 2.5, 1.0)])}
    bundle = load(net, x)
    pattern = route_times(net, bundle, Horizon(4.0))
    for h in np.linspace(0.0, 4.0, 100):
        via_composition = pattern.travel_time("r", float(h))
        via_recursion = route_time_by_recursion(net, bundle, "r", float(h))
        assert abs(via_composition - via_recursion) < 1e-12


def test_arrival_sequence_strictly_increases_along_route():
    net = Network(
        arcs={
            "a": Arc("A", "B", ConstantModel(0.4)),
            "b": Arc("B", "C", BottleneckModel(0.3, 1.2)),
        },
        routes={"r": ("a", "b")},
    )
    x = {"r": CumulativeFlow.constant_rate(0.0, 2.0, 2.0)}
    bundle = load(net, x)
    for h in np.linspace(0.0, 2.0, 15):
        t = float(h)
        seq = [t]
        for aid in net.routes["r"]:
            t = bundle.profiles[aid].curve.value(t)
            seq.append(t)
        assert all(b > a for a, b in zip(seq[:-1], seq[1:]))
