"""Shared fixture networks and inflow patterns for verification suites.

Ten small instances (at most 6 arcs, 4 routes) covering every arc model,
shared arcs, chains, and point masses.  Point masses never reach a
volume-delay arc directly: that combination is outside the model family's
admissible inputs (the released mass would overtake).
"""

from __future__ import annotations

from dataclasses import dataclass

from dynwardrop.arcs import ArcPerformanceModel, BottleneckModel, ConstantModel
from dynwardrop.flows import CumulativeFlow, Horizon, sum_flows
from dynwardrop.network import Arc, Network, RouteFlowPattern


@dataclass(frozen=True)
class Fixture:
    name: str
    network: Network
    flows: RouteFlowPattern
    horizon: Horizon


def acceptance_fixtures() -> list[Fixture]:
    H = Horizon(4.0)
    out: list[Fixture] = []

    out.append(Fixture(
        "single_constant",
        Network({"a": Arc("A", "B", ConstantModel(1.0))}, {"r": ("a",)}),
        {"r": CumulativeFlow.constant_rate(0.0, 2.0, 1.5)},
        H,
    ))

    out.append(Fixture(
        "constant_chain_with_atom",
        Network(
            {
                "a": Arc("A", "B", ConstantModel(0.5)),
                "b": Arc("B", "C", ConstantModel(1.0)),
            },
            {"r": ("a", "b")},
        ),
        {
            "r": sum_flows([
                CumulativeFlow.constant_rate(0.0, 1.5, 1.0),
                CumulativeFlow.atom_at(0.75, 0.8),
            ])
        },
        H,
    ))

    out.append(Fixture(
        "overloaded_bottleneck",
        Network({"b": Arc("A", "B", BottleneckModel(1.0, 1.0))}, {"r": ("b",)}),
        {"r": CumulativeFlow.constant_rate(0.0, 1.0, 2.0)},
        H,
    ))

    out.append(Fixture(
        "shared_bottleneck",
        Network(
            {
                "f1": Arc("A", "M", ConstantModel(0.5)),
                "f2": Arc("B", "M", ConstantModel(0.25)),
                "out": Arc("M", "C", BottleneckModel(0.5, 1.0)),
            },
            {"r1": ("f1", "out"), "r2": ("f2", "out")},
        ),
        {
            "r1": CumulativeFlow.constant_rate(0.0, 1.0, 1.0),
            "r2": CumulativeFlow.constant_rate(0.25, 1.25, 0.9),
        },
        H,
    ))

    out.append(Fixture(
        "single_volume_delay",
        Network(
            {"p": Arc("A", "B", ArcPerformanceModel.affine(0.5, 0.8))},
            {"r": ("p",)},
        ),
        {"r": CumulativeFlow.piecewise_rate([(0.0, 1.0, 2.0), (1.0, 2.5, 0.6)])},
        H,
    ))

    out.append(Fixture(
        "chain_through_volume_delay",
        Network(
            {
                "a": Arc("A", "B", ConstantModel(0.5)),
                "p": Arc("B", "C", ArcPerformanceModel((0.0, 1.0, 4.0), (0.6, 1.0, 2.2))),
                "z": Arc("C", "D", ConstantModel(0.25)),
            },
            {"r": ("a", "p", "z")},
        ),
        {"r": CumulativeFlow.piecewise_rate([(0.0, 1.0, 1.8), (1.5, 2.0, 1.0)])},
        H,
    ))

    out.append(Fixture(
        "constant_vs_bottleneck",
        Network(
            {
                "fast": Arc("A", "B", ConstantModel(1.0)),
                "jam": Arc("A", "B", BottleneckModel(0.5, 1.0)),
            },
            {"r1": ("fast",), "r2": ("jam",)},
        ),
        {
            "r1": CumulativeFlow.constant_rate(0.0, 1.0, 0.8),
            "r2": CumulativeFlow.constant_rate(0.0, 1.0, 1.2),
        },
        H,
    ))

    out.append(Fixture(
        "symmetric_pair",
        Network(
            {
                "p1": Arc("A", "B", ArcPerformanceModel.affine(1.0, 0.5)),
                "p2": Arc("A", "B", ArcPerformanceModel.affine(1.0, 0.5)),
            },
            {"r1": ("p1",), "r2": ("p2",)},
        ),
        {
            "r1": CumulativeFlow.constant_rate(0.0, 1.0, 1.0),
            "r2": CumulativeFlow.constant_rate(0.0, 1.0, 1.0),
        },
        H,
    ))

    out.append(Fixture(
        "diamond",
        Network(
            {
                "in": Arc("A", "B", ConstantModel(0.5)),
                "up": Arc("B", "C", BottleneckModel(0.5, 1.2)),
                "dn": Arc("B", "C", ArcPerformanceModel.affine(0.7, 0.5)),
                "out": Arc("C", "D", ConstantModel(0.25)),
            },
            {"r1": ("in", "up", "out"), "r2": ("in", "dn", "out")},
        ),
        {
            "r1": CumulativeFlow.constant_rate(0.0, 1.5, 1.1),
            "r2": CumulativeFlow.piecewise_rate([(0.5, 2.0, 0.7)]),
        },
        H,
    ))

    out.append(Fixture(
        "three_feeders_and_direct",
        Network(
            {
                "f1": Arc("A", "M", ConstantModel(0.5)),
                "f2": Arc("B", "M", ConstantModel(0.75)),
                "f3": Arc("C", "M", ConstantModel(1.0)),
                "srv": Arc("M", "Z", BottleneckModel(0.5, 1.5)),
                "direct": Arc("D", "Z", ConstantModel(2.0)),
            },
            {
                "r1": ("f1", "srv"),
                "r2": ("f2", "srv"),
                "r3": ("f3", "srv"),
                "r4": ("direct",),
            },
        ),
        {
            "r1": CumulativeFlow.constant_rate(0.0, 1.0, 0.9),
            "r2": CumulativeFlow.constant_rate(0.5, 1.5, 0.8),
            "r3": CumulativeFlow.constant_rate(0.0, 2.0, 0.5),
            "r4": sum_flows([
                CumulativeFlow.constant_rate(0.0, 1.0, 0.4),
                CumulativeFlow.atom_at(0.5, 0.6),
            ]),
        },
        H,
    ))

    return out
