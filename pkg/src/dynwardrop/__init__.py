"""Dynamic network loading and dynamic equilibrium assignment.

Flows of users over a day are finite measures on the time axis, stored as
piecewise-linear cumulative curves.  Arc models turn an arc's inflow measure
into an exit-time curve; the loader propagates route inflows arc by arc into
the unique consistent family of arc flows; the equilibrium solvers search for
route (and departure-time) choices no user wants to deviate from, with a
normalized gap as the certificate.
"""

from .arcs import (
    ArcModel,
    ArcPerformanceModel,
    BottleneckModel,
    ConformanceReport,
    ConstantModel,
    ExitProfile,
    check_assumptions,
)
from .curves import ExitTimeCurve, PiecewiseLinearMap
from .equilibrium import (
    DemandTable,
    EquilibriumState,
    SolverConfig,
    UserClass,
    induced_flows,
    margin_error,
    solve_departure_choice,
    solve_wardrop,
    wardrop_gap,
)
from .errors import (
    DegenerateDemand,
    DynWardropError,
    FifoViolation,
    InstanceTooLarge,
    ModelParameterError,
    NoRoute,
    NonTermination,
    ParseError,
    ValidationError,
)
from .flows import CumulativeFlow, Horizon, pushforward, sum_flows
from .network import (
    Arc,
    ArcFlowBundle,
    Network,
    RouteFlowPattern,
    TravelTimePattern,
    flowing,
    load,
    route_time_by_recursion,
    route_times,
)
from .oracle import GridConfig, compare_to_exact, oracle_equilibrium, oracle_load
from .scenario import Scenario, parse_scenario, write_scenario

__version__ = "0.1.0"

__all__ = [
    "Arc",
    "ArcFlowBundle",
    "ArcModel",
    "ArcPerformanceModel",
    "BottleneckModel",
    "ConformanceReport",
    "ConstantModel",
    "CumulativeFlow",
    "DegenerateDemand",
    "DemandTable",
    "DynWardropError",
    "EquilibriumState",
    "ExitProfile",
    "ExitTimeCurve",
    "FifoViolation",
    "GridConfig",
    "Horizon",
    "InstanceTooLarge",
    "ModelParameterError",
    "Network",
    "NoRoute",
    "NonTermination",
    "ParseError",
    "PiecewiseLinearMap",
    "RouteFlowPattern",
    "Scenario",
    "SolverConfig",
    "TravelTimePattern",
    "UserClass",
    "ValidationError",
    "check_assumptions",
    "compare_to_exact",
    "flowing",
    "induced_flows",
    "load",
    "margin_error",
    "oracle_equilibrium",
    "oracle_load",
    "parse_scenario",
    "pushforward",
    "route_time_by_recursion",
    "route_times",
    "solve_departure_choice",
    "solve_wardrop",
    "sum_flows",
    "wardrop_gap",
    "write_scenario",
]
