"""Flows over the time axis stored as piecewise-linear cumulative curves.

A flow is a finite nonnegative measure on the real line.  It is stored through
its cumulative curve ``F(h) = mass of ]-inf, h]``, which is nondecreasing,
right-continuous, piecewise linear between breakpoints and constant after the
last one.  A point mass (atom) shows up as an upward jump of the curve.

The stored data is redundant on purpose: each breakpoint carries its time, the
cumulative value reached there, the atom mass concentrated at it, and the
constant density on the interval to the next breakpoint.  Keeping the segment
densities as primary data (instead of re-deriving them from endpoint values)
makes restriction exactly idempotent: cutting a curve twice produces the same
bits as cutting it once, because evaluation inside a segment only ever uses
the segment's left endpoint and its stored density.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .errors import FifoViolation

#: Breakpoints closer than this (seconds) are merged when curves are combined.
MERGE_TOL = 1e-9


@dataclass(frozen=True)
class Horizon:
    """The study period [0, end], in seconds."""

    end: float

    def __post_init__(self):
        if not self.end > 0:
            raise ValueError(f"horizon end must be positive, got {self.end}")


def _freeze(a: np.ndarray) -> np.ndarray:
    a = np.asarray(a, dtype=float)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class CumulativeFlow:
    """A finite measure on the time axis, held as a cumulative curve.

    Attributes:
        times: breakpoint instants, strictly increasing.
        cums: cumulative mass at each breakpoint (right-continuous, so the
            value includes the atom sitting there).
        atoms: point mass concentrated at each breakpoint, >= 0.
        slopes: constant density on ``[times[i], times[i+1])``; the last entry
            is 0 (the curve is constant after its final breakpoint).
    """

    times: np.ndarray
    cums: np.ndarray
    atoms: np.ndarray
    slopes: np.ndarray

    # -- construction -----------------------------------------------------

    def __post_init__(self):
        object.__setattr__(self, "times", _freeze(self.times))
        object.__setattr__(self, "cums", _freeze(self.cums))
        object.__setattr__(self, "atoms", _freeze(self.atoms))
        object.__setattr__(self, "slopes", _freeze(self.slopes))

    @staticmethod
    def zero() -> "CumulativeFlow":
        e = np.empty(0)
        return CumulativeFlow(e, e.copy(), e.copy(), e.copy())

    @staticmethod
    def atom_at(time: float, mass: float) -> "CumulativeFlow":
        """A single point mass."""
        if mass < 0:
            raise ValueError("atom mass must be nonnegative")
        if mass == 0:
            return CumulativeFlow.zero()
        return CumulativeFlow(
            np.array([float(time)]), np.array([float(mass)]),
            np.array([float(mass)]), np.array([0.0]),
        )

    @staticmethod
    def constant_rate(start: float, end: float, rate: float) -> "CumulativeFlow":
        """Mass flowing at a constant rate over [start, end)."""
        return CumulativeFlow.piecewise_rate([(start, end, rate)])

    @staticmethod
    def piecewise_rate(segments: Iterable[tuple[float, float, float]]) -> "CumulativeFlow":
        """Absolutely continuous flow from (start, end, rate) segments.

        Segments may overlap; rates add where they do.
        """
        segs = [(float(a), float(b), float(r)) for a, b, r in segments]
        for a, b, r in segs:
            if b <= a:
                raise ValueError(f"segment end must exceed start: ({a}, {b})")
            if r < 0:
                raise ValueError(f"negative rate {r}")
        segs = [s for s in segs if s[2] > 0]
        if not segs:
            return CumulativeFlow.zero()
        bounds = np.unique(np.concatenate([[a, b] for a, b, _ in segs]))
        mids = (bounds[:-1] + bounds[1:]) / 2
        rates = np.zeros(len(mids))
        for a, b, r in segs:
            rates[(mids > a) & (mids < b)] += r
        times = bounds
        slopes = np.append(rates, 0.0)
        cums = np.concatenate([[0.0], np.cumsum(rates * np.diff(bounds))])
        atoms = np.zeros_like(times)
        return _build(times, cums, atoms, slopes)

    @staticmethod
    def from_cumulative_points(times: Sequence[float], values: Sequence[float]) -> "CumulativeFlow":
        """Continuous flow interpolating the given nondecreasing cumulative samples."""
        t = np.asarray(times, dtype=float)
        v = np.asarray(values, dtype=float)
        if t.size != v.size:
            raise ValueError("times and values must have equal length")
        if t.size == 0 or v[-1] == 0:
            return CumulativeFlow.zero()
        if np.any(np.diff(t) <= 0):
            raise ValueError("times must be strictly increasing")
        if np.any(np.diff(v) < 0):
            raise ValueError("cumulative values must be nondecreasing")
        v = v - v[0]
        slopes = np.append(np.diff(v) / np.diff(t), 0.0)
        return _build(t, v, np.zeros_like(t), slopes)

    # -- basic queries -----------------------------------------------------

    @property
    def total(self) -> float:
        """Total mass of the measure."""
        return float(self.cums[-1]) if self.times.size else 0.0

    @property
    def is_zero(self) -> bool:
        return self.times.size == 0

    def support(self) -> tuple[float, float] | None:
        """Smallest closed interval carrying all mass, or None for the zero flow."""
        if self.is_zero:
            return None
        return float(self.times[0]), float(self.times[-1])

    def value(self, h: float) -> float:
        """Cumulative mass of ]-inf, h] (right-continuous)."""
        if self.is_zero:
            return 0.0
        i = int(np.searchsorted(self.times, h, side="right")) - 1
        if i < 0:
            return 0.0
        return float(self.cums[i] + self.slopes[i] * (h - self.times[i]))

    def left_value(self, h: float) -> float:
        """Cumulative mass of ]-inf, h[ (left limit of the curve)."""
        if self.is_zero:
            return 0.0
        j = int(np.searchsorted(self.times, h, side="left"))
        if j < self.times.size and self.times[j] == h:
            return float(self.cums[j] - self.atoms[j])
        i = j - 1
        if i < 0:
            return 0.0
        return float(self.cums[i] + self.slopes[i] * (h - self.times[i]))

    def atom_mass(self, h: float) -> float:
        """Point mass sitting exactly at h."""
        if self.is_zero:
            return 0.0
        j = int(np.searchsorted(self.times, h, side="left"))
        if j < self.times.size and self.times[j] == h:
            return float(self.atoms[j])
        return 0.0

    def slope_at(self, h: float) -> float:
        """Density on the segment containing h (right-sided)."""
        if self.is_zero:
            return 0.0
        i = int(np.searchsorted(self.times, h, side="right")) - 1
        if i < 0:
            return 0.0
        return float(self.slopes[i])

    def mass_between(self, lo: float, hi: float) -> float:
        """Mass of the half-open interval ]lo, hi].

        Out-of-support endpoints clamp to 0 / total mass.
        """
        if lo > hi:
            raise ValueError(f"interval bounds out of order: ({lo}, {hi})")
        return max(0.0, self.value(hi) - self.value(lo))

    # -- algebra -----------------------------------------------------------

    def restrict(self, h: float) -> "CumulativeFlow":
        """The measure of ``J -> mass(J inter ]-inf, h])``.

        The cumulative curve equals this one up to h and is constant after.
        """
        if self.is_zero:
            return self
        if h >= self.times[-1]:
            return self
        if h < self.times[0]:
            return CumulativeFlow.zero()
        k = int(np.searchsorted(self.times, h, side="right")) - 1
        # k >= 0 here since h >= times[0]
        if self.times[k] == h or self.slopes[k] == 0.0:
            times = self.times[: k + 1]
            cums = self.cums[: k + 1]
            atoms = self.atoms[: k + 1]
            slopes = np.append(self.slopes[:k], 0.0)
            return CumulativeFlow(times, cums, atoms, slopes)
        v = self.cums[k] + self.slopes[k] * (h - self.times[k])
        times = np.append(self.times[: k + 1], h)
        cums = np.append(self.cums[: k + 1], v)
        atoms = np.append(self.atoms[: k + 1], 0.0)
        slopes = np.concatenate([self.slopes[: k + 1], [0.0]])
        return CumulativeFlow(times, cums, atoms, slopes)

    def after(self, h: float) -> "CumulativeFlow":
        """The measure of ``J -> mass(J inter ]h, +inf[)``."""
        if self.is_zero or h < self.times[0]:
            return self
        if h >= self.times[-1]:
            return CumulativeFlow.zero()
        base = self.value(h)
        j = int(np.searchsorted(self.times, h, side="right"))
        times = self.times[j:]
        cums = self.cums[j:] - base
        atoms = self.atoms[j:]
        slopes = self.slopes[j:]
        s = self.slope_at(h)
        if s > 0.0:
            times = np.append(h, times)
            cums = np.append(0.0, cums)
            atoms = np.append(0.0, atoms)
            slopes = np.append(s, slopes)
        return _build(times, cums, atoms, slopes)

    def clip(self, lo: float, hi: float) -> "CumulativeFlow":
        """Mass carried on the half-open window ]lo, hi]."""
        if lo > hi:
            raise ValueError(f"window bounds out of order: ({lo}, {hi})")
        return self.restrict(hi).after(lo)

    def scaled(self, factor: float) -> "CumulativeFlow":
        """The measure multiplied by a nonnegative factor."""
        if factor < 0:
            raise ValueError("scale factor must be nonnegative")
        if factor == 0 or self.is_zero:
            return CumulativeFlow.zero()
        return CumulativeFlow(
            self.times, self.cums * factor, self.atoms * factor, self.slopes * factor
        )

    def shifted(self, delta: float) -> "CumulativeFlow":
        """The measure translated by delta along the time axis."""
        if self.is_zero or delta == 0.0:
            return self
        return CumulativeFlow(self.times + delta, self.cums, self.atoms, self.slopes)

    def breakpoints(self) -> list[tuple[float, float]]:
        """(time, cumulative mass) pairs of the curve."""
        return list(zip(self.times.tolist(), self.cums.tolist()))

    def __eq__(self, other) -> bool:
        if not isinstance(other, CumulativeFlow):
            return NotImplemented
        return (
            np.array_equal(self.times, other.times)
            and np.array_equal(self.cums, other.cums)
            and np.array_equal(self.atoms, other.atoms)
            and np.array_equal(self.slopes, other.slopes)
        )


def _build(times, cums, atoms, slopes) -> CumulativeFlow:
    """Validate and canonicalize breakpoint arrays (drop redundant vertices)."""
    times = np.asarray(times, dtype=float)
    cums = np.asarray(cums, dtype=float)
    atoms = np.asarray(atoms, dtype=float)
    slopes = np.asarray(slopes, dtype=float)
    n = times.size
    if n == 0:
        return CumulativeFlow.zero()
    if np.any(np.diff(times) <= 0):
        raise ValueError("breakpoint times must be strictly increasing")
    if np.any(np.diff(cums) < 0) or np.any(atoms < 0) or np.any(slopes < 0):
        raise ValueError("cumulative curve must be nondecreasing")
    drift = cums[0] - atoms[0]
    if abs(drift) > MERGE_TOL * (1.0 + abs(cums[-1])):
        raise ValueError("curve must start from zero mass")
    if drift != 0.0:
        # sub-tolerance residue from merged evaluations; fold it into the vertex
        atoms = atoms.copy()
        atoms[0] = cums[0]
    if slopes[-1] != 0.0:
        raise ValueError("curve must be constant after its last breakpoint")
    prev_slopes = np.concatenate([[0.0], slopes[:-1]])
    keep = (atoms > 0) | (slopes != prev_slopes)
    if not np.any(keep) or cums[-1] == 0.0:
        return CumulativeFlow.zero()
    # A vertex is redundant when it carries no atom and no slope change; its
    # removal leaves every evaluation untouched.
    times, cums, atoms, slopes = (a[keep] for a in (times, cums, atoms, slopes))
    return CumulativeFlow(times, cums, atoms, slopes)


def sum_flows(flows: Iterable[CumulativeFlow]) -> CumulativeFlow:
    """Pointwise sum of cumulative curves.

    The result's breakpoints are the union of the inputs' breakpoints; times
    closer than ``MERGE_TOL`` collapse onto the earliest of their cluster.
    """
    parts = [f for f in flows if not f.is_zero]
    if not parts:
        return CumulativeFlow.zero()
    if len(parts) == 1:
        return parts[0]
    all_times = np.unique(np.concatenate([f.times for f in parts]))
    reps: list[float] = []
    ends: list[float] = []
    for t in all_times:
        if reps and t - reps[-1] <= MERGE_TOL:
            ends[-1] = t
        else:
            reps.append(float(t))
            ends.append(float(t))
    reps_a = np.array(reps)
    ends_a = np.array(ends)
    cums = np.zeros(reps_a.size)
    atoms = np.zeros(reps_a.size)
    slopes = np.zeros(reps_a.size)
    for f in parts:
        for i, (lo, hi) in enumerate(zip(reps_a, ends_a)):
            j0 = int(np.searchsorted(f.times, lo, side="left"))
            j1 = int(np.searchsorted(f.times, hi, side="right"))
            atoms[i] += float(np.sum(f.atoms[j0:j1]))
        cums += np.array([f.value(t) for t in ends_a])
    for i in range(reps_a.size - 1):
        mid = (ends_a[i] + reps_a[i + 1]) / 2
        slopes[i] = sum(f.slope_at(mid) for f in parts)
    return _build(reps_a, cums, atoms, slopes)


def pushforward(flow: CumulativeFlow, curve) -> CumulativeFlow:
    """Image measure of ``flow`` under a monotone time map.

    ``curve`` is a piecewise-linear map (see ``curves.PiecewiseLinearMap``)
    from entry times to exit times.  The result assigns to every interval J
    the mass of its preimage, so total mass is conserved exactly.

    Raises:
        FifoViolation: the map decreases, or is constant, across an interval
            carrying positive mass.
    """
    if flow.is_zero:
        return flow
    t0, t1 = flow.support()
    kinks = curve.kinks()
    inner = kinks[(kinks > t0) & (kinks < t1)]
    us = np.union1d(flow.times, inner)

    # Sample (exit time, cumulative mass, entry time) vertices.  Each entry
    # instant u contributes its left limit, a flat stretch across any jump of
    # the map, and a vertical rise for an atom of the flow.
    taus: list[float] = []
    masses: list[float] = []
    sources: list[float] = []
    for u in us:
        tl, tr = curve.left_value(u), curve.value(u)
        ml, mr = flow.left_value(u), flow.value(u)
        taus.append(tl)
        masses.append(ml)
        sources.append(u)
        if tr > tl:
            taus.append(tr)
            masses.append(ml)
            sources.append(u)
        if mr > ml:
            taus.append(tr)
            masses.append(mr)
            sources.append(u)

    total = flow.total
    tiny = 1e-12 * (1.0 + total)
    out_t: list[float] = [taus[0]]
    out_m: list[float] = [masses[0]]
    out_u: list[float] = [sources[0]]
    for tau, m, u in zip(taus[1:], masses[1:], sources[1:]):
        dm = m - out_m[-1]
        if tau > out_t[-1]:
            out_t.append(tau)
            out_m.append(m)
            out_u.append(u)
            continue
        if dm <= tiny:
            # monotone wobble or flat stretch over zero mass: keep the level
            if m > out_m[-1]:
                out_m[-1] = m
                out_u[-1] = u
            continue
        # positive mass maps backwards or onto a single instant
        if tau < out_t[-1] - MERGE_TOL:
            raise FifoViolation(
                f"map sends mass {dm:.3g} backwards near entry time {u:.6g}"
            )
        if u > out_u[-1]:
            raise FifoViolation(
                f"map is constant over a positive-mass interval ending at {u:.6g}"
            )
        # atom of the flow: vertical rise at one exit instant
        out_t.append(out_t[-1])
        out_m.append(m)
        out_u.append(u)

    # Group vertices sharing an exit instant (within the merge tolerance);
    # each group's vertical extent becomes an atom of the image measure.
    g_time: list[float] = []
    g_lo: list[float] = []
    g_hi: list[float] = []
    for tau, m in zip(out_t, out_m):
        if not g_time or tau > g_time[-1] + MERGE_TOL:
            g_time.append(tau)
            g_lo.append(m)
            g_hi.append(m)
        else:
            g_hi[-1] = m
    times_a = np.array(g_time)
    cums_a = np.array(g_hi)
    atoms_a = np.array(g_hi) - np.array(g_lo)
    slopes_a = np.zeros_like(times_a)
    if times_a.size > 1:
        dt = np.diff(times_a)
        dm = np.maximum(np.array(g_lo[1:]) - np.array(g_hi[:-1]), 0.0)
        slopes_a[:-1] = dm / dt
    return _build(times_a, cums_a, atoms_a, slopes_a)
