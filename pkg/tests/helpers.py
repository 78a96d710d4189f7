"""Shared assertion helpers for the test suite."""

from __future__ import annotations

import numpy as np

from dynwardrop.flows import CumulativeFlow


def curve_linf(f: CumulativeFlow, g: CumulativeFlow, extra: np.ndarray | None = None) -> float:
    """L-infinity distance between two cumulative curves."""
    pts = [np.array([0.0])]
    for c in (f, g):
        if not c.is_zero:
            pts.append(c.times)
    grid = np.unique(np.concatenate(pts))
    if extra is not None:
        grid = np.unique(np.concatenate([grid, extra]))
    if grid.size > 1:
        mids = (grid[:-1] + grid[1:]) / 2
        grid = np.unique(np.concatenate([grid, mids]))
    return max(abs(f.value(t) - g.value(t)) for t in grid)


def flows_identical(f: CumulativeFlow, g: CumulativeFlow) -> bool:
    """Breakpoint-for-breakpoint equality."""
    return f == g
