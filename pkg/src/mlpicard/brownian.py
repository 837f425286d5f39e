"""Brownian paths materialized on nested time grids.

A path for key theta is generated eagerly on the grid {k*T/m**n : 0 <= k <= m**n}
at the level n where theta is created.  Every later query happens at some
level j <= n, whose grid points are a subset of the creation grid, so lookups
are exact index arithmetic and introduce no new randomness.  This matches the
draw-count convention charged to the ledger: m**n * d scalar draws per path,
once, at creation.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple, Optional

import numpy as np

from .hier_rng import IndexKey, gaussian_vector
from .ledger import CostLedger

__all__ = ["GridPath", "GridTime", "generate", "snap"]

_MAX_GRID = 1 << 31  # refuse grids that cannot be indexed sanely


class GridTime(NamedTuple):
    index: int
    time: float


def snap(t: float, level: int, branching: int, horizon: float) -> GridTime:
    """Largest grid point of {k*horizon/branching**level} not exceeding t.

    The floor is computed in floating point and then nudged so that the
    result is consistent with the float grid times themselves: a query t that
    equals a grid point never rounds down to the previous cell.
    """
    if level < 1:
        raise ValueError(f"grid level must be at least 1, got {level}")
    if branching < 1:
        raise ValueError(f"branching must be at least 1, got {branching}")
    if not 0.0 <= t <= horizon:
        raise ValueError(f"time {t} outside [0, {horizon}]")
    steps = branching**level
    k = int(t * steps / horizon)
    if k > steps:
        k = steps
    # Half-ulp style guards: align with the actual float grid values.
    while k + 1 <= steps and (k + 1) * horizon / steps <= t:
        k += 1
    while k > 0 and k * horizon / steps > t:
        k -= 1
    return GridTime(k, k * horizon / steps)


@dataclass(frozen=True)
class GridPath:
    """One Brownian path on the creation-level grid; immutable after generation."""

    key: IndexKey
    level: int
    branching: int
    horizon: float
    dim: int
    values: np.ndarray  # shape (branching**level + 1, dim), values[0] == 0

    def value_at(self, t: float, query_level: int) -> np.ndarray:
        """Path value at the level-``query_level`` grid point snapped from t.

        Queries finer than the creation level are rejected: the recursion
        never needs them, so such a call signals an indexing bug.
        """
        if query_level > self.level:
            raise ValueError(
                f"query level {query_level} exceeds creation level {self.level}"
            )
        idx, _ = snap(t, query_level, self.branching, self.horizon)
        return self.values[idx * self.branching ** (self.level - query_level)]


def generate(
    key: IndexKey,
    level: int,
    branching: int,
    horizon: float,
    dim: int,
    ledger: Optional[CostLedger] = None,
) -> GridPath:
    """Materialize the full path for ``key`` at the given level.

    Increments are drawn one grid step at a time with the step index as
    purpose tag, so regenerating from the same key is bit-identical and the
    ledger charge is exactly branching**level * dim scalar draws.
    """
    if level < 1:
        raise ValueError(f"grid level must be at least 1, got {level}")
    if branching < 1:
        raise ValueError(f"branching must be at least 1, got {branching}")
    if horizon <= 0:
        raise ValueError(f"horizon must be positive, got {horizon}")
    if dim < 1:
        raise ValueError(f"dimension must be at least 1, got {dim}")
    steps = branching**level
    if steps > _MAX_GRID:
        raise OverflowError(f"grid with {steps} steps exceeds the index range")
    step_var = horizon / steps
    increments = np.empty((steps, dim))
    for k in range(steps):
        increments[k] = gaussian_vector(key, k, dim, step_var)
    values = np.empty((steps + 1, dim))
    values[0] = 0.0
    np.cumsum(increments, axis=0, out=values[1:])
    values.setflags(write=False)
    if ledger is not None:
        ledger.add_draws(steps * dim)
    return GridPath(key, level, branching, horizon, dim, values)
