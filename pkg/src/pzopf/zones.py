"""Feasible/prohibited operating zones.

A generator with prohibited zones may run in any one of ``m`` disjoint closed
feasible intervals ``[a_1, b_1], ..., [a_m, b_m]``.  The disjunction is
captured by a single polynomial inequality

    prod_k (p - a_k) (p - b_k) <= 0

which is what the penalty and local solvers work with.  The interval test
(:func:`in_feasible_zone`) is kept as an independent oracle.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Iterator, Sequence

import numpy as np


class ZoneError(ValueError):
    """Raised for malformed zone definitions."""


@dataclass(frozen=True)
class FeasibleZones:
    """Ordered feasible intervals ``((a_1, b_1), ..., (a_m, b_m))`` in MW."""

    intervals: tuple[tuple[float, float], ...]

    def __post_init__(self):
        ivs = tuple((float(a), float(b)) for a, b in self.intervals)
        if not ivs:
            raise ZoneError("at least one feasible interval is required")
        chain = [x for iv in ivs for x in iv]
        if any(not np.isfinite(x) for x in chain):
            raise ZoneError(f"non-finite zone endpoint in {ivs}")
        if any(lo >= hi for lo, hi in zip(chain, chain[1:])):
            raise ZoneError(f"zone endpoints must be strictly increasing: {ivs}")
        object.__setattr__(self, "intervals", ivs)

    @property
    def m(self) -> int:
        return len(self.intervals)

    @property
    def p_min(self) -> float:
        return self.intervals[0][0]

    @property
    def p_max(self) -> float:
        return self.intervals[-1][1]

    @property
    def endpoints(self) -> np.ndarray:
        return np.array([x for iv in self.intervals for x in iv])

    @property
    def prohibited(self) -> list[tuple[float, float]]:
        return [(self.intervals[k][1], self.intervals[k + 1][0]) for k in range(self.m - 1)]

    def nearest_feasible(self, p: float) -> float:
        """Closest point of the feasible set to ``p``."""
        best, dist = p, np.inf
        for a, b in self.intervals:
            q = min(max(p, a), b)
            if abs(q - p) < dist:
                best, dist = q, abs(q - p)
        return best


@dataclass(frozen=True)
class ZoneCombination:
    """One sub-problem of the disjunctive formulation: interval index per generator (0-based)."""

    choice: tuple[int, ...]

    def boxes(self, zones: Sequence[FeasibleZones]) -> list[tuple[float, float]]:
        return [z.intervals[k] for z, k in zip(zones, self.choice)]


def from_prohibited(p_min: float, p_max: float, prohibited: Sequence[tuple[float, float]] = ()) -> FeasibleZones:
    """Feasible intervals left in ``[p_min, p_max]`` after removing the open prohibited intervals."""
    if not p_min < p_max:
        raise ZoneError(f"p_min must be below p_max, got {p_min}, {p_max}")
    pz = sorted((float(lo), float(hi)) for lo, hi in prohibited)
    for lo, hi in pz:
        if not lo < hi:
            raise ZoneError(f"empty prohibited interval ({lo}, {hi})")
        if lo <= p_min or hi >= p_max:
            raise ZoneError(f"prohibited interval ({lo}, {hi}) not strictly inside [{p_min}, {p_max}]")
    for (_, hi), (lo, _) in zip(pz, pz[1:]):
        if lo <= hi:
            raise ZoneError(f"prohibited intervals overlap or touch at {lo}")
    edges = [p_min] + [x for iv in pz for x in iv] + [p_max]
    return FeasibleZones(tuple(zip(edges[::2], edges[1::2])))


def in_feasible_zone(p: float, zones: FeasibleZones) -> bool:
    return any(a <= p <= b for a, b in zones.intervals)


def pz_product(p, zones: FeasibleZones, per_unit: bool = False, base: float = 100.0):
    """Evaluate ``prod_k (p - a_k)(p - b_k)`` left to right in interval order.

    ``p`` may be a scalar or an array.  With ``per_unit`` the power and every
    endpoint are divided by ``base`` first.
    """
    scale = base if per_unit else 1.0
    x = np.asarray(p, dtype=float) / scale
    out = np.ones_like(x)
    for a, b in zones.intervals:
        out = out * (x - a / scale)
        out = out * (x - b / scale)
    return out if out.ndim else float(out)


def enumerate_combinations(zones: Sequence[FeasibleZones]) -> Iterator[ZoneCombination]:
    """All ``prod m_i`` interval choices, lexicographic in the per-generator indices."""
    for choice in itertools.product(*(range(z.m) for z in zones)):
        yield ZoneCombination(choice)


def n_combinations(zones: Sequence[FeasibleZones]) -> int:
    return int(np.prod([z.m for z in zones], dtype=np.int64))
