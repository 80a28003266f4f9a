"""Brute-force solution over every feasible-zone combination."""
from __future__ import annotations

import logging
import time

import numpy as np

from ..zones import enumerate_combinations
from .local import solve_local
from .problem import finalize

log = logging.getLogger(__name__)


def solve_enumeration(problem, tol=1e-4, max_iter=500):
    """Solve one box-constrained sub-problem per zone combination and keep the best.

    Each sub-problem starts at the midpoint of its box.  Sub-problems whose
    final power flow diverges are skipped.
    """
    t0 = time.perf_counter()
    best, best_sub, solved, skipped = None, None, 0, 0
    evals = 0
    for combo in enumerate_combinations(problem.zones):
        boxes = combo.boxes(problem.zones)
        sub = problem.restrict(boxes)
        res = solve_local(sub, (sub.lower + sub.upper) / 2, tol, max_iter, method_tag="enum-sub")
        evals += res.evaluations
        solved += 1
        if not res.converged:
            skipped += 1
            log.info("zone combination %s: power flow diverged, skipped", combo.choice)
            continue
        if best is None or res.best_fitness < best.best_fitness:
            best, best_sub = res, (sub, combo)
    if best is None:
        raise RuntimeError("every zone-combination sub-problem diverged")
    sub, combo = best_sub
    out = finalize(sub, best.best_dispatch, "enum", best.trace, time.perf_counter() - t0,
                   subproblem_count=solved, skipped=skipped, best_combination=list(combo.choice))
    out.evaluations = evals
    problem.evaluations += evals
    return out
