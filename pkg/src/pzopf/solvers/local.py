"""Deterministic projected-gradient descent on the penalised objective."""
from __future__ import annotations

import logging
import time
from dataclasses import replace

import numpy as np

from ..dispatch import flapc_start_point
from .problem import SolveResult, finalize

log = logging.getLogger(__name__)

FD_STEP = 1e-4  # MW
ARMIJO = 1e-4
MIN_STEP = 1e-14


def fd_gradient(problem, x, fx, h=FD_STEP):
    """Forward differences, flipped to backward where ``x + h`` leaves the box."""
    n = len(x)
    steps = np.where(x + h <= problem.upper, h, -h)
    pts = np.tile(x, (n, 1)) + np.diag(steps)
    vals = np.array([ev.fitness for ev in problem.evaluate_batch(pts)])
    return (vals - fx) / steps


# zone-penalty weight multipliers applied in sequence (sequential penalty method)
CONTINUATION = (1e-12, 1e-9, 1e-6, 1e-3, 1.0)


def _descend(problem, x, tol, max_iter, trace, record):
    lo, hi = problem.lower, problem.upper
    fx = problem.evaluate(x).fitness
    trace.append(fx)
    if x.size == 0:
        return x, "gradient"
    g = fd_gradient(problem, x, fx)
    t = 1.0
    for _ in range(max_iter):
        pg = x - np.clip(x - g, lo, hi)
        if np.max(np.abs(pg)) < tol:
            return x, "gradient"
        while True:
            xn = np.clip(x - t * g, lo, hi)
            d = x - xn
            if np.max(np.abs(d)) < MIN_STEP:
                return x, "step"
            fn = problem.evaluate(xn).fitness
            if fn < fx and fn <= fx - ARMIJO * float(g @ d):
                break
            t *= 0.5
        gn = fd_gradient(problem, xn, fn)
        s, yk = xn - x, gn - g
        sy = float(s @ yk)
        t = float(s @ s) / sy if sy > 0 else 2.0 * t
        x, fx, g = xn, fn, gn
        trace.append(fx)
        if record is not None:
            record.append(fx)
    return x, "max_iter"


def solve_local(problem, start, tol=1e-4, max_iter=500, *, continuation=CONTINUATION,
                method_tag="local", seed=None, record=None) -> SolveResult:
    """Minimise the penalised fitness from ``start`` inside the dispatch box.

    Steps are ``proj(x - t g)`` with a Barzilai-Borwein trial ``t`` halved
    until the Armijo condition holds.  A descent stops when the projected
    gradient is below ``tol`` (inf-norm), the step underflows, or after
    ``max_iter`` steps.

    When zone penalties are active the descent is repeated with the zone
    weight raised through ``continuation`` (multipliers of ``beta_pz``,
    ending at 1); pass ``continuation=None`` for a single descent at the
    configured weight.  ``record`` receives every accepted fitness value of
    the final stage.
    """
    t0 = time.perf_counter()
    lo, hi = problem.lower, problem.upper
    x = np.asarray(start, dtype=float)
    if x.shape != lo.shape or np.any(x < lo - 1e-9) or np.any(x > hi + 1e-9):
        raise ValueError(f"start point {x} outside the dispatch box")
    x = np.clip(x, lo, hi)
    pen = problem.penalty
    stages = tuple(continuation) if (continuation and pen.enforce_zones) else (1.0,)
    trace, statuses, stage_starts = [], [], []
    try:
        for k, mult in enumerate(stages):
            problem.penalty = replace(pen, beta_pz=pen.beta_pz * mult)
            stage_starts.append(len(trace))
            x, status = _descend(problem, x, tol, max_iter, trace, record if k == len(stages) - 1 else None)
            statuses.append(status)
    finally:
        problem.penalty = pen
    return finalize(problem, x, method_tag, trace, time.perf_counter() - t0, seed=seed,
                    status=statuses[-1], stage_status=statuses, stage_starts=stage_starts,
                    iterations=len(trace) - len(stages), start=[float(v) for v in start])


def solve_local_flapc(problem, tol=1e-4, max_iter=500, loss_margin=0.01) -> SolveResult:
    """Local descent started from the merit-order (FLAPC priority list) point."""
    net = problem.network
    start = flapc_start_point(list(net.controllable), net.total_load, loss_margin)
    start = np.clip(start, problem.lower, problem.upper)
    return solve_local(problem, start, tol, max_iter, method_tag="local-flapc")


def random_start(problem, rng) -> np.ndarray:
    return rng.uniform(problem.lower, problem.upper)
