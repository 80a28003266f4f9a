"""Particle swarm optimisation with optional adaptive parameter control."""
from __future__ import annotations

import time
from dataclasses import dataclass, fields

import numpy as np

from .problem import SolveResult, finalize


@dataclass
class PsoConfig:
    swarm_size: int = 100
    max_iterations: int = 50
    w: float = 0.95
    c1: float = 2.0
    c2: float = 2.0
    adaptive: bool = False
    w_high: float = 0.9
    w_low: float = 0.4
    c_high: float = 2.5
    c_low: float = 0.5
    v_max_fraction: float = 0.2
    rng_seed: int = 0

    def __post_init__(self):
        if self.swarm_size < 2:
            raise ValueError("swarm_size must be >= 2")
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be >= 1")
        if not 0 < self.w_low <= self.w_high:
            raise ValueError("need 0 < w_low <= w_high")
        if not 0 < self.c_low <= self.c_high:
            raise ValueError("need 0 < c_low <= c_high")
        if self.v_max_fraction <= 0:
            raise ValueError("v_max_fraction must be positive")

    def update(self, **kw) -> "PsoConfig":
        vals = {f.name: getattr(self, f.name) for f in fields(self)}
        for k, v in kw.items():
            if k not in vals:
                raise ValueError(f"unknown PSO field {k!r}")
            typ = type(vals[k])
            vals[k] = (str(v).lower() in ("1", "true", "yes", "on")) if typ is bool and isinstance(v, str) else typ(v)
        return PsoConfig(**vals)


def update_inertia(gen, max_gen, w_high=0.9, w_low=0.4):
    """Linearly shrinking inertia damped by ``exp(-gen / max_gen)``."""
    frac = gen / max_gen
    w1 = w_high - (w_high - w_low) * frac
    return w1 * np.exp(-frac)


def particle_scores(pbest_fitnesses) -> np.ndarray:
    f = np.asarray(pbest_fitnesses, dtype=float)
    f_best, f_worst = f.min(), f.max()
    if f_worst > f_best:
        return (f_worst - f) / (f_worst - f_best)
    return np.ones_like(f)


def update_learning_factors(scores, gen, max_gen, c_high=2.5, c_low=0.5):
    """Per-particle ``(c1, c2)``.

    The ceiling falls linearly from ``c_high`` to ``c_low``; well-scored
    particles get a small cognitive and a large social factor.
    """
    s = np.asarray(scores, dtype=float)
    ceiling = c_high - (c_high - c_low) * (gen / max_gen)
    c1 = ceiling - (ceiling - c_low) * s
    c2 = c_low + (ceiling - c_low) * s
    return c1, c2


def solve_pso(problem, cfg: PsoConfig, *, initial_positions=None, method_tag=None) -> SolveResult:
    """Run PSO (or APSO when ``cfg.adaptive``) on ``problem``; trace holds gbest fitness per iteration."""
    t0 = time.perf_counter()
    tag = method_tag or ("apso" if cfg.adaptive else "pso")
    lo, hi = problem.lower, problem.upper
    n, dim = cfg.swarm_size, problem.dim
    vmax = cfg.v_max_fraction * (hi - lo)
    # one stream per particle keeps draws independent of evaluation order
    rngs = [np.random.default_rng(s) for s in np.random.SeedSequence(cfg.rng_seed).spawn(n)]

    if initial_positions is None:
        x = np.array([r.uniform(lo, hi) for r in rngs])
    else:
        x = np.clip(np.array(initial_positions, dtype=float).reshape(n, dim), lo, hi)
    v = np.zeros_like(x)
    fit = np.array([e.fitness for e in problem.evaluate_batch(x)])
    pbest, pbest_f = x.copy(), fit.copy()
    k = int(np.argmin(pbest_f))
    gbest, gbest_f = pbest[k].copy(), float(pbest_f[k])
    trace = [gbest_f]
    history = {"w": [], "c1": [], "c2": []}

    for it in range(1, cfg.max_iterations + 1):
        gen = it - 1
        if cfg.adaptive:
            w = update_inertia(gen, cfg.max_iterations, cfg.w_high, cfg.w_low)
            c1, c2 = update_learning_factors(particle_scores(pbest_f), gen, cfg.max_iterations,
                                             cfg.c_high, cfg.c_low)
        else:
            w, c1, c2 = cfg.w, np.full(n, cfg.c1), np.full(n, cfg.c2)
        history["w"].append(float(w))
        history["c1"].append((float(c1.min()), float(c1.max())))
        history["c2"].append((float(c2.min()), float(c2.max())))

        r1 = np.array([r.random(dim) for r in rngs])
        r2 = np.array([r.random(dim) for r in rngs])
        v = w * v + c1[:, None] * r1 * (pbest - x) + c2[:, None] * r2 * (gbest - x)
        v = np.clip(v, -vmax, vmax)
        x = np.clip(x + v, lo, hi)

        fit = np.array([e.fitness for e in problem.evaluate_batch(x)])
        better = fit < pbest_f
        pbest[better], pbest_f[better] = x[better], fit[better]
        k = int(np.argmin(pbest_f))
        if pbest_f[k] < gbest_f:
            gbest, gbest_f = pbest[k].copy(), float(pbest_f[k])
        trace.append(gbest_f)

    return finalize(problem, gbest, tag, trace, time.perf_counter() - t0, seed=cfg.rng_seed,
                    schedule=history, swarm_size=n, max_iterations=cfg.max_iterations)


def solve_apso(problem, cfg: PsoConfig, **kw) -> SolveResult:
    if not cfg.adaptive:
        cfg = cfg.update(adaptive=True)
    return solve_pso(problem, cfg, **kw)
