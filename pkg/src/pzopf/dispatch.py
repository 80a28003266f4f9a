"""Generation cost, merit order and penalised fitness."""
from __future__ import annotations

from dataclasses import dataclass, field, fields
from typing import Sequence

import numpy as np

from .zones import FeasibleZones, in_feasible_zone, pz_product

# Real power of the controllable (non-slack) generators, MW, ordered by bus.
DispatchVector = np.ndarray

FLAPC_TIE_TOL = 1e-9


class DispatchError(ValueError):
    pass


@dataclass(frozen=True)
class CostCoefficients:
    alpha: float  # $/MW^2h
    beta: float  # $/MWh
    gamma: float  # $/h


@dataclass(frozen=True)
class Generator:
    bus: int
    p_min: float
    p_max: float
    q_min: float
    q_max: float
    cost: CostCoefficients
    zones: FeasibleZones = None

    def __post_init__(self):
        if not self.p_min < self.p_max:
            raise DispatchError(f"generator at bus {self.bus}: p_min >= p_max")
        if not self.q_min < self.q_max:
            raise DispatchError(f"generator at bus {self.bus}: q_min >= q_max")
        if self.zones is None:
            object.__setattr__(self, "zones", FeasibleZones(((self.p_min, self.p_max),)))
        elif self.zones.p_min != self.p_min or self.zones.p_max != self.p_max:
            raise DispatchError(f"generator at bus {self.bus}: zone endpoints differ from P limits")

    def without_zones(self) -> "Generator":
        return Generator(self.bus, self.p_min, self.p_max, self.q_min, self.q_max, self.cost)


@dataclass
class PenaltyConfig:
    """Weights of the multiplicative penalty.

    ``beta_pz`` multiplies squared positive parts of the zone product
    (evaluated in MW unless ``pz_per_unit``); the voltage, reactive and slack
    terms are measured in p.u.
    """

    beta_pz: float = 1e-6
    beta_v: float = 100.0
    beta_q: float = 100.0
    beta_slack_p: float = 100.0
    alpha_eq: float = 0.0
    alpha_eq_fallback: float = 1e6
    pz_per_unit: bool = False
    enforce_zones: bool = True

    def __post_init__(self):
        for f in fields(self):
            v = getattr(self, f.name)
            if isinstance(v, float) and v < 0:
                raise DispatchError(f"penalty weight {f.name} must be >= 0")

    def update(self, **kw) -> "PenaltyConfig":
        known = {f.name: f for f in fields(self)}
        vals = {f: getattr(self, f) for f in known}
        for k, v in kw.items():
            if k not in known:
                raise DispatchError(f"unknown penalty field {k!r}")
            vals[k] = _coerce(v, type(vals[k]))
        return PenaltyConfig(**vals)


def _coerce(v, typ):
    if typ is bool and isinstance(v, str):
        return v.strip().lower() in ("1", "true", "yes", "on")
    return typ(v)


def gen_cost(p, c: CostCoefficients):
    return c.alpha * p * p + c.beta * p + c.gamma


def total_cost(dispatch: DispatchVector, p_slack: float, gens: Sequence[Generator]) -> float:
    """Sum of generator costs; ``gens[0]`` is the slack unit, the rest follow ``dispatch``."""
    slack, *others = gens
    if len(others) != len(dispatch):
        raise DispatchError(f"dispatch has {len(dispatch)} entries, expected {len(others)}")
    total = gen_cost(p_slack, slack.cost)
    for p, g in zip(dispatch, others):
        total += gen_cost(p, g.cost)
    return float(total)


def flapc(g: Generator) -> float:
    """Full-load average production cost, $/MWh."""
    if g.p_max <= 0:
        raise DispatchError(f"FLAPC needs p_max > 0 (bus {g.bus})")
    return gen_cost(g.p_max, g.cost) / g.p_max


def priority_list(gens: Sequence[Generator]) -> list[int]:
    """Competition ranks by ascending FLAPC; equal values share a rank."""
    costs = [flapc(g) for g in gens]
    return [1 + sum(c < ci - FLAPC_TIE_TOL for c in costs) for ci in costs]


def flapc_start_point(gens: Sequence[Generator], demand: float, loss_margin: float = 0.01) -> DispatchVector:
    """Merit-order warm start for the controllable generators ``gens``.

    Generators are loaded in priority order (ties by bus index) at their
    largest feasible output until ``demand * (1 + loss_margin)`` is covered;
    the marginal unit takes the residual, rounded up to a feasible point.
    """
    if not gens:
        return np.zeros(0)
    target = demand * (1.0 + loss_margin)
    if sum(g.p_max for g in gens) < target:
        raise DispatchError(f"capacity {sum(g.p_max for g in gens)} MW cannot cover {target} MW")
    ranks = priority_list(gens)
    order = sorted(range(len(gens)), key=lambda i: (ranks[i], gens[i].bus))
    out = np.array([g.p_min for g in gens], dtype=float)
    covered = 0.0
    for i in order:
        if covered >= target:
            break
        g = gens[i]
        residual = target - covered
        if residual >= g.p_max:
            out[i] = g.p_max
        else:
            out[i] = _snap_up(residual, g.zones)
        covered += out[i]
    return out


def _snap_up(p: float, zones: FeasibleZones) -> float:
    for a, b in zones.intervals:
        if p <= b:
            return max(p, a)
    return zones.p_max


@dataclass
class PenaltyBreakdown:
    cost: float
    fitness: float
    terms: dict = field(default_factory=dict)

    @property
    def factor(self) -> float:
        return 1.0 + sum(self.terms.values())


def penalty_terms(dispatch, pf, gens: Sequence[Generator], network, cfg: PenaltyConfig) -> PenaltyBreakdown:
    """Evaluate the penalised fitness and report each weighted term."""
    base = network.base_mva
    slack, *others = gens
    p_slack = pf.p_slack if np.isfinite(pf.p_slack) else slack.p_max
    cost = total_cost(dispatch, p_slack, gens)
    terms = {}

    if pf.converged:
        terms["eq"] = cfg.alpha_eq * float(pf.mismatch_inf_norm) ** 2
    else:
        # diverged PF: finite but dominant penalty
        r = pf.mismatch_inf_norm
        r = 1e3 if not np.isfinite(r) else min(max(r, 1.0), 1e3)
        terms["eq"] = cfg.alpha_eq_fallback * r * r

    if cfg.enforce_zones:
        powers = [p_slack, *dispatch]
        s = sum(max(0.0, pz_product(p, g.zones, per_unit=cfg.pz_per_unit, base=base)) ** 2
                for p, g in zip(powers, gens))
        terms["pz"] = cfg.beta_pz * s

    if pf.converged:
        pq = network.pq_index
        v = pf.v_mag[pq]
        vmin, vmax = network.v_min[pq], network.v_max[pq]
        terms["v"] = cfg.beta_v * float(np.sum(np.maximum(0.0, v - vmax) ** 2 + np.maximum(0.0, vmin - v) ** 2))
        q = np.asarray(pf.q_gen) / base
        qmin = np.array([g.q_min for g in gens]) / base
        qmax = np.array([g.q_max for g in gens]) / base
        with np.errstate(invalid="ignore"):
            dq = np.nan_to_num(np.maximum(0.0, q - qmax)) + np.nan_to_num(np.maximum(0.0, qmin - q))
        terms["q"] = cfg.beta_q * float(np.sum(dq ** 2))
    else:
        terms["v"] = terms["q"] = 0.0

    dp = max(0.0, p_slack - slack.p_max, slack.p_min - p_slack) / base
    terms["slack_p"] = cfg.beta_slack_p * dp * dp

    out = PenaltyBreakdown(cost=cost, fitness=0.0, terms=terms)
    out.fitness = cost * out.factor
    return out


def penalty_fitness(dispatch, pf, gens: Sequence[Generator], network, cfg: PenaltyConfig) -> float:
    """``cost * (1 + weighted squared violations)``; total over every input."""
    return penalty_terms(dispatch, pf, gens, network, cfg).fitness


def feasibility_flags(dispatch, p_slack: float, gens: Sequence[Generator]) -> list[bool]:
    return [in_feasible_zone(p, g.zones) for p, g in zip([p_slack, *dispatch], gens)]
