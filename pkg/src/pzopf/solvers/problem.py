"""Optimisation problem wrapper: dispatch box, fitness evaluation, results."""
from __future__ import annotations

import logging
from dataclasses import asdict, dataclass, field, replace
from typing import Sequence

import numpy as np

from ..dispatch import Generator, PenaltyConfig, feasibility_flags, penalty_terms
from ..network import AdmittanceMatrix, Network, build_admittance
from ..powerflow import solve_pf_batch
from ..zones import FeasibleZones, in_feasible_zone

log = logging.getLogger(__name__)

PZ_MODES = ("product", "traditional", "off")
# best dispatches closer than this to a feasible zone are projected onto it
SNAP_TOL_MW = 1e-3


@dataclass
class Evaluation:
    fitness: float
    cost: float
    p_slack: float
    converged: bool
    pf: object = None


class OpfProblem:
    """Dispatch of the controllable units of ``network`` under a penalty config.

    ``lower``/``upper`` default to the unit limits and can be tightened to a
    single zone combination with :meth:`restrict`.
    """

    def __init__(self, network: Network, penalty: PenaltyConfig | None = None, *,
                 y: AdmittanceMatrix | None = None, lower=None, upper=None):
        self.network = network
        self.y = y if y is not None else build_admittance(network)
        self.penalty = penalty if penalty is not None else PenaltyConfig()
        gens = network.controllable
        self.lower = np.array([g.p_min for g in gens], float) if lower is None else np.asarray(lower, float)
        self.upper = np.array([g.p_max for g in gens], float) if upper is None else np.asarray(upper, float)
        self.evaluations = 0
        self.parent = None  # set on sub-problems built by restrict()

    @classmethod
    def from_mode(cls, network: Network, pz_mode: str = "product", penalty: PenaltyConfig | None = None):
        if pz_mode not in PZ_MODES:
            raise ValueError(f"pz_mode must be one of {PZ_MODES}, got {pz_mode!r}")
        penalty = penalty if penalty is not None else PenaltyConfig()
        if pz_mode == "off":
            return cls(network.without_zones(), replace(penalty, enforce_zones=False))
        if pz_mode == "traditional":
            # zones are handled by box enumeration
            return cls(network, replace(penalty, enforce_zones=False))
        return cls(network, replace(penalty, enforce_zones=True))

    @property
    def generators(self) -> Sequence[Generator]:
        return self.network.generators

    @property
    def zones(self) -> list[FeasibleZones]:
        """Zones of every unit, slack first."""
        return [g.zones for g in self.generators]

    @property
    def dim(self) -> int:
        return len(self.lower)

    def evaluate_batch(self, xs) -> list[Evaluation]:
        xs = np.atleast_2d(np.asarray(xs, dtype=float))
        self.evaluations += len(xs)
        out = []
        for x, pf in zip(xs, solve_pf_batch(self.network, self.y, xs)):
            br = penalty_terms(x, pf, self.generators, self.network, self.penalty)
            out.append(Evaluation(br.fitness, br.cost, pf.p_slack, pf.converged, pf))
        return out

    def evaluate(self, x) -> Evaluation:
        return self.evaluate_batch(np.asarray(x, dtype=float)[None])[0]

    def restrict(self, boxes: Sequence[tuple[float, float]]) -> "OpfProblem":
        """Sub-problem confined to one feasible interval per unit (slack first).

        The slack interval becomes its P limits for the slack penalty; the
        controllable intervals become the search box.  Zone penalties are off.
        """
        gens = [Generator(g.bus, lo, hi, g.q_min, g.q_max, g.cost) for g, (lo, hi) in zip(self.generators, boxes)]
        net = Network(self.network.buses, self.network.branches, gens, self.network.base_mva)
        sub = OpfProblem(net, replace(self.penalty, enforce_zones=False), y=self.y)
        sub.parent = self
        return sub

    def flags(self, x, p_slack: float) -> list[bool]:
        return feasibility_flags(x, p_slack, self.generators)


@dataclass
class SolveResult:
    method_tag: str
    best_dispatch: np.ndarray
    p_slack: float
    best_cost: float
    best_fitness: float
    total_generation: float
    per_generator_feasible: list
    trace: list
    evaluations: int
    wall_time: float
    converged: bool = True
    seed: int | None = None
    extra: dict = field(default_factory=dict)

    @property
    def feasible(self) -> bool:
        return all(self.per_generator_feasible)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["best_dispatch"] = [float(v) for v in self.best_dispatch]
        d["trace"] = [float(v) for v in self.trace]
        d["per_generator_feasible"] = [bool(v) for v in self.per_generator_feasible]
        return d


def snap_to_zones(x, zones: Sequence[FeasibleZones], tol: float = SNAP_TOL_MW) -> np.ndarray:
    """Project entries lying within ``tol`` of a feasible zone onto it."""
    x = np.array(x, dtype=float)
    for i, z in enumerate(zones):
        if not in_feasible_zone(x[i], z):
            q = z.nearest_feasible(x[i])
            if abs(q - x[i]) <= tol:
                x[i] = q
    return x


def finalize(problem, x, method_tag: str, trace, wall_time: float, seed=None, **extra) -> SolveResult:
    """Package the best point found.  Near-boundary zone overshoot is snapped and re-evaluated."""
    x = np.asarray(x, dtype=float)
    ref = getattr(problem, "parent", None) or problem
    xs = snap_to_zones(x, ref.zones[1:])
    n_evals = problem.evaluations
    ev = problem.evaluate(xs)
    problem.evaluations = n_evals
    flags = ref.flags(xs, ev.p_slack)
    return SolveResult(
        method_tag=method_tag, best_dispatch=xs, p_slack=float(ev.p_slack), best_cost=float(ev.cost),
        best_fitness=float(ev.fitness), total_generation=float(ev.p_slack + xs.sum()),
        per_generator_feasible=flags, trace=[float(t) for t in trace], evaluations=n_evals,
        wall_time=float(wall_time), converged=bool(ev.converged), seed=seed, extra=extra)
