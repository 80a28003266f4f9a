"""Command-line driver: ``pzopf run`` and ``pzopf validate``."""
from __future__ import annotations

import argparse
import csv
import json
import logging
import statistics
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .dispatch import DispatchError, PenaltyConfig, flapc, priority_list
from .network import CaseError, bundled_case_path, load_case
from .solvers import OpfProblem, PsoConfig, solve_enumeration, solve_local, solve_local_flapc, solve_pso
from .solvers.problem import PZ_MODES
from .zones import n_combinations

log = logging.getLogger("pzopf")

METHODS = ("local", "local-flapc", "pso", "apso", "enum")
STOCHASTIC = ("local", "pso", "apso")
EXIT_OK, EXIT_INVALID, EXIT_DIVERGED = 0, 2, 3


class ConfigError(ValueError):
    pass


@dataclass
class RunConfig:
    case_path: str = ""
    method: str = "all"
    pz_mode: str = "product"
    runs: int = 1
    seed: int = 0
    output_dir: str = "results"
    penalty: PenaltyConfig = field(default_factory=PenaltyConfig)
    pso: PsoConfig = field(default_factory=PsoConfig)
    local_tol: float = 1e-4
    local_max_iter: int = 500

    def methods(self) -> list[str]:
        if self.method == "all":
            return ["enum"] if self.pz_mode == "traditional" else ["local", "local-flapc", "pso", "apso"]
        return [self.method]

    def check(self):
        if self.method not in METHODS + ("all",):
            raise ConfigError(f"unknown method {self.method!r}")
        if self.pz_mode not in PZ_MODES:
            raise ConfigError(f"unknown pz_mode {self.pz_mode!r}")
        if self.runs < 1:
            raise ConfigError("runs must be >= 1")
        if self.method == "enum" and self.pz_mode == "product":
            raise ConfigError("method enum requires pz_mode traditional or off")
        if self.pz_mode == "traditional" and self.method not in ("enum", "all"):
            raise ConfigError("pz_mode traditional is solved by enumeration; use --method enum")


def apply_overrides(cfg: RunConfig, items: dict) -> RunConfig:
    """Apply ``{"pso.swarm_size": 50, "penalty": {...}, "runs": 3}``-style settings."""
    flat = {}
    for k, v in items.items():
        if isinstance(v, dict):
            flat.update({f"{k}.{kk}": vv for kk, vv in v.items()})
        else:
            flat[k] = v
    pen, pso = {}, {}
    for key, val in flat.items():
        section, _, name = key.rpartition(".")
        try:
            if section == "penalty":
                pen[name] = val
            elif section == "pso":
                pso[name] = val
            elif section in ("", "run", "local"):
                name = {"tol": "local_tol", "max_iter": "local_max_iter"}.get(name, name) if section == "local" else name
                if name in ("penalty", "pso") or not hasattr(cfg, name):
                    raise ConfigError(f"unknown setting {key!r}")
                setattr(cfg, name, type(getattr(cfg, name))(val))
            else:
                raise ConfigError(f"unknown setting {key!r}")
        except (TypeError, ValueError) as e:
            raise ConfigError(f"bad value for {key}: {e}") from None
    try:
        if pen:
            cfg.penalty = cfg.penalty.update(**pen)
        if pso:
            cfg.pso = cfg.pso.update(**pso)
    except (ValueError, DispatchError) as e:
        raise ConfigError(str(e)) from None
    return cfg


def _run_method(method, problem_factory, cfg: RunConfig, seed: int):
    problem = problem_factory()
    if method == "local":
        start = np.random.default_rng(seed).uniform(problem.lower, problem.upper)
        return solve_local(problem, start, cfg.local_tol, cfg.local_max_iter, seed=seed)
    if method == "local-flapc":
        res = solve_local_flapc(problem, cfg.local_tol, cfg.local_max_iter)
    elif method == "enum":
        res = solve_enumeration(problem, cfg.local_tol, cfg.local_max_iter)
    else:
        pso = cfg.pso.update(rng_seed=seed, adaptive=(method == "apso"))
        return solve_pso(problem, pso)
    res.seed = seed
    return res


def _record(res, pz_mode):
    d = res.to_dict()
    return {
        "method_tag": d["method_tag"], "pz_mode": pz_mode, "seed": d["seed"],
        "dispatch": d["best_dispatch"], "p_slack": d["p_slack"], "cost": d["best_cost"],
        "fitness": d["best_fitness"], "total_generation": d["total_generation"],
        "feasible": d["per_generator_feasible"], "converged": d["converged"],
        "evaluations": d["evaluations"], "wall_time": d["wall_time"], "trace": d["trace"],
        "info": d["extra"],
    }


def run(cfg: RunConfig) -> int:
    try:
        cfg.check()
    except ConfigError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_INVALID
    try:
        net = load_case(cfg.case_path or bundled_case_path())
    except (OSError, CaseError) as e:
        print(f"error: cannot load case: {e}", file=sys.stderr)
        return EXIT_INVALID
    out = Path(cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)

    records, rows = [], []
    any_converged = False
    for method in cfg.methods():
        seeds = [cfg.seed + k for k in range(cfg.runs)] if method in STOCHASTIC else [cfg.seed]
        results = []
        for seed in seeds:
            def factory():
                return OpfProblem.from_mode(net, cfg.pz_mode, cfg.penalty)
            try:
                res = _run_method(method, factory, cfg, seed)
            except (RuntimeError, DispatchError) as e:
                log.warning("%s seed %d failed: %s", method, seed, e)
                continue
            results.append(res)
            records.append(_record(res, cfg.pz_mode))
            _write_trace(out / f"trace_{method}_{seed}.csv", res.trace)
            log.info("%s seed %d: cost %.4f fitness %.4f", method, seed, res.best_cost, res.best_fitness)
        ok = [r for r in results if r.converged]
        if not ok:
            continue
        any_converged = True
        costs = [r.best_cost for r in ok]
        best = min(ok, key=lambda r: r.best_fitness)
        rows.append({
            "method": method, "pz_mode": cfg.pz_mode,
            "best_cost": f"{min(costs):.4f}", "median_cost": f"{statistics.median(costs):.4f}",
            "worst_cost": f"{max(costs):.4f}", "total_gen_MW": f"{best.total_generation:.6g}",
            "feasible": str(best.feasible).lower(), "evals": best.evaluations,
            "subproblem_count": best.extra.get("subproblem_count", ""),
        })

    (out / "results.json").write_text(json.dumps(records, indent=2, sort_keys=True) + "\n")
    with open(out / "summary.csv", "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=["method", "pz_mode", "best_cost", "median_cost", "worst_cost",
                                           "total_gen_MW", "feasible", "evals", "subproblem_count"])
        w.writeheader()
        w.writerows(rows)
    if not any_converged:
        print("error: every run diverged", file=sys.stderr)
        return EXIT_DIVERGED
    return EXIT_OK


def _write_trace(path: Path, trace):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["iteration", "best_fitness"])
        for i, f in enumerate(trace):
            w.writerow([i, f"{f:.10g}"])


def validate(case_path, stream=None) -> int:
    stream = stream or sys.stdout
    try:
        net = load_case(case_path or bundled_case_path())
    except (OSError, CaseError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_INVALID
    gens = net.controllable
    ranks = priority_list(gens) if gens else []
    p = lambda *a: print(*a, file=stream)  # noqa: E731
    p(f"buses: {len(net.buses)}  branches: {len(net.branches)}  generators: {len(net.generators)}")
    p(f"base: {net.base_mva:g} MVA  total load: {net.total_load:.1f} MW")
    p(f"slack bus: {net.slack_generator.bus if net.generators else '-'}")
    p(f"{'bus':>4} {'Pmin':>7} {'Pmax':>7} {'FLAPC':>8} {'prio':>4}  feasible zones")
    for i, g in enumerate(net.generators):
        rank = "-" if i == 0 else str(ranks[i - 1])
        zs = " ".join(f"[{a:g},{b:g}]" for a, b in g.zones.intervals)
        p(f"{g.bus:>4} {g.p_min:>7g} {g.p_max:>7g} {flapc(g):>8.4f} {rank:>4}  {zs}")
    p(f"zone combinations N_r: {n_combinations([g.zones for g in net.generators])}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="pzopf", description=__doc__)
    sub = ap.add_subparsers(dest="command", required=True)
    r = sub.add_parser("run", help="solve the OPF with one or all methods")
    r.add_argument("--case", default="", help="case file (default: bundled IEEE 30-bus)")
    r.add_argument("--method", default="all", choices=METHODS + ("all",))
    r.add_argument("--pz-mode", default="product", choices=PZ_MODES)
    r.add_argument("--runs", type=int, default=None)
    r.add_argument("--seed", type=int, default=None)
    r.add_argument("--out", default=None)
    r.add_argument("--config", default=None, help="JSON file with run/penalty/pso/local settings")
    r.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                   help="override a setting, e.g. pso.swarm_size=50 (repeatable)")
    r.add_argument("-v", "--verbose", action="store_true")
    v = sub.add_parser("validate", help="summarise a case file")
    v.add_argument("--case", default="")
    return ap


def config_from_args(args) -> RunConfig:
    cfg = RunConfig(case_path=args.case, method=args.method, pz_mode=args.pz_mode)
    if args.config:
        try:
            data = json.loads(Path(args.config).read_text())
        except (OSError, json.JSONDecodeError) as e:
            raise ConfigError(f"cannot read config {args.config}: {e}") from None
        if not isinstance(data, dict):
            raise ConfigError("config file must hold a JSON object")
        apply_overrides(cfg, data)
    sets = {}
    for item in args.set:
        key, sep, val = item.partition("=")
        if not sep:
            raise ConfigError(f"--set expects KEY=VALUE, got {item!r}")
        sets[key.strip()] = val.strip()
    apply_overrides(cfg, sets)
    for name, val in (("runs", args.runs), ("seed", args.seed), ("output_dir", args.out)):
        if val is not None:
            setattr(cfg, name, val)
    return cfg


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "validate":
        return validate(args.case)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    try:
        cfg = config_from_args(args)
    except ConfigError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_INVALID
    return run(cfg)


if __name__ == "__main__":
    sys.exit(main())
