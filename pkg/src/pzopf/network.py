"""Network data, case-file I/O and bus admittance matrix."""
from __future__ import annotations

import enum
from dataclasses import dataclass
from functools import cached_property
from importlib import resources
from pathlib import Path

import numpy as np

from .dispatch import CostCoefficients, Generator
from .zones import FeasibleZones, ZoneError, from_prohibited


class CaseError(ValueError):
    """Malformed or inconsistent case data."""

    def __init__(self, msg, line=None):
        self.line = line
        super().__init__(f"line {line}: {msg}" if line is not None else msg)


class BusKind(enum.IntEnum):
    PQ = 0
    PV = 1
    SLACK = 2


@dataclass(frozen=True)
class Bus:
    id: int
    kind: BusKind
    p_load: float  # MW
    q_load: float  # MVAr
    v_setpoint: float = 1.0
    v_min: float = 0.95
    v_max: float = 1.05
    g_shunt: float = 0.0  # p.u.
    b_shunt: float = 0.0  # p.u.


@dataclass(frozen=True)
class Branch:
    from_bus: int
    to_bus: int
    r: float
    x: float
    b_charging: float = 0.0
    tap: float = 1.0


@dataclass(frozen=True)
class AdmittanceMatrix:
    g: np.ndarray
    b: np.ndarray

    @cached_property
    def y(self) -> np.ndarray:
        return self.g + 1j * self.b


@dataclass(frozen=True, eq=False)
class Network:
    """Immutable network.  ``generators[0]`` is the slack unit; the rest are sorted by bus."""

    buses: tuple[Bus, ...]
    branches: tuple[Branch, ...]
    generators: tuple[Generator, ...] = ()
    base_mva: float = 100.0

    def __post_init__(self):
        object.__setattr__(self, "buses", tuple(self.buses))
        object.__setattr__(self, "branches", tuple(self.branches))
        object.__setattr__(self, "generators", tuple(self.generators))
        validate(self)

    def __eq__(self, other):
        if not isinstance(other, Network):
            return NotImplemented
        return (self.buses, self.branches, self.generators, self.base_mva) == (
            other.buses, other.branches, other.generators, other.base_mva)

    def __hash__(self):
        return id(self)

    # index helpers -------------------------------------------------------
    @cached_property
    def index(self) -> dict[int, int]:
        return {b.id: i for i, b in enumerate(self.buses)}

    @cached_property
    def kinds(self) -> np.ndarray:
        return np.array([b.kind for b in self.buses], dtype=int)

    @cached_property
    def slack_index(self) -> int:
        return int(np.flatnonzero(self.kinds == BusKind.SLACK)[0])

    @cached_property
    def pv_index(self) -> np.ndarray:
        return np.flatnonzero(self.kinds == BusKind.PV)

    @cached_property
    def pq_index(self) -> np.ndarray:
        return np.flatnonzero(self.kinds == BusKind.PQ)

    @cached_property
    def v_min(self) -> np.ndarray:
        return np.array([b.v_min for b in self.buses])

    @cached_property
    def v_max(self) -> np.ndarray:
        return np.array([b.v_max for b in self.buses])

    @cached_property
    def gen_index(self) -> np.ndarray:
        """Bus position of every generator, in ``generators`` order."""
        return np.array([self.index[g.bus] for g in self.generators], dtype=int)

    @property
    def slack_generator(self) -> Generator:
        return self.generators[0]

    @property
    def controllable(self) -> tuple[Generator, ...]:
        return self.generators[1:]

    @property
    def total_load(self) -> float:
        return float(sum(b.p_load for b in self.buses))

    @property
    def n_bus(self) -> int:
        return len(self.buses)

    def without_zones(self) -> "Network":
        return Network(self.buses, self.branches, [g.without_zones() for g in self.generators], self.base_mva)


def validate(net: Network) -> None:
    ids = [b.id for b in net.buses]
    seen = set()
    for i in ids:
        if i in seen:
            raise CaseError(f"duplicate bus id {i}")
        seen.add(i)
    n_slack = sum(b.kind == BusKind.SLACK for b in net.buses)
    if n_slack != 1:
        raise CaseError(f"exactly one slack bus required, found {n_slack}")
    for b in net.buses:
        if b.v_min > b.v_max:
            raise CaseError(f"bus {b.id}: v_min > v_max")
    for br in net.branches:
        if br.from_bus not in seen or br.to_bus not in seen:
            raise CaseError(f"branch {br.from_bus}-{br.to_bus} references an unknown bus")
        if br.from_bus == br.to_bus:
            raise CaseError(f"branch {br.from_bus}-{br.to_bus} is a self loop")
        if br.x == 0:
            raise CaseError(f"branch {br.from_bus}-{br.to_bus} has zero reactance")
        if br.tap <= 0:
            raise CaseError(f"branch {br.from_bus}-{br.to_bus} has non-positive tap")
    if net.generators:
        kinds = {b.id: b.kind for b in net.buses}
        g0 = net.generators[0]
        if g0.bus not in kinds or kinds[g0.bus] != BusKind.SLACK:
            raise CaseError("first generator must sit on the slack bus")
        gb = [g.bus for g in net.generators]
        if len(set(gb)) != len(gb):
            raise CaseError("at most one generator per bus")
        for g in net.generators[1:]:
            if g.bus not in kinds:
                raise CaseError(f"generator at unknown bus {g.bus}")
            if kinds[g.bus] != BusKind.PV:
                raise CaseError(f"generator at bus {g.bus} must sit on a PV bus")
        pv_without = {b.id for b in net.buses if b.kind == BusKind.PV} - set(gb)
        if pv_without:
            raise CaseError(f"PV buses without a generator: {sorted(pv_without)}")


def build_admittance(net: Network) -> AdmittanceMatrix:
    """Assemble Y-bus with pi-model branches and off-nominal taps on the from side."""
    n = net.n_bus
    y = np.zeros((n, n), dtype=complex)
    idx = net.index
    for br in net.branches:
        f, t = idx[br.from_bus], idx[br.to_bus]
        ys = 1.0 / complex(br.r, br.x)
        ysh = 0.5j * br.b_charging
        a = br.tap
        y[f, f] += (ys + ysh) / (a * a)
        y[t, t] += ys + ysh
        y[f, t] -= ys / a
        y[t, f] -= ys / a
    for i, b in enumerate(net.buses):
        y[i, i] += complex(b.g_shunt, b.b_shunt)
    return AdmittanceMatrix(g=y.real.copy(), b=y.imag.copy())


# --- case files ------------------------------------------------------------

_SECTIONS = ("BASE", "BUS", "BRANCH", "GEN", "ZONE")
_NFIELDS = {"BASE": 1, "BUS": 9, "BRANCH": 6, "GEN": 8, "ZONE": 3}


def parse_case(text: str) -> Network:
    base = None
    buses, branches, gens, zones = [], [], [], {}
    last = -1
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, *vals = line.split()
        key = key.upper()
        if key not in _SECTIONS:
            raise CaseError(f"unknown record {key!r}", lineno)
        order = _SECTIONS.index(key)
        if order < last:
            raise CaseError(f"{key} record out of section order", lineno)
        last = order
        if len(vals) != _NFIELDS[key]:
            raise CaseError(f"{key} expects {_NFIELDS[key]} fields, got {len(vals)}", lineno)
        try:
            nums = [float(v) for v in vals]
        except ValueError as e:
            raise CaseError(f"bad number: {e}", lineno) from None
        if key == "BASE":
            if base is not None:
                raise CaseError("repeated BASE record", lineno)
            base = nums[0]
        elif key == "BUS":
            bid, kind = _int(nums[0], lineno), _int(nums[1], lineno)
            if kind not in (0, 1, 2):
                raise CaseError(f"bus kind must be 0, 1 or 2, got {kind}", lineno)
            if any(b.id == bid for b in buses):
                raise CaseError(f"duplicate bus id {bid}", lineno)
            buses.append(Bus(bid, BusKind(kind), *nums[2:]))
        elif key == "BRANCH":
            f, t = _int(nums[0], lineno), _int(nums[1], lineno)
            if nums[3] == 0:
                raise CaseError(f"branch {f}-{t} has zero reactance", lineno)
            branches.append(Branch(f, t, *nums[2:]))
        elif key == "GEN":
            gens.append((lineno, _int(nums[0], lineno), nums[1:]))
        else:
            zones.setdefault(_int(nums[0], lineno), []).append((nums[1], nums[2], lineno))
    if base is None:
        raise CaseError("missing BASE record")
    if not buses:
        raise CaseError("no BUS records")

    generators = []
    gen_buses = {bus for _, bus, _ in gens}
    for bus, items in zones.items():
        if bus not in gen_buses:
            raise CaseError(f"ZONE for bus {bus} without a generator", items[0][2])
    for lineno, bus, (pmin, pmax, qmin, qmax, a, b, c) in gens:
        pz = [(lo, hi) for lo, hi, _ in zones.get(bus, [])]
        try:
            fz = from_prohibited(pmin, pmax, pz)
            generators.append(Generator(bus, pmin, pmax, qmin, qmax, CostCoefficients(a, b, c), fz))
        except (ZoneError, ValueError) as e:
            raise CaseError(str(e), lineno) from None
    kinds = {b.id: b.kind for b in buses}
    generators.sort(key=lambda g: (kinds.get(g.bus) != BusKind.SLACK, g.bus))
    return Network(buses, branches, generators, base)


def _int(x: float, lineno: int) -> int:
    if x != int(x):
        raise CaseError(f"expected an integer, got {x}", lineno)
    return int(x)


def serialize_case(net: Network) -> str:
    out = [f"BASE {net.base_mva!r}"]
    for b in net.buses:
        out.append(f"BUS {b.id} {int(b.kind)} {b.p_load!r} {b.q_load!r} {b.v_setpoint!r} "
                   f"{b.v_min!r} {b.v_max!r} {b.g_shunt!r} {b.b_shunt!r}")
    for br in net.branches:
        out.append(f"BRANCH {br.from_bus} {br.to_bus} {br.r!r} {br.x!r} {br.b_charging!r} {br.tap!r}")
    for g in sorted(net.generators, key=lambda g: g.bus):
        c = g.cost
        out.append(f"GEN {g.bus} {g.p_min!r} {g.p_max!r} {g.q_min!r} {g.q_max!r} {c.alpha!r} {c.beta!r} {c.gamma!r}")
    for g in sorted(net.generators, key=lambda g: g.bus):
        for lo, hi in g.zones.prohibited:
            out.append(f"ZONE {g.bus} {lo!r} {hi!r}")
    return "\n".join(out) + "\n"


def load_case(path) -> Network:
    return parse_case(Path(path).read_text())


def bundled_case_path(name: str = "ieee30.case") -> Path:
    return Path(str(resources.files("pzopf") / "data" / name))


def ieee30(zones: bool = True) -> Network:
    """The bundled IEEE 30-bus case with the unit limits, costs and prohibited zones."""
    net = load_case(bundled_case_path())
    return net if zones else net.without_zones()


def zones_of(net: Network) -> list[FeasibleZones]:
    return [g.zones for g in net.generators]
