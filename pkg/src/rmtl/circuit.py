"""Netlist model, structural validation and builders for the adder family.

Nodes are plain strings. A node exists once something drives it: a source,
a cell output (or its divider node), an inverter output or a read switch.
``GROUND`` always exists.
"""
from __future__ import annotations

import enum
import graphlib
import math
from collections import Counter, defaultdict
from dataclasses import dataclass, replace
from typing import Sequence, Union

from .cell import V_DD, V_TH, GateMode, Level, decode
from .device import DEFAULT_PARAMS, MemristorParams, Target, saturated_state

GROUND = "0"


class SwitchKind(enum.Enum):
    WRITE = "write"  # S_W: closes during WRITE, programs a memristor
    READ = "read"    # S_R: closes during READ, passes a test voltage


@dataclass(frozen=True)
class Memristor:
    name: str
    state: Union[Level, float] = Level.R_H

    def initial_x(self, params: MemristorParams) -> float:
        if self.state is Level.R_H:
            return saturated_state(Target.SET_HIGH, params).x
        if self.state is Level.R_L:
            return saturated_state(Target.SET_LOW, params).x
        return float(self.state)


@dataclass(frozen=True)
class ThresholdCell:
    name: str
    inputs: tuple[str, str]
    control: str
    output: str
    memristors: tuple[str, str, str]
    vo: str | None = None
    v_th: float = V_TH
    v_dd: float = V_DD

    @property
    def divider_node(self) -> str:
        return self.vo or f"{self.name}.vo"


@dataclass(frozen=True)
class Inverter:
    name: str
    input: str
    output: str
    v_th: float = V_TH
    v_dd: float = V_DD


@dataclass(frozen=True)
class Switch:
    """Ideal phase-controlled switch.

    A READ switch copies ``src`` onto node ``dst`` while conducting. A WRITE
    switch connects the training driver to memristor ``dst``; the driver
    picks the pulse from the decoded level of node ``src`` (1 sets R_L).
    """

    name: str
    kind: SwitchKind
    src: str
    dst: str


@dataclass(frozen=True)
class PulseSource:
    name: str
    node: str
    period: float
    duty: float = 0.5
    low: float = 0.0
    high: float = V_DD
    delay: float = 0.0

    def __post_init__(self):
        if not self.period > 0:
            raise ValueError(f"{self.name}: period must be positive, got {self.period}")
        if not 0 < self.duty <= 1:
            raise ValueError(f"{self.name}: duty must lie in (0, 1], got {self.duty}")
        if self.delay < 0:
            raise ValueError(f"{self.name}: delay must be non-negative, got {self.delay}")

    def value(self, t: float) -> float:
        if t < self.delay:
            return self.low
        q = (t - self.delay) / self.period
        # edges snap to the nearest grid point so 0.5u % 1u is exactly 0.5
        frac = q - math.floor(q + 1e-9)
        return self.high if frac < self.duty - 1e-9 else self.low

    def edges(self, t_end: float) -> list[float]:
        out = []
        k = 0
        while True:
            start = self.delay + k * self.period
            if start > t_end:
                return out
            out.append(start)
            if self.duty < 1:
                out.append(start + self.duty * self.period)
            k += 1


@dataclass(frozen=True)
class ConstantSource:
    name: str
    node: str
    value: float

    def edges(self, t_end: float) -> list[float]:
        return []


@dataclass(frozen=True)
class PhaseSchedule:
    frame_period: float = 0.5e-6
    write_fraction: float = 0.05

    def __post_init__(self):
        if not self.frame_period > 0:
            raise ValueError(f"frame period must be positive, got {self.frame_period}")
        if not 0 <= self.write_fraction < 1:
            raise ValueError(f"write fraction must lie in [0, 1), got {self.write_fraction}")

    @property
    def write_time(self) -> float:
        return self.write_fraction * self.frame_period

    def is_write(self, t: float) -> bool:
        q = t / self.frame_period
        frac = q - math.floor(q + 1e-9)
        return frac < self.write_fraction - 1e-9


Element = Union[Memristor, ThresholdCell, Inverter, Switch, PulseSource, ConstantSource]
Source = Union[PulseSource, ConstantSource]


@dataclass(frozen=True)
class StructuralError:
    kind: str
    element: str
    detail: str

    def __str__(self):
        return f"{self.kind}: {self.element}: {self.detail}"


def _outputs(el: Element) -> tuple[str, ...]:
    if isinstance(el, ThresholdCell):
        return (el.divider_node, el.output)
    if isinstance(el, Inverter):
        return (el.output,)
    if isinstance(el, (PulseSource, ConstantSource)):
        return (el.node,)
    if isinstance(el, Switch) and el.kind is SwitchKind.READ:
        return (el.dst,)
    return ()


def _inputs(el: Element) -> tuple[str, ...]:
    if isinstance(el, ThresholdCell):
        return (*el.inputs, el.control)
    if isinstance(el, Inverter):
        return (el.input,)
    if isinstance(el, Switch):
        return (el.src,)
    return ()


@dataclass(frozen=True)
class Netlist:
    elements: tuple[Element, ...]
    schedule: PhaseSchedule | None = None
    params: MemristorParams = DEFAULT_PARAMS

    def __post_init__(self):
        object.__setattr__(self, "elements", tuple(self.elements))

    @property
    def by_name(self) -> dict[str, Element]:
        return {el.name: el for el in self.elements}

    def of_type(self, cls) -> list:
        return [el for el in self.elements if isinstance(el, cls)]

    @property
    def drivers(self) -> dict[str, Element]:
        out = {}
        for el in self.elements:
            for node in _outputs(el):
                out.setdefault(node, el)
        return out

    @property
    def nodes(self) -> set[str]:
        return {GROUND, *self.drivers}

    @property
    def sources(self) -> list[Source]:
        return [el for el in self.elements if isinstance(el, (PulseSource, ConstantSource))]

    def consumers(self, node: str) -> list[Element]:
        return [el for el in self.elements if node in _inputs(el)]

    def with_sources(self, drive: dict[str, Union[float, Source]]) -> "Netlist":
        """Replace the source on each named node by a constant or a given source."""
        drive = dict(drive)
        elements = []
        for el in self.elements:
            if isinstance(el, (PulseSource, ConstantSource)) and el.node in drive:
                new = drive.pop(el.node)
                if not isinstance(new, (PulseSource, ConstantSource)):
                    new = ConstantSource(el.name, el.node, float(new))
                el = replace(new, name=el.name, node=el.node)
            elements.append(el)
        if drive:
            raise KeyError(f"no source drives node(s) {sorted(drive)}")
        return replace(self, elements=tuple(elements))

    def dataflow(self) -> dict[str, set[str]]:
        """Element -> names of elements it must be evaluated after."""
        drivers = self.drivers
        write_ctl = defaultdict(set)
        for sw in self.of_type(Switch):
            if sw.kind is SwitchKind.WRITE:
                write_ctl[sw.dst].add(sw.src)
        graph = {}
        for el in self.elements:
            if isinstance(el, (Memristor, PulseSource, ConstantSource)):
                continue
            if isinstance(el, Switch) and el.kind is SwitchKind.WRITE:
                continue
            needs = set(_inputs(el))
            if isinstance(el, ThresholdCell):
                for m in el.memristors:
                    needs |= write_ctl.get(m, set())
            graph[el.name] = {drivers[n].name for n in needs if n in drivers}
        return graph

    def topological_order(self) -> list[str]:
        order = graphlib.TopologicalSorter(self.dataflow()).static_order()
        evaluable = self.dataflow().keys()
        return [name for name in order if name in evaluable]


def merge(*netlists: Netlist) -> Netlist:
    schedules = {n.schedule for n in netlists if n.schedule is not None}
    if len(schedules) > 1:
        raise ValueError("fragments carry different phase schedules")
    params = {n.params for n in netlists}
    if len(params) > 1:
        raise ValueError("fragments carry different device parameters")
    elements = tuple(el for n in netlists for el in n.elements)
    return Netlist(elements, schedules.pop() if schedules else None,
                   params.pop() if params else DEFAULT_PARAMS)


def validate(netlist: Netlist) -> list[StructuralError]:
    errors: list[StructuralError] = []
    names = Counter(el.name for el in netlist.elements)
    for name, n in names.items():
        if n > 1:
            errors.append(StructuralError("DuplicateName", name, f"declared {n} times"))

    driven: dict[str, list[str]] = defaultdict(list)
    for el in netlist.elements:
        for node in _outputs(el):
            driven[node].append(el.name)
    for node, who in driven.items():
        if node == GROUND:
            errors.append(StructuralError("DrivesGround", who[0], "output tied to ground"))
        elif len(who) > 1:
            errors.append(StructuralError("MultipleDrivers", who[1],
                                          f"node {node!r} already driven by {who[0]}"))

    memristors = {el.name for el in netlist.of_type(Memristor)}
    owners: dict[str, list[str]] = defaultdict(list)
    for el in netlist.elements:
        is_write = isinstance(el, Switch) and el.kind is SwitchKind.WRITE
        for node in _inputs(el):
            if node != GROUND and node not in driven:
                errors.append(StructuralError("DanglingTerminal", el.name,
                                              f"node {node!r} is not driven"))
        if isinstance(el, ThresholdCell):
            if len(set(el.memristors)) != 3:
                errors.append(StructuralError("MemristorOwnership", el.name,
                                              "needs three distinct memristors"))
            for m in el.memristors:
                owners[m].append(el.name)
                if m not in memristors:
                    errors.append(StructuralError("UnknownMemristor", el.name,
                                                  f"no memristor named {m!r}"))
        if is_write and el.dst not in memristors:
            errors.append(StructuralError("UnknownMemristor", el.name,
                                          f"no memristor named {el.dst!r}"))
    for m, cells in owners.items():
        if len(set(cells)) > 1:
            errors.append(StructuralError("MemristorOwnership", m,
                                          f"shared by cells {', '.join(sorted(set(cells)))}"))

    try:
        graphlib.TopologicalSorter(netlist.dataflow()).prepare()
    except graphlib.CycleError as exc:
        cycle = exc.args[1]
        errors.append(StructuralError("CombinationalCycle", cycle[0],
                                      " -> ".join(cycle)))
    except KeyError:
        pass  # dangling references are reported above
    return errors


# --------------------------------------------------------------------------
# builders


class CircuitBuilder:
    """Accumulates elements for one fragment; every gate method returns its output node."""

    def __init__(self, prefix: str = "", params: MemristorParams = DEFAULT_PARAMS,
                 v_dd: float = V_DD):
        self.prefix = prefix
        self.params = params
        self.v_dd = v_dd
        self.elements: list[Element] = []
        self._count: Counter = Counter()
        self._ties: dict[int, str] = {}
        self.needs_schedule = False

    def _name(self, stem: str) -> str:
        self._count[stem] += 1
        return f"{self.prefix}{stem}{self._count[stem]}"

    def add(self, el: Element) -> Element:
        self.elements.append(el)
        return el

    def input(self, node: str, value: float = 0.0) -> str:
        self.add(ConstantSource(f"V{node}", node, value))
        return node

    def tie(self, bit: int) -> str:
        if bit not in self._ties:
            node = f"{self.prefix}TIE{bit}"
            self.add(ConstantSource(f"V{node}", node, bit * self.v_dd))
            self._ties[bit] = node
        return self._ties[bit]

    def cell(self, a: str, b: str, ctl: str, out: str | None = None,
             rc: Level = Level.R_H) -> ThresholdCell:
        name = self._name("X")
        mems = (f"{name}.R1", f"{name}.R2", f"{name}.RC")
        for m, level in zip(mems, (Level.R_H, Level.R_H, rc)):
            self.add(Memristor(m, level))
        return self.add(ThresholdCell(name, (a, b), ctl, out or f"{name}.out", mems,
                                      v_dd=self.v_dd, v_th=0.5 * self.v_dd))

    def nand(self, a: str, b: str, out: str | None = None) -> str:
        return self.cell(a, b, self.tie(0), out).output

    def nor(self, a: str, b: str, out: str | None = None) -> str:
        return self.cell(a, b, self.tie(1), out).output

    def inv(self, a: str, out: str | None = None) -> str:
        name = self._name("I")
        return self.add(Inverter(name, a, out or f"{name}.out",
                                 v_dd=self.v_dd, v_th=0.5 * self.v_dd)).output

    def and_(self, a: str, b: str, out: str | None = None) -> str:
        return self.inv(self.nand(a, b), out)

    def or_(self, a: str, b: str, out: str | None = None) -> str:
        return self.inv(self.nor(a, b), out)

    def xor(self, a: str, b: str, out: str | None = None) -> str:
        ctl = self.nor(a, b)
        main = self.cell(a, b, ctl, out)
        self.add(Switch(self._name("SW"), SwitchKind.WRITE, ctl, main.memristors[2]))
        self.needs_schedule = True
        return main.output

    def and_all(self, nodes: Sequence[str], out: str | None = None) -> str:
        return self._tree(list(nodes), self.and_, out)

    def or_all(self, nodes: Sequence[str], out: str | None = None) -> str:
        return self._tree(list(nodes), self.or_, out)

    @staticmethod
    def _tree(nodes, op, out):
        while len(nodes) > 2:
            paired = [op(nodes[i], nodes[i + 1]) for i in range(0, len(nodes) - 1, 2)]
            if len(nodes) % 2:
                paired.append(nodes[-1])
            nodes = paired
        return op(nodes[0], nodes[1], out) if len(nodes) == 2 else nodes[0]

    def build(self, schedule: PhaseSchedule | None = None) -> Netlist:
        if schedule is None and self.needs_schedule:
            schedule = PhaseSchedule()
        return Netlist(tuple(self.elements), schedule, self.params)


def build_gate_cell(mode: GateMode, v_c_source: Source | None = None,
                    inputs: tuple[str, str] = ("A", "B"), output: str = "OUT",
                    params: MemristorParams = DEFAULT_PARAMS) -> Netlist:
    """Single cell with all three memristors at R_H and control on node ``VC``.

    Without ``v_c_source`` the control is tied to 0 V for NAND or v_dd for NOR.
    """
    if mode is GateMode.XOR:
        raise ValueError("use build_xor for the XOR configuration")
    b = CircuitBuilder(params=params)
    for node in inputs:
        b.input(node)
    if v_c_source is None:
        b.input("VC", V_DD if mode is GateMode.NOR else 0.0)
    else:
        b.add(replace(v_c_source, node="VC"))
    b.cell(*inputs, "VC", output)
    return b.build()


def build_xor(inputs: tuple[str, str] = ("A", "B"), output: str = "OUT",
              params: MemristorParams = DEFAULT_PARAMS) -> Netlist:
    b = CircuitBuilder(params=params)
    b.xor(b.input(inputs[0]), b.input(inputs[1]), output)
    return b.build()


def build_and(inputs: tuple[str, str] = ("A", "B"), output: str = "OUT",
              params: MemristorParams = DEFAULT_PARAMS) -> Netlist:
    b = CircuitBuilder(params=params)
    b.and_(b.input(inputs[0]), b.input(inputs[1]), output)
    return b.build()


def build_half_adder(a: str = "A", b: str = "B", prefix: str = "",
                     params: MemristorParams = DEFAULT_PARAMS) -> Netlist:
    """Outputs ``SUM`` and ``COUT`` (with ``prefix``)."""
    cb = CircuitBuilder(prefix, params)
    cb.input(a)
    cb.input(b)
    cb.xor(a, b, f"{prefix}SUM")
    cb.and_(a, b, f"{prefix}COUT")
    return cb.build()


def build_full_adder(a: str = "A", b: str = "B", cin: str = "CIN", prefix: str = "",
                     params: MemristorParams = DEFAULT_PARAMS) -> Netlist:
    cb = CircuitBuilder(prefix, params)
    for node in (a, b, cin):
        cb.input(node)
    p = cb.xor(a, b)
    cb.xor(p, cin, f"{prefix}SUM")
    cb.or_(cb.and_(a, b), cb.and_(cin, p), f"{prefix}COUT")
    return cb.build()


def build_cla4(a: Sequence[str] = ("A0", "A1", "A2", "A3"),
               b: Sequence[str] = ("B0", "B1", "B2", "B3"),
               cin: str = "CIN", prefix: str = "",
               params: MemristorParams = DEFAULT_PARAMS) -> Netlist:
    """Flattened 4-bit carry-lookahead adder; outputs ``S0..S3`` and ``COUT``.

    Propagate p_i = a_i ^ b_i and generate g_i = a_i & b_i. Every carry is
    one OR tree over AND trees of the form g_j & p_{j+1} & ... & p_{i-1}
    (plus the all-propagate term with the carry in), so no carry waits on
    another. See ``CLA4_GATES`` for the resulting gate count.
    """
    cb = CircuitBuilder(prefix, params)
    for node in (*a, *b, cin):
        cb.input(node)
    p = [cb.xor(x, y) for x, y in zip(a, b)]
    g = [cb.and_(x, y) for x, y in zip(a, b)]
    carries = [cin]
    for i in range(4):
        terms = [g[i]]
        for j in range(i - 1, -1, -1):
            terms.append(cb.and_all([*p[j + 1:i + 1], g[j]]))
        terms.append(cb.and_all([*p[:i + 1], cin]))
        carries.append(cb.or_all(terms, f"{prefix}COUT" if i == 3 else None))
    for i in range(4):
        cb.xor(p[i], carries[i], f"{prefix}S{i}")
    return cb.build()


# Gate inventory of build_cla4: 4 XOR propagate + 4 XOR sum, 4 AND generate
# plus 20 AND in the carry product terms, and 10 OR in the carry sums.
CLA4_GATES = {"xor": 8, "and": 24, "or": 10}


def gate_inventory(netlist: Netlist) -> Counter:
    """Count logical gates by kind; sources and switches are not gates."""
    drivers = netlist.drivers
    memristor_writers = {sw.dst: sw for sw in netlist.of_type(Switch)
                         if sw.kind is SwitchKind.WRITE}
    kind_of_cell: dict[str, str] = {}
    absorbed: set[str] = set()
    for c in netlist.of_type(ThresholdCell):
        sw = memristor_writers.get(c.memristors[2])
        if sw is not None:
            kind_of_cell[c.name] = "xor"
            ctl = drivers.get(sw.src)
            if isinstance(ctl, ThresholdCell):
                absorbed.add(ctl.name)
            continue
        src = drivers.get(c.control)
        if isinstance(src, ConstantSource):
            kind_of_cell[c.name] = "nor" if decode(src.value, c.v_dd) else "nand"
        else:
            kind_of_cell[c.name] = "cell"

    counts: Counter = Counter()
    merged: set[str] = set()
    for inv in netlist.of_type(Inverter):
        src = drivers.get(inv.input)
        if (isinstance(src, ThresholdCell) and src.name not in absorbed
                and kind_of_cell.get(src.name) in ("nand", "nor")
                and len(netlist.consumers(inv.input)) == 1):
            counts["and" if kind_of_cell[src.name] == "nand" else "or"] += 1
            merged.add(src.name)
        else:
            counts["inv"] += 1
    for name, kind in kind_of_cell.items():
        if name not in absorbed and name not in merged:
            counts[kind] += 1
    return counts
