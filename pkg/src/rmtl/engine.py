"""Fixed-step transient simulation with WRITE/READ frames.

Device switching (~10 ns) is three orders of magnitude faster than the
logic stimuli (~1 us), so the time grid is fine (``dt_write``) inside WRITE
phases and coarse (``dt_read``) inside READ phases. READ is algebraic: each
cell is a closed-form divider followed by an ideal inverter, evaluated once
per sample in topological order.
"""
from __future__ import annotations

import enum
import graphlib
import math
from dataclasses import dataclass

import numpy as np

from .cell import GateMode, Level, control_resistance_for, decode, divider_output, inverter_output
from .circuit import (GROUND, ConstantSource, Inverter, Memristor, Netlist, PulseSource,
                      Switch, SwitchKind, ThresholdCell, validate)
from .device import MemristorState, StepTooLarge, Target, saturated_state, step_state, training_pulse

__all__ = [
    "Mode", "SimConfig", "Waveform", "Traces", "simulate", "evaluate_read_step",
    "run_write_phase", "stable_intervals", "UnvalidatedNetlist", "CombinationalCycle",
    "WritePhaseTooShort", "StepTooLarge",
]


class Mode(enum.Enum):
    PHYSICAL = "physical"
    BEHAVIORAL = "behavioral"


class UnvalidatedNetlist(ValueError):
    def __init__(self, errors):
        self.errors = list(errors)
        super().__init__("; ".join(str(e) for e in self.errors))


class CombinationalCycle(ValueError):
    pass


class WritePhaseTooShort(ValueError):
    pass


@dataclass(frozen=True)
class SimConfig:
    t_end: float
    dt_read: float = 10e-9
    dt_write: float | None = None  # t_switch / 20 when unset
    mode: Mode = Mode.PHYSICAL

    def __post_init__(self):
        if not self.t_end > 0:
            raise ValueError(f"t_end must be positive, got {self.t_end}")
        if not self.dt_read > 0:
            raise ValueError(f"dt_read must be positive, got {self.dt_read}")
        if self.dt_write is not None and not self.dt_write > 0:
            raise ValueError(f"dt_write must be positive, got {self.dt_write}")


@dataclass
class Waveform:
    name: str
    times: np.ndarray
    values: np.ndarray
    unit: str = "V"

    def at(self, t: float) -> float:
        """Value of the last sample at or before ``t``."""
        i = int(np.searchsorted(self.times, t, side="right")) - 1
        return float(self.values[max(i, 0)])


class Traces(dict):
    """Probe name -> Waveform, plus the phase and source-activity record.

    ``read`` flags READ-phase samples; ``segments`` are index ranges
    ``[i, j)`` of consecutive READ samples with constant decoded sources.
    """

    def __init__(self, *args, times=None, read=None, segments=(), **kw):
        super().__init__(*args, **kw)
        self.times = times
        self.read = read
        self.segments = list(segments)


# --------------------------------------------------------------------------


def resolve_signal(netlist: Netlist, name: str) -> tuple[str, str]:
    """Map a probe name to ("node", node) or ("mem", memristor)."""
    if name in netlist.nodes:
        return "node", name
    el = netlist.by_name.get(name)
    if isinstance(el, Memristor):
        return "mem", name
    if isinstance(el, (PulseSource, ConstantSource)):
        return "node", el.node
    if isinstance(el, (ThresholdCell, Inverter)):
        return "node", el.output
    raise KeyError(f"unknown signal {name!r}")


class _Plan:
    """Topologically ordered view of a validated netlist."""

    def __init__(self, netlist: Netlist):
        self.netlist = netlist
        self.params = netlist.params
        try:
            names = netlist.topological_order()
        except graphlib.CycleError as exc:
            raise CombinationalCycle(" -> ".join(exc.args[1])) from None
        by_name = netlist.by_name
        self.order = [by_name[n] for n in names]
        self.sources = netlist.sources
        self.memristors = netlist.of_type(Memristor)
        self.writers = {sw.dst: sw for sw in netlist.of_type(Switch)
                        if sw.kind is SwitchKind.WRITE}
        self.cells = netlist.of_type(ThresholdCell)

    def initial_states(self) -> dict[str, float]:
        return {m.name: m.initial_x(self.params) for m in self.memristors}

    def source_values(self, t: float) -> dict[str, float]:
        return {s.node: (s.value(t) if isinstance(s, PulseSource) else s.value)
                for s in self.sources}

    def memristance(self, x: float) -> float:
        return self.params.r_on * x + self.params.r_off * (1.0 - x)

    def evaluate(self, states, src, read=True, targets=None) -> dict[str, float]:
        """Node voltages for one instant.

        With ``targets`` (a dict), WRITE-controlled memristors are first given
        the level their control bit selects and the choice is stored there.
        """
        v = dict(src)
        v[GROUND] = 0.0
        for el in self.order:
            if isinstance(el, ThresholdCell):
                xs = []
                for m in el.memristors:
                    x = states[m]
                    if targets is not None and m in self.writers:
                        bit = decode(v[self.writers[m].src], el.v_dd)
                        level = control_resistance_for(GateMode.XOR, bit)
                        tgt = Target.SET_LOW if level is Level.R_L else Target.SET_HIGH
                        targets[m] = tgt
                        x = saturated_state(tgt, self.params).x
                    xs.append(x)
                r1, r2, rc = (self.memristance(x) for x in xs)
                vo = divider_output([(v[el.inputs[0]], r1), (v[el.inputs[1]], r2)],
                                    (v[el.control], rc))
                v[el.divider_node] = vo
                v[el.output] = inverter_output(vo, el.v_th, el.v_dd)
            elif isinstance(el, Inverter):
                v[el.output] = inverter_output(v[el.input], el.v_th, el.v_dd)
            elif isinstance(el, Switch):
                v[el.dst] = v[el.src] if read else 0.0
        return v

    def plan_writes(self, states, src) -> dict[str, Target]:
        targets: dict[str, Target] = {}
        self.evaluate(states, src, read=True, targets=targets)
        return targets

    def terminal_voltages(self, v):
        for el in self.cells:
            vo = v[el.divider_node]
            yield el.memristors[0], v[el.inputs[0]] - vo
            yield el.memristors[1], v[el.inputs[1]] - vo
            yield el.memristors[2], v[el.control] - vo


def _checked(netlist: Netlist) -> _Plan:
    errors = validate(netlist)
    if errors:
        raise UnvalidatedNetlist(errors)
    return _Plan(netlist)


def evaluate_read_step(netlist: Netlist, source_values: dict[str, float] | None = None,
                       states: dict[str, float] | None = None, t: float = 0.0) -> dict[str, float]:
    """Node voltages of the READ network at one instant.

    ``source_values`` maps source nodes to volts and overrides the netlist's
    own sources (evaluated at ``t``); ``states`` maps memristors to x.
    """
    plan = _Plan(netlist)
    src = plan.source_values(t)
    src.update(source_values or {})
    x = plan.initial_states()
    x.update(states or {})
    return plan.evaluate(x, src)


def run_write_phase(netlist: Netlist, targets: dict[str, Target],
                    states: dict[str, float] | None = None,
                    dt_write: float | None = None) -> dict[str, float]:
    """Apply one WRITE phase of training pulses; returns the new states."""
    plan = _Plan(netlist)
    x = plan.initial_states()
    x.update(states or {})
    if not targets:
        return x
    params = netlist.params
    dt = dt_write or params.max_write_step
    write_time = _write_time(netlist)
    _check_write_time(write_time, params)
    n = math.ceil(write_time / dt - 1e-9)
    for j in range(n):
        h = min(dt, write_time - j * dt)
        for m, tgt in targets.items():
            x[m] = _write_step(x[m], tgt, j * dt, h, params)
    return x


def _write_time(netlist: Netlist) -> float:
    if netlist.schedule is None:
        raise WritePhaseTooShort("netlist has no phase schedule, so no WRITE phase")
    return netlist.schedule.write_time


def _check_write_time(write_time: float, params) -> None:
    pulse = 2 * params.t_switch
    if write_time < pulse * (1 - 1e-9):
        raise WritePhaseTooShort(
            f"WRITE phase lasts {write_time:g}s but a training pulse needs {pulse:g}s")


def _write_step(x: float, target: Target, offset: float, h: float, params) -> float:
    pulse = training_pulse(target, params)
    active = min(h, pulse.duration - offset)
    if active <= pulse.duration * 1e-12:
        return x
    return step_state(MemristorState(x), pulse.amplitude, active, params).x


# --------------------------------------------------------------------------


def _grid(t_end: float, dt_read: float, dt_write: float, schedule):
    """Sample times with (is_write, frame_start, offset-in-phase) tags."""
    times, write, starts, offsets = [], [], [], []
    if schedule is None:
        n = math.ceil(t_end / dt_read - 1e-9)
        for i in range(n):
            times.append(i * dt_read)
        write = [False] * n
        starts = [False] * n
        offsets = [t for t in times]
    else:
        T = schedule.frame_period
        wt = schedule.write_time
        nw = math.ceil(wt / dt_write - 1e-9) if wt > 0 else 0
        nr = math.ceil((T - wt) / dt_read - 1e-9)
        k = 0
        while k * T < t_end * (1 - 1e-12):
            f0 = k * T
            for j in range(nw):
                t = f0 + j * dt_write
                if t >= t_end * (1 - 1e-12):
                    break
                times.append(t)
                write.append(True)
                starts.append(j == 0)
                offsets.append(j * dt_write)
            for j in range(nr):
                t = f0 + wt + j * dt_read
                if t >= t_end * (1 - 1e-12):
                    break
                times.append(t)
                write.append(False)
                starts.append(nw == 0 and j == 0)
                offsets.append(j * dt_read)
            k += 1
    times.append(t_end)
    tail_write = schedule is not None and schedule.is_write(t_end)
    write.append(tail_write)
    starts.append(False)
    offsets.append(0.0)
    return np.asarray(times), write, starts, offsets


def simulate(netlist: Netlist, config: SimConfig, probes=None) -> Traces:
    """Run a transient simulation; returns a Waveform per probe.

    ``probes`` defaults to every driven node. Memristor probes record
    memristance in ohms.
    """
    plan = _checked(netlist)
    params = netlist.params
    dt_write = config.dt_write or params.max_write_step
    if dt_write > params.max_write_step * (1 + 1e-12):
        raise StepTooLarge(f"dt_write={dt_write:g}s exceeds t_switch/20={params.max_write_step:g}s")
    physical = config.mode is Mode.PHYSICAL
    schedule = netlist.schedule
    if plan.writers:
        write_time = _write_time(netlist)
        if physical:
            _check_write_time(write_time, params)

    if probes is None:
        probes = [n for n in netlist.drivers if n != GROUND]
    resolved = [(name, *resolve_signal(netlist, name)) for name in probes]

    times, write, starts, offsets = _grid(config.t_end, config.dt_read, dt_write, schedule)
    n = len(times)
    data = np.empty((len(resolved), n))
    src_nodes = [s.node for s in plan.sources]
    src_bits = np.empty((len(src_nodes), n), dtype=np.int8)

    x = plan.initial_states()
    targets: dict[str, Target] = {}
    for i in range(n):
        t = float(times[i])
        src = plan.source_values(t)
        if starts[i] and plan.writers:
            targets = plan.plan_writes(x, src)
            if not physical:
                for m, tgt in targets.items():
                    x[m] = saturated_state(tgt, params).x
        v = plan.evaluate(x, src, read=not write[i])

        for r, (_, kind, ref) in enumerate(resolved):
            data[r, i] = v[ref] if kind == "node" else plan.memristance(x[ref])
        for r, node in enumerate(src_nodes):
            src_bits[r, i] = decode(src[node])

        if not physical or i == n - 1:
            continue
        h = float(times[i + 1]) - t
        programmed = targets if write[i] else {}
        for m, tgt in programmed.items():
            x[m] = _write_step(x[m], tgt, offsets[i], h, params)
        for m, vm in plan.terminal_voltages(v):
            if m not in programmed:
                x[m] = step_state(MemristorState(x[m]), vm, h, params).x

    traces = Traces(times=times, read=~np.asarray(write, dtype=bool),
                    segments=_segments(src_bits, write))
    for r, (name, kind, _) in enumerate(resolved):
        traces[name] = Waveform(name, times, data[r], "V" if kind == "node" else "ohm")
    return traces


def _segments(src_bits: np.ndarray, write) -> list[tuple[int, int]]:
    out = []
    start = None
    n = src_bits.shape[1]
    for i in range(n + 1):
        boundary = (i == n or write[i] or start is None
                    or not np.array_equal(src_bits[:, i], src_bits[:, start]))
        if boundary and start is not None:
            out.append((start, i))
            start = None
        if i < n and not write[i] and start is None:
            start = i
    return out


@dataclass(frozen=True)
class StableInterval:
    start: float
    stop: float
    indices: np.ndarray  # samples past the first 10% of the interval
    sample: int          # sample at the 90% point


def stable_intervals(traces: Traces, settle: float = 0.1, point: float = 0.9) -> list[StableInterval]:
    """READ-phase intervals with constant sources, skipping the first ``settle`` fraction."""
    times = traces.times
    out = []
    for i, j in traces.segments:
        start = times[i]
        stop = times[j] if j < len(times) else times[-1]
        span = stop - start
        if span <= 0:
            continue
        idx = np.arange(i, j)
        keep = idx[times[idx] >= start + settle * span - 1e-18]
        at = idx[times[idx] <= start + point * span + 1e-18]
        if len(keep) == 0 or len(at) == 0:
            continue
        out.append(StableInterval(float(start), float(stop), keep, int(at[-1])))
    return out
