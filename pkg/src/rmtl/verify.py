"""Exhaustive checks of simulated circuits against Boolean and integer oracles."""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Callable, Sequence

from .cell import GateMode, decode, gate_reference
from .circuit import Netlist
from .engine import Mode, SimConfig, simulate, stable_intervals


@dataclass(frozen=True)
class Oracle:
    inputs: tuple[str, ...]
    outputs: tuple[str, ...]
    fn: Callable[..., tuple[int, ...]]


def _adder(n_bits: int, with_cin: bool):
    def fn(*bits):
        a = sum(b << i for i, b in enumerate(bits[:n_bits]))
        b = sum(b << i for i, b in enumerate(bits[n_bits:2 * n_bits]))
        total = a + b + (bits[-1] if with_cin else 0)
        return tuple((total >> i) & 1 for i in range(n_bits + 1))
    return fn


def _gate(mode):
    return lambda a, b: (gate_reference(mode, (a, b)),)


_CLA_IN = (*(f"A{i}" for i in range(4)), *(f"B{i}" for i in range(4)), "CIN")
_CLA_OUT = (*(f"S{i}" for i in range(4)), "COUT")

ORACLES: dict[str, Oracle] = {
    "nand": Oracle(("A", "B"), ("OUT",), _gate(GateMode.NAND)),
    "nor": Oracle(("A", "B"), ("OUT",), _gate(GateMode.NOR)),
    "xor": Oracle(("A", "B"), ("OUT",), _gate(GateMode.XOR)),
    "half-adder": Oracle(("A", "B"), ("SUM", "COUT"), _adder(1, False)),
    "full-adder": Oracle(("A", "B", "CIN"), ("SUM", "COUT"), _adder(1, True)),
    "cla4": Oracle(_CLA_IN, _CLA_OUT, _adder(4, True)),
}


@dataclass
class VerifyResult:
    total: int = 0
    matched: int = 0
    mismatches: list = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return self.total > 0 and self.matched == self.total

    def summary(self) -> str:
        return f"{self.matched}/{self.total} vectors match"


def settle_config(netlist: Netlist, mode: Mode) -> SimConfig:
    """One frame (or 1 us without a schedule), sampled 20 times in READ."""
    frame = netlist.schedule.frame_period if netlist.schedule else 1e-6
    return SimConfig(t_end=frame, dt_read=frame / 20, mode=mode)


def evaluate_vector(netlist: Netlist, drive: dict[str, int], outputs: Sequence[str],
                    config: SimConfig) -> tuple[int, ...]:
    """Hold the inputs constant for one run and decode the outputs at the last stable point."""
    v_dd = 1.0
    run = netlist.with_sources({n: b * v_dd for n, b in drive.items()})
    traces = simulate(run, config, probes=list(outputs))
    intervals = stable_intervals(traces)
    if not intervals:
        raise RuntimeError("simulation produced no stable READ interval")
    i = intervals[-1].sample
    return tuple(decode(traces[o].values[i], v_dd) for o in outputs)


def verify(netlist: Netlist, oracle: Oracle, mode: Mode = Mode.BEHAVIORAL,
           config: SimConfig | None = None) -> VerifyResult:
    config = config or settle_config(netlist, mode)
    result = VerifyResult()
    for bits in itertools.product((0, 1), repeat=len(oracle.inputs)):
        got = evaluate_vector(netlist, dict(zip(oracle.inputs, bits)), oracle.outputs, config)
        want = tuple(oracle.fn(*bits))
        result.total += 1
        if got == want:
            result.matched += 1
        else:
            result.mismatches.append((bits, want, got))
    return result
