"""Resistive-divider threshold cell.

A cell sums its input and control voltages through a conductance-weighted
divider and an ideal inverter turns the divider voltage into a logic level.
With equal resistances and a logic-0 control the cell is a NAND, with a
logic-1 control a NOR. Driving the control with NOR(inputs) while switching
its resistance low for a 1 gives XOR.
"""
from __future__ import annotations

import enum
import itertools
from dataclasses import dataclass
from typing import Callable, Sequence

V_DD = 1.0
V_TH = 0.5


class GateMode(enum.Enum):
    NAND = "nand"
    NOR = "nor"
    XOR = "xor"


class Level(enum.Enum):
    R_H = "high"
    R_L = "low"


class ArityUnsupported(ValueError):
    pass


@dataclass(frozen=True)
class CellConfig:
    input_resistances: tuple[float, ...]
    control_resistance: float
    v_th: float = V_TH
    v_dd: float = V_DD

    def __post_init__(self):
        object.__setattr__(self, "input_resistances", tuple(self.input_resistances))
        if not self.input_resistances:
            raise ValueError("a cell needs at least one input")
        if min(self.input_resistances) <= 0 or self.control_resistance <= 0:
            raise ValueError("resistances must be positive")
        if not 0 < self.v_th < self.v_dd:
            raise ValueError(f"need 0 < v_th < v_dd, got v_th={self.v_th}, v_dd={self.v_dd}")

    @classmethod
    def uniform(cls, r: float, n_inputs: int = 2, **kw) -> "CellConfig":
        return cls((r,) * n_inputs, r, **kw)


@dataclass(frozen=True)
class LtgSpec:
    weights: tuple[float, ...]
    threshold: float

    def __call__(self, bits: Sequence[int]) -> int:
        if len(bits) != len(self.weights):
            raise ValueError(f"expected {len(self.weights)} inputs, got {len(bits)}")
        return int(sum(w * b for w, b in zip(self.weights, bits)) >= self.threshold)


def divider_output(inputs: Sequence[tuple[float, float]], control: tuple[float, float]) -> float:
    """Output of the N-input divider; ``inputs`` and ``control`` are (volts, ohms)."""
    num = 0.0
    den = 0.0
    for v, r in (*inputs, control):
        if r <= 0:
            raise ValueError(f"resistance must be positive, got {r}")
        num += v / r
        den += 1.0 / r
    return num / den


def inverter_output(v_o: float, v_th: float = V_TH, v_dd: float = V_DD) -> float:
    # strict: v_o == v_th reads as "not below threshold"
    return v_dd if v_o < v_th else 0.0


def decode(v: float, v_dd: float = V_DD) -> int:
    return int(v >= 0.5 * v_dd)


def control_resistance_for(mode: GateMode, v_c: int) -> Level:
    if mode is GateMode.XOR and v_c:
        return Level.R_L
    return Level.R_H


_BOOLEAN = {
    GateMode.NAND: lambda a, b: 1 - (a & b),
    GateMode.NOR: lambda a, b: 1 - (a | b),
    GateMode.XOR: lambda a, b: a ^ b,
}


def gate_reference(mode: GateMode, bits: Sequence[int]) -> int:
    if len(bits) != 2:
        raise ArityUnsupported(f"{mode.value} reference is defined for 2 inputs, got {len(bits)}")
    a, b = (int(bool(x)) for x in bits)
    return _BOOLEAN[mode](a, b)


def evaluate_cell(config: CellConfig, input_volts: Sequence[float],
                  v_c: float) -> tuple[float, float]:
    if len(input_volts) != len(config.input_resistances):
        raise ValueError(
            f"config has {len(config.input_resistances)} inputs, got {len(input_volts)} voltages")
    v_o = divider_output(list(zip(input_volts, config.input_resistances)),
                         (v_c, config.control_resistance))
    return v_o, inverter_output(v_o, config.v_th, config.v_dd)


def realizes_ltg(config: CellConfig, spec: LtgSpec,
                 control: float | Callable[[tuple[int, ...]], float]) -> bool:
    """Exhaustively check that the cell output is the complement of ``spec``.

    ``control`` is the control voltage, or a function of the input bits
    returning it.
    """
    n = len(config.input_resistances)
    if len(spec.weights) != n:
        raise ValueError(f"spec has {len(spec.weights)} weights for a {n}-input cell")
    for bits in itertools.product((0, 1), repeat=n):
        v_c = control(bits) if callable(control) else control
        _, v_out = evaluate_cell(config, [b * config.v_dd for b in bits], v_c)
        if decode(v_out, config.v_dd) != 1 - spec(bits):
            return False
    return True
