"""Truth-table extraction, waveform CSV and the per-gate cost model."""
from __future__ import annotations

import csv
import math
from collections import Counter
from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from .cell import V_DD, decode
from .circuit import Netlist, gate_inventory
from .engine import Traces, stable_intervals

DEFAULT_FAMILIES = ("rmtl", "cmos")


class ContradictoryRows(ValueError):
    def __init__(self, bits, outputs):
        self.bits = bits
        self.outputs = outputs
        super().__init__(f"inputs {''.join(map(str, bits))} produced outputs {sorted(outputs)}")


class MissingCoefficient(KeyError):
    def __init__(self, family: str, kind: str):
        self.family = family
        self.kind = kind
        super().__init__(f"no {family!r} coefficient for gate kind {kind!r}")

    def __str__(self):
        return self.args[0]


@dataclass(frozen=True)
class Row:
    inputs: tuple[int, ...]
    output: int
    time: float


@dataclass(frozen=True)
class TruthTable:
    inputs: tuple[str, ...]
    output: str
    rows: tuple[Row, ...]

    def as_dict(self) -> dict[tuple[int, ...], int]:
        return {r.inputs: r.output for r in self.rows}

    def format(self) -> str:
        widths = [max(len(n), 1) for n in self.inputs]
        head = "  ".join(n.rjust(w) for n, w in zip(self.inputs, widths))
        head += "  " + self.output + "  " + "t (s)"
        lines = [head, "-" * len(head)]
        for r in self.rows:
            cells = "  ".join(str(b).rjust(w) for b, w in zip(r.inputs, widths))
            lines.append(f"{cells}  {str(r.output).rjust(len(self.output))}  {r.time:.6g}")
        return "\n".join(lines)

    def to_csv(self) -> str:
        lines = [",".join([*self.inputs, self.output, "time"])]
        for r in self.rows:
            lines.append(",".join([*map(str, r.inputs), str(r.output), repr(r.time)]))
        return "\n".join(lines) + "\n"


def extract_truth_table(traces: Traces, inputs: Sequence[str], output: str,
                        v_dd: float = V_DD) -> TruthTable:
    """Decode inputs and output at the 90% point of every stable interval."""
    missing = [n for n in (*inputs, output) if n not in traces]
    if missing:
        raise KeyError(f"signals not recorded: {', '.join(missing)}")
    seen: dict[tuple[int, ...], Row] = {}
    for iv in stable_intervals(traces):
        i = iv.sample
        bits = tuple(decode(traces[n].values[i], v_dd) for n in inputs)
        out = decode(traces[output].values[i], v_dd)
        if bits in seen and seen[bits].output != out:
            raise ContradictoryRows(bits, {seen[bits].output, out})
        seen.setdefault(bits, Row(bits, out, float(traces.times[i])))
    return TruthTable(tuple(inputs), output, tuple(seen[k] for k in sorted(seen)))


# --------------------------------------------------------------------------
# cost model


@dataclass(frozen=True)
class CostCoefficients:
    table: Mapping[str, Mapping[str, tuple[float, float]]]

    def __post_init__(self):
        for family, kinds in self.table.items():
            for kind, (area, power) in kinds.items():
                if not (area > 0 and power > 0):
                    raise ValueError(f"{family}/{kind}: coefficients must be positive")

    def get(self, family: str, kind: str) -> tuple[float, float]:
        try:
            return self.table[family][kind]
        except KeyError:
            raise MissingCoefficient(family, kind) from None

    def scaled(self, family: str, factor: float) -> "CostCoefficients":
        table = {f: dict(k) for f, k in self.table.items()}
        table[family] = {k: (a * factor, p * factor) for k, (a, p) in table[family].items()}
        return CostCoefficients(table)


def parse_coefficients(text: str) -> CostCoefficients:
    table: dict[str, dict[str, tuple[float, float]]] = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        body = line.split("#", 1)[0].split()
        if not body:
            continue
        if len(body) != 4:
            raise ValueError(f"line {lineno}: expected 'family kind area power', got {line.strip()!r}")
        family, kind, area, power = body
        try:
            table.setdefault(family, {})[kind] = (float(area), float(power))
        except ValueError:
            raise ValueError(f"line {lineno}: area and power must be numbers") from None
    return CostCoefficients(table)


def load_coefficients(path=None) -> CostCoefficients:
    """Read a coefficient file; without ``path``, the bundled one."""
    if path is None:
        text = resources.files("rmtl").joinpath("data/coefficients.txt").read_text()
    else:
        text = Path(path).read_text()
    return parse_coefficients(text)


@dataclass(frozen=True)
class CostReport:
    inventory: Counter
    totals: dict[str, tuple[float, float]]
    families: tuple[str, str]

    @property
    def ratios(self) -> tuple[float, float] | None:
        """(area, power) of the first family over the second; None when undefined."""
        num, den = (self.totals[f] for f in self.families)
        if den[0] == 0 or den[1] == 0:
            return None
        return num[0] / den[0], num[1] / den[1]

    def format(self) -> str:
        lines = ["gates: " + (", ".join(f"{k}={n}" for k, n in sorted(self.inventory.items()))
                              or "none")]
        for fam in self.families:
            area, power = self.totals[fam]
            lines.append(f"{fam:>14}: area {area:.6g} um^2, power {power:.6g} uW")
        r = self.ratios
        label = f"{self.families[0]}/{self.families[1]}"
        if r is None:
            lines.append(f"{label}: n/a")
        else:
            lines.append(f"{label}: area {r[0]:.6g}, power {r[1]:.6g}")
        return "\n".join(lines)


def cost_report(netlist: Netlist, coefficients: CostCoefficients,
                families: tuple[str, str] = DEFAULT_FAMILIES) -> CostReport:
    """Sum per-gate coefficients; switches and sources are control circuitry and cost nothing."""
    inventory = gate_inventory(netlist)
    totals = {}
    for fam in families:
        area = []
        power = []
        for kind, n in sorted(inventory.items()):
            a, p = coefficients.get(fam, kind)
            area.append(n * a)
            power.append(n * p)
        totals[fam] = (math.fsum(area), math.fsum(power))
    return CostReport(inventory, totals, tuple(families))


# --------------------------------------------------------------------------
# waveform CSV


def write_csv(traces: Mapping, fh) -> None:
    """Write ``time`` then one column per waveform, in insertion order."""
    waves = list(traces.values())
    times = waves[0].times if waves else getattr(traces, "times", np.empty(0))
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(["time", *(wf.name for wf in waves)])
    for i, t in enumerate(times):
        w.writerow([repr(float(t)), *(repr(float(wf.values[i])) for wf in waves)])


def export_csv(traces: Mapping, path) -> None:
    with open(path, "w", newline="") as fh:
        write_csv(traces, fh)


def read_csv(path) -> tuple[np.ndarray, dict[str, np.ndarray]]:
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    header, body = rows[0], rows[1:]
    data = np.array([[float(x) for x in r] for r in body]).reshape(len(body), len(header))
    return data[:, 0], {name: data[:, j] for j, name in enumerate(header) if j > 0}
