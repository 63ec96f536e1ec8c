"""Regenerate the netlists in circuits/ from the builders.

    python scripts/make_circuits.py [outdir]
"""
import sys
from pathlib import Path

from rmtl.circuit import (Memristor, Netlist, PulseSource, ThresholdCell, build_cla4,
                          build_full_adder, build_half_adder, build_xor)
from rmtl.dsl import NetlistDocument, serialize


def nandnor() -> NetlistDocument:
    elements = (
        PulseSource("V1", "IN1", period=1e-6),
        PulseSource("V2", "IN2", period=2e-6),
        PulseSource("Vc", "CTL", period=4e-6),
        Memristor("R1"), Memristor("R2"), Memristor("RC"),
        ThresholdCell("X1", ("IN1", "IN2"), "CTL", "OUT", ("R1", "R2", "RC"), vo="VO"),
    )
    return NetlistDocument.from_netlist(Netlist(elements), ("V1", "V2", "Vc", "VO", "OUT"))


def xor2() -> NetlistDocument:
    net = build_xor().with_sources({"A": PulseSource("V1", "A", period=1e-6),
                                   "B": PulseSource("V2", "B", period=2e-6)})
    return NetlistDocument.from_netlist(net, ("A", "B", "X1.out", "X2.vo", "OUT", "X2.RC"))


CIRCUITS = {
    "nandnor.rtl": ("2-input cell; Vc low selects NAND, Vc high selects NOR", nandnor),
    "xor2.rtl": ("XOR: a NOR cell drives the control and programs RC each frame", xor2),
    "half_adder.rtl": ("half adder, outputs SUM and COUT",
                       lambda: NetlistDocument.from_netlist(build_half_adder(), ("SUM", "COUT"))),
    "full_adder.rtl": ("full adder, outputs SUM and COUT",
                       lambda: NetlistDocument.from_netlist(build_full_adder(), ("SUM", "COUT"))),
    "cla4.rtl": ("4-bit carry-lookahead adder, outputs S0..S3 and COUT",
                 lambda: NetlistDocument.from_netlist(
                     build_cla4(), ("S0", "S1", "S2", "S3", "COUT"))),
}


def main(outdir="circuits"):
    out = Path(outdir)
    out.mkdir(exist_ok=True)
    for filename, (title, make) in CIRCUITS.items():
        text = f"# {title}\n# generated by scripts/make_circuits.py\n" + serialize(make())
        (out / filename).write_text(text)
        print(f"wrote {out / filename}")


if __name__ == "__main__":
    main(*sys.argv[1:])
