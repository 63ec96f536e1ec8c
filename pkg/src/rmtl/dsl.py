"""Line-oriented ``.rtl`` netlist format.

One declaration per line, ``#`` starts a comment, keywords are
case-insensitive and numbers take SPICE suffixes (``meg`` is mega, ``m`` is
milli)::

    param r_off=100meg t_switch=10n
    phase frame=500n write=0.05
    memr R1 high
    cell X1 A B VC OUT R1 R2 RC vo=VO
    vpulse V1 A period=1u duty=0.5
    probe A B VO OUT

The full grammar is in ``docs/netlist-format.md``.
"""
from __future__ import annotations

import dataclasses
import math
import re
from dataclasses import dataclass, field
from pathlib import Path

from .cell import V_DD, V_TH, Level
from .circuit import (ConstantSource, Element, Inverter, Memristor, Netlist, PhaseSchedule,
                      PulseSource, Switch, SwitchKind, ThresholdCell, validate)
from .device import DEFAULT_PARAMS, MemristorParams, Polarity
from .engine import resolve_signal


class NetlistError(Exception):
    kind = "error"

    def __init__(self, line: int, col: int, message: str):
        self.line = line
        self.col = col
        self.message = message
        super().__init__(f"{line}:{col}: {message}")

    @property
    def diagnostics(self) -> list["NetlistError"]:
        return [self]


class NetlistSyntaxError(NetlistError):
    kind = "syntax error"


class NetlistSemanticError(NetlistError):
    kind = "semantic error"


_SCALE = {"t": 1e12, "g": 1e9, "meg": 1e6, "k": 1e3, "m": 1e-3,
          "u": 1e-6, "n": 1e-9, "p": 1e-12, "f": 1e-15}
_UNITS = {"", "s", "v", "ohm", "ohms", "a", "hz"}
_NUMBER = re.compile(
    r"([+-]?(?:\d+\.?\d*|\.\d+)(?:e[+-]?\d+)?)(meg|[tgkmunpf])?([a-z]*)", re.IGNORECASE)
_NAME = re.compile(r"[\w.:$\[\]<>+-]+")

_PARAM_KEYS = {"r_on", "r_off", "v_tr", "t_switch", "p", "polarity"}
_DEFAULT_PULSE = {"low": 0.0, "high": V_DD, "delay": 0.0}


@dataclass(frozen=True)
class _Token:
    text: str
    line: int
    col: int


def parse_value(text: str) -> float:
    """Parse ``1u``, ``100meg``, ``2.5e-9``, ``10ns`` and the like."""
    m = _NUMBER.fullmatch(text)
    if not m:
        raise ValueError(f"expected a number, got {text!r}")
    number, scale, unit = m.groups()
    value = float(number)
    if scale:
        value *= _SCALE[scale.lower()]
    if unit.lower() not in _UNITS:
        raise ValueError(f"unknown unit {unit!r} in {text!r}")
    if not math.isfinite(value):
        raise ValueError(f"value {text!r} is not finite")
    return value


def _fmt(x: float) -> str:
    return repr(float(x))


@dataclass
class NetlistDocument:
    params: MemristorParams = DEFAULT_PARAMS
    schedule: PhaseSchedule | None = None
    elements: tuple[Element, ...] = ()
    probes: tuple[str, ...] = ()
    spans: dict[str, tuple[int, int]] = field(default_factory=dict, compare=False, repr=False)

    def to_netlist(self) -> Netlist:
        return Netlist(tuple(self.elements), self.schedule, self.params)

    @classmethod
    def from_netlist(cls, netlist: Netlist, probes=()) -> "NetlistDocument":
        return cls(netlist.params, netlist.schedule, tuple(netlist.elements), tuple(probes))


# --------------------------------------------------------------------------
# parser


def _tokenize(line: str, lineno: int) -> list[_Token]:
    body = line.split("#", 1)[0]
    return [_Token(m.group(), lineno, m.start() + 1) for m in re.finditer(r"\S+", body)]


class _Parser:
    def __init__(self, text: str):
        self.text = text
        self.lines = text.splitlines() or [""]
        self.params: dict[str, object] = {}
        self.schedule: PhaseSchedule | None = None
        self.elements: list[Element] = []
        self.probes: list[_Token] = []
        self.spans: dict[str, tuple[int, int]] = {}

    # helpers ---------------------------------------------------------------

    def syntax(self, tok: _Token, msg: str):
        raise NetlistSyntaxError(tok.line, tok.col, msg)

    def semantic(self, tok: _Token, msg: str):
        raise NetlistSemanticError(tok.line, tok.col, msg)

    def end_of(self, toks: list[_Token]) -> _Token:
        last = toks[-1]
        return _Token("", last.line, last.col + len(last.text))

    def name(self, toks, i, what) -> str:
        if i >= len(toks):
            self.syntax(self.end_of(toks), f"expected {what}")
        tok = toks[i]
        if "=" in tok.text or not _NAME.fullmatch(tok.text):
            self.syntax(tok, f"expected {what}, got {tok.text!r}")
        return tok.text

    def number(self, tok: _Token, text: str | None = None) -> float:
        try:
            return parse_value(tok.text if text is None else text)
        except ValueError as exc:
            if "unit" in str(exc) or "finite" in str(exc):
                self.semantic(tok, str(exc))
            self.syntax(tok, str(exc))

    def options(self, toks, start, allowed) -> dict[str, tuple[str, _Token]]:
        out = {}
        for tok in toks[start:]:
            key, eq, val = tok.text.partition("=")
            if not eq or not key or not val:
                self.syntax(tok, f"expected key=value, got {tok.text!r}")
            key = key.lower()
            if key not in allowed:
                self.semantic(tok, f"unknown option {key!r}; expected one of {', '.join(sorted(allowed))}")
            if key in out:
                self.semantic(tok, f"option {key!r} given twice")
            out[key] = (val, tok)
        return out

    def declare(self, tok: _Token, el: Element):
        if el.name in self.spans:
            line, col = self.spans[el.name]
            self.semantic(tok, f"duplicate name {el.name!r} (first declared at {line}:{col})")
        self.spans[el.name] = (tok.line, tok.col)
        self.elements.append(el)

    def arity(self, toks, n, usage):
        if len(toks) < n:
            self.syntax(self.end_of(toks), f"expected {usage}")

    # declarations -----------------------------------------------------------

    def run(self) -> NetlistDocument:
        seen = False
        for lineno, line in enumerate(self.lines, 1):
            toks = _tokenize(line, lineno)
            if not toks:
                continue
            seen = True
            kw = toks[0].text.lower()
            handler = getattr(self, f"do_{kw}", None)
            if handler is None:
                self.syntax(toks[0], "expected a declaration (param, phase, memr, cell, inv, "
                                     f"sw, vpulse, vconst, probe), got {toks[0].text!r}")
            handler(toks)
        if not seen:
            raise NetlistSyntaxError(1, 1, "expected a declaration, got end of input")
        return self.finish()

    def do_param(self, toks):
        if len(toks) < 2:
            self.syntax(self.end_of(toks), "expected key=value after 'param'")
        for key, (val, tok) in self.options(toks, 1, _PARAM_KEYS).items():
            if key in self.params:
                self.semantic(tok, f"parameter {key!r} already set")
            if key == "polarity":
                try:
                    self.params[key] = Polarity(val.lower())
                except ValueError:
                    self.semantic(tok, "polarity must be positive_sets_high or positive_sets_low")
            elif key == "p":
                p = self.number(tok, val)
                if p != int(p) or p < 1:
                    self.semantic(tok, f"p must be a positive integer, got {val}")
                self.params[key] = int(p)
            else:
                self.params[key] = self.number(tok, val)
            self.spans[f"param:{key}"] = (tok.line, tok.col)

    def do_phase(self, toks):
        if self.schedule is not None:
            self.semantic(toks[0], "phase schedule declared twice")
        opts = self.options(toks, 1, {"frame", "write"})
        kw = {}
        if "frame" in opts:
            val, tok = opts["frame"]
            kw["frame_period"] = self.number(tok, val)
            if not kw["frame_period"] > 0:
                self.semantic(tok, "frame period must be positive")
        if "write" in opts:
            val, tok = opts["write"]
            kw["write_fraction"] = self.number(tok, val)
            if not 0 <= kw["write_fraction"] < 1:
                self.semantic(tok, "write fraction must lie in [0, 1)")
        self.schedule = PhaseSchedule(**kw)
        self.spans["phase"] = (toks[0].line, toks[0].col)

    def do_memr(self, toks):
        name = self.name(toks, 1, "memristor name")
        if len(toks) > 3:
            self.syntax(toks[3], "expected end of line after memristor state")
        state: Level | float = Level.R_H
        if len(toks) == 3:
            word = toks[2].text.lower()
            if word in ("high", "low"):
                state = Level.R_H if word == "high" else Level.R_L
            else:
                state = self.number(toks[2])
                if not 0 <= state <= 1:
                    self.semantic(toks[2], f"memristor state x must lie in [0, 1], got {toks[2].text}")
        self.declare(toks[1], Memristor(name, state))

    def do_cell(self, toks):
        usage = "cell NAME IN1 IN2 CTL OUT R1 R2 RC [vo=NODE] [vth=V] [vdd=V]"
        self.arity(toks, 9, usage)
        what = ["cell name", "input node", "input node", "control node", "output node",
                "memristor", "memristor", "memristor"]
        names = [self.name(toks, i + 1, w) for i, w in enumerate(what)]
        opts = self.options(toks, 9, {"vo", "vth", "vdd"})
        kw = {}
        if "vo" in opts:
            val, tok = opts["vo"]
            if not _NAME.fullmatch(val):
                self.syntax(tok, f"expected node name, got {val!r}")
            kw["vo"] = val
        kw.update(self._levels(opts))
        self.declare(toks[1], ThresholdCell(names[0], (names[1], names[2]), names[3], names[4],
                                            tuple(names[5:8]), **kw))

    def _levels(self, opts):
        v_th = self.number(opts["vth"][1], opts["vth"][0]) if "vth" in opts else V_TH
        v_dd = self.number(opts["vdd"][1], opts["vdd"][0]) if "vdd" in opts else V_DD
        if not 0 < v_th < v_dd:
            tok = (opts.get("vth") or opts.get("vdd"))[1]
            self.semantic(tok, f"need 0 < vth < vdd, got vth={v_th}, vdd={v_dd}")
        return {"v_th": v_th, "v_dd": v_dd}

    def do_inv(self, toks):
        self.arity(toks, 4, "inv NAME IN OUT [vth=V] [vdd=V]")
        name, a, out = (self.name(toks, i, w) for i, w in
                        ((1, "inverter name"), (2, "input node"), (3, "output node")))
        opts = self.options(toks, 4, {"vth", "vdd"})
        self.declare(toks[1], Inverter(name, a, out, **self._levels(opts)))

    def do_sw(self, toks):
        self.arity(toks, 5, "sw NAME write|read SRC DST")
        name = self.name(toks, 1, "switch name")
        kind = toks[2].text.lower()
        if kind not in ("write", "read"):
            self.syntax(toks[2], f"expected 'write' or 'read', got {toks[2].text!r}")
        src = self.name(toks, 3, "source node")
        dst = self.name(toks, 4, "memristor" if kind == "write" else "destination node")
        if len(toks) > 5:
            self.syntax(toks[5], "expected end of line")
        self.declare(toks[1], Switch(name, SwitchKind(kind), src, dst))

    def do_vpulse(self, toks):
        self.arity(toks, 4, "vpulse NAME NODE period=T [duty=F] [low=V] [high=V] [delay=T]")
        name = self.name(toks, 1, "source name")
        node = self.name(toks, 2, "node")
        opts = self.options(toks, 3, {"period", "duty", "low", "high", "delay"})
        if "period" not in opts:
            self.syntax(self.end_of(toks), "expected period=T")
        kw = {k: self.number(tok, val) for k, (val, tok) in opts.items()}
        if not kw["period"] > 0:
            self.semantic(opts["period"][1], f"period must be positive, got {opts['period'][0]}")
        if "duty" in kw and not 0 < kw["duty"] <= 1:
            self.semantic(opts["duty"][1], f"duty must lie in (0, 1], got {opts['duty'][0]}")
        if kw.get("delay", 0) < 0:
            self.semantic(opts["delay"][1], "delay must be non-negative")
        self.declare(toks[1], PulseSource(name, node, **kw))

    def do_vconst(self, toks):
        self.arity(toks, 4, "vconst NAME NODE VALUE")
        name = self.name(toks, 1, "source name")
        node = self.name(toks, 2, "node")
        value = self.number(toks[3])
        if len(toks) > 4:
            self.syntax(toks[4], "expected end of line")
        self.declare(toks[1], ConstantSource(name, node, value))

    def do_probe(self, toks):
        if len(toks) < 2:
            self.syntax(self.end_of(toks), "expected at least one signal name")
        for i in range(1, len(toks)):
            self.name(toks, i, "signal name")
            self.probes.append(toks[i])

    # whole-document checks ------------------------------------------------------

    def finish(self) -> NetlistDocument:
        try:
            params = dataclasses.replace(DEFAULT_PARAMS, **self.params)
        except ValueError as exc:
            line, col = next(iter(v for k, v in self.spans.items() if k.startswith("param:")))
            raise NetlistSemanticError(line, col, str(exc)) from None
        netlist = Netlist(tuple(self.elements), self.schedule, params)
        errors = validate(netlist)
        if errors:
            err = errors[0]
            line, col = self.spans.get(err.element, (1, 1))
            raise NetlistSemanticError(line, col, str(err))
        seen = set()
        for tok in self.probes:
            try:
                resolve_signal(netlist, tok.text)
            except KeyError:
                self.semantic(tok, f"unknown signal {tok.text!r} in probe list")
            if tok.text in seen:
                self.semantic(tok, f"signal {tok.text!r} probed twice")
            seen.add(tok.text)
        spans = {k: v for k, v in self.spans.items()}
        return NetlistDocument(params, self.schedule, tuple(self.elements),
                               tuple(t.text for t in self.probes), spans)


def parse(text: str) -> NetlistDocument:
    """Parse netlist text; raises ``NetlistError`` with a 1-based line:col."""
    return _Parser(text).run()


def load(path) -> NetlistDocument:
    return parse(Path(path).read_text())


# --------------------------------------------------------------------------
# serializer


def _param_line(params: MemristorParams) -> str | None:
    parts = []
    for f in dataclasses.fields(MemristorParams):
        value = getattr(params, f.name)
        if value == getattr(DEFAULT_PARAMS, f.name):
            continue
        if f.name == "polarity":
            parts.append(f"polarity={value.value}")
        elif f.name == "p":
            parts.append(f"p={int(value)}")
        else:
            parts.append(f"{f.name}={_fmt(value)}")
    return "param " + " ".join(parts) if parts else None


def _levels_text(el) -> str:
    out = ""
    if el.v_th != V_TH:
        out += f" vth={_fmt(el.v_th)}"
    if el.v_dd != V_DD:
        out += f" vdd={_fmt(el.v_dd)}"
    return out


def _element_line(el: Element) -> str:
    if isinstance(el, Memristor):
        if isinstance(el.state, Level):
            state = "high" if el.state is Level.R_H else "low"
        else:
            state = _fmt(el.state)
        return f"memr {el.name} {state}"
    if isinstance(el, ThresholdCell):
        vo = f" vo={el.vo}" if el.vo else ""
        return (f"cell {el.name} {el.inputs[0]} {el.inputs[1]} {el.control} {el.output} "
                f"{' '.join(el.memristors)}{vo}{_levels_text(el)}")
    if isinstance(el, Inverter):
        return f"inv {el.name} {el.input} {el.output}{_levels_text(el)}"
    if isinstance(el, Switch):
        return f"sw {el.name} {el.kind.value} {el.src} {el.dst}"
    if isinstance(el, PulseSource):
        extra = "".join(f" {k}={_fmt(getattr(el, k))}" for k, d in _DEFAULT_PULSE.items()
                        if getattr(el, k) != d)
        return f"vpulse {el.name} {el.node} period={_fmt(el.period)} duty={_fmt(el.duty)}{extra}"
    if isinstance(el, ConstantSource):
        return f"vconst {el.name} {el.node} {_fmt(el.value)}"
    raise TypeError(f"cannot serialize {type(el).__name__}")


def serialize(doc: NetlistDocument) -> str:
    lines = []
    param = _param_line(doc.params)
    if param:
        lines.append(param)
    if doc.schedule is not None:
        lines.append(f"phase frame={_fmt(doc.schedule.frame_period)} "
                     f"write={_fmt(doc.schedule.write_fraction)}")
    lines.extend(_element_line(el) for el in doc.elements)
    if doc.probes:
        lines.append("probe " + " ".join(doc.probes))
    return "\n".join(lines) + "\n"
