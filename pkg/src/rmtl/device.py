"""Threshold-gated memristor with a Biolek-style window.

The memristance is a linear mixture of the two bounds in the normalized
dopant position ``x``::

    M(x) = r_on * x + r_off * (1 - x)

and the state moves only while the applied voltage magnitude is at least
the training threshold ``v_tr``::

    dx/dt = k * i * f(x, i),    f = 1 - (x - step(-i)) ** (2 p)

Under a piecewise-constant voltage the equation is separable, so each time
step is advanced along the exact flow rather than by an Euler update. The
flow is ~1e6 times faster near ``r_on`` than near ``r_off``, which no
fixed explicit step can resolve.
"""
from __future__ import annotations

import cmath
import enum
import math
from dataclasses import dataclass
from functools import cached_property, lru_cache

from scipy.optimize import brentq


class Polarity(enum.Enum):
    POSITIVE_SETS_HIGH = "positive_sets_high"
    POSITIVE_SETS_LOW = "positive_sets_low"


class Target(enum.Enum):
    SET_HIGH = "set_high"
    SET_LOW = "set_low"


class StepTooLarge(ValueError):
    """Raised when a supra-threshold step exceeds ``t_switch / 20``."""


# Traversal window used to calibrate the mobility constant.
CAL_LO = 0.01
CAL_HI = 0.99
STEP_DIVISOR = 20


def _window_integrals(y: float, n: int) -> tuple[float, float]:
    """Return (int_0^y ds/(1-s^n), int_0^y s ds/(1-s^n)) for 0 <= y < 1.

    Partial fractions over the n-th roots of unity; every ``1 - y/w`` has a
    positive real part, so the principal logarithm is continuous.
    """
    a = complex(math.log1p(-y))
    b = a
    for k in range(1, n):
        w = cmath.exp(2j * math.pi * k / n)
        lg = cmath.log(1.0 - y * w.conjugate())
        a += w * lg
        b += w * w * lg
    return -a.real / n, -b.real / n


@dataclass(frozen=True)
class MemristorParams:
    """Device constants.

    Attributes
    ----------
    r_on, r_off : float
        Memristance bounds (ohms) at ``x = 1`` and ``x = 0``.
    v_tr : float
        Training threshold magnitude (V). Smaller voltages never move the state.
    t_switch : float
        Time (s) for ``|v| = v_tr`` to traverse x between 0.01 and 0.99 in
        the slower of the two directions.
    p : int
        Window exponent.
    polarity : Polarity
        Which bias sign drives the device toward ``r_off``.
    """

    r_on: float = 100.0
    r_off: float = 1e8
    v_tr: float = 3.5
    t_switch: float = 10e-9
    p: int = 2
    polarity: Polarity = Polarity.POSITIVE_SETS_HIGH

    def __post_init__(self):
        if not (self.r_on > 0 and self.r_off >= self.r_on):
            raise ValueError(f"need 0 < r_on <= r_off, got {self.r_on}, {self.r_off}")
        if not self.v_tr > 0:
            raise ValueError(f"v_tr must be positive, got {self.v_tr}")
        if not self.t_switch > 0:
            raise ValueError(f"t_switch must be positive, got {self.t_switch}")
        if int(self.p) != self.p or self.p < 1:
            raise ValueError(f"p must be a positive integer, got {self.p}")

    @property
    def max_write_step(self) -> float:
        return self.t_switch / STEP_DIVISOR

    def flow_integral(self, y: float, rising: bool) -> float:
        """Integral of M/f along the direction of motion, from the far bound.

        ``y`` is the distance travelled from the bound the motion leaves:
        ``x`` when rising (toward r_on), ``1 - x`` when falling.
        """
        a_int, b_int = _window_integrals(y, 2 * self.p)
        if rising:
            # M = r_off + (r_on - r_off) * y
            return self.r_off * a_int + (self.r_on - self.r_off) * b_int
        # M = r_on + (r_off - r_on) * y
        return self.r_on * a_int + (self.r_off - self.r_on) * b_int

    @cached_property
    def k(self) -> float:
        """Mobility constant (1/(A*s) in normalized units)."""
        up = self.flow_integral(CAL_HI, True) - self.flow_integral(CAL_LO, True)
        down = self.flow_integral(CAL_HI, False) - self.flow_integral(CAL_LO, False)
        return max(up, down) / (self.v_tr * self.t_switch)


@dataclass(frozen=True)
class MemristorState:
    x: float = 0.0

    def __post_init__(self):
        if not 0.0 <= self.x <= 1.0:
            raise ValueError(f"state x must lie in [0, 1], got {self.x}")


@dataclass(frozen=True)
class PulseSpec:
    amplitude: float
    duration: float


DEFAULT_PARAMS = MemristorParams()


def memristance(state: MemristorState, params: MemristorParams = DEFAULT_PARAMS) -> float:
    x = state.x
    return params.r_on * x + params.r_off * (1.0 - x)


def _drive(v: float, params: MemristorParams) -> float:
    # Signed so that a positive drive pushes x toward 1 (r_on).
    return -v if params.polarity is Polarity.POSITIVE_SETS_HIGH else v


def _window(x: float, current: float, p: int) -> float:
    offset = 1.0 if current < 0 else 0.0
    return 1.0 - (x - offset) ** (2 * p)


def state_derivative(state: MemristorState, v: float,
                     params: MemristorParams = DEFAULT_PARAMS) -> float:
    if abs(v) < params.v_tr:
        return 0.0
    current = _drive(v, params) / memristance(state, params)
    return params.k * current * _window(state.x, current, params.p)


def step_state(state: MemristorState, v: float, dt: float,
               params: MemristorParams = DEFAULT_PARAMS) -> MemristorState:
    """Advance the state by ``dt`` under a constant voltage ``v``."""
    if not dt > 0:
        raise ValueError(f"dt must be positive, got {dt}")
    if abs(v) < params.v_tr:
        return state
    if dt > params.max_write_step * (1 + 1e-12):
        raise StepTooLarge(
            f"dt={dt:g}s exceeds t_switch/{STEP_DIVISOR}={params.max_write_step:g}s "
            f"under supra-threshold drive v={v:g}V")
    rising = _drive(v, params) > 0
    y0 = state.x if rising else 1.0 - state.x
    if y0 >= 1.0:
        return state
    goal = params.flow_integral(y0, rising) + params.k * abs(v) * dt
    hi = math.nextafter(1.0, 0.0)
    if params.flow_integral(hi, rising) <= goal:
        y1 = 1.0
    else:
        y1 = brentq(lambda y: params.flow_integral(y, rising) - goal, y0, hi,
                    xtol=1e-15, rtol=1e-15)
    x1 = y1 if rising else 1.0 - y1
    return MemristorState(min(1.0, max(0.0, x1)))


def training_pulse(target: Target, params: MemristorParams = DEFAULT_PARAMS) -> PulseSpec:
    sign = 1.0 if target is Target.SET_HIGH else -1.0
    if params.polarity is Polarity.POSITIVE_SETS_LOW:
        sign = -sign
    return PulseSpec(sign * params.v_tr, 2 * params.t_switch)


def apply_pulse(state: MemristorState, pulse: PulseSpec, dt: float,
                params: MemristorParams = DEFAULT_PARAMS) -> MemristorState:
    n = max(1, math.ceil(pulse.duration / dt - 1e-9))
    h = pulse.duration / n
    for _ in range(n):
        state = step_state(state, pulse.amplitude, h, params)
    return state


@lru_cache(maxsize=None)
def saturated_state(target: Target, params: MemristorParams = DEFAULT_PARAMS) -> MemristorState:
    """State after a full training pulse from the opposite extreme.

    This is the operational definition of R_H / R_L.
    """
    start = MemristorState(1.0 if target is Target.SET_HIGH else 0.0)
    return apply_pulse(start, training_pulse(target, params), params.max_write_step, params)


def r_high(params: MemristorParams = DEFAULT_PARAMS) -> float:
    return memristance(saturated_state(Target.SET_HIGH, params), params)


def r_low(params: MemristorParams = DEFAULT_PARAMS) -> float:
    return memristance(saturated_state(Target.SET_LOW, params), params)
