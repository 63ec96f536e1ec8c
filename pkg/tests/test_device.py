import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.integrate import quad, solve_ivp

from rmtl.device import (DEFAULT_PARAMS, MemristorParams, MemristorState, Polarity, PulseSpec,
                         StepTooLarge, Target, apply_pulse, memristance, r_high, r_low,
                         saturated_state, state_derivative, step_state, training_pulse)

P = DEFAULT_PARAMS
DT = P.t_switch / 20


def M(x, p=P):
    return p.r_on * x + p.r_off * (1 - x)


def k_by_quadrature(p=P):
    """Mobility constant from direct numerical quadrature of dt = M dx / (k v f)."""
    n = 2 * p.p
    up = quad(lambda x: M(x, p) / (1 - x ** n), 0.01, 0.99, limit=400)[0]
    down = quad(lambda x: M(x, p) / (1 - (x - 1) ** n), 0.01, 0.99, limit=400)[0]
    return max(up, down) / (p.v_tr * p.t_switch)


def rhs(t, y, v, p=P):
    """Reference ODE written out independently of the package."""
    x = min(max(y[0], 0.0), 1.0)
    i = (-v if p.polarity is Polarity.POSITIVE_SETS_HIGH else v) / M(x, p)
    f = 1 - (x - (1.0 if i < 0 else 0.0)) ** (2 * p.p)
    return [k_by_quadrature(p) * i * f]


# --- memristance ------------------------------------------------------------


def test_memristance_bounds():
    assert memristance(MemristorState(1.0)) == P.r_on
    assert memristance(MemristorState(0.0)) == P.r_off


def test_memristance_midpoint():
    assert memristance(MemristorState(0.5)) == pytest.approx(5.000005e7, rel=1e-15)


@given(st.floats(0, 1), st.floats(0, 1))
def test_memristance_monotone_decreasing(a, b):
    lo, hi = sorted((a, b))
    assert memristance(MemristorState(lo)) >= memristance(MemristorState(hi))
    assert P.r_on <= memristance(MemristorState(a)) <= P.r_off


def test_invalid_state_rejected():
    with pytest.raises(ValueError):
        MemristorState(1.5)


@pytest.mark.parametrize("kw", [dict(r_on=0), dict(r_off=10, r_on=100), dict(v_tr=0),
                                dict(t_switch=-1), dict(p=0), dict(p=1.5)])
def test_invalid_params_rejected(kw):
    with pytest.raises(ValueError):
        MemristorParams(**kw)


def test_default_ratio_is_1e6():
    assert P.r_off / P.r_on == 1e6


# --- calibration --------------------------------------------------------------


@pytest.mark.parametrize("p", [P, MemristorParams(p=1), MemristorParams(p=3, r_off=1e6)])
def test_calibration_matches_quadrature(p):
    assert p.k == pytest.approx(k_by_quadrature(p), rel=1e-9)


def test_slow_direction_traverses_in_t_switch():
    # falling is the slower direction; integrate the reference ODE until x hits 0.01
    hit = lambda t, y, v: y[0] - 0.01
    hit.terminal = True
    sol = solve_ivp(rhs, (0, 5 * P.t_switch), [0.99], args=(P.v_tr,), events=hit,
                    method="LSODA", rtol=1e-10, atol=1e-14)
    assert sol.t_events[0][0] == pytest.approx(P.t_switch, rel=1e-4)


def test_fast_direction_is_faster():
    hit = lambda t, y, v: y[0] - 0.99
    hit.terminal = True
    sol = solve_ivp(rhs, (0, 5 * P.t_switch), [0.01], args=(-P.v_tr,), events=hit,
                    method="LSODA", rtol=1e-10, atol=1e-14)
    assert sol.t_events[0][0] < P.t_switch


# --- derivative -----------------------------------------------------------------


@given(st.floats(0, 1), st.floats(-3.4999, 3.4999))
def test_derivative_zero_below_threshold(x, v):
    assert state_derivative(MemristorState(x), v) == 0.0


def test_derivative_zero_at_pinned_boundary():
    # -v_tr drives x upward under the default polarity
    assert state_derivative(MemristorState(1.0), -P.v_tr) == 0.0
    assert state_derivative(MemristorState(0.0), P.v_tr) == 0.0


def test_derivative_midpoint_value_and_sign():
    expected = k_by_quadrature() * (-3.5 / 5.000005e7) * (1 - 0.5 ** 4)
    got = state_derivative(MemristorState(0.5), 3.5)
    assert got < 0  # +3.5 V drives toward R_H, i.e. x decreasing
    assert got == pytest.approx(expected, rel=1e-9)
    assert state_derivative(MemristorState(0.5), -3.5) > 0


def test_polarity_flip_reverses_sign():
    flipped = MemristorParams(polarity=Polarity.POSITIVE_SETS_LOW)
    assert state_derivative(MemristorState(0.5), 3.5, flipped) > 0


# --- stepping -------------------------------------------------------------------


def test_zero_drive_is_identity():
    s = MemristorState(0.3)
    assert step_state(s, 0.0, 1.0) == s


def test_subthreshold_step_is_identity():
    s = MemristorState(0.3)
    assert step_state(s, 1.0, 1e-6).x == 0.3


def test_step_too_large():
    with pytest.raises(StepTooLarge):
        step_state(MemristorState(0.3), 3.5, 2 * DT)
    # the bound only applies under supra-threshold drive
    step_state(MemristorState(0.3), 1.0, 2 * DT)


def test_nonpositive_dt_rejected():
    with pytest.raises(ValueError):
        step_state(MemristorState(0.3), 3.5, 0.0)


def test_set_low_from_zero_reaches_r_on():
    s = MemristorState(0.0)
    for _ in range(40):
        s = step_state(s, -3.5, DT)
    assert memristance(s) <= 1.01 * P.r_on


@pytest.mark.parametrize("x0,v,t", [(0.3, 3.5, 2e-9), (0.3, -3.5, 1e-9), (0.05, -4.0, 1.5e-9),
                                    (0.9, 3.5, 3e-9), (0.5, 5.0, 0.5e-9)])
def test_step_matches_reference_ode(x0, v, t):
    """Exact-flow stepping against a stiff reference solver, away from r_on."""
    s = MemristorState(x0)
    n = math.ceil(t / DT)
    for _ in range(n):
        s = step_state(s, v, t / n)
    sol = solve_ivp(rhs, (0, t), [x0], args=(v,), method="Radau", rtol=1e-11, atol=1e-14)
    assert s.x == pytest.approx(sol.y[0, -1], abs=1e-7)


# --- training pulses ------------------------------------------------------------------


def test_training_pulse_defaults():
    assert training_pulse(Target.SET_HIGH) == PulseSpec(3.5, 20e-9)
    assert training_pulse(Target.SET_LOW) == PulseSpec(-3.5, 20e-9)


def test_training_pulse_follows_polarity():
    flipped = MemristorParams(polarity=Polarity.POSITIVE_SETS_LOW)
    assert training_pulse(Target.SET_HIGH, flipped).amplitude == -3.5


def test_round_trip_high_then_low():
    s = apply_pulse(MemristorState(0.4), training_pulse(Target.SET_HIGH), DT)
    s = apply_pulse(s, training_pulse(Target.SET_LOW), DT)
    assert memristance(s) == pytest.approx(P.r_on, rel=0.01)


def test_resistance_ratio():
    assert r_high() / r_low() >= 0.98e6
    assert r_high() >= 0.99 * P.r_off
    assert r_low() <= 1.01 * P.r_on


@pytest.mark.parametrize("target,bound", [(Target.SET_HIGH, P.r_off), (Target.SET_LOW, P.r_on)])
def test_saturation_from_either_extreme(target, bound):
    for x0 in (0.0, 1.0):
        s = apply_pulse(MemristorState(x0), training_pulse(target), DT)
        assert memristance(s) == pytest.approx(bound, rel=0.01)


# --- properties -------------------------------------------------------------------------

volts = st.floats(-6, 6, allow_nan=False)
steps = st.floats(1e-12, DT)


@given(st.floats(0, 1), st.lists(st.tuples(volts, steps), max_size=30))
@settings(deadline=None)
def test_state_stays_bounded(x0, drive):
    s = MemristorState(x0)
    for v, dt in drive:
        s = step_state(s, v, dt)
        assert 0.0 <= s.x <= 1.0


@given(st.floats(0, 1), st.lists(st.tuples(st.floats(-3.49, 3.49), st.floats(1e-12, 1e-5)),
                                 max_size=50))
def test_subthreshold_sequence_is_bit_exact(x0, drive):
    s = MemristorState(x0)
    for v, dt in drive:
        s = step_state(s, v, dt)
    assert s.x == x0


@given(st.floats(0, 1), st.sampled_from(list(Target)))
@settings(deadline=None, max_examples=40)
def test_saturation_from_any_start(x0, target):
    s = apply_pulse(MemristorState(x0), training_pulse(target), DT)
    bound = P.r_off if target is Target.SET_HIGH else P.r_on
    assert memristance(s) == pytest.approx(bound, rel=0.01)


@given(st.floats(0, 1), st.sampled_from([3.5, -3.5, 4.2, -5.0]))
@settings(deadline=None, max_examples=40)
def test_monotone_under_constant_drive(x0, v):
    s = MemristorState(x0)
    xs = [s.x]
    for _ in range(40):
        s = step_state(s, v, DT)
        xs.append(s.x)
    d = np.diff(xs)
    assert (d >= 0).all() or (d <= 0).all()


@given(st.floats(0, 1), st.sampled_from([3.5, -3.5]), st.floats(0.05, 2.0))
@settings(deadline=None, max_examples=40)
def test_halving_dt_converges(x0, v, frac):
    pulse = PulseSpec(v, frac * P.t_switch)
    coarse = apply_pulse(MemristorState(x0), pulse, DT)
    fine = apply_pulse(MemristorState(x0), pulse, DT / 2)
    assert abs(coarse.x - fine.x) < 1e-3


def test_saturated_states_are_cached_values():
    assert saturated_state(Target.SET_LOW).x == 1.0
    assert 0 < saturated_state(Target.SET_HIGH).x < 0.01
