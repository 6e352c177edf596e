import json

import numpy as np
import pytest

from sir_eradication.controls import (Concatenated, Constant, PiecewiseConstant, Switching,
                                      concat_controls, control_from_dict, control_to_dict,
                                      evaluate_control, random_piecewise, segments, shift_control)
from sir_eradication.errors import InvalidInput

TIMES = np.linspace(0.0, 4.0, 81)


def test_switching_examples():
    assert evaluate_control(Switching(2.0), 1.0) == 0.0
    assert evaluate_control(Switching(2.0), 2.0) == 0.0
    assert evaluate_control(Switching(2.0), 3.0) == 1.0
    assert all(evaluate_control(Switching(0.0), t) == 1.0 for t in TIMES[1:])
    assert evaluate_control(Constant(0.5), 123.0) == 0.5


def test_piecewise_right_continuous():
    c = PiecewiseConstant((1.0, 2.0), (0.2, 0.7, 0.1))
    assert evaluate_control(c, 0.0) == 0.2
    assert evaluate_control(c, 1.0) == 0.7
    assert evaluate_control(c, 1.999) == 0.7
    assert evaluate_control(c, 2.0) == 0.1


@pytest.mark.parametrize("bad", [
    lambda: Constant(1.5), lambda: Constant(-0.1), lambda: Switching(-1.0),
    lambda: PiecewiseConstant((1.0,), (0.5,)), lambda: PiecewiseConstant((2.0, 1.0), (0, 1, 0)),
    lambda: PiecewiseConstant((0.0,), (0, 1)), lambda: Concatenated(Constant(0), -1.0, Constant(1)),
])
def test_invalid_laws(bad):
    with pytest.raises(InvalidInput):
        bad()


def test_negative_time_rejected():
    with pytest.raises(InvalidInput):
        evaluate_control(Constant(0.0), -1e-9)


def test_concat_examples():
    c = concat_controls(Constant(0.0), 1.0, Constant(1.0))
    for t in TIMES:
        assert evaluate_control(c, t) == evaluate_control(Switching(1.0), t)
    tail = PiecewiseConstant((0.5,), (0.3, 0.9))
    c0 = concat_controls(Switching(0.2), 0.0, tail)
    for t in TIMES[1:]:
        assert evaluate_control(c0, t) == evaluate_control(tail, t)
    assert evaluate_control(concat_controls(Switching(1.0), 2.0, Switching(0.0)), 1.5) == 1.0


def test_concat_definition():
    head = PiecewiseConstant((0.3, 0.8), (0.1, 0.6, 0.4))
    tail = Switching(0.5)
    c = concat_controls(head, 1.1, tail)
    for t in TIMES:
        want = evaluate_control(head, t) if t <= 1.1 else evaluate_control(tail, t - 1.1)
        assert evaluate_control(c, t) == want


def _agree_off_breakpoints(c, bps, lv, times):
    for t in times:
        if np.any(np.isclose(t, bps)):
            continue
        k = int(np.searchsorted(bps, t, side="right"))
        assert lv[k] == evaluate_control(c, t)


def test_segments_reproduce_law():
    laws = [Constant(0.3), Switching(0.0), Switching(1.25),
            PiecewiseConstant((0.5, 1.0, 3.0), (0.2, 0.2, 0.9, 0.0)),
            concat_controls(Switching(0.4), 1.7, PiecewiseConstant((0.6,), (0.5, 0.0)))]
    for c in laws:
        bps, lv = segments(c)
        assert len(lv) == len(bps) + 1
        assert np.all(np.diff(lv) != 0)
        _agree_off_breakpoints(c, bps, lv, TIMES + 0.0137)


def test_shift_control():
    assert shift_control(Switching(2.0), 0.5) == Switching(1.5)
    assert shift_control(Switching(0.3), 0.5) == Switching(0.0)
    c = PiecewiseConstant((0.5, 1.0), (0.2, 0.9, 0.4))
    s = shift_control(c, 0.7)
    for t in TIMES + 0.011:
        assert evaluate_control(s, t) == evaluate_control(c, t + 0.7)
    assert shift_control(c, 2.0) == Constant(0.4)


def test_random_piecewise_deterministic_and_admissible():
    assert random_piecewise(7, 5, 3.0) == random_piecewise(7, 5, 3.0)
    assert random_piecewise(7, 5, 3.0) != random_piecewise(8, 5, 3.0)
    assert isinstance(random_piecewise(1, 1, 3.0), Constant)
    vals = []
    for seed in range(1000):
        c = random_piecewise(seed, 1 + seed % 6, 2.0)
        vals.extend(evaluate_control(c, t) for t in (0.0, 0.7, 1.9, 5.0))
        if isinstance(c, PiecewiseConstant):
            assert list(c.breakpoints) == sorted(c.breakpoints)
    vals = np.asarray(vals)
    assert np.all((vals >= 0) & (vals <= 1))
    with pytest.raises(InvalidInput):
        random_piecewise(0, 0, 1.0)


def test_json_round_trip():
    for c in (Constant(0.25), Switching(1.5), PiecewiseConstant((0.5,), (1.0, 0.0))):
        d = json.loads(json.dumps(control_to_dict(c)))
        assert control_from_dict(d) == c
    d = control_to_dict(concat_controls(Constant(0.0), 1.0, Constant(1.0)))
    assert d == {"type": "piecewise", "breakpoints": [1.0], "levels": [0.0, 1.0]}
    with pytest.raises(InvalidInput):
        control_from_dict({"type": "spline"})
