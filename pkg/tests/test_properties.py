"""Randomized invariants checked with hypothesis."""

import numpy as np
import pytest
from hypothesis import HealthCheck, given, settings
from hypothesis import strategies as st

from sir_eradication import (Constant, IntegratorConfig, ModelParams, State, Switching, concat_controls,
                             eradication_time, evaluate_control, integrate, random_piecewise,
                             value_by_switching)
from sir_eradication.analysis import bounds
from sir_eradication.controls import shift_control

SETTINGS = settings(max_examples=30, deadline=None, suppress_health_check=[HealthCheck.too_slow])

rates = st.floats(0.2, 3.0)
params = st.builds(ModelParams, beta=rates, gamma=rates, mu=st.floats(0.05, 1.0))
seeds = st.integers(0, 2 ** 32 - 1)
pieces = st.integers(1, 6)


@st.composite
def start(draw, p):
    x = draw(st.floats(0.0, 5.0))
    y = p.mu * draw(st.floats(1.0, 6.0))
    return x, y


@SETTINGS
@given(seed=seeds, n=pieces, t=st.floats(0.0, 20.0))
def test_controls_admissible(seed, n, t):
    assert 0.0 <= evaluate_control(random_piecewise(seed, n, 5.0), t) <= 1.0


@SETTINGS
@given(data=st.data(), p=params, seed=seeds, n=pieces)
def test_positivity_and_monotone_susceptibles(data, p, seed, n):
    x, y = data.draw(start(p))
    law = random_piecewise(seed, n, 2.0)
    tr = integrate(p, law, State(x, y), 2.0)
    assert np.all(tr.s >= 0) and np.all(tr.i >= 0)
    assert np.all(tr.s + tr.i <= x + y + 1e-9)
    assert np.all(np.diff(tr.s) <= 1e-12)


@SETTINGS
@given(p=params, x=st.floats(0.0, 5.0), y=st.floats(0.1, 5.0))
def test_single_critical_point(p, x, y):
    T = 20.0 / p.gamma
    tr = integrate(p, Constant(0.0), State(x, y), T, IntegratorConfig(max_horizon=T))
    di = (p.beta * tr.s - p.gamma) * tr.i
    sign = np.sign(di[di != 0])
    assert np.count_nonzero(sign[1:] != sign[:-1]) <= 1


@SETTINGS
@given(data=st.data(), p=params, seed=seeds, n=pieces)
def test_upper_bound_and_concatenation(data, p, seed, n):
    x, y = data.draw(start(p))
    head = random_piecewise(seed, n, 1.0)
    tail = random_piecewise(seed + 1, n, 1.0)
    u_head = eradication_time(p, head, x, y)
    assert u_head <= (x + y) / (p.mu * p.gamma)
    t = data.draw(st.floats(0.0, 1.0)) * u_head
    law = concat_controls(head, t, tail)
    tr = integrate(p, head, State(x, y), t)
    rest = eradication_time(p, tail, tr.s[-1], max(tr.i[-1], p.mu))
    assert eradication_time(p, law, x, y) == pytest.approx(t + rest, rel=1e-9, abs=1e-9)


@settings(max_examples=20, deadline=None)
@given(data=st.data(), p=params, seed=seeds, n=pieces)
def test_value_invariants(data, p, seed, n):
    x, y = data.draw(start(p))
    res = value_by_switching(p, x, y)
    assert res.u <= min(res.u_full, res.u_never)
    assert 0.0 <= res.tau_star <= res.u_never
    assert res.in_S == (abs(res.u - res.u_full) <= res.tol_S)
    lo, hi = bounds(p, x, y)
    assert lo - 1e-8 <= res.u <= hi + 1e-8
    other = eradication_time(p, random_piecewise(seed, n, max(res.u_never, 1e-3)), x, y)
    assert res.u <= other + 1e-6


@settings(max_examples=15, deadline=None)
@given(x=st.floats(5.0, 30.0), y=st.floats(0.02, 1.0), frac=st.floats(0.0, 1.0))
def test_dpp_along_optimal_path(x, y, frac):
    p = ModelParams(1.0, 5.0, 0.01)
    res = value_by_switching(p, x, y)
    law = Switching(res.tau_star)
    t = frac * res.u
    tr = integrate(p, law, State(x, y), t)
    later = value_by_switching(p, tr.s[-1], max(tr.i[-1], p.mu))
    assert abs(t + later.u - res.u) <= 1e-5
    # the shifted switching law is optimal from the new state as well
    rest = eradication_time(p, shift_control(law, t), tr.s[-1], max(tr.i[-1], p.mu))
    assert abs(rest - later.u) <= 1e-5


@settings(max_examples=15, deadline=None)
@given(x=st.floats(0.0, 20.0), y=st.floats(0.5, 2.0), mus=st.lists(st.floats(0.01, 0.5), min_size=2, max_size=2))
def test_value_non_increasing_in_threshold(x, y, mus):
    lo_mu, hi_mu = sorted(mus)
    u_lo = value_by_switching(ModelParams(1.0, 5.0, lo_mu), x, y).u
    u_hi = value_by_switching(ModelParams(1.0, 5.0, hi_mu), x, y).u
    assert u_hi <= u_lo + 1e-9
