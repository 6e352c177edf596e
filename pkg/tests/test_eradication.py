import math

import numpy as np
import pytest

import oracles
from reference_values import T_FULL_FIG1
from sir_eradication import (Constant, IntegratorConfig, ModelParams, State, Switching,
                             crossing_with_jacobian, eradication_time, flow_sensitivities,
                             gradient_eradication_time, integrate)
from sir_eradication.controls import PiecewiseConstant, shift_control
from sir_eradication.errors import DegenerateCrossing, HorizonExceeded, InvalidInput

INTERIOR = [(2.0, 3.0), (1.0, 1.5), (3.5, 2.0), (0.5, 3.5), (2.5, 1.2)]


def test_closed_form_e():
    p = ModelParams(0.7, 1.0, 0.5)
    assert eradication_time(p, Constant(0.3), 0.0, math.e * 0.5) == pytest.approx(1.0, abs=1e-10)


def test_target_segment_zero(ref):
    for x in (0.0, 1.0, 4.0):
        assert eradication_time(ref, Switching(0.5), x, ref.mu) == 0.0


def test_full_vaccination_fig1_oracle(ref):
    assert abs(eradication_time(ref, Switching(0.0), 2.0, 3.0) - T_FULL_FIG1) <= 1e-6


def test_domain_checked(ref):
    with pytest.raises(InvalidInput):
        eradication_time(ref, Constant(0.0), 1.0, 0.5)
    with pytest.raises(InvalidInput):
        eradication_time(ref, Constant(0.0), -1.0, 2.0)


def test_horizon_exceeded(ref):
    with pytest.raises(HorizonExceeded):
        eradication_time(ref, Constant(0.0), 2.0, 3.0, IntegratorConfig(max_horizon=0.1))


def test_sensitivity_identity_at_zero(ref):
    sp = flow_sensitivities(ref, Switching(0.2), 2.0, 3.0, 0.0)
    assert np.array_equal(sp.Z[0], np.eye(2))


def test_sensitivity_at_x_zero(ref):
    sp = flow_sensitivities(ref, Switching(0.2), 0.0, 3.0, 1.0)
    assert np.all(sp.Z[:, 1, 0] >= 0)
    assert np.max(np.abs(sp.Z[:, 1, 1] - np.exp(-ref.gamma * sp.times))) <= 1e-10


def test_sensitivity_matches_finite_differences(ref):
    h = 1e-5
    law = Switching(0.3)
    t_end = 0.7
    sp = flow_sensitivities(ref, law, 2.0, 3.0, t_end)
    assert np.all(np.linalg.det(sp.Z) > 0)

    def end(x, y):
        tr = integrate(ref, law, State(x, y), t_end)
        return np.array([tr.s[-1], tr.i[-1]])

    fd = np.column_stack([(end(2 + h, 3) - end(2 - h, 3)) / (2 * h),
                          (end(2, 3 + h) - end(2, 3 - h)) / (2 * h)])
    assert np.max(np.abs(fd - sp.Z[-1]) / (1.0 + np.abs(sp.Z[-1]))) <= 1e-6
    b, g = ref.beta, ref.gamma
    assert np.allclose(sp.dt_phi2, (b * sp.s - g) * sp.i)


def test_gradient_x_zero(ref):
    for y in (1.5, 3.0):
        gx, gy = gradient_eradication_time(ref, Constant(1.0), 0.0, y)
        assert gy == pytest.approx(1.0 / (ref.gamma * y), rel=1e-9)


@pytest.mark.parametrize("x,y", INTERIOR)
def test_gradient_vs_central_differences(ref, x, y):
    law = Switching(0.0)
    h = 1e-5
    gx, gy = gradient_eradication_time(ref, law, x, y)
    fx = (eradication_time(ref, law, x + h, y) - eradication_time(ref, law, x - h, y)) / (2 * h)
    fy = (eradication_time(ref, law, x, y + h) - eradication_time(ref, law, x, y - h)) / (2 * h)
    assert abs(gx - fx) <= 1e-5 and abs(gy - fy) <= 1e-5


def test_gradient_vs_oracle_differences(outbreak):
    # independent route: finite differences of the Taylor oracle
    x, y, tau = 20.0, 0.1, 0.15
    h = 1e-6
    o = lambda a, b: oracles.switching_time(1.0, 5.0, 0.01, a, b, tau, 0.125, 1e3)
    gx, gy = gradient_eradication_time(outbreak, Switching(tau), x, y)
    assert gx == pytest.approx((o(x + h, y) - o(x - h, y)) / (2 * h), abs=1e-5)
    assert gy == pytest.approx((o(x, y + h) - o(x, y - h)) / (2 * h), rel=1e-6)


def test_boundary_gradient_is_one_sided_limit(ref):
    x = 1.5
    gx, gy = gradient_eradication_time(ref, Constant(1.0), x, ref.mu)
    want = 1.0 / ((ref.gamma - ref.beta * x) * ref.mu)
    assert gx == 0.0 and gy == pytest.approx(want)
    # the interior gradient approaches it from above
    lx, ly = gradient_eradication_time(ref, Constant(1.0), x, ref.mu * (1 + 1e-7))
    assert abs(lx) <= 1e-5 and ly == pytest.approx(want, rel=1e-5)


def test_degenerate_boundary_point():
    p = ModelParams(1.0, 2.0, 1.0)
    with pytest.raises(DegenerateCrossing):
        gradient_eradication_time(p, Constant(1.0), 2.0, 1.0)


def test_upper_bound_and_terminal_slope(ref, outbreak):
    laws = [Constant(0.0), Constant(1.0), Switching(0.2), PiecewiseConstant((0.1, 0.4), (1, 0, 0.5))]
    for p, pts in ((ref, INTERIOR), (outbreak, [(20.0, 0.1), (5.0, 1.0), (30.0, 0.02)])):
        for x, y in pts:
            for law in laws:
                t, end, _ = crossing_with_jacobian(p, law, x, y)
                assert t <= (x + y) / (p.mu * p.gamma)
                assert p.beta * end.s < p.gamma - 1e-6
                assert end.i == pytest.approx(p.mu, abs=1e-10)


def test_time_shift_identity(ref):
    law = PiecewiseConstant((0.1, 0.35), (0.4, 0.0, 1.0))
    u = eradication_time(ref, law, 2.0, 3.0)
    for t in (0.05, 0.1, 0.3, 0.6):
        tr = integrate(ref, law, State(2.0, 3.0), t)
        rest = eradication_time(ref, shift_control(law, t), tr.s[-1], tr.i[-1])
        assert t + rest == pytest.approx(u, abs=1e-9)


def test_continuous_in_switch_time(outbreak):
    taus = np.linspace(0.0, 2.0, 401)
    u = np.array([eradication_time(outbreak, Switching(t), 20.0, 0.1) for t in taus])
    assert np.max(np.abs(np.diff(u))) <= 2 * (taus[1] - taus[0])
