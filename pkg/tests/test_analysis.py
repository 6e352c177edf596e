import math

import numpy as np
import pytest

from sir_eradication import Constant, GridSpec, ModelParams, Switching
from sir_eradication.analysis import (ProbeReport, asymptotics_check, bounds, check_bounds,
                                      dominance_vs_random_controls, dpp_residual, halton_points,
                                      lipschitz_probe, nondegeneracy_probe, pmp_probe,
                                      semiconcavity_probe, sign_profile_free_boundary)
from sir_eradication.errors import InvalidInput


def test_report_pass_iff_within_tolerance():
    assert ProbeReport("a", 1, 0.1, 0.1).passed
    assert not ProbeReport("a", 1, 0.2, 0.1).passed
    d = ProbeReport("a", 3, float("inf"), 1.0, {"x": np.float64(1.5)}).as_dict()
    assert d["pass"] is False and d["worst_violation"] == "inf" and d["witness"]["x"] == 1.5


def test_bounds_examples(ref):
    lo, _ = bounds(ref, 3.0, 2.0)  # x + y = gamma/beta + mu
    assert lo == 0.0
    lo, hi = bounds(ref, 0.0, 2.0)
    assert lo <= math.log(2) / 2 <= hi


def test_check_bounds_small_sample(ref):
    rep = check_bounds(ref, halton_points(40, [0.0, ref.mu], [4.0, 4.0]))
    assert rep.passed and rep.sample_count == 40
    with pytest.raises(InvalidInput):
        check_bounds(ref, np.array([[1.0, 0.5]]))


def test_halton_deterministic():
    a = halton_points(16, [0, 1], [4, 4])
    assert np.array_equal(a, halton_points(16, [0, 1], [4, 4]))
    assert np.all((a[:, 0] >= 0) & (a[:, 0] <= 4) & (a[:, 1] >= 1) & (a[:, 1] <= 4))


def test_semiconcavity_calibration(ref):
    tri = GridSpec.triangle(ref.mu, 4.0, 0.1, 6, 6)
    L = 3.7
    rep = semiconcavity_probe(ref, tri, 4, (1e-2, 5e-3), value_fn=lambda x, y: 0.5 * L * (x * x + y * y))
    assert rep.details["L_hat"] == pytest.approx([L, L], rel=1e-6)
    assert rep.passed


def test_semiconcavity_boundary_guard(ref):
    tri = GridSpec.triangle(ref.mu, 4.0, 0.001, 5, 5)
    with pytest.raises(InvalidInput):
        semiconcavity_probe(ref, tri, 2, (1e-2,), value_fn=lambda x, y: 0.0)


def test_semiconcavity_value_small(ref):
    tri = GridSpec.triangle(ref.mu, 4.0, 0.1, 4, 4)
    rep = semiconcavity_probe(ref, tri, 2)
    assert rep.passed and all(math.isfinite(v) for v in rep.details["L_hat"])


def test_dpp(outbreak, ref):
    rep = dpp_residual(outbreak, 20.0, 0.1, [0.0, 0.1, 0.2, 0.5, 1.0])
    assert rep.passed and rep.worst_violation <= 1e-5
    zero = dpp_residual(ref, 2.0, 3.0, [0.0])
    assert zero.worst_violation == 0.0
    with pytest.raises(InvalidInput):
        dpp_residual(ref, 2.0, 3.0, [5.0])


def test_asymptotics():
    assert asymptotics_check(ModelParams(0.5, 2.0, 1.0), 2.0, 3.0).passed
    fig2 = ModelParams(2.0, 2.0, 0.1)
    rep = asymptotics_check(fig2, 2.0, 1.0)
    assert rep.passed and rep.witness["S_T"] < fig2.gamma / fig2.beta
    rep0 = asymptotics_check(fig2, 0.0, 1.0, Switching(0.5))
    assert rep0.passed and rep0.witness["S_T"] == 0.0


def test_dominance(outbreak):
    rep = dominance_vs_random_controls(outbreak, 20.0, 0.1, n_controls=30, seed=3)
    assert rep.passed and rep.sample_count == 33
    assert rep.worst_violation == 0.0 and rep.witness["control"] == "optimal"
    again = dominance_vs_random_controls(outbreak, 20.0, 0.1, n_controls=30, seed=3)
    assert again.as_dict() == rep.as_dict()


def test_sign_profile_both_sides(outbreak):
    rep = sign_profile_free_boundary(outbreak, GridSpec(5.0, 30.0, 0.011, 0.5, 12, 12))
    assert rep.passed
    assert rep.details["S"] > 0 and rep.details["complement"] > 0 and rep.details["excluded"] > 0


def test_lipschitz_and_nondegeneracy(ref):
    tri = GridSpec.triangle(ref.mu, 4.0, 0.1, 5, 5)
    rep = lipschitz_probe(ref, tri, Constant(1.0), 32)
    assert math.isfinite(rep.details["B_hat"][1])
    pts = halton_points(30, [0.0, ref.mu], [4.0, 4.0])
    nd = nondegeneracy_probe(ref, pts, (Constant(0.0), Switching(0.1)))
    assert nd.passed and nd.witness["slack"] > 0


def test_pmp_probe(outbreak):
    assert pmp_probe(outbreak, 20.0, 0.1).passed
