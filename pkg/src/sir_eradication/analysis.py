"""Empirical probes of the analytic properties of the value function.

Every probe returns a :class:`ProbeReport`; ``passed`` holds exactly when
``worst_violation <= tolerance``.  Sampling is deterministic (unscrambled
Halton points or seeded generators), so reports are reproducible bit for bit.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np
from scipy.stats import qmc

from .controls import Constant, Switching, random_piecewise
from .dynamics import (DEFAULT_CONFIG, HORIZON_MULT, IntegratorConfig, ModelParams, State,
                       integrate)
from .eradication import crossing_with_jacobian, eradication_time, gradient_eradication_time
from .errors import InvalidInput
from .grids import GridSpec
from .pmp import check_necessary_conditions
from .value import (DEFAULT_SEARCH, FreeBoundaryMap, SearchConfig, classify_free_boundary,
                    value_by_switching)


@dataclass
class ProbeReport:
    name: str
    sample_count: int
    worst_violation: float
    tolerance: float
    witness: dict = field(default_factory=dict)
    # extra measured quantities (estimated constants and the like)
    details: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return bool(self.worst_violation <= self.tolerance)

    def as_dict(self) -> dict:
        return {
            "name": self.name,
            "sample_count": int(self.sample_count),
            "worst_violation": _jsonable(self.worst_violation),
            "tolerance": self.tolerance,
            "pass": self.passed,
            "witness": {k: _jsonable(v) for k, v in self.witness.items()},
            "details": {k: _jsonable(v) for k, v in self.details.items()},
        }


def _jsonable(v):
    if isinstance(v, (np.floating, float)):
        v = float(v)
        return v if math.isfinite(v) else str(v)
    if isinstance(v, (np.integer,)):
        return int(v)
    if isinstance(v, (np.bool_,)):
        return bool(v)
    if isinstance(v, (list, tuple, np.ndarray)):
        return [_jsonable(a) for a in v]
    return v


def halton_points(n: int, lower: Sequence[float], upper: Sequence[float]) -> np.ndarray:
    """First ``n`` unscrambled Halton points scaled to the box ``[lower, upper]``."""
    unit = qmc.Halton(d=len(lower), scramble=False).random(n)
    return qmc.scale(unit, lower, upper)


def _value(params, cfg, search):
    return lambda x, y: value_by_switching(params, x, y, cfg, search).u


def bounds(params: ModelParams, x: float, y: float):
    """``(lower, upper)`` sandwich for the value at ``(x, y)``."""
    b, g, mu = params.beta, params.gamma, params.mu
    lower = (math.log(x + y) - math.log(g / b + mu)) / max(g, 1.0)
    upper = (x + y) / (mu * g)
    return lower, upper


def check_bounds(params: ModelParams, samples: np.ndarray,
                 cfg: IntegratorConfig = DEFAULT_CONFIG,
                 search: SearchConfig = DEFAULT_SEARCH, tol: float = 1e-8) -> ProbeReport:
    samples = np.asarray(samples, float)
    if np.any(samples[:, 0] < 0) or np.any(samples[:, 1] < params.mu):
        raise InvalidInput("bound samples must satisfy x >= 0 and y >= mu")
    worst, witness = -math.inf, {}
    for x, y in samples:
        u = value_by_switching(params, x, y, cfg, search).u
        lo, hi = bounds(params, x, y)
        v = max(lo - u, u - hi)
        if v > worst:
            worst, witness = v, {"x": x, "y": y, "u": u, "lower": lo, "upper": hi}
    return ProbeReport("bounds", len(samples), max(worst, 0.0), tol, witness)


def _directions(count: int) -> np.ndarray:
    ang = np.pi * np.arange(count) / count
    return np.column_stack([np.cos(ang), np.sin(ang)])


def second_difference_sup(value_fn: Callable, points: np.ndarray, dirs: np.ndarray,
                          h: float):
    """Largest ``[u(p + h d) + u(p - h d) - 2 u(p)] / h**2`` and where it occurs."""
    best, arg = -math.inf, None
    for x, y in points:
        centre = value_fn(x, y)
        for d in dirs:
            sd = (value_fn(x + h * d[0], y + h * d[1]) + value_fn(x - h * d[0], y - h * d[1])
                  - 2.0 * centre) / h ** 2
            if sd > best:
                best, arg = sd, (x, y, d[0], d[1])
    return best, arg


def semiconcavity_probe(params: ModelParams, triangle: GridSpec, directions: int = 4,
                        h_list: Sequence[float] = (1e-2, 5e-3),
                        cfg: IntegratorConfig = DEFAULT_CONFIG,
                        search: SearchConfig = DEFAULT_SEARCH,
                        value_fn: Optional[Callable] = None,
                        stability: float = 0.2) -> ProbeReport:
    """Empirical one-sided curvature bound ``L_hat`` at two scales.

    Only the upper bound on second differences is probed.  The report passes
    when every estimate is finite and the largest and smallest agree to within
    ``stability`` relative to the largest magnitude.
    """
    X, Y = triangle.mesh()
    m = triangle.mask()
    points = np.column_stack([X[m], Y[m]])
    h_max = max(h_list)
    if (np.any(points[:, 0] - h_max <= 0.0) or np.any(points[:, 1] - h_max <= params.mu)):
        raise InvalidInput("triangle nodes too close to the boundary for the largest h")
    fn = value_fn or _value(params, cfg, search)
    dirs = _directions(directions)
    estimates, args = [], []
    for h in h_list:
        est, arg = second_difference_sup(fn, points, dirs, h)
        estimates.append(est)
        args.append(arg)
    est = np.asarray(estimates)
    if not np.all(np.isfinite(est)):
        spread = math.inf
    else:
        scale = max(float(np.max(np.abs(est))), 1e-12)
        spread = float(np.max(est) - np.min(est)) / scale
    k = int(np.argmax(est)) if np.all(np.isfinite(est)) else 0
    x, y, dx, dy = args[k] if args[k] is not None else (math.nan,) * 4
    return ProbeReport("semiconcavity", len(points) * len(dirs) * len(h_list), spread, stability,
                       {"x": x, "y": y, "dx": dx, "dy": dy, "h": h_list[k]},
                       {"L_hat": est.tolist(), "h_list": list(h_list)})


def dpp_residual(params: ModelParams, x: float, y: float, t_list: Sequence[float],
                 cfg: IntegratorConfig = DEFAULT_CONFIG,
                 search: SearchConfig = DEFAULT_SEARCH, tol: float = 1e-5) -> ProbeReport:
    """Dynamic programming along ``r = 0``, ``r = 1`` and the optimal switching law.

    The optimal law must reproduce ``u(x, y)``; the other two may only
    overshoot it.
    """
    base = value_by_switching(params, x, y, cfg, search)
    u = base.u
    if any(t < 0 or t > u + 1e-12 for t in t_list):
        raise InvalidInput("t_list must lie in [0, u(x, y)]")
    laws = {"never": Constant(0.0), "full": Constant(1.0), "optimal": Switching(base.tau_star)}
    worst, witness = 0.0, {}
    for name, law in laws.items():
        for t in t_list:
            if t == 0.0:
                cand = u
            else:
                end = integrate(params, law, State(x, y), float(t), cfg).state(-1)
                i_t = max(end.i, params.mu)
                cand = t + value_by_switching(params, end.s, i_t, cfg, search).u
            v = abs(cand - u) if name == "optimal" else max(u - cand, 0.0)
            if v > worst:
                worst, witness = v, {"control": name, "t": float(t), "candidate": cand, "u": u}
    return ProbeReport("dpp", 3 * len(t_list), worst, tol, witness, {"tau_star": base.tau_star})


def asymptotics_check(params: ModelParams, x: float, y: float, control=Constant(0.0),
                      horizon_mult: float = HORIZON_MULT,
                      cfg: IntegratorConfig = DEFAULT_CONFIG) -> ProbeReport:
    """At ``T = horizon_mult (x + y)/(mu gamma)``: ``I(T) < mu/10`` and ``beta S(T) < gamma``."""
    if not y > 0:
        raise InvalidInput("need y > 0")
    T = horizon_mult * (x + y) / (params.mu * params.gamma)
    run_cfg = IntegratorConfig(cfg.step, cfg.event_tol, max(T, cfg.horizon(params, x, y)))
    end = integrate(params, control, State(x, y), T, run_cfg).state(-1)
    v_i = end.i - params.mu / 10.0
    v_s = params.beta * end.s - params.gamma
    return ProbeReport("asymptotics", 1, max(v_i, v_s), 0.0,
                       {"x": x, "y": y, "T": T, "S_T": end.s, "I_T": end.i})


def dominance_vs_random_controls(params: ModelParams, x: float, y: float,
                                 n_controls: int = 200, seed: int = 0,
                                 cfg: IntegratorConfig = DEFAULT_CONFIG,
                                 search: SearchConfig = DEFAULT_SEARCH,
                                 max_pieces: int = 6, tol: float = 1e-6) -> ProbeReport:
    """No sampled admissible control may eradicate faster than the switching optimum.

    ``r = 0``, ``r = 1`` and the optimal switching law are always included.
    """
    if n_controls < 1:
        raise InvalidInput("n_controls must be >= 1")
    base = value_by_switching(params, x, y, cfg, search)
    u = base.u
    horizon = max(base.u_never, 1e-12)
    ss = np.random.SeedSequence(seed)
    pieces_rng = np.random.default_rng(ss.spawn(1)[0])
    child_seeds = ss.generate_state(n_controls)
    laws = [("never", Constant(0.0)), ("full", Constant(1.0)),
            ("optimal", Switching(base.tau_star))]
    for k in range(n_controls):
        n = int(pieces_rng.integers(1, max_pieces + 1))
        laws.append((f"random[{k}]", random_piecewise(int(child_seeds[k]), n, horizon)))
    worst, witness = -math.inf, {}
    for name, law in laws:
        margin = u - eradication_time(params, law, x, y, cfg)
        if margin > worst:
            worst, witness = margin, {"control": name, "u": u, "u_r": u - margin}
    return ProbeReport("dominance", len(laws), worst, tol, witness)


def sign_profile_free_boundary(params: ModelParams, grid_spec: GridSpec,
                               cfg: IntegratorConfig = DEFAULT_CONFIG,
                               search: SearchConfig = DEFAULT_SEARCH,
                               fb_map: Optional[FreeBoundaryMap] = None,
                               rel_tol: float = 1e-4) -> ProbeReport:
    """``d_x u >= 0`` deep inside the contact set and ``<= 0`` deep in its complement.

    Derivatives are central differences of the classified map.  A node is
    tested only when all of its eight neighbours exist and carry the same
    classification, which removes a one-cell band around the free boundary
    and the outer rows and columns.
    """
    fb = fb_map or classify_free_boundary(params, grid_spec, cfg, search)
    u, ins, mask = fb.u, fb.in_S, fb.mask
    ny, nx = u.shape
    dx = grid_spec.dx
    worst, witness = -math.inf, {}
    counts = {"S": 0, "complement": 0, "excluded": 0}
    xs, ys = grid_spec.xs, grid_spec.ys
    for j in range(1, ny - 1):
        for i in range(1, nx - 1):
            if not mask[j, i]:
                continue
            block = ins[j - 1:j + 2, i - 1:i + 2]
            if not np.all(mask[j - 1:j + 2, i - 1:i + 2]) or np.any(block != block[1, 1]):
                counts["excluded"] += 1
                continue
            d = (u[j, i + 1] - u[j, i - 1]) / (2.0 * dx)
            tol = rel_tol * (1.0 + abs(d))
            if ins[j, i]:
                counts["S"] += 1
                v = -d - tol
            else:
                counts["complement"] += 1
                v = d - tol
            if v > worst:
                worst, witness = v, {"x": xs[i], "y": ys[j], "in_S": bool(ins[j, i]), "dudx": d}
    tested = counts["S"] + counts["complement"]
    return ProbeReport("free_boundary_sign", tested, max(worst, 0.0) if tested else 0.0, 0.0,
                       witness, counts)


def _triangle_samples(params, triangle: GridSpec, n):
    pts = halton_points(4 * n, [triangle.x_min, triangle.y_min], [triangle.x_max, triangle.y_max])
    if triangle.triangle_n is not None:
        pts = pts[pts.sum(axis=1) <= triangle.triangle_n]
    return pts[:n]


def lipschitz_probe(params: ModelParams, triangle: GridSpec, control=Constant(1.0),
                    n_samples: int = 64, cfg: IntegratorConfig = DEFAULT_CONFIG,
                    stability: float = 0.2) -> ProbeReport:
    """``B_hat = max |grad u^r|`` over ``n`` and ``2n`` samples of the triangle.

    Passes when both estimates are finite and agree within ``stability``.
    """
    pts = _triangle_samples(params, triangle, 2 * n_samples)
    norms = np.array([math.hypot(*gradient_eradication_time(params, control, x, y, cfg))
                      for x, y in pts])
    half = pts.shape[0] // 2
    b_n, b_2n = float(np.max(norms[:half])), float(np.max(norms))
    spread = (b_2n - b_n) / b_2n if math.isfinite(b_2n) and b_2n > 0 else math.inf
    k = int(np.argmax(norms))
    return ProbeReport("lipschitz", pts.shape[0], spread, stability,
                       {"x": pts[k, 0], "y": pts[k, 1]}, {"B_hat": [b_n, b_2n]})


def nondegeneracy_probe(params: ModelParams, samples: np.ndarray, controls: Sequence,
                        cfg: IntegratorConfig = DEFAULT_CONFIG, margin: float = 1e-6) -> ProbeReport:
    """``gamma - beta S(u) > margin`` at every eradication started above ``mu``.

    ``worst_violation`` is ``-min(gamma - beta S(u))`` and the tolerance is
    ``-margin``, so the probe passes when the smallest slack exceeds ``margin``.
    """
    worst, witness, count = -math.inf, {}, 0
    for x, y in np.asarray(samples, float):
        if y <= params.mu:
            continue
        for law in controls:
            _, end, _ = crossing_with_jacobian(params, law, x, y, cfg)
            slack = params.gamma - params.beta * end.s
            count += 1
            if -slack > worst:
                worst, witness = -slack, {"x": x, "y": y, "S_u": end.s, "slack": slack}
    return ProbeReport("nondegeneracy", count, worst, -margin, witness)


def pmp_probe(params: ModelParams, x: float, y: float, cfg: IntegratorConfig = DEFAULT_CONFIG,
              search: SearchConfig = DEFAULT_SEARCH) -> ProbeReport:
    """Necessary conditions at the certified optimum, as a ratio to their tolerances."""
    tau = value_by_switching(params, x, y, cfg, search).tau_star
    rep = check_necessary_conditions(params, tau, x, y, cfg)
    worst, key = -math.inf, None
    for k, tol in rep.tolerances.items():
        ratio = getattr(rep, k) / tol
        if ratio > worst:
            worst, key = ratio, k
    return ProbeReport("pmp", len(rep.tolerances), worst, 1.0, {"x": x, "y": y, "tau": tau,
                       "condition": key}, {k: v for k, v in rep.as_dict().items()
                                           if k != "tolerances"})


def default_suite(params: ModelParams, x: float, y: float, cfg: IntegratorConfig = DEFAULT_CONFIG,
                  search: SearchConfig = DEFAULT_SEARCH, seed: int = 0,
                  n_bounds: int = 500, n_controls: int = 200) -> list:
    """Standard battery of probes around ``(x, y)`` on ``[0, 4] x [mu, 4]``-scaled regions."""
    mu = params.mu
    top = max(4.0, 4.0 * mu)
    reports = [check_bounds(params, halton_points(n_bounds, [0.0, mu], [top, top]), cfg, search)]
    delta = 0.1 * top / 4.0
    tri = GridSpec.triangle(mu, top, delta, 8, 8)
    reports.append(semiconcavity_probe(params, tri, 4, (1e-2 * top / 4, 5e-3 * top / 4), cfg, search))
    u = value_by_switching(params, x, y, cfg, search).u
    reports.append(dpp_residual(params, x, y, list(np.linspace(0.0, u, 6)), cfg, search))
    reports.append(asymptotics_check(params, x, y, Constant(0.0), HORIZON_MULT, cfg))
    reports.append(asymptotics_check(params, x, y, Constant(1.0), HORIZON_MULT, cfg))
    reports.append(dominance_vs_random_controls(params, x, y, n_controls, seed, cfg, search))
    box = GridSpec(delta, top - delta, mu + delta, top, 12, 12)
    reports.append(sign_profile_free_boundary(params, box, cfg, search))
    reports.append(lipschitz_probe(params, tri, Constant(1.0), 64, cfg))
    samples = halton_points(64, [0.0, mu], [top, top])
    reports.append(nondegeneracy_probe(params, samples, (Constant(0.0), Constant(1.0)), cfg))
    reports.append(pmp_probe(params, x, y, cfg, search))
    return reports
