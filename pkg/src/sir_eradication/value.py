"""Value function through the optimal switching time.

Along the uncontrolled flow ``(S, I)`` from ``(x, y)`` the value is the
minimum of ``g(tau) = tau + u_full(S(tau), I(tau))`` over
``tau in [0, u_never]``, where ``u_full`` is the eradication time under
``r = 1`` and ``u_never`` the one under ``r = 0``.  ``g(tau)`` is exactly the
eradication time of the bang-bang law ``Switching(tau)``.  Its slope is
``S(tau) * d_x u_full(S(tau), I(tau))``, which vanishes at an interior optimum.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq
from scipy.signal import find_peaks

from . import _kernels
from .controls import Constant, Switching
from .dynamics import DEFAULT_CONFIG, HORIZON_MULT, IntegratorConfig, ModelParams
from .eradication import _check_domain, eradication_time, gradient_eradication_time
from .errors import NumericalFailure
from .grids import GridSpec

INV_PHI = (math.sqrt(5.0) - 1.0) / 2.0


@dataclass(frozen=True)
class SearchConfig:
    n_grid: int = 512
    tau_tol: float = 1e-8
    # in_S threshold is tol_rel * (1 + u)
    tol_rel: float = 1e-6


DEFAULT_SEARCH = SearchConfig()


@dataclass
class ValueResult:
    x: float
    y: float
    u: float
    tau_star: float
    u_full: float
    u_never: float
    in_S: bool
    tau_argmin: float
    # more than one local minimum of g on the coarse grid
    multi_bracket: bool = False
    n_local_minima: int = 1
    tol_S: float = field(default=0.0, repr=False)

    def as_dict(self) -> dict:
        return {
            "x": self.x, "y": self.y, "u": self.u, "tau_star": self.tau_star,
            "u_full": self.u_full, "u_never": self.u_never, "in_S": self.in_S,
            "tau_argmin": self.tau_argmin, "multi_bracket": self.multi_bracket,
            "n_local_minima": self.n_local_minima, "tol_S": self.tol_S,
        }


def full_vaccination_time(params: ModelParams, x: float, y: float,
                          cfg: IntegratorConfig = DEFAULT_CONFIG) -> float:
    return eradication_time(params, Constant(1.0), x, y, cfg)


def switching_objective(params, x, y, tau, cfg=DEFAULT_CONFIG) -> float:
    """``g(tau)``, the eradication time under ``Switching(tau)``."""
    return eradication_time(params, Switching(float(tau)), x, y, cfg)


def switching_slope(params, x, y, tau, cfg=DEFAULT_CONFIG) -> float:
    """``g'(tau) = S(tau) * d_x u_full(S(tau), I(tau))``."""
    bps = np.empty(0)
    lv = np.zeros(1)
    s, i = _kernels.state_at(params.beta, params.gamma, bps, lv, float(x), float(y),
                             cfg.step, float(tau))
    if i <= params.mu:
        return 1.0
    dx, _ = gradient_eradication_time(params, Constant(1.0), s, i, cfg)
    return s * dx


def _golden(f, a, b, tol):
    c = b - INV_PHI * (b - a)
    d = a + INV_PHI * (b - a)
    fc, fd = f(c), f(d)
    while b - a > tol:
        if fc <= fd:
            b, d, fd = d, c, fc
            c = b - INV_PHI * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + INV_PHI * (b - a)
            fd = f(d)
    return (c, fc) if fc <= fd else (d, fd)


def _refine(params, x, y, lo, hi, cfg, search):
    """Best (tau, g) in ``[lo, hi]``: golden section, then a root of g'."""
    g = lambda t: switching_objective(params, x, y, t, cfg)
    best_t, best_g = _golden(g, lo, hi, search.tau_tol)
    if lo < hi:
        try:
            s_lo = switching_slope(params, x, y, lo, cfg)
            s_hi = switching_slope(params, x, y, hi, cfg)
        except NumericalFailure:
            return best_t, best_g
        if s_lo < 0 < s_hi:
            root = brentq(lambda t: switching_slope(params, x, y, t, cfg), lo, hi,
                          xtol=1e-14, rtol=4 * np.finfo(float).eps)
            g_root = g(root)
            if g_root <= best_g + 1e-12:
                best_t, best_g = root, g_root
    return best_t, best_g


def _local_minima(g, prominence):
    """Grid indices of local minima of ``g`` that stand out by ``prominence``."""
    pad = float(np.max(g)) + 1.0
    peaks, _ = find_peaks(-np.concatenate([[pad], g, [pad]]), prominence=prominence)
    return [int(k) - 1 for k in peaks]


def value_by_switching(params: ModelParams, x: float, y: float,
                       cfg: IntegratorConfig = DEFAULT_CONFIG,
                       search: SearchConfig = DEFAULT_SEARCH) -> ValueResult:
    _check_domain(params, x, y)
    x, y = float(x), float(y)
    u_never = eradication_time(params, Constant(0.0), x, y, cfg)
    u_full = full_vaccination_time(params, x, y, cfg)
    if u_never == 0.0:
        return ValueResult(x, y, 0.0, 0.0, u_full, 0.0, True, 0.0, tol_S=search.tol_rel)

    taus = np.linspace(0.0, u_never, search.n_grid)
    g = _kernels.switching_objective(params.beta, params.gamma, params.mu, x, y,
                                     cfg.step, taus, HORIZON_MULT)
    g[0] = u_full
    g[-1] = u_never
    if not np.all(np.isfinite(g)):
        raise NumericalFailure("switching objective not finite on the search grid")

    k = int(np.argmin(g))
    lo, hi = taus[max(k - 1, 0)], taus[min(k + 1, len(taus) - 1)]
    tau_min, u = _refine(params, x, y, float(lo), float(hi), cfg, search)
    if g[k] < u:
        tau_min, u = float(taus[k]), float(g[k])
    tol_S = search.tol_rel * (1.0 + u)
    minima = _local_minima(g, tol_S) or [k]

    # first attainment of the minimum: the earliest bracket whose value reaches u
    if g[0] <= u + tol_S:
        tau_first = 0.0
    else:
        tau_first = tau_min
        for j in minima:
            if g[j] <= u + tol_S:
                if j != k:
                    lo = taus[max(j - 1, 0)]
                    hi = taus[min(j + 1, len(taus) - 1)]
                    tau_first, _ = _refine(params, x, y, lo, hi, cfg, search)
                break
    in_S = abs(u - u_full) <= tol_S
    return ValueResult(x, y, u, tau_first, u_full, u_never, in_S, tau_min,
                       multi_bracket=len(minima) > 1, n_local_minima=len(minima), tol_S=tol_S)


def tau_star(params: ModelParams, x: float, y: float,
             cfg: IntegratorConfig = DEFAULT_CONFIG,
             search: SearchConfig = DEFAULT_SEARCH) -> float:
    """First time along the uncontrolled flow at which switching on is optimal."""
    return value_by_switching(params, x, y, cfg, search).tau_star


@dataclass
class FreeBoundaryMap:
    spec: GridSpec
    u: np.ndarray
    u_full: np.ndarray
    tau_star: np.ndarray
    in_S: np.ndarray
    mask: np.ndarray

    def rows(self):
        X, Y = self.spec.mesh()
        for j in range(self.spec.ny):
            for i in range(self.spec.nx):
                if self.mask[j, i]:
                    yield (X[j, i], Y[j, i], self.u[j, i], self.u_full[j, i],
                           self.tau_star[j, i], bool(self.in_S[j, i]))

    def to_csv(self, path, comment: str = None) -> None:
        with open(path, "w") as fh:
            if comment is not None:
                fh.write(f"# {comment}\n")
            fh.write("x,y,u,u_full,tau_star,in_S\n")
            for x, y, u, uf, ts, ins in self.rows():
                fh.write(f"{x:.17g},{y:.17g},{u:.17g},{uf:.17g},{ts:.17g},{int(ins)}\n")


def classify_free_boundary(params: ModelParams, spec: GridSpec,
                           cfg: IntegratorConfig = DEFAULT_CONFIG,
                           search: SearchConfig = DEFAULT_SEARCH) -> FreeBoundaryMap:
    mask = spec.mask()
    shape = (spec.ny, spec.nx)
    u = np.full(shape, np.nan)
    uf = np.full(shape, np.nan)
    ts = np.full(shape, np.nan)
    ins = np.zeros(shape, dtype=bool)
    for j, yv in enumerate(spec.ys):
        for i, xv in enumerate(spec.xs):
            if not mask[j, i]:
                continue
            res = value_by_switching(params, xv, yv, cfg, search)
            u[j, i], uf[j, i], ts[j, i], ins[j, i] = res.u, res.u_full, res.tau_star, res.in_S
    return FreeBoundaryMap(spec, u, uf, ts, ins, mask)
