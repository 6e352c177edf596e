"""Semi-Lagrangian grid solver for the eradication-time HJB equation.

The discrete problem is the fixed point

    U(p) = min_{a in controls} [ h + Interp(U)(p + h f(p, a)) ]

with ``f`` the controlled SIR field and bilinear interpolation.  Feet that
cross ``y = mu`` on the target segment contribute the fraction of ``h``
spent before reaching it.  Feet left of ``x_min`` are interpolated against
the exact values ``ln(y/mu)/gamma`` on the invariant line ``x = 0``; feet
above ``y_max`` take the supersolution ``(x + y)/(mu gamma)``.

Sweeps are Gauss-Seidel in increasing x (every characteristic moves left)
with the y direction alternating, which makes the iteration converge in a
few passes while keeping the same fixed point.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from numba import njit
from scipy.interpolate import RegularGridInterpolator

from . import _kernels
from .dynamics import DEFAULT_CONFIG, HORIZON_MULT, IntegratorConfig, ModelParams
from .errors import InvalidInput, NonConvergence, NumericalFailure
from .grids import GridSpec


@dataclass
class GridValues:
    spec: GridSpec
    u: np.ndarray
    iterations: int
    residual: float
    h: float
    controls: tuple = (0.0, 1.0)
    history: list = field(default_factory=list, repr=False)
    # no sweep ever increased a node value
    monotone: bool = True

    def interpolator(self, params: ModelParams):
        xs = np.concatenate([[0.0], self.spec.xs])
        ghost = np.log(self.spec.ys / params.mu) / params.gamma
        table = np.column_stack([ghost, self.u])
        return RegularGridInterpolator((self.spec.ys, xs), table)

    def at(self, params: ModelParams, x, y):
        x = np.atleast_1d(np.asarray(x, float))
        y = np.atleast_1d(np.asarray(y, float))
        return self.interpolator(params)(np.column_stack([y, x]))


@njit(cache=True)
def _sweeps(beta, gamma, mu, xs, ys, u, ghost, h, controls, tol, max_iter):
    nx = xs.shape[0]
    ny = ys.shape[0]
    dx = xs[1] - xs[0]
    dy = ys[1] - ys[0]
    history = np.zeros(max_iter)
    max_increase = 0.0
    it = 0
    for it in range(max_iter):
        diff = 0.0
        for i in range(nx):
            x = xs[i]
            for jj in range(ny):
                j = jj if it % 2 == 0 else ny - 1 - jj
                y = ys[j]
                if j == 0 and beta * x <= gamma and ys[0] == mu:
                    u[j, i] = 0.0
                    continue
                best = np.inf
                for a in controls:
                    fx = -beta * x * y - a * x
                    fy = (beta * x - gamma) * y
                    px = x + h * fx
                    py = y + h * fy
                    if py < mu:
                        cand = h * (y - mu) / (y - py)
                    elif py > ys[ny - 1]:
                        cand = h + (px + py) / (mu * gamma)
                    else:
                        jc = min(int((py - ys[0]) / dy), ny - 2)
                        ty = (py - ys[jc]) / dy
                        if px < xs[0]:
                            ic = -1
                            tx = px / xs[0]
                        else:
                            ic = min(int((px - xs[0]) / dx), nx - 2)
                            tx = (px - xs[ic]) / dx
                        rest = 0.0
                        wself = 0.0
                        for cx in range(2):
                            for cy in range(2):
                                w = (tx if cx else 1.0 - tx) * (ty if cy else 1.0 - ty)
                                col = ic + cx
                                row = jc + cy
                                if col == i and row == j:
                                    wself += w
                                elif col < 0:
                                    rest += w * ghost[row]
                                else:
                                    rest += w * u[row, col]
                        cand = (h + rest) / (1.0 - wself)
                    if cand < best:
                        best = cand
                d = best - u[j, i]
                if d > max_increase:
                    max_increase = d
                if abs(d) > diff:
                    diff = abs(d)
                u[j, i] = best
        history[it] = diff
        if diff < tol:
            return it + 1, diff, history[: it + 1], max_increase
    return max_iter, history[max_iter - 1], history, max_increase


def default_pseudo_step(params: ModelParams, spec: GridSpec, controls=(0.0, 1.0)) -> float:
    X, Y = spec.mesh()
    speed = 0.0
    for a in controls:
        fx = -params.beta * X * Y - a * X
        fy = (params.beta * X - params.gamma) * Y
        speed = max(speed, float(np.max(np.hypot(fx, fy))))
    return 0.5 * min(spec.dx, spec.dy) / speed


def solve_hjb_semilagrangian(params: ModelParams, spec: GridSpec, h: float = None,
                             tol: float = 1e-12, max_iter: int = 500,
                             controls=(0.0, 1.0)) -> GridValues:
    if abs(spec.y_min - params.mu) > 1e-12 * params.mu:
        raise InvalidInput("HJB grid must start at y = mu")
    ctrl = np.asarray(controls, dtype=float)
    if np.any((ctrl < 0) | (ctrl > 1)):
        raise InvalidInput("controls must lie in [0, 1]")
    if h is None:
        h = default_pseudo_step(params, spec, controls)
    xs, ys = spec.xs, spec.ys
    # every foot must stay right of x = 0
    shrink = h * (params.beta * ys[-1] + ctrl.max())
    if shrink >= 1.0:
        raise InvalidInput(f"pseudo-time step {h} sends characteristics past x = 0")
    X, Y = spec.mesh()
    u = (X + Y) / (params.mu * params.gamma)
    ghost = np.log(ys / params.mu) / params.gamma
    iters, res, history, max_inc = _sweeps(params.beta, params.gamma, params.mu, xs, ys,
                                           u, ghost, float(h), ctrl, tol, max_iter)
    if not np.all(np.isfinite(u)):
        raise NumericalFailure("non-finite grid values")
    out = GridValues(spec, u, int(iters), float(res), float(h), tuple(controls),
                     list(history), bool(max_inc <= 1e-14))
    if res >= tol:
        raise NonConvergence(f"no convergence in {max_iter} sweeps (residual {res:.3g})",
                             residual=res, iterations=iters)
    return out


def _differences(params: ModelParams, values: GridValues):
    """Upwind one-sided differences following the characteristic direction."""
    spec = values.spec
    u = values.u
    X, Y = spec.mesh()
    ghost = np.log(spec.ys / params.mu) / params.gamma
    left = np.column_stack([ghost, u[:, :-1]])
    x_left = np.concatenate([[0.0], spec.xs[:-1]])
    ux = (u - left) / (spec.xs - x_left)[None, :]

    uy = np.full_like(u, np.nan)
    back = np.full_like(u, np.nan)
    fwd = np.full_like(u, np.nan)
    back[1:] = (u[1:] - u[:-1]) / spec.dy
    fwd[:-1] = (u[1:] - u[:-1]) / spec.dy
    rising = params.beta * X > params.gamma
    uy = np.where(rising, fwd, back)
    target = (np.isclose(Y, params.mu, rtol=0, atol=1e-12 * params.mu)
              & (params.beta * X <= params.gamma))
    return X, Y, ux, uy, target


def hjb_residual(params: ModelParams, values: GridValues) -> np.ndarray:
    """``|beta x y u_x + x (u_x)^+ + (gamma - beta x) y u_y - 1|``; NaN off-stencil."""
    X, Y, ux, uy, target = _differences(params, values)
    b, g = params.beta, params.gamma
    lhs = b * X * Y * ux + X * np.maximum(ux, 0.0) + (g - b * X) * Y * uy
    res = np.abs(lhs - 1.0)
    res[target] = np.nan
    return res


@dataclass
class ObstacleResidual:
    drift: np.ndarray
    gap: np.ndarray
    residual: np.ndarray


def obstacle_residual(params: ModelParams, values: GridValues,
                      u_full_grid: np.ndarray) -> ObstacleResidual:
    """Pieces of ``max{beta x y u_x + (gamma - beta x) y u_y - 1, u - u_full}``."""
    X, Y, ux, uy, target = _differences(params, values)
    b, g = params.beta, params.gamma
    drift = b * X * Y * ux + (g - b * X) * Y * uy - 1.0
    gap = values.u - u_full_grid
    res = np.maximum(drift, gap)
    for arr in (drift, gap, res):
        arr[target] = np.nan
    return ObstacleResidual(drift, gap, res)


def full_vaccination_grid(params: ModelParams, spec: GridSpec,
                          cfg: IntegratorConfig = DEFAULT_CONFIG) -> np.ndarray:
    X, Y = spec.mesh()
    t, status = _kernels.full_vaccination_batch(params.beta, params.gamma, params.mu,
                                                X.ravel(), Y.ravel(), cfg.step, HORIZON_MULT)
    if np.any(status != _kernels.FOUND):
        raise NumericalFailure("full-vaccination time failed on some grid nodes")
    return t.reshape(X.shape)


def write_grid_csv(path, params: ModelParams, values: GridValues,
                   u_full_grid: np.ndarray, tol_rel: float = 1e-6, comment: str = None) -> None:
    res_h = hjb_residual(params, values)
    res_o = obstacle_residual(params, values, u_full_grid).residual
    X, Y = values.spec.mesh()
    in_s = np.abs(values.u - u_full_grid) <= tol_rel * (1.0 + values.u)
    mask = values.spec.mask()
    with open(path, "w") as fh:
        if comment is not None:
            fh.write(f"# {comment}\n")
        fh.write("x,y,u,residual_hjb,residual_obstacle,in_S\n")
        for j in range(values.spec.ny):
            for i in range(values.spec.nx):
                if not mask[j, i]:
                    continue
                fh.write(f"{X[j, i]:.17g},{Y[j, i]:.17g},{values.u[j, i]:.17g},"
                         f"{res_h[j, i]:.17g},{res_o[j, i]:.17g},{int(in_s[j, i])}\n")
