"""Eradication time u^r(x, y), flow sensitivities and the gradient of u^r."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _kernels
from .controls import ControlLaw, segments
from .dynamics import (DEFAULT_CONFIG, IntegratorConfig, ModelParams, State,
                       first_threshold_crossing)
from .errors import DegenerateCrossing, HorizonExceeded, InvalidInput, NumericalFailure

# floor on |d/dt I| at the crossing before dividing by it
EPS_CROSSING = 1e-8


def _check_domain(params, x, y):
    if not (x >= 0 and y >= params.mu):
        raise InvalidInput(f"need x >= 0 and y >= mu, got ({x}, {y})")


def eradication_time(params: ModelParams, control: ControlLaw, x: float, y: float,
                     cfg: IntegratorConfig = DEFAULT_CONFIG) -> float:
    _check_domain(params, x, y)
    t = first_threshold_crossing(params, control, State(x, y), cfg)
    if t is None:
        raise HorizonExceeded(f"I did not reach mu from ({x}, {y}) within the horizon")
    return t


@dataclass
class SensitivityPath:
    """Trajectory with the flow Jacobian.

    ``Z[k]`` is ``[[dS/dx, dS/dy], [dI/dx, dI/dy]]`` at ``times[k]`` and
    ``dt_phi2[k]`` is dI/dt there.
    """

    times: np.ndarray
    s: np.ndarray
    i: np.ndarray
    control_values: np.ndarray
    Z: np.ndarray
    dt_phi2: np.ndarray


def flow_sensitivities(params: ModelParams, control: ControlLaw, x: float, y: float,
                       t_end: float, cfg: IntegratorConfig = DEFAULT_CONFIG) -> SensitivityPath:
    if x < 0 or y < 0:
        raise InvalidInput("negative initial state")
    if t_end < 0:
        raise InvalidInput("t_end must be >= 0")
    if t_end > cfg.horizon(params, x, y):
        raise HorizonExceeded("t_end exceeds max_horizon")
    bps, lv = segments(control)
    t, v, r, ok = _kernels.path_sens(params.beta, params.gamma, bps, lv,
                                     float(x), float(y), cfg.step, float(t_end))
    if not ok:
        raise NumericalFailure("non-finite state in sensitivity integration")
    s, i = v[:, 0], v[:, 1]
    Z = v[:, 2:6].reshape(-1, 2, 2)
    return SensitivityPath(t, s, i, r, Z, (params.beta * s - params.gamma) * i)


def crossing_with_jacobian(params: ModelParams, control: ControlLaw, x: float, y: float,
                           cfg: IntegratorConfig = DEFAULT_CONFIG):
    """Eradication time, state at eradication and flow Jacobian there."""
    bps, lv = segments(control)
    t, v, status = _kernels.crossing_sens(params.beta, params.gamma, params.mu, bps, lv,
                                          float(x), float(y), cfg.step,
                                          cfg.horizon(params, x, y))
    if status == _kernels.NONFINITE:
        raise NumericalFailure("non-finite state in sensitivity integration")
    if status == _kernels.NOT_REACHED:
        raise HorizonExceeded(f"I did not reach mu from ({x}, {y}) within the horizon")
    return t, State(float(v[0]), float(v[1])), v[2:6].reshape(2, 2).copy()


def gradient_eradication_time(params: ModelParams, control: ControlLaw, x: float, y: float,
                              cfg: IntegratorConfig = DEFAULT_CONFIG):
    """``(du/dx, du/dy)`` by implicit differentiation of ``I(x, y, u) = mu``.

    On the target segment ``y = mu, beta*x < gamma`` the one-sided limits
    ``(0, 1/((gamma - beta*x) mu))`` are returned; u vanishes there and grows
    with y, so the y-derivative is positive.
    """
    _check_domain(params, x, y)
    b, g, mu = params.beta, params.gamma, params.mu
    if y == mu and b * x <= g:
        if g - b * x < EPS_CROSSING:
            raise DegenerateCrossing("gradient undefined at x = gamma/beta on y = mu")
        return 0.0, 1.0 / ((g - b * x) * mu)
    _, end, Z = crossing_with_jacobian(params, control, x, y, cfg)
    dt_phi2 = (b * end.s - g) * end.i
    if dt_phi2 >= -EPS_CROSSING:
        raise DegenerateCrossing(f"dI/dt = {dt_phi2:.3g} at the crossing from ({x}, {y})")
    return -Z[1, 0] / dt_phi2, -Z[1, 1] / dt_phi2
