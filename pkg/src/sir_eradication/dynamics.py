"""Controlled SIR dynamics, fixed-step RK4 integration and threshold events."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import _kernels
from .controls import ControlLaw, evaluate_control, segments
from .errors import HorizonExceeded, InvalidInput, NumericalFailure

log = logging.getLogger(__name__)

HORIZON_MULT = 10.0


@dataclass(frozen=True)
class ModelParams:
    """Infection rate ``beta``, recovery rate ``gamma``, threshold ``mu``."""

    beta: float
    gamma: float
    mu: float

    def __post_init__(self):
        for name in ("beta", "gamma", "mu"):
            v = getattr(self, name)
            if not (isinstance(v, (int, float)) and math.isfinite(v) and v > 0):
                raise InvalidInput(f"{name} must be a positive finite number, got {v!r}")

    @property
    def s_critical(self) -> float:
        """Susceptible level ``gamma / beta`` at which dI/dt changes sign."""
        return self.gamma / self.beta


@dataclass(frozen=True)
class State:
    s: float
    i: float

    def __post_init__(self):
        if not (self.s >= 0 and self.i >= 0):
            raise InvalidInput(f"state components must be >= 0, got ({self.s}, {self.i})")


@dataclass(frozen=True)
class IntegratorConfig:
    step: float = 1e-3
    event_tol: float = 1e-10
    # None means 10 * (x + y) / (mu * gamma), which dominates every eradication time
    max_horizon: Optional[float] = None

    def __post_init__(self):
        if not self.step > 0 or not self.event_tol > 0:
            raise InvalidInput("step and event_tol must be positive")
        if self.max_horizon is not None and not self.max_horizon > 0:
            raise InvalidInput("max_horizon must be positive")

    def horizon(self, params: ModelParams, x: float, y: float) -> float:
        if self.max_horizon is not None:
            return self.max_horizon
        return HORIZON_MULT * (x + y) / (params.mu * params.gamma)


DEFAULT_CONFIG = IntegratorConfig()


@dataclass
class Trajectory:
    times: np.ndarray
    s: np.ndarray
    i: np.ndarray
    control_values: np.ndarray
    recovered: Optional[np.ndarray] = field(default=None, repr=False)

    def __len__(self):
        return len(self.times)

    def state(self, k: int) -> State:
        return State(float(self.s[k]), float(self.i[k]))

    def to_csv(self, path, comment: Optional[str] = None) -> None:
        """Columns ``t,S,I,r``; ``comment`` becomes a leading ``#`` line."""
        rows = np.column_stack([self.times, self.s, self.i, self.control_values])
        header = "t,S,I,r" if comment is None else f"# {comment}\nt,S,I,r"
        np.savetxt(path, rows, fmt="%.17g", delimiter=",", header=header, comments="")


def vector_field(params: ModelParams, state: State, r: float):
    if not 0.0 <= r <= 1.0:
        raise InvalidInput(f"rate {r!r} outside [0, 1]")
    if state.s < 0 or state.i < 0:
        raise InvalidInput("negative state component")
    s, i = state.s, state.i
    b, g = params.beta, params.gamma
    return (-b * s * i - r * s, b * s * i - g * i)


def _recovered(params, t, s, i):
    # cubic-Hermite quadrature of gamma * I, fourth order like the integrator
    di = params.beta * s * i - params.gamma * i
    h = np.diff(t)
    pieces = 0.5 * h * (i[1:] + i[:-1]) + h * h / 12.0 * (di[:-1] - di[1:])
    return params.gamma * np.concatenate([[0.0], np.cumsum(pieces)])


def integrate(params: ModelParams, control: ControlLaw, x0: State, t_end: float,
              cfg: IntegratorConfig = DEFAULT_CONFIG) -> Trajectory:
    """RK4 trajectory on ``[0, t_end]`` with steps aligned to control switches."""
    if t_end < 0:
        raise InvalidInput("t_end must be >= 0")
    horizon = cfg.horizon(params, x0.s, x0.i)
    if t_end > horizon:
        raise HorizonExceeded(f"t_end={t_end} exceeds max_horizon={horizon}")
    bps, lv = segments(control)
    t, s, i, _, ok = _kernels.path(params.beta, params.gamma, bps, lv,
                                   float(x0.s), float(x0.i), cfg.step, float(t_end))
    if not ok:
        raise NumericalFailure(f"non-finite state near t={t[-1]:.6g}; reduce the step")
    r = np.array([evaluate_control(control, tk) for tk in t])
    return Trajectory(t, s, i, r, _recovered(params, t, s, i))


def rising_start(params: ModelParams, x: float, y: float) -> bool:
    """True for the flagged case I(0) = mu with I initially increasing."""
    return y == params.mu and params.beta * x > params.gamma


def first_threshold_crossing(params: ModelParams, control: ControlLaw, x0: State,
                             cfg: IntegratorConfig = DEFAULT_CONFIG) -> Optional[float]:
    """First ``t >= 0`` with ``I(t) <= mu``; ``None`` if the horizon is hit first.

    The crossing is bracketed by a sign change of ``I - mu`` over one step and
    located by bisection on the RK4 sub-step from the bracket's left end.
    When ``I(0) = mu`` but I is rising, the first return to ``mu`` is reported.
    """
    if x0.i < params.mu:
        raise InvalidInput(f"initial infected {x0.i} below threshold {params.mu}")
    if rising_start(params, x0.s, x0.i):
        log.warning("I(0) = mu with beta*S(0) > gamma: reporting first return to mu")
    bps, lv = segments(control)
    t, _, i_end, status = _kernels.crossing(params.beta, params.gamma, params.mu, bps, lv,
                                            float(x0.s), float(x0.i), cfg.step,
                                            cfg.horizon(params, x0.s, x0.i))
    if status == _kernels.NONFINITE:
        raise NumericalFailure(f"non-finite state near t={t:.6g}; reduce the step")
    if status == _kernels.NOT_REACHED:
        return None
    if abs(i_end - params.mu) > cfg.event_tol:
        raise NumericalFailure(f"crossing located only to |I-mu|={abs(i_end - params.mu):.3g}")
    return t


def sir_invariant(params: ModelParams, state: State) -> float:
    """``I + S - (gamma/beta) ln S``, conserved by the uncontrolled system."""
    if state.s <= 0:
        raise InvalidInput("invariant needs S > 0")
    return state.i + state.s - params.gamma / params.beta * math.log(state.s)
