"""Costates along a candidate-optimal path and the Pontryagin necessary conditions.

Two independent constructions of the costate ``(P, Q)`` are provided: the
adjoint ODE integrated backward from the transversality data, and the
gradient of the remaining eradication time evaluated at each sample.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .controls import ControlLaw, Switching, evaluate_control, shift_control
from .dynamics import DEFAULT_CONFIG, IntegratorConfig, ModelParams, Trajectory, integrate, State
from .eradication import eradication_time, flow_sensitivities, gradient_eradication_time
from .errors import DegenerateCrossing, InvalidInput

TOLERANCES = {
    "residual_ode": 1e-6,
    "p_terminal": 1e-6,
    "q_terminal_identity": 1e-6,
    "cond3_sup": 1e-6,
    "cond4_sup": 1e-4,
}
# |P| at or below this fraction of (1 + max|P|) makes condition (iii) vacuous
P_BAND_REL = 1e-6


@dataclass
class AdjointPath:
    times: np.ndarray
    P: np.ndarray
    Q: np.ndarray
    source: str  # "backward" or "gradients"


def hamiltonian_identity(params: ModelParams, state: State, P: float, Q: float,
                         r: float = None) -> float:
    """``beta S I P + S P^+ + (gamma - beta S) I Q``; ``r`` is not needed."""
    b, g = params.beta, params.gamma
    s, i = state.s, state.i
    return b * s * i * P + s * max(P, 0.0) + (g - b * s) * i * Q


def _levels(control, t):
    # level in force on each interval (t[k], t[k+1])
    mids = 0.5 * (t[1:] + t[:-1])
    return np.array([evaluate_control(control, m) for m in mids])


def _hermite_mid(params, s0, i0, s1, i1, r, dt):
    b, g = params.beta, params.gamma
    ds0, di0 = -b * s0 * i0 - r * s0, b * s0 * i0 - g * i0
    ds1, di1 = -b * s1 * i1 - r * s1, b * s1 * i1 - g * i1
    sm = 0.5 * (s0 + s1) + dt / 8.0 * (ds0 - ds1)
    im = 0.5 * (i0 + i1) + dt / 8.0 * (di0 - di1)
    return sm, im


def _costate_rhs(params, s, i, r, p, q):
    b, g = params.beta, params.gamma
    return (b * i + r) * p - b * i * q, b * s * p + (g - b * s) * q


def _costate_step(params, s0, i0, sm, im, s1, i1, r, p, q, dt):
    """One RK4 step of the adjoint ODE over a signed ``dt``; states at 0, dt/2, dt."""
    k1 = _costate_rhs(params, s0, i0, r, p, q)
    k2 = _costate_rhs(params, sm, im, r, p + 0.5 * dt * k1[0], q + 0.5 * dt * k1[1])
    k3 = _costate_rhs(params, sm, im, r, p + 0.5 * dt * k2[0], q + 0.5 * dt * k2[1])
    k4 = _costate_rhs(params, s1, i1, r, p + dt * k3[0], q + dt * k3[1])
    return (p + dt * (k1[0] + 2 * k2[0] + 2 * k3[0] + k4[0]) / 6.0,
            q + dt * (k1[1] + 2 * k2[1] + 2 * k3[1] + k4[1]) / 6.0)


def integrate_costate(params: ModelParams, control: ControlLaw, traj: Trajectory,
                      p_start: float, q_start: float, backward: bool = True):
    """Adjoint ODE along the stored trajectory (cubic-Hermite midpoints)."""
    t, s, i = traj.times, traj.s, traj.i
    lv = _levels(control, t)
    n = len(t)
    P = np.empty(n)
    Q = np.empty(n)
    if backward:
        P[-1], Q[-1] = p_start, q_start
        for k in range(n - 2, -1, -1):
            dt = t[k + 1] - t[k]
            sm, im = _hermite_mid(params, s[k], i[k], s[k + 1], i[k + 1], lv[k], dt)
            P[k], Q[k] = _costate_step(params, s[k + 1], i[k + 1], sm, im, s[k], i[k],
                                       lv[k], P[k + 1], Q[k + 1], -dt)
    else:
        P[0], Q[0] = p_start, q_start
        for k in range(n - 1):
            dt = t[k + 1] - t[k]
            sm, im = _hermite_mid(params, s[k], i[k], s[k + 1], i[k + 1], lv[k], dt)
            P[k + 1], Q[k + 1] = _costate_step(params, s[k], i[k], sm, im, s[k + 1],
                                               i[k + 1], lv[k], P[k], Q[k], dt)
    return P, Q


def optimal_trajectory(params: ModelParams, control: ControlLaw, x: float, y: float,
                       cfg: IntegratorConfig = DEFAULT_CONFIG) -> Trajectory:
    """Trajectory from ``(x, y)`` up to its eradication time."""
    u = eradication_time(params, control, x, y, cfg)
    return integrate(params, control, State(x, y), u, cfg)


def adjoint_backward(params: ModelParams, control: ControlLaw, trajectory: Trajectory,
                     cfg: IntegratorConfig = DEFAULT_CONFIG) -> AdjointPath:
    s_end = float(trajectory.s[-1])
    slack = params.gamma - params.beta * s_end
    if slack <= 0:
        raise DegenerateCrossing(f"beta*S(u) = {params.beta * s_end:.6g} >= gamma")
    q_end = 1.0 / (slack * params.mu)
    P, Q = integrate_costate(params, control, trajectory, 0.0, q_end, backward=True)
    return AdjointPath(trajectory.times.copy(), P, Q, "backward")


def adjoint_from_gradients(params: ModelParams, control: ControlLaw, x: float, y: float,
                           cfg: IntegratorConfig = DEFAULT_CONFIG,
                           trajectory: Trajectory = None) -> AdjointPath:
    """``P(t), Q(t)`` as the gradient of the remaining eradication time.

    Each sample ``(S(t), I(t))`` is treated as a fresh initial condition under
    the shifted control ``r(. + t)``.
    """
    traj = trajectory if trajectory is not None else optimal_trajectory(params, control, x, y, cfg)
    n = len(traj)
    P = np.empty(n)
    Q = np.empty(n)
    for k in range(n):
        s_k = float(traj.s[k])
        # round-off can leave the last sample a hair below mu
        i_k = max(float(traj.i[k]), params.mu)
        P[k], Q[k] = gradient_eradication_time(params, shift_control(control, float(traj.times[k])),
                                               s_k, i_k, cfg)
    return AdjointPath(traj.times.copy(), P, Q, "gradients")


def costate_ode_residual(params: ModelParams, control: ControlLaw, traj: Trajectory,
                         path: AdjointPath) -> float:
    """Max one-step defect of the adjoint ODE, divided by the step length."""
    t, s, i = traj.times, traj.s, traj.i
    lv = _levels(control, t)
    worst = 0.0
    for k in range(len(t) - 1):
        dt = t[k + 1] - t[k]
        sm, im = _hermite_mid(params, s[k], i[k], s[k + 1], i[k + 1], lv[k], dt)
        p1, q1 = _costate_step(params, s[k], i[k], sm, im, s[k + 1], i[k + 1], lv[k],
                               path.P[k], path.Q[k], dt)
        worst = max(worst, abs(p1 - path.P[k + 1]) / dt, abs(q1 - path.Q[k + 1]) / dt)
    return worst


def duality_defect(params: ModelParams, control: ControlLaw, x: float, y: float,
                   path: AdjointPath, cfg: IntegratorConfig = DEFAULT_CONFIG) -> float:
    """``max_t |Z(t)^T (P(t), Q(t)) - (P(0), Q(0))|`` on the common samples."""
    sens = flow_sensitivities(params, control, x, y, float(path.times[-1]), cfg)
    if len(sens.times) != len(path.times):
        raise InvalidInput("sensitivity and costate samples do not line up")
    pq = np.column_stack([path.P, path.Q])
    paired = np.einsum("kji,kj->ki", sens.Z, pq)
    return float(np.max(np.abs(paired - pq[0])))


@dataclass
class NecessaryConditionsReport:
    tau: float
    u: float
    residual_ode: float
    p_terminal: float
    q_terminal_identity: float
    cond3_sup: float
    cond4_sup: float
    tolerances: dict

    @property
    def passed(self) -> bool:
        return all(getattr(self, k) <= v for k, v in self.tolerances.items())

    def as_dict(self) -> dict:
        return {
            "tau": self.tau, "u": self.u,
            "residual_ode": self.residual_ode, "p_terminal": self.p_terminal,
            "q_terminal_identity": self.q_terminal_identity,
            "cond3_sup": self.cond3_sup, "cond4_sup": self.cond4_sup,
            "pass": self.passed, "tolerances": dict(self.tolerances),
        }


def check_necessary_conditions(params: ModelParams, tau: float, x: float, y: float,
                               cfg: IntegratorConfig = DEFAULT_CONFIG,
                               tolerances: dict = None) -> NecessaryConditionsReport:
    control = Switching(float(tau))
    traj = optimal_trajectory(params, control, x, y, cfg)
    path = adjoint_from_gradients(params, control, x, y, cfg, trajectory=traj)
    P, Q = path.P, path.Q
    s_end = float(traj.s[-1])

    r = np.array([evaluate_control(control, t) for t in traj.times])
    band = P_BAND_REL * (1.0 + np.max(np.abs(P)))
    # condition (iii) holds almost everywhere: skip the switch instant itself
    active = (np.abs(P) > band) & (traj.times != control.tau)
    cond3 = np.abs(r * P - np.maximum(P, 0.0))
    h = (params.beta * traj.s * traj.i * P + traj.s * np.maximum(P, 0.0)
         + (params.gamma - params.beta * traj.s) * traj.i * Q)
    return NecessaryConditionsReport(
        tau=float(tau),
        u=float(traj.times[-1]),
        residual_ode=costate_ode_residual(params, control, traj, path),
        p_terminal=abs(float(P[-1])),
        q_terminal_identity=abs(float(Q[-1]) * (params.gamma - params.beta * s_end) * params.mu - 1.0),
        cond3_sup=float(np.max(cond3[active])) if np.any(active) else 0.0,
        cond4_sup=float(np.max(np.abs(h - 1.0))),
        tolerances=dict(tolerances or TOLERANCES),
    )
