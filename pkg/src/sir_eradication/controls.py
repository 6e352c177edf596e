"""Admissible vaccination-rate controls.

All controls are step functions with values in [0, 1].  ``Switching(tau)``
is the bang-bang law that is 0 on ``[0, tau]`` and 1 afterwards.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Union

import numpy as np

from .errors import InvalidInput


def _check_level(a):
    if not (0.0 <= a <= 1.0) or math.isnan(a):
        raise InvalidInput(f"control level {a!r} outside [0, 1]")


@dataclass(frozen=True)
class Constant:
    level: float

    def __post_init__(self):
        _check_level(self.level)


@dataclass(frozen=True)
class Switching:
    tau: float

    def __post_init__(self):
        if not self.tau >= 0.0:
            raise InvalidInput(f"switch time must be >= 0, got {self.tau!r}")


@dataclass(frozen=True)
class PiecewiseConstant:
    """Right-continuous steps: ``levels[k]`` holds on ``[b[k-1], b[k])``."""

    breakpoints: tuple
    levels: tuple

    def __post_init__(self):
        b = tuple(float(v) for v in self.breakpoints)
        lv = tuple(float(v) for v in self.levels)
        object.__setattr__(self, "breakpoints", b)
        object.__setattr__(self, "levels", lv)
        if len(lv) != len(b) + 1:
            raise InvalidInput("need exactly one more level than breakpoints")
        if any(t <= 0.0 for t in b[:1]) or any(b1 <= b0 for b0, b1 in zip(b, b[1:])):
            raise InvalidInput("breakpoints must be positive and strictly increasing")
        for a in lv:
            _check_level(a)


@dataclass(frozen=True)
class Concatenated:
    """``head`` on ``[0, t_cut]`` followed by ``tail`` restarted at ``t_cut``."""

    head: "ControlLaw"
    t_cut: float
    tail: "ControlLaw"

    def __post_init__(self):
        if not self.t_cut >= 0.0:
            raise InvalidInput(f"cut time must be >= 0, got {self.t_cut!r}")


ControlLaw = Union[Constant, Switching, PiecewiseConstant, Concatenated]


def evaluate_control(c: ControlLaw, t: float) -> float:
    if t < 0:
        raise InvalidInput(f"control evaluated at negative time {t!r}")
    if isinstance(c, Constant):
        return c.level
    if isinstance(c, Switching):
        return 0.0 if t <= c.tau else 1.0
    if isinstance(c, PiecewiseConstant):
        k = int(np.searchsorted(c.breakpoints, t, side="right"))
        return c.levels[k]
    if isinstance(c, Concatenated):
        if t <= c.t_cut:
            return evaluate_control(c.head, t)
        return evaluate_control(c.tail, t - c.t_cut)
    raise TypeError(f"not a control law: {c!r}")


def concat_controls(head: ControlLaw, t_cut: float, tail: ControlLaw) -> ControlLaw:
    return Concatenated(head, float(t_cut), tail)


def segments(c: ControlLaw):
    """Breakpoints and levels as float arrays for the integration kernels.

    Consecutive equal levels are merged, so the arrays describe the
    coarsest step structure of ``c``.
    """
    if isinstance(c, Constant):
        bps, lv = [], [c.level]
    elif isinstance(c, Switching):
        bps, lv = ([], [1.0]) if c.tau == 0 else ([c.tau], [0.0, 1.0])
    elif isinstance(c, PiecewiseConstant):
        bps, lv = list(c.breakpoints), list(c.levels)
    elif isinstance(c, Concatenated):
        hb, hl = segments(c.head)
        tb, tl = segments(c.tail)
        keep = [b for b in hb if b < c.t_cut]
        head_levels = list(hl[: len(keep) + 1])
        if c.t_cut == 0:
            bps, lv = list(tb), list(tl)
        else:
            bps = keep + [c.t_cut] + [b + c.t_cut for b in tb]
            lv = head_levels + list(tl)
    else:
        raise TypeError(f"not a control law: {c!r}")
    mb, ml = [], [lv[0]]
    for b, a in zip(bps, lv[1:]):
        if a == ml[-1]:
            continue
        mb.append(b)
        ml.append(a)
    return np.asarray(mb, dtype=float), np.asarray(ml, dtype=float)


def shift_control(c: ControlLaw, t: float) -> ControlLaw:
    """The control ``s -> c(s + t)``."""
    if t < 0:
        raise InvalidInput("shift must be >= 0")
    if isinstance(c, Constant) or t == 0:
        return c
    if isinstance(c, Switching):
        return Switching(max(c.tau - t, 0.0))
    bps, lv = segments(c)
    k = int(np.searchsorted(bps, t, side="right"))
    rest = bps[k:] - t
    rest_lv = lv[k:]
    if rest.size and rest[0] <= 0.0:
        rest, rest_lv = rest[1:], rest_lv[1:]
    if rest.size == 0:
        return Constant(float(rest_lv[0]))
    return PiecewiseConstant(tuple(rest), tuple(rest_lv))


def random_piecewise(seed, n_pieces: int, horizon: float) -> ControlLaw:
    if n_pieces < 1:
        raise InvalidInput("n_pieces must be >= 1")
    rng = np.random.default_rng(seed)
    levels = rng.uniform(0.0, 1.0, size=n_pieces)
    if n_pieces == 1:
        return Constant(float(levels[0]))
    bps = np.sort(rng.uniform(0.0, horizon, size=n_pieces - 1))
    return PiecewiseConstant(tuple(bps), tuple(levels))


def control_to_dict(c: ControlLaw) -> dict:
    if isinstance(c, Constant):
        return {"type": "constant", "level": c.level}
    if isinstance(c, Switching):
        return {"type": "switching", "tau": c.tau}
    if isinstance(c, PiecewiseConstant):
        return {"type": "piecewise", "breakpoints": list(c.breakpoints),
                "levels": list(c.levels)}
    bps, lv = segments(c)
    return {"type": "piecewise", "breakpoints": bps.tolist(), "levels": lv.tolist()}


def control_from_dict(d: dict) -> ControlLaw:
    kind = d.get("type")
    if kind == "constant":
        return Constant(float(d["level"]))
    if kind == "switching":
        return Switching(float(d["tau"]))
    if kind == "piecewise":
        bps = tuple(d.get("breakpoints", ()))
        if not bps:
            return Constant(float(d["levels"][0]))
        return PiecewiseConstant(bps, tuple(d["levels"]))
    raise InvalidInput(f"unknown control type {kind!r}")
