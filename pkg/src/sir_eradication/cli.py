"""Command-line front end.

Settings are resolved in increasing priority: built-in defaults, ``--preset``,
a ``key=value`` file given by ``--config``, ``SIR_ERAD_*`` environment
variables and finally explicit flags.  Arrays are written as CSV (or JSON with
``--format json``), scalars and reports always as JSON.  Every file carries
the resolved configuration and its content hash, and nothing time- or
host-dependent, so identical settings give byte-identical files.

Exit codes: 0 success, 1 a probe or condition failed, 2 bad configuration or
I/O, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import logging
import math
import os
import sys
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Optional

import numpy as np

from . import __version__
from .analysis import default_suite
from .controls import Constant, Switching, control_to_dict
from .dynamics import IntegratorConfig, ModelParams, State, integrate
from .eradication import eradication_time
from .errors import InvalidInput, NumericalFailure, SIRError
from .grids import GridSpec
from .hjb import full_vaccination_grid, hjb_residual, obstacle_residual, solve_hjb_semilagrangian
from .pmp import (adjoint_backward, adjoint_from_gradients, check_necessary_conditions,
                  optimal_trajectory)
from .value import SearchConfig, classify_free_boundary, value_by_switching

log = logging.getLogger("sir_eradication")

EXIT_OK, EXIT_PROBE, EXIT_CONFIG, EXIT_NUMERICAL = 0, 1, 2, 3
ENV_PREFIX = "SIR_ERAD_"
PROGRAM = "sir-eradication"

DEFAULTS = {
    "beta": 0.5, "gamma": 2.0, "mu": 1.0, "x0": 2.0, "y0": 3.0, "tau": None,
    "t_end": None, "step": 1e-3, "grid": "21,21", "domain": "0.01,4,4", "seed": 0,
    "n_tau": 512, "out": "out", "format": "csv", "preset": None,
}
# figure set-ups; mu only matters for the stopping rule
PRESETS = {
    "fig1": {"beta": 0.5, "gamma": 2.0, "mu": 1.0, "x0": 2.0, "y0": 3.0, "t_end": 5.0},
    "fig2": {"beta": 2.0, "gamma": 2.0, "mu": 0.1, "x0": 2.0, "y0": 1.0, "t_end": 10.0},
}
KEYS = tuple(DEFAULTS)


@dataclass(frozen=True)
class RunConfig:
    params: ModelParams
    integrator: IntegratorConfig
    grid: GridSpec
    search: SearchConfig
    seed: int
    output_dir: Path
    format: str
    x0: float
    y0: float
    tau: Optional[float] = None
    t_end: Optional[float] = None
    preset: Optional[str] = None

    def to_dict(self) -> dict:
        """Everything that affects results; the output directory is left out."""
        return {
            "params": asdict(self.params),
            "integrator": asdict(self.integrator),
            "grid": asdict(self.grid),
            "search": asdict(self.search),
            "seed": self.seed, "format": self.format, "x0": self.x0, "y0": self.y0,
            "tau": self.tau, "t_end": self.t_end, "preset": self.preset,
        }

    def content_hash(self) -> str:
        return git_blob_hash(canonical_json(self.to_dict()))


def canonical_json(obj) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"), allow_nan=False)


def git_blob_hash(text: str) -> str:
    data = text.encode()
    return hashlib.sha1(b"blob %d\0" % len(data) + data).hexdigest()


def read_config_file(path) -> dict:
    out = {}
    for n, line in enumerate(Path(path).read_text().splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise InvalidInput(f"{path}:{n}: expected key=value")
        key, val = (p.strip() for p in line.split("=", 1))
        key = key.lstrip("-").replace("-", "_")
        if key not in KEYS:
            raise InvalidInput(f"{path}:{n}: unknown key {key!r}")
        out[key] = val
    return out


def read_env(environ) -> dict:
    return {k: environ[ENV_PREFIX + k.upper()] for k in KEYS if ENV_PREFIX + k.upper() in environ}


def _pair(text, n, cast, name):
    parts = [p.strip() for p in str(text).split(",")]
    if len(parts) != n:
        raise InvalidInput(f"--{name} needs {n} comma-separated values, got {text!r}")
    try:
        return [cast(p) for p in parts]
    except ValueError as exc:
        raise InvalidInput(f"--{name}: {exc}") from None


def _num(raw, key, cast=float, optional=False):
    v = raw[key]
    if v is None or (optional and str(v).lower() in ("", "none")):
        return None
    try:
        out = cast(v)
    except (TypeError, ValueError):
        raise InvalidInput(f"{key}: cannot parse {v!r}") from None
    if cast is float and not math.isfinite(out):
        raise InvalidInput(f"{key} must be finite")
    return out


def resolve(flags: dict, environ=None) -> dict:
    """Merge defaults, preset, config file, environment and flags."""
    environ = os.environ if environ is None else environ
    file_vals = read_config_file(flags["config"]) if flags.get("config") else {}
    env_vals = read_env(environ)
    given = {k: v for k, v in flags.items() if k in KEYS and v is not None}
    preset = given.get("preset") or env_vals.get("preset") or file_vals.get("preset")
    raw = dict(DEFAULTS)
    if preset:
        if preset not in PRESETS:
            raise InvalidInput(f"unknown preset {preset!r}")
        raw.update(PRESETS[preset])
    for layer in (file_vals, env_vals, given):
        raw.update(layer)
    raw["preset"] = preset
    return raw


def build_config(raw: dict) -> RunConfig:
    params = ModelParams(_num(raw, "beta"), _num(raw, "gamma"), _num(raw, "mu"))
    integrator = IntegratorConfig(step=_num(raw, "step"))
    nx, ny = _pair(raw["grid"], 2, int, "grid")
    xmin, xmax, ymax = _pair(raw["domain"], 3, float, "domain")
    grid = GridSpec(xmin, xmax, params.mu, ymax, nx, ny)
    n_tau = _num(raw, "n_tau", int)
    if n_tau < 3:
        raise InvalidInput("n_tau must be >= 3")
    fmt = str(raw["format"])
    if fmt not in ("csv", "json"):
        raise InvalidInput(f"format must be csv or json, got {fmt!r}")
    x0, y0 = _num(raw, "x0"), _num(raw, "y0")
    if x0 < 0 or y0 < params.mu:
        raise InvalidInput("need x0 >= 0 and y0 >= mu")
    tau = _num(raw, "tau", optional=True)
    if tau is not None and tau < 0:
        raise InvalidInput("tau must be >= 0")
    t_end = _num(raw, "t_end", optional=True)
    if t_end is not None and t_end < 0:
        raise InvalidInput("t_end must be >= 0")
    return RunConfig(params, integrator, grid, SearchConfig(n_grid=n_tau),
                     _num(raw, "seed", int), Path(str(raw["out"])), fmt, x0, y0, tau, t_end,
                     raw.get("preset"))


# ---------------------------------------------------------------- output


def metadata(cfg: RunConfig, command: str) -> dict:
    return {"program": PROGRAM, "version": __version__, "command": command,
            "config": cfg.to_dict(), "config_hash": cfg.content_hash()}


def _clean(v):
    if isinstance(v, dict):
        return {k: _clean(a) for k, a in v.items()}
    if isinstance(v, (list, tuple, np.ndarray)):
        return [_clean(a) for a in v]
    if isinstance(v, (np.floating, float)):
        v = float(v)
        return v if math.isfinite(v) else None
    if isinstance(v, np.integer):
        return int(v)
    if isinstance(v, np.bool_):
        return bool(v)
    return v


def write_json(path: Path, obj) -> Path:
    path.write_text(json.dumps(_clean(obj), indent=2, sort_keys=True, allow_nan=False) + "\n")
    return path


def _comment(cfg: RunConfig, command: str) -> str:
    return canonical_json(metadata(cfg, command))


def write_table(cfg: RunConfig, command: str, stem: str, columns: dict) -> Path:
    """Column arrays as ``stem.csv`` or ``stem.json`` according to the format."""
    if cfg.format == "json":
        return write_json(cfg.output_dir / f"{stem}.json",
                          {"metadata": metadata(cfg, command), "columns": columns})
    path = cfg.output_dir / f"{stem}.csv"
    names = list(columns)
    data = np.column_stack([np.asarray(columns[k], float) for k in names])
    np.savetxt(path, data, fmt="%.17g", delimiter=",", comments="",
               header=f"# {_comment(cfg, command)}\n" + ",".join(names))
    return path


def read_table(path: Path) -> dict:
    if path.suffix == ".json":
        return {k: np.asarray(v, float) for k, v in json.loads(path.read_text())["columns"].items()}
    with open(path) as fh:
        lines = [ln for ln in fh if not ln.startswith("#")]
    names = lines[0].strip().split(",")
    data = np.loadtxt(lines[1:], delimiter=",", ndmin=2)
    return {k: data[:, n] for n, k in enumerate(names)}


# --------------------------------------------------------------- commands


def _control(cfg: RunConfig):
    return Constant(0.0) if cfg.tau is None else Switching(cfg.tau)


def cmd_simulate(cfg: RunConfig) -> int:
    control = _control(cfg)
    p = cfg.params
    t_end = cfg.t_end
    if t_end is None:
        t_end = eradication_time(p, control, cfg.x0, cfg.y0, cfg.integrator)
    horizon = max(t_end, cfg.integrator.horizon(p, cfg.x0, cfg.y0))
    run = IntegratorConfig(cfg.integrator.step, cfg.integrator.event_tol, horizon)
    traj = integrate(p, control, State(cfg.x0, cfg.y0), t_end, run)
    k = int(np.argmax(traj.i))
    write_table(cfg, "simulate", "trajectory",
                {"t": traj.times, "S": traj.s, "I": traj.i, "r": traj.control_values,
                 "R": traj.recovered})
    didt = (p.beta * traj.s - p.gamma) * traj.i
    summary = {"control": control_to_dict(control), "t_end": t_end, "samples": len(traj),
               "I_max": traj.i[k], "t_I_max": traj.times[k], "S_at_I_max": traj.s[k],
               "interior_I_max": 0 < k < len(traj) - 1,
               "dIdt_negative_everywhere": bool(np.all(didt < 0))}
    write_json(cfg.output_dir / "simulate.json", {"metadata": metadata(cfg, "simulate"),
                                                   "result": summary})
    return EXIT_OK


def cmd_value(cfg: RunConfig) -> int:
    res = value_by_switching(cfg.params, cfg.x0, cfg.y0, cfg.integrator, cfg.search)
    write_json(cfg.output_dir / "value.json", {"metadata": metadata(cfg, "value"),
                                                "result": res.as_dict()})
    return EXIT_OK


def _grid_hash(cfg: RunConfig) -> str:
    key = {"params": asdict(cfg.params), "grid": asdict(cfg.grid),
           "integrator": asdict(cfg.integrator)}
    return git_blob_hash(canonical_json(key))


def _crossval(cfg: RunConfig) -> Optional[Path]:
    """Per-node comparison once both the switching map and the HJB grid exist."""
    out = cfg.output_dir
    ext = cfg.format
    files = {name: out / f"{name}.{ext}" for name in ("grid", "hjb")}
    stamps = {name: out / f"{name}.stamp.json" for name in files}
    if not all(p.exists() for p in list(files.values()) + list(stamps.values())):
        return None
    want = _grid_hash(cfg)
    if any(json.loads(p.read_text()).get("grid_hash") != want for p in stamps.values()):
        log.info("grid and hjb outputs come from different settings; no cross-validation")
        return None
    a, b = read_table(files["grid"]), read_table(files["hjb"])
    if len(a["u"]) != len(b["u"]):
        return None
    diff = b["u"] - a["u"]
    # nodes on the target segment have u = 0 in both
    rel = np.divide(np.abs(diff), np.abs(a["u"]), out=np.where(diff == 0, 0.0, np.inf),
                    where=a["u"] != 0)
    return write_table(cfg, "crossval", "crossval",
                       {"x": a["x"], "y": a["y"], "u_switching": a["u"], "u_hjb": b["u"],
                        "diff": diff, "rel_diff": rel})


def _stamp(cfg: RunConfig, name: str):
    write_json(cfg.output_dir / f"{name}.stamp.json", {"grid_hash": _grid_hash(cfg)})


def cmd_grid(cfg: RunConfig) -> int:
    fb = classify_free_boundary(cfg.params, cfg.grid, cfg.integrator, cfg.search)
    X, Y = cfg.grid.mesh()
    write_table(cfg, "grid", "grid",
                {"x": X.ravel(), "y": Y.ravel(), "u": fb.u.ravel(), "u_full": fb.u_full.ravel(),
                 "tau_star": fb.tau_star.ravel(), "in_S": fb.in_S.ravel().astype(float)})
    _stamp(cfg, "grid")
    _crossval(cfg)
    return EXIT_OK


def cmd_hjb(cfg: RunConfig) -> int:
    p = cfg.params
    vals = solve_hjb_semilagrangian(p, cfg.grid)
    u_full = full_vaccination_grid(p, cfg.grid, cfg.integrator)
    res_h = hjb_residual(p, vals)
    res_o = obstacle_residual(p, vals, u_full).residual
    in_s = np.abs(vals.u - u_full) <= cfg.search.tol_rel * (1.0 + vals.u)
    X, Y = cfg.grid.mesh()
    write_table(cfg, "hjb", "hjb",
                {"x": X.ravel(), "y": Y.ravel(), "u": vals.u.ravel(),
                 "residual_hjb": res_h.ravel(), "residual_obstacle": res_o.ravel(),
                 "in_S": in_s.ravel().astype(float)})
    summary = {"iterations": vals.iterations, "sweep_change": vals.residual, "h": vals.h,
               "monotone": vals.monotone, "max_residual_hjb": float(np.nanmax(res_h)),
               "median_residual_hjb": float(np.nanmedian(res_h))}
    write_json(cfg.output_dir / "hjb.json", {"metadata": metadata(cfg, "hjb"), "result": summary})
    _stamp(cfg, "hjb")
    _crossval(cfg)
    return EXIT_OK


def cmd_pmp(cfg: RunConfig) -> int:
    p = cfg.params
    res = value_by_switching(p, cfg.x0, cfg.y0, cfg.integrator, cfg.search)
    control = Switching(res.tau_star)
    report = check_necessary_conditions(p, res.tau_star, cfg.x0, cfg.y0, cfg.integrator)
    traj = optimal_trajectory(p, control, cfg.x0, cfg.y0, cfg.integrator)
    grad = adjoint_from_gradients(p, control, cfg.x0, cfg.y0, cfg.integrator, trajectory=traj)
    back = adjoint_backward(p, control, traj, cfg.integrator)
    write_table(cfg, "pmp", "costate",
                {"t": traj.times, "S": traj.s, "I": traj.i, "r": traj.control_values,
                 "P": grad.P, "Q": grad.Q, "P_backward": back.P, "Q_backward": back.Q})
    write_json(cfg.output_dir / "pmp.json", {"metadata": metadata(cfg, "pmp"),
                                              "value": res.as_dict(), "result": report.as_dict()})
    return EXIT_OK if report.passed else EXIT_PROBE


def cmd_verify(cfg: RunConfig) -> int:
    reports = default_suite(cfg.params, cfg.x0, cfg.y0, cfg.integrator, cfg.search, cfg.seed)
    h = cfg.content_hash()
    rows = []
    for r in reports:
        d = r.as_dict()
        d["config_hash"] = h
        rows.append(d)
        print(f"{'PASS' if r.passed else 'FAIL'} {r.name}: worst={r.worst_violation:.3g} "
              f"tol={r.tolerance:.3g}")
    write_json(cfg.output_dir / "verify.json", rows)
    write_json(cfg.output_dir / "verify.meta.json", metadata(cfg, "verify"))
    return EXIT_OK if all(r.passed for r in reports) else EXIT_PROBE


COMMANDS = {"simulate": cmd_simulate, "value": cmd_value, "grid": cmd_grid, "hjb": cmd_hjb,
            "pmp": cmd_pmp, "verify": cmd_verify}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="key=value settings file")
    for key in ("beta", "gamma", "mu", "x0", "y0", "tau", "step"):
        common.add_argument(f"--{key}", type=float)
    common.add_argument("--t-end", dest="t_end", type=float)
    common.add_argument("--grid", metavar="NX,NY")
    common.add_argument("--domain", metavar="XMIN,XMAX,YMAX")
    common.add_argument("--seed", type=int)
    common.add_argument("--n-tau", dest="n_tau", type=int, help="coarse switching-time grid size")
    common.add_argument("--out", metavar="DIR")
    common.add_argument("--format", choices=("csv", "json"))
    common.add_argument("--preset", choices=tuple(PRESETS))
    common.add_argument("-v", "--verbose", action="store_true")

    parser = argparse.ArgumentParser(prog=PROGRAM, description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    helps = {"simulate": "integrate one trajectory", "value": "value and optimal switch at (x0, y0)",
             "grid": "value and contact set on the grid", "hjb": "semi-Lagrangian HJB grid solve",
             "pmp": "costates and necessary conditions at the optimum",
             "verify": "run the property probes"}
    for name in COMMANDS:
        sub.add_parser(name, parents=[common], help=helps[name])
    return parser


def main(argv=None, environ=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = build_config(resolve(vars(args), environ))
        cfg.output_dir.mkdir(parents=True, exist_ok=True)
        return COMMANDS[args.command](cfg)
    except InvalidInput as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (NumericalFailure, SIRError, FloatingPointError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
