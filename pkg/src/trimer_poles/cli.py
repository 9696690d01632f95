"""Command-line interface: ``trimer-poles {solve2b,solve3b,sweep,bic}``.

Settings are resolved as documented defaults, then a preset, then a JSON
config file, then explicit flags. Exit codes: 0 success, 1 runtime or I/O
failure, 2 usage error, 3 pole lost (partial output written).
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import io
import json
import math
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .basis import BasisSpec, ConfigError, build_basis
from .eigen import PoleLostError, Tolerances
from .model import THETA_MAX, DomainError, SystemParams, reduced_masses
from .plot import trajectory_svg, width_svg
from .trace import (BracketError, PoleTrajectory, SweepSpec, TracePoint, bic_scan,
                    default_jobs, find_minima, solve_point, stable_resonances, sweep)
from .twobody import solve2b_gem, solve2b_grid

EXIT_OK, EXIT_RUNTIME, EXIT_USAGE, EXIT_LOST = 0, 1, 2, 3
CSV_HEADER = ["param", "re_E", "im_E", "gamma", "e0_2b", "e1_2b", "status"]
FORMATS = ("csv", "json", "svg")

REFERENCE = dict(v0=-4.0, mu_g=1.0, beta=5.0)
REFERENCE_POLE = [-0.845, 0.0]

DEFAULTS = dict(
    v0=-4.0, mu_g=1.0, beta=5.0, theta=0.25,
    param=None, start=None, stop=None, points=None,
    seed=None, anchor=None, out="out", formats=list(FORMATS),
    jobs=None, basis={}, oracle=False,
)

# Sweeps are anchored at the reference point, where the resonance is
# identified unambiguously, and followed outwards in both directions.
PRESETS = {
    "fig1-v0": dict(subcommand="bic", param="v0", start=-14.51, stop=-1.81, points=60,
                    mu_g=1.0, beta=5.0, anchor=-4.0, seed=REFERENCE_POLE),
    "fig1-mug": dict(subcommand="bic", param="mu_g", start=0.3, stop=2.22, points=50,
                     v0=-4.0, beta=5.0, anchor=1.0, seed=REFERENCE_POLE),
    "fig2-beta": dict(subcommand="bic", param="beta", start=1.0, stop=20.0, points=120,
                      v0=-4.0, mu_g=1.0, anchor=5.0, seed=REFERENCE_POLE),
}
PRESETS["fig3"] = dict(subcommand="bic", group=("fig1-v0", "fig1-mug"))

CONFIG_KEYS = set(DEFAULTS) | {"subcommand", "preset"}


class UsageError(ValueError):
    pass


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="trimer-poles",
        description="Three-body resonance poles of two bosons and a third particle in 1D.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="subcommand", required=True)
    S = argparse.SUPPRESS

    def common(p):
        p.add_argument("--config", help="JSON file with settings", default=S)
        p.add_argument("--v0", type=float, default=S, help="interaction strength")
        p.add_argument("--mu-g", dest="mu_g", type=float, default=S, help="Gaussian range parameter")
        p.add_argument("--beta", type=float, default=S, help="boson mass ratio")
        p.add_argument("--out", default=S, help="output directory")
        p.add_argument("--format", dest="formats", default=S,
                       help="comma-separated subset of csv,json,svg")

    p = sub.add_parser("solve2b", help="dimer thresholds")
    common(p)
    p.add_argument("--oracle", action="store_true", default=S,
                   help="also run the finite-difference oracle")

    for name, text in (("solve3b", "three-body spectrum at one point"),
                       ("sweep", "pole trajectory along one parameter"),
                       ("bic", "trajectory plus refined width minima")):
        p = sub.add_parser(name, help=text)
        common(p)
        p.add_argument("--theta", type=float, default=S, help="complex-scaling angle (rad)")
        p.add_argument("--basis", type=json.loads, default=S,
                       help="JSON object overriding basis fields")
        if name == "solve3b":
            continue
        p.add_argument("--preset", choices=sorted(PRESETS), default=S)
        p.add_argument("--param", choices=("v0", "mu_g", "beta"), default=S)
        p.add_argument("--from", dest="start", type=float, default=S)
        p.add_argument("--to", dest="stop", type=float, default=S)
        p.add_argument("--points", type=int, default=S)
        p.add_argument("--seed", type=float, nargs=2, metavar=("RE", "IM"), default=S,
                       help="energy guess for the pole at the anchor")
        p.add_argument("--anchor", type=float, default=S,
                       help="parameter value where tracking starts")
        p.add_argument("--jobs", type=int, default=S,
                       help="worker processes (default: $TRIMER_POLES_JOBS or CPU count)")
    return parser


def _read_config(path: str) -> dict:
    try:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
    except OSError as exc:
        raise OSError(f"cannot read config {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise UsageError(f"config {path} is not valid JSON: {exc}") from exc
    if not isinstance(data, dict):
        raise UsageError("config file must hold a JSON object")
    unknown = set(data) - CONFIG_KEYS
    if unknown:
        raise UsageError(f"unknown config keys: {sorted(unknown)}")
    return data


def parse_config(argv=None) -> dict:
    """Resolve the run configuration; raises UsageError on bad input."""
    args = vars(build_parser().parse_args(argv))
    subcommand = args.pop("subcommand")
    file_cfg = _read_config(args.pop("config")) if "config" in args else {}
    if file_cfg.get("subcommand", subcommand) != subcommand:
        raise UsageError(f"config is for {file_cfg['subcommand']!r}, not {subcommand!r}")
    file_cfg.pop("subcommand", None)
    cfg = dict(DEFAULTS)
    preset = args.get("preset", file_cfg.get("preset"))
    if preset is not None:
        if preset not in PRESETS:
            raise UsageError(f"unknown preset {preset!r}")
        cfg.update({k: v for k, v in PRESETS[preset].items() if k != "subcommand"})
    cfg.update(file_cfg)
    cfg.update(args)
    cfg["subcommand"] = subcommand
    cfg["preset"] = preset
    if isinstance(cfg["formats"], str):
        cfg["formats"] = [f.strip() for f in cfg["formats"].split(",") if f.strip()]
    _validate(cfg)
    return cfg


def _validate(cfg: dict):
    bad = set(cfg["formats"]) - set(FORMATS)
    if bad:
        raise UsageError(f"unknown output formats: {sorted(bad)}")
    if not 0 <= cfg["theta"] < THETA_MAX:
        raise UsageError(f"theta must lie in [0, pi/4), got {cfg['theta']}")
    if cfg["jobs"] is not None and cfg["jobs"] < 1:
        raise UsageError("jobs must be positive")
    try:
        SystemParams(cfg["v0"], cfg["mu_g"], cfg["beta"], cfg["theta"])
        if not isinstance(cfg["basis"], dict):
            raise UsageError("basis must be a JSON object")
        basis_spec(cfg)
    except (DomainError, ConfigError, TypeError) as exc:
        raise UsageError(str(exc)) from exc
    if cfg["subcommand"] in ("sweep", "bic") and "group" not in cfg:
        missing = [k for k in ("param", "start", "stop", "points") if cfg[k] is None]
        if missing:
            raise UsageError(f"sweep needs --param/--from/--to/--points (missing {missing})")
        if cfg["points"] < 2:
            raise UsageError("a sweep needs at least two points")
        try:
            sweep_spec(cfg)
        except (DomainError, ValueError) as exc:
            raise UsageError(str(exc)) from exc


def basis_spec(cfg: dict) -> BasisSpec:
    return BasisSpec.from_dict({**BasisSpec().to_dict(), **cfg["basis"]})


def sweep_spec(cfg: dict) -> SweepSpec:
    values = tuple(float(v) for v in np.linspace(cfg["start"], cfg["stop"], cfg["points"]))
    fixed = {k: float(cfg[k]) for k in ("v0", "mu_g", "beta") if k != cfg["param"]}
    seed = complex(*cfg["seed"]) if cfg["seed"] is not None else None
    return SweepSpec(cfg["param"], values, fixed, basis_spec(cfg), cfg["theta"],
                     seed=seed, anchor=cfg["anchor"])


# -- output helpers -----------------------------------------------------------

def _num(x):
    if x is None:
        return None
    if isinstance(x, complex):
        return [_num(x.real), _num(x.imag)]
    x = float(x)
    return x if math.isfinite(x) else str(x)


def _cell(x) -> str:
    return "" if x is None else repr(float(x))


def trajectory_csv(traj: PoleTrajectory) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_HEADER)
    for p in traj.points:
        writer.writerow([_cell(p.param), _cell(p.energy.real), _cell(p.energy.imag),
                         _cell(p.gamma), _cell(p.e0_2b), _cell(p.e1_2b), p.status])
    return buf.getvalue()


def read_trajectory_csv(text: str, parameter: str = "") -> PoleTrajectory:
    rows = list(csv.reader(io.StringIO(text)))
    if rows[0] != CSV_HEADER:
        raise ValueError("unexpected trajectory header")
    pts = []
    for param, re, im, gamma, e0, e1, status in rows[1:]:
        pts.append(TracePoint(float(param), complex(float(re), float(im)), float(gamma),
                              float(e0), float(e1) if e1 else None, status))
    return PoleTrajectory(parameter, tuple(pts))


def _write(out: Path, name: str, text: str):
    with open(out / name, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)


def _json(data) -> str:
    return json.dumps(data, indent=2, allow_nan=False) + "\n"


def _provenance(cfg: dict, spec: SweepSpec | None = None) -> dict:
    tol = spec.tol if spec is not None else Tolerances()
    data = {
        "program": "trimer-poles", "version": __version__,
        "subcommand": cfg["subcommand"], "preset": cfg["preset"],
        "params": {k: cfg[k] for k in ("v0", "mu_g", "beta", "theta")},
        "basis": basis_spec(cfg).to_dict(),
        "tolerances": dataclasses.asdict(tol),
        "units": "hbar = m_X = r0 = 1",
    }
    if spec is not None:
        data["sweep"] = {
            "parameter": spec.parameter, "values": list(spec.values), "fixed": spec.fixed,
            "anchor": spec.anchor, "seed": _num(spec.seed), "jump_max": spec.jump_max,
            "max_depth": spec.max_depth, "bic_gamma_max": 1e-4,
            "bic_param_tol": 1e-4, "bic_gamma_tol": 1e-10,
        }
    return data


def emit_outputs(traj: PoleTrajectory, records, cfg: dict, spec: SweepSpec, out: Path,
                 extra: dict | None = None):
    """Write trajectory.csv, run.json and the two SVG plots into ``out``."""
    out.mkdir(parents=True, exist_ok=True)
    formats = cfg["formats"]
    if "csv" in formats:
        _write(out, "trajectory.csv", trajectory_csv(traj))
    if "svg" in formats:
        label = {"v0": "v0", "mu_g": "mu_g", "beta": "beta"}[traj.parameter]
        _write(out, "trajectory.svg", trajectory_svg(traj, records,
                                                     title=f"Pole trajectory vs {label}"))
        _write(out, "width.svg", width_svg(traj, records, title=f"Decay width vs {label}"))
    if "json" in formats:
        data = _provenance(cfg, spec)
        data["trajectory"] = [dict(param=p.param, energy=_num(p.energy), gamma=p.gamma,
                                   e0_2b=p.e0_2b, e1_2b=p.e1_2b, status=p.status)
                              for p in traj.points]
        data["width_minima"] = [dict(param=r.param, gamma_min=r.gamma_min,
                                     bracket=list(r.bracket), energy=_num(r.energy),
                                     evaluations=r.evaluations) for r in records]
        data["lost"] = traj.lost
        if extra:
            data.update(extra)
        _write(out, "run.json", _json(data))


# -- subcommands --------------------------------------------------------------

def run_solve2b(cfg: dict) -> int:
    mu12 = reduced_masses(cfg["beta"]).mu12
    gem = solve2b_gem(cfg["v0"], cfg["mu_g"], mu12)
    result = {"mu12": mu12, "gem": list(gem.energies)}
    if cfg["oracle"]:
        result["grid"] = list(solve2b_grid(cfg["v0"], cfg["mu_g"], mu12).energies)
    for key in ("gem", "grid"):
        if key in result:
            print(f"{key}: " + ", ".join(f"{e:.10f}" for e in result[key]))
    if "json" in cfg["formats"]:
        out = Path(cfg["out"])
        out.mkdir(parents=True, exist_ok=True)
        data = _provenance(cfg)
        data.pop("basis")
        data["dimers"] = result
        _write(out, "run.json", _json(data))
    return EXIT_OK


def run_solve3b(cfg: dict) -> int:
    params = SystemParams(cfg["v0"], cfg["mu_g"], cfg["beta"], cfg["theta"])
    basis = build_basis(basis_spec(cfg))
    sol = solve_point(params, basis)
    stable = stable_resonances(params, basis)
    thr = sol.thresholds
    print(f"thresholds: e0 = {thr.e0_2b:.10f}, e1 = {thr.e1_2b}")
    for p in sol.points:
        if p.kind == "bound":
            print(f"bound      {p.energy.real:.10f}")
    for p in stable:
        print(f"resonance  {p.energy.real:.10f} {p.energy.imag:+.3e}i  "
              f"|dE/dtheta| = {p.theta_stability:.2e}")
    out = Path(cfg["out"])
    out.mkdir(parents=True, exist_ok=True)
    if "csv" in cfg["formats"]:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["re_E", "im_E", "kind"])
        for p in sol.points:
            w.writerow([repr(p.energy.real), repr(p.energy.imag), p.kind])
        _write(out, "spectrum.csv", buf.getvalue())
    if "json" in cfg["formats"]:
        data = _provenance(cfg)
        data["thresholds"] = dataclasses.asdict(thr)
        data["bound"] = [_num(p.energy) for p in sol.points if p.kind == "bound"]
        data["resonances"] = [dict(energy=_num(p.energy), theta_stability=p.theta_stability)
                              for p in stable]
        _write(out, "run.json", _json(data))
    return EXIT_OK


def _run_one_sweep(cfg: dict, out: Path, refine: bool):
    spec = sweep_spec(cfg)
    jobs = cfg["jobs"] if cfg["jobs"] is not None else default_jobs()
    traj = sweep(spec, jobs=jobs)
    records = bic_scan(traj, spec) if refine else []
    emit_outputs(traj, records, cfg, spec, out)
    print(f"{spec.parameter}: {len(traj.points)} points, "
          f"{len(find_minima(traj))} width minima below 1e-4")
    for r in records:
        print(f"  minimum at {spec.parameter} = {r.param:.6f}: Gamma = {r.gamma_min:.3e}, "
              f"E = {r.energy.real:.8f}")
    return traj, records


def run_sweep(cfg: dict, refine: bool = False) -> int:
    out = Path(cfg["out"])
    if "group" in cfg:
        lost, touches = False, {}
        for name in cfg["group"]:
            sub = {**cfg, **PRESETS[name], "preset": name}
            sub.pop("group")
            traj, records = _run_one_sweep(sub, out / name, refine)
            lost |= traj.lost
            touches[name] = [_num(r.energy) for r in records]
        if "json" in cfg["formats"]:
            summary = _provenance(cfg)
            summary["touch_energies"] = touches
            _write(out, "run.json", _json(summary))
        return EXIT_LOST if lost else EXIT_OK
    traj, _ = _run_one_sweep(cfg, out, refine)
    return EXIT_LOST if traj.lost else EXIT_OK


def main(argv=None) -> int:
    try:
        cfg = parse_config(argv)
    except UsageError as exc:
        print(f"trimer-poles: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except SystemExit as exc:
        return int(exc.code or 0)
    except OSError as exc:
        print(f"trimer-poles: error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    try:
        if cfg["subcommand"] == "solve2b":
            return run_solve2b(cfg)
        if cfg["subcommand"] == "solve3b":
            return run_solve3b(cfg)
        return run_sweep(cfg, refine=cfg["subcommand"] == "bic")
    except PoleLostError as exc:
        print(f"trimer-poles: pole lost: {exc}", file=sys.stderr)
        return EXIT_LOST
    except (OSError, ArithmeticError, BracketError, RuntimeError, ValueError) as exc:
        print(f"trimer-poles: error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
