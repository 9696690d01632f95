"""Pole continuation along a parameter sweep and BIC refinement.

A sweep evaluates the exchange-symmetric spectrum at every parameter
value and follows one resonance pole from an anchor point outwards in
both directions. The width is ``Gamma = -2 Im E``. Local minima of the
width with ``Gamma < 1e-4`` are refined by golden-section search; these
are the bound states in the continuum.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .basis import BasisSpec, GaussBasis, build_basis
from .eigen import (BOUND, RESONANCE, UNCLASSIFIED, PoleLostError, SpectrumPoint,
                    Thresholds, Tolerances, classify, pair_pole, ray_distance,
                    solve_generalized)
from .matel import assemble_thetas
from .model import SystemParams
from .twobody import thresholds as dimer_thresholds

PARAMETERS = ("v0", "mu_g", "beta")
TRACKED = "tracked"
INSERTED = "refined-inserted"
LOST = "lost"
TERMINATED_BOUND = "terminated-bound"
TERMINATED_UNBOUND = "terminated-unbound"
INV_PHI = (math.sqrt(5) - 1) / 2

BIC_GAMMA_MAX = 1e-4
UNBOUND_RE = -1e-3


class BracketError(RuntimeError):
    """The width minimum left its bracketing interval."""


@dataclass(frozen=True)
class SweepSpec:
    """Parameter grid plus the fixed values of the other two parameters.

    Tracking starts at ``anchor`` (default: the first value), from the
    resonance nearest ``seed`` (default: the lowest-lying theta-stable
    resonance between the two lowest dimers).
    """

    parameter: str
    values: tuple[float, ...]
    fixed: dict
    basis: BasisSpec = field(default_factory=BasisSpec)
    theta: float = 0.25
    seed: complex | None = None
    anchor: float | None = None
    jump_max: float = 0.05
    max_depth: int = 8
    tol: Tolerances = field(default_factory=Tolerances)

    def __post_init__(self):
        if self.parameter not in PARAMETERS:
            raise ValueError(f"parameter must be one of {PARAMETERS}, got {self.parameter!r}")
        expected = set(PARAMETERS) - {self.parameter}
        if set(self.fixed) != expected:
            raise ValueError(f"fixed parameters must be exactly {sorted(expected)}")
        v = np.asarray(self.values, float)
        if len(v) < 2:
            raise ValueError("a sweep needs at least two values")
        steps = np.diff(v)
        if not (np.all(steps > 0) or np.all(steps < 0)):
            raise ValueError("sweep values must be strictly monotone")
        for x in v:
            self.params_at(float(x))

    def params_at(self, value: float) -> SystemParams:
        return SystemParams(theta=self.theta, **{self.parameter: value}, **self.fixed)

    def anchor_index(self) -> int:
        if self.anchor is None:
            return 0
        return int(np.argmin(np.abs(np.asarray(self.values) - self.anchor)))


@dataclass(frozen=True)
class TracePoint:
    param: float
    energy: complex
    gamma: float
    e0_2b: float
    e1_2b: float | None
    status: str


@dataclass(frozen=True)
class PoleTrajectory:
    parameter: str
    points: tuple[TracePoint, ...]

    def tracked(self) -> list[TracePoint]:
        """Points still attributed to the resonance (not lost or terminated)."""
        return [p for p in self.points if p.status in (TRACKED, INSERTED)]

    def width_profile(self) -> list[tuple[float, float]]:
        return width_profile(self)

    @property
    def lost(self) -> bool:
        return any(p.status == LOST for p in self.points)


@dataclass(frozen=True)
class BicRecord:
    param: float
    gamma_min: float
    bracket: tuple[float, float]
    energy: complex
    evaluations: int


@dataclass(eq=False)
class PointSolution:
    """Classified exchange-symmetric spectrum at one parameter point."""

    params: SystemParams
    thresholds: Thresholds
    points: list[SpectrumPoint]
    S: np.ndarray

    @property
    def energies(self) -> np.ndarray:
        return np.array([p.energy for p in self.points])


def solve_point(params: SystemParams, basis: GaussBasis,
                tol: Tolerances = Tolerances()) -> PointSolution:
    thr = dimer_thresholds(params)
    mats = assemble_thetas(basis, params, [params.theta], sector=1)[0]
    points = classify(solve_generalized(mats), thr, params.theta, tol)
    return PointSolution(params, thr, points, mats.S)


def stable_resonances(params: SystemParams, basis: GaussBasis, dtheta: float = 0.05,
                      tol: Tolerances = Tolerances()) -> list[SpectrumPoint]:
    """Discrete poles in ``(e0_2b, min(e1_2b, 0))`` whose energy is stationary in theta.

    Besides proper resonances this keeps off-ray points whose width lies
    below the numerical floor (kind ``unclassified``), i.e. poles at or
    near a bound state in the continuum.
    """
    thr = dimer_thresholds(params)
    pairs = assemble_thetas(basis, params, [params.theta, params.theta + dtheta], sector=1)
    base = classify(solve_generalized(pairs[0]), thr, params.theta, tol)
    other = np.array([p.energy for p in solve_generalized(pairs[1])])
    out = []
    for p in base:
        if p.kind not in (RESONANCE, UNCLASSIFIED) or \
                not thr.e0_2b < p.energy.real < thr.upper:
            continue
        drift = np.min(np.abs(other - p.energy)) / dtheta
        if drift < tol.tol_theta:
            out.append(SpectrumPoint(p.energy, p.vector, p.kind, drift))
    return out


class _Solutions:
    """Memoised point solutions, optionally computed ahead in a process pool."""

    def __init__(self, spec: SweepSpec, basis: GaussBasis, jobs: int, solver):
        self.spec, self.basis, self.jobs, self.solver = spec, basis, jobs, solver
        self.store: dict[float, PointSolution] = {}
        self.pool = ProcessPoolExecutor(jobs) if jobs > 1 else None

    def get(self, value: float, ahead=()) -> PointSolution:
        if value not in self.store:
            batch = [value] + [v for v in ahead if v not in self.store][: self.jobs - 1]
            args = [self.spec.params_at(v) for v in batch]
            if self.pool is None or len(batch) == 1:
                results = [self.solver(a, self.basis, self.spec.tol) for a in args]
            else:
                results = self.pool.map(self.solver, args, [self.basis] * len(args),
                                        [self.spec.tol] * len(args))
            self.store.update(zip(batch, results))
        return self.store[value]

    def forget(self, keep):
        self.store = {v: s for v, s in self.store.items() if v in keep}

    def close(self):
        if self.pool is not None:
            self.pool.shutdown()


@dataclass
class _State:
    value: float
    energy: complex
    vector: np.ndarray
    slope: complex = 0j


def _point(sol: PointSolution, value: float, energy: complex, status: str) -> TracePoint:
    thr = sol.thresholds
    return TracePoint(value, energy, -2 * energy.imag, thr.e0_2b, thr.e1_2b, status)


def _seed(sol: PointSolution, spec: SweepSpec, basis: GaussBasis) -> SpectrumPoint:
    if spec.seed is None:
        candidates = stable_resonances(sol.params, basis, tol=spec.tol)
        if not candidates:
            raise PoleLostError(f"no theta-stable resonance between the dimers at "
                                f"{spec.parameter}={sol.params}")
        return min(candidates, key=lambda p: p.energy.real)
    candidates = [p for p in sol.points if p.kind in (RESONANCE, UNCLASSIFIED)] or sol.points
    i = pair_pole(candidates, spec.seed, spec.tol.match_radius)
    return candidates[i]


def _follow(values, state: _State, cache: _Solutions, spec: SweepSpec) -> list[TracePoint]:
    """Continue the pole across ``values`` (the first one is the current state)."""
    out: list[TracePoint] = []
    bound_run = 0
    for i, target in enumerate(values[1:], start=1):
        cache.forget(set(values[i:i + cache.jobs]))
        steps = _advance(state, target, 0, cache, spec, values[i + 1:])
        for new_state, point, sol in steps:
            out.append(point)
            if point.status == LOST:
                return out
            kind = _kind(sol, point.energy)
            bound_run = bound_run + 1 if kind == BOUND else 0
            if bound_run >= 2:
                for k in (-2, -1):
                    out[k] = TracePoint(*[getattr(out[k], f) for f in
                                          ("param", "energy", "gamma", "e0_2b", "e1_2b")],
                                        TERMINATED_BOUND)
                return out
            if point.energy.real > UNBOUND_RE and \
                    ray_distance(point.energy, 0.0, spec.theta) < \
                    spec.tol.tol_ray(abs(point.energy)):
                out[-1] = TracePoint(point.param, point.energy, point.gamma,
                                     point.e0_2b, point.e1_2b, TERMINATED_UNBOUND)
                return out
            state = new_state
    return out


def _kind(sol: PointSolution, energy: complex) -> str:
    for p in sol.points:
        if p.energy == energy:
            return p.kind
    return ""


def _advance(state: _State, target: float, depth: int, cache: _Solutions,
             spec: SweepSpec, ahead=(), status: str = TRACKED) -> list:
    """Reach ``target`` from ``state``, bisecting while the pole jumps too far.

    Returns ``(state, point, solution)`` triples ending at ``target``;
    bisection midpoints carry status ``refined-inserted``.
    """
    sol = cache.get(target, ahead)
    predicted = state.energy + state.slope * (target - state.value)
    try:
        i = pair_pole(sol.points, predicted, spec.tol.match_radius, sol.S, state.vector)
        found = sol.points[i]
        ok = abs(found.energy - state.energy) <= spec.jump_max
    except PoleLostError:
        found, ok = None, False
    if ok:
        slope = (found.energy - state.energy) / (target - state.value)
        new = _State(target, found.energy, found.vector, slope)
        return [(new, _point(sol, target, found.energy, status), sol)]
    if depth >= spec.max_depth:
        energy = found.energy if found is not None else complex(math.nan, math.nan)
        return [(state, _point(sol, target, energy, LOST), sol)]
    mid = 0.5 * (state.value + target)
    left = _advance(state, mid, depth + 1, cache, spec, status=INSERTED)
    if left[-1][1].status == LOST:
        return left
    return left + _advance(left[-1][0], target, depth + 1, cache, spec, ahead, status)


def sweep(spec: SweepSpec, jobs: int | None = None, solver=solve_point) -> PoleTrajectory:
    """Follow the resonance over ``spec.values``; see module docstring."""
    jobs = default_jobs() if jobs is None else max(1, int(jobs))
    basis = build_basis(spec.basis)
    values = [float(v) for v in spec.values]
    start = spec.anchor_index()
    cache = _Solutions(spec, basis, jobs, solver)
    try:
        sol = cache.get(values[start], values[start + 1:])
        seed = _seed(sol, spec, basis)
        anchor = _State(values[start], seed.energy, seed.vector)
        first = _point(sol, values[start], seed.energy, TRACKED)
        forward = _follow(values[start:], anchor, cache, spec)
        backward = _follow(values[start::-1], anchor, cache, spec)
    finally:
        cache.close()
    return PoleTrajectory(spec.parameter, tuple(backward[::-1] + [first] + forward))


def default_jobs() -> int:
    env = os.environ.get("TRIMER_POLES_JOBS")
    if env:
        return max(1, int(env))
    return os.cpu_count() or 1


def width_profile(traj: PoleTrajectory, floor: float | None = None) -> list[tuple[float, float]]:
    """``(parameter, Gamma)`` for every resolved point; ``floor`` clamps for log plots."""
    out = []
    for p in traj.points:
        if p.status == LOST:
            continue
        g = p.gamma if floor is None else max(p.gamma, floor)
        out.append((p.param, g))
    return out


def find_minima(traj: PoleTrajectory, gamma_max: float = BIC_GAMMA_MAX) -> list[int]:
    """Indices into ``traj.points`` of strict interior width minima below ``gamma_max``."""
    idx = [i for i, p in enumerate(traj.points) if p.status in (TRACKED, INSERTED)]
    out = []
    for a, b, c in zip(idx, idx[1:], idx[2:]):
        g = traj.points[b].gamma
        if g < traj.points[a].gamma and g < traj.points[c].gamma and g < gamma_max:
            out.append(b)
    return out


def golden_section(f, lo: float, hi: float, xtol: float = 1e-4, ftol: float = 1e-10):
    """Minimise a unimodal ``f`` on ``[lo, hi]``.

    Returns ``(x, f(x), (lo, hi), evaluations)`` for the best point seen;
    stops when the bracket is narrower than ``xtol`` or ``f < ftol``.
    """
    a, b = min(lo, hi), max(lo, hi)
    c = b - INV_PHI * (b - a)
    d = a + INV_PHI * (b - a)
    fc, fd = f(c), f(d)
    calls = 2
    while b - a >= xtol and min(fc, fd) >= ftol:
        if fc < fd:
            b, d, fd = d, c, fc
            c = b - INV_PHI * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + INV_PHI * (b - a)
            fd = f(d)
        calls += 1
    x, fx = (c, fc) if fc < fd else (d, fd)
    return x, fx, (a, b), calls


def refine_bic(traj: PoleTrajectory, index: int, spec: SweepSpec,
               xtol: float = 1e-4, ftol: float = 1e-10, solver=solve_point) -> BicRecord:
    """Golden-section refinement of the width minimum at ``traj.points[index]``.

    Every evaluation is a full solve; the pole is identified as the
    eigenvalue nearest the linear interpolation of the trajectory.
    """
    pts = traj.points
    lo, mid, hi = pts[index - 1], pts[index], pts[index + 1]
    basis = build_basis(spec.basis)
    grid = np.array([lo.param, mid.param, hi.param])
    energies = np.array([lo.energy, mid.energy, hi.energy])
    order = np.argsort(grid)
    seen = {}

    def evaluate(x):
        guess = complex(np.interp(x, grid[order], energies[order].real),
                        np.interp(x, grid[order], energies[order].imag))
        sol = solver(spec.params_at(x), basis, spec.tol)
        i = pair_pole(sol.points, guess, spec.tol.match_radius)
        seen[x] = sol.points[i].energy
        return -2 * seen[x].imag

    x, g, bracket, calls = golden_section(evaluate, lo.param, hi.param, xtol, ftol)
    if not (g < lo.gamma and g < hi.gamma):
        raise BracketError(f"width minimum left the bracket [{lo.param}, {hi.param}]: "
                           f"Gamma={g:.3e} at {x:.6g}")
    return BicRecord(x, g, bracket, seen[x], calls)


def bic_scan(traj: PoleTrajectory, spec: SweepSpec, **kwargs) -> list[BicRecord]:
    """Refine every qualifying width minimum of a trajectory."""
    return [refine_bic(traj, i, spec, **kwargs) for i in find_minima(traj)]
