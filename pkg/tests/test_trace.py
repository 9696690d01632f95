import math

import numpy as np
import pytest

from trimer_poles.basis import BasisSpec
from trimer_poles.eigen import SpectrumPoint, Thresholds, classify
from trimer_poles.trace import (INSERTED, LOST, TERMINATED_BOUND, TERMINATED_UNBOUND, TRACKED,
                                BracketError, PointSolution, PoleTrajectory, SweepSpec,
                                TracePoint, bic_scan, find_minima, golden_section, refine_bic,
                                sweep, width_profile)

THR = Thresholds(-3.0, -0.5)
TINY = BasisSpec.plain(1, 1.0, 1.0, 1, 1.0, 1.0)


def stub_solver(pole, decoys=(-2.0 - 0.4j, -1.0 - 0.3j)):
    """Solver returning ``pole(v0)`` plus fixed decoys; S is the identity."""
    def solve(params, basis, tol):
        energies = list(decoys)
        e = pole(params.v0)
        if e is not None:
            energies.append(e)
        pts = [SpectrumPoint(complex(x), np.eye(len(energies))[i]) for i, x in enumerate(energies)]
        pts = classify(pts, THR, params.theta, tol)
        return PointSolution(params, THR, pts, np.eye(len(energies)))
    return solve


def make_spec(values, seed, **kw):
    return SweepSpec("v0", tuple(values), {"mu_g": 1.0, "beta": 5.0}, basis=TINY,
                     seed=seed, **kw)


def test_golden_section_parabola():
    x, fx, bracket, calls = golden_section(lambda x: (x - 0.3) ** 2 + 1.0, 0.0, 1.0, xtol=1e-6)
    assert x == pytest.approx(0.3, abs=1e-6)
    assert bracket[1] - bracket[0] < 1e-6
    assert calls == pytest.approx(math.log(1e-6) / math.log(0.618), abs=3)


def test_golden_section_stops_at_ftol():
    x, fx, _, calls = golden_section(lambda x: abs(x - 0.5), 0.0, 1.0, xtol=1e-12, ftol=0.1)
    assert fx < 0.1 and calls < 10


def test_sweep_spec_validation():
    with pytest.raises(ValueError):
        SweepSpec("gamma", (1.0, 2.0), {"mu_g": 1.0, "beta": 5.0})
    with pytest.raises(ValueError):
        SweepSpec("v0", (1.0, 2.0), {"mu_g": 1.0})
    with pytest.raises(ValueError):
        SweepSpec("v0", (-1.0, -2.0, -1.5), {"mu_g": 1.0, "beta": 5.0})
    with pytest.raises(ValueError):
        SweepSpec("v0", (-1.0,), {"mu_g": 1.0, "beta": 5.0})
    with pytest.raises(ValueError):
        SweepSpec("mu_g", (-1.0, 1.0), {"v0": -4.0, "beta": 5.0})
    spec = make_spec([-5, -4, -3], None, anchor=-3.9)
    assert spec.anchor_index() == 1


def test_smooth_tracking_from_anchor():
    pole = lambda v: complex(-1.5 + 0.01 * v, -1e-3 * (1 + (v + 4) ** 2))
    values = np.linspace(-6, -2, 9)
    traj = sweep(make_spec(values, -1.54 - 0.001j, anchor=-4.0), jobs=1,
                 solver=stub_solver(pole))
    assert [p.param for p in traj.points] == pytest.approx(list(values))
    assert all(p.status == TRACKED for p in traj.points)
    for p in traj.points:
        assert p.energy == pytest.approx(pole(p.param))
        assert p.gamma == pytest.approx(-2 * p.energy.imag)
        assert p.e0_2b == THR.e0_2b
    assert not traj.lost
    assert width_profile(traj)[0][1] == pytest.approx(0.01)
    assert width_profile(traj, floor=0.02)[0][1] == 0.02


def test_fast_motion_triggers_bisection():
    pole = lambda v: complex(-1.5 + 0.3 * (v + 4), -1e-2)
    values = np.linspace(-4, -3, 5)
    traj = sweep(make_spec(values, pole(-4), jump_max=0.05), jobs=1, solver=stub_solver(pole))
    params = [p.param for p in traj.points]
    assert params == sorted(params)
    inserted = [p for p in traj.points if p.status == INSERTED]
    assert len(inserted) == 4
    for p in inserted:
        assert p.energy == pytest.approx(pole(p.param))


def test_vanishing_pole_is_lost():
    pole = lambda v: complex(-1.5, -1e-2) if v < -3.4 else None
    traj = sweep(make_spec(np.linspace(-4, -3, 6), pole(-4), max_depth=2), jobs=1,
                 solver=stub_solver(pole, decoys=(-2.5 - 0.4j,)))
    assert traj.lost
    assert traj.points[-1].status == LOST
    assert all(p.param < -3.4 for p in traj.tracked())


def test_strong_end_terminates_bound():
    # the pole crosses below the lowest threshold onto the real axis
    pole = lambda v: complex(-2.8 + 0.1 * (v + 4), 0.0 if v < -5.9 else -1e-3)
    traj = sweep(make_spec(np.linspace(-7, -4, 13), pole(-4), anchor=-4.0), jobs=1,
                 solver=stub_solver(pole))
    # the first two real points below e0 end the trajectory
    assert [p.status for p in traj.points[:2]] == [TERMINATED_BOUND] * 2
    assert [p.param for p in traj.points[:2]] == pytest.approx([-6.5, -6.25])
    assert all(p.energy.real < THR.e0_2b for p in traj.points[:2])
    assert all(p.status == TRACKED for p in traj.points[2:])


def test_weak_end_terminates_unbound():
    theta = 0.25
    ray = np.exp(-2j * theta)
    pole = lambda v: complex(-0.05 * (v + 1) ** 2, -1e-3) if v < -1.5 else 1e-4 * ray
    traj = sweep(make_spec(np.linspace(-2.5, -1.0, 7), pole(-2.5)), jobs=1,
                 solver=stub_solver(pole, decoys=(-2.0 - 0.4j,)))
    assert traj.points[-1].status == TERMINATED_UNBOUND
    assert traj.points[-1].param == pytest.approx(-1.5)


def _traj(gammas, params=None):
    params = params if params is not None else np.arange(len(gammas), dtype=float)
    return PoleTrajectory("v0", tuple(
        TracePoint(float(x), complex(-1.0, -g / 2), g, -3.0, -0.5, TRACKED)
        for x, g in zip(params, gammas)))


def test_find_minima():
    traj = _traj([1e-3, 5e-5, 2e-4, 5e-4, 2e-3, 1e-3, 3e-3, 1e-7])
    # the dip at index 5 is above the threshold and the endpoint is not interior
    assert find_minima(traj) == [1]
    assert find_minima(traj, gamma_max=1.0) == [1, 5]


def test_refine_bic_locates_minimum():
    target = -4.137
    pole = lambda v: complex(-1.2, -0.5 * 3e-3 * (v - target) ** 2 - 0.5e-9)
    values = np.linspace(-5, -3, 9)
    spec = make_spec(values, pole(-5))
    traj = sweep(spec, jobs=1, solver=stub_solver(pole))
    (bic,) = bic_scan(traj, spec, xtol=1e-6, solver=stub_solver(pole))
    assert bic.param == pytest.approx(target, abs=1e-5)
    assert bic.gamma_min < 1e-8
    assert bic.bracket[0] <= bic.param <= bic.bracket[1]
    assert bic.evaluations > 5


def test_refine_bic_rejects_escaping_minimum():
    # the sampled dip hides a decreasing function: the minimum sits at the bracket edge
    traj = _traj([1e-4, 5e-5, 6e-5], params=[0.0, 1.0, 2.0])
    spec = make_spec([-5.0, -4.0, -3.0], None)
    escaping = stub_solver(lambda v: complex(-1.0, -1e-4 / 2))
    with pytest.raises(BracketError):
        refine_bic(traj, 1, spec.__class__("v0", (0.0, 1.0, 2.0), {"mu_g": 1.0, "beta": 5.0},
                                           basis=TINY), solver=escaping)
