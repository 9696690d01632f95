import numpy as np
import pytest

import oracles
from trimer_poles.eigen import (BOUND, CONTINUUM, RESONANCE, UNCLASSIFIED, MatrixPair,
                                OverlapError, PoleLostError, SpectrumPoint, Thresholds,
                                classify_energy, exchange_expectation, pair_pole, ray_distance,
                                residual, solve_generalized, theta_stability)
from trimer_poles.matel import assemble, assemble_sector
from trimer_poles.model import SystemParams
from trimer_poles.trace import solve_point, stable_resonances

REF = SystemParams(-4.0, 1.0, 5.0, 0.25)
THR = Thresholds(-2.6770975, -0.5971685)


def _random_pencil(n, seed=0):
    rng = np.random.default_rng(seed)
    A = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    B = rng.normal(size=(n, n))
    return MatrixPair(A + A.T, B @ B.T + n * np.eye(n))


def test_generalized_solver_matches_scipy():
    mats = _random_pencil(8)
    import scipy.linalg as sla
    ref = np.sort_complex(sla.eigvals(mats.H, mats.S))
    points = solve_generalized(mats)
    np.testing.assert_allclose(np.sort_complex([p.energy for p in points]), ref, atol=1e-10)
    for p in points:
        assert p.vector @ mats.S @ p.vector == pytest.approx(1.0, abs=1e-10)
        assert residual(mats, p) < 1e-10
    re = [p.energy.real for p in points]
    assert re == sorted(re)


def test_indefinite_overlap_raises():
    mats = MatrixPair(np.eye(2, dtype=complex), np.array([[1.0, 2.0], [2.0, 1.0]]))
    with pytest.raises(OverlapError):
        solve_generalized(mats)


def test_ray_distance():
    theta = 0.3
    on_ray = -1.0 + 2.0 * np.exp(-2j * theta)
    assert ray_distance(on_ray, -1.0, theta) == pytest.approx(0, abs=1e-14)
    assert ray_distance(-1.0 - 0.5j, -1.0, 0.0) == pytest.approx(0.5)
    # behind the threshold the distance is to the origin of the ray
    assert ray_distance(-2.0 + 0j, -1.0, theta) == pytest.approx(1.0)


def test_classification():
    theta = 0.25
    assert classify_energy(-3.0 + 1e-10j, THR, theta) == BOUND
    assert classify_energy(THR.e0_2b + 0.5 * np.exp(-2j * theta), THR, theta) == CONTINUUM
    assert classify_energy(0.3 * np.exp(-2j * theta), THR, theta) == CONTINUUM
    assert classify_energy(-0.8 - 1e-3j, THR, theta) == RESONANCE
    assert classify_energy(-0.8 + 1e-3j, THR, theta) == UNCLASSIFIED


def test_thresholds_values():
    assert Thresholds(-2.0).upper == 0.0
    assert Thresholds(-2.0, -0.5, (-0.1,)).values() == [-2.0, -0.5, -0.1, 0.0]


def test_pair_pole():
    pts = [SpectrumPoint(e, np.eye(3)[i]) for i, e in enumerate([-1.0, -0.5, -0.49])]
    assert pair_pole(pts, -0.9, 0.2) == 0
    with pytest.raises(PoleLostError):
        pair_pole(pts, -2.0, 0.1)
    # two close candidates: the overlap with the previous vector decides
    assert pair_pole(pts, -0.494, 0.1) == 2
    assert pair_pole(pts, -0.494, 0.1, S=np.eye(3), vector=np.eye(3)[1]) == 1


@pytest.fixture(scope="module")
def reference(default_basis):
    return solve_point(REF, default_basis)


def test_reference_spectrum(reference):
    low = [p.energy for p in reference.points[:3]]
    np.testing.assert_allclose(np.real(low), [-5.6190878, -3.8732824, -2.7534579], atol=2e-6)
    np.testing.assert_allclose(np.imag(low), 0, atol=2e-6)
    assert reference.points[0].kind == BOUND
    assert reference.thresholds.e0_2b == pytest.approx(-2.6770975075, abs=1e-9)
    assert reference.thresholds.e1_2b == pytest.approx(-0.5971685324, abs=1e-9)


def test_ground_trimer_matches_grid(reference):
    grid = oracles.grid_eigenvalues(REF.with_(theta=0.0), -5.7, k=1)
    assert reference.points[0].energy.real == pytest.approx(grid[0].real, abs=2e-4)


def test_bound_levels_match_grid(default_basis):
    # the even-parity grid holds both exchange sectors; all its trimers are exchange-even
    p0 = REF.with_(theta=0.0)
    grid = oracles.grid_eigenvalues(p0, -5.7, k=8, parity=1)
    grid = grid[grid.real < THR.e0_2b]
    even = solve_generalized(assemble_sector(default_basis, p0, 1))
    odd = solve_generalized(assemble_sector(default_basis, p0, -1))
    assert odd[0].energy.real > THR.e0_2b - 1e-3
    np.testing.assert_allclose([p.energy.real for p in even[:len(grid)]], grid.real, atol=2e-4)


def test_resonance_matches_grid(default_basis):
    res = stable_resonances(REF, default_basis)
    grid = oracles.grid_eigenvalues(REF, -0.845, k=1, L=12.0)
    e = min(res, key=lambda p: abs(p.energy - grid[0])).energy
    assert e.real == pytest.approx(grid[0].real, abs=5e-4)
    assert abs(e.imag) < 2e-4 and abs(grid[0].imag) < 2e-4


def test_residuals_small(default_basis, reference):
    mats = assemble_sector(default_basis, REF)
    worst = max(residual(mats, p) for p in reference.points[:: 25])
    assert worst < 1e-8


def test_exchange_sign_of_full_solution(small_basis):
    basis = small_basis
    full = assemble(basis, REF.with_(theta=0.0))
    points = solve_generalized(full)
    for p in points[:4]:
        assert abs(exchange_expectation(p.vector, full, basis)) == pytest.approx(1.0, abs=1e-6)
    for sign in (1, -1):
        sec = solve_generalized(full.sector(sign))
        v = basis.expand(sec[0].vector, sign)
        assert exchange_expectation(v, full, basis) == pytest.approx(sign, abs=1e-8)


def test_theta_stability(default_basis, reference):
    ground = reference.points[0]
    assert theta_stability(REF, default_basis, ground).theta_stability < 1e-6
    continuum = next(p for p in reference.points if p.kind == CONTINUUM
                     and abs(p.energy - reference.thresholds.e0_2b) > 0.5)
    assert theta_stability(REF, default_basis, continuum).theta_stability > 1e-2
