"""Generalised complex-symmetric eigenproblem and spectrum classification."""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np
import scipy.linalg as sla

from .matel import MatrixPair, assemble_thetas

BOUND, RESONANCE, CONTINUUM, UNCLASSIFIED = "bound", "resonance", "continuum", "unclassified"


class OverlapError(np.linalg.LinAlgError):
    """The overlap matrix is not numerically positive definite."""


class PoleLostError(RuntimeError):
    """No eigenvalue within the matching radius of the expected pole."""


@dataclass(frozen=True, eq=False)
class SpectrumPoint:
    energy: complex
    vector: np.ndarray
    kind: str = UNCLASSIFIED
    theta_stability: float = math.nan


@dataclass(frozen=True)
class Thresholds:
    """Dimer energies; ``e1_2b`` is None when only one dimer is bound.

    ``higher`` holds any further dimer energies. They only matter as
    origins of additional continuum rays.
    """

    e0_2b: float
    e1_2b: float | None = None
    higher: tuple[float, ...] = ()

    @property
    def upper(self) -> float:
        """``min(e1_2b, 0)``, the top of the window holding the resonance."""
        return 0.0 if self.e1_2b is None else min(self.e1_2b, 0.0)

    def values(self) -> list[float]:
        out = [self.e0_2b]
        if self.e1_2b is not None:
            out.append(self.e1_2b)
        return out + list(self.higher) + [0.0]


@dataclass(frozen=True)
class Tolerances:
    tol_bound: float = 1e-8
    ray_rel: float = 0.02
    ray_abs: float = 1e-6
    tol_theta: float = 1e-3
    match_radius: float = 0.1

    def tol_ray(self, distance: float) -> float:
        return self.ray_rel * distance + self.ray_abs


def solve_generalized(mats: MatrixPair) -> list[SpectrumPoint]:
    """All eigenpairs of ``H c = E S c``, sorted by real part.

    Uses a diagonally scaled Cholesky reduction ``S = L L^T``; vectors are
    normalised with the c-product, ``c^T S c = 1``.
    """
    H, S = mats.H, mats.S
    d = np.sqrt(np.diag(S))
    if not np.all(d > 0):
        raise OverlapError("overlap has non-positive diagonal")
    Ss = S / np.outer(d, d)
    try:
        L = np.linalg.cholesky(Ss)
    except np.linalg.LinAlgError:
        w = np.linalg.eigvalsh(Ss)
        raise OverlapError(f"Cholesky failed; scaled overlap eigenvalue range "
                           f"[{w[0]:.2e}, {w[-1]:.2e}]") from None
    Hs = H / np.outer(d, d)
    M = sla.solve_triangular(L, Hs, lower=True)
    M = sla.solve_triangular(L, M.T, lower=True).T
    M = 0.5 * (M + M.T)
    w, Y = sla.eig(M, check_finite=False)
    norm = np.sqrt(np.einsum("ij,ij->j", Y, Y))
    Y = Y / np.where(norm == 0, 1, norm)
    C = sla.solve_triangular(L.T, Y, lower=False) / d[:, None]
    order = np.lexsort((w.imag, w.real))
    return [SpectrumPoint(complex(w[i]), C[:, i]) for i in order]


def residual(mats: MatrixPair, point: SpectrumPoint) -> float:
    """``||H c - E S c|| / ||c||``."""
    c = point.vector
    r = mats.H @ c - point.energy * (mats.S @ c)
    return float(np.linalg.norm(r) / np.linalg.norm(c))


def ray_distance(energy: complex, threshold: float, theta: float) -> float:
    """Distance from ``energy`` to the ray ``threshold + t exp(-2 i theta)``, t >= 0."""
    z = energy - threshold
    direction = np.exp(-2j * theta)
    t = (z * direction.conjugate()).real
    return abs(z) if t < 0 else abs(z - t * direction)


def classify_energy(energy: complex, thr: Thresholds, theta: float,
                    tol: Tolerances = Tolerances()) -> str:
    if abs(energy.imag) <= tol.tol_bound and energy.real < thr.e0_2b:
        return BOUND
    for t in thr.values():
        if energy.real >= t - tol.ray_abs and \
                ray_distance(energy, t, theta) < tol.tol_ray(abs(energy - t)):
            return CONTINUUM
    if energy.imag < -tol.tol_bound:
        return RESONANCE
    return UNCLASSIFIED


def classify(points, thr: Thresholds, theta: float,
             tol: Tolerances = Tolerances()) -> list[SpectrumPoint]:
    """Label points as bound, continuum (on a rotated ray) or resonance."""
    return [replace(p, kind=classify_energy(p.energy, thr, theta, tol)) for p in points]


def nearest(points, energy: complex) -> int:
    return int(np.argmin([abs(p.energy - energy) for p in points]))


def pair_pole(points, energy: complex, radius: float, S=None, vector=None) -> int:
    """Index of the eigenvalue continuing ``energy``.

    Nearest in the complex plane; when a second candidate is nearly as
    close and a previous vector is given, the larger ``|c_prev^T S c|``
    wins. Raises PoleLostError outside ``radius``.
    """
    dist = np.array([abs(p.energy - energy) for p in points])
    order = np.argsort(dist)
    best = int(order[0])
    if dist[best] > radius:
        raise PoleLostError(f"no eigenvalue within {radius} of {energy:.6g}")
    if vector is not None and S is not None and len(order) > 1:
        close = [int(i) for i in order[:4] if dist[i] <= max(2 * dist[best], 1e-6)
                 and dist[i] <= radius]
        if len(close) > 1:
            Sv = S @ vector
            overlaps = [abs(points[i].vector @ Sv) for i in close]
            best = close[int(np.argmax(overlaps))]
    return best


def theta_stability(params, basis, point: SpectrumPoint, dtheta: float = 0.05,
                    tol: Tolerances = Tolerances(), sign: int = 1) -> SpectrumPoint:
    """Attach ``|E(theta + dtheta) - E(theta)| / dtheta`` to ``point``."""
    shifted = params.with_(theta=params.theta + dtheta)
    mats = assemble_thetas(basis, shifted, [shifted.theta], sector=sign)[0]
    points = solve_generalized(mats)
    i = pair_pole(points, point.energy, tol.match_radius)
    return replace(point, theta_stability=abs(points[i].energy - point.energy) / dtheta)


def exchange_expectation(vector: np.ndarray, mats: MatrixPair, basis) -> complex:
    """``c^T S_P c`` with ``P23`` applied to the ket, for a full-basis vector."""
    S_P = mats.S[:, basis.exchange_permutation()]
    return complex(vector @ S_P @ vector)
