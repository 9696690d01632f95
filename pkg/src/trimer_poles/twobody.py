"""Dimer spectrum of ``-(1/2 mu) d^2/dr^2 + v0 exp(-mu_g r^2)``.

Two independent routes: a Gaussian expansion (production) and a
finite-difference grid with Richardson extrapolation (oracle).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla

from .eigen import Thresholds
from .model import SystemParams, reduced_masses

DEFAULT_WIDTHS = np.geomspace(0.05, 80.0, 40)
MAX_BOX = 1000.0


class BoxTooSmallError(RuntimeError):
    pass


class GridConvergenceError(RuntimeError):
    pass


@dataclass(frozen=True)
class TwoBodyResult:
    energies: tuple[float, ...]
    method: str

    def __len__(self):
        return len(self.energies)


def _gem_blocks(v0, mu_g, mu12, widths):
    a = np.asarray(widths, float) ** -2.0
    a, b = np.meshgrid(a, a, indexing="ij")
    c = a + b
    cv = c + mu_g
    kin = 0.5 / mu12
    S_even = np.sqrt(np.pi / c)
    H_even = kin * 2 * a * b / c * S_even + v0 * np.sqrt(np.pi / cv)
    # odd functions x exp(-a x^2): moments I_{2k} = int x^{2k} exp(-c x^2)
    I0 = np.sqrt(np.pi / c)
    I2, I4 = I0 / (2 * c), 3 * I0 / (4 * c**2)
    S_odd = I2
    T_odd = kin * (I0 - 2 * c * I2 + 4 * a * b * I4)
    H_odd = T_odd + v0 * np.sqrt(np.pi / cv) / (2 * cv)
    return (H_even, S_even), (H_odd, S_odd)


def solve2b_gem(v0: float, mu_g: float, mu12: float, widths=None) -> TwoBodyResult:
    """Bound energies from even ``exp(-a x^2)`` and odd ``x exp(-a x^2)`` functions."""
    if mu12 <= 0 or mu_g <= 0:
        raise ValueError("mu12 and mu_g must be positive")
    widths = DEFAULT_WIDTHS if widths is None else widths
    energies = []
    for H, S in _gem_blocks(v0, mu_g, mu12, widths):
        w = sla.eigh(H, S, eigvals_only=True)
        energies.extend(w[w < 0])
    return TwoBodyResult(tuple(sorted(float(e) for e in energies)), "gem")


def _grid_level(v0, mu_g, mu12, L, h, vectors=False):
    x = np.arange(-L + h, L - h / 2, h)
    kin = 0.5 / (mu12 * h * h)
    diag = 2 * kin + v0 * np.exp(-mu_g * x**2)
    off = np.full(len(x) - 1, -kin)
    if vectors:
        return sla.eigh_tridiagonal(diag, off, select="v", select_range=(-np.inf, 0.0))
    return sla.eigh_tridiagonal(diag, off, eigvals_only=True,
                                select="v", select_range=(-np.inf, 0.0))


def solve2b_grid(v0: float, mu_g: float, mu12: float, L: float | None = None,
                 h: float = 0.01, richardson_tol: float = 1e-8) -> TwoBodyResult:
    """Central-difference bound energies on ``[-L, L]``.

    Energies at spacings h, h/2, h/4 are combined by Richardson
    extrapolation; the two extrapolants must agree within
    ``richardson_tol``. Every bound state must have decayed below 1e-10
    of its peak at the box edge. With ``L=None`` the box starts at 30 and
    doubles until that holds.
    """
    if (L is not None and L < 20) or h > 0.01:
        raise ValueError("the oracle needs L >= 20 and h <= 0.01")
    box = 30.0 if L is None else L
    while True:
        w, psi = _grid_level(v0, mu_g, mu12, box, h, vectors=True)
        edges = [max(abs(psi[0, k]), abs(psi[-1, k])) / np.abs(psi[:, k]).max()
                 for k in range(len(w))]
        worst = max(edges, default=0.0)
        if worst <= 1e-10:
            break
        if L is not None or 2 * box > MAX_BOX:
            raise BoxTooSmallError(f"edge amplitude {worst:.1e} at L={box}")
        box *= 2
    levels = [w, _grid_level(v0, mu_g, mu12, box, h / 2), _grid_level(v0, mu_g, mu12, box, h / 4)]
    n = min(len(e) for e in levels)
    e1, e2, e4 = (e[:n] for e in levels)
    coarse, fine = (4 * e2 - e1) / 3, (4 * e4 - e2) / 3
    if n and np.max(np.abs(fine - coarse)) > richardson_tol:
        raise GridConvergenceError(
            f"Richardson extrapolants differ by {np.max(np.abs(fine - coarse)):.1e}")
    return TwoBodyResult(tuple(float(e) for e in fine), "grid")


def thresholds(params: SystemParams) -> Thresholds:
    """Dimer thresholds from the GEM solve."""
    mu12 = reduced_masses(params.beta).mu12
    e = solve2b_gem(params.v0, params.mu_g, mu12).energies
    if not e:
        raise ValueError(f"no dimer bound for v0={params.v0}, mu_g={params.mu_g}")
    return Thresholds(e[0], e[1] if len(e) > 1 else None, tuple(e[2:]))
