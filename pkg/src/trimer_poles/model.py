"""Physical parameters, reduced masses and Jacobi coordinates.

Units: hbar = m_X = r0 = 1, so lengths are in r0, masses in m_X and
energies in hbar^2 / (m_X r0^2). Particle 1 is the distinguishable one
(mass 1); particles 2 and 3 are the identical bosons (mass beta).

Channel-3 coordinates are ``r3 = x2 - x1`` and
``R3 = x3 - (x1 + beta x2) / (1 + beta)``; channel 2 is obtained by
swapping the roles of the two bosons.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

THETA_MAX = math.pi / 4


class DomainError(ValueError):
    """A parameter lies outside its physical domain."""


@dataclass(frozen=True)
class SystemParams:
    """Interaction strength, range, mass ratio and complex-scaling angle."""

    v0: float
    mu_g: float
    beta: float
    theta: float = 0.25

    def __post_init__(self):
        for name in ("v0", "mu_g", "beta", "theta"):
            if not math.isfinite(getattr(self, name)):
                raise DomainError(f"{name} must be finite")
        if self.mu_g <= 0:
            raise DomainError(f"mu_g must be positive, got {self.mu_g}")
        if self.beta <= 0:
            raise DomainError(f"beta must be positive, got {self.beta}")
        if not 0 <= self.theta < THETA_MAX:
            raise DomainError(f"theta must lie in [0, pi/4), got {self.theta}")

    def with_(self, **changes) -> "SystemParams":
        """Return a copy with some fields replaced."""
        fields = {"v0": self.v0, "mu_g": self.mu_g, "beta": self.beta,
                  "theta": self.theta}
        fields.update(changes)
        return SystemParams(**fields)


@dataclass(frozen=True)
class ReducedMasses:
    mu12: float
    mu12_3: float

    @property
    def kinetic(self) -> np.ndarray:
        """Diagonal of the kinetic quadratic form, ``1/(2 mu)`` per coordinate."""
        return np.array([0.5 / self.mu12, 0.5 / self.mu12_3])


def reduced_masses(beta: float) -> ReducedMasses:
    """Reduced masses of the boson-X pair and of the spectator against it."""
    if not beta > 0:
        raise DomainError(f"beta must be positive, got {beta}")
    return ReducedMasses(beta / (1 + beta), beta * (1 + beta) / (1 + 2 * beta))


@dataclass(frozen=True)
class JacobiTransform:
    """Linear map ``(r2, R2) = M (r3, R3)``."""

    c_rr: float
    c_rR: float
    c_Rr: float
    c_RR: float

    @property
    def matrix(self) -> np.ndarray:
        return np.array([[self.c_rr, self.c_rR], [self.c_Rr, self.c_RR]])

    @property
    def det(self) -> float:
        return self.c_rr * self.c_RR - self.c_rR * self.c_Rr

    def inverse(self) -> np.ndarray:
        return np.linalg.inv(self.matrix)

    def exchange(self) -> np.ndarray:
        """Matrix X with ``(P23 psi)(x) = psi(X x)`` in channel-3 coordinates.

        Swapping the bosons sends ``(r3, R3)`` to ``(-r2, R2)``. X is an
        involution and leaves the kinetic form invariant.
        """
        return np.diag([-1.0, 1.0]) @ self.matrix


def jacobi_transform(beta: float) -> JacobiTransform:
    """Channel-3 to channel-2 Jacobi map for boson mass ``beta``."""
    if not beta > 0:
        raise DomainError(f"beta must be positive, got {beta}")
    s = beta / (1 + beta)
    return JacobiTransform(-s, -1.0, (1 + 2 * beta) / (1 + beta) ** 2, -s)


def jacobi_coordinates(x: np.ndarray, beta: float, channel: int = 3) -> np.ndarray:
    """Jacobi pair/spectator coordinates from particle positions ``x1, x2, x3``."""
    x1, x2, x3 = x
    if channel == 3:
        return np.array([x2 - x1, x3 - (x1 + beta * x2) / (1 + beta)])
    if channel == 2:
        return np.array([x1 - x3, x2 - (x1 + beta * x3) / (1 + beta)])
    raise ValueError(f"channel must be 2 or 3, got {channel}")


def potential(r, params: SystemParams, scaled: bool = False):
    """Gaussian pair potential ``v0 exp(-mu_g r^2)``.

    With ``scaled`` the coordinate is rotated, ``r -> r exp(i theta)``.
    """
    r = np.asarray(r)
    if scaled:
        return params.v0 * np.exp(-params.mu_g * np.exp(2j * params.theta) * r**2)
    return params.v0 * np.exp(-params.mu_g * r**2)
