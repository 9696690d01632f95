"""Gaussian expansion basis in the two boson-X rearrangement channels.

A channel-3 function is ``P(r3, R3) exp(-nu_r r3^2 - nu_R R3^2)`` with
``P = 1`` or ``P = r3 R3``. Each channel-2 function is defined as the
boson-exchange image of a channel-3 function with the same ranges, so the
span is closed under P23 by construction.

Optional complex-range functions replace ``exp(-nu_R R^2)`` by
``cos(omega nu_R R^2) exp(-nu_R R^2)`` or its sine partner. They resolve
the oscillating outgoing tail along the spectator coordinate much better
than centred real Gaussians do.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, fields

import numpy as np

from .matel import QuadForm2
from .model import JacobiTransform


class ConfigError(ValueError):
    """Inconsistent basis specification."""


def geometric_ranges(first: float, last: float, n: int) -> np.ndarray:
    """``n`` ranges in geometric progression from ``first`` to ``last``."""
    if n < 1:
        raise ConfigError(f"need at least one range, got n={n}")
    if not 0 < first <= last:
        raise ConfigError(f"ranges must satisfy 0 < first <= last, got {first}, {last}")
    if n == 1:
        return np.array([float(first)])
    if first == last:
        raise ConfigError("degenerate range progression: first == last with n > 1")
    return first * (last / first) ** (np.arange(n) / (n - 1))


@dataclass(frozen=True)
class BasisSpec:
    """Width progressions of the basis.

    ``pair_products`` adds the ``r R``-prefactored partner of every
    Gaussian. ``cr_*`` describe the complex-range supplement (disabled
    when ``cr_n_R == 0``).
    """

    n_r: int = 12
    r_first: float = 0.15
    r_last: float = 10.0
    n_R: int = 14
    R_first: float = 0.15
    R_last: float = 20.0
    pair_products: bool = True
    cr_n_r: int = 10
    cr_r_first: float = 0.15
    cr_r_last: float = 8.0
    cr_n_R: int = 6
    cr_R_first: float = 0.1
    cr_R_last: float = 4.0
    cr_omega: float = math.pi / 2

    def __post_init__(self):
        geometric_ranges(self.r_first, self.r_last, self.n_r)
        geometric_ranges(self.R_first, self.R_last, self.n_R)
        if self.cr_n_R:
            geometric_ranges(self.cr_r_first, self.cr_r_last, self.cr_n_r)
            geometric_ranges(self.cr_R_first, self.cr_R_last, self.cr_n_R)
            if not self.cr_omega > 0:
                raise ConfigError("cr_omega must be positive")
        elif self.cr_n_R < 0:
            raise ConfigError("cr_n_R must be non-negative")

    @classmethod
    def plain(cls, n_r, r_first, r_last, n_R, R_first, R_last) -> "BasisSpec":
        """Centred real Gaussians only, without prefactors or complex ranges."""
        return cls(n_r, r_first, r_last, n_R, R_first, R_last,
                   pair_products=False, cr_n_R=0)

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> "BasisSpec":
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ConfigError(f"unknown basis keys: {sorted(unknown)}")
        return cls(**data)


@dataclass(frozen=True)
class BasisFunction:
    """One real basis function.

    ``omega == 0`` is a plain Gaussian; otherwise ``sine`` selects the
    sine or cosine complex-range combination.
    """

    channel: int
    nu_r: float
    nu_R: float
    pair_product: bool = False
    omega: float = 0.0
    sine: bool = False

    @property
    def powers(self) -> tuple[int, int]:
        return (1, 1) if self.pair_product else (0, 0)

    def primitives(self) -> list[tuple[complex, complex, complex]]:
        """``(coefficient, nu_r, nu_R)`` of the complex Gaussians summing to f."""
        if self.omega == 0:
            return [(1.0, self.nu_r, self.nu_R)]
        up = self.nu_R * complex(1, self.omega)
        down = self.nu_R * complex(1, -self.omega)
        if self.sine:
            return [(0.5j, self.nu_r, up), (-0.5j, self.nu_r, down)]
        return [(0.5, self.nu_r, up), (0.5, self.nu_r, down)]

    def __call__(self, r, R, transform: JacobiTransform | None = None):
        """Evaluate at channel-3 coordinates ``(r, R)``.

        Channel-2 functions need ``transform`` to reach their own coordinates.
        """
        r, R = np.asarray(r, float), np.asarray(R, float)
        if self.channel == 2:
            if transform is None:
                raise ValueError("channel-2 evaluation needs the Jacobi transform")
            X = transform.exchange()
            r, R = X[0, 0] * r + X[0, 1] * R, X[1, 0] * r + X[1, 1] * R
        gauss = np.exp(-self.nu_r * r**2 - self.nu_R * R**2)
        if self.omega:
            phase = self.omega * self.nu_R * R**2
            gauss = gauss * (np.sin(phase) if self.sine else np.cos(phase))
        return r * R * gauss if self.pair_product else gauss


@dataclass(frozen=True)
class GaussBasis:
    """All channel-3 functions followed by their channel-2 exchange images."""

    functions: tuple[BasisFunction, ...]
    spec: BasisSpec | None = None

    @property
    def size(self) -> int:
        return len(self.functions)

    @property
    def half(self) -> int:
        return len(self.functions) // 2

    def channel3(self) -> tuple[BasisFunction, ...]:
        return self.functions[: self.half]

    def exchange_permutation(self) -> np.ndarray:
        """Index of ``P23 f_i`` for every ``i``."""
        n = self.half
        return np.concatenate([np.arange(n, 2 * n), np.arange(n)])

    def expand(self, a: np.ndarray, sign: int = 1) -> np.ndarray:
        """Full-basis vector of an exchange-sector vector ``a``.

        The result keeps the c-normalisation of ``a`` with respect to the
        sector overlap returned by ``MatrixPair.sector``.
        """
        a = np.asarray(a)
        return np.concatenate([a, sign * a]) / math.sqrt(2)

    def __len__(self):
        return self.size


def build_basis(spec: BasisSpec | None = None) -> GaussBasis:
    """Both channels with identical width lists."""
    spec = spec or BasisSpec()
    groups = [(spec.n_r, spec.r_first, spec.r_last,
               spec.n_R, spec.R_first, spec.R_last, 0.0)]
    if spec.cr_n_R:
        groups.append((spec.cr_n_r, spec.cr_r_first, spec.cr_r_last,
                       spec.cr_n_R, spec.cr_R_first, spec.cr_R_last, spec.cr_omega))
    prefactors = (False, True) if spec.pair_products else (False,)
    half = []
    for n_r, r0, r1, n_R, R0, R1, omega in groups:
        nu_r = geometric_ranges(r0, r1, n_r) ** -2.0
        nu_R = geometric_ranges(R0, R1, n_R) ** -2.0
        for pair in prefactors:
            for a in nu_r:
                for b in nu_R:
                    if omega:
                        half.append(BasisFunction(3, a, b, pair, omega, False))
                        half.append(BasisFunction(3, a, b, pair, omega, True))
                    else:
                        half.append(BasisFunction(3, a, b, pair))
    images = [BasisFunction(2, f.nu_r, f.nu_R, f.pair_product, f.omega, f.sine)
              for f in half]
    return GaussBasis(tuple(half + images), spec)


def channel3_form(f: BasisFunction, transform: JacobiTransform) -> QuadForm2:
    """Exponent of ``f`` written in channel-3 coordinates.

    For complex-range functions this is the ``1 + i omega`` primitive.
    """
    _, a, b = f.primitives()[0]
    form = QuadForm2(a, 0.0, b)
    if f.channel == 2:
        form = form.transformed(transform.exchange())
    return form


def exchange_partner(f: BasisFunction, transform: JacobiTransform) -> QuadForm2:
    """Exponent of ``P23 f`` in channel-3 coordinates."""
    return channel3_form(f, transform).transformed(transform.exchange())
