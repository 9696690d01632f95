"""Analytic complex-scaled matrix elements between Gaussian basis functions.

All integrals are done in channel-3 coordinates ``x = (r3, R3)``. A basis
primitive there is ``P(x) exp(-x^T A x)``, where ``P`` is a polynomial of
degree at most two. Every overlap, kinetic and potential element is
then a combination of moments ``int r^p R^q exp(-x^T C x)``. These come
from a short recursion on ``C^{-1}``.

Polynomials are stored as coefficient arrays ``c[p, q]`` of ``r^p R^q``.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .model import JacobiTransform, SystemParams, jacobi_transform, reduced_masses

POLY = 5     # coefficient array size for polynomials of degree <= 4
MOMENTS = 7  # moment table size, total degree <= 6
CHUNK = 96   # bra rows per vectorised block
COND_WARN = 1e12


class IntegralDivergenceError(ArithmeticError):
    """The real part of a Gaussian exponent is not positive definite."""


class IllConditionedWarning(RuntimeWarning):
    pass


@dataclass(frozen=True)
class QuadForm2:
    """``Q(r, R) = a_rr r^2 + 2 a_rR r R + a_RR R^2``."""

    a_rr: complex
    a_rR: complex
    a_RR: complex

    @property
    def matrix(self) -> np.ndarray:
        return np.array([[self.a_rr, self.a_rR], [self.a_rR, self.a_RR]])

    @property
    def det(self) -> complex:
        return self.a_rr * self.a_RR - self.a_rR**2

    @classmethod
    def from_matrix(cls, A) -> "QuadForm2":
        A = np.asarray(A)
        return cls(A[0, 0], 0.5 * (A[0, 1] + A[1, 0]), A[1, 1])

    def transformed(self, T) -> "QuadForm2":
        """Form in coordinates ``y`` with ``x = T y``."""
        T = np.asarray(T)
        return QuadForm2.from_matrix(T.T @ self.matrix @ T)

    def __add__(self, other: "QuadForm2") -> "QuadForm2":
        return QuadForm2(self.a_rr + other.a_rr, self.a_rR + other.a_rR,
                         self.a_RR + other.a_RR)


def _check_convergent(C: np.ndarray):
    re = C.real
    ok = (re[..., 0, 0] > 0) & (re[..., 0, 0] * re[..., 1, 1] - re[..., 0, 1] * re[..., 1, 0] > 0)
    if not np.all(ok):
        raise IntegralDivergenceError(
            "Gaussian exponent with non-positive-definite real part; "
            "the rotation angle is too large for this basis")


def gauss2d(Q: QuadForm2) -> complex:
    """``int exp(-Q(r, R)) dr dR = pi / sqrt(det Q)`` on the principal branch."""
    _check_convergent(Q.matrix)
    return math.pi / np.sqrt(complex(Q.det))


def gauss_moments(C: np.ndarray, degree: int = MOMENTS - 1) -> np.ndarray:
    """Moments ``E[..., p, q] = int r^p R^q exp(-x^T C x)`` for ``p + q <= degree``.

    ``C`` has shape ``(..., 2, 2)``. Odd total degrees vanish and are left
    at zero, as are entries beyond ``degree``.
    """
    C = np.asarray(C)
    table = _moment_table(C.reshape(-1, 2, 2), degree)
    return np.moveaxis(table, (0, 1), (-2, -1)).reshape(C.shape[:-2] + table.shape[:2])


def _moment_table(C: np.ndarray, degree: int) -> np.ndarray:
    """Moments with the power indices first, ``E[p, q, ...]``."""
    det = C[..., 0, 0] * C[..., 1, 1] - C[..., 0, 1] * C[..., 1, 0]
    half_inv = 0.5 / det
    # covariance Sigma = C^{-1} / 2
    s_rr = C[..., 1, 1] * half_inv
    s_RR = C[..., 0, 0] * half_inv
    s_rR = -C[..., 0, 1] * half_inv
    size = degree + 1
    E = np.zeros((size, size) + C.shape[:-2], dtype=complex)
    E[0, 0] = np.pi / np.sqrt(det.astype(complex))
    for n in range(2, size, 2):
        for p in range(n + 1):
            q = n - p
            if p == 0:
                np.multiply(s_RR, q - 1, out=E[0, q])
                E[0, q] *= E[0, q - 2]
                continue
            if q:
                np.multiply(s_rR, q, out=E[p, q])
                E[p, q] *= E[p - 1, q - 1]
                if p > 1:
                    E[p, q] += (p - 1) * s_rr * E[p - 2, q]
            else:
                np.multiply(s_rr, p - 1, out=E[p, 0])
                E[p, 0] *= E[p - 2, 0]
    return E


def _contract_table(P: np.ndarray, E: np.ndarray, a: int, b: int) -> np.ndarray:
    """``sum_pq P[j, p, q] E[p + a, q + b, i, j]`` over the nonzero entries of P."""
    out = np.zeros(E.shape[2:], dtype=complex)
    for p, q in zip(*np.nonzero(np.any(P != 0, axis=0))):
        out += P[None, :, p, q] * E[p + a, q + b]
    return out


# -- polynomial helpers on batches of shape (n, POLY, POLY) ------------------

def _mul_linear(P: np.ndarray, v: np.ndarray) -> np.ndarray:
    """Multiply by ``v[0] r + v[1] R``; ``v`` has shape (n, 2)."""
    out = np.zeros(P.shape, dtype=np.result_type(P, v))
    out[:, 1:, :] += v[:, 0, None, None] * P[:, :-1, :]
    out[:, :, 1:] += v[:, 1, None, None] * P[:, :, :-1]
    return out


def _deriv(P: np.ndarray, k: int) -> np.ndarray:
    out = np.zeros_like(P)
    if k == 0:
        out[:, :-1, :] = P[:, 1:, :] * np.arange(1, P.shape[1])[None, :, None]
    else:
        out[:, :, :-1] = P[:, :, 1:] * np.arange(1, P.shape[2])[None, None, :]
    return out


def prefactor_polys(T: np.ndarray, powers: tuple[int, int], n: int = 1) -> np.ndarray:
    """``(t0 . x)^a (t1 . x)^b`` for rows ``t`` of ``T``, repeated ``n`` times."""
    P = np.zeros((n, POLY, POLY))
    P[:, 0, 0] = 1.0
    rows = np.broadcast_to(T, (n, 2, 2))
    for k, power in enumerate(powers):
        for _ in range(power):
            P = _mul_linear(P, rows[:, k])
    return P


def kinetic_polys(P: np.ndarray, A: np.ndarray, kinetic: np.ndarray) -> np.ndarray:
    """``Q`` with ``T(0) [P exp(-x^T A x)] = Q exp(-x^T A x)``.

    ``T(0) = -sum_k kinetic[k] d^2/dx_k^2``; ``P`` has degree <= 2.
    """
    P = P.astype(complex)
    Q = np.zeros(P.shape, dtype=complex)
    for k in range(2):
        L = 2 * A[:, k, :]                    # d/dx_k exp(-xAx) = -(L.x) exp
        dP = _deriv(P, k)
        term = _deriv(dP, k) - 2 * _mul_linear(dP, L)
        term += _mul_linear(_mul_linear(P, L), L) - 2 * A[:, k, k, None, None] * P
        Q -= kinetic[k] * term
    return Q


# -- single elements ---------------------------------------------------------

def _placement(f, transform: JacobiTransform) -> np.ndarray:
    return transform.exchange() if f.channel == 2 else np.eye(2)


def _pair_integral(f, g, transform, op) -> complex:
    """Sum over primitive pairs of ``op(Pf, Pg, C)``."""
    Tf, Tg = _placement(f, transform), _placement(g, transform)
    Pf = prefactor_polys(Tf, f.powers)[0]
    Pg = prefactor_polys(Tg, g.powers)[0]
    total = 0j
    for cf, af, bf in f.primitives():
        Af = Tf.T @ np.diag([af, bf]) @ Tf
        for cg, ag, bg in g.primitives():
            Ag = Tg.T @ np.diag([ag, bg]) @ Tg
            total += cf * cg * op(Pf, Pg, Ag, Af + Ag)
    return total


def _contract(Pf: np.ndarray, Pg: np.ndarray, E: np.ndarray) -> complex:
    total = 0j
    for (i, j), a in np.ndenumerate(Pf):
        if a:
            block = E[i:i + Pg.shape[0], j:j + Pg.shape[1]]
            total += a * np.sum(Pg[: block.shape[0], : block.shape[1]] * block)
    return total


def overlap_element(f, g, transform: JacobiTransform) -> float:
    """``<f|g>`` with both functions written in channel-3 coordinates."""
    def op(Pf, Pg, Ag, C):
        _check_convergent(C)
        return _contract(Pf, Pg, gauss_moments(C[None])[0])
    return _pair_integral(f, g, transform, op).real


def kinetic_element(f, g, transform: JacobiTransform, masses, theta: float = 0.0) -> complex:
    """``<f| T(theta) |g>`` with ``T(theta) = exp(-2 i theta) T(0)``."""
    def op(Pf, Pg, Ag, C):
        _check_convergent(C)
        Q = kinetic_polys(Pg[None], Ag[None], masses.kinetic)[0]
        return _contract(Pf, Q, gauss_moments(C[None])[0])
    value = _pair_integral(f, g, transform, op)
    return np.exp(-2j * theta) * value if theta else value.real + 0j


def potential_element(f, g, transform: JacobiTransform, params: SystemParams) -> complex:
    """``<f| V(r2 e^{i theta}) + V(r3 e^{i theta}) |g>``."""
    if params.v0 == 0:
        return 0j
    scale = params.mu_g * np.exp(2j * params.theta)
    pair_rows = (np.array([1.0, 0.0]), transform.matrix[0])

    def op(Pf, Pg, Ag, C):
        total = 0j
        for u in pair_rows:
            Cv = C + scale * np.outer(u, u)
            _check_convergent(Cv)
            total += _contract(Pf, Pg, gauss_moments(Cv[None])[0])
        return total
    value = params.v0 * _pair_integral(f, g, transform, op)
    return value if params.theta else value.real + 0j


# -- assembly ----------------------------------------------------------------

@dataclass(frozen=True)
class MatrixPair:
    """Complex-symmetric Hamiltonian and real overlap.

    ``half`` is set when the matrices are ordered as channel-3 functions
    followed by their exchange images, which enables ``sector``.
    """

    H: np.ndarray
    S: np.ndarray
    half: int | None = None

    def sector(self, sign: int = 1) -> "MatrixPair":
        """Pencil restricted to ``P23 = sign`` combinations ``(f + sign P23 f)/sqrt 2``.

        Expressed on channel-3 coefficients ``a`` with full vector
        ``(a, sign a)/sqrt 2``.
        """
        if self.half is None:
            raise ValueError("matrix pair has no channel block structure")
        n = self.half
        return MatrixPair(self.H[:n, :n] + sign * self.H[:n, n:],
                          self.S[:n, :n] + sign * self.S[:n, n:])


def _primitive_table(functions):
    """Unique channel-3 primitives and the map from functions to them."""
    keys, coef_rows = {}, []
    for f in functions:
        row = {}
        for c, a, b in f.primitives():
            key = (f.powers, complex(a), complex(b))
            idx = keys.setdefault(key, len(keys))
            row[idx] = row.get(idx, 0) + c
        coef_rows.append(row)
    entries = [(i, j, c) for i, row in enumerate(coef_rows) for j, c in row.items()]
    i, j, c = zip(*entries)
    coef = sp.csr_matrix((np.array(c, dtype=complex), (i, j)),
                         shape=(len(functions), len(keys)))
    powers = np.array([k[0] for k in keys])
    nus = np.array([[k[1], k[2]] for k in keys])
    return coef, powers, nus


def _channel_blocks(functions, params: SystemParams, thetas):
    """Primitive-level ``S``, ``T(0)``, and ``V(theta)`` for channel-3 bras
    against kets in both channels (columns: channel 3, then exchange images)."""
    transform = jacobi_transform(params.beta)
    kin = reduced_masses(params.beta).kinetic
    coef, powers, nus = _primitive_table(functions)
    m = len(nus)
    A3 = np.zeros((m, 2, 2), dtype=complex)
    A3[:, 0, 0], A3[:, 1, 1] = nus[:, 0], nus[:, 1]
    X = transform.exchange()
    A_ket = np.concatenate([A3, X.T @ A3 @ X])
    P_ket = np.zeros((2 * m, POLY, POLY))
    Q_ket = np.zeros((2 * m, POLY, POLY), dtype=complex)
    for half, T in enumerate((np.eye(2), X)):
        for pw in {tuple(p) for p in powers}:
            idx = np.flatnonzero((powers == pw).all(axis=1)) + half * m
            P_ket[idx] = prefactor_polys(T, pw, len(idx))
            Q_ket[idx] = kinetic_polys(P_ket[idx], A_ket[idx], kin)
    rows = [np.array([1.0, 0.0]), transform.matrix[0]]
    scales = [params.mu_g * np.exp(2j * th) for th in thetas]

    S = np.zeros((m, 2 * m), dtype=complex)
    T0 = np.zeros((m, 2 * m), dtype=complex)
    V = [np.zeros((m, 2 * m), dtype=complex) for _ in thetas]
    for pw in sorted({tuple(p) for p in powers}):
        a, b = pw
        bras = np.flatnonzero((powers == pw).all(axis=1))
        for start in range(0, len(bras), CHUNK):
            idx = bras[start:start + CHUNK]
            C = A3[idx, None] + A_ket[None]
            _check_convergent(C)
            E = _moment_table(C, 4 + a + b)
            S[idx] = _contract_table(P_ket, E, a, b)
            T0[idx] = _contract_table(Q_ket, E, a, b)
            del E
            for V_t, scale in zip(V, scales):
                for u in rows:
                    Cv = C + scale * np.outer(u, u)
                    _check_convergent(Cv)
                    V_t[idx] += _contract_table(P_ket, _moment_table(Cv, 2 + a + b), a, b)
    return coef, S, T0, [params.v0 * V_t for V_t in V]


def _contract_blocks(coef, M):
    """Function-level blocks ``coef M_k coef^T`` for both ket channels."""
    m = coef.shape[1]
    left = coef @ M
    return tuple(np.asarray((coef @ left[:, k * m:(k + 1) * m].T).T) for k in (0, 1))


def _overlap_real(S_block):
    scale = np.abs(S_block).max()
    if np.abs(S_block.imag).max() > 1e-9 * scale:
        raise ArithmeticError("overlap acquired an imaginary part")
    return S_block.real


def _warn_conditioning(S):
    d = np.sqrt(np.abs(np.diag(S)))
    w = np.linalg.eigvalsh(S / np.outer(d, d))
    cond = w[-1] / w[0] if w[0] > 0 else np.inf
    if cond > COND_WARN:
        warnings.warn(f"overlap condition number {cond:.2e} exceeds {COND_WARN:.0e}",
                      IllConditionedWarning, stacklevel=3)


def assemble(basis, params: SystemParams, check_conditioning: bool = False) -> MatrixPair:
    """Full ``H(theta)`` and ``S`` over both channels.

    Only channel-3 bras are integrated; the remaining blocks follow from
    the exchange invariance of ``H``: ``<P f|O|P g> = <f|O|g>``.
    """
    pair = assemble_thetas(basis, params, [params.theta], sector=None)[0]
    if check_conditioning:
        _warn_conditioning(pair.S)
    return pair


def assemble_thetas(basis, params: SystemParams, thetas, sector: int | None = 1):
    """Matrix pairs at several rotation angles, sharing ``S`` and ``T(0)``.

    ``sector`` selects the exchange-symmetric (+1) or antisymmetric (-1)
    combination; ``None`` returns full matrices with channel blocks.
    """
    thetas = list(thetas)
    for th in thetas:
        params.with_(theta=th)  # domain check
    coef, S, T0, Vs = _channel_blocks(basis.channel3(), params, thetas)
    S_aa, S_ab = (_overlap_real(x) for x in _contract_blocks(coef, S))
    out = []
    for th, V in zip(thetas, Vs):
        H_aa, H_ab = _contract_blocks(coef, np.exp(-2j * th) * T0 + V)
        if th == 0:
            H_aa, H_ab = H_aa.real.astype(complex), H_ab.real.astype(complex)
        if sector is None:
            H = np.block([[H_aa, H_ab], [H_ab, H_aa]])
            S_full = np.block([[S_aa, S_ab], [S_ab, S_aa]])
            out.append(MatrixPair(_symmetrize(H), _symmetrize(S_full), len(S_aa)))
        else:
            out.append(MatrixPair(_symmetrize(H_aa + sector * H_ab),
                                  _symmetrize(S_aa + sector * S_ab)))
    return out


def assemble_sector(basis, params: SystemParams, sign: int = 1) -> MatrixPair:
    """Exchange-sector pencil at ``params.theta``."""
    return assemble_thetas(basis, params, [params.theta], sector=sign)[0]


def _symmetrize(M):
    # the blocks are symmetric analytically; remove rounding asymmetry
    return 0.5 * (M + M.T)
