"""Independent reference computations used only by the tests."""

import numpy as np
import scipy.integrate as si
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from trimer_poles.model import jacobi_transform, reduced_masses

BOX = 20.0
EDGES = (-BOX, -5.0, -2.0, -0.5, 0.5, 2.0, 5.0, BOX)


def _placement(f, beta):
    return jacobi_transform(beta).exchange() if f.channel == 2 else np.eye(2)


def value_and_gradient(f, beta, r, R):
    """``f`` and its channel-3 gradient, by direct differentiation."""
    T = _placement(f, beta)
    y0 = T[0, 0] * r + T[0, 1] * R
    y1 = T[1, 0] * r + T[1, 1] * R
    g = np.exp(-f.nu_r * y0**2 - f.nu_R * y1**2)
    dg0 = -2 * f.nu_r * y0 * g
    dg1 = -2 * f.nu_R * y1 * g
    if f.omega:
        ph = f.omega * f.nu_R * y1**2
        osc, dosc = (np.sin(ph), np.cos(ph)) if f.sine else (np.cos(ph), -np.sin(ph))
        dosc1 = dosc * 2 * f.omega * f.nu_R * y1
        dg0, dg1 = dg0 * osc, dg1 * osc + g * dosc1
        g = g * osc
    if f.pair_product:
        val = y0 * y1 * g
        d0 = y1 * g + y0 * y1 * dg0
        d1 = y0 * g + y0 * y1 * dg1
    else:
        val, d0, d1 = g, dg0, dg1
    return val, T[0, 0] * d0 + T[1, 0] * d1, T[0, 1] * d0 + T[1, 1] * d1


def elements(f, g, params):
    """``(S, T, V)`` for ``<f|g>``, ``<f|T(theta)|g>`` and ``<f|V(theta)|g>``.

    One adaptive cubature over all integrands. The kinetic term uses the
    symmetric gradient form ``sum_k K_k int d_k f d_k g``.
    """
    beta = params.beta
    K = reduced_masses(beta).kinetic
    M = jacobi_transform(beta).matrix
    scale = params.mu_g * np.exp(2j * params.theta)

    def integrand(x):
        r, R = x[:, 0], x[:, 1]
        fv, f0, f1 = value_and_gradient(f, beta, r, R)
        gv, g0, g1 = value_and_gradient(g, beta, r, R)
        r2 = M[0, 0] * r + M[0, 1] * R
        v = params.v0 * (np.exp(-scale * r**2) + np.exp(-scale * r2**2))
        fg = fv * gv
        return np.stack([fg, K[0] * f0 * g0 + K[1] * f1 * g1, v.real * fg, v.imag * fg], axis=1)

    # tiles keep the first pass from stepping over the central peak
    total = np.zeros(4)
    for a0, b0 in zip(EDGES, EDGES[1:]):
        for a1, b1 in zip(EDGES, EDGES[1:]):
            res = si.cubature(integrand, [a0, a1], [b0, b1], rtol=1e-12, atol=1e-14)
            if res.status != "converged":
                raise RuntimeError("cubature did not converge")
            total += res.estimate
    s, t, vr, vi = total
    return s, np.exp(-2j * params.theta) * t, vr + 1j * vi


def _d2(n, h):
    main, o1, o2 = -30 * np.ones(n), 16 * np.ones(n - 1), -np.ones(n - 2)
    return sp.diags([o2, o1, main, o1, o2], [-2, -1, 0, 1, 2]) / (12 * h * h)


def grid_hamiltonian(params, L=10.0, h=0.1):
    """Fourth-order finite-difference ``H(theta)`` on a square in channel-3 coordinates."""
    M = jacobi_transform(params.beta).matrix
    K = reduced_masses(params.beta).kinetic
    x = np.arange(-L, L + h / 2, h)
    n = len(x)
    rr, RR = np.meshgrid(x, x, indexing="ij")
    scale = params.mu_g * np.exp(2j * params.theta)
    V = params.v0 * (np.exp(-scale * rr**2) + np.exp(-scale * (M[0, 0] * rr + M[0, 1] * RR) ** 2))
    eye = sp.eye(n)
    T = -(K[0] * sp.kron(_d2(n, h), eye) + K[1] * sp.kron(eye, _d2(n, h)))
    return (np.exp(-2j * params.theta) * T + sp.diags(V.ravel())).tocsc(), x


def grid_eigenvalues(params, sigma, k=6, L=10.0, h=0.1, parity=None):
    """Eigenvalues nearest ``sigma``; ``parity`` keeps one sign of ``psi(-r, -R)``."""
    H, x = grid_hamiltonian(params, L, h)
    if params.theta == 0:
        w, V = spla.eigsh(H.real, k=k, sigma=sigma)
    else:
        w, V = spla.eigs(H, k=k, sigma=sigma)
    if parity is not None:
        n = len(x)
        keep = []
        for i in range(k):
            psi = V[:, i].reshape(n, n)
            sign = np.sum(psi * psi[::-1, ::-1]) / np.sum(psi * psi)
            keep.append(sign.real * parity > 0)
        w = w[np.array(keep)]
    return np.sort_complex(w)
