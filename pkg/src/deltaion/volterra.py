"""Time-domain oracle: the weakly singular Volterra equation for phi.

    phi(t) = alpha sin(omega t) (1 + int_0^t phi(s) eta(t - s) ds)

Block-by-block product integration on uniform panels: on each panel phi is
the Lagrange interpolant through ``order + 1`` equispaced nodes; the history
weights are integrals of the Lagrange basis against ``eta`` (Gauss-Legendre
away from the singularity, Gauss-Jacobi for the ``(t - s)**-1/2`` weight on
the current panel), so the kernel singularity is integrated exactly against
the local polynomial.  The uniform mesh makes the history weights depend on
the panel offset only.
"""

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import roots_jacobi, roots_legendre

from .kernel_math import eta_kernel, eta_smooth_factor
from .params import ModelParams

__all__ = [
    "PhiSeries",
    "ConvergenceError",
    "solve_phi",
    "solve_phi_fixed",
    "theta_from_phi",
    "theta_big_from_phi",
    "oscillatory_moments",
]


class ConvergenceError(RuntimeError):
    def __init__(self, message, history=()):
        super().__init__(message)
        self.history = list(history)


@dataclass(frozen=True)
class PhiSeries:
    """phi on a uniform panel mesh; ``values[k, l]`` is phi at ``(k + l/order) * panel``."""

    params: ModelParams
    panel: float
    order: int
    values: np.ndarray

    @property
    def n_panels(self):
        return self.values.shape[0]

    @property
    def t_end(self):
        return self.n_panels * self.panel

    @property
    def mesh(self):
        k = np.arange(self.n_panels)[:, None]
        x = np.arange(self.order + 1)[None, :] / self.order
        return ((k + x) * self.panel).ravel()

    @property
    def nodal_values(self):
        return self.values.ravel()

    def monomials(self):
        """Coefficients ``c[k, j]`` with ``phi(t_k + x H) = sum_j c[k, j] x**j``."""
        return self.values @ _lagrange_to_monomial(self.order).T

    def __call__(self, t):
        t = np.asarray(t, float)
        k, x = self._locate(t)
        c = self.monomials()[k]
        return np.sum(c * x[..., None] ** np.arange(self.order + 1), axis=-1)

    def derivative(self, t, n=1):
        t = np.asarray(t, float)
        k, x = self._locate(t)
        c = self.monomials()[k]
        j = np.arange(self.order + 1)
        coef = np.ones_like(j, dtype=float)
        for i in range(n):
            coef = coef * (j - i)
        powers = np.where(j >= n, x[..., None] ** np.maximum(j - n, 0), 0.0)
        return np.sum(c * coef * powers, axis=-1) / self.panel**n

    def _locate(self, t):
        if np.any(t < 0) or np.any(t > self.t_end * (1 + 1e-12)):
            raise ValueError(f"t outside the solved range [0, {self.t_end}]")
        k = np.minimum((t / self.panel).astype(int), self.n_panels - 1)
        return k, t / self.panel - k


def _lagrange_to_monomial(order):
    x = np.arange(order + 1) / order
    V = np.vander(x, increasing=True)  # V[l, j] = x_l**j
    return np.linalg.inv(V)  # row j maps nodal values to the x**j coefficient


def _basis(order, x):
    """Lagrange basis on equispaced nodes in [0, 1], evaluated at ``x`` (last axis = basis)."""
    nodes = np.arange(order + 1) / order
    x = np.asarray(x, float)[..., None]
    out = np.ones(x.shape[:-1] + (order + 1,))
    for l in range(order + 1):
        for j in range(order + 1):
            if j != l:
                out[..., l] *= (x[..., 0] - nodes[j]) / (nodes[l] - nodes[j])
    return out


def _weights(order, panel, n_panels, n_gauss=24):
    h = panel / order
    d = order
    # history: W[delta, r, l] = int_0^H ell_l(s) eta(delta H + r h - s) ds, delta >= 1
    xg, wg = roots_legendre(n_gauss)
    xs = (xg + 1) / 2
    B = _basis(order, xs) * (wg / 2)[:, None] * panel  # (g, l)
    delta = np.arange(1, n_panels + 1)[:, None, None]
    r = np.arange(1, d + 1)[None, :, None]
    tau = delta * panel + r * h - xs[None, None, :] * panel
    eta = eta_kernel(tau.ravel()).reshape(tau.shape)
    W = np.einsum("drg,gl->drl", eta, B)
    W = np.concatenate([np.zeros((1, d, d + 1), complex), W])
    # current panel: V[r, l] = int_0^{r h} ell_l(s) eta(r h - s) ds
    xj, wj = roots_jacobi(n_gauss, -0.5, 0.0)
    xl, wl = roots_legendre(n_gauss)
    V = np.zeros((d, d + 1), complex)
    for ri in range(1, d + 1):
        L = ri * h
        s = (xj + 1) / 2 * L
        sing = np.sum((wj * math.sqrt(L / 2) * eta_smooth_factor(L - s))[:, None]
                      * _basis(order, s / panel), axis=0)
        s2 = (xl + 1) / 2 * L
        reg = 1j * np.sum((wl * L / 2)[:, None] * _basis(order, s2 / panel), axis=0)
        V[ri - 1] = sing + reg
    return W, V


def solve_phi_fixed(params, t_max, panel=0.2, order=4):
    """Solve on a fixed uniform panel mesh covering ``[0, t_max]``."""
    if t_max <= 0:
        raise ValueError("t_max must be positive")
    d = order
    n_panels = max(1, math.ceil(t_max / panel - 1e-9))
    values = np.zeros((n_panels, d + 1), complex)
    if params.alpha == 0:
        return PhiSeries(params, panel, order, values)
    W, V = _weights(order, panel, n_panels)
    h = panel / d
    r_nodes = np.arange(1, d + 1) * h
    eye = np.eye(d)
    for K in range(n_panels):
        t_nodes = K * panel + r_nodes
        sig = params.alpha * np.sin(params.omega * t_nodes)
        if K:
            hist = np.einsum("drl,dl->r", W[1 : K + 1], values[K - 1 :: -1])
            values[K, 0] = values[K - 1, d]
        else:
            hist = np.zeros(d, complex)
        A = eye - sig[:, None] * V[:, 1:]
        rhs = sig * (1 + hist + V[:, 0] * values[K, 0])
        values[K, 1:] = np.linalg.solve(A, rhs)
    return PhiSeries(params, panel, order, values)


def solve_phi(params, t_max, tol=1e-8, panel=0.4, order=4, max_halvings=7):
    """phi on ``[0, t_max]`` with mesh halving until theta changes by < ``tol``.

    The returned series is the finest one computed; the change between the
    last two meshes (max over the coarse nodes of |Delta theta|) bounds its
    error for a rule of order >= 2.
    """
    if tol < 1e-10:
        raise ValueError("tol must be >= 1e-10")
    if t_max > 200 * params.period:
        raise ValueError("the time-domain oracle is limited to t_max <= 200 T")
    history = []
    coarse = solve_phi_fixed(params, t_max, panel, order)
    for _ in range(max_halvings):
        panel /= 2
        fine = solve_phi_fixed(params, t_max, panel, order)
        t = np.linspace(0, min(coarse.t_end, fine.t_end), 257)
        change = float(np.max(np.abs(theta_from_phi(fine, t) - theta_from_phi(coarse, t))))
        history.append((panel, change))
        if change < tol:
            return fine
        coarse = fine
    raise ConvergenceError("Volterra solution did not converge under mesh halving", history)


def theta_from_phi(phi, t):
    """Survival amplitude ``1 + 2i int_0^t phi``."""
    t = np.asarray(t, float)
    k, x = phi._locate(t)
    c = phi.monomials()
    j = np.arange(phi.order + 1)
    full = phi.panel * (c @ (1 / (j + 1)))
    cum = np.concatenate([[0], np.cumsum(full)])
    part = phi.panel * np.sum(c[k] * x[..., None] ** (j + 1) / (j + 1), axis=-1)
    return 1 + 2j * (cum[k] + part)


def oscillatory_moments(zeta, order):
    """``mu_j(zeta) = int_0^1 x**j exp(i zeta x) dx`` for ``j = 0..order`` (last axis)."""
    zeta = np.asarray(zeta, float)
    out = np.empty(zeta.shape + (order + 1,), complex)
    small = np.abs(zeta) < order + 1
    if np.any(small):
        z = zeta[small]
        terms = np.ones_like(z, dtype=complex)
        acc = np.zeros(z.shape + (order + 1,), complex)
        j = np.arange(order + 1)
        for m in range(60):
            acc += terms[:, None] / (j + m + 1)
            terms = terms * (1j * z) / (m + 1)
        out[small] = acc
    big = ~small
    if np.any(big):
        z = zeta[big]
        e = np.exp(1j * z)
        mu = (e - 1) / (1j * z)
        out[big, 0] = mu
        for j in range(1, order + 1):
            mu = (e - j * mu) / (1j * z)
            out[big, j] = mu
    return out


def _phase_integrals(phi, E, t, e_chunk=2048):
    """``int_0^t phi(s) exp(i E s) ds`` for an array of E at one time t."""
    E = np.asarray(E, float)
    if E.size > e_chunk:
        flat = E.reshape(-1)
        out = np.concatenate([_phase_integrals(phi, flat[i : i + e_chunk], t, e_chunk)
                              for i in range(0, flat.size, e_chunk)])
        return out.reshape(E.shape)
    k_end, x_end = phi._locate(np.asarray(t, float))
    k_end = int(k_end)
    x_end = float(x_end)
    c = phi.monomials()
    H = phi.panel
    d = phi.order
    mu = oscillatory_moments(E * H, d)  # (nE, d+1)
    starts = np.arange(k_end) * H
    total = np.zeros(E.shape, complex)
    if k_end:
        block = 2048
        for i in range(0, k_end, block):
            j = min(i + block, k_end)
            ph = np.exp(1j * np.outer(E, starts[i:j]))
            total += np.einsum("ek,kj,ej->e", ph, c[i:j], mu)
    if x_end > 0:
        mup = oscillatory_moments(E * H * x_end, d) * x_end ** (np.arange(d + 1) + 1)
        total += np.exp(1j * E * k_end * H) * (mup @ c[k_end])
    return total * H


def theta_big_from_phi(phi, k, t):
    """Finite-time energy amplitude ``Theta(k, t)`` (Filon-type panel moments)."""
    k = np.asarray(k, float)
    ak = np.abs(k)
    pref = math.sqrt(2 / math.pi) * ak / (1 - 1j * ak)
    return pref * _phase_integrals(phi, 1 + k**2, t)
