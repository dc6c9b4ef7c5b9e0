"""Space-time wavefunction psi(x, t).

With ``q = i p`` and ``kappa(q)`` the lattice root of ``-q`` (``kappa =
sqrt(-i p)``, ``Re kappa > 0`` above the real axis) the transform of psi is

    psi_hat(x, q) = exp(-|x| kappa) Y(q) + i exp(-|x|) expm1(-|x| (kappa - 1)) / ((kappa - 1)(kappa + 1)),

where ``Y(q) = psi_hat(0, q)`` is the ``n = 0`` entry of the lattice solution
centred at ``z = q``.  The second term is the bound-state resolvent plus the
part of the free evolution that cancels it at x = 0; written with ``expm1``
its removable pole at ``kappa = 1`` needs no special casing except the exact
point itself.  Splitting off that pole,

    psi(x, t) = exp(i t - |x|) + (1/2pi) int exp(-i q t - |x| kappa(q)) A(q) dq,
    A(q) = Y(q) - i/(q + 1) = (i alpha / 2) (g_{-1} - g_{1}) / (kappa - 1),

on a line above the real axis.  Stationary phase in the last integral gives
the large-``x ~ t`` form used by :func:`asymptotic_ray`.
"""

import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import simpson
from scipy.special import roots_legendre

from .kernel_math import sqrt_lattice
from .lattice import auto_depth, boundary_amplitude
from .params import ModelParams
from .volterra import solve_phi, theta_big_from_phi, theta_from_phi

__all__ = [
    "LaplaceField",
    "WavefieldSlice",
    "assemble_psi_hat",
    "invert_moderate",
    "asymptotic_ray",
    "spectral_reconstruct",
]


@dataclass(frozen=True)
class WavefieldSlice:
    """``psi`` on an x grid at time ``t``."""

    t: float
    x_grid: np.ndarray
    psi: np.ndarray
    method: str

    @property
    def density(self):
        return np.abs(self.psi) ** 2

    def norm(self):
        """``int |psi|**2 dx`` over the grid (Simpson); a grid on ``x >= 0`` is mirrored."""
        x = np.asarray(self.x_grid, float)
        val = float(simpson(self.density, x=x))
        return 2 * val if x[0] >= 0 else val


class LaplaceField:
    """Lattice-backed evaluator of ``psi_hat(0, q)`` and ``psi_hat(x, q)``."""

    def __init__(self, params, depth=None):
        self.params = params
        self.depth = auto_depth(params) if depth is None else depth

    def amplitudes(self, q):
        """``(Y(q), A(q))`` for an array of q (A as in the module docstring)."""
        q = np.asarray(q, complex)
        if self.params.alpha == 0:
            Y = 1j / (q + 1)
            return Y, np.zeros(q.shape, complex)
        g = boundary_amplitude(self.params, q, offsets=(-1, 0, 1), depth=self.depth)
        kappa = sqrt_lattice(-q)
        # A has the split-off bound-state pole at q = -1 (kappa = 1)
        with np.errstate(divide="ignore", invalid="ignore"):
            A = 0.5j * self.params.alpha * (g[..., 0] - g[..., 2]) / (kappa - 1)
        return g[..., 1], A

    def psi_hat(self, x, q):
        """``psi_hat(x, q)``, broadcasting x against q."""
        q = np.asarray(q, complex)
        ax = np.abs(np.asarray(x, float))
        Y, _ = self.amplitudes(q)
        kappa = sqrt_lattice(-q)
        dk = kappa - 1
        with np.errstate(divide="ignore", invalid="ignore"):
            ratio = np.where(dk == 0, -ax / 2, np.expm1(-ax * dk) / (dk * (kappa + 1)))
        return np.exp(-ax * kappa) * Y + 1j * np.exp(-ax) * ratio


def assemble_psi_hat(field, x, p):
    """Laplace transform ``psi_hat(x, p) = int exp(-p t) psi(x, t) dt`` (Re p > 0 side)."""
    return field.psi_hat(x, 1j * np.asarray(p, complex))


def _line_nodes(t, window, alias, power=8):
    c = 1.0 / max(t, 1.0)
    dq = 2 * math.pi * c / alias
    span = window * 30 ** (1 / power)
    n = int(math.ceil(span / dq))
    x = np.arange(-n, n + 1) * dq
    weight = np.exp(-((x / window) ** power)) * dq / (2 * math.pi)
    return x + 1j * c, weight, c


def invert_moderate(field, t, x_grid, window=40.0, alias=24.0, chunk=256):
    """``psi(x, t)`` by a windowed trapezoidal sum on ``Im q = 1/t``.

    The sum's only discretisation error is aliasing, ``exp(-alias)``; the
    smooth super-Gaussian window of half-width ``window`` damps the
    integrand's slow ``|q|**-5/2`` decay.
    """
    x = np.asarray(x_grid, float)
    if t < 0:
        raise ValueError("t must be >= 0")
    if t > 1e3:
        raise ValueError("contour inversion is limited to t <= 1e3")
    if t == 0 or field.params.alpha == 0:
        return WavefieldSlice(t, x, np.exp(1j * t - np.abs(x)), "contour-inversion")
    q, weight, c = _line_nodes(t, window, alias)
    _, A = field.amplitudes(q)
    kappa = sqrt_lattice(-q)
    coef = weight * A * np.exp(-1j * q * t)
    ax = np.abs(x).reshape(-1)
    out = np.empty(ax.shape, complex)
    for i in range(0, ax.size, chunk):
        out[i : i + chunk] = np.exp(-np.outer(ax[i : i + chunk], kappa)) @ coef
    psi = np.exp(1j * t - np.abs(x)) + out.reshape(x.shape)
    if not np.all(np.isfinite(psi)):
        raise FloatingPointError("non-finite values in the contour sum")
    return WavefieldSlice(t, x, psi, "contour-inversion")


def asymptotic_ray(field, v, t):
    """Large-``x ~ t`` form of psi at ``x = v t``.

    ``psi ~ exp(i x**2/(4t)) |v| / (2 sqrt(i pi t)) [psi_hat(0, -i v**2/4) - i/(1 + v**2/4)]``,
    with the boundary value taken from above the real q axis.
    """
    v = np.asarray(v, float)
    if np.any(v == 0):
        raise ValueError("v must be nonzero")
    _, A = field.amplitudes((v**2 / 4).astype(complex))
    pref = np.abs(v) / (2 * np.sqrt(1j * math.pi * t))
    return np.exp(1j * v**2 * t / 4) * pref * A


def spectral_reconstruct(params, t, x_grid, phi=None, k_max=20.0, panel_nodes=8):
    """psi from the bound/continuum expansion.

    ``psi = theta(t) exp(i t) u_b(x) + int Theta(k, t) u(k, x) exp(-i k**2 t) dk`` with
    ``u(k, x) = (exp(i k x) - exp(i |k x|)/(1 + i |k|)) / sqrt(2 pi)``.  Theta is even in
    k, so the integral is taken over ``k > 0`` with the even part of u.  The
    k integral is composite Gauss-Legendre up to ``k_max`` with panels short
    enough to resolve the phase ``k |x| - k**2 t``.
    """
    x = np.asarray(x_grid, float)
    ax = np.abs(x)
    if t == 0 or params.alpha == 0:
        return WavefieldSlice(t, x, np.exp(1j * t - ax), "spectral-reconstruction")
    if phi is None:
        phi = solve_phi(params, t)
    theta = complex(theta_from_phi(phi, t))
    rate = 2 * k_max * t + float(ax.max(initial=0.0)) + 1.0
    n_panels = int(math.ceil(k_max * rate / (2 * math.pi) * 2))
    edges = np.linspace(0, k_max, n_panels + 1)
    xg, wg = roots_legendre(panel_nodes)
    half = np.diff(edges) / 2
    mid = (edges[1:] + edges[:-1]) / 2
    k = (mid[:, None] + half[:, None] * xg).ravel()
    wk = (half[:, None] * wg).ravel()
    amp = theta_big_from_phi(phi, k, t) * np.exp(-1j * k**2 * t) * wk
    out = np.empty(ax.shape, complex)
    for i in range(0, ax.size, 64):
        xx = ax[i : i + 64, None]
        u = 2 * np.cos(k * xx) - 2 * np.exp(1j * k * xx) / (1 + 1j * k)
        out[i : i + 64] = u @ amp
    psi = theta * np.exp(1j * t - ax) + out / math.sqrt(2 * math.pi)
    return WavefieldSlice(t, x, psi, "spectral-reconstruction")
