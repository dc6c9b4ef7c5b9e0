"""Laplace-domain lattice: the two-step recurrences and their l2 solutions.

The boundary amplitude ``g(z) = psi_hat(0, -i z)`` obeys, on every lattice
``z_n = z_c + n * omega``,

    g_n = a_n g_{n-1} + b_n g_{n+1} + f_n,
    a_n = -b_n = (i alpha / 2) / (kappa_n - 1),   f_n = i / (z_n + 1),

with ``kappa_n = sqrt_lattice(-z_n)``.  The rotated Laplace transform of the
boundary source is ``Phi(q) = (alpha / 2i) [g(q - 1 + omega) - g(q - 1 - omega)]``.

Two independent solvers are provided: stride doubling (elimination of the
odd neighbours, repeated ``depth`` times) and a two-sided continued fraction
with outward forward substitution.
"""

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import solve_banded

from .kernel_math import sqrt_lattice
from .params import ModelParams

__all__ = [
    "LatticeSolution",
    "Resonance",
    "SolverError",
    "NearPoleError",
    "ResonanceSearchError",
    "wavefunction_coefficients",
    "functional_equation_coefficients",
    "doubling_solve",
    "continued_fraction_solve",
    "solve_functional_equation",
    "solve_continued_fraction",
    "boundary_amplitude",
    "evaluate_Phi",
    "phi_transform",
    "phi_on_cut",
    "find_resonance",
    "resonance_array",
    "branch_points",
]

DEFAULT_DEPTH = 6
MAX_DEPTH = 12
MAX_DEPTH = 12


class SolverError(RuntimeError):
    """The lattice solver did not produce a trustworthy l2 solution."""


class NearPoleError(ValueError):
    """Evaluation point too close to a resonance pole."""

    def __init__(self, message, resonance=None):
        super().__init__(message)
        self.resonance = resonance


class ResonanceSearchError(RuntimeError):
    pass


@dataclass(frozen=True)
class LatticeSolution:
    """l2 solution ``g_n`` for ``n_min <= n <= n_max`` on sites ``sigma + n omega``."""

    sigma: complex
    n_min: int
    n_max: int
    g: np.ndarray
    coeff_level: int
    residual_norm: float
    edge_coefficients: tuple = field(default=())

    def __getitem__(self, n):
        if not self.n_min <= n <= self.n_max:
            raise IndexError(n)
        return self.g[n - self.n_min]

    @property
    def n(self):
        return np.arange(self.n_min, self.n_max + 1)


@dataclass(frozen=True)
class Resonance:
    """Simple pole of Phi below the real axis."""

    q_pole: complex
    residue: complex

    @property
    def gamma(self):
        """Decay rate of ``|theta|^2``."""
        return 2 * abs(self.q_pole.imag)


# -- coefficient families ------------------------------------------------------


def wavefunction_coefficients(alpha, z, kappa=None):
    """Coefficients ``(a, b, f)`` of the boundary-amplitude recurrence at sites ``z``."""
    z = np.asarray(z, dtype=complex)
    if kappa is None:
        kappa = sqrt_lattice(-z)
    # i/(z+1) == -i/((1+kappa)(kappa-1)) keeps the on-cut override consistent
    dk = kappa - 1
    a = (0.5j * alpha) / dk
    f = -1j / ((1 + kappa) * dk)
    return a, -a, f


def functional_equation_coefficients(alpha, omega, q):
    """Coefficients of the functional equation for ``Phi`` itself at sites ``q``.

    ``Phi_n = a_n Phi_{n-1} + b_n Phi_{n+1} + f_n`` with the square roots of
    the transform equation written in lattice form
    (``i sqrt(w) + 1 = 1 - sqrt_lattice(-w)``).
    """
    q = np.asarray(q, dtype=complex)
    up = sqrt_lattice(-(q + omega - 1))
    down = sqrt_lattice(-(q - omega - 1))
    b = (0.5j * alpha) / (1 - up)
    a = -(0.5j * alpha) / (1 - down)
    f = alpha * omega / (omega**2 - q**2)
    return a, b, f


# -- solvers -------------------------------------------------------------------


def doubling_solve(a, b, f, depth):
    """Stride-doubling elimination.

    ``a, b, f`` have shape ``(..., 4 M + 1)`` with ``M = 2**depth``, centred on
    index ``2 M``.  Returns ``(g, edge)`` where ``g`` covers offsets
    ``-(M - 1) .. M - 1`` and ``edge[k]`` is the largest level-``k``
    coefficient magnitude at the window edge.
    """
    a = np.asarray(a, dtype=complex)
    b = np.asarray(b, dtype=complex)
    f = np.asarray(f, dtype=complex)
    M = 2**depth
    if a.shape[-1] != 4 * M + 1:
        raise ValueError("coefficient arrays must have 4*2**depth + 1 sites")
    edge = []
    for level in range(depth):
        s = 2**level
        an, bn, fn = a[..., s:-s], b[..., s:-s], f[..., s:-s]
        am, bm, fm = a[..., : -2 * s], b[..., : -2 * s], f[..., : -2 * s]
        ap, bp, fp = a[..., 2 * s :], b[..., 2 * s :], f[..., 2 * s :]
        d = 1 - an * bm - bn * ap
        a, b, f = an * am / d, bn * bp / d, (fn + an * fm + bn * fp) / d
        c = a.shape[-1] // 2
        edge.append(float(np.max(np.abs(np.concatenate(
            [a[..., c - M + 1 : c - M + 2], b[..., c + M - 1 : c + M]], axis=-1)))))
    c = a.shape[-1] // 2
    g = f[..., c - M + 1 : c + M]
    return g, edge


def _cf_pass(a, b, f, half):
    """Two-sided continued fraction on ``2*half+1`` sites, full solution returned."""
    K = half
    shape = a.shape[:-1]
    R = np.zeros(shape, complex)
    S = np.zeros(shape, complex)
    Rs = [None] * (2 * K + 1)
    Ss = [None] * (2 * K + 1)
    for n in range(K, 0, -1):
        i = K + n
        den = 1 - b[..., i] * R
        R, S = a[..., i] / den, (f[..., i] + b[..., i] * S) / den
        Rs[i], Ss[i] = R, S
    L = np.zeros(shape, complex)
    T = np.zeros(shape, complex)
    Ls = [None] * (2 * K + 1)
    Ts = [None] * (2 * K + 1)
    for n in range(-K, 0):
        i = K + n
        den = 1 - a[..., i] * L
        L, T = b[..., i] / den, (f[..., i] + a[..., i] * T) / den
        Ls[i], Ts[i] = L, T
    g = np.empty(a.shape, complex)
    g0 = (f[..., K] + a[..., K] * Ts[K - 1] + b[..., K] * Ss[K + 1]) / (
        1 - a[..., K] * Ls[K - 1] - b[..., K] * Rs[K + 1]
    )
    g[..., K] = g0
    for n in range(1, K + 1):
        g[..., K + n] = Rs[K + n] * g[..., K + n - 1] + Ss[K + n]
        g[..., K - n] = Ls[K - n] * g[..., K - n + 1] + Ts[K - n]
    return g


def continued_fraction_solve(coeffs, half_window, tol=1e-13, max_half=4096):
    """Minimal (l2) solution by continued fractions with a convergence controller.

    ``coeffs(offsets)`` returns ``(a, b, f)`` at integer site offsets (last
    axis).  The tail depth doubles until the solution on ``|n| <= half_window``
    changes by less than ``tol`` relative to its maximum.
    """
    K = max(2 * half_window, half_window + 16)
    prev = None
    while K <= max_half:
        n = np.arange(-K, K + 1)
        a, b, f = coeffs(n)
        g = _cf_pass(a, b, f, K)[..., K - half_window : K + half_window + 1]
        if not np.all(np.isfinite(g)):
            raise SolverError("continued fraction produced non-finite values")
        if prev is not None:
            scale = np.max(np.abs(g), axis=-1, keepdims=True)
            if np.all(np.abs(g - prev) <= tol * np.maximum(scale, 1e-300)):
                return g
        prev = g
        K *= 2
    raise SolverError(
        f"continued fraction stagnated; last two convergents differ by "
        f"{np.max(np.abs(g - prev)):.3e}"
    )


def _residual(a, b, f, g):
    r = g[..., 1:-1] - a[..., 1:-1] * g[..., :-2] - b[..., 1:-1] * g[..., 2:] - f[..., 1:-1]
    return float(np.max(np.abs(r)) / max(np.max(np.abs(g)), 1e-300))


def _family(params, family):
    if family == "wavefunction":
        return lambda z: wavefunction_coefficients(params.alpha, z)
    if family == "laplace":
        return lambda q: functional_equation_coefficients(params.alpha, params.omega, q)
    raise ValueError(f"unknown coefficient family {family!r}")


def _check_sigma(params, sigma):
    sigma = complex(sigma)
    if not 0 <= sigma.real < params.omega:
        raise ValueError("Re sigma must lie in [0, omega)")
    return sigma


def solve_functional_equation(params, sigma, depth=DEFAULT_DEPTH, family="wavefunction"):
    """l2 solution on sites ``sigma + n omega`` by stride doubling.

    ``family`` selects the coefficients: ``"wavefunction"`` (boundary
    amplitude ``g_n``) or ``"laplace"`` (``Phi(sigma + n omega)`` directly).
    """
    sigma = _check_sigma(params, sigma)
    if depth < 1:
        raise ValueError("depth must be >= 1")
    M = 2**depth
    coeffs = _family(params, family)
    n = np.arange(-2 * M, 2 * M + 1)
    a, b, f = coeffs(sigma + n * params.omega)
    g, edge = doubling_solve(a, b, f, depth)
    inner = slice(2 * M - (M - 1), 2 * M + M)
    res = _residual(a[inner], b[inner], f[inner], g)
    return LatticeSolution(sigma, -(M - 1), M - 1, g, depth, res, tuple(edge))


def solve_continued_fraction(params, sigma, n_terms=None, family="wavefunction", tol=1e-13):
    """Same contract as :func:`solve_functional_equation`, by continued fractions.

    ``n_terms`` is the half window returned (default 63); the tail length is
    chosen by the convergence controller.
    """
    sigma = _check_sigma(params, sigma)
    half = 63 if n_terms is None else int(n_terms)
    coeffs = _family(params, family)
    g = continued_fraction_solve(lambda n: coeffs(sigma + n * params.omega), half, tol=tol)
    n = np.arange(-half, half + 1)
    a, b, f = coeffs(sigma + n * params.omega)
    return LatticeSolution(sigma, -half, half, g, 0, _residual(a, b, f, g))


# -- boundary amplitude and Phi -------------------------------------------------


def _sites(z_center, omega, M):
    n = np.arange(-2 * M, 2 * M + 1)
    return np.asarray(z_center, complex)[..., None] + n * omega


def auto_depth(params):
    """Doubling depth for evaluating Phi and psi-hat: ``2**N >= 24 alpha / sqrt(omega)``, N >= 6.

    The coupling of neighbouring sites is ~ ``alpha / sqrt(n omega)``, so the
    window has to grow with ``alpha / sqrt(omega)``; the constant was fixed by
    comparing against depth 12 over alpha in [0.5, 8], omega in [0.05, 4].
    """
    need = 24 * params.alpha / math.sqrt(params.omega)
    depth = max(DEFAULT_DEPTH, math.ceil(math.log2(max(need, 1.0))))
    if depth > MAX_DEPTH:
        raise SolverError(f"coupling alpha/sqrt(omega) = {need / 24:.3g} needs depth > {MAX_DEPTH}")
    return depth


def boundary_amplitude(params, z, offsets=(0,), depth=None, kappa_override=None,
                       chunk=4096):
    """``g(z + j omega)`` for each ``z`` and offset ``j`` (doubling route).

    ``kappa_override`` is an optional ``(index, values)`` pair that replaces
    the lattice root at site offset ``index`` (used on branch cuts, where the
    two sides differ only in the sign of that root).  Returns shape
    ``z.shape + (len(offsets),)``.
    """
    z = np.atleast_1d(np.asarray(z, complex))
    if depth is None:
        depth = auto_depth(params)
    M = 2**depth
    offsets = np.asarray(offsets)
    if np.any(np.abs(offsets) > M - 1):
        raise ValueError("offset outside the lattice window")
    out = np.empty(z.shape + (len(offsets),), complex)
    flat = z.reshape(-1)
    outf = out.reshape(-1, len(offsets))
    for start in range(0, flat.size, chunk):
        sl = slice(start, start + chunk)
        sites = _sites(flat[sl], params.omega, M)
        over = None
        if kappa_override is not None:
            idx, vals = kappa_override
            over = (2 * M + idx, np.broadcast_to(vals, z.shape).reshape(-1)[sl])
        g = _solve_sites(params.alpha, sites, over, depth)
        outf[sl] = g[:, M - 1 + offsets]
    return out


def _solve_sites(alpha, sites, override, depth):
    kappa = sqrt_lattice(-sites)
    if override is not None:
        kappa[:, override[0]] = override[1]
    hit = np.any(kappa == 1, axis=-1)
    with np.errstate(divide="ignore", invalid="ignore"):
        a, b, f = wavefunction_coefficients(alpha, sites, kappa)
        g, _ = doubling_solve(a, b, f, depth)
    M = 2**depth
    for i in np.flatnonzero(hit):
        g[i] = _banded_solve(alpha, kappa[i])[M + 1 : 3 * M]
    return g


def _banded_solve(alpha, kappa):
    """Direct pivoted solve of the multiplied-through recurrence.

    ``-c g_{n-1} + (kappa_n - 1) g_n + c g_{n+1} = -i/(1 + kappa_n)``, finite
    even where ``kappa_n = 1`` (there the stride elimination breaks down).
    """
    c = 0.5j * alpha
    n = kappa.size
    ab = np.zeros((3, n), complex)
    ab[0, 1:] = c
    ab[1] = kappa - 1
    ab[2, :-1] = -c
    return solve_banded((1, 1), ab, -1j / (1 + kappa))


def phi_transform(params, q, depth=None, kappa_override=None):
    """Vectorised ``Phi(q)`` (continuation with vertical cuts below ``1 + n omega``)."""
    q = np.asarray(q, complex)
    if params.alpha == 0:
        return np.zeros(q.shape, complex)
    g = boundary_amplitude(params, q - 1, offsets=(-1, 1), depth=depth,
                           kappa_override=kappa_override)
    return (params.alpha / 2j * (g[..., 1] - g[..., 0])).reshape(q.shape)


def phi_on_cut(params, n, s, side, depth=None):
    """``Phi(1 + n omega - i s)`` on the left (``side=+1``) or right (``-1``) lip of cut ``n``."""
    s = np.asarray(s, float)
    q = 1 + n * params.omega - 1j * s
    kap = side * np.sqrt(s) * complex(math.cos(math.pi / 4), math.sin(math.pi / 4))
    return phi_transform(params, q, depth=depth, kappa_override=(-n, kap))


def branch_points(params, q_min, q_max):
    """Branch points ``1 + n omega`` of Phi inside ``[q_min, q_max]`` as ``(n, q)`` pairs."""
    w = params.omega
    n0 = math.ceil((q_min - 1) / w)
    n1 = math.floor((q_max - 1) / w)
    return [(n, 1 + n * w) for n in range(n0, n1 + 1)]


def evaluate_Phi(params, q, approach="upper", depth=None):
    """``Phi(q) = F(-i q)``.

    Real ``q`` are boundary values; ``approach`` must be ``"upper"`` (the side
    where Phi is analytic) or ``"lower"`` (the continuation, which differs only
    at branch points, where the value is the common limit).
    """
    if approach not in ("upper", "lower"):
        raise ValueError("approach must be 'upper' or 'lower'")
    q = complex(q)
    val = complex(phi_transform(params, np.array([q]), depth=depth)[0])
    if not np.isfinite(val) or abs(val) > 1e12:
        try:
            res = find_resonance(params, q)
        except ResonanceSearchError:
            res = None
        raise NearPoleError(f"Phi evaluated at a pole near q = {q}", res)
    return val


# -- resonances ---------------------------------------------------------------


def _cut_distance(params, x):
    w = params.omega
    r = (x - 1) / w
    return w * abs(r - round(r))


def _inv_phi(params, q):
    return 1 / phi_transform(params, np.atleast_1d(q))


def _newton_pole(params, q, tol, max_iter):
    w = params.omega
    cell = q.real
    strip = math.floor((q.real - 1) / w)
    for _ in range(max_iter):
        h = 1e-6 * w
        vals = _inv_phi(params, np.array([q, q + h, q - h, q + 1j * h, q - 1j * h]))
        d = ((vals[1] - vals[2]) / (2 * h) + (vals[3] - vals[4]) / (2j * h)) / 2
        step = vals[0] / d
        # converged only if the undamped Newton step is small
        done = abs(step) <= tol * max(1.0, abs(q))
        while abs(step) > 0.25 * w:
            step *= 0.5
        # the continuation below the axis lives in one strip between cuts
        q_new = q - step
        for _ in range(60):
            if math.floor((q_new.real - 1) / w) == strip:
                break
            step *= 0.5
            q_new = q - step
        if q_new.imag > 0:
            q_new = complex(q_new.real, -abs(q_new.imag) * 0.5)
        if abs(q_new.real - cell) > w:
            raise ResonanceSearchError(f"pole search left its cell (q = {q_new})")
        q = q_new
        if done:
            break
    else:
        raise ResonanceSearchError(f"pole search did not converge (last q = {q})")
    if q.imag >= 0:
        raise ResonanceSearchError("converged to a point on or above the real axis")
    return q


def find_resonance(params, q_guess=None, tol=1e-14, max_iter=60):
    """Pole of Phi in the lower half plane by Newton iteration on ``1/Phi``.

    Without a guess the search starts at ``m omega - i min(alpha**(2 m), omega/10) / 2``
    and, failing that, from a spread of points in the same strip between
    cuts.  Newton steps never cross a cut.  Raises
    :class:`ResonanceSearchError` if no start converges or if the parameters
    sit in the cusp regime.
    """
    if params.alpha == 0:
        raise ResonanceSearchError("no resonance at zero coupling")
    if params.near_cusp:
        raise ResonanceSearchError(
            "cusp regime (1/omega near an integer): no isolated exponential pole")
    w = params.omega
    if q_guess is not None:
        q = _newton_pole(params, complex(q_guess), tol, max_iter)
        return Resonance(q, residue_of_Phi(params, q))
    depth = 0.5 * min(params.alpha ** (2 * params.m), 0.1 * w)
    guesses = [params.m * w - 1j * depth]
    left = 1 + math.floor((params.m * w - 1) / w) * w
    for im in (depth, 0.05 * w, 0.15 * w):
        guesses += [complex(left + f * w, -im) for f in (0.5, 0.25, 0.75, 0.1, 0.9)]
    last = None
    for g in guesses:
        try:
            q = _newton_pole(params, g, tol, max_iter)
        except ResonanceSearchError as exc:
            last = exc
            continue
        return Resonance(q, residue_of_Phi(params, q))
    raise ResonanceSearchError(f"no starting point converged ({last})")


def residue_of_Phi(params, q_pole, n_nodes=64):
    """Residue by trapezoidal integration on a circle avoiding cuts and neighbours."""
    r = 0.45 * min(_cut_distance(params, q_pole.real), params.omega / 2)
    r = max(r, 1e-6 * params.omega)
    theta = 2 * np.pi * np.arange(n_nodes) / n_nodes
    pts = q_pole + r * np.exp(1j * theta)
    vals = phi_transform(params, pts)
    return complex(np.mean(vals * r * np.exp(1j * theta)))


def resonance_array(params, base=None, j_range=64, rel_cut=1e-12):
    """Translates ``q_pole + j omega`` of a resonance, each re-polished.

    Returns the list of :class:`Resonance` with non-negligible residue,
    ordered by real part.
    """
    base = base or find_resonance(params)
    out = [base]
    for direction in (1, -1):
        for j in range(1, j_range + 1):
            guess = base.q_pole + direction * j * params.omega
            try:
                r = find_resonance(params, guess)
            except ResonanceSearchError:
                break
            if abs(r.residue) < rel_cut * abs(base.residue):
                break
            out.append(r)
    return sorted(out, key=lambda r: r.q_pole.real)
