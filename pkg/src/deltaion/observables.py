"""Physical outputs: survival amplitude, energy spectra, resonance peaks, fits.

Two routes feed every observable:

* the time-domain oracle (:mod:`deltaion.volterra`) for ``t`` up to a few
  tens of periods;
* the Laplace route, where ``theta`` and ``Theta`` are inverse transforms of
  expressions in ``Phi``.  For large ``t`` the inversion contour is pushed
  below the real axis (:class:`ContourExpansion`): each resonance pole gives
  an exponentially decaying term and each cut ``q = 1 + n omega - i s``
  a power-law (Hankel loop) term.

The transforms used are

    theta_hat(q)   = i (1 + 2 i Phi(q)) / q,
    Theta_hat(k,q) = C(k) i Phi(q + 1 + k**2) / q,    C(k) = sqrt(2/pi) |k| / (1 - i |k|).
"""

import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from numpy.polynomial import chebyshev
from scipy.integrate import quad
from scipy.optimize import brentq, curve_fit, minimize_scalar
from scipy.special import roots_legendre

from .inversion import bromwich
from .lattice import (
    ResonanceSearchError,
    find_resonance,
    phi_on_cut,
    phi_transform,
    resonance_array,
)
from .params import ModelParams
from .volterra import solve_phi, theta_big_from_phi, theta_from_phi

__all__ = [
    "SpectrumSlice",
    "Peak",
    "PeakTable",
    "SurvivalCurve",
    "UnitarityReport",
    "ContourExpansion",
    "InconsistencyError",
    "StabilizationError",
    "continuum_prefactor",
    "spectrum_infinite_time",
    "spectrum_finite_time",
    "small_alpha_closed_form",
    "survival_curve",
    "theta_bromwich",
    "fit_decay_rate",
    "fit_tail_law",
    "fit_tail_exponent",
    "find_peaks",
    "unitarity",
]


class InconsistencyError(RuntimeError):
    """Two routes that must agree did not."""


class StabilizationError(RuntimeError):
    """Exponential-decay diagnostics requested where the decay is not exponential."""


def continuum_prefactor(k):
    """``C(k) = sqrt(2/pi) |k| / (1 - i |k|)``."""
    ak = np.abs(np.asarray(k, float))
    return math.sqrt(2 / math.pi) * ak / (1 - 1j * ak)


# -- data types ---------------------------------------------------------------


@dataclass(frozen=True)
class SpectrumSlice:
    """``Theta(k, t)`` on a k grid; ``t = math.inf`` for the limit spectrum."""

    params: ModelParams
    t: float
    k_grid: np.ndarray
    amplitude: np.ndarray
    method: str

    @property
    def intensity(self):
        return np.abs(self.amplitude) ** 2

    @property
    def k2(self):
        return np.asarray(self.k_grid) ** 2


@dataclass(frozen=True)
class Peak:
    n: int
    k2_center: float
    height: float
    width: float
    lorentzian_fit_residual: float
    contrast: float
    fwhm: float = math.nan


@dataclass(frozen=True)
class PeakTable:
    peaks: tuple

    def __len__(self):
        return len(self.peaks)

    def __iter__(self):
        return iter(self.peaks)

    def __getitem__(self, i):
        return self.peaks[i]

    def by_photon(self, n):
        for p in self.peaks:
            if p.n == n:
                return p
        raise KeyError(n)


@dataclass
class SurvivalCurve:
    """``theta`` on a time grid; ``survival`` is ``|theta|**2``."""

    t_grid: np.ndarray
    theta: np.ndarray
    params: ModelParams = None
    fitted_rate: float = None
    fitted_tail_exponent: float = None

    @property
    def survival(self):
        return np.abs(self.theta) ** 2


@dataclass(frozen=True)
class UnitarityReport:
    t: float
    bound: float
    continuum: float
    tail: float

    @property
    def total(self):
        return self.bound + self.continuum

    @property
    def defect(self):
        return abs(self.total - 1)


# -- spectra ------------------------------------------------------------------


def spectrum_infinite_time(params, k_grid):
    """``Theta(k, inf) = C(k) Phi(1 + k**2)``, boundary values from above."""
    k = np.asarray(k_grid, float)
    amp = continuum_prefactor(k) * phi_transform(params, (1 + k**2).astype(complex))
    return SpectrumSlice(params, math.inf, k, amp, "laplace-boundary")


def spectrum_finite_time(params, k_grid, t, phi=None, oracle_max=None):
    """``Theta(k, t)``: time-domain route up to ``oracle_max`` (default 50 T), contour route beyond.

    A precomputed :class:`PhiSeries` covering ``t`` may be passed as ``phi``.
    """
    k = np.asarray(k_grid, float)
    if math.isinf(t):
        return spectrum_infinite_time(params, k)
    if t < 0:
        raise ValueError("t must be >= 0")
    if t == 0 or params.alpha == 0:
        return SpectrumSlice(params, t, k, np.zeros(k.shape, complex), "time-domain")
    if oracle_max is None:
        oracle_max = 50 * params.period
    if phi is not None or t <= oracle_max:
        if phi is None:
            phi = solve_phi(params, t)
        return SpectrumSlice(params, t, k, theta_big_from_phi(phi, k, t), "time-domain")
    amp = ContourExpansion(params, t_min=t).big_theta(k, t)
    return SpectrumSlice(params, t, k, amp, "laplace-boundary")


def small_alpha_closed_form(params, k, t):
    """Leading small-alpha Lorentzian for ``omega > 1``.

    ``sqrt(2/pi) alpha omega |k| / (1 - i|k|) (1 - exp(-g t) exp(i t (s + d))) / D`` with
    ``g = alpha**2 sqrt(omega-1)/(2 omega)``, ``s = alpha**2 sqrt(omega+1)/(2 omega)``,
    ``d = k**2 - omega + 1`` and
    ``D = alpha**2 (sqrt(omega-1) - i sqrt(omega+1)) - 2 i omega d``.
    Relative to ``Theta`` as computed elsewhere in this package it carries an
    overall phase ``-i``; moduli agree.
    """
    a, w = params.alpha, params.omega
    if w <= 1:
        raise ValueError("the small-alpha Lorentzian needs omega > 1")
    k = np.asarray(k, float)
    ak = np.abs(k)
    d = k**2 - w + 1
    den = a**2 * (math.sqrt(w - 1) - 1j * math.sqrt(w + 1)) - 2j * w * d
    if math.isinf(t):
        num = 1.0
    else:
        g = a**2 * math.sqrt(w - 1) / (2 * w)
        s = a**2 * math.sqrt(w + 1) / (2 * w)
        num = 1 - np.exp(-g * t) * np.exp(1j * t * (s + d))
    return math.sqrt(2 / math.pi) * a * w * ak / (1 - 1j * ak) * num / den


# -- long-time contour expansion ----------------------------------------------


class ContourExpansion:
    """Residue plus Hankel-loop representation, valid for ``t >= t_min``.

    On cut ``n`` the jump ``Phi(left lip) - Phi(right lip)`` at depth ``s`` is
    an odd analytic function of ``sqrt(s)``; it is tabulated once as a
    Chebyshev interpolant in ``sqrt(s)`` over the range the Hankel quadrature
    reaches at ``t_min``, after which any ``t >= t_min`` and any ``k`` costs
    only array arithmetic.
    """

    def __init__(self, params, t_min, n_cuts=12, n_nodes=64, u_max=6.5, cheb_degree=48,
                 poles=None):
        if t_min <= 0:
            raise ValueError("t_min must be positive")
        self.params = params
        self.t_min = float(t_min)
        self.u_max = u_max
        x, w = roots_legendre(n_nodes)
        self._u = (x + 1) / 2 * u_max
        self._w = w * u_max / 2 * np.exp(-self._u**2) * 2 * self._u
        if poles is None:
            poles = self._find_poles()
        self.poles = list(poles)
        self._sigma_max = u_max / math.sqrt(self.t_min)
        self.cuts = []
        nodes = np.cos(np.pi * (np.arange(cheb_degree + 1) + 0.5) / (cheb_degree + 1))
        sig = (nodes + 1) / 2 * self._sigma_max
        for n in range(-n_cuts, n_cuts + 1):
            b = 1 + n * params.omega
            jump = phi_on_cut(params, n, sig**2, 1) - phi_on_cut(params, n, sig**2, -1)
            coef = chebyshev.chebfit(nodes, jump, cheb_degree)
            self.cuts.append((b, coef))
        self.phi_zero = complex(phi_transform(params, np.array([0j]))[0])

    def _find_poles(self):
        p = self.params
        if p.alpha == 0:
            return []
        if p.near_cusp:
            warnings.warn("cusp regime: no isolated resonance, using cut terms only")
            return []
        try:
            base = find_resonance(p)
        except ResonanceSearchError as exc:
            # a pole that has moved behind a cut is carried by the cut integrals
            warnings.warn(f"no resonance pole in the strip ({exc}); using cut terms only")
            return []
        return [(r.q_pole, r.residue) for r in resonance_array(p, base)]

    def jump(self, n_index, s):
        """Tabulated ``Phi`` jump on the ``n_index``-th stored cut."""
        b, coef = self.cuts[n_index]
        x = 2 * np.sqrt(np.asarray(s, float)) / self._sigma_max - 1
        return chebyshev.chebval(x, coef)

    def _check_t(self, t):
        t = np.atleast_1d(np.asarray(t, float))
        if np.any(t < self.t_min * (1 - 1e-12)):
            raise ValueError(f"contour expansion built for t >= {self.t_min}")
        return t

    def _cut_sums(self, t, shift, scale):
        """``sum_n (i/2pi) exp(-i (b_n - shift) t) int exp(-s t) J_n(s) / (b_n - shift - i s) ds``
        times ``scale``, broadcast over ``shift`` (last axis) and ``t`` (first axis)."""
        t = t[:, None, None]
        sig = self._u[None, :, None] / np.sqrt(t)
        s = sig**2
        out = 0
        for b, coef in self.cuts:
            J = chebyshev.chebval(2 * sig / self._sigma_max - 1, coef)
            integrand = J / (b - shift - 1j * s)
            integral = np.sum(self._w[None, :, None] * integrand, axis=1) / t[:, 0]
            out = out + np.exp(-1j * (b - shift) * t[:, 0]) * integral
        return scale * 1j / (2 * math.pi) * out

    def theta(self, t):
        """Survival amplitude ``theta(t)``."""
        t = self._check_t(t)
        out = np.full(t.shape, 1 + 2j * self.phi_zero)
        for q0, res in self.poles:
            out = out + 2j * res / q0 * np.exp(-1j * q0 * t)
        cut = self._cut_sums(t, np.zeros(1), -2.0)
        return out + cut[:, 0]

    def big_theta(self, k, t):
        """``Theta(k, t)`` for an array of k at one time t."""
        t = self._check_t(t)
        if t.size != 1:
            raise ValueError("big_theta takes a single time")
        k = np.asarray(k, float)
        E = (1 + k**2).reshape(-1)
        tt = float(t[0])
        out = phi_transform(self.params, E.astype(complex))
        for q0, res in self.poles:
            out = out + res / (q0 - E) * np.exp(-1j * (q0 - E) * tt)
        out = out + self._cut_sums(t, E, 1j)[0]
        return (continuum_prefactor(k).reshape(-1) * out).reshape(k.shape)


def theta_bromwich(params, t, window=100.0, alias=30.0):
    """``theta(t)`` at moderate t by a windowed Bromwich sum over the lattice ``Phi``.

    The leading large-q part of ``Phi``, ``alpha omega / (omega**2 - q**2)``
    (the transform of ``alpha sin(omega t)``), is inverted in closed form so
    that the windowed remainder decays fast.
    """
    t = np.atleast_1d(np.asarray(t, float))
    a, w = params.alpha, params.omega
    if a == 0:
        return np.ones(t.shape, complex)

    def G(q):
        return 1j * (phi_transform(params, q) - a * w / (w * w - q * q)) / q

    return 1 + 2j * a * (1 - np.cos(w * t)) / w + 2j * bromwich(G, t, window=window, alias=alias)


# -- survival -----------------------------------------------------------------


def survival_curve(params, t_grid, route="auto", oracle_max=None, laplace_min=None,
                   tol=1e-8, overlap_tol=1e-6):
    """``theta`` on ``t_grid``.

    ``route="auto"`` uses the time-domain oracle alone when the grid ends
    before ``oracle_max`` (default 50 T).  Longer grids use the oracle below
    ``laplace_min`` (default 20 T) and the contour expansion above it; when both regimes are
    present the two routes are compared on an overlap window inside
    ``[laplace_min, oracle_max]`` (default upper end 50 T) and an
    :class:`InconsistencyError` is raised if they differ by more than
    ``overlap_tol``.  ``"oracle"`` and ``"laplace"`` force one route.
    """
    t = np.asarray(t_grid, float)
    if np.any(t < 0) or np.any(np.diff(t) < 0):
        raise ValueError("t_grid must be sorted and non-negative")
    if route not in ("auto", "oracle", "laplace"):
        raise ValueError("route must be 'auto', 'oracle' or 'laplace'")
    T = params.period
    oracle_max = 50 * T if oracle_max is None else oracle_max
    laplace_min = 20 * T if laplace_min is None else laplace_min
    theta = np.ones(t.shape, complex)
    if params.alpha == 0 or t.size == 0:
        return SurvivalCurve(t, theta, params)
    if route == "oracle":
        phi = solve_phi(params, max(float(t[-1]), 1e-3), tol=tol)
        return SurvivalCurve(t, theta_from_phi(phi, t), params)
    if route == "laplace":
        tpos = t > 0
        if np.any(tpos):
            ce = ContourExpansion(params, t_min=float(t[tpos][0]))
            theta[tpos] = ce.theta(t[tpos])
        return SurvivalCurve(t, theta, params)
    late = t >= laplace_min if t[-1] > oracle_max else np.zeros(t.shape, bool)
    early = ~late
    if np.any(early):
        phi = solve_phi(params, max(float(t[early][-1]), 1e-3), tol=tol)
        theta[early] = theta_from_phi(phi, t[early])
    if np.any(late):
        ce = ContourExpansion(params, t_min=laplace_min)
        theta[late] = ce.theta(t[late])
        if np.any(early):
            t_end = min(oracle_max, laplace_min + 5 * T)
            window = np.linspace(laplace_min, t_end, 9)
            phi = solve_phi(params, t_end, tol=tol)
            gap = float(np.max(np.abs(theta_from_phi(phi, window) - ce.theta(window))))
            if gap > overlap_tol:
                raise InconsistencyError(
                    f"oracle and contour routes differ by {gap:.3e} on [{laplace_min}, {t_end}]")
    return SurvivalCurve(t, theta, params)


def _window_mask(t, window):
    lo, hi = window
    mask = (t >= lo) & (t <= hi)
    if np.count_nonzero(mask) < 3:
        raise ValueError("fewer than three samples in the fit window")
    return mask


def fit_decay_rate(curve, window):
    """Least-squares slope of ``-log |theta|**2`` over ``window = (t0, t1)``."""
    if curve.params is not None and curve.params.near_cusp:
        raise StabilizationError(
            "1/omega is near an integer: decay is power-law, no exponential rate")
    t = np.asarray(curve.t_grid, float)
    mask = _window_mask(t, window)
    slope, _ = np.polyfit(t[mask], -np.log(curve.survival[mask]), 1)
    curve.fitted_rate = float(slope)
    return float(slope)


def fit_tail_law(curve, window, bins_per_decade=10):
    """Power-law fit ``|theta|**2 ~ A t**p`` over ``window``, averaged over oscillations.

    Samples are grouped into logarithmic bins and ``t**3 |theta|**2`` is
    averaged in each bin before a straight-line fit in log-log coordinates, so the
    beating between cut contributions does not bias the exponent.  Returns
    ``(p, A)`` with ``A`` the fitted value of ``t**3 <|theta|**2>`` at the
    geometric centre of the window, which makes amplitudes of curves with
    slightly different exponents comparable.
    """
    t = np.asarray(curve.t_grid, float)
    lo, hi = window
    if lo <= 0 or hi / lo < 10 * (1 - 1e-9):
        raise ValueError("tail fit needs a window of at least one decade in t")
    mask = _window_mask(t, window)
    lt = np.log10(t[mask])
    # averaging the compensated t**3 |theta|**2 keeps the binning unbiased near p = -3
    y = curve.survival[mask] * t[mask] ** 3
    edges = np.linspace(math.log10(lo), math.log10(hi), int(round(bins_per_decade * math.log10(hi / lo))) + 1)
    idx = np.clip(np.searchsorted(edges, lt, side="right") - 1, 0, len(edges) - 2)
    xs, ys = [], []
    for i in range(len(edges) - 1):
        sel = idx == i
        if np.any(sel):
            xs.append(np.mean(lt[sel]))
            ys.append(np.log10(np.mean(y[sel])))
    if len(xs) < 3:
        raise ValueError("too few populated bins for a tail fit")
    slope, c = np.polyfit(xs, ys, 1)
    p = slope - 3
    centre = 0.5 * (math.log10(lo) + math.log10(hi))
    amplitude = 10 ** (c + slope * centre)
    curve.fitted_tail_exponent = float(p)
    return float(p), float(amplitude)


def fit_tail_exponent(curve, window):
    """Exponent ``p`` of ``|theta|**2 ~ t**p``; see :func:`fit_tail_law`."""
    return fit_tail_law(curve, window)[0]


# -- peaks --------------------------------------------------------------------


def _lorentzian(x, h, x0, w, c0, c1):
    return h / (1 + ((x - x0) / (w / 2)) ** 2) + c0 + c1 * (x - x0)


def _evaluator(sl):
    if math.isinf(sl.t):
        return lambda k: spectrum_infinite_time(sl.params, k).intensity
    phi = solve_phi(sl.params, sl.t)
    return lambda k: np.abs(theta_big_from_phi(phi, k, sl.t)) ** 2


def _fit_peak(evaluate, x0, width, k2_min, k2_max):
    """Resample around ``x0`` (in k**2) until >= 8 samples per FWHM; Lorentzian fit.

    The fit runs in the scaled variable ``(x - x0) / width`` with intensities
    divided by their maximum, so widths down to ~1e-13 of ``x0`` stay
    well conditioned.
    """
    for _ in range(8):
        lo = max(x0 - 6 * width, k2_min, 0.0)
        hi = min(x0 + 6 * width, k2_max)
        u = np.linspace((lo - x0) / width, (hi - x0) / width, 97)
        y = evaluate(np.sqrt(x0 + u * width))
        scale = float(y.max())
        ys = y / scale
        i = int(np.argmax(ys))
        try:
            with warnings.catch_warnings():
                warnings.simplefilter("ignore")
                popt, _ = curve_fit(_lorentzian, u, ys, p0=[1 - ys.min(), u[i], 1.0, ys.min(), 0.0],
                                    maxfev=4000)
        except RuntimeError:
            popt = None
        ok = popt is not None and u[0] < popt[1] < u[-1] and popt[2] > 0 and popt[0] > 0
        if not ok:
            x0, width = x0 + u[i] * width, width / 4
            continue
        new_x0 = x0 + popt[1] * width
        new_w = popt[2] * width
        if abs(new_w - width) < 0.5 * width:
            model = _lorentzian(u, *popt)
            resid = float(np.sqrt(np.mean((model - ys) ** 2)) / popt[0])
            return float(new_x0), scale, float(new_w), resid
        x0, width = new_x0, max(new_w, 1e-15 * max(1.0, abs(new_x0)))
    raise RuntimeError(f"peak near k**2 = {x0:.6g} could not be resolved")


def _local_max(evaluate, lo, hi):
    """Position and value of the maximum of the intensity on ``[lo, hi]`` (k**2).

    Runs in the scaled variable ``u in [-1, 1]``: Brent's relative tolerance
    ``sqrt(eps) |x|`` would otherwise swamp intervals as narrow as 1e-12.
    """
    c, half = 0.5 * (lo + hi), 0.5 * (hi - lo)
    f = lambda u: -float(evaluate(np.sqrt(np.atleast_1d(c + u * half)))[0])
    res = minimize_scalar(f, bounds=(-1.0, 1.0), method="bounded", options={"xatol": 1e-10})
    return float(c + res.x * half), -float(res.fun)


def _walk(k2, y, start, step):
    """Walk the grid from ``start`` in direction ``step`` to the first valley: ``(index, value)``."""
    i = start
    m = i
    while 0 <= i < len(y):
        if y[i] < y[m]:
            m = i
        elif y[i] > 1.01 * y[m]:
            break
        i += step
    return m, float(y[m])


def _crossing(evaluate, x_peak, x_valley, half, width):
    """Half-maximum crossing between the peak and a valley, or None.

    The crossing is bracketed by doubling the offset from ``width / 4`` and
    then refined in the offset variable, so its precision scales with the
    peak width rather than with ``|x_peak|``.
    """
    sign = 1.0 if x_valley > x_peak else -1.0
    span = abs(x_valley - x_peak)
    g = lambda d: float(evaluate(np.sqrt(np.atleast_1d(x_peak + sign * d)))[0]) - half
    if g(span) > 0:
        return None
    d0, d1 = 0.0, min(max(width, 1e-300) / 4, span)
    while g(d1) > 0:
        d0, d1 = d1, min(2 * d1, span)
    d = brentq(g, d0, d1, xtol=1e-6 * (d1 - d0) + 1e-300, rtol=1e-12)
    return x_peak + sign * d


def find_peaks(slice_, refine=True, min_prominence=1.1):
    """Local maxima of ``|Theta|**2`` with Lorentzian fits, indexed by photon number.

    Candidates are the local maxima on the slice grid and, for the limit
    spectrum, the real parts of resonance poles (peaks far narrower than the
    grid spacing are found that way).  Each candidate's maximum is located by
    bounded maximisation and a Lorentzian with linear background is fitted on
    at least 8 samples per width.  ``contrast`` is the peak value over the
    higher of the two adjacent minima on the slice grid; ``fwhm`` is the
    directly measured full width at half maximum (nan if the intensity does
    not fall to half before the adjacent minima).  Candidates with contrast
    below ``min_prominence`` are dropped.
    """
    sl = slice_
    p = sl.params
    order = np.argsort(sl.k2)
    k2, y = sl.k2[order], sl.intensity[order]
    cands = []
    # pole seeds first: they locate peaks narrower than the grid exactly
    if math.isinf(sl.t) and p.alpha > 0 and not p.near_cusp:
        try:
            base = find_resonance(p)
            w0 = max(2 * abs(base.q_pole.imag), 1e-14)
            for j in range(-64, 65):
                x = base.q_pole.real + j * p.omega - 1
                if k2[0] < x < k2[-1]:
                    cands.append((x - w0, x + w0, w0))
        except ResonanceSearchError:
            pass
    for i in range(1, len(y) - 1):
        if y[i] > y[i - 1] and y[i] >= y[i + 1]:
            cands.append((k2[i - 1], k2[i + 1], k2[i + 1] - k2[i - 1]))
    evaluate = _evaluator(sl) if refine else (lambda k: np.interp(np.asarray(k) ** 2, k2, y))
    found = []
    for lo, hi, w0 in cands:
        lo, hi = max(lo, k2[0]), min(hi, k2[-1])
        if any(lo <= q.k2_center <= hi for q in found):
            continue
        if refine:
            xc, h = _local_max(evaluate, lo, hi)
        else:
            xc = 0.5 * (lo + hi)
            h = float(np.interp(xc, k2, y))
        if any(abs(q.k2_center - xc) <= 1e-9 * max(1.0, xc) + 0.5 * min(q.width, w0) for q in found):
            continue
        il = int(np.searchsorted(k2, xc, side="right")) - 1
        jl, lmin = _walk(k2, y, max(il, 0), -1)
        jr, rmin = _walk(k2, y, min(il + 1, len(y) - 1), 1)
        contrast = float(h / max(lmin, rmin, 1e-300))
        if contrast < min_prominence:
            continue
        w, r = w0, math.nan
        fw = math.nan
        if refine:
            try:
                _, _, w, r = _fit_peak(evaluate, xc, w0, k2[0], k2[-1])
            except RuntimeError:
                pass  # keep the seed width; the nan residual flags it
            left = _crossing(evaluate, xc, k2[jl], h / 2, w)
            right = _crossing(evaluate, xc, k2[jr], h / 2, w)
            if left is not None and right is not None:
                fw = right - left
        n = int(round((xc + 1) / p.omega))
        found.append(Peak(n, xc, h, w, r, contrast, fw))
    return PeakTable(tuple(sorted(found, key=lambda q: q.k2_center)))


# -- unitarity ----------------------------------------------------------------


def unitarity(params, t, phi=None, k2_cut=None, nodes=8):
    """``|theta(t)|**2 + int |Theta(k,t)|**2 dk`` from the time-domain route.

    The k integral is composite Gauss-Legendre on ``[0, k_cut]`` with panel
    edges at every ``n omega - 1`` and panel widths <= ``pi/t`` in ``k**2``
    (the integrand oscillates on that scale).  Beyond ``k_cut`` the two
    leading endpoint terms of the oscillatory integral are used,

        Theta ~ C(k) (exp(iEt) (phi(t)/(iE) + phi'(t)/E**2) - phi'(0)/E**2),

    with their cross term (oscillating, ``O(k**-7 / t)``) dropped.
    """
    if t <= 0:
        return UnitarityReport(float(t), 1.0, 0.0, 0.0)
    if phi is None:
        phi = solve_phi(params, t)
    w = params.omega
    if k2_cut is None:
        k2_cut = max(60.0, 20 * max(1.0, params.m * w))
    edges = [0.0]
    n = params.m
    while n * w - 1 < k2_cut:
        edges.append(n * w - 1)
        n += 1
    edges.append(k2_cut)
    edges = np.unique(edges)
    E_pts = []
    for a, b in zip(edges[:-1], edges[1:]):
        m = max(1, math.ceil((b - a) / (math.pi / t)))
        E_pts.append(np.linspace(a, b, m + 1)[:-1])
    E_pts = np.concatenate(E_pts + [[k2_cut]])
    k_edges = np.sqrt(E_pts)
    x, wg = roots_legendre(nodes)
    half = np.diff(k_edges) / 2
    mid = (k_edges[1:] + k_edges[:-1]) / 2
    k = (mid[:, None] + half[:, None] * x[None, :]).ravel()
    wk = (half[:, None] * wg[None, :]).ravel()
    amp = theta_big_from_phi(phi, k, t)
    continuum = 2 * float(np.sum(wk * np.abs(amp) ** 2))
    ph_t = complex(phi(t))
    d_t = complex(phi.derivative(t))
    d_0 = complex(phi.derivative(0.0))

    def tail_density(kk):
        E = 1 + kk * kk
        P = ph_t / (1j * E) + d_t / E**2
        Q = -d_0 / E**2
        return 2 / math.pi * kk * kk / (1 + kk * kk) * (abs(P) ** 2 + abs(Q) ** 2)

    tail = 2 * quad(tail_density, math.sqrt(k2_cut), np.inf, epsabs=1e-15, epsrel=1e-10)[0]
    bound = float(abs(theta_from_phi(phi, t)) ** 2)
    return UnitarityReport(float(t), bound, continuum + tail, tail)
