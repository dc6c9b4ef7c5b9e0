"""Inverse Laplace transforms in the rotated variable ``q = i p``.

For a transform ``G`` analytic above ``Im q = c``,

    f(t) = (1/2pi) int_{Im q = c} exp(-i q t) G(q) dq.

Two evaluators:

* :func:`bromwich` -- trapezoidal sum on the horizontal line with a smooth
  super-Gaussian window.  By Poisson summation the only discretisation error
  is aliasing, ``exp(-c P)`` with ``P = 2 pi / dq``; the window smooths the
  result over a time scale ``~1/Y``.  Suited to moderate t.
* :func:`deformed_contour` -- the contour pushed to ``-i infinity``: residues
  of the poles below the axis plus Hankel loops along the vertical cuts.  Cost
  independent of t; suited to large t.
"""

import math

import numpy as np
from scipy.special import roots_legendre

__all__ = ["bromwich", "hankel_loop", "deformed_contour"]


def bromwich(G, t, c=None, window=100.0, alias=30.0, chunk=20000, power=8):
    """Windowed trapezoidal Bromwich sum.

    ``G`` maps an array of complex ``q`` to transform values.  ``c`` defaults
    to ``1/max(t)``; the node spacing is ``2 pi c / alias``.
    """
    t = np.atleast_1d(np.asarray(t, float))
    if c is None:
        c = 1.0 / max(float(np.max(t)), 1.0)
    dq = 2 * math.pi * c / alias
    span = window * 30 ** (1 / power)  # window value exp(-30) at the ends
    n = int(math.ceil(span / dq))
    total = np.zeros(t.shape, complex)
    for start in range(-n, n + 1, chunk):
        j = np.arange(start, min(start + chunk, n + 1))
        x = j * dq
        q = x + 1j * c
        vals = G(q) * np.exp(-((x / window) ** power))
        total += np.exp(-1j * np.outer(t, x)) @ vals
    return total * dq / (2 * math.pi) * np.exp(c * t)


def hankel_loop(jump, b, t, n_nodes=64, u_max=6.5):
    """``(i/2pi) int_0^inf exp(-i (b - i s) t) jump(s) ds`` for each t.

    ``jump(s)`` is the left-lip value minus the right-lip value of the
    transform at ``q = b - i s``.  Substituting ``s = u**2 / t`` makes the
    integrand smooth in u for a square-root branch point.
    """
    t = np.atleast_1d(np.asarray(t, float))
    x, w = roots_legendre(n_nodes)
    u = (x + 1) / 2 * u_max
    w = w * u_max / 2
    s = u[None, :] ** 2 / t[:, None]
    J = jump(s.ravel()).reshape(s.shape)
    integral = np.sum(w * np.exp(-u**2) * 2 * u * J, axis=1) / t
    return 1j / (2 * math.pi) * np.exp(-1j * b * t) * integral


def deformed_contour(t, poles, cuts, n_nodes=64):
    """Sum of pole terms and Hankel loops.

    ``poles`` is a list of ``(q_pole, residue)`` of the transform; ``cuts`` a
    list of ``(b, jump)``.  Each pole contributes ``-i Res exp(-i q t)``.
    """
    t = np.atleast_1d(np.asarray(t, float))
    out = np.zeros(t.shape, complex)
    for q0, res in poles:
        out += -1j * res * np.exp(-1j * q0 * t)
    for b, jump in cuts:
        out += hankel_loop(jump, b, t, n_nodes=n_nodes)
    return out
