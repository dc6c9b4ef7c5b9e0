"""Complex elementary and special functions with fixed branch conventions.

Two square-root conventions appear in the model and they must never be mixed:

* the *lattice root* :func:`sqrt_lattice`, with ``sqrt(u) = -i sqrt(|u|)`` for
  ``u < 0`` and the cut rotated onto the positive imaginary ``u`` axis, so the
  function continues smoothly across the negative real axis into the upper
  half ``u`` plane (this is the sheet reached from the physical region when a
  Laplace variable ``q`` crosses the positive real axis downward);
* the *functional-equation root* :func:`sqrt_functional`, positive on the
  positive reals and continued through the upper half plane.  For ``Im z >= 0``
  it satisfies ``1j * sqrt_functional(z) == -sqrt_lattice(-z)``.

The complex error function is evaluated with Weideman's rational
approximation of the Faddeeva function in the intermediate region, a Laplace
continued fraction far out and the Maclaurin series near the origin.
"""

import math

import numpy as np

__all__ = [
    "sqrt_lattice",
    "sqrt_functional",
    "faddeeva",
    "erf_complex",
    "eta_kernel",
    "eta_parts",
    "eta_smooth_factor",
]

_ROT = complex(math.cos(-math.pi / 4), math.sin(-math.pi / 4))
_SQRT_PI = math.sqrt(math.pi)


def _check_finite(z, name):
    if not np.all(np.isfinite(z)):
        raise ValueError(f"{name}: non-finite input")


def sqrt_lattice(u):
    """Square root with the lattice convention.

    ``sqrt_lattice(u)**2 == u``; real ``u > 0`` gives the positive root, real
    ``u < 0`` gives ``-1j * sqrt(|u|)``.  The cut lies on ``u = i s``, ``s > 0``.
    """
    u = u_in = np.asarray(u, dtype=complex)
    _check_finite(u, "sqrt_lattice")
    r = np.atleast_1d(np.sqrt(1j * u) * _ROT)
    u = np.atleast_1d(u)
    real = u.imag == 0
    if np.any(real):
        x = u.real[real]
        r[real] = np.where(x >= 0, np.sqrt(np.abs(x)) + 0j, -1j * np.sqrt(np.abs(x)))
    return r if np.ndim(u_in) else complex(r[0])


def sqrt_functional(z):
    """Square root positive on the positive reals, continued through Im z > 0.

    Defined for the closed upper half plane; points with ``Im z < 0`` are
    continued across the negative real axis, i.e. through the same sheet as
    :func:`sqrt_lattice` after the map ``z -> -z``.
    """
    z = np.asarray(z, dtype=complex)
    _check_finite(z, "sqrt_functional")
    return 1j * sqrt_lattice(-z)


def _weideman_coefficients(n_terms):
    m = 2 * n_terms
    k = np.arange(-m + 1, m)
    ell = math.sqrt(n_terms / math.sqrt(2.0))
    theta = k * math.pi / m
    t = ell * np.tan(theta / 2)
    f = np.concatenate(([0.0], np.exp(-t * t) * (ell * ell + t * t)))
    a = np.real(np.fft.fft(np.fft.fftshift(f))) / (2 * m)
    return ell, np.flipud(a[1 : n_terms + 1])


_WEIDEMAN_L, _WEIDEMAN_A = _weideman_coefficients(40)


def _faddeeva_cf(z, depth=60):
    # Laplace continued fraction, Im z > 0 and |z| large.
    r = np.zeros_like(z)
    for k in range(depth, 0, -1):
        r = (k / 2.0) / (z - r)
    return (1j / _SQRT_PI) / (z - r)


def faddeeva(z):
    """Faddeeva function ``w(z) = exp(-z**2) erfc(-i z)`` for ``Im z >= 0``."""
    z = np.asarray(z, dtype=complex)
    _check_finite(z, "faddeeva")
    if np.any(z.imag < 0):
        raise ValueError("faddeeva: only the closed upper half plane is supported")
    out = np.empty_like(z)
    far = np.abs(z) > 12.0
    if np.any(far):
        out[far] = _faddeeva_cf(z[far])
    near = ~far
    if np.any(near):
        zn = z[near]
        ell = _WEIDEMAN_L
        denom = ell - 1j * zn
        p = np.polyval(_WEIDEMAN_A, (ell + 1j * zn) / denom)
        out[near] = 2 * p / denom**2 + (1 / _SQRT_PI) / denom
    return out if out.ndim else complex(out)


def _erf_series(z, n_terms=60):
    z2 = z * z
    term = z.copy()
    total = z.copy()
    for n in range(1, n_terms):
        term = term * (-z2) / n
        total = total + term / (2 * n + 1)
    return 2 / _SQRT_PI * total


def erf_complex(z):
    """Complex error function.

    Odd and conjugation symmetric by construction: the value is computed in the
    first quadrant and mapped back.  Raises ``OverflowError`` where the result
    itself exceeds double range (far along the imaginary axis).
    """
    z = np.asarray(z, dtype=complex)
    _check_finite(z, "erf_complex")
    if np.any(np.abs(z) >= 1e6):
        raise ValueError("erf_complex: |z| must be below 1e6")
    flip = z.real < 0
    zq = np.where(flip, -z, z)
    conj = zq.imag < 0
    zq = np.where(conj, np.conj(zq), zq)
    out = np.empty_like(zq)
    small = np.abs(zq) < 1.5
    if np.any(small):
        out[small] = _erf_series(zq[small])
    big = ~small
    if np.any(big):
        zb = zq[big]
        expo = -(zb * zb)
        if np.any(expo.real > 700):
            raise OverflowError("erf_complex: result exceeds double range")
        out[big] = 1 - np.exp(expo) * faddeeva(1j * zb)
    # exact zeros on the axes (erf is real on the real axis, imaginary on the imaginary one)
    out = np.where(zq.imag == 0, out.real + 0j, out)
    out = np.where(zq.real == 0, 1j * out.imag, out)
    out = np.where(conj, np.conj(out), out)
    out = np.where(flip, -out, out)
    return out if out.ndim else complex(out)


def _check_positive(s):
    s = np.asarray(s, dtype=float)
    if np.any(~np.isfinite(s)) or np.any(s <= 0):
        raise ValueError("eta kernel is defined for s > 0 only")
    return s


def eta_parts(s):
    """Return ``(singular, regular)`` with ``eta = singular + regular``.

    ``singular = i exp(-i s) / (sqrt(pi) sqrt(i s))`` carries the ``s**-1/2``
    behaviour; ``regular = i (erf(sqrt(i s)) + 1)`` is bounded and tends to
    ``i`` as ``s -> 0+``.  ``sqrt(i s)`` is the functional-equation root
    ``exp(i pi/4) sqrt(s)``.
    """
    s = _check_positive(s)
    w = sqrt_functional(1j * s)
    singular = 1j * np.exp(-1j * s) / (_SQRT_PI * w)
    regular = 1j * (erf_complex(w) + 1)
    return singular, regular


def eta_kernel(s):
    """Memory kernel ``eta(s) = i (erf(w) + exp(-i s)/(sqrt(pi) w) + 1)``, ``w = sqrt(i s)``.

    Its Laplace transform is ``1/(sqrt(1 - i p) - 1)``, which is what makes
    the transform of phi obey the lattice functional equation.
    """
    singular, regular = eta_parts(s)
    return singular + regular


def eta_smooth_factor(s):
    """``sqrt(s) * (eta(s) - i)``, an entire function of ``s`` (also at s = 0).

    ``eta(s) = i + s**-0.5 * eta_smooth_factor(s)``; the product-integration
    rule integrates the ``s**-0.5`` weight exactly and treats this factor as
    smooth.
    """
    s = np.asarray(s, dtype=float)
    if np.any(s < 0):
        raise ValueError("eta_smooth_factor: s >= 0 required")
    w = sqrt_functional(1j * s)
    # E = w erf(w) + exp(-w^2)/sqrt(pi) is entire in w^2; eta - i = i E / w
    e = w * erf_complex(w) + np.exp(-1j * s) / _SQRT_PI
    return 1j * _ROT * e
