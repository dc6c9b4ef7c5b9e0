import math

import mpmath as mp
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from deltaion.inversion import bromwich
from deltaion.lattice import phi_transform
from deltaion.params import ModelParams
from deltaion.volterra import (
    ConvergenceError,
    oscillatory_moments,
    solve_phi,
    solve_phi_fixed,
    theta_big_from_phi,
    theta_from_phi,
)


@pytest.fixture(scope="module")
def phi_ref():
    p = ModelParams(0.5, 1.51)
    return p, solve_phi(p, 30.0, tol=1e-10)


def test_zero_coupling():
    p = ModelParams(0.0, 1.3)
    phi = solve_phi(p, 10.0)
    t = np.linspace(0, 10, 11)
    assert np.all(phi(t) == 0)
    assert np.all(theta_from_phi(phi, t) == 1)


def test_phi_against_bromwich_inversion(phi_ref):
    # independent route: invert the lattice transform of phi
    p, phi = phi_ref
    a, w = p.alpha, p.omega
    t = np.array([0.5, 3.0, 11.0, 29.0])

    def G(q):
        return phi_transform(p, q) - a * w / (w * w - q * q)

    ref = a * np.sin(w * t) + bromwich(G, t, window=150.0)
    np.testing.assert_allclose(phi(t), ref, atol=1e-7)


def test_short_time_behaviour():
    # phi = alpha sin(omega t) (1 + O(sqrt t)) with the kernel's s**-1/2 singularity
    p = ModelParams(0.3, 2.0)
    phi = solve_phi(p, 0.5, tol=1e-10)
    t = np.array([1e-4, 1e-3])
    lead = 0.3 * np.sin(2.0 * t)
    rel = np.abs(phi(t) / lead - 1)
    assert np.all(rel < 3 * np.sqrt(t))


def test_mesh_convergence_order():
    p = ModelParams(0.8, 1.2)
    t = np.linspace(0, 8, 33)
    ref = theta_from_phi(solve_phi_fixed(p, 8.0, panel=0.0125), t)
    errs = [np.max(np.abs(theta_from_phi(solve_phi_fixed(p, 8.0, panel=h), t) - ref))
            for h in (0.2, 0.1)]
    assert errs[0] / errs[1] > 2**3


def test_controller_reports_history():
    p = ModelParams(1.0, 1.2)
    with pytest.raises(ConvergenceError) as info:
        solve_phi(p, 5.0, tol=1e-10, max_halvings=1)
    assert len(info.value.history) == 1


def test_input_limits():
    p = ModelParams(0.5, 1.51)
    with pytest.raises(ValueError):
        solve_phi(p, 10.0, tol=1e-12)
    with pytest.raises(ValueError):
        solve_phi(p, 201 * p.period)
    with pytest.raises(ValueError):
        solve_phi_fixed(p, 0.0)


def test_evaluation_outside_range(phi_ref):
    _, phi = phi_ref
    with pytest.raises(ValueError):
        phi(np.array([31.0]))


def test_theta_derivative_identity(phi_ref):
    # d theta / dt = 2 i phi
    _, phi = phi_ref
    t = np.array([2.0, 7.3, 19.0])
    h = 1e-4
    d = (theta_from_phi(phi, t + h) - theta_from_phi(phi, t - h)) / (2 * h)
    np.testing.assert_allclose(d, 2j * phi(t), atol=1e-6)


@settings(max_examples=50)
@given(st.floats(-200, 200), st.integers(0, 6))
def test_oscillatory_moments_match_mpmath(zeta, order):
    got = oscillatory_moments(np.array([zeta]), order)[0]
    mp.mp.dps = 30
    for j in range(order + 1):
        ref = complex(mp.quad(lambda x: x**j * mp.expj(zeta * x), [0, 1]))
        assert abs(got[j] - ref) < 1e-12


def test_big_theta_against_dense_quadrature(phi_ref):
    _, phi = phi_ref
    k = np.array([0.1, 0.6, 1.7, 4.0])
    t = 25.3
    s = np.linspace(0, t, 400001)
    vals = phi(s)[None, :] * np.exp(1j * (1 + k[:, None] ** 2) * s[None, :])
    integral = np.sum((vals[:, 1:] + vals[:, :-1]) / 2, axis=1) * (s[1] - s[0])
    ref = math.sqrt(2 / math.pi) * k / (1 - 1j * k) * integral
    np.testing.assert_allclose(theta_big_from_phi(phi, k, t), ref, atol=1e-8)


def test_big_theta_even_in_k(phi_ref):
    _, phi = phi_ref
    k = np.array([0.3, 1.1])
    np.testing.assert_array_equal(theta_big_from_phi(phi, k, 12.0), theta_big_from_phi(phi, -k, 12.0))
