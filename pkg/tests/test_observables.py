import math

import numpy as np
import pytest

from deltaion.lattice import find_resonance
from deltaion.observables import (
    ContourExpansion,
    InconsistencyError,
    StabilizationError,
    SurvivalCurve,
    continuum_prefactor,
    find_peaks,
    fit_decay_rate,
    fit_tail_law,
    small_alpha_closed_form,
    spectrum_finite_time,
    spectrum_infinite_time,
    survival_curve,
    theta_bromwich,
    unitarity,
)
from deltaion.params import ModelParams
from deltaion.volterra import solve_phi, theta_big_from_phi, theta_from_phi

P = ModelParams(0.5, 1.51)


@pytest.fixture(scope="module")
def phi_long():
    return solve_phi(P, 50 * P.period, tol=1e-9)


def test_continuum_prefactor():
    k = np.array([-2.0, 0.0, 0.5])
    np.testing.assert_allclose(continuum_prefactor(k),
                               math.sqrt(2 / math.pi) * np.abs(k) / (1 - 1j * np.abs(k)))


def test_zero_coupling_outputs():
    p = ModelParams(0.0, 1.3)
    k = np.linspace(0, 3, 7)
    assert np.all(spectrum_infinite_time(p, k).amplitude == 0)
    assert np.all(spectrum_finite_time(p, k, 5.0).amplitude == 0)
    assert np.all(survival_curve(p, np.linspace(0, 1e4, 5)).theta == 1)
    assert unitarity(p, 3.0).defect == 0


@pytest.mark.parametrize("alpha,omega,periods", [(0.3, 2.2, 3), (1.2, 0.7, 2), (0.05, 0.4, 1)])
def test_unitarity(alpha, omega, periods):
    p = ModelParams(alpha, omega)
    assert unitarity(p, periods * p.period).defect < 1e-6


def test_theta_bromwich_matches_oracle(phi_long):
    t = np.linspace(0, 50, 41)
    assert np.max(np.abs(theta_bromwich(P, t) - theta_from_phi(phi_long, t))) < 1e-6


def test_contour_expansion_matches_oracle(phi_long):
    ce = ContourExpansion(P, t_min=20 * P.period)
    t = np.linspace(20, 50, 7) * P.period
    assert np.max(np.abs(ce.theta(t) - theta_from_phi(phi_long, t))) < 1e-9
    k = np.array([0.2, 0.61, 1.3])
    tt = 45 * P.period
    assert np.max(np.abs(ce.big_theta(k, tt) - theta_big_from_phi(phi_long, k, tt))) < 1e-8


def test_contour_expansion_domain():
    ce = ContourExpansion(P, t_min=100.0)
    with pytest.raises(ValueError):
        ce.theta(50.0)
    with pytest.raises(ValueError):
        ce.big_theta(np.array([0.5]), np.array([200.0, 300.0]))


def test_finite_time_spectrum_tends_to_limit():
    # away from the peaks the approach is through the cut terms, ~ t**-3/2
    k = np.array([0.3, 1.4, 2.2])
    limit = spectrum_infinite_time(P, k).amplitude
    gaps = [np.max(np.abs(spectrum_finite_time(P, k, n * P.period).amplitude - limit))
            for n in (200, 800)]
    assert gaps[0] < 1e-5
    assert 5 < gaps[0] / gaps[1] < 12


def test_small_alpha_lorentzian_moduli():
    p = ModelParams(0.02, 1.51)
    r = find_resonance(p)
    k = np.sqrt(r.q_pole.real - 1 + np.linspace(-3, 3, 13) * r.gamma)
    exact = np.abs(spectrum_infinite_time(p, k).amplitude)
    approx = np.abs(small_alpha_closed_form(p, k, math.inf))
    # leading order in alpha; the centre shift is O(alpha**2) relative to the width
    np.testing.assert_allclose(approx, exact, rtol=0.05)
    with pytest.raises(ValueError):
        small_alpha_closed_form(ModelParams(0.02, 0.8), k, math.inf)


def test_survival_routes_consistent():
    t = np.concatenate([np.linspace(0, 40, 81), np.linspace(100, 300, 5)]) * P.period
    curve = survival_curve(P, t)
    assert curve.theta[0] == 1
    lap = survival_curve(P, t[t > 0], route="laplace").theta
    # the two expansions tabulate their cut jumps over different ranges
    np.testing.assert_allclose(curve.theta[t >= 20 * P.period], lap[t[t > 0] >= 20 * P.period],
                               atol=1e-9)
    with pytest.raises(ValueError):
        survival_curve(P, t, route="fast")
    with pytest.raises(ValueError):
        survival_curve(P, t[::-1])


def test_survival_overlap_check_fires():
    t = np.linspace(0, 60, 7) * P.period
    with pytest.raises(InconsistencyError):
        survival_curve(P, t, overlap_tol=1e-20)


def test_decay_rate_on_synthetic_curve():
    t = np.linspace(0, 100, 201)
    c = SurvivalCurve(t, np.exp(-0.0625 * t + 0.3j * t))
    assert abs(fit_decay_rate(c, (10, 90)) - 0.125) < 1e-12
    assert c.fitted_rate == pytest.approx(0.125)


def test_decay_rate_refused_near_cusp():
    with pytest.warns(UserWarning):
        p = ModelParams(0.5, 0.5)
    c = SurvivalCurve(np.linspace(0, 10, 11), np.ones(11, complex), p)
    with pytest.raises(StabilizationError):
        fit_decay_rate(c, (1, 9))


def test_tail_law_on_synthetic_curve():
    t = np.geomspace(1e3, 1e5, 2001)
    p, A = fit_tail_law(SurvivalCurve(t, np.sqrt(0.7 * t**-3.0)), (1e3, 1e5))
    assert abs(p + 3) < 1e-10
    assert A == pytest.approx(0.7, rel=1e-9)
    # beating is averaged out by the log-t binning
    wavy = np.sqrt(0.7 * t**-3.0) * (1 + 0.1 * np.cos(3 * t))
    p, A = fit_tail_law(SurvivalCurve(t, wavy), (1e3, 1e5))
    assert abs(p + 3) < 0.01
    assert A == pytest.approx(0.7 * 1.005, rel=0.02)
    with pytest.raises(ValueError):
        fit_tail_law(SurvivalCurve(t, wavy), (1e3, 5e3))


def test_peak_sits_on_resonance():
    r = find_resonance(P)
    k = np.sqrt(np.linspace(0.01, 4.0, 1500))
    peaks = find_peaks(spectrum_infinite_time(P, k))
    first = peaks.by_photon(1)
    assert abs(first.k2_center - (r.q_pole.real - 1)) < 0.1 * r.gamma
    assert abs(first.fwhm / r.gamma - 1) < 0.1
    assert first.contrast > 2
    with pytest.raises(KeyError):
        peaks.by_photon(40)
