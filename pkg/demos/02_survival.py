"""Survival amplitude theta(t) from two routes.

Up to a few dozen periods theta comes from the Volterra equation.  Later
times use the contour expansion (resonance pole plus cut terms), which
reaches t = 1e5 cheaply and shows the t**-3 power-law tail.
"""

import numpy as np

from deltaion import (ModelParams, find_resonance, fit_decay_rate, fit_tail_law, survival_curve,
                      theta_bromwich)
from deltaion.volterra import solve_phi, theta_from_phi

p = ModelParams(alpha=0.5, omega=1.51)

# %% Volterra vs numerical Laplace inversion
t = np.linspace(0, 50, 51)
diff = np.abs(theta_from_phi(solve_phi(p, 50.0, tol=1e-9), t) - theta_bromwich(p, t))
print(f"max |theta_volterra - theta_laplace| on t <= 50: {diff.max():.1e}")

# %% Exponential decay
curve = survival_curve(p, np.linspace(0, 200, 2001))
print(f"fitted rate {fit_decay_rate(curve, (10, 100)):.6f}, pole rate {find_resonance(p).gamma:.6f}")

# %% Power-law tail
late = np.geomspace(1e3, 1e5, 4000)
tail = survival_curve(p, late, route="laplace")
exponent, amplitude = fit_tail_law(tail, (1e3, 1e5))
print(f"|theta|^2 ~ {amplitude:.3g} t^{exponent:.3f}")

# %% Ionization after t = 50 is not monotone in the drive
for alpha in (0.5, 0.98, 1.3):
    s = survival_curve(ModelParams(alpha, 1.51), np.array([0.0, 50.0])).survival[-1]
    print(f"alpha = {alpha:<5} 1 - |theta(50)|^2 = {1 - s:.4f}")
