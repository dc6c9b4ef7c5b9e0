"""The wavefunction psi(x, t).

Contour inversion of the Laplace-domain field gives psi directly.  At late
times the outgoing electrons travel on rays x = v t, and psi there is given
by the boundary amplitude A(v**2 / 4).
"""

import numpy as np

from deltaion import LaplaceField, ModelParams, asymptotic_ray, invert_moderate, spectral_reconstruct
from deltaion.volterra import solve_phi

p = ModelParams(0.5, 1.51)
field = LaplaceField(p)
t = 3 * p.period

# %% Norm and the spectral cross-check
x = np.arange(0, 150, 0.05)
slice_ = invert_moderate(field, t, x)
print(f"norm - 1 at t = 3T: {slice_.norm() - 1:.1e}")
near = np.linspace(0, 20, 81)
b = spectral_reconstruct(p, t, near, phi=solve_phi(p, t, tol=1e-10), k_max=24.0)
print(f"max |inversion - spectral| on |x| <= 20: {np.max(np.abs(invert_moderate(field, t, near).psi - b.psi)):.1e}")

# %% Ray form far from the photon thresholds
strong = LaplaceField(ModelParams(1.5, 1.52))
v = np.array([0.6, 0.9, 1.2])
exact = invert_moderate(strong, 800.0, v * 800.0, window=20.0).psi
ray = asymptotic_ray(strong, v, 800.0)
for vi, e, r in zip(v, exact, ray):
    print(f"v = {vi}: |psi| = {abs(e):.5e}, ray {abs(r):.5e}")
