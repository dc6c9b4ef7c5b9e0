"""Lattice solvers and resonance poles.

The Laplace transform of the well amplitude obeys a three-term recurrence on
the lattice q + n omega.  Two independent solvers (cyclic-reduction doubling
and continued fractions) must agree, and the poles of the continued transform
give the decay rates.
"""

import numpy as np

from deltaion import ModelParams, find_resonance, solve_continued_fraction, solve_functional_equation

p = ModelParams(alpha=0.5, omega=1.51)

# %% Two solvers on the same lattice cell
sigma = 0.4 * p.omega + 0.2j
a = solve_functional_equation(p, sigma, depth=6)
b = solve_continued_fraction(p, sigma)
n = range(-63, 64)
gap = np.max(np.abs(np.array([a[j] for j in n]) - np.array([b[j] for j in n])))
print(f"doubling vs continued fraction on |n| < 64: {gap:.1e}")
print(f"recurrence residuals: {a.residual_norm:.1e}, {b.residual_norm:.1e}")

# %% The resonance pole and its weak-field limit
r = find_resonance(p)
print(f"pole q = {r.q_pole:.6f}, decay rate 2|Im q| = {r.gamma:.6f}")
for alpha in (0.1, 0.05, 0.02):
    w = find_resonance(ModelParams(alpha, p.omega)).gamma
    print(f"alpha = {alpha:<5} rate / golden rule = {w / (alpha**2 * np.sqrt(p.omega - 1) / p.omega):.5f}")
