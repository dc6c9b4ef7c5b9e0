"""Photoelectron spectra |Theta(k, t)|**2.

Peaks sit near k**2 = n omega - 1, one per absorbed photon number, shifted
down by the AC Stark effect.  They broaden with the drive and merge into a
continuum for strong fields.
"""

import numpy as np

from deltaion import ModelParams, find_peaks, spectrum_finite_time, spectrum_infinite_time, unitarity

# %% Weak field: a three-photon line
p = ModelParams(0.01, 0.4)
for pk in find_peaks(spectrum_infinite_time(p, np.linspace(0.05, 1.5, 800))):
    print(f"n = {pk.n}  k^2 = {pk.k2_center:.13f}  height = {pk.height:.3e}")

# %% Peak widths grow with alpha
k = np.sqrt(np.linspace(1e-4, 3.0, 3000))
for alpha in (0.5, 1.0, 2.0, 3.0):
    peaks = find_peaks(spectrum_infinite_time(ModelParams(alpha, 0.4), k))
    first = peaks[0]
    print(f"alpha = {alpha}: first peak n = {first.n}, FWHM {first.fwhm:.4f}, contrast {first.contrast:.2f}")

# %% Finite-time spectra build up towards the t = inf limit
p = ModelParams(0.5, 1.51)
k = np.sqrt(np.linspace(0.01, 4.5, 2000))
for n in (5, 10):
    print(f"t = {n}T: max |Theta|^2 = {spectrum_finite_time(p, k, n * p.period).intensity.max():.5f}")
print(f"t = inf: max |Theta|^2 = {spectrum_infinite_time(p, k).intensity.max():.5f}")

# %% Probability is conserved
print(f"unitarity defect at 5T: {unitarity(p, 5 * p.period).defect:.1e}")
