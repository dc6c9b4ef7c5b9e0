"""Model parameters for the driven delta well."""

import math
import warnings
from dataclasses import dataclass


class CuspWarning(UserWarning):
    """1/omega sits close to an integer; decay is not exponential there."""


@dataclass(frozen=True)
class ModelParams:
    """Drive strength ``alpha`` and frequency ``omega`` (units hbar = 2m = E_b = 1).

    ``alpha = 0`` is accepted and gives the undriven atom.
    """

    alpha: float
    omega: float

    def __post_init__(self):
        if not (math.isfinite(self.alpha) and math.isfinite(self.omega)):
            raise ValueError("alpha and omega must be finite")
        if self.alpha < 0:
            raise ValueError("alpha must be >= 0")
        if self.omega <= 0:
            raise ValueError("omega must be > 0")
        if self.near_cusp:
            warnings.warn(
                f"1/omega = {1 / self.omega:.6g} is within 1e-3 of an integer; "
                "exponential-rate diagnostics are unreliable",
                CuspWarning,
                stacklevel=3,
            )

    @property
    def m(self):
        """Least integer with ``m * omega > 1`` (minimal photon number)."""
        return math.floor(1 / self.omega) + 1

    @property
    def period(self):
        return 2 * math.pi / self.omega

    @property
    def near_cusp(self):
        inv = 1 / self.omega
        return abs(inv - round(inv)) < 1e-3
