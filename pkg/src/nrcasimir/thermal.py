"""Temperature context, thermal wavelength and the Matsubara grid."""

from dataclasses import dataclass

import numpy as np
from scipy.constants import Boltzmann, c as _c_light, hbar as _hbar


@dataclass(frozen=True)
class ThermalContext:
    """Equilibrium temperature plus the physical constants of the run.

    Thermal fluctuations are summed over the discrete imaginary-frequency
    (Matsubara) grid kappa_n = 2*pi*n*k_B*T/(hbar*c).  The natural length
    scale is the thermal wavelength lambda_T = hbar*c/(k_B*T); internally
    the engine measures all lengths in lambda_T, so kappa_n*lambda_T is
    exactly 2*pi*n and energies come out in units of k_B*T.

    Parameters
    ----------
    temperature : float
        Temperature in kelvin, > 0.
    hbar, c, k_B : float
        Physical constants (SI).  Overridable for unit experiments.
    """

    temperature: float = 300.0
    hbar: float = _hbar
    c: float = _c_light
    k_B: float = Boltzmann

    def __post_init__(self):
        if not self.temperature > 0:
            raise ValueError(f"temperature must be > 0 K, got {self.temperature}")

    @property
    def lambda_T(self):
        """Thermal wavelength hbar*c/(k_B*T) in meters."""
        return self.hbar * self.c / (self.k_B * self.temperature)

    @property
    def kappa1(self):
        """First Matsubara wavenumber 2*pi*k_B*T/(hbar*c) in 1/m."""
        return 2.0 * np.pi / self.lambda_T

    @property
    def kT(self):
        """k_B*T in joules."""
        return self.k_B * self.temperature

    def matsubara_xi(self, n):
        """Imaginary frequency c*kappa_n = 2*pi*n*k_B*T/hbar in rad/s."""
        return np.asarray(n, dtype=float) * (
            2.0 * np.pi * self.k_B * self.temperature / self.hbar
        )


def matsubara_kappa(n, ctx):
    """Matsubara wavenumber kappa_n = 2*pi*n*k_B*T/(hbar*c) in 1/m.

    ``n`` may be a scalar or array of non-negative integers; kappa_0 = 0.
    """
    n = np.asarray(n)
    if np.any(n < 0):
        raise ValueError("Matsubara index must be non-negative")
    return n * ctx.kappa1


@dataclass(frozen=True)
class MatsubaraPolicy:
    """Stopping rule for adaptive Matsubara sums.

    Terms are added in ascending n (n = 0 enters with weight 1/2).  The
    sum stops at the first index where either the geometric tail bound --
    an extrapolation of the exp(-2*kappa_n*d) decay from the last two
    terms -- falls below max(abs_tol, rel_tol*|partial sum|), or
    kappa_n*d exceeds the hard screening cutoff (terms beyond it are
    smaller than exp(-80) relative and identically negligible in double
    precision).  The tail test is not consulted before ``n_min`` terms.
    Reaching ``n_max`` without either trigger raises ConvergenceError.

    ``abs_tol`` is in units of k_B*T.
    """

    rel_tol: float = 1e-12
    abs_tol: float = 0.0
    n_max: int = 200_000
    n_min: int = 3

    def __post_init__(self):
        if self.rel_tol < 0 or self.abs_tol < 0:
            raise ValueError("tolerances must be non-negative")
        if self.rel_tol == 0 and self.abs_tol == 0:
            raise ValueError("at least one of rel_tol/abs_tol must be positive")
        if self.n_max < self.n_min:
            raise ValueError("n_max must be >= n_min")


DEFAULT_POLICY = MatsubaraPolicy()

# Hard screening cutoff: the sum never proceeds past kappa_n*d > KAPPA_D_CUTOFF,
# where term magnitudes are below exp(-2*KAPPA_D_CUTOFF) ~ 1.8e-35 relative.
KAPPA_D_CUTOFF = 40.0
