"""Closed-form limits of the two-particle free energy for the
frequency-independent gyrotropic model, and the radial crossover scan.

These are the calibration and validation oracles: straight transcriptions
of the analytic large- and small-separation results, sharing no numerics
with the Green-tensor engine.  Geometry convention: particle 1 at the
origin with gyrotropy b1, particle 2 at
d (cos phi sin theta, sin phi sin theta, cos theta) with gyrotropy b2,
both gyrotropy axes along x.
"""

import math
from dataclasses import dataclass

import numpy as np

from .thermal import DEFAULT_POLICY, ThermalContext


@dataclass(frozen=True)
class ToyGeometry:
    """Pair geometry for the closed-form evaluators.

    d in meters; theta, phi in radians; alpha0 in m^3.
    """

    d: float
    theta: float
    phi: float
    b1: float
    b2: float
    alpha0: float
    ctx: ThermalContext

    def __post_init__(self):
        if not self.d > 0:
            raise ValueError("d must be positive")

    @property
    def direction(self):
        st = math.sin(self.theta)
        return np.array([
            math.cos(self.phi) * st,
            math.sin(self.phi) * st,
            math.cos(self.theta),
        ])


def _angular(theta, phi):
    return math.cos(2.0 * theta) - 2.0 * math.cos(2.0 * phi) * math.sin(theta) ** 2


def f_long(g):
    """Classical (large-separation) free energy in joules:

        k_B T alpha0^2/(32 d^6 pi^2) *
            [-12 - 5 b1 b2 - 3 b1 b2 (cos 2theta - 2 cos 2phi sin^2 theta)]
    """
    p = g.b1 * g.b2
    bracket = -12.0 - 5.0 * p - 3.0 * p * _angular(g.theta, g.phi)
    return g.ctx.kT * g.alpha0**2 / (32.0 * g.d**6 * math.pi**2) * bracket


def f_short(g):
    """Retarded (small-separation) free energy in joules:

        hbar c alpha0^2/(64 d^7 pi^3) *
            [-23 - 8 b1 b2 - 7 b1 b2 (cos 2theta - 2 cos 2phi sin^2 theta)]
    """
    p = g.b1 * g.b2
    bracket = -23.0 - 8.0 * p - 7.0 * p * _angular(g.theta, g.phi)
    return g.ctx.hbar * g.ctx.c * g.alpha0**2 / (64.0 * g.d**7 * math.pi**3) * bracket


@dataclass(frozen=True)
class CrossoverScan:
    """Result of a radial scan: distances and energies (SI), indices of
    sign changes, and the located stationary point if any."""

    distances: np.ndarray
    energies: np.ndarray
    sign_changes: tuple
    stationary_distance: float | None
    stationary_energy: float | None
    status: str


def _golden_minimize(fun, lo, hi, rel_tol=1e-10):
    """Golden-section minimum of fun on [lo, hi]."""
    invphi = (math.sqrt(5.0) - 1.0) / 2.0
    a, b = lo, hi
    c = b - invphi * (b - a)
    d = a + invphi * (b - a)
    fc, fd = fun(c), fun(d)
    while (b - a) > rel_tol * (abs(a) + abs(b)):
        if fc < fd:
            b, d, fd = d, c, fc
            c = b - invphi * (b - a)
            fc = fun(c)
        else:
            a, c, fc = c, d, fd
            d = a + invphi * (b - a)
            fd = fun(d)
    xm = 0.5 * (a + b)
    return xm, fun(xm)


def crossover_scan(b1b2, alpha0, ctx, theta=math.pi / 2.0, phi=0.0,
                   d_min_lambda=1e-2, d_max_lambda=1e2, samples=61,
                   policy=DEFAULT_POLICY):
    """Scan the numeric one-reflection free energy along the radial
    coordinate and locate its stationary point.

    The scan runs over ``samples`` log-spaced distances; a stationary
    point is bracketed by a sign change of the radial force and then
    pinned by golden-section search on the energy.  Returns a
    CrossoverScan whose status is "stationary-point" when one is found
    and "no-crossover" otherwise.
    """
    from .interaction import ParticleSpec, force, pair_free_energy_batch
    from .materials import ToyPolarizability

    # the one-reflection energy depends on the gyrotropies only through
    # their product, so any factorization works
    b1, b2 = float(b1b2), 1.0
    m1 = ToyPolarizability(alpha0=alpha0, b=b1)
    m2 = ToyPolarizability(alpha0=alpha0, b=b2)
    st = math.sin(theta)
    direction = np.array([math.cos(phi) * st, math.sin(phi) * st,
                          math.cos(theta)])

    xs = np.geomspace(d_min_lambda, d_max_lambda, samples)
    f_hat, _ = pair_free_energy_batch(direction * xs[:, None], m2, m1, ctx,
                                      policy)
    energies = f_hat * ctx.kT
    distances = xs * ctx.lambda_T

    signs = np.sign(energies)
    flips = np.flatnonzero(np.diff(signs) != 0)
    sign_changes = tuple((float(distances[i]), float(distances[i + 1]))
                         for i in flips)

    def radial_force(x_lambda):
        p2 = ParticleSpec(direction * x_lambda * ctx.lambda_T, m2)
        p1 = ParticleSpec(np.zeros(3), m1)
        return float(force(p2, p1, ctx, policy, method="analytic") @ direction)

    # bracket the stationary point by the repulsive -> attractive flip
    bracket = None
    prev = radial_force(xs[0])
    for xv in xs[1:]:
        cur = radial_force(xv)
        if prev > 0.0 and cur < 0.0:
            bracket = (xv / (xs[1] / xs[0]), xv)
            break
        prev = cur

    if bracket is None:
        return CrossoverScan(distances, energies, sign_changes, None, None,
                             "no-crossover")

    def f_of_x(x_lambda):
        val, _ = pair_free_energy_batch(direction[None, :] * x_lambda, m2, m1,
                                        ctx, policy)
        return float(val[0])

    x_star, f_star = _golden_minimize(f_of_x, *bracket)
    return CrossoverScan(distances, energies, sign_changes,
                         float(x_star * ctx.lambda_T),
                         float(f_star * ctx.kT), "stationary-point")
