"""Polarizability models for the dipole-limit scatterers.

Two material models are provided: a frequency-independent gyrotropic
tensor (an analytically tractable stand-in for a magnetized particle),
and a magneto-optical Drude permittivity mapped to a sphere polarizability
through the tensor Clausius-Mossotti relation.  Response tensors are
evaluated on the imaginary frequency axis, where causality makes them
real; non-reciprocity shows up as an antisymmetric part.
"""

import warnings
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import ResonanceError

_EYE3 = np.eye(3)

AXIS_UNIT_TOL = 1e-12


def unit_axis(axis):
    """Validate and normalize a direction vector.

    Deviations of the norm from 1 up to AXIS_UNIT_TOL are renormalized
    (warning above 1e-15, silently below); larger deviations are errors.
    """
    a = np.asarray(axis, dtype=float)
    if a.shape != (3,):
        raise ValueError(f"axis must be a 3-vector, got shape {a.shape}")
    norm = np.linalg.norm(a)
    dev = abs(norm - 1.0)
    if dev > AXIS_UNIT_TOL:
        raise ValueError(f"axis norm deviates from 1 by {dev:.3e} (> {AXIS_UNIT_TOL:g})")
    if dev > 1e-15:
        warnings.warn(f"axis renormalized (|norm - 1| = {dev:.2e})")
    return a / norm


def cross_generator(axis):
    """Antisymmetric matrix K with K @ v = axis x v."""
    a = np.asarray(axis, dtype=float)
    return np.array([
        [0.0, -a[2], a[1]],
        [a[2], 0.0, -a[0]],
        [-a[1], a[0], 0.0],
    ])


@dataclass(frozen=True)
class PolarizabilityTensor:
    """A 3x3 real polarizability (m^3) with its model provenance."""

    value: np.ndarray
    kind: str

    def __post_init__(self):
        object.__setattr__(self, "value", np.asarray(self.value, dtype=float))
        if self.value.shape != (3, 3):
            raise ValueError("polarizability must be 3x3")


@dataclass(frozen=True)
class ToyPolarizability:
    """Frequency-independent gyrotropic polarizability.

    alpha = alpha0 * (I + b K(axis)) with alpha0 a volume (m^3) and b a
    dimensionless gyrotropy; for axis = x the matrix rows are
    [[1,0,0],[0,1,-b],[0,b,1]] times alpha0.  The symmetric part is
    alpha0*I, the antisymmetric part alpha0*b*K.  Transposition is
    equivalent to b -> -b.
    """

    alpha0: float
    b: float = 0.0
    axis: tuple = (1.0, 0.0, 0.0)

    def __post_init__(self):
        if not self.alpha0 > 0:
            raise ValueError(f"alpha0 must be > 0, got {self.alpha0}")
        object.__setattr__(self, "axis", tuple(unit_axis(self.axis)))

    def tensor(self):
        return self.alpha0 * (_EYE3 + self.b * cross_generator(self.axis))

    def alpha_si(self, xi):
        """Polarizability (m^3) at imaginary frequency xi (rad/s); xi may
        be an array, in which case the tensor is broadcast."""
        xi = np.asarray(xi, dtype=float)
        return np.broadcast_to(self.tensor(), xi.shape + (3, 3)).copy() \
            if xi.shape else self.tensor()

    def alpha_static(self):
        return self.tensor()

    def mirrored(self):
        """The mirror-image particle: gyrotropy sign flipped."""
        return replace(self, b=-self.b)


def toy_alpha(model):
    """PolarizabilityTensor of a ToyPolarizability model."""
    return PolarizabilityTensor(model.tensor(), kind="toy")


@dataclass(frozen=True)
class MagnetoOpticalModel:
    """Drude magneto-optical sphere in the dipole limit.

    omega_p is the plasma frequency, omega_tau the relaxation rate and
    omega_b the cyclotron frequency set by the bias field along ``axis``
    (all rad/s); ``radius`` is the sphere radius in meters.  On the
    imaginary axis the permittivity is real with a positive-definite
    symmetric part; the polarizability follows from the tensor
    Clausius-Mossotti map.
    """

    omega_p: float
    omega_tau: float
    omega_b: float
    radius: float
    axis: tuple = (1.0, 0.0, 0.0)

    def __post_init__(self):
        if self.omega_p < 0 or self.omega_tau < 0:
            raise ValueError("omega_p and omega_tau must be non-negative")
        if not self.radius > 0:
            raise ValueError(f"radius must be > 0, got {self.radius}")
        object.__setattr__(self, "axis", tuple(unit_axis(self.axis)))

    def permittivity(self, xi):
        return mo_permittivity(xi, self)

    def alpha_si(self, xi):
        try:
            return _cm_value(self.permittivity(xi), self.radius)
        except ResonanceError as err:
            raise ResonanceError(f"{err} at xi = {xi!r} rad/s") from None

    def alpha_static(self):
        """xi -> 0+ limit.  The Drude permittivity diverges there and the
        Clausius-Mossotti map saturates at the conducting-sphere value
        R^3 * I (the gyrotropic part vanishes in the limit)."""
        return self.radius**3 * _EYE3

    def mirrored(self):
        """The mirror-image particle: bias field reversed."""
        return replace(self, omega_b=-self.omega_b)


def mo_permittivity(xi, model):
    """Magneto-optical Drude permittivity on the imaginary axis.

    Evaluating the bias-field form (axis frame, field along x)

        [[eps_p, 0, 0], [0, eps_d, -i eps_f], [0, i eps_f, eps_d]]

    at omega = i*xi gives the real tensor

        eps_p = 1 + omega_p^2 / (xi (xi + omega_tau))
        eps_d = 1 + omega_p^2 (xi + omega_tau) / (xi ((xi + omega_tau)^2 + omega_b^2))
        g     = omega_b omega_p^2 / (xi ((xi + omega_tau)^2 + omega_b^2))

    assembled as eps_p a a^T + eps_d (I - a a^T) + g K(a); for omega_b > 0
    the (y, z) entry is -g, matching the sign convention of the
    frequency-independent gyrotropic model.  ``xi`` may be an array with
    shape (...,); the result then has shape (..., 3, 3).
    """
    xi = np.asarray(xi, dtype=float)
    if np.any(xi <= 0):
        raise ValueError("mo_permittivity needs xi > 0; the zeroth Matsubara "
                         "term uses the xi -> 0+ limit of the polarizability")
    wp2 = model.omega_p**2
    wt = model.omega_tau
    wb = model.omega_b
    denom = xi * ((xi + wt) ** 2 + wb**2)
    eps_p = 1.0 + wp2 / (xi * (xi + wt))
    eps_d = 1.0 + wp2 * (xi + wt) / denom
    g = wb * wp2 / denom

    a = np.asarray(model.axis)
    proj = a[:, None] * a[None, :]
    K = cross_generator(a)
    return (
        eps_p[..., None, None] * proj
        + eps_d[..., None, None] * (_EYE3 - proj)
        + g[..., None, None] * K
    )


def _cm_value(eps, radius):
    """Clausius-Mossotti map as plain arrays; supports batched eps."""
    eps = np.asarray(eps, dtype=float)
    shifted = eps + 2.0 * _EYE3
    det = np.linalg.det(shifted)
    scale = np.maximum(np.abs(eps).max(axis=(-2, -1)), 1.0) ** 3
    if np.any(np.abs(det) < 1e-12 * scale):
        raise ResonanceError("eps + 2I is singular (dipole resonance)")
    return radius**3 * (eps - _EYE3) @ np.linalg.inv(shifted)


def cm_polarizability(eps, radius):
    """Tensor Clausius-Mossotti sphere polarizability.

    alpha = R^3 (eps - I)(eps + 2 I)^{-1}, in m^3.  Raises ResonanceError
    when eps + 2I is singular (the dipole resonance of the Rayleigh sphere).
    """
    return PolarizabilityTensor(_cm_value(eps, radius), kind="magneto-optical")


def split_reciprocal(alpha):
    """Split a response tensor into reciprocal and anti-reciprocal parts.

    Returns (sym, antisym) with sym = (a + a^T)/2 and antisym = (a - a^T)/2;
    the two add back to the input exactly.  Accepts (..., 3, 3) arrays or a
    PolarizabilityTensor.
    """
    a = alpha.value if isinstance(alpha, PolarizabilityTensor) else np.asarray(alpha, dtype=float)
    at = np.swapaxes(a, -1, -2)
    return 0.5 * (a + at), 0.5 * (a - at)
