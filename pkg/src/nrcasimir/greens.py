"""Free-space electromagnetic dyadic Green tensor at imaginary frequency.

The engine works with the kappa^2-scaled tensor throughout: it is finite
and branch-free all the way down to the static (kappa = 0) limit, which is
exactly where the zeroth Matsubara term lives.  The unscaled tensor and
its gradient are exposed for callers that want the conventional object.
"""

import numpy as np

from .errors import GeometryError

_EYE3 = np.eye(3)


def green_scaled(u, dx):
    r"""kappa^2-scaled transverse Green tensor, valid for u >= 0.

    For wavenumber ``u`` and separation vectors ``dx`` (shape (..., 3)),
    both in one consistent length unit, returns

        u^2 G(u, dx) = e^{-u r}/(4 pi r^3) [ (u^2 r^2 + u r + 1) I
                                           - (u^2 r^2 + 3 u r + 3) rhat rhat ]

    with r = |dx|, shape (..., 3, 3), units 1/length^3.  At u = 0 the same
    expression is the static dipole tensor (I - 3 rhat rhat)/(4 pi r^3).
    The result is real, symmetric, and even in dx.

    ``u`` must broadcast against the batch shape of ``dx``.
    """
    dx = np.asarray(dx, dtype=float)
    r = np.linalg.norm(dx, axis=-1)
    if np.any(r == 0.0):
        raise GeometryError("zero separation in Green tensor")
    rhat = dx / r[..., None]
    s = np.asarray(u, dtype=float) * r
    pref = np.exp(-s) / (4.0 * np.pi * r**3)
    diag = s * s + s + 1.0
    rad = s * s + 3.0 * s + 3.0
    outer = rhat[..., :, None] * rhat[..., None, :]
    return pref[..., None, None] * (diag[..., None, None] * _EYE3 - rad[..., None, None] * outer)


def green_scaled_gradient(u, dx):
    r"""Entrywise spatial gradient of ``green_scaled``.

    Returns shape (..., 3, 3, 3) where entry [..., a, i, j] is the
    derivative of the (i, j) component with respect to dx[a], units
    1/length^4.  Closed form: writing the scaled tensor as
    f(r) I - h(r) rhat rhat,

        f' = -e^{-s} (s^3 + 2 s^2 + 3 s + 3) / (4 pi r^4)
        h' = -e^{-s} (s^3 + 4 s^2 + 9 s + 9) / (4 pi r^4),   s = u r,

    plus the transport of the rhat rhat dyad.  Odd in dx.
    """
    dx = np.asarray(dx, dtype=float)
    r = np.linalg.norm(dx, axis=-1)
    if np.any(r == 0.0):
        raise GeometryError("zero separation in Green tensor gradient")
    rhat = dx / r[..., None]
    s = np.asarray(u, dtype=float) * r
    decay = np.exp(-s) / (4.0 * np.pi * r**4)
    fp = -decay * (s**3 + 2.0 * s**2 + 3.0 * s + 3.0)
    hp = -decay * (s**3 + 4.0 * s**2 + 9.0 * s + 9.0)
    h_over_r = np.exp(-s) * (s * s + 3.0 * s + 3.0) / (4.0 * np.pi * r**4)

    outer = rhat[..., :, None] * rhat[..., None, :]
    # d(rhat_i rhat_j)/dx_a = (delta_ai rhat_j + delta_aj rhat_i - 2 rhat_a rhat_i rhat_j)/r
    d_outer = (
        _EYE3[:, :, None] * rhat[..., None, None, :]
        + _EYE3[:, None, :] * rhat[..., None, :, None]
        - 2.0 * rhat[..., :, None, None] * outer[..., None, :, :]
    )
    grad = (
        fp[..., None, None, None] * rhat[..., :, None, None] * _EYE3
        - hp[..., None, None, None] * rhat[..., :, None, None] * outer[..., None, :, :]
        - h_over_r[..., None, None, None] * d_outer
    )
    return grad


def green_dyadic(kappa, dr):
    """Unscaled transverse Green tensor G(kappa, dr) in SI units (1/m).

    Requires kappa > 0; the static kappa -> 0 limit diverges as 1/kappa^2
    and is handled by ``green_scaled`` at u = 0 instead.
    """
    kappa = float(kappa)
    if kappa <= 0.0:
        raise ValueError(
            "green_dyadic needs kappa > 0; the kappa=0 Matsubara term uses "
            "green_scaled(0, dr), the finite static limit of kappa^2 G"
        )
    return green_scaled(kappa, dr) / kappa**2


def green_gradient(kappa, dr, axis):
    """Entrywise derivative of ``green_dyadic`` along one axis (1/m^2)."""
    kappa = float(kappa)
    if kappa <= 0.0:
        raise ValueError("green_gradient needs kappa > 0")
    if axis not in (0, 1, 2):
        raise ValueError("axis must be 0, 1 or 2")
    return green_scaled_gradient(kappa, dr)[..., axis, :, :] / kappa**2


def green_static_scaled(dx):
    """Static dipole tensor (I - 3 rhat rhat)/(4 pi r^3), the kappa -> 0
    limit of kappa^2 G."""
    return green_scaled(0.0, dx)
