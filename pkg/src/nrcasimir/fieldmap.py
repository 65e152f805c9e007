"""Planar field maps of the pair free energy or its Laplacian, stationary
point location, and angular scans.

A map fixes particle 1 where the scene puts it and sweeps particle 2 over
a regular grid in a coordinate plane (lambda_T units).  Cells closer to
particle 1 than the minimum-separation guard are masked.  Stationary
points are found where both in-plane finite-difference gradients change
sign, refined by parabolic interpolation, and classified by the
eigenvalues of the full 3-D Hessian.
"""

from dataclasses import dataclass, field

import numpy as np

from .interaction import (LAPLACIAN_FD_STEP, MIN_SEPARATION_LAMBDA,
                          ParticleSpec, hessian, pair_free_energy_batch)
from .thermal import DEFAULT_POLICY

_AXES = {"x": 0, "y": 1, "z": 2}

# eigenvalues below this fraction of the largest are treated as zero
CLASSIFY_REL_TOL = 1e-6


@dataclass(frozen=True)
class GridSpec:
    """A 2-D grid in a coordinate plane, lambda_T units.

    ``axes`` names the two swept coordinates, ``ranges`` holds (lo, hi)
    per axis, ``resolution`` the number of samples per axis (>= 2), and
    ``offsets`` the fixed values of the remaining coordinate.
    """

    axes: tuple = ("x", "y")
    ranges: tuple = ((-1.0, 1.0), (-1.0, 1.0))
    resolution: tuple = (101, 101)
    offsets: dict = field(default_factory=dict)

    def __post_init__(self):
        if len(self.axes) != 2 or len(set(self.axes)) != 2:
            raise ValueError("grid needs two distinct axes")
        for ax in self.axes:
            if ax not in _AXES:
                raise ValueError(f"unknown axis {ax!r}")
        if any(n < 2 for n in self.resolution):
            raise ValueError("grid resolution must be >= 2 per axis")
        for lo, hi in self.ranges:
            if not hi > lo:
                raise ValueError("grid range must have hi > lo")

    def coordinates(self):
        return (np.linspace(*self.ranges[0], self.resolution[0]),
                np.linspace(*self.ranges[1], self.resolution[1]))

    def points(self, origin_lambda):
        """Absolute particle-2 positions (lambda_T), shape (n0*n1, 3);
        grid is walked row-major in the first axis."""
        c0, c1 = self.coordinates()
        i0, i1 = _AXES[self.axes[0]], _AXES[self.axes[1]]
        pts = np.tile(origin_lambda, (c0.size * c1.size, 1))
        for ax, val in self.offsets.items():
            pts[:, _AXES[ax]] = val
        g0, g1 = np.meshgrid(c0, c1, indexing="ij")
        pts[:, i0] = g0.ravel()
        pts[:, i1] = g1.ravel()
        return pts


@dataclass(frozen=True)
class StationaryPoint:
    """A located stationary point of the mapped field."""

    position_lambda: np.ndarray
    value: float
    classification: str
    hessian_eigenvalues: np.ndarray


@dataclass(frozen=True)
class MapResult:
    """Field values over a grid plus located stationary points.

    ``values`` has shape (n0, n1) indexed [i0, i1]; masked (too close to
    particle 1) cells are NaN.  Energies in joules, Laplacians in J/m^2.
    """

    grid: GridSpec
    values: np.ndarray
    quantity: str
    stationary_points: tuple
    terms_max: int


def classify_hessian(eigenvalues, rel_tol=CLASSIFY_REL_TOL):
    """Classify a stationary point from Hessian eigenvalues."""
    ev = np.asarray(eigenvalues, dtype=float)
    scale = np.abs(ev).max()
    if scale == 0.0:
        return "degenerate"
    signs = np.where(np.abs(ev) < rel_tol * scale, 0, np.sign(ev))
    if np.any(signs == 0):
        return "degenerate"
    if np.all(signs > 0):
        return "minimum"
    if np.all(signs < 0):
        return "maximum"
    return "saddle"


def _masked_points(points, origin_lambda, min_separation, pad):
    sep = np.linalg.norm(points - origin_lambda, axis=1)
    return sep >= min_separation * (1.0 + pad)


# grid points are processed in fixed-size blocks so that results are
# byte-identical for any worker count
_POINT_CHUNK = 4096


def _eval_field(points, valid, fn, threads=1):
    values = np.full(points.shape[0], np.nan)
    terms_max = 0
    idx = np.flatnonzero(valid)
    if idx.size == 0:
        return values, terms_max
    blocks = [idx[s: s + _POINT_CHUNK] for s in range(0, idx.size, _POINT_CHUNK)]
    if threads > 1 and len(blocks) > 1:
        from concurrent.futures import ThreadPoolExecutor
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(lambda b: fn(points[b]), blocks))
    else:
        results = [fn(points[b]) for b in blocks]
    for block, (vals, report) in zip(blocks, results):
        values[block] = vals
        terms_max = max(terms_max, int(report["terms_used"].max()))
    return values, terms_max


def evaluate_map(p1, p2, ctx, grid, policy=DEFAULT_POLICY, quantity="energy",
                 method="one_reflection", min_separation=MIN_SEPARATION_LAMBDA,
                 locate=True, threads=1):
    """Map the pair free energy (or its Laplacian) over ``grid``.

    ``p2``'s configured position is replaced by each grid point.  Returns
    a MapResult in SI units.  ``threads`` parallelizes over fixed-size
    point blocks without affecting the computed bytes.
    """
    origin = p1.position / ctx.lambda_T
    points = grid.points(origin)
    kT = ctx.kT

    if quantity == "energy":
        pad = 1e-9
        valid = _masked_points(points, origin, min_separation, pad)

        def fn(pts):
            f_hat, report = pair_free_energy_batch(
                pts - origin, p2.material, p1.material, ctx, policy, method)
            return f_hat * kT, report

    elif quantity == "laplacian":
        # probe points step inward by up to the FD step; widen the mask
        pad = 3.0 * LAPLACIAN_FD_STEP
        valid = _masked_points(points, origin, min_separation, pad)

        def fn(pts):
            return _laplacian_batch(pts - origin, p2.material, p1.material,
                                    ctx, policy, method)

    else:
        raise ValueError(f"unknown map quantity {quantity!r}")

    values, terms_max = _eval_field(points, valid, fn, threads=threads)
    shaped = values.reshape(grid.resolution)

    stationary = ()
    if locate:
        stationary = tuple(_locate_stationary(
            shaped, grid, origin, p1, p2, ctx, policy, method,
            min_separation))
    return MapResult(grid=grid, values=shaped, quantity=quantity,
                     stationary_points=stationary, terms_max=terms_max)


def _laplacian_batch(dx, mat2, mat1, ctx, policy, method):
    """Laplacian of the pair energy at each separation in ``dx`` (J/m^2),
    via per-point Richardson second differences (13 probes per point)."""
    dx = np.asarray(dx, dtype=float)
    npts = dx.shape[0]
    x = np.linalg.norm(dx, axis=1)
    h = LAPLACIAN_FD_STEP * x
    probes = np.empty((npts, 13, 3))
    probes[:, 0] = dx
    slot = 1
    for k in range(3):
        e = np.zeros(3)
        e[k] = 1.0
        for fac in (1.0, -1.0, 0.5, -0.5):
            probes[:, slot] = dx + (fac * h)[:, None] * e
            slot += 1
    f_hat, report = pair_free_energy_batch(
        probes.reshape(-1, 3), mat2, mat1, ctx, policy, method)
    f = f_hat.reshape(npts, 13)
    lap = np.zeros(npts)
    for k in range(3):
        base = 1 + 4 * k
        d2_h = (f[:, base] - 2.0 * f[:, 0] + f[:, base + 1]) / h**2
        d2_h2 = (f[:, base + 2] - 2.0 * f[:, 0] + f[:, base + 3]) / (0.5 * h) ** 2
        lap += (4.0 * d2_h2 - d2_h) / 3.0
    return lap * (ctx.kT / ctx.lambda_T**2), report


def _parabolic_refine(c, f):
    """Vertex of the parabola through three samples; c is the middle
    coordinate, f the (f_left, f_mid, f_right) values on a uniform grid."""
    denom = f[0] - 2.0 * f[1] + f[2]
    if denom == 0.0:
        return c[1]
    shift = 0.5 * (f[0] - f[2]) / denom
    return c[1] + shift * (c[2] - c[1])


def _locate_stationary(values, grid, origin, p1, p2, ctx, policy, method,
                       min_separation):
    """Grid cells where both in-plane gradients change sign, refined and
    classified through the 3-D Hessian of the pair energy."""
    c0, c1 = grid.coordinates()
    i0, i1 = _AXES[grid.axes[0]], _AXES[grid.axes[1]]
    found = []
    n0, n1 = values.shape
    for i in range(1, n0 - 1):
        for j in range(1, n1 - 1):
            block = values[i - 1: i + 2, j - 1: j + 2]
            if np.any(np.isnan(block)):
                continue
            g0l = values[i, j] - values[i - 1, j]
            g0r = values[i + 1, j] - values[i, j]
            g1l = values[i, j] - values[i, j - 1]
            g1r = values[i, j + 1] - values[i, j]
            if g0l * g0r < 0.0 and g1l * g1r < 0.0:
                pos = np.array(origin)
                for ax, val in grid.offsets.items():
                    pos[_AXES[ax]] = val
                pos[i0] = _parabolic_refine(c0[i - 1: i + 2],
                                            values[i - 1: i + 2, j])
                pos[i1] = _parabolic_refine(c1[j - 1: j + 2],
                                            values[i, j - 1: j + 2])
                probe = ParticleSpec(pos * ctx.lambda_T, p2.material)
                H = hessian(probe, p1, ctx, policy, branch=method,
                            min_separation=min_separation)
                ev = np.linalg.eigvalsh(H)
                f_hat, _ = pair_free_energy_batch(
                    (pos - origin)[None], p2.material, p1.material, ctx,
                    policy, method)
                found.append(StationaryPoint(
                    position_lambda=pos,
                    value=float(f_hat[0] * ctx.kT),
                    classification=classify_hessian(ev),
                    hessian_eigenvalues=ev,
                ))
    return found


@dataclass(frozen=True)
class AngleScan:
    """Energies around a circle of fixed radius in the z-offset plane."""

    phi: np.ndarray
    energies: np.ndarray
    maxima: tuple
    minima: tuple


def scan_angle(p1, p2, ctx, radius_lambda, z_lambda=0.0, samples=256,
               policy=DEFAULT_POLICY, method="one_reflection"):
    """Free energy versus azimuth phi at fixed radius around particle 1.

    Returns an AngleScan with parabolic-refined extrema (phi, F) tuples.
    """
    if samples < 8:
        raise ValueError("angle scan needs at least 8 samples")
    phi = np.linspace(0.0, 2.0 * np.pi, samples, endpoint=False)
    origin = p1.position / ctx.lambda_T
    pts = np.tile(origin, (samples, 1))
    pts[:, 0] += radius_lambda * np.cos(phi)
    pts[:, 1] += radius_lambda * np.sin(phi)
    pts[:, 2] += z_lambda
    f_hat, _ = pair_free_energy_batch(pts - origin, p2.material, p1.material,
                                      ctx, policy, method)
    energies = f_hat * ctx.kT

    maxima, minima = [], []
    for k in range(samples):
        prev_v = energies[k - 1]
        next_v = energies[(k + 1) % samples]
        trio_phi = np.array([phi[k] - (phi[1] - phi[0]), phi[k],
                             phi[k] + (phi[1] - phi[0])])
        trio = np.array([prev_v, energies[k], next_v])
        if energies[k] > prev_v and energies[k] > next_v:
            maxima.append((float(_parabolic_refine(trio_phi, trio) % (2*np.pi)),
                           float(energies[k])))
        elif energies[k] < prev_v and energies[k] < next_v:
            minima.append((float(_parabolic_refine(trio_phi, trio) % (2*np.pi)),
                           float(energies[k])))
    return AngleScan(phi=phi, energies=energies, maxima=tuple(maxima),
                     minima=tuple(minima))
