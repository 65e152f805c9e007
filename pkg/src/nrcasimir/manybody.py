"""Leading-order three-body free energy and the forces derived from it.

At leading order in both the reflection expansion and the composite-
scattering expansion, three particles share a single scalar potential:
the sum of the three pairwise one-reflection energies plus one connected
correction,

    -k_B T sum'_n [ tr(G31 a1 G12 a2 G23 a3) + tr(G21 a1 G13 a3 G32 a2) ],

where G_ij is the kappa^2-scaled Green tensor between positions i and j
and the a_i are the dimensionless polarizabilities at Matsubara index n.
Because the total is one common function of the three positions, the
per-particle forces sum to zero and exert no net torque.
"""

from dataclasses import dataclass

import numpy as np

from .errors import ConvergenceError, GeometryError
from .greens import green_scaled
from .interaction import (DIPOLE_COUPLING, FORCE_FD_STEP,
                          MIN_SEPARATION_LAMBDA, _alpha_chunk,
                          _pair_sum)
from .thermal import DEFAULT_POLICY, KAPPA_D_CUTOFF


@dataclass(frozen=True, eq=False)
class Scene:
    """Three particles plus the thermal context and summation policy."""

    particles: tuple
    ctx: object
    policy: object = DEFAULT_POLICY
    min_separation: float = MIN_SEPARATION_LAMBDA

    def __post_init__(self):
        object.__setattr__(self, "particles", tuple(self.particles))
        if len(self.particles) != 3:
            raise ValueError("Scene holds exactly 3 particles")
        self.positions_lambda()  # validates separations

    def positions_lambda(self):
        """Positions in lambda_T units, shape (3, 3); validates the
        pairwise minimum-separation guard."""
        pos = np.array([p.position for p in self.particles]) / self.ctx.lambda_T
        for i in range(3):
            for j in range(i + 1, 3):
                sep = np.linalg.norm(pos[i] - pos[j])
                if sep < self.min_separation:
                    raise GeometryError(
                        f"particles {i} and {j} at separation {sep:.6g} "
                        f"lambda_T, below the minimum {self.min_separation:g}"
                    )
        return pos


_PAIRS = ((0, 1), (0, 2), (1, 2))


def _triple_trace(u, pos, alphas):
    """Connected three-body term at one Matsubara index.

    ``pos`` has shape (V, 3, 3) (batch of scenes x particle x xyz),
    ``alphas`` is a list of three (3, 3) dimensionless tensors.  Returns
    the summed pair of cyclic traces, shape (V,).
    """
    a1, a2, a3 = alphas
    g12 = green_scaled(u, pos[:, 0] - pos[:, 1])
    g13 = green_scaled(u, pos[:, 0] - pos[:, 2])
    g23 = green_scaled(u, pos[:, 1] - pos[:, 2])
    c3 = DIPOLE_COUPLING**3
    # tr(G31 a1 G12 a2 G23 a3): the Green tensor is even, so G31 = G13
    m = np.einsum("vij,jk->vik", g13, a1)
    m = np.einsum("vij,vjk->vik", m, g12)
    m = np.einsum("vij,jk->vik", m, a2)
    m = np.einsum("vij,vjk->vik", m, g23)
    t1 = c3 * np.einsum("vij,ji->v", m, a3)
    # tr(G21 a1 G13 a3 G32 a2)
    m = np.einsum("vij,jk->vik", g12, a1)
    m = np.einsum("vij,vjk->vik", m, g13)
    m = np.einsum("vij,jk->vik", m, a3)
    m = np.einsum("vij,vjk->vik", m, g23)
    t2 = c3 * np.einsum("vij,ji->v", m, a2)
    return t1 + t2


def _correction_sum(pos, materials, ctx, policy, chunk=64):
    """Adaptive Matsubara sum of the connected term over a batch of scene
    variants; returns (raw sums (V,), report)."""
    nv = pos.shape[0]
    xmin = np.full(nv, np.inf)
    for i, j in _PAIRS:
        xmin = np.minimum(xmin, np.linalg.norm(pos[:, i] - pos[:, j], axis=1))
    if np.any(xmin == 0.0):
        raise GeometryError("coincident particles in three-body sum")

    lam3 = ctx.lambda_T**3
    statics = [m.alpha_static() / lam3 for m in materials]
    sums = 0.5 * _triple_trace(0.0, pos, statics)
    terms_used = np.ones(nv, dtype=int)
    active = np.ones(nv, dtype=bool)
    prev = np.full(nv, np.nan)
    tail = np.zeros(nv)

    n = 1
    while active.any():
        if n > policy.n_max:
            raise ConvergenceError(
                f"three-body sum not converged after n_max = {policy.n_max}")
        hi = min(n + chunk, policy.n_max + 1)
        ns = np.arange(n, hi)
        tables = [_alpha_chunk(m, ctx, ns) for m in materials]
        idx = np.flatnonzero(active)
        sub_pos = pos[idx]
        sub_xmin = xmin[idx]
        live = np.ones(idx.size, dtype=bool)
        sub_prev = prev[idx]
        for j, nj in enumerate(ns):
            u = 2.0 * np.pi * nj
            cut = live & (u * sub_xmin > KAPPA_D_CUTOFF)
            if cut.any():
                active[idx[cut]] = False
                live &= ~cut
                if not live.any():
                    break
            t = _triple_trace(u, sub_pos, [tb[j] for tb in tables])
            sums[idx] += t * live
            terms_used[idx] += live
            metric = np.abs(t)
            with np.errstate(divide="ignore", invalid="ignore"):
                q = metric / sub_prev
                est = np.where((q > 0) & (q < 1.0), metric * q / (1.0 - q), np.inf)
            est = np.where((metric == 0.0) & (sub_prev == 0.0), 0.0, est)
            tol = np.maximum(policy.abs_tol, policy.rel_tol * np.abs(sums[idx]))
            stop = live & (nj >= policy.n_min) & (est <= tol)
            if stop.any():
                tail[idx[stop]] = est[stop]
                active[idx[stop]] = False
                live &= ~stop
            sub_prev = np.where(live, metric, sub_prev)
        prev[idx] = sub_prev
        n = hi
    return sums, {"terms_used": terms_used, "tail": tail}


def three_body_correction(scene):
    """Connected three-particle part of the free energy, in joules."""
    pos = scene.positions_lambda()
    materials = [p.material for p in scene.particles]
    sums, _ = _correction_sum(pos[None], materials, scene.ctx, scene.policy)
    return float(-scene.ctx.kT * sums[0])


def _total3_hat(pos, materials, ctx, policy):
    """Batched total three-body free energy in k_B T units; ``pos`` has
    shape (V, 3, 3)."""
    total = np.zeros(pos.shape[0])
    for i, j in _PAIRS:
        sums, _ = _pair_sum(pos[:, i] - pos[:, j], materials[i], materials[j],
                            ctx, policy)
        total -= sums[0]
    sums, _ = _correction_sum(pos, materials, ctx, policy)
    total -= sums
    return total


def total_free_energy_3(scene):
    """Pairwise one-reflection energies plus the connected correction, in
    joules.  Invariant under any relabeling of the particles."""
    pos = scene.positions_lambda()
    materials = [p.material for p in scene.particles]
    return float(scene.ctx.kT *
                 _total3_hat(pos[None], materials, scene.ctx, scene.policy)[0])


def forces_3(scene):
    """Forces on the three particles (newtons, shape (3, 3)): minus the
    gradient of the common potential, by Richardson-extrapolated central
    differences.  The rows sum to zero, as does the net torque about any
    point."""
    pos = scene.positions_lambda()
    materials = [p.material for p in scene.particles]
    ctx, policy = scene.ctx, scene.policy

    steps = np.empty(3)
    for i in range(3):
        others = [j for j in range(3) if j != i]
        steps[i] = FORCE_FD_STEP * min(
            np.linalg.norm(pos[i] - pos[j]) for j in others)

    variants = []
    for i in range(3):
        h = steps[i]
        for k in range(3):
            for delta in (h, -h, 0.5 * h, -0.5 * h):
                v = pos.copy()
                v[i, k] += delta
                variants.append(v)
    f_hat = _total3_hat(np.array(variants), materials, ctx, policy)

    forces = np.empty((3, 3))
    m = 0
    for i in range(3):
        h = steps[i]
        for k in range(3):
            fp, fm, fp2, fm2 = f_hat[m: m + 4]
            d_h = (fp - fm) / (2.0 * h)
            d_h2 = (fp2 - fm2) / h
            forces[i, k] = -(4.0 * d_h2 - d_h) / 3.0
            m += 4
    return forces * (ctx.kT / ctx.lambda_T)


def net_force_and_torque(scene, forces=None):
    """Net force (N) and net mechanical torque about the centroid (N m).

    The mechanical torque vanishes for isotropic particles.  For
    gyrotropic particles it equals minus the torque conjugate to a rigid
    rotation of the bias axes (see ``axis_rotation_torque_3``): the two
    cancel because the potential is covariant under joint rotation, so no
    net torque acts on the closed system of particles plus field sources.
    """
    if forces is None:
        forces = forces_3(scene)
    pos = np.array([p.position for p in scene.particles])
    centroid = pos.mean(axis=0)
    torque = np.cross(pos - centroid, forces).sum(axis=0)
    return forces.sum(axis=0), torque


def _rotation_matrix(axis, angle):
    """Rodrigues rotation about a unit axis."""
    k = np.asarray(axis, dtype=float)
    K = np.array([[0.0, -k[2], k[1]], [k[2], 0.0, -k[0]], [-k[1], k[0], 0.0]])
    return np.eye(3) + np.sin(angle) * K + (1.0 - np.cos(angle)) * (K @ K)


# step for the axis-rotation derivative, radians
_AXIS_FD_STEP = 1e-4


def axis_rotation_torque_3(scene):
    """Torque conjugate to rigidly rotating all material axes (N m).

    Component k is -dF/dtheta for a rotation of every particle's bias
    axis about the unit vector e_k, with positions held fixed; computed
    by Richardson-extrapolated central differences.  Analytically this is
    minus the net mechanical torque of ``net_force_and_torque``.
    """
    from dataclasses import replace

    pos = scene.positions_lambda()
    ctx, policy = scene.ctx, scene.policy
    base = [p.material for p in scene.particles]

    def total_with_rotated_axes(R):
        mats = [replace(m, axis=tuple(R @ np.asarray(m.axis))) for m in base]
        return _total3_hat(pos[None], mats, ctx, policy)[0]

    torque = np.empty(3)
    for k in range(3):
        e = np.zeros(3)
        e[k] = 1.0
        h = _AXIS_FD_STEP
        d_h = (total_with_rotated_axes(_rotation_matrix(e, h))
               - total_with_rotated_axes(_rotation_matrix(e, -h))) / (2.0 * h)
        d_h2 = (total_with_rotated_axes(_rotation_matrix(e, 0.5 * h))
                - total_with_rotated_axes(_rotation_matrix(e, -0.5 * h))) / h
        torque[k] = -(4.0 * d_h2 - d_h) / 3.0
    return torque * ctx.kT
