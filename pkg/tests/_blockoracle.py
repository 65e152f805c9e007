"""Brute-force 9x9 block-matrix oracle for three-particle energies.

Independent of the engine's chained-product fast path: the full
off-diagonal block matrix M (blocks G_ij alpha_j) is assembled per
Matsubara index and the truncated expansion tr(M^2)/2 + tr(M^3)/3 is
contracted directly.  Truncation uses only the hard screening cutoff so
the term set is oracle-chosen, not engine-chosen.
"""

import numpy as np

from nrcasimir import green_scaled


def block_energy_3(positions_lambda, materials, ctx, cutoff=40.0):
    """Total three-body free energy (J): pairwise one-reflection parts
    plus the connected correction, via the 9x9 block matrix."""
    pos = np.asarray(positions_lambda, dtype=float)
    lam3 = ctx.lambda_T**3
    xmin = min(np.linalg.norm(pos[i] - pos[j])
               for i in range(3) for j in range(i + 1, 3))
    total = 0.0
    n = 0
    while True:
        u = 2.0 * np.pi * n
        if n > 0 and u * xmin > cutoff:
            break
        alphas = []
        for m in materials:
            if n == 0:
                alphas.append(m.alpha_static() / lam3)
            else:
                alphas.append(np.asarray(m.alpha_si(ctx.matsubara_xi(n))) / lam3)
        M = np.zeros((9, 9))
        for i in range(3):
            for j in range(3):
                if i == j:
                    continue
                M[3 * i: 3 * i + 3, 3 * j: 3 * j + 3] = \
                    green_scaled(u, pos[i] - pos[j]) @ alphas[j]
        m2 = M @ M
        term = np.trace(m2) / 2.0 + np.trace(m2 @ M) / 3.0
        total += 0.5 * term if n == 0 else term
        n += 1
    return -ctx.kT * total


def block_correction_3(positions_lambda, materials, ctx, cutoff=40.0):
    """Connected correction alone (J) from tr(M^3)/3."""
    pos = np.asarray(positions_lambda, dtype=float)
    lam3 = ctx.lambda_T**3
    xmin = min(np.linalg.norm(pos[i] - pos[j])
               for i in range(3) for j in range(i + 1, 3))
    total = 0.0
    n = 0
    while True:
        u = 2.0 * np.pi * n
        if n > 0 and u * xmin > cutoff:
            break
        alphas = []
        for m in materials:
            if n == 0:
                alphas.append(m.alpha_static() / lam3)
            else:
                alphas.append(np.asarray(m.alpha_si(ctx.matsubara_xi(n))) / lam3)
        M = np.zeros((9, 9))
        for i in range(3):
            for j in range(3):
                if i == j:
                    continue
                M[3 * i: 3 * i + 3, 3 * j: 3 * j + 3] = \
                    green_scaled(u, pos[i] - pos[j]) @ alphas[j]
        term = np.trace(M @ M @ M) / 3.0
        total += 0.5 * term if n == 0 else term
        n += 1
    return -ctx.kT * total
