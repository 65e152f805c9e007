import numpy as np
import pytest

from _blockoracle import block_correction_3, block_energy_3
from conftest import random_unit
from nrcasimir import (GeometryError, ParticleSpec, Scene, ToyPolarizability,
                       axis_rotation_torque_3, force, forces_3,
                       net_force_and_torque, three_body_correction,
                       total_free_energy_3)


def make_scene(ctx, positions_lambda, bs, alpha0_lambda3=1e-3, axes=None):
    lam = ctx.lambda_T
    a0 = alpha0_lambda3 * lam**3
    axes = axes or [(1.0, 0.0, 0.0)] * len(bs)
    particles = [
        ParticleSpec(np.asarray(p) * lam, ToyPolarizability(a0, b, axis=ax))
        for p, b, ax in zip(positions_lambda, bs, axes)
    ]
    return Scene(particles, ctx)


TRIANGLE = [[0.0, 0.0, 0.0], [0.45, 0.0, 0.0], [0.1, 0.4, 0.05]]


def test_correction_vanishes_with_any_alpha(ctx):
    scene = make_scene(ctx, TRIANGLE, [0.5, -0.8, 0.2])
    base = abs(three_body_correction(scene))
    tiny = make_scene(ctx, TRIANGLE, [0.5, -0.8, 0.2])
    lam = ctx.lambda_T
    particles = list(tiny.particles)
    particles[2] = ParticleSpec(particles[2].position,
                                ToyPolarizability(1e-12 * lam**3, 0.2))
    small = three_body_correction(Scene(particles, ctx))
    assert abs(small) < 1e-8 * base


def test_correction_label_swap_invariance(ctx):
    scene = make_scene(ctx, TRIANGLE, [0.5, -0.8, 0.2])
    swapped = make_scene(ctx, [TRIANGLE[0], TRIANGLE[2], TRIANGLE[1]],
                         [0.5, 0.2, -0.8])
    a = three_body_correction(scene)
    b = three_body_correction(swapped)
    assert a == pytest.approx(b, rel=1e-12)


def test_correction_against_block_oracle_collinear(ctx):
    positions = [[0.0, 0, 0], [0.35, 0, 0], [0.7, 0, 0]]
    scene = make_scene(ctx, positions, [0.0, 0.0, 0.0])
    got = three_body_correction(scene)
    want = block_correction_3(scene.positions_lambda(),
                              [p.material for p in scene.particles], ctx)
    assert got == pytest.approx(want, rel=1e-10)


def test_total_against_block_oracle_equilateral(ctx):
    s = 0.5
    h = s * np.sqrt(3) / 2
    positions = [[0.0, 0, 0], [s, 0, 0], [s / 2, h, 0]]
    scene = make_scene(ctx, positions, [0.0, 0.0, 0.0])
    got = total_free_energy_3(scene)
    want = block_energy_3(scene.positions_lambda(),
                          [p.material for p in scene.particles], ctx)
    assert got == pytest.approx(want, rel=1e-10)


def test_total_against_block_oracle_random(ctx, rng):
    for _ in range(5):
        while True:
            pos = rng.uniform(-0.7, 0.7, size=(3, 3))
            seps = [np.linalg.norm(pos[i] - pos[j])
                    for i in range(3) for j in range(i + 1, 3)]
            if min(seps) > 0.15:
                break
        bs = rng.uniform(-1.5, 1.5, size=3)
        scene = make_scene(ctx, pos, bs)
        got = total_free_energy_3(scene)
        want = block_energy_3(scene.positions_lambda(),
                              [p.material for p in scene.particles], ctx)
        assert got == pytest.approx(want, rel=1e-9)


def test_clustering_limit(ctx):
    from nrcasimir import free_energy_one_reflection
    near = [[0.0, 0, 0], [0.4, 0, 0]]
    scene = make_scene(ctx, near + [[60.0, 0, 0]], [0.7, -0.5, 1.0])
    total = total_free_energy_3(scene)
    pair = free_energy_one_reflection(scene.particles[0], scene.particles[1],
                                      ctx).free_energy
    assert total == pytest.approx(pair, rel=1e-6)
    assert abs(three_body_correction(scene)) < 1e-6 * abs(pair)


def test_cyclic_relabeling_invariance(ctx):
    scene = make_scene(ctx, TRIANGLE, [0.5, -0.8, 0.2])
    cycled = make_scene(ctx, [TRIANGLE[2], TRIANGLE[0], TRIANGLE[1]],
                        [0.2, 0.5, -0.8])
    a = total_free_energy_3(scene)
    b = total_free_energy_3(cycled)
    assert a == pytest.approx(b, rel=2e-13)


def test_forces_sum_to_zero(ctx):
    scene = make_scene(ctx, TRIANGLE, [0.5, -0.8, 0.2])
    forces = forces_3(scene)
    net, _ = net_force_and_torque(scene, forces)
    assert np.abs(net).max() <= 1e-10 * np.abs(forces).max()


def test_force_consistency_with_pair(ctx):
    # remove particle 3 to far distance: force on 1 approaches the pair force
    scene = make_scene(ctx, [[0.0, 0, 0], [0.5, 0, 0], [80.0, 0, 0]],
                       [0.9, -0.4, 0.3])
    f3 = forces_3(scene)
    pair = force(scene.particles[0], scene.particles[1], ctx,
                 method="analytic")
    np.testing.assert_allclose(f3[0], pair, rtol=1e-6,
                               atol=1e-9 * np.abs(pair).max())


def test_covariant_torque_balance(ctx):
    # mechanical torque is compensated by the bias-axis rotation torque
    scene = make_scene(ctx, TRIANGLE, [0.7, -1.2, 0.3])
    forces = forces_3(scene)
    _, t_mech = net_force_and_torque(scene, forces)
    t_axis = axis_rotation_torque_3(scene)
    scale = np.abs(forces).max() * ctx.lambda_T
    assert np.abs(t_mech).max() > 1e-4 * scale  # genuinely nonzero
    assert np.abs(t_mech + t_axis).max() <= 1e-8 * scale


def test_isotropic_scene_has_zero_mechanical_torque(ctx):
    scene = make_scene(ctx, TRIANGLE, [0.0, 0.0, 0.0])
    forces = forces_3(scene)
    _, t_mech = net_force_and_torque(scene, forces)
    assert np.abs(t_mech).max() <= 1e-10 * np.abs(forces).max() * ctx.lambda_T


def test_scene_validation(ctx):
    lam = ctx.lambda_T
    a0 = 1e-3 * lam**3
    mk = lambda p: ParticleSpec(np.asarray(p) * lam, ToyPolarizability(a0, 0.0))
    with pytest.raises(ValueError):
        Scene([mk([0, 0, 0]), mk([1, 0, 0])], ctx)
    with pytest.raises(GeometryError):
        Scene([mk([0, 0, 0]), mk([1e-5, 0, 0]), mk([1, 0, 0])], ctx)
