import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from nrcasimir import (ParticleSpec, ToyGeometry, ToyPolarizability,
                       crossover_scan, f_long, f_short,
                       free_energy_one_reflection)


def geom(ctx, d_lambda=10.0, theta=math.pi / 2, phi=0.0, b1=0.0, b2=0.0):
    return ToyGeometry(d=d_lambda * ctx.lambda_T, theta=theta, phi=phi,
                       b1=b1, b2=b2, alpha0=1e-25, ctx=ctx)


def bracket_long(g):
    return f_long(g) / (g.ctx.kT * g.alpha0**2 / (32 * g.d**6 * math.pi**2))


def bracket_short(g):
    return f_short(g) / (g.ctx.hbar * g.ctx.c * g.alpha0**2
                         / (64 * g.d**7 * math.pi**3))


def test_long_bracket_reciprocal(ctx):
    assert bracket_long(geom(ctx)) == pytest.approx(-12.0, rel=1e-14)


def test_long_bracket_axis_case(ctx):
    # theta = pi/2, phi = 0: bracket is -12 + 4 b1 b2, zero at b1 b2 = 3
    g = geom(ctx, b1=1.5, b2=1.0)
    assert bracket_long(g) == pytest.approx(-12.0 + 4.0 * 1.5, rel=1e-13)
    g3 = geom(ctx, b1=3.0, b2=1.0)
    assert bracket_long(g3) == pytest.approx(0.0, abs=1e-12)


def test_long_bracket_mirror_case(ctx):
    # theta = 0, b2 = -b1 = b: bracket is -12 + 8 b^2
    for b in (0.5, 1.0, 2.0):
        g = geom(ctx, theta=0.0, phi=math.pi / 2, b1=-b, b2=b)
        assert bracket_long(g) == pytest.approx(-12.0 + 8.0 * b * b, rel=1e-13)


def test_short_bracket_reciprocal(ctx):
    assert bracket_short(geom(ctx, d_lambda=1e-3)) == pytest.approx(-23.0,
                                                                    rel=1e-14)


def test_short_bracket_axis_case(ctx):
    # theta = pi/2, phi = 0: bracket is -23 + 13 b1 b2, zero at 23/13
    g = geom(ctx, d_lambda=1e-3, b1=2.0, b2=1.0)
    assert bracket_short(g) == pytest.approx(-23.0 + 13.0 * 2.0, rel=1e-13)
    gz = geom(ctx, d_lambda=1e-3, b1=23.0 / 13.0, b2=1.0)
    assert bracket_short(gz) == pytest.approx(0.0, abs=1e-12)


def test_short_bracket_mirror_case(ctx):
    # theta = 0, b2 = -b1 = b: bracket is -23 + 15 b^2
    for b in (0.5, 1.0, 1.5):
        g = geom(ctx, d_lambda=1e-3, theta=0.0, b1=-b, b2=b)
        assert bracket_short(g) == pytest.approx(-23.0 + 15.0 * b * b,
                                                 rel=1e-13)


@given(st.floats(-3, 3), st.floats(-3, 3), st.floats(0, math.pi),
       st.floats(0, 2 * math.pi))
@settings(max_examples=60, deadline=None)
def test_gyrotropy_sign_flip_invariance(b1, b2, theta, phi):
    from nrcasimir import ThermalContext
    ctx = ThermalContext(300.0)
    g = geom(ctx, theta=theta, phi=phi, b1=b1, b2=b2)
    gf = geom(ctx, theta=theta, phi=phi, b1=-b1, b2=-b2)
    assert f_long(g) == pytest.approx(f_long(gf), rel=1e-13)
    assert f_short(g) == pytest.approx(f_short(gf), rel=1e-13)


@given(st.floats(0, math.pi), st.floats(0, 2 * math.pi))
@settings(max_examples=60, deadline=None)
def test_angular_symmetries(theta, phi):
    from nrcasimir import ThermalContext
    ctx = ThermalContext(300.0)
    g = geom(ctx, theta=theta, phi=phi, b1=1.2, b2=0.8)
    # phi-periodicity by pi and theta reflection about the equator
    g_pi = geom(ctx, theta=theta, phi=phi + math.pi, b1=1.2, b2=0.8)
    g_ref = geom(ctx, theta=math.pi - theta, phi=phi, b1=1.2, b2=0.8)
    assert f_long(g) == pytest.approx(f_long(g_pi), rel=1e-12)
    assert f_long(g) == pytest.approx(f_long(g_ref), rel=1e-12)


def test_numeric_to_oracle_ratio_is_angle_independent(ctx, rng):
    # the engine's classical limit reproduces the oracle's full angular and
    # gyrotropic structure up to one global constant
    lam = ctx.lambda_T
    a0 = 1e-4 * lam**3
    ratios = []
    for _ in range(12):
        theta = rng.uniform(0.1, math.pi - 0.1)
        phi = rng.uniform(0, 2 * math.pi)
        b1 = rng.uniform(-1.5, 1.5)
        b2 = rng.uniform(-1.5, 1.5)
        if abs(-12 - 5 * b1 * b2 - 3 * b1 * b2 *
               (math.cos(2 * theta) - 2 * math.cos(2 * phi) *
                math.sin(theta) ** 2)) < 0.5:
            continue  # skip near-zero oracle values
        d = 12.0
        direction = np.array([math.cos(phi) * math.sin(theta),
                              math.sin(phi) * math.sin(theta),
                              math.cos(theta)])
        p1 = ParticleSpec(np.zeros(3), ToyPolarizability(a0, b1))
        p2 = ParticleSpec(direction * d * lam, ToyPolarizability(a0, b2))
        num = free_energy_one_reflection(p1, p2, ctx).free_energy
        g = ToyGeometry(d=d * lam, theta=theta, phi=phi, b1=b1, b2=b2,
                        alpha0=a0, ctx=ctx)
        ratios.append(num / f_long(g))
    ratios = np.array(ratios)
    assert ratios.size >= 8
    assert np.all(np.abs(ratios / ratios.mean() - 1.0) < 1e-2)


def test_crossover_window(ctx):
    lam = ctx.lambda_T
    scan = crossover_scan(2.0, 1e-4 * lam**3, ctx, samples=41)
    assert scan.status == "stationary-point"
    assert scan.energies[0] > 0 and scan.energies[-1] < 0
    assert scan.sign_changes
    x_star = scan.stationary_distance / lam
    assert 1e-2 < x_star < 1e2
    assert scan.stationary_energy < 0


def test_crossover_stationary_is_force_root(ctx):
    from nrcasimir import force
    lam = ctx.lambda_T
    a0 = 1e-4 * lam**3
    scan = crossover_scan(2.0, a0, ctx, samples=41)
    x_star = scan.stationary_distance / lam
    p1 = ParticleSpec(np.zeros(3), ToyPolarizability(a0, 2.0))
    p2 = ParticleSpec(np.array([x_star * lam, 0, 0]), ToyPolarizability(a0, 1.0))
    f = force(p2, p1, ctx, method="analytic")
    # radial force changes sign across the stationary point
    p2in = ParticleSpec(np.array([0.9 * x_star * lam, 0, 0]),
                        ToyPolarizability(a0, 1.0))
    p2out = ParticleSpec(np.array([1.1 * x_star * lam, 0, 0]),
                         ToyPolarizability(a0, 1.0))
    fin = force(p2in, p1, ctx, method="analytic")
    fout = force(p2out, p1, ctx, method="analytic")
    assert fin[0] > 0 > fout[0]
    assert abs(f[0]) < 0.1 * max(fin[0], -fout[0])


def test_no_crossover_for_reciprocal(ctx):
    lam = ctx.lambda_T
    scan = crossover_scan(0.0, 1e-4 * lam**3, ctx, samples=31)
    assert scan.status == "no-crossover"
    assert not scan.sign_changes
    assert np.all(scan.energies < 0)


def test_repulsive_everywhere_for_large_product(ctx):
    lam = ctx.lambda_T
    scan = crossover_scan(10.0, 1e-4 * lam**3, ctx, samples=31)
    assert scan.status == "no-crossover"
    assert scan.energies[0] > 0 and scan.energies[-1] > 0


def test_geometry_requires_positive_distance(ctx):
    with pytest.raises(ValueError):
        ToyGeometry(d=0.0, theta=0.0, phi=0.0, b1=0, b2=0, alpha0=1e-25,
                    ctx=ctx)
