import math

import numpy as np
import pytest

from nrcasimir import MatsubaraPolicy, ThermalContext, matsubara_kappa


def test_kappa_zero_is_zero(ctx):
    assert matsubara_kappa(0, ctx) == 0.0


def test_kappa_1_at_300K():
    ctx = ThermalContext(300.0)
    # lambda_T = hbar*c/(k_B*300 K) = 7.6329e-6 m by direct evaluation
    assert ctx.lambda_T == pytest.approx(7.6329e-6, rel=1e-4)
    assert matsubara_kappa(1, ctx) == pytest.approx(2 * math.pi / 7.6329e-6,
                                                    rel=1e-4)


def test_kappa_linearity(ctx):
    assert matsubara_kappa(10, ctx) == 10 * matsubara_kappa(1, ctx)
    n = np.array([0, 1, 2, 5])
    np.testing.assert_allclose(matsubara_kappa(n, ctx), n * ctx.kappa1)


def test_kappa_negative_rejected(ctx):
    with pytest.raises(ValueError):
        matsubara_kappa(-1, ctx)


def test_lambda_kappa_product(ctx):
    assert ctx.lambda_T * ctx.kappa1 == pytest.approx(2 * math.pi, rel=1e-15)


def test_matsubara_xi_equals_c_kappa(ctx):
    assert ctx.matsubara_xi(3) == pytest.approx(3 * ctx.kappa1 * ctx.c,
                                                rel=1e-14)


def test_temperature_must_be_positive():
    with pytest.raises(ValueError):
        ThermalContext(temperature=0.0)
    with pytest.raises(ValueError):
        ThermalContext(temperature=-10.0)


def test_policy_validation():
    with pytest.raises(ValueError):
        MatsubaraPolicy(rel_tol=0.0, abs_tol=0.0)
    with pytest.raises(ValueError):
        MatsubaraPolicy(n_max=2, n_min=5)
    with pytest.raises(ValueError):
        MatsubaraPolicy(rel_tol=-1e-3)
