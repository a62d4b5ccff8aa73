import math
import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from vortexlab.domain import Domain
from vortexlab.modulus import (ModulusDomainError, NonOsgoodWarning, ThetaProfile, big_m,
                               big_m_closed_form_constant, default_p_grid, lp_norms, modulus_kit, mu,
                               negative_control, nu, osgood_envelope, pointwise_scaling_audit, ynorm)
from vortexlab.vorticity import Composite, Patch, VorticitySpec

CONST = ThetaProfile.constant()
C0 = CONST.c0


def _quiet_kit(theta):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", NonOsgoodWarning)
        return modulus_kit(theta)


# frozen values of the constant profile with c0 = 1000
def test_mu_capped_branch():
    assert mu(0.1, CONST) == pytest.approx(math.log(1000) / 1000, rel=1e-14)
    assert mu(0.1, CONST) == pytest.approx(6.90776e-3, abs=1e-8)


def test_mu_singular_branch():
    assert mu(1e-4, CONST) == pytest.approx(9.21034e-4, abs=1e-9)


def test_mu_continuous_at_knee():
    k = 1.0 / C0
    assert mu(k * (1 - 1e-12), CONST) == pytest.approx(mu(k, CONST), rel=1e-9)
    assert mu(0.0, CONST) == 0.0


def test_big_m_frozen_value():
    expected = math.log(math.log(1e4)) - math.log(math.log(1e3)) + 1 - 1 / math.log(1e3)
    assert big_m(1e-4, CONST) == pytest.approx(expected, abs=1e-10)
    assert big_m(1e-4, CONST) == pytest.approx(1.1430, abs=5e-4)
    assert nu(1e-4, CONST) == pytest.approx(0.3189, abs=5e-4)


def test_big_m_zero_at_r_max():
    kit = modulus_kit(CONST)
    assert big_m(kit.r_max, CONST) == pytest.approx(0.0, abs=1e-14)
    assert nu(kit.r_max, CONST) == pytest.approx(1.0, abs=1e-14)


def test_big_m_outside_domain_raises():
    kit = modulus_kit(CONST)
    with pytest.raises(ModulusDomainError):
        big_m(kit.r_max * 1.5, CONST)
    assert big_m(kit.r_max * 1.5, CONST, extend=True) < 0


def test_quadrature_matches_closed_form_on_50_points():
    r = np.geomspace(1e-14, 1.0 / C0, 50)
    quad = big_m(r, CONST, method="quad")
    np.testing.assert_allclose(quad, big_m_closed_form_constant(r, C0), atol=1e-6, rtol=0)


def test_table_matches_quadrature():
    r = np.geomspace(1e-12, 1e-3, 40)
    np.testing.assert_allclose(big_m(r, CONST, method="table"), big_m(r, CONST, method="quad"), atol=1e-8)


@pytest.mark.parametrize("theta", [CONST, ThetaProfile.powerlog(0.5), ThetaProfile.powerlog(1.0),
                                   ThetaProfile.constant(3.0)], ids=lambda t: t.label)
def test_inverse_round_trip(theta):
    kit = modulus_kit(theta)
    r = np.geomspace(kit.r_table_min * 10, kit.r_max, 60)
    back = kit.big_m_inv(kit.big_m(r))
    np.testing.assert_allclose(back, r, rtol=1e-6)


@settings(max_examples=80, deadline=None)
@given(st.floats(-30.0, -3.0), st.floats(-30.0, -3.0))
def test_big_m_strictly_decreasing(l1, l2):
    r1, r2 = sorted((10 ** l1, 10 ** l2))
    if r2 / r1 < 1 + 1e-9:
        return
    assert big_m(r1, CONST, method="table") > big_m(r2, CONST, method="table")
    assert nu(r1, CONST, method="table") < nu(r2, CONST, method="table")


@settings(max_examples=80, deadline=None)
@given(st.floats(0.0, 0.2), st.floats(0.0, 0.2))
def test_mu_nondecreasing(a, b):
    lo, hi = sorted((a, b))
    assert mu(lo, CONST) <= mu(hi, CONST)


def test_osgood_divergence_and_linear_convergence():
    ks = range(4, 15)
    m = [big_m(10.0 ** -k, CONST) for k in ks]
    assert np.all(np.diff(m) > 0)
    nc = negative_control(ThetaProfile.linear(), ks=ks)
    assert not nc["osgood"]
    assert np.isfinite(nc["M_limit"])
    steps = np.diff(nc["M"])
    assert np.all(steps > 0)
    assert np.all(nc["M"] < nc["M_limit"])
    # with theta(p) = p the tail of the integral is exactly 1 / ln(1/r)
    np.testing.assert_allclose(nc["M_limit"] - nc["M"], 1.0 / np.log(1.0 / nc["r"]), rtol=1e-6)


def test_linear_theta_warns():
    modulus_kit.cache_clear()
    with pytest.warns(NonOsgoodWarning):
        modulus_kit(ThetaProfile.linear())


def test_profiles_flag_osgood():
    assert CONST.is_osgood
    assert ThetaProfile.powerlog(1.0).is_osgood
    assert not ThetaProfile.powerlog(1.5).is_osgood
    assert not ThetaProfile.linear().is_osgood


def test_envelope_trivial_cases():
    assert osgood_envelope(0.0, 1.0, 2.0, CONST) == 0.0
    assert osgood_envelope(1e-8, 0.0, 5.0, CONST) == pytest.approx(1e-8, rel=1e-10)


@pytest.mark.parametrize("c", [1e-14, 1e-12, 1e-10])
def test_envelope_matches_double_exponential(c):
    # below the knee ln ln(1/rho) = ln ln(1/c) - gamma t
    for t in (0.1, 0.5, 1.0):
        rho = osgood_envelope(c, 1.0, t, CONST)
        assert rho == pytest.approx(c ** math.exp(-t), rel=1e-6)


def test_envelope_monotone_in_time():
    t = np.linspace(0, 3, 31)
    rho = np.array([osgood_envelope(1e-9, 1.0, s, CONST) for s in t])
    kit = modulus_kit(CONST)
    grow = rho < kit.r_max
    assert np.all(np.diff(rho) >= 0)
    assert np.all(np.diff(rho[grow]) > 0)
    assert rho[-1] == pytest.approx(kit.r_max)


def test_linear_envelope_saturates_in_finite_time():
    kit = _quiet_kit(ThetaProfile.linear())
    t_sat = kit.m_inf
    assert np.isfinite(t_sat)
    # even the tiniest start leaves the table range once t exceeds the limit of M
    assert kit.envelope(1e-300, 1.0, t_sat * 1.01, extend=True) > kit.r_max


# norms


def test_ynorm_of_indicator_is_one():
    w = np.full(100, 0.01)
    v = np.ones(100)
    assert ynorm(v, w, CONST) == pytest.approx(1.0, rel=1e-12)
    assert ynorm(v, w, CONST, p_grid=[10.0, 50.0]) == pytest.approx(1.0, rel=1e-12)


@settings(max_examples=40, deadline=None)
@given(st.lists(st.floats(-5, 5, allow_nan=False), min_size=3, max_size=20), st.integers(0, 2 ** 31))
def test_ynorm_homogeneous_and_permutation_invariant(vals, seed):
    v = np.array(vals)
    if not np.any(v != 0):
        return
    w = np.full(v.size, 1.0 / v.size)
    y = ynorm(v, w, CONST)
    assert ynorm(2 * v, w, CONST) == pytest.approx(2 * y, rel=1e-12)
    perm = np.random.default_rng(seed).permutation(v.size)
    assert ynorm(v[perm], w[perm], CONST) == pytest.approx(y, rel=1e-12)


def test_lp_norms_limits():
    v = np.array([1.0, 2.0, 3.0])
    w = np.array([0.2, 0.3, 0.5])
    got = lp_norms(v, w, [1.0, 2.0, 1e4])
    assert got[0] == pytest.approx(np.sum(w * v))
    assert got[1] == pytest.approx(math.sqrt(np.sum(w * v ** 2)))
    assert got[2] == pytest.approx(3.0, rel=1e-3)


def test_ynorm_log_singularity_stable_in_p_range():
    # ln(1/|x|) on the unit disk with theta(p) = p
    theta = ThetaProfile.linear()
    n = 2000
    x, wx = np.polynomial.legendre.leggauss(n)
    r = 0.5 * (x + 1)
    w = 0.5 * wx * 2 * np.pi * r
    v = np.log(1 / r)
    base = ynorm(v, w, theta, p_grid=default_p_grid(theta, p_max=100.0))
    ext = ynorm(v, w, theta, p_grid=default_p_grid(theta, p_max=200.0))
    assert np.isfinite(base)
    assert ext == pytest.approx(base, rel=1e-2)


# pointwise integrals


def test_pointwise_audit_zero_field():
    dom = Domain.disk()
    z = VorticitySpec(Composite(()), dom)
    a = pointwise_scaling_audit(dom, z, CONST, [1e-1, 1e-2])
    assert all(row["integral"] == 0 and row["ratio"] == 0 for row in a.rows)


def test_pointwise_audit_unit_disk():
    dom = Domain.disk()
    one = VorticitySpec(Patch((0.0, 0.0), 1.5, 1.0), dom)
    a = pointwise_scaling_audit(dom, one, CONST, [1e-1, 1e-2, 1e-3, 1e-4])
    assert a.passed
    first = [r for r in a.rows if r["estimate"] == 1]
    assert first and max(r["ratio"] for r in first) <= 1.0
    third = [r for r in a.rows if r["estimate"] == 3 and r["rearrangement"] == "identity"]
    # direct oracle: int_{M<=|z|<=1} M/|z|^2 dz = 2 pi M ln(1/M)
    for r in third:
        assert r["integral"] == pytest.approx(2 * math.pi * r["M"] * math.log(1 / r["M"]), rel=1e-6)
    ratios = [r["ratio"] for r in third]
    assert max(ratios) / min(ratios) <= 20


def test_pointwise_audit_rejects_bad_m_list():
    dom = Domain.disk()
    one = VorticitySpec(Patch((0.0, 0.0), 0.5, 1.0), dom)
    with pytest.raises(ValueError):
        pointwise_scaling_audit(dom, one, CONST, [1e-2, 1e-1])
    with pytest.raises(ValueError):
        pointwise_scaling_audit(dom, one, CONST, [2.0])
