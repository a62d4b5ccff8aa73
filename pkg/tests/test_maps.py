import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import stats

from vortexlab.domain import Domain
from vortexlab.maps import (Rotation, TwistJacobianError, TwistMap, Translation, default_rearrangements,
                            twist_norms)

EPS = [1e-2, 3e-3, 1e-3, 3e-4, 1e-4]


@pytest.mark.parametrize("twist,dom", [(TwistMap("radial", 0.7), Domain.disk()),
                                       (TwistMap("radial", 2.0, r0=1.5), Domain.plane()),
                                       (TwistMap("shear", 0.4), Domain.torus())], ids=["disk", "plane", "torus"])
def test_jacobian_determinant_is_one(twist, dom):
    assert twist.check_jacobian(dom, n=1000, seed=0) <= 1e-10


def test_bad_jacobian_raises():
    class Bent(TwistMap):
        def jacobian(self, p):
            return 1.01 * super().jacobian(p)
    with pytest.raises(TwistJacobianError):
        Bent("radial", 0.5).check_jacobian(Domain.disk())


def test_analytic_jacobian_matches_finite_differences():
    tw = TwistMap("radial", 0.8)
    p = np.array([[0.3, -0.2], [0.1, 0.6], [-0.5, -0.4]])
    h = 1e-6
    for q in p:
        J = tw.jacobian(q)
        fd = np.stack([(tw.forward(q + h * e) - tw.forward(q - h * e)) / (2 * h) for e in np.eye(2)], axis=1)
        np.testing.assert_allclose(J, fd, atol=1e-8)


@settings(max_examples=60, deadline=None)
@given(st.floats(0, 0.99), st.floats(0, 2 * np.pi), st.floats(-3, 3))
def test_radial_twist_round_trip_and_radius(r, th, eps):
    tw = TwistMap("radial", eps)
    p = np.array([r * np.cos(th), r * np.sin(th)])
    q = tw.forward(p)
    assert np.hypot(*q) == pytest.approx(r, abs=1e-14)
    np.testing.assert_allclose(tw.inverse(q), p, atol=1e-14)


def test_radial_twist_fixes_the_boundary_collar():
    tw = TwistMap("radial", 1.0, r0=0.9)
    p = np.array([[0.95, 0.0], [0.0, -0.92]])
    np.testing.assert_array_equal(tw.forward(p), p)


def test_zero_twist_is_identity():
    p = np.random.default_rng(1).random((10, 2)) - 0.5
    for tw in (TwistMap("radial", 0.0), TwistMap("shear", 0.0)):
        np.testing.assert_array_equal(tw.forward(p), p)


def test_domain_checks():
    with pytest.raises(ValueError):
        TwistMap("radial", 1.0).check_domain(Domain.torus())
    with pytest.raises(ValueError):
        TwistMap("shear", 1.0).check_domain(Domain.disk())
    with pytest.raises(ValueError):
        TwistMap("radial", 1.0, r0=1.2).check_domain(Domain.disk())
    with pytest.raises(ValueError):
        TwistMap("spiral", 1.0)


@pytest.mark.parametrize("kind,dom", [("radial", Domain.disk()), ("shear", Domain.torus())])
def test_twist_norms_linear_in_eps(kind, dom):
    tw = TwistMap(kind, 1.0)
    g = [twist_norms(tw.with_epsilon(e), dom)["grad"] for e in EPS]
    c1 = [twist_norms(tw.with_epsilon(e), dom)["C1"] for e in EPS]
    for series in (g, c1):
        fit = stats.linregress(EPS, series)
        assert fit.rvalue ** 2 >= 0.999
        assert abs(fit.intercept) < 1e-3 * max(series)


def test_rearrangements_preserve_area_and_invert():
    rng = np.random.default_rng(2)
    p = 0.6 * (rng.random((50, 2)) - 0.5)
    for dom in (Domain.disk(), Domain.plane(), Domain.torus()):
        for R in default_rearrangements(dom):
            np.testing.assert_allclose(R.inverse(R.forward(p)), p, atol=1e-13)
    assert Rotation().shift_bound == 0.0
    assert Translation(shift=(0.3, 0.4)).shift_bound == pytest.approx(0.5)


def test_rearrangement_names_per_domain():
    assert [r.name for r in default_rearrangements(Domain.disk())] == ["identity", "rotation", "radial-twist"]
    assert "translation" in [r.name for r in default_rearrangements(Domain.plane())]
    assert "shear" in [r.name for r in default_rearrangements(Domain.torus())]
