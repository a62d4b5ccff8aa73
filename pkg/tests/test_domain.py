import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from vortexlab.domain import (Domain, KernelParams, SingularityError, disk_tangency_check,
                              divergence_check, kernel_bound_audit, kernel_eval, torus_consistency_check,
                              torus_kernel_images)

coord = st.floats(-0.95, 0.95, allow_nan=False)


def test_plane_unit_separation():
    K = kernel_eval(Domain.plane(), (1.0, 0.0), (0.0, 0.0))
    np.testing.assert_allclose(K, [0.0, 1 / (2 * math.pi)], atol=1e-15)
    assert K[1] == pytest.approx(0.159155, abs=1e-6)


def test_disk_centre_vortex_is_pure_rotation():
    for r in (0.1, 0.5, 0.9):
        K = kernel_eval(Domain.disk(), (r, 0.0), (0.0, 0.0))
        np.testing.assert_allclose(K, [0.0, 1 / (2 * math.pi * r)], rtol=1e-13, atol=1e-15)


def test_coincident_points_raise_without_blob():
    with pytest.raises(SingularityError):
        kernel_eval(Domain.plane(), (0.2, 0.3), (0.2, 0.3))


def test_blob_is_finite_at_coincidence():
    K = kernel_eval(Domain.plane(), (0.2, 0.3), (0.2, 0.3), KernelParams(0.1))
    np.testing.assert_array_equal(K, [0.0, 0.0])


def test_kernel_broadcasts():
    x = np.random.default_rng(0).random((5, 2))
    K = kernel_eval(Domain.plane(), x, (2.0, 2.0))
    assert K.shape == (5, 2)


@settings(max_examples=60, deadline=None)
@given(coord, coord, coord, coord)
def test_plane_antisymmetry(a, b, c, d):
    if math.hypot(a - c, b - d) < 1e-6:
        return
    dom = Domain.plane()
    np.testing.assert_array_equal(kernel_eval(dom, (a, b), (c, d)), -kernel_eval(dom, (c, d), (a, b)))


@settings(max_examples=40, deadline=None)
@given(coord, coord, coord, coord)
def test_torus_antisymmetry(a, b, c, d):
    dom = Domain.torus()
    if dom.distance(np.array([a, b]), np.array([c, d])) < 1e-3:
        return
    K1 = kernel_eval(dom, (a, b), (c, d))
    K2 = kernel_eval(dom, (c, d), (a, b))
    np.testing.assert_allclose(K1, -K2, atol=1e-12)


def test_disk_boundary_tangency():
    assert disk_tangency_check(1000, seed=1) <= 1e-10


def test_torus_table_matches_image_sum():
    assert torus_consistency_check(Domain.torus(), 1000, seed=2) <= 1e-6


def test_torus_is_periodic():
    dom = Domain.torus()
    x = np.array([0.1, 0.2])
    y = np.array([-0.3, 0.05])
    np.testing.assert_allclose(kernel_eval(dom, x, y), kernel_eval(dom, x + [1.0, -1.0], y), atol=1e-12)
    np.testing.assert_allclose(torus_kernel_images(dom, x, y), torus_kernel_images(dom, x + [1.0, 0.0], y),
                               atol=1e-12)


@pytest.mark.parametrize("dom", [Domain.plane(), Domain.disk(), Domain.torus()], ids=lambda d: d.kind)
def test_divergence_free(dom):
    assert divergence_check(dom, n=200, seed=3) <= 1e-6


def test_second_order_stencil_is_truncation_limited():
    # the three-point stencil cannot reach 1e-6 at h = 1e-4 and |x - y| = 0.1
    e2 = divergence_check(Domain.plane(), n=200, seed=3, order=2)
    e4 = divergence_check(Domain.plane(), n=200, seed=3, order=4)
    assert e4 < e2


def test_audit_rejects_tiny_sample_counts():
    with pytest.raises(ValueError):
        kernel_bound_audit(Domain.plane(), 0)


def test_plane_audit_constant_and_monotone_history():
    a = kernel_bound_audit(Domain.plane(), 5000, seed=0)
    assert a.C1_fit == pytest.approx(1 / (2 * math.pi), rel=1e-2)
    assert np.all(np.diff(a.C1_history) >= 0)
    assert np.all(np.diff(a.C2_history) >= 0)
    assert a.violations == 0


def test_disk_audit_is_finite():
    a = kernel_bound_audit(Domain.disk(), 3000, seed=0)
    assert np.isfinite(a.C1_fit) and np.isfinite(a.C2_fit)
    assert a.violations == 0


def test_audit_csv_columns(tmp_path):
    from vortexlab.io import read_csv
    a = kernel_bound_audit(Domain.plane(), 200, seed=0)
    a.to_csv(tmp_path / "a.csv", ["x"])
    header, cols, rows = read_csv(tmp_path / "a.csv")
    assert cols == ["sample_id", "|x-y|", "|K|", "bound_ratio"]
    assert header == ["x"] and len(rows) > 0


def test_domain_validation():
    with pytest.raises(ValueError):
        Domain.torus(-1.0)
    with pytest.raises(ValueError):
        Domain("sphere")
    with pytest.raises(ValueError):
        KernelParams(-1.0)
