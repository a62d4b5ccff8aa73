import math
from dataclasses import replace

import numpy as np
import pytest

from vortexlab.builtins import get_spec, get_twist
from vortexlab.domain import Domain
from vortexlab.flow import SolverConfig, direct_solve, discretize, picard_solve
from vortexlab.maps import TwistMap
from vortexlab.modulus import ThetaProfile
from vortexlab.stability import (alpha_trend, data_dependence_experiment, domain_dependence_experiment,
                                 fit_holder_exponents, quasi_lipschitz_probe, time_continuity_audit)
from vortexlab.vorticity import Composite, GaussianBlob, Patch, VorticitySpec

PLANE = Domain.plane()
DISK = Domain.disk()
C0 = ThetaProfile().c0


# exponent fits


def test_holder_fit_recovers_power_law():
    eps = np.array([1e-2, 1e-3, 1e-4, 1e-5])
    d = np.stack([1e-2 * eps ** 0.7, 1e-3 * eps], axis=1)
    alpha, se, n = fit_holder_exponents(eps, d, C0)
    np.testing.assert_allclose(alpha, [0.7, 1.0], atol=1e-12)
    np.testing.assert_allclose(se, 0.0, atol=1e-6)
    assert list(n) == [4, 4]


def test_holder_fit_skips_floor_and_large_cells():
    eps = np.array([1e-1, 1e-2, 1e-3, 0.0])
    d = np.array([[0.0, 5e-2], [0.0, 1e-6], [1e-14, 1e-7], [0.0, 0.0]])
    alpha, se, n = fit_holder_exponents(eps, d, C0)
    assert math.isnan(alpha[0]) and n[0] == 0
    # only the two cells below 1/c0 with eps > 0 enter
    assert n[1] == 2
    assert alpha[1] == pytest.approx(1.0)


def test_alpha_trend_detects_decay_and_rises():
    t = np.array([0.0, 0.5, 1.0])
    dec = alpha_trend(t, np.array([1.0, 0.9, 0.8]), np.full(3, 0.01), 0.5, 1.0)
    assert dec["decay"] and dec["non_increasing"]
    up = alpha_trend(t, np.array([0.8, 0.9, 1.0]), np.full(3, 0.01), 0.5, 1.0)
    assert not up["decay"] and not up["non_increasing"]
    assert len(up["rises"]) == 2
    flat = alpha_trend(t, np.array([1.0, 1.0, 1.0 - 1e-3]), np.full(3, 0.01), 0.5, 1.0)
    assert not flat["decay"]


# initial-data dependence

SMALL = SolverConfig(dt=0.05, t_end=0.5, picard_tol=1e-10, n_per_axis=12)


def _patch_pair():
    spec = VorticitySpec(Patch((0.0, 0.0), 0.5, 1.0), PLANE, name="patch")
    pert = VorticitySpec(Patch((0.25, 0.0), 0.25, 1.0), PLANE)
    return spec, pert


@pytest.mark.parametrize("eps", [[1e-2, 1e-3, 1e-4], [1e-3, 1e-2, 1e-4, 1e-5], [1e-2, 1e-3, 1e-4, -1e-5]])
def test_eps_list_validation(eps):
    spec, pert = _patch_pair()
    with pytest.raises(ValueError):
        data_dependence_experiment(spec, pert, eps, SMALL)


def test_data_dependence_small_run():
    spec, pert = _patch_pair()
    rep = data_dependence_experiment(spec, pert, [1e-2, 1e-3, 1e-4, 0.0], SMALL, report_times=[0, 0.25, 0.5])
    D = rep.distances
    # zero perturbation reproduces the base run bit for bit, and d(0) = 0
    np.testing.assert_array_equal(D[-1], 0.0)
    np.testing.assert_array_equal(D[:, 0], 0.0)
    assert np.all(np.diff(D[:3, 1:], axis=0) < 0)
    assert rep.passed and np.isfinite(rep.envelope_C["C"])
    assert rep.fitted_alpha[-1] == pytest.approx(1.0, abs=0.05)
    assert len(list(rep.rows())) == 4 * 3


def test_perturbation_must_be_a_density():
    spec, _ = _patch_pair()
    with pytest.raises(ValueError):
        data_dependence_experiment(spec, get_spec("corotating-pair"), [1e-2, 1e-3, 1e-4, 1e-5], SMALL)


# domain dependence


def test_radial_twist_leaves_radial_data_fixed():
    spec = get_spec("radial-gaussian")
    cfg = SolverConfig(dt=0.02, t_end=0.2, picard_tol=1e-10)
    rep = domain_dependence_experiment(spec, TwistMap("radial", 1.0), [1e-2, 1e-3, 1e-4, 1e-5], cfg,
                                       n_per_axis=6, layout="polar", angular_spacing=0.05 / 3,
                                       report_times=[0, 0.1, 0.2])
    assert rep.extra["max_d"] <= 1e-8


def test_twisted_patch_distance_scales_with_eps():
    spec = get_spec("offset-patch")
    cfg = SolverConfig(dt=0.05, t_end=0.5, picard_tol=1e-10)
    rep = domain_dependence_experiment(spec, get_twist("radial", 1.0, 1.0), [1e-2, 1e-3, 1e-4, 1e-5], cfg,
                                       n_per_axis=10, report_times=[0, 0.25, 0.5], norm_grid=128)
    D = rep.distances
    # only the round trip through the twist separates the runs at t = 0
    np.testing.assert_allclose(D[:, 0], 0.0, atol=1e-15)
    assert np.all(np.diff(D[:, 1:], axis=0) < 0)
    assert rep.fitted_alpha[-1] == pytest.approx(1.0, abs=0.05)
    assert rep.passed
    assert np.isfinite(rep.envelope_C["C1"]) and rep.envelope_C["C2"] > 0
    assert rep.extra["norm_linearity"]["C1"]["r2"] >= 0.999


def test_twist_must_fit_domain():
    with pytest.raises(ValueError):
        domain_dependence_experiment(get_spec("offset-patch"), TwistMap("shear", 1.0),
                                     [1e-2, 1e-3, 1e-4, 1e-5], SMALL)


# quasi-Lipschitz probe


def test_probe_identical_inputs_give_zero():
    cfg = SolverConfig(dt=0.05, t_end=0.5)
    res = picard_solve(get_spec("corotating-pair"), cfg)
    X = res.trajectory
    rep = quasi_lipschitz_probe(X, X, X.flow, X.flow, cfg=cfg)
    np.testing.assert_array_equal(rep.d_out, 0.0)
    assert rep.C == 0.0


def test_probe_pair_with_scaled_circulation_is_bounded():
    cfg = SolverConfig(dt=1e-2, t_end=1.0, picard_tol=1e-10)
    a = picard_solve(get_spec("corotating-pair"), cfg).trajectory
    f1 = a.flow.with_values(a.flow.values * (1 + 1e-3))
    b = picard_solve(f1, cfg).trajectory
    rep = quasi_lipschitz_probe(a, b, a.flow, f1, cfg=cfg)
    assert rep.norms["difference"] == pytest.approx(2e-3)
    assert np.isfinite(rep.C) and 0 < rep.C < 10
    assert rep.singular_branch["d_out_singular"]
    assert rep.d_out[-1] > 0


def test_probe_rejects_mismatched_grids():
    a = picard_solve(get_spec("zero"), SolverConfig(dt=0.1, t_end=1.0)).trajectory
    b = picard_solve(get_spec("zero"), SolverConfig(dt=0.05, t_end=1.0)).trajectory
    with pytest.raises(ValueError):
        quasi_lipschitz_probe(a, b, a.flow, b.flow)


# time continuity


def test_time_audit_zero_field():
    spec = VorticitySpec(Composite(()), PLANE, tracers=((0.1, 0.2),))
    traj = direct_solve(spec, SolverConfig(dt=0.1, t_end=1.0))
    rep = time_continuity_audit(traj)
    assert rep.passed and np.all(rep.distance == 0)


def test_time_audit_vortex_tracers_grow_linearly():
    traj = direct_solve(get_spec("single-vortex-tracers"), SolverConfig(dt=1e-2, t_end=0.5))
    rep = time_continuity_audit(traj, t_small=0.1)
    k = (traj.times > 0) & (traj.times <= 0.1)
    slope = rep.distance[k] / traj.times[k]
    # tracers on r = 0.5 move at 1 / (2 pi 0.5) along a chord
    assert slope == pytest.approx(np.full(k.sum(), 1 / math.pi), rel=1e-2)
    assert rep.passed and np.isfinite(rep.C1) and np.isfinite(rep.C2)


def test_time_audit_patch_passes():
    traj = direct_solve(VorticitySpec(Patch((0.0, 0.0), 0.5, 1.0), PLANE), SolverConfig(dt=0.05, t_end=1.0,
                                                                                         n_per_axis=12))
    rep = time_continuity_audit(traj)
    assert rep.passed
    assert rep.t_small == pytest.approx(0.1)
    assert all(row[3] for row in rep.rows())


# symmetry


def test_disk_flow_is_rotation_equivariant():
    spec = VorticitySpec(GaussianBlob((0.3, 0.1), 0.15, 1.0), DISK)
    flow = discretize(spec, 10)
    a = 0.7
    R = np.array([[math.cos(a), -math.sin(a)], [math.sin(a), math.cos(a)]])
    rot = replace(flow, labels=flow.labels @ R.T, positions=flow.positions @ R.T)
    cfg = SolverConfig(dt=0.05, t_end=0.5)
    X = direct_solve(flow, cfg)
    Y = direct_solve(rot, cfg)
    np.testing.assert_allclose(Y.positions, X.positions @ R.T, atol=1e-12)
