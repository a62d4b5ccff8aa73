import math

import numpy as np
import pytest

from vortexlab.domain import Domain
from vortexlab.modulus import ThetaProfile
from vortexlab.vorticity import (Composite, GaussianBlob, LogSpike, Mollified, Patch, PointVortices,
                                 VorticitySpec)


def test_patch_values():
    p = Patch((0.1, 0.0), 0.5, 2.0)
    v = p.evaluate(np.array([[0.1, 0.0], [0.7, 0.0]]), Domain.plane())
    np.testing.assert_array_equal(v, [2.0, 0.0])
    assert p.total() == pytest.approx(2.0 * math.pi * 0.25)


def test_log_spike_is_integrable_but_unbounded():
    s = VorticitySpec(LogSpike((0.0, 0.0), 0.5, 1.0), Domain.plane())
    n = s.norms(4.0, n=600)
    assert n["L1"] == pytest.approx(math.pi * 0.25 / 2, rel=2e-2)
    assert n["Linf"] > 5


def test_gaussian_total():
    g = VorticitySpec(GaussianBlob((0.0, 0.0), 0.1, 1.0), Domain.plane())
    assert g.norms(n=400)["L1"] == pytest.approx(2 * math.pi * 0.01, rel=1e-6)


def test_torus_background_makes_zero_mean():
    s = VorticitySpec(Patch((0.0, 0.0), 0.2, 1.0), Domain.torus())
    P, w, v = s.norm_quadrature(400)
    assert math.fsum(w * v) == pytest.approx(0.0, abs=1e-3)
    assert s.background == pytest.approx(-math.pi * 0.04)


def test_atoms_are_not_density():
    s = VorticitySpec(PointVortices((((0.0, 0.0), 1.0),)), Domain.plane())
    assert s.atoms_only
    assert s.norms()["L1"] == 0.0


def test_zero_spec():
    s = VorticitySpec(Composite(()), Domain.disk())
    assert s.is_zero and s.sample_box() is None
    assert s.norms(theta=ThetaProfile())["Y"] == 0.0


def test_disk_rejects_exterior_vortex():
    with pytest.raises(ValueError):
        VorticitySpec(PointVortices((((1.2, 0.0), 1.0),)), Domain.disk())


def test_mollification_keeps_mass_and_smooths():
    base = Patch((0.0, 0.0), 0.3, 1.0)
    m = Mollified(base, 0.05)
    dom = Domain.plane()
    assert m.evaluate(np.array([0.0, 0.0]), dom) == pytest.approx(1.0)
    edge = m.evaluate(np.array([0.3, 0.0]), dom)
    assert 0.3 < edge < 0.7
    s = VorticitySpec(m, dom)
    assert s.norms(n=400)["L1"] == pytest.approx(base.total(), rel=1e-3)


def test_mollifier_rejects_atoms():
    with pytest.raises(ValueError):
        Mollified(PointVortices((((0.0, 0.0), 1.0),)), 0.1)


def test_composite_adds_parts():
    c = Composite((Patch((0.0, 0.0), 0.5, 1.0), Patch((0.0, 0.0), 0.25, 1.0)))
    np.testing.assert_array_equal(c.evaluate(np.array([[0.0, 0.0], [0.4, 0.0]]), Domain.plane()), [2.0, 1.0])
    assert c.total() == pytest.approx(math.pi * (0.25 + 0.0625))
