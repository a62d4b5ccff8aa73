"""Named catalog of initial data, Theta profiles and twist maps."""
from __future__ import annotations

import math

from .domain import Domain
from .maps import TwistMap
from .modulus import ThetaProfile
from .vorticity import Composite, GaussianBlob, LogSpike, Patch, PointVortices, VorticitySpec

__all__ = ["SPECS", "THETAS", "TWISTS", "get_spec", "get_theta", "get_twist", "list_builtins"]


def _domain(kind: str, period: float = 1.0) -> Domain:
    if kind == "plane":
        return Domain.plane()
    if kind == "disk":
        return Domain.disk()
    if kind == "torus":
        return Domain.torus(period)
    raise ValueError(f"unknown domain {kind!r}; expected plane, disk or torus")


def _ring(n: int, radius: float):
    return tuple((radius * math.cos(2 * math.pi * k / n), radius * math.sin(2 * math.pi * k / n))
                 for k in range(n))


# name -> (default domain, description, factory(domain))
SPECS = {
    "corotating-pair": ("plane", "two unit point vortices at (+-0.5, 0)",
                        lambda d: PointVortices((((-0.5, 0.0), 1.0), ((0.5, 0.0), 1.0)))),
    "gaussian": ("plane", "Gaussian blob of width 0.2 at the origin",
                 lambda d: GaussianBlob((0.0, 0.0), 0.2, 1.0)),
    "logspike": ("plane", "unbounded ln+(0.5/r) spike at the origin",
                 lambda d: LogSpike((0.0, 0.0), 0.5, 1.0)),
    "offset-patch": ("disk", "unit patch of radius 0.3 centred at (0.3, 0)",
                     lambda d: Patch((0.3, 0.0), 0.3, 1.0)),
    "patch": ("plane", "unit vortex patch of radius 0.5 at the origin",
              lambda d: Patch((0.0, 0.0), 0.5, 1.0)),
    "patch-perturbation": ("plane", "unit patch of radius 0.25 centred at (0.25, 0)",
                           lambda d: Patch((0.25, 0.0), 0.25, 1.0)),
    "radial-gaussian": ("disk", "Gaussian of width 0.05 at the disk centre",
                        lambda d: GaussianBlob((0.0, 0.0), 0.05, 1.0)),
    "rigid-rotation": ("disk", "single point vortex at the disk centre; every circle about it turns rigidly",
                       lambda d: PointVortices((((0.0, 0.0), 1.0),))),
    "single-vortex-tracers": ("plane", "unit point vortex at the origin with tracers on r = 0.5",
                              lambda d: PointVortices((((0.0, 0.0), 1.0),))),
    "three-vortex": ("plane", "three point vortices of mixed sign",
                     lambda d: PointVortices((((0.0, 0.0), 1.0), ((1.0, 0.0), -0.5),
                                              ((0.0, 1.0), 0.75)))),
    "zero": ("plane", "zero vorticity", lambda d: Composite(())),
}

_TRACERS = {
    "single-vortex-tracers": _ring(8, 0.5),
    "rigid-rotation": _ring(12, 0.5),
}

# name -> (description, factory(alpha), tags)
THETAS = {
    "constant": ("Theta = 1 (bounded vorticity)", lambda a: ThetaProfile.constant(1.0), ()),
    "linear": ("Theta(p) = p", lambda a: ThetaProfile.linear(), ("non-osgood",)),
    "powerlog": ("Theta(p) = ln(p)^alpha", lambda a: ThetaProfile.powerlog(a), ()),
}

TWISTS = {
    "radial": ("(r, theta) -> (r, theta + eps g(r)) on the disk or plane",
               lambda eps, period: TwistMap("radial", eps)),
    "shear": ("(x1, x2) -> (x1 + eps s(x2), x2) on the torus",
              lambda eps, period: TwistMap("shear", eps, period=period)),
}


def get_spec(name: str, domain: str | None = None, period: float = 1.0) -> VorticitySpec:
    if name not in SPECS:
        raise KeyError(f"unknown spec {name!r}; available: {', '.join(sorted(SPECS))}")
    default, _, make = SPECS[name]
    dom = _domain(domain or default, period)
    return VorticitySpec(make(dom), dom, _TRACERS.get(name), name)


def get_theta(name: str, alpha: float = 1.0) -> ThetaProfile:
    if name not in THETAS:
        raise KeyError(f"unknown theta {name!r}; available: {', '.join(sorted(THETAS))}")
    return THETAS[name][1](alpha)


def get_twist(name: str, eps: float = 1.0, period: float = 1.0) -> TwistMap:
    if name not in TWISTS:
        raise KeyError(f"unknown twist {name!r}; available: {', '.join(sorted(TWISTS))}")
    return TWISTS[name][1](eps, period)


def list_builtins() -> dict:
    """Catalog with every section sorted by name."""
    return {
        "specs": [{"name": k, "domain": SPECS[k][0], "description": SPECS[k][1]} for k in sorted(SPECS)],
        "thetas": [{"name": k, "description": THETAS[k][0], "tags": list(THETAS[k][2])}
                   for k in sorted(THETAS)],
        "twists": [{"name": k, "description": TWISTS[k][0]} for k in sorted(TWISTS)],
    }
