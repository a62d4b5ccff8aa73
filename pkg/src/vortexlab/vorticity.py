"""Analytic initial vorticity fields and their quadrature."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .domain import Domain

__all__ = [
    "Patch",
    "GaussianBlob",
    "PointVortices",
    "LogSpike",
    "Composite",
    "Mollified",
    "VorticitySpec",
    "EmptySupportError",
]

# Gaussian tails below this fraction of the amplitude are treated as zero
_GAUSS_CUTOFF = math.sqrt(2.0 * math.log(1e14))


class EmptySupportError(ValueError):
    """The field has no support to sample."""


def _pt(p):
    return tuple(float(v) for v in p)


@dataclass(frozen=True)
class Patch:
    center: tuple = (0.0, 0.0)
    radius: float = 0.5
    amplitude: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "center", _pt(self.center))
        if not self.radius > 0:
            raise ValueError("patch radius must be positive")

    def evaluate(self, p, domain: Domain):
        d = domain.displacement(p, self.center)
        inside = np.einsum("...i,...i->...", d, d) <= self.radius ** 2
        return np.where(inside, self.amplitude, 0.0)

    def bbox(self):
        cx, cy = self.center
        r = self.radius
        return (cx - r, cx + r, cy - r, cy + r) if self.amplitude != 0 else None

    def reach(self, c):
        return float(np.hypot(*(np.asarray(self.center) - c))) + self.radius

    def total(self):
        return self.amplitude * math.pi * self.radius ** 2

    def atoms(self):
        return []


@dataclass(frozen=True)
class GaussianBlob:
    """``amplitude * exp(-|x - c|^2 / (2 width^2))``."""

    center: tuple = (0.0, 0.0)
    width: float = 0.1
    amplitude: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "center", _pt(self.center))
        if not self.width > 0:
            raise ValueError("gaussian width must be positive")

    def evaluate(self, p, domain: Domain):
        d = domain.displacement(p, self.center)
        r2 = np.einsum("...i,...i->...", d, d)
        return self.amplitude * np.exp(-0.5 * r2 / self.width ** 2)

    def bbox(self):
        cx, cy = self.center
        r = _GAUSS_CUTOFF * self.width
        return (cx - r, cx + r, cy - r, cy + r) if self.amplitude != 0 else None

    def reach(self, c):
        return float(np.hypot(*(np.asarray(self.center) - c))) + _GAUSS_CUTOFF * self.width

    def total(self):
        return self.amplitude * 2 * math.pi * self.width ** 2

    def atoms(self):
        return []


@dataclass(frozen=True)
class PointVortices:
    """Atoms ``((x, y), circulation)``; they carry no density."""

    vortices: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "vortices", tuple((_pt(p), float(g)) for p, g in self.vortices))

    def evaluate(self, p, domain: Domain):
        return np.zeros(np.asarray(p).shape[:-1])

    def bbox(self):
        return None

    def reach(self, c):
        if not self.vortices:
            return 0.0
        return max(float(np.hypot(*(np.asarray(p) - c))) for p, _ in self.vortices)

    def total(self):
        return sum(g for _, g in self.vortices)

    def atoms(self):
        return [v for v in self.vortices if v[1] != 0.0]


@dataclass(frozen=True)
class LogSpike:
    """``amplitude * max(ln(cutoff / |x - c|), 0)``: unbounded but in every ``L^p``."""

    center: tuple = (0.0, 0.0)
    cutoff: float = 0.5
    amplitude: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "center", _pt(self.center))
        if not self.cutoff > 0:
            raise ValueError("log spike cutoff must be positive")

    def evaluate(self, p, domain: Domain):
        d = domain.displacement(p, self.center)
        r = np.sqrt(np.einsum("...i,...i->...", d, d))
        with np.errstate(divide="ignore"):
            v = np.log(self.cutoff / r)
        # the centre itself is a null set; give it the value of a tiny neighbourhood
        v = np.where(r == 0, np.log(self.cutoff / 1e-300), v)
        return self.amplitude * np.maximum(v, 0.0)

    def bbox(self):
        cx, cy = self.center
        r = self.cutoff
        return (cx - r, cx + r, cy - r, cy + r) if self.amplitude != 0 else None

    def reach(self, c):
        return float(np.hypot(*(np.asarray(self.center) - c))) + self.cutoff

    def total(self):
        return self.amplitude * math.pi * self.cutoff ** 2 / 2

    def atoms(self):
        return []


@dataclass(frozen=True)
class Composite:
    parts: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "parts", tuple(self.parts))

    def evaluate(self, p, domain: Domain):
        out = np.zeros(np.asarray(p).shape[:-1])
        for part in self.parts:
            out = out + part.evaluate(p, domain)
        return out

    def bbox(self):
        boxes = [b for b in (part.bbox() for part in self.parts) if b is not None]
        if not boxes:
            return None
        b = np.array(boxes)
        return (b[:, 0].min(), b[:, 1].max(), b[:, 2].min(), b[:, 3].max())

    def reach(self, c):
        return max((part.reach(c) for part in self.parts), default=0.0)

    def total(self):
        return sum(part.total() for part in self.parts)

    def atoms(self):
        return [a for part in self.parts for a in part.atoms()]


def _bump_rule(n_r: int = 12, n_theta: int = 32):
    """Nodes and weights of the unit bump ``exp(-1/(1-|z|^2))``, normalised to 1."""
    x, w = np.polynomial.legendre.leggauss(n_r)
    rho = 0.5 * (x + 1)
    wr = 0.5 * w
    th = 2 * np.pi * (np.arange(n_theta) + 0.5) / n_theta
    bump = np.exp(-1.0 / (1.0 - rho ** 2))
    wt = (bump * rho * wr)[:, None] * np.full(n_theta, 2 * np.pi / n_theta)[None, :]
    nodes = np.stack([rho[:, None] * np.cos(th)[None, :], rho[:, None] * np.sin(th)[None, :]], axis=-1)
    wt = wt / wt.sum()
    return nodes.reshape(-1, 2), wt.ravel()


@dataclass(frozen=True)
class Mollified:
    """``base * phi_eps`` with ``phi_eps(z) = eps^-2 phi(z / eps)`` for a unit-mass bump ``phi``."""

    base: object = field(default_factory=Composite)
    eps: float = 0.1

    def __post_init__(self):
        if not self.eps > 0:
            raise ValueError("mollification scale must be positive")
        if self.base.atoms():
            raise ValueError("point vortices cannot be mollified; use a Gaussian blob")

    def evaluate(self, p, domain: Domain):
        p = np.asarray(p, dtype=float)
        nodes, w = _bump_rule()
        shape = p.shape[:-1]
        flat = p.reshape(-1, 2)
        out = np.zeros(flat.shape[0])
        for z, wz in zip(nodes, w):
            out += wz * self.base.evaluate(flat - self.eps * z, domain)
        return out.reshape(shape)

    def bbox(self):
        b = self.base.bbox()
        if b is None:
            return None
        e = self.eps
        return (b[0] - e, b[1] + e, b[2] - e, b[3] + e)

    def reach(self, c):
        return self.base.reach(c) + self.eps

    def total(self):
        return self.base.total()

    def atoms(self):
        return []


@dataclass(frozen=True)
class VorticitySpec:
    """A named initial vorticity on a domain, with optional zero-weight tracer labels.

    On the torus the field is compensated by the uniform background
    ``-total / period^2`` so that the total circulation vanishes.
    """

    kind: object = field(default_factory=Composite)
    domain: Domain = field(default_factory=Domain.plane)
    tracers: Optional[tuple] = None
    name: str = "custom"

    def __post_init__(self):
        if self.tracers is not None:
            object.__setattr__(self, "tracers", tuple(_pt(t) for t in self.tracers))
        if self.domain.kind == "disk":
            for pos, _ in self.kind.atoms():
                if math.hypot(*pos) >= 1.0:
                    raise ValueError("point vortex outside the unit disk")

    @property
    def background(self) -> float:
        if self.domain.kind != "torus":
            return 0.0
        return -self.kind.total() / self.domain.period ** 2

    @property
    def is_zero(self) -> bool:
        return self.kind.bbox() is None and not self.kind.atoms()

    @property
    def atoms_only(self) -> bool:
        return self.kind.bbox() is None and bool(self.kind.atoms())

    def evaluate(self, p):
        p = np.asarray(p, dtype=float)
        return self.kind.evaluate(p, self.domain) + self.background

    def reach(self, center=(0.0, 0.0)) -> float:
        c = np.asarray(center, dtype=float)
        if self.domain.kind == "torus":
            return self.domain.period / math.sqrt(2.0)
        r = self.kind.reach(c)
        if self.domain.kind == "disk":
            r = min(r, 1.0 + float(np.hypot(*c)))
        return r

    def sample_box(self):
        """Bounding box of the density support intersected with the domain."""
        if self.domain.kind == "torus":
            h = self.domain.period / 2
            return (-h, h, -h, h)
        b = self.kind.bbox()
        if b is None:
            return None
        if self.domain.kind == "disk":
            b = (max(b[0], -1.0), min(b[1], 1.0), max(b[2], -1.0), min(b[3], 1.0))
            if b[0] >= b[1] or b[2] >= b[3]:
                return None
        return b

    def norm_quadrature(self, n: int = 400):
        """Midpoint quadrature ``(points, weights, values)`` of the density.

        Atoms carry no density and are ignored.  An empty support returns a
        single zero sample of unit weight so that norms come out as zero.
        """
        box = self.sample_box()
        if box is None:
            return np.zeros((1, 2)), np.ones(1), np.zeros(1)
        x0, x1, y0, y1 = box
        hx = (x1 - x0) / n
        hy = (y1 - y0) / n
        xs = x0 + (np.arange(n) + 0.5) * hx
        ys = y0 + (np.arange(n) + 0.5) * hy
        X, Y = np.meshgrid(xs, ys, indexing="ij")
        P = np.stack([X.ravel(), Y.ravel()], axis=1)
        if self.domain.kind == "disk":
            P = P[np.einsum("ij,ij->i", P, P) < 1.0]
        return P, np.full(P.shape[0], hx * hy), self.evaluate(P)

    def norms(self, p: float = 4.0, theta=None, n: int = 400) -> dict:
        """``L^1``, ``L^p``, ``L^inf`` and (when ``theta`` is given) Yudovich norms."""
        from .modulus import lp_norms, ynorm
        P, w, v = self.norm_quadrature(n)
        out = {"L1": float(np.sum(w * np.abs(v))), f"L{p:g}": float(lp_norms(v, w, [p])[0]),
               "Linf": float(np.max(np.abs(v)))}
        out["Lp"] = out[f"L{p:g}"]
        if theta is not None:
            out["Y"] = ynorm(v, w, theta) if np.any(v != 0) else 0.0
        return out

    def with_kind(self, kind, name=None) -> "VorticitySpec":
        return VorticitySpec(kind, self.domain, self.tracers, name or self.name)

    def with_tracers(self, tracers) -> "VorticitySpec":
        return VorticitySpec(self.kind, self.domain, tuple(map(tuple, np.asarray(tracers))), self.name)
