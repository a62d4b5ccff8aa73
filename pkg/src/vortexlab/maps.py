"""Area-preserving maps: the twist family used for domain comparison and the
rearrangement library used by the pointwise scaling audit."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "TwistMap",
    "TwistJacobianError",
    "Rearrangement",
    "Identity",
    "Rotation",
    "Translation",
    "default_rearrangements",
    "twist_norms",
]


class TwistJacobianError(RuntimeError):
    pass


@dataclass(frozen=True)
class TwistMap:
    """``Phi(r, theta) = (r, theta + eps g(r))`` on the disk or plane, or the
    shear ``Phi(x1, x2) = (x1 + eps s(x2), x2)`` on the torus.

    The radial profile is ``g(r) = (1 - (r/r0)^2)^4`` for ``r < r0`` and 0
    beyond, so ``g`` is C^3 and vanishes near the unit circle when
    ``r0 < 1``.  The shear profile is ``s(x2) = (L / 2 pi) sin(2 pi x2 / L)``.
    """

    kind: str = "radial"
    epsilon: float = 0.0
    r0: float = 0.9
    period: float = 1.0

    def __post_init__(self):
        if self.kind not in ("radial", "shear"):
            raise ValueError("twist kind must be 'radial' or 'shear'")
        if self.kind == "radial" and not 0 < self.r0:
            raise ValueError("r0 must be positive")
        if self.period <= 0:
            raise ValueError("period must be positive")

    @property
    def name(self) -> str:
        return f"{self.kind}-twist"

    def with_epsilon(self, eps: float) -> "TwistMap":
        return TwistMap(self.kind, float(eps), self.r0, self.period)

    def check_domain(self, domain) -> None:
        if self.kind == "radial" and domain.kind not in ("disk", "plane"):
            raise ValueError("radial twist needs a disk or plane domain")
        if self.kind == "shear" and domain.kind != "torus":
            raise ValueError("shear twist needs a torus domain")
        if self.kind == "radial" and domain.kind == "disk" and self.r0 >= 1.0:
            raise ValueError("radial twist on the disk needs r0 < 1 so that g vanishes near the boundary")
        if self.kind == "shear" and abs(self.period - domain.period) > 1e-15:
            raise ValueError("shear period differs from the torus period")

    # profile and derivatives
    def _g(self, r):
        s = np.clip(1.0 - (r / self.r0) ** 2, 0.0, None)
        return s ** 4

    def _s(self, x2):
        k = 2 * np.pi / self.period
        return np.sin(k * x2) / k

    def _ds(self, x2):
        return np.cos(2 * np.pi * x2 / self.period)

    def _rotate(self, p, sign):
        p = np.asarray(p, dtype=float)
        r = np.hypot(p[..., 0], p[..., 1])
        phi = sign * self.epsilon * self._g(r)
        c, s = np.cos(phi), np.sin(phi)
        return np.stack([c * p[..., 0] - s * p[..., 1], s * p[..., 0] + c * p[..., 1]], axis=-1)

    def forward(self, p):
        p = np.asarray(p, dtype=float)
        if self.epsilon == 0.0:
            return p.copy()
        if self.kind == "radial":
            return self._rotate(p, 1.0)
        out = p.copy()
        out[..., 0] = p[..., 0] + self.epsilon * self._s(p[..., 1])
        return out

    def inverse(self, p):
        p = np.asarray(p, dtype=float)
        if self.epsilon == 0.0:
            return p.copy()
        if self.kind == "radial":
            # the radius is invariant, so the inverse rotates back by the same angle
            return self._rotate(p, -1.0)
        out = p.copy()
        out[..., 0] = p[..., 0] - self.epsilon * self._s(p[..., 1])
        return out

    def jacobian(self, p):
        """Analytic ``D Phi`` with shape ``p.shape[:-1] + (2, 2)``."""
        p = np.asarray(p, dtype=float)
        J = np.zeros(p.shape[:-1] + (2, 2))
        if self.kind == "shear":
            J[..., 0, 0] = 1.0
            J[..., 1, 1] = 1.0
            J[..., 0, 1] = self.epsilon * self._ds(p[..., 1])
            return J
        x, y = p[..., 0], p[..., 1]
        r = np.hypot(x, y)
        phi = self.epsilon * self._g(r)
        c, s = np.cos(phi), np.sin(phi)
        # grad(phi) = eps g'(r) p / r; g'(r)/r is smooth at the origin
        dg_over_r = -8.0 / self.r0 ** 2 * np.clip(1.0 - (r / self.r0) ** 2, 0.0, None) ** 3
        gx = self.epsilon * dg_over_r * x
        gy = self.epsilon * dg_over_r * y
        px = c * x - s * y
        py = s * x + c * y
        # D(R_phi p) = R_phi + (J R_phi p) grad(phi)^T with J the quarter turn
        J[..., 0, 0] = c - py * gx
        J[..., 0, 1] = -s - py * gy
        J[..., 1, 0] = s + px * gx
        J[..., 1, 1] = c + px * gy
        return J

    def check_jacobian(self, domain, n: int = 1000, seed: int = 0, tol: float = 1e-10) -> float:
        """Max ``|det D Phi - 1|`` at random points; raises when above ``tol``."""
        rng = np.random.default_rng(seed)
        if domain.kind == "disk":
            r = np.sqrt(rng.random(n))
            th = 2 * np.pi * rng.random(n)
            p = np.stack([r * np.cos(th), r * np.sin(th)], axis=1)
        elif domain.kind == "torus":
            p = (rng.random((n, 2)) - 0.5) * domain.period
        else:
            p = 2 * rng.random((n, 2)) - 1
        J = self.jacobian(p)
        err = float(np.max(np.abs(np.linalg.det(J) - 1.0)))
        if err > tol:
            raise TwistJacobianError(f"twist Jacobian determinant deviates from 1 by {err:.3e}")
        return err

    # the rearrangement interface
    @property
    def shift_bound(self) -> float:
        return abs(self.epsilon) * self.period / (2 * np.pi) if self.kind == "shear" else 0.0


def twist_norms(twist: TwistMap, domain, n: int = 256) -> dict:
    """Finite-difference norms of ``Phi - id`` on an ``n x n`` grid.

    Returns ``C0`` (``sup |Phi - id|``), ``grad`` (``sup |D Phi - I|``),
    ``hess`` (``sup |D^2 Phi|``), ``C1 = max(grad, hess)`` for
    ``||D Phi - I||_{C^1}`` and ``C2 = max(C0, grad, hess)`` for
    ``||Phi - id||_{C^2}``.  Entries are measured in the max-abs norm.
    """
    if domain.kind == "torus":
        L = domain.period
        ax = (np.arange(n) + 0.5) / n * L - L / 2
    else:
        ax = np.linspace(-1.0, 1.0, n)
    h = ax[1] - ax[0]
    X, Y = np.meshgrid(ax, ax, indexing="ij")
    P = np.stack([X, Y], axis=-1)
    D = twist.forward(P) - P
    if domain.kind == "disk":
        mask = np.hypot(X, Y) <= 1.0
    else:
        mask = np.ones(X.shape, dtype=bool)
    grads = [np.gradient(D[..., c], h, h, edge_order=2) for c in range(2)]
    hess = [np.gradient(g, h, h, edge_order=2) for gc in grads for g in gc]
    c0 = float(np.max(np.abs(D[mask])))
    g1 = float(max(np.max(np.abs(g[mask])) for gc in grads for g in gc))
    g2 = float(max(np.max(np.abs(hh[mask])) for hc in hess for hh in hc))
    return {"C0": c0, "grad": g1, "hess": g2, "C1": max(g1, g2), "C2": max(c0, g1, g2)}


@dataclass(frozen=True)
class Rearrangement:
    name: str = "identity"

    @property
    def shift_bound(self) -> float:
        """Upper bound on ``|R(p) - p|`` for maps that move the origin; 0 otherwise."""
        return 0.0

    def forward(self, p):
        return np.asarray(p, dtype=float).copy()

    def inverse(self, p):
        return np.asarray(p, dtype=float).copy()


class Identity(Rearrangement):
    pass


@dataclass(frozen=True)
class Rotation(Rearrangement):
    name: str = "rotation"
    angle: float = 0.7

    def _rot(self, p, a):
        p = np.asarray(p, dtype=float)
        c, s = math.cos(a), math.sin(a)
        return np.stack([c * p[..., 0] - s * p[..., 1], s * p[..., 0] + c * p[..., 1]], axis=-1)

    def forward(self, p):
        return self._rot(p, self.angle)

    def inverse(self, p):
        return self._rot(p, -self.angle)


@dataclass(frozen=True)
class Translation(Rearrangement):
    name: str = "translation"
    shift: tuple = (0.3, -0.2)
    period: float | None = None

    @property
    def shift_bound(self) -> float:
        return float(np.hypot(*self.shift))

    def _move(self, p, sign):
        q = np.asarray(p, dtype=float) + sign * np.asarray(self.shift)
        if self.period is not None:
            q = q - self.period * np.floor(q / self.period + 0.5)
        return q

    def forward(self, p):
        return self._move(p, 1.0)

    def inverse(self, p):
        return self._move(p, -1.0)


@dataclass(frozen=True)
class _TwistRearrangement(Rearrangement):
    twist: TwistMap = TwistMap()

    @property
    def shift_bound(self) -> float:
        return self.twist.shift_bound

    def forward(self, p):
        return self.twist.forward(p)

    def inverse(self, p):
        q = self.twist.inverse(p)
        if self.twist.kind == "shear":
            L = self.twist.period
            q = q - L * np.floor(q / L + 0.5)
        return q


def default_rearrangements(domain) -> list:
    """Identity, a rotation and a twist on the disk; translations are added on
    the plane and a shear replaces the rotation on the torus."""
    out: list = [Identity("identity")]
    if domain.kind == "disk":
        out.append(Rotation())
        out.append(_TwistRearrangement("radial-twist", twist=TwistMap("radial", 2.0, 0.9)))
    elif domain.kind == "plane":
        out.append(Rotation())
        out.append(_TwistRearrangement("radial-twist", twist=TwistMap("radial", 2.0, 0.9)))
        out.append(Translation())
    else:
        L = domain.period
        out.append(Translation(shift=(0.3 * L, -0.2 * L), period=L))
        out.append(_TwistRearrangement("shear", twist=TwistMap("shear", 0.5, period=L)))
    return out
