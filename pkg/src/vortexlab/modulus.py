"""Growth profiles, the generalised Yudovich norm and the induced moduli.

For a growth profile ``Theta`` and knee constant ``c0``:

* ``mu(r) = r ln(1/r) Theta(ln(1/r))`` for ``0 < r <= 1/c0`` and the constant
  ``mu_knee = ln(c0) Theta(ln c0) / c0`` beyond the knee;
* ``M(r) = int_r^{r_max} ds / mu(s)`` with ``r_max = mu(1/c0) = mu_knee``;
* ``nu(r) = exp(-M(r))``.

On the singular branch the substitution ``u = ln(1/s)`` turns ``ds/mu(s)``
into ``du / (u Theta(u))``; a second substitution ``v = ln u`` leaves the
smooth integrand ``1 / Theta(e^v)``.  On ``[1/c0, r_max]`` the integrand is
constant and ``M`` is linear.
"""
from __future__ import annotations

import functools
import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy import integrate, interpolate, optimize, special

C0_DEFAULT = 1000.0
TABLE_NODES = 2048
TABLE_R_MIN = 1e-16

__all__ = [
    "ThetaProfile",
    "NonOsgoodWarning",
    "ModulusDomainError",
    "ModulusKit",
    "modulus_kit",
    "mu",
    "big_m",
    "nu",
    "osgood_envelope",
    "ynorm",
    "default_p_grid",
    "big_m_closed_form_constant",
    "PointwiseAudit",
    "pointwise_scaling_audit",
    "negative_control",
]


class NonOsgoodWarning(UserWarning):
    """Growth profile with a finite ``int dp / (p Theta(p))``."""


class ModulusDomainError(ValueError):
    pass


@dataclass(frozen=True)
class ThetaProfile:
    kind: str = "constant"
    A: float = 1.0
    alpha: float = 1.0
    c0: float = C0_DEFAULT

    def __post_init__(self):
        if self.kind not in ("constant", "powerlog", "linear"):
            raise ValueError(f"unknown theta kind {self.kind!r}")
        if not self.c0 > math.e:
            raise ValueError("c0 must exceed e so that ln(c0) > 1")
        if self.kind == "constant" and not self.A > 0:
            raise ValueError("constant theta needs A > 0")
        if self.kind == "powerlog" and not self.alpha >= 0:
            raise ValueError("powerlog theta needs alpha >= 0")

    @classmethod
    def constant(cls, A: float = 1.0, c0: float = C0_DEFAULT):
        return cls("constant", A=A, c0=c0)

    @classmethod
    def powerlog(cls, alpha: float, c0: float = C0_DEFAULT):
        return cls("powerlog", alpha=alpha, c0=c0)

    @classmethod
    def linear(cls, c0: float = C0_DEFAULT):
        return cls("linear", c0=c0)

    @property
    def label(self) -> str:
        if self.kind == "constant":
            return f"constant(A={self.A:g})"
        if self.kind == "powerlog":
            return f"powerlog(alpha={self.alpha:g})"
        return "linear"

    @property
    def is_osgood(self) -> bool:
        if self.kind == "linear":
            return False
        if self.kind == "powerlog":
            return self.alpha <= 1.0
        return True

    @property
    def p_min(self) -> float:
        return math.log(self.c0)

    def __call__(self, p):
        p = np.asarray(p, dtype=float)
        if self.kind == "constant":
            return np.full_like(p, self.A)
        if self.kind == "powerlog":
            return np.log(p) ** self.alpha
        return p.copy()

    def inv_theta_exp(self, v):
        """``1 / Theta(e^v)``, the integrand of ``M`` in ``v = ln ln(1/s)``."""
        if self.kind == "constant":
            return 1.0 / self.A
        if self.kind == "powerlog":
            return v ** (-self.alpha)
        return math.exp(-v)

    def to_dict(self) -> dict:
        return {"kind": self.kind, "A": self.A, "alpha": self.alpha, "c0": self.c0}


def _mu_raw(r, theta: ThetaProfile):
    r = np.asarray(r, dtype=float)
    knee = 1.0 / theta.c0
    mu_knee = knee * math.log(theta.c0) * float(theta(math.log(theta.c0)))
    out = np.full(r.shape, mu_knee)
    sing = (r > 0) & (r < knee)
    if np.any(sing):
        L = -np.log(r[sing])
        out[sing] = r[sing] * L * theta(L)
    out[r <= 0] = 0.0
    return out


def mu(r, theta: ThetaProfile = ThetaProfile()):
    """The modulus induced by ``theta``; vectorised, 0 at ``r = 0``."""
    r_arr = np.asarray(r, dtype=float)
    if np.any(r_arr < 0) or np.any(np.isnan(r_arr)):
        raise ValueError("mu needs r >= 0")
    out = _mu_raw(r_arr, theta)
    return float(out) if out.ndim == 0 else out


def _quad_v(theta: ThetaProfile, v0: float, v1: float) -> float:
    """``int_{v0}^{v1} dv / Theta(e^v)`` by adaptive quadrature."""
    if v1 <= v0:
        return 0.0
    if math.isinf(v1):
        val, _ = integrate.quad(theta.inv_theta_exp, v0, np.inf, epsabs=0.0, epsrel=1e-13, limit=400)
        return val
    val, _ = integrate.quad(theta.inv_theta_exp, v0, v1, epsabs=0.0, epsrel=1e-13, limit=400)
    return val


def big_m_closed_form_constant(r, c0: float = C0_DEFAULT, A: float = 1.0):
    """Closed form of ``M`` for ``Theta == A`` and ``r <= 1/c0 <= r_max``."""
    r = np.asarray(r, dtype=float)
    L0 = math.log(c0)
    return (np.log(np.log(1.0 / r)) - math.log(L0)) / A + 1.0 - 1.0 / (L0 * A)


@dataclass(frozen=True)
class ModulusKit:
    """Tabulated ``M`` with its inverse for one growth profile.

    The singular branch ``[1e-16, min(1/c0, r_max)]`` is tabulated on
    ``TABLE_NODES`` log-spaced radii and interpolated monotonically in
    ``ln ln(1/r)``; the constant branch is handled in closed form.  The
    kit is immutable and safe to share across threads.
    """

    theta: ThetaProfile
    r_max: float
    mu_knee: float
    knee: float
    m_knee: float
    m_inf: float
    r_nodes: np.ndarray = field(repr=False)
    m_nodes: np.ndarray = field(repr=False)
    _spline: object = field(repr=False)

    @property
    def osgood(self) -> bool:
        return self.theta.is_osgood

    @property
    def r_table_min(self) -> float:
        return float(self.r_nodes[0])

    @property
    def branch_split(self) -> float:
        """Largest radius on the singular branch within the domain of ``M``."""
        return min(self.knee, self.r_max)

    # -- exact evaluation --------------------------------------------------
    def big_m_quad(self, r: float) -> float:
        r = float(r)
        if r >= self.branch_split:
            return (self.r_max - r) / self.mu_knee
        v_hi = math.log(math.log(1.0 / r))
        v_lo = math.log(math.log(1.0 / self.branch_split))
        return self.m_knee + _quad_v(self.theta, v_lo, v_hi)

    # -- tabulated evaluation ----------------------------------------------
    def _check(self, r, extend):
        if np.any(np.isnan(r)) or np.any(r <= 0):
            raise ModulusDomainError("M is defined for r > 0")
        if not extend and np.any(r > self.r_max * (1 + 1e-14)):
            raise ModulusDomainError(f"M is defined on (0, {self.r_max:.6g}]")

    def big_m(self, r, extend: bool = False):
        """``M(r)``; ``extend`` continues the linear branch beyond ``r_max`` (negative values)."""
        r = np.asarray(r, dtype=float)
        self._check(r, extend)
        out = np.empty(r.shape)
        lin = r >= self.branch_split
        out[lin] = (self.r_max - r[lin]) / self.mu_knee
        tab = ~lin & (r >= self.r_nodes[0])
        if np.any(tab):
            out[tab] = self._spline(np.log(np.log(1.0 / r[tab])))
        deep = ~lin & ~tab
        if np.any(deep):
            out[deep] = [self.big_m_quad(x) for x in r[deep]]
        return float(out) if out.ndim == 0 else out

    def nu(self, r, extend: bool = False):
        return np.exp(-self.big_m(r, extend))

    def big_m_inv(self, m, extend: bool = False):
        """Inverse of ``M``.  Values ``m <= 0`` map to ``r_max`` unless ``extend``."""
        m = np.asarray(m, dtype=float)
        if np.any(np.isnan(m)):
            raise ModulusDomainError("M^{-1} of NaN")
        out = np.empty(m.shape)
        lin = m <= self.m_knee
        mm = m[lin] if extend else np.maximum(m[lin], 0.0)
        out[lin] = self.r_max - mm * self.mu_knee
        tab = ~lin & (m <= self.m_nodes[0])
        if np.any(tab):
            out[tab] = self._invert_table(m[tab])
        deep = ~lin & ~tab
        if np.any(deep):
            out[deep] = [self._invert_quad(float(x)) for x in m[deep]]
        return float(out) if out.ndim == 0 else out

    def _invert_table(self, m):
        # nodes are stored with r increasing, so M decreases along the table
        v_nodes = np.log(np.log(1.0 / self.r_nodes))
        j = np.searchsorted(-self.m_nodes, -m, side="left")
        j = np.clip(j, 1, len(v_nodes) - 1)
        lo = v_nodes[j]      # larger r, smaller M
        hi = v_nodes[j - 1]  # smaller r, larger M
        for _ in range(60):
            mid = 0.5 * (lo + hi)
            above = self._spline(mid) > m
            hi = np.where(above, mid, hi)
            lo = np.where(above, lo, mid)
        v = 0.5 * (lo + hi)
        return np.exp(-np.exp(v))

    def _invert_quad(self, m: float) -> float:
        if m >= self.m_inf:
            return 0.0
        base = float(self.m_nodes[0])
        v0 = math.log(math.log(1.0 / self.r_nodes[0]))
        f = lambda v: base + _quad_v(self.theta, v0, v) - m
        hi = v0 + 1.0
        while f(hi) < 0:
            hi = v0 + 2 * (hi - v0)
            if hi > 700:
                return 0.0
        v = optimize.brentq(f, v0, hi, xtol=1e-15, rtol=1e-15)
        return math.exp(-math.exp(v))

    def envelope(self, c, gamma_bar, t, extend: bool = False):
        """Osgood envelope ``M^{-1}(M(c) - gamma_bar t)``, vectorised over ``c`` and ``t``."""
        c = np.asarray(c, dtype=float)
        t = np.asarray(t, dtype=float)
        if np.any(c < 0) or np.any(t < 0) or gamma_bar < 0:
            raise ValueError("envelope needs c, t, gamma_bar >= 0")
        cb, tb = np.broadcast_arrays(c, t)
        out = np.zeros(cb.shape)
        pos = cb > 0
        if np.any(pos):
            mc = self.big_m(cb[pos], extend=extend)
            out[pos] = self.big_m_inv(mc - gamma_bar * tb[pos], extend=extend)
        return float(out) if out.ndim == 0 else out


@functools.lru_cache(maxsize=32)
def modulus_kit(theta: ThetaProfile = ThetaProfile()) -> ModulusKit:
    if not theta.is_osgood:
        warnings.warn(f"theta {theta.label} violates the Osgood growth condition; "
                      "M stays bounded as r -> 0", NonOsgoodWarning, stacklevel=2)
    c0 = theta.c0
    knee = 1.0 / c0
    mu_knee = float(_mu_raw(knee, theta))
    r_max = mu_knee
    split = min(knee, r_max)
    m_knee = (r_max - split) / mu_knee
    r_nodes = np.geomspace(TABLE_R_MIN, split, TABLE_NODES)
    v_nodes = np.log(np.log(1.0 / r_nodes))
    # cumulative quadrature between neighbouring nodes, from the split downwards
    pieces = np.array([_quad_v(theta, v_nodes[i + 1], v_nodes[i]) for i in range(TABLE_NODES - 1)])
    m_nodes = np.empty(TABLE_NODES)
    m_nodes[-1] = m_knee
    m_nodes[:-1] = m_knee + np.cumsum(pieces[::-1])[::-1]
    spline = interpolate.PchipInterpolator(v_nodes[::-1], m_nodes[::-1], extrapolate=True)
    if theta.is_osgood:
        m_inf = math.inf
    else:
        m_inf = m_knee + _quad_v(theta, math.log(math.log(1.0 / split)), math.inf)
    r_nodes.setflags(write=False)
    m_nodes.setflags(write=False)
    return ModulusKit(theta, r_max, mu_knee, knee, m_knee, m_inf, r_nodes, m_nodes, spline)


def big_m(r, theta: ThetaProfile = ThetaProfile(), method: str = "quad", extend: bool = False):
    """``M(r)`` on ``(0, r_max]``; ``method`` is ``"quad"`` (adaptive quadrature) or ``"table"``."""
    kit = modulus_kit(theta)
    if method == "table":
        return kit.big_m(r, extend)
    if method != "quad":
        raise ValueError("method must be 'quad' or 'table'")
    r_arr = np.asarray(r, dtype=float)
    kit._check(r_arr, extend)
    out = np.vectorize(kit.big_m_quad, otypes=[float])(r_arr)
    return float(out) if out.ndim == 0 else out


def nu(r, theta: ThetaProfile = ThetaProfile(), method: str = "quad", extend: bool = False):
    return np.exp(-big_m(r, theta, method, extend))


def osgood_envelope(c, gamma_bar: float, t, theta: ThetaProfile = ThetaProfile(),
                    extend: bool = False):
    """Largest ``rho(t)`` compatible with ``M(c) - M(rho(t)) <= gamma_bar t``.

    ``c = 0`` gives 0.  Once ``M(c) - gamma_bar t`` drops below zero the
    envelope saturates at ``r_max``; ``extend`` instead continues the linear
    branch so that envelopes starting above ``r_max`` stay meaningful.
    """
    return modulus_kit(theta).envelope(c, gamma_bar, t, extend)


# --------------------------------------------------------------------------
# Yudovich norm


def default_p_grid(theta: ThetaProfile = ThetaProfile(), n: int = 60, p_max: float = 300.0):
    return np.geomspace(theta.p_min, p_max, n + 1)[1:]


def lp_norms(values, weights, p_grid):
    """``(sum w |v|^p)^(1/p)`` for every ``p``, evaluated in log space."""
    v = np.abs(np.asarray(values, dtype=float)).ravel()
    w = np.asarray(weights, dtype=float).ravel()
    p = np.atleast_1d(np.asarray(p_grid, dtype=float))
    nz = v > 0
    if not np.any(nz):
        return np.zeros(p.shape)
    lv = np.log(v[nz])
    lw = np.log(w[nz])
    return np.exp(special.logsumexp(p[:, None] * lv[None, :] + lw[None, :], axis=1) / p)


def ynorm(values, weights, theta: ThetaProfile = ThetaProfile(), p_grid=None, area=None) -> float:
    """``max_p ||omega||_{L^p} / Theta(p)`` over ``p_grid``.

    ``values``/``weights`` are quadrature samples of the vorticity.  When
    ``area`` is given the weights must add up to it.
    """
    v = np.asarray(values, dtype=float).ravel()
    w = np.asarray(weights, dtype=float).ravel()
    if v.size == 0:
        raise ValueError("ynorm of an empty sample")
    if v.shape != w.shape:
        raise ValueError("values and weights differ in length")
    if np.any(w <= 0) or not np.all(np.isfinite(w)):
        raise ValueError("weights must be positive and finite")
    if area is not None and math.isfinite(area) and abs(w.sum() - area) > 1e-9 * area:
        raise ValueError(f"weights add up to {w.sum():.12g}, expected the area {area:.12g}")
    p = default_p_grid(theta) if p_grid is None else np.atleast_1d(np.asarray(p_grid, dtype=float))
    if p.size == 0:
        raise ValueError("p_grid is empty")
    if np.any(p <= theta.p_min):
        raise ValueError("p_grid entries must exceed ln(c0)")
    return float(np.max(lp_norms(v, w, p) / theta(p)))


# --------------------------------------------------------------------------
# scaling audit of the pointwise integral estimates


@dataclass
class PointwiseAudit:
    rows: list
    growth: dict
    passed: bool
    ynorm: float
    l1: float

    def to_csv(self, path, header_lines=()):
        from .io import write_csv
        cols = ["M", "integral", "bound", "ratio", "estimate", "rearrangement"]
        write_csv(path, cols, ([r[c] for c in cols] for r in self.rows), header_lines)


def _gauss_panels(a, b, panels, order=8):
    x, w = np.polynomial.legendre.leggauss(order)
    edges = np.linspace(a, b, panels + 1)
    mid = 0.5 * (edges[1:] + edges[:-1])
    half = 0.5 * (edges[1:] - edges[:-1])
    nodes = (mid[:, None] + half[:, None] * x[None, :]).ravel()
    weights = (half[:, None] * w[None, :]).ravel()
    return nodes, weights


def pointwise_scaling_audit(domain, omega, theta: ThetaProfile, m_list, rearrangements=None,
                            center=(0.0, 0.0), ell: float = 1.0, q: float = 2.0,
                            n_theta: int = 256, panels: int = 96, growth_bound: float = 20.0,
                            norm_resolution: int = 400) -> PointwiseAudit:
    """Quadrature of the four pointwise integrals against their bounds.

    With ``Z(b) = R(b) - center`` for a measure-preserving rearrangement
    ``R`` the integrals ``int omega(b) F(|Z(b)|) db`` equal
    ``int omega(R^{-1}(center + z)) F(|z|) dz``, evaluated in polar
    coordinates around ``center``.  The estimates are

    1. ``1{|Z|>=1} / |Z|`` against ``||omega||_1``,
    2. ``M 1{|Z|>=1} / |Z|^2`` against ``M ||omega||_q``,
    3. ``M 1{M<=|Z|<=1} / |Z|^2`` against ``mu(M/c0) ||omega||_Y``,
    4. ``1{|Z|<=ell M} / |Z|`` against ``mu(M/c0) ||omega||_Y``.

    A series passes when its largest ratio stays within ``growth_bound``
    times its ratio at the largest ``M`` (the first estimate must in addition
    have ratio <= 1).
    """
    from .maps import default_rearrangements

    m_arr = np.asarray(m_list, dtype=float)
    if m_arr.size == 0 or np.any((m_arr <= 0) | (m_arr >= 1)):
        raise ValueError("m_list entries must lie in (0, 1)")
    if np.any(np.diff(m_arr) >= 0):
        raise ValueError("m_list must be decreasing")
    if rearrangements is None:
        rearrangements = default_rearrangements(domain)
    center = np.asarray(center, dtype=float)

    qp, qw, qv = omega.norm_quadrature(norm_resolution)
    l1 = float(np.sum(qw * np.abs(qv)))
    lq = float(lp_norms(qv, qw, [q])[0])
    yn = ynorm(qv, qw, theta) if np.any(qv != 0) else 0.0

    th = 2 * np.pi * (np.arange(n_theta) + 0.5) / n_theta
    wth = 2 * np.pi / n_theta
    cs = np.stack([np.cos(th), np.sin(th)], axis=1)

    def polar_integral(R, f_of_rho, r_lo, r_hi, log_scale):
        """``int_{r_lo <= |z| <= r_hi} omega(R^{-1}(center + z)) f(|z|) dz``."""
        if r_hi <= r_lo:
            return 0.0
        if log_scale:
            s, ws = _gauss_panels(math.log(r_lo), math.log(r_hi), panels)
            rho = np.exp(s)
            jac = rho * rho * ws  # rho drho = rho^2 ds
        else:
            rho, ws = _gauss_panels(r_lo, r_hi, panels)
            jac = rho * ws
        pts = center + rho[:, None, None] * cs[None, :, :]
        flat = pts.reshape(-1, 2)
        inside = _in_domain(domain, flat, center)
        vals = np.zeros(flat.shape[0])
        if np.any(inside):
            vals[inside] = omega.evaluate(R.inverse(flat[inside]))
        vals = vals.reshape(rho.size, n_theta)
        return float(np.sum(vals.sum(axis=1) * wth * jac * f_of_rho(rho)))

    rows = []
    growth = {}
    passed = True
    for R in rearrangements:
        series = {k: [] for k in (1, 2, 3, 4)}
        reach = omega.reach(center) + R.shift_bound
        if domain.kind == "torus":
            reach = min(reach, domain.period / math.sqrt(2.0))
        for M in m_arr:
            big = max(reach, 1.0)
            i1 = polar_integral(R, lambda r: 1 / r, 1.0, big, True) if reach > 1 else 0.0
            i2 = polar_integral(R, lambda r: M / r ** 2, 1.0, big, True) if reach > 1 else 0.0
            i3 = polar_integral(R, lambda r: M / r ** 2, M, min(1.0, reach), True)
            i4 = polar_integral(R, lambda r: np.ones_like(r), 0.0, min(ell * M, reach), False)
            b34 = mu(M / theta.c0, theta) * yn
            for k, integral, bound in ((1, i1, l1), (2, i2, M * lq), (3, i3, b34), (4, i4, b34)):
                ratio = abs(integral) / bound if bound > 0 else 0.0
                series[k].append(ratio)
                rows.append({"M": float(M), "integral": integral, "bound": bound, "ratio": ratio,
                             "estimate": k, "rearrangement": R.name})
        for k, rs in series.items():
            rs = np.asarray(rs)
            g = float(rs.max() / rs[0]) if rs[0] > 0 else (0.0 if rs.max() == 0 else math.inf)
            growth[(R.name, k)] = g
            ok = g <= growth_bound
            if k == 1:
                ok = ok and bool(np.all(rs <= 1.0 + 1e-9))
            passed = passed and ok
    return PointwiseAudit(rows, growth, passed, yn, l1)


def _in_domain(domain, pts, center):
    if domain.kind == "disk":
        return np.linalg.norm(pts, axis=1) <= 1.0
    if domain.kind == "torus":
        half = 0.5 * domain.period
        z = pts - center
        return np.all((z >= -half) & (z < half), axis=1)
    return np.ones(pts.shape[0], dtype=bool)


# --------------------------------------------------------------------------
# negative control


def negative_control(theta: ThetaProfile, gamma_bar: float = 1.0, ks=range(4, 15)) -> dict:
    """``M(10^-k)`` and envelope saturation times ``M(c)/gamma_bar`` for shrinking ``c``.

    For an Osgood profile both grow without bound as ``c -> 0``; otherwise
    they converge and the envelope started at ``c -> 0`` leaves zero after
    a bounded time.
    """
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", NonOsgoodWarning)
        kit = modulus_kit(theta)
    ks = list(ks)
    r = np.array([10.0 ** (-k) for k in ks])
    m = np.array([kit.big_m_quad(x) for x in r])
    sat = m / gamma_bar
    return {"theta": theta.label, "osgood": theta.is_osgood, "k": ks, "r": r, "M": m,
            "M_limit": kit.m_inf, "saturation_time": sat,
            "saturation_time_limit": kit.m_inf / gamma_bar, "r_max": kit.r_max}
