"""Particle discretisation, the frozen-field solution operator, Picard iteration
and the Lagrangian diagnostics built on them."""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np
from scipy import stats

from . import _nbody
from .domain import DISK_PROJECTION_RADIUS, Domain, DomainError, KernelParams, torus_tables
from .vorticity import EmptySupportError, VorticitySpec

__all__ = [
    "ParticleFlow",
    "SolverConfig",
    "Trajectory",
    "PicardResult",
    "DomainExitError",
    "discretize",
    "velocity",
    "identity_trajectory",
    "apply_solution_operator",
    "picard_solve",
    "direct_solve",
    "advect_tracers",
    "trajectory_distance",
    "measure_distortion",
    "DistortionReport",
    "flow_modulus_probe",
    "FlowModulusReport",
    "hamiltonian",
]

PROJECTION_BUDGET = 1e-3
TORUS_CIRCULATION_TOL = 1e-12


class DomainExitError(RuntimeError):
    """Too many disk particles had to be projected back inside."""


@dataclass(frozen=True)
class ParticleFlow:
    labels: np.ndarray
    positions: np.ndarray
    weights: np.ndarray
    values: np.ndarray
    domain: Domain
    params: KernelParams
    time: float = 0.0
    spacing: float = 0.0
    n_tracers: int = 0
    name: str = ""
    n_atoms: int = 0

    def __post_init__(self):
        for a in ("labels", "positions", "weights", "values"):
            arr = np.array(getattr(self, a), dtype=float)
            arr.setflags(write=False)
            object.__setattr__(self, a, arr)
        n = self.labels.shape[0]
        if self.labels.shape != (n, 2) or self.positions.shape != (n, 2):
            raise ValueError("labels and positions must have shape (N, 2)")
        if self.weights.shape != (n,) or self.values.shape != (n,):
            raise ValueError("weights and values must have shape (N,)")

    @property
    def n(self) -> int:
        return self.labels.shape[0]

    @property
    def circulations(self) -> np.ndarray:
        return self.weights * self.values

    @property
    def source_index(self) -> np.ndarray:
        return np.flatnonzero(self.circulations != 0.0)

    @property
    def density_index(self) -> np.ndarray:
        """Sources that sample a density (not point-vortex atoms, not tracers)."""
        n_cells = self.n - self.n_tracers - self.n_atoms
        idx = np.arange(n_cells)
        return idx[self.circulations[:n_cells] != 0.0]

    def norms(self, theta=None) -> dict:
        """``L1`` of all sources and the Yudovich norm of the density part.

        ``"L1Y"`` is their sum, the norm used for envelope constants.
        """
        from .modulus import ThetaProfile, ynorm
        theta = theta or ThetaProfile()
        src = self.source_index
        l1 = math.fsum(np.abs(self.circulations[src]))
        dens = self.density_index
        y = ynorm(self.values[dens], self.weights[dens], theta) if dens.size else 0.0
        return {"L1": l1, "Y": y, "L1Y": l1 + y}

    @property
    def total_circulation(self) -> float:
        return math.fsum(self.circulations)

    @property
    def is_empty(self) -> bool:
        return self.source_index.size == 0

    def with_values(self, values) -> "ParticleFlow":
        return replace(self, values=np.asarray(values, dtype=float))

    def with_positions(self, positions, time=None) -> "ParticleFlow":
        return replace(self, positions=np.asarray(positions, dtype=float),
                       time=self.time if time is None else float(time))


@dataclass(frozen=True)
class SolverConfig:
    dt: float = 1e-3
    t_end: float = 1.0
    delta: Optional[float] = None
    picard_tol: float = 1e-8
    picard_max_iter: int = 30
    integrator: str = "rk4"
    seed: int = 0
    n_per_axis: int = 32

    def __post_init__(self):
        if not self.dt > 0:
            raise ValueError("dt must be positive")
        if not self.t_end >= 0:
            raise ValueError("t_end must be >= 0")
        if not self.picard_tol > 0:
            raise ValueError("picard_tol must be positive")
        if self.picard_max_iter < 1:
            raise ValueError("picard_max_iter must be >= 1")
        if self.integrator not in ("rk4", "euler"):
            raise ValueError("integrator must be 'rk4' or 'euler'")
        if self.delta is not None and not self.delta >= 0:
            raise ValueError("delta must be >= 0")
        if self.n_per_axis < 4:
            raise ValueError("n_per_axis must be >= 4")

    @property
    def n_steps(self) -> int:
        return max(1, int(round(self.t_end / self.dt))) if self.t_end > 0 else 0

    @property
    def step(self) -> float:
        return self.t_end / self.n_steps if self.n_steps else 0.0

    def times(self) -> np.ndarray:
        return np.linspace(0.0, self.t_end, self.n_steps + 1)


# --------------------------------------------------------------------------
# discretisation


def _grid_cells(spec: VorticitySpec, n: int):
    box = spec.sample_box()
    if box is None:
        return np.zeros((0, 2)), 0.0, 0.0
    x0, x1, y0, y1 = box
    hx = (x1 - x0) / n
    hy = (y1 - y0) / n
    xs = x0 + (np.arange(n) + 0.5) * hx
    ys = y0 + (np.arange(n) + 0.5) * hy
    X, Y = np.meshgrid(xs, ys, indexing="ij")
    P = np.stack([X.ravel(), Y.ravel()], axis=1)
    if spec.domain.kind == "disk":
        P = P[np.einsum("ij,ij->i", P, P) < 1.0]
    return P, hx * hy, max(hx, hy)


def _polar_cells(spec: VorticitySpec, n: int, center, angular_spacing):
    """Rings of cells about ``center``: exact ring areas split evenly in angle."""
    c = np.asarray(center, dtype=float)
    R = spec.kind.reach(c)
    if spec.domain.kind == "disk":
        R = min(R, 1.0 - float(np.hypot(*c)))
    if not R > 0:
        return np.zeros((0, 2)), np.zeros(0), 0.0
    h = R / n
    ha = h if angular_spacing is None else float(angular_spacing)
    pts, wts = [], []
    for k in range(n):
        r_in, r_out = k * h, (k + 1) * h
        r = 0.5 * (r_in + r_out)
        m = max(6, int(math.ceil(2 * math.pi * r / ha)))
        th = 2 * math.pi * (np.arange(m) + 0.5) / m
        pts.append(c + r * np.stack([np.cos(th), np.sin(th)], axis=1))
        wts.append(np.full(m, math.pi * (r_out ** 2 - r_in ** 2) / m))
    return np.concatenate(pts), np.concatenate(wts), h


def discretize(spec: VorticitySpec, n_per_axis: int, delta: Optional[float] = None,
               layout: str = "grid", center=(0.0, 0.0), angular_spacing: Optional[float] = None,
               allow_empty: bool = True) -> ParticleFlow:
    """Particles at cell centres carrying the sampled vorticity times the cell area.

    ``layout="grid"`` uses a uniform ``n_per_axis`` grid on the support's
    bounding box (the whole cell on the torus).  ``layout="polar"`` uses
    ``n_per_axis`` rings about ``center`` with arc spacing
    ``angular_spacing`` (default: the ring width); it keeps radially
    symmetric data symmetric to high accuracy.  Point vortices become
    unit-weight atoms.  Tracer labels of ``spec`` are appended with zero
    weight.  A zero field gives an empty flow, or an ``EmptySupportError``
    when ``allow_empty`` is false.
    """
    if n_per_axis < 4:
        raise ValueError("n_per_axis must be >= 4")
    dom = spec.domain
    if layout == "grid":
        P, area, h = _grid_cells(spec, n_per_axis)
        W = np.full(P.shape[0], area)
    elif layout == "polar":
        if dom.kind == "torus":
            raise ValueError("polar layout is not available on the torus")
        P, W, h = _polar_cells(spec, n_per_axis, center, angular_spacing)
    else:
        raise ValueError("layout must be 'grid' or 'polar'")
    V = spec.kind.evaluate(P, dom) if P.shape[0] else np.zeros(0)
    atoms = spec.kind.atoms()
    if dom.kind != "torus":
        keep = np.abs(V) >= 1e-14
        P, W, V = P[keep], W[keep], V[keep]
    else:
        # background compensation, enforced discretely
        total = math.fsum(W * V) + math.fsum(g for _, g in atoms)
        if P.shape[0] == 0:
            raise ValueError("torus discretisation needs background cells")
        V = V - total / math.fsum(W)
    AP = np.array([p for p, _ in atoms], dtype=float).reshape(-1, 2)
    AV = np.array([g for _, g in atoms], dtype=float)
    labels = np.concatenate([P, AP])
    weights = np.concatenate([W, np.ones(len(atoms))])
    values = np.concatenate([V, AV])
    if dom.kind == "torus":
        circ = math.fsum(weights * values)
        scale = max(1.0, math.fsum(np.abs(weights * values)))
        if abs(circ) > TORUS_CIRCULATION_TOL * scale:
            raise ValueError(f"torus total circulation {circ:.3e} is not zero")
    if labels.shape[0] == 0 and not allow_empty:
        raise EmptySupportError(f"spec {spec.name!r} has empty support")
    n_tr = 0
    if spec.tracers:
        T = np.asarray(spec.tracers, dtype=float).reshape(-1, 2)
        n_tr = T.shape[0]
        labels = np.concatenate([labels, T])
        weights = np.concatenate([weights, np.zeros(n_tr)])
        values = np.concatenate([values, spec.evaluate(T)])
    if delta is None:
        delta = 0.0 if (spec.atoms_only or spec.is_zero) else 0.5 * h
    return ParticleFlow(labels, labels.copy(), weights, values, dom, KernelParams(float(delta)),
                        0.0, float(h), n_tr, spec.name, len(atoms))


# --------------------------------------------------------------------------
# velocity evaluation


class _Field:
    """Binds a domain and blob scale to the compiled N-body sums."""

    def __init__(self, domain: Domain, params: KernelParams):
        self.domain = domain
        self.d2 = float(params.delta) ** 2
        if domain.kind == "torus":
            self.tab = torus_tables(domain)

    def __call__(self, targets, sources, gamma, own=None):
        tx = np.ascontiguousarray(targets[:, 0])
        ty = np.ascontiguousarray(targets[:, 1])
        out = np.zeros((targets.shape[0], 2))
        if gamma.size == 0 or targets.shape[0] == 0:
            return out
        sx = np.ascontiguousarray(sources[:, 0])
        sy = np.ascontiguousarray(sources[:, 1])
        g = np.ascontiguousarray(gamma, dtype=float)
        if own is None:
            own = np.full(targets.shape[0], -1, dtype=np.int64)
        kind = self.domain.kind
        if kind == "plane":
            _nbody.sum_plane(tx, ty, sx, sy, g, self.d2, own, out)
        elif kind == "disk":
            _nbody.sum_disk(tx, ty, sx, sy, g, self.d2, own, out)
        else:
            cu, cv, inv2s2 = self.tab
            _nbody.sum_torus(tx, ty, sx, sy, g, self.d2, float(self.domain.period), cu, cv, inv2s2, own, out)
        return out


def velocity(state: ParticleFlow, queries) -> np.ndarray:
    """``v(y) = sum_j w_j omega_j K(y, X_j)`` at the query points.

    With ``delta = 0`` a query sitting exactly on a particle skips that
    particle's singular self-term (on the disk its image term is kept).
    """
    q = np.atleast_2d(np.asarray(queries, dtype=float))
    if state.domain.kind == "disk" and np.any(np.einsum("ij,ij->i", q, q) > 1.0 + 1e-12):
        raise DomainError("query point outside the unit disk")
    src = state.source_index
    return _Field(state.domain, state.params)(q, state.positions[src], state.circulations[src])


def hamiltonian(state: ParticleFlow, positions=None) -> float:
    """Point-vortex energy ``-(1/4 pi) sum_{i != j} G_i G_j ln|X_i - X_j|`` on the plane."""
    if state.domain.kind != "plane":
        raise ValueError("the point-vortex Hamiltonian is implemented for the plane")
    src = state.source_index
    X = (state.positions if positions is None else np.asarray(positions))[src]
    g = state.circulations[src]
    d = np.sqrt(((X[:, None, :] - X[None, :, :]) ** 2).sum(-1))
    iu = np.triu_indices(len(g), 1)
    return float(-(1 / (2 * np.pi)) * np.sum(g[iu[0]] * g[iu[1]] * np.log(d[iu])))


# --------------------------------------------------------------------------
# trajectories


@dataclass
class Trajectory:
    """Positions of every label at every grid time, shape ``(steps + 1, N, 2)``."""

    times: np.ndarray
    positions: np.ndarray
    flow: ParticleFlow
    projections: int = 0
    meta: dict = field(default_factory=dict)

    @property
    def labels(self):
        return self.flow.labels

    @property
    def weights(self):
        return self.flow.weights

    @property
    def values(self):
        return self.flow.values

    @property
    def domain(self):
        return self.flow.domain

    @property
    def dt(self) -> float:
        return float(self.times[1] - self.times[0]) if self.times.size > 1 else 0.0

    def state(self, k: int = -1) -> ParticleFlow:
        return self.flow.with_positions(self.positions[k], self.times[k])

    def final(self) -> ParticleFlow:
        return self.state(-1)


class _Projector:
    def __init__(self, domain: Domain, n_labels: int, n_steps: int):
        self.active = domain.kind == "disk"
        self.count = 0
        self.budget = PROJECTION_BUDGET * max(1, n_labels) * max(1, n_steps)

    def __call__(self, X):
        if not self.active:
            return X
        r2 = np.einsum("ij,ij->i", X, X)
        bad = r2 > DISK_PROJECTION_RADIUS ** 2
        if np.any(bad):
            nb = int(np.count_nonzero(bad))
            self.count += nb
            X = X.copy()
            X[bad] *= (DISK_PROJECTION_RADIUS / np.sqrt(r2[bad]))[:, None]
            if self.count > self.budget:
                raise DomainExitError(
                    f"{self.count} disk projections exceed {PROJECTION_BUDGET:.1%} of particle-steps "
                    f"(budget {self.budget:.0f}); last step moved {nb} particles")
        return X


def identity_trajectory(flow: ParticleFlow, cfg: SolverConfig) -> Trajectory:
    times = cfg.times()
    pos = np.broadcast_to(flow.labels, (times.size,) + flow.labels.shape).copy()
    return Trajectory(times, pos, flow)


def _resolve(spec_or_flow, cfg: SolverConfig) -> ParticleFlow:
    if isinstance(spec_or_flow, ParticleFlow):
        flow = spec_or_flow
    else:
        flow = discretize(spec_or_flow, cfg.n_per_axis)
    if cfg.delta is not None and cfg.delta != flow.params.delta:
        flow = replace(flow, params=KernelParams(cfg.delta))
    return flow


def _frozen_stepper(frozen: Trajectory, src, gamma, fieldfn, targets_start, cfg: SolverConfig,
                    projector: _Projector, exclude_self: bool = False) -> np.ndarray:
    """Integrate ``targets_start`` through the field of the frozen source trajectory.

    With ``exclude_self`` the targets are the frozen labels themselves and
    source ``k`` does not act on target ``src[k]`` through its singular
    free-space part, the same convention the coupled system uses.
    """
    own = None
    if exclude_self:
        own = np.full(targets_start.shape[0], -1, dtype=np.int64)
        own[src] = np.arange(src.size)

    S = frozen.positions.shape[0] - 1
    dt = frozen.dt
    out = np.empty((S + 1,) + targets_start.shape)
    X = targets_start.copy()
    out[0] = X
    for k in range(S):
        F0 = frozen.positions[k, src]
        F1 = frozen.positions[k + 1, src]
        if cfg.integrator == "euler":
            X = X + dt * fieldfn(X, F0, gamma, own)
        else:
            Fh = 0.5 * (F0 + F1)
            k1 = fieldfn(X, F0, gamma, own)
            k2 = fieldfn(X + 0.5 * dt * k1, Fh, gamma, own)
            k3 = fieldfn(X + 0.5 * dt * k2, Fh, gamma, own)
            k4 = fieldfn(X + dt * k3, F1, gamma, own)
            X = X + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        X = projector(X)
        out[k + 1] = X
    return out


def apply_solution_operator(frozen: Trajectory, cfg: SolverConfig) -> Trajectory:
    """``S[X]``: every label integrated from its initial position through the
    velocity induced by the frozen trajectory ``X``.

    Frozen positions are interpolated linearly in time, which at the RK4
    half step is the average of the bracketing grid positions.
    """
    flow = frozen.flow
    times = cfg.times()
    if times.size != frozen.times.size or not np.allclose(times, frozen.times, rtol=0, atol=1e-12):
        raise ValueError("frozen trajectory is not sampled on the solver time grid")
    src = flow.source_index
    gamma = flow.circulations[src]
    fieldfn = _Field(flow.domain, flow.params)
    proj = _Projector(flow.domain, flow.n, times.size - 1)
    pos = _frozen_stepper(frozen, src, gamma, fieldfn, flow.labels, cfg, proj, exclude_self=True)
    return Trajectory(frozen.times.copy(), pos, flow, proj.count)


def trajectory_distance(a, b, domain: Optional[Domain] = None) -> np.ndarray:
    """Per-time sup over labels of ``|a - b|`` (minimal image on the torus)."""
    pa = a.positions if isinstance(a, Trajectory) else np.asarray(a)
    pb = b.positions if isinstance(b, Trajectory) else np.asarray(b)
    dom = domain or (a.domain if isinstance(a, Trajectory) else Domain.plane())
    if pa.shape != pb.shape:
        raise ValueError("trajectories differ in shape")
    if pa.shape[1] == 0:
        return np.zeros(pa.shape[0])
    d = dom.displacement(pa, pb)
    return np.sqrt(np.max(np.einsum("tni,tni->tn", d, d), axis=1))


@dataclass
class PicardResult:
    trajectory: Trajectory
    iterations: int
    residuals: list
    converged: bool
    monotone: bool

    def summary(self) -> dict:
        return {"iterations": self.iterations, "converged": self.converged,
                "residuals": [float(r) for r in self.residuals], "monotone_after_first": self.monotone}


def picard_solve(spec_or_flow, cfg: SolverConfig, initial: Optional[Trajectory] = None,
                 callback=None) -> PicardResult:
    """Iterate ``X^{k+1} = S[X^k]`` from the constant identity trajectory.

    Stops once the sup over grid times and labels of ``|X^{k+1} - X^k|``
    is below ``cfg.picard_tol``.  Running out of iterations is reported
    through ``converged=False``.  A residual history that fails to decrease
    after the first iteration is flagged in ``monotone`` and warned about.
    """
    flow = _resolve(spec_or_flow, cfg)
    X = initial if initial is not None else identity_trajectory(flow, cfg)
    residuals = []
    converged = False
    k = 0
    for k in range(1, cfg.picard_max_iter + 1):
        Xn = apply_solution_operator(X, cfg)
        res = float(np.max(trajectory_distance(Xn, X, flow.domain)))
        residuals.append(res)
        X = Xn
        if callback is not None:
            callback(k, res)
        if res < cfg.picard_tol:
            converged = True
            break
    r = np.asarray(residuals)
    monotone = bool(np.all(np.diff(r[1:]) < 0)) if r.size > 2 else True
    if not monotone:
        warnings.warn("Picard residuals did not decrease monotonically after the first iteration",
                      RuntimeWarning, stacklevel=2)
    X.meta.update({"solver": "picard", "iterations": k, "converged": converged})
    return PicardResult(X, k, residuals, converged, monotone)


def direct_solve(spec_or_flow, cfg: SolverConfig) -> Trajectory:
    """The coupled system ``dX_i/dt = sum_j w_j omega_j K(X_i, X_j)`` by RK4 (or Euler)."""
    flow = _resolve(spec_or_flow, cfg)
    times = cfg.times()
    dt = cfg.step
    src = flow.source_index
    gamma = flow.circulations[src]
    fieldfn = _Field(flow.domain, flow.params)
    proj = _Projector(flow.domain, flow.n, times.size - 1)

    def f(Y):
        return fieldfn(Y, Y[src], gamma)

    pos = np.empty((times.size,) + flow.labels.shape)
    X = flow.labels.copy()
    pos[0] = X
    for k in range(times.size - 1):
        if cfg.integrator == "euler":
            X = X + dt * f(X)
        else:
            k1 = f(X)
            k2 = f(X + 0.5 * dt * k1)
            k3 = f(X + 0.5 * dt * k2)
            k4 = f(X + dt * k3)
            X = X + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        X = proj(X)
        pos[k + 1] = X
    return Trajectory(times, pos, flow, proj.count, {"solver": "direct"})


def advect_tracers(traj: Trajectory, points, integrator: str = "rk4") -> np.ndarray:
    """Positions ``(steps + 1, P, 2)`` of passive points carried by the trajectory's field."""
    P = np.atleast_2d(np.asarray(points, dtype=float))
    flow = traj.flow
    src = flow.source_index
    cfg = SolverConfig(dt=max(traj.dt, 1e-300), t_end=float(traj.times[-1]), integrator=integrator)
    proj = _Projector(flow.domain, P.shape[0], traj.times.size - 1)
    return _frozen_stepper(traj, src, flow.circulations[src], _Field(flow.domain, flow.params),
                           P, cfg, proj)


# --------------------------------------------------------------------------
# diagnostics


@dataclass
class DistortionReport:
    max_error: float
    max_error_triangle: float
    history: np.ndarray
    n_triangles: int
    probe_size: Optional[float]
    inverted: bool

    def __float__(self):
        return self.max_error


def _tri_area(p0, p1, p2):
    a = p1 - p0
    b = p2 - p0
    return 0.5 * (a[..., 0] * b[..., 1] - a[..., 1] * b[..., 0])


def measure_distortion(traj: Trajectory, mesh_resolution: int = 16, region=None,
                       probe_size: Optional[float] = 1e-5) -> DistortionReport:
    """Max relative area change of advected triangles.

    The region (default: bounding box of the vorticity-carrying labels, kept
    inside the disk) is split into ``mesh_resolution^2`` cells of two
    triangles each.  With ``probe_size`` set, every cell is shrunk about its
    centre to that edge length so the probe reports the local Jacobian
    rather than the bending of straight edges.  The per-cell error uses the
    cell's two triangles together; they are point reflections of each other,
    which cancels the first-order bending term.  ``max_error_triangle`` is
    the same statistic for single triangles.  An inverted triangle counts as
    error ``>= 1``.
    """
    m = int(mesh_resolution)
    if m < 1:
        raise ValueError("mesh_resolution must be >= 1")
    flow = traj.flow
    if region is None:
        src = flow.source_index
        pts = flow.labels[src] if src.size else flow.labels
        if pts.shape[0] == 0:
            pts = np.array([[-0.5, -0.5], [0.5, 0.5]])
        region = (pts[:, 0].min(), pts[:, 0].max(), pts[:, 1].min(), pts[:, 1].max())
    x0, x1, y0, y1 = region
    hx = (x1 - x0) / m
    hy = (y1 - y0) / m
    cx = x0 + (np.arange(m) + 0.5) * hx
    cy = y0 + (np.arange(m) + 0.5) * hy
    C = np.stack(np.meshgrid(cx, cy, indexing="ij"), axis=-1).reshape(-1, 2)
    if flow.domain.kind == "disk":
        C = C[np.hypot(C[:, 0], C[:, 1]) + 0.75 * math.hypot(hx, hy) < 1.0]
    if probe_size is None:
        sx, sy = 0.5 * hx, 0.5 * hy
    else:
        sx = sy = 0.5 * float(probe_size)
    corners = np.array([[-1, -1], [1, -1], [1, 1], [-1, 1]], dtype=float) * np.array([sx, sy])
    V = (C[:, None, :] + corners[None, :, :]).reshape(-1, 2)
    if V.shape[0] == 0:
        return DistortionReport(0.0, 0.0, np.zeros(traj.times.size), 0, probe_size, False)
    if flow.is_empty:
        path = np.broadcast_to(V, (traj.times.size,) + V.shape)
    else:
        path = advect_tracers(traj, V)
    Q = path.reshape(traj.times.size, C.shape[0], 4, 2)
    ta = _tri_area(Q[:, :, 0], Q[:, :, 1], Q[:, :, 3])
    tb = _tri_area(Q[:, :, 2], Q[:, :, 3], Q[:, :, 1])
    a0 = ta[0]
    inverted = bool(np.any(ta <= 0) or np.any(tb <= 0))
    cell = np.abs((ta + tb) / (ta[0] + tb[0]) - 1.0)
    tri = np.maximum(np.abs(ta / a0 - 1.0), np.abs(tb / tb[0] - 1.0))
    if inverted:
        cell = np.maximum(cell, np.where((ta <= 0) | (tb <= 0), 1.0, 0.0))
        tri = np.maximum(tri, np.where((ta <= 0) | (tb <= 0), 1.0, 0.0))
    hist = cell.max(axis=1)
    return DistortionReport(float(hist.max()), float(tri.max()), hist, 2 * C.shape[0], probe_size, inverted)


@dataclass
class FlowModulusReport:
    times: np.ndarray
    separations: np.ndarray
    distances: np.ndarray
    alpha: np.ndarray
    alpha_stderr: np.ndarray
    C_per_time: np.ndarray
    C: float
    omega_norm: float
    holds: bool

    def rows(self):
        for k, t in enumerate(self.times):
            for s, d in zip(self.separations, self.distances[k]):
                yield (t, s, d)


def flow_modulus_probe(traj: Trajectory, pair_count: int = 64, seed: int = 0, theta=None,
                       omega_norm: Optional[float] = None, region=None,
                       sep_range=(1e-6, 1e-1)) -> FlowModulusReport:
    """Separation of advected label pairs against their initial separation.

    Pairs ``(a, b)`` have ``|a - b|`` log-spaced in ``sep_range`` with random
    base points in ``region`` (default: the support of the labels) and random
    directions.  Per time the report holds the log-log slope ``alpha(t)`` and
    ``C(t) = max (M(|a-b|) - M(|X(a)-X(b)|)) / (||omega_0|| t)``, the smallest
    constant for which the modulus inequality holds at that time; ``C`` is its
    maximum over times.
    """
    from .modulus import ThetaProfile, modulus_kit, ynorm

    theta = theta or ThetaProfile()
    rng = np.random.default_rng(seed)
    flow = traj.flow
    dom = flow.domain
    sep = np.geomspace(sep_range[0], sep_range[1], pair_count)
    if region is None:
        src = flow.source_index
        pts = flow.labels[src] if src.size else flow.labels
        region = (pts[:, 0].min(), pts[:, 0].max(), pts[:, 1].min(), pts[:, 1].max())
    x0, x1, y0, y1 = region
    a = np.stack([x0 + (x1 - x0) * rng.random(pair_count), y0 + (y1 - y0) * rng.random(pair_count)], axis=1)
    th = 2 * np.pi * rng.random(pair_count)
    b = a + sep[:, None] * np.stack([np.cos(th), np.sin(th)], axis=1)
    if dom.kind == "disk":
        # pull pairs inside so both points are interior
        r = np.maximum(np.hypot(a[:, 0], a[:, 1]), np.hypot(b[:, 0], b[:, 1]))
        s = np.where(r > 0.95, 0.95 / r, 1.0)[:, None]
        a, b = a * s, b * s
        sep = np.linalg.norm(a - b, axis=1)
    if flow.is_empty:
        pa = np.broadcast_to(a, (traj.times.size,) + a.shape)
        pb = np.broadcast_to(b, (traj.times.size,) + b.shape)
    else:
        path = advect_tracers(traj, np.concatenate([a, b]))
        pa, pb = path[:, :pair_count], path[:, pair_count:]
    dist = np.linalg.norm(dom.displacement(pa, pb), axis=-1)
    ls = np.log(sep)
    alpha = np.empty(traj.times.size)
    se = np.empty(traj.times.size)
    for k in range(traj.times.size):
        fit = stats.linregress(ls, np.log(np.maximum(dist[k], 1e-300)))
        alpha[k], se[k] = fit.slope, fit.stderr
    if omega_norm is None:
        src = flow.source_index
        if src.size:
            omega_norm = ynorm(flow.values[src], flow.weights[src], theta)
        else:
            omega_norm = 0.0
    kit = modulus_kit(theta)
    m0 = kit.big_m(sep, extend=True)
    Ct = np.zeros(traj.times.size)
    for k in range(1, traj.times.size):
        t = traj.times[k]
        drop = m0 - kit.big_m(np.maximum(dist[k], 1e-300), extend=True)
        worst = float(np.max(drop))
        if worst <= 0:
            Ct[k] = 0.0
        elif omega_norm > 0 and t > 0:
            Ct[k] = worst / (omega_norm * t)
        else:
            Ct[k] = math.inf
    C = float(np.max(Ct))
    return FlowModulusReport(traj.times.copy(), sep, dist, alpha, se, Ct, C, float(omega_norm),
                             bool(np.isfinite(C)))
