"""Stability experiments: dependence of the flow on the initial vorticity and
on the domain, the quasi-Lipschitz rate of the solution operator, and the
continuity of the flow in time.

Every fitted constant is the smallest one for which the stated envelope
holds on the sampled cells, so a report passes by construction whenever a
finite constant exists.  What carries information is the size of the
constant and how it moves under refinement.
"""
from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np
from scipy import stats

from .flow import (ParticleFlow, SolverConfig, Trajectory, apply_solution_operator, direct_solve,
                   discretize, picard_solve, trajectory_distance, _grid_cells, _polar_cells)
from .maps import TwistMap, twist_norms
from .modulus import ThetaProfile, lp_norms, modulus_kit, mu
from .vorticity import Composite, VorticitySpec

__all__ = [
    "StabilityReport",
    "ExperimentAborted",
    "data_dependence_experiment",
    "domain_dependence_experiment",
    "quasi_lipschitz_probe",
    "QuasiLipschitzReport",
    "time_continuity_audit",
    "TimeContinuityReport",
    "fit_holder_exponents",
    "alpha_trend",
]


class ExperimentAborted(RuntimeError):
    def __init__(self, message, report=None):
        super().__init__(message)
        self.report = report


@dataclass
class StabilityReport:
    kind: str
    times: np.ndarray
    perturbation_sizes: np.ndarray
    distances: np.ndarray          # (n_eps, n_times)
    fitted_alpha: np.ndarray       # per time, NaN where fewer than two usable points
    alpha_stderr: np.ndarray
    alpha_points: np.ndarray
    envelope_C: dict
    envelope: np.ndarray           # envelope in distance units, (n_eps, n_times)
    nu_d: np.ndarray
    pass_flags: np.ndarray
    norms: dict = field(default_factory=dict)
    extra: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return bool(np.all(self.pass_flags))

    def rows(self):
        for i, eps in enumerate(self.perturbation_sizes):
            for k, t in enumerate(self.times):
                yield (t, eps, self.distances[i, k], self.nu_d[i, k], self.envelope[i, k],
                       bool(self.pass_flags[i, k]))

    def to_csv(self, path, header_lines=()):
        from .io import write_csv
        write_csv(path, ["t", "eps", "d", "nu_d", "envelope", "pass"], self.rows(), header_lines)

    def summary(self) -> dict:
        def clean(a):
            return [None if not np.isfinite(x) else float(x) for x in np.asarray(a, dtype=float)]
        out = {"kind": self.kind, "passed": self.passed, "times": clean(self.times),
               "eps": clean(self.perturbation_sizes), "alpha": clean(self.fitted_alpha),
               "alpha_stderr": clean(self.alpha_stderr),
               "alpha_points": [int(x) for x in self.alpha_points],
               "envelope_C": {k: (None if v is None or not np.isfinite(v) else float(v))
                              for k, v in self.envelope_C.items()},
               "norms": self.norms}
        out.update(self.extra)
        return out


# --------------------------------------------------------------------------
# helpers


def _run(flow: ParticleFlow, cfg: SolverConfig, solver: str):
    if solver == "direct":
        return direct_solve(flow, cfg), None
    if solver != "picard":
        raise ValueError("solver must be 'picard' or 'direct'")
    res = picard_solve(flow, cfg)
    return res.trajectory, res.summary()


def _run_many(flows, cfg, solver, jobs):
    if jobs and jobs > 1 and len(flows) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as ex:
            return list(ex.map(_run, flows, [cfg] * len(flows), [solver] * len(flows)))
    return [_run(f, cfg, solver) for f in flows]


def _report_index(times, report_times):
    if report_times is None:
        n = min(len(times) - 1, 20)
        idx = np.unique(np.round(np.linspace(0, len(times) - 1, n + 1)).astype(int))
    else:
        idx = np.array([int(np.argmin(np.abs(times - t))) for t in report_times])
    return idx


def fit_holder_exponents(eps, d, c0: float, floor: float = 1e-13):
    """Per column of ``d`` (shape ``(n_eps, n_times)``): slope of ``ln d`` against ``ln eps``.

    Only cells with ``eps > 0`` and ``floor < d < 1/c0`` enter the fit; the
    floor keeps round-off (for instance at ``t = 0``) out of the slope.
    """
    eps = np.asarray(eps, dtype=float)
    n_t = d.shape[1]
    alpha = np.full(n_t, np.nan)
    se = np.full(n_t, np.nan)
    npts = np.zeros(n_t, dtype=int)
    for k in range(n_t):
        ok = (eps > 0) & (d[:, k] > floor) & (d[:, k] < 1.0 / c0)
        npts[k] = int(ok.sum())
        if npts[k] >= 2:
            fit = stats.linregress(np.log(eps[ok]), np.log(d[ok, k]))
            alpha[k] = fit.slope
            se[k] = fit.stderr if npts[k] > 2 else 0.0
    return alpha, se, npts


def alpha_trend(times, alpha, se, t_early: float, t_late: float) -> dict:
    """Trend checks on fitted exponents.

    ``non_increasing``: consecutive exponents never rise by more than twice
    their combined standard error.  ``decay``: ``alpha(t_late)`` lies below
    ``alpha(t_early)`` by more than twice the combined standard error.
    """
    times = np.asarray(times)
    ok = np.isfinite(alpha)
    a, s, t = alpha[ok], se[ok], times[ok]
    rises = [(float(t[i]), float(a[i + 1] - a[i]), float(2 * math.hypot(s[i], s[i + 1])))
             for i in range(len(a) - 1) if a[i + 1] - a[i] > 2 * math.hypot(s[i], s[i + 1])]
    ie = int(np.argmin(np.abs(times - t_early)))
    il = int(np.argmin(np.abs(times - t_late)))
    if np.isfinite(alpha[ie]) and np.isfinite(alpha[il]):
        gap = float(alpha[ie] - alpha[il])
        band = float(2 * math.hypot(se[ie], se[il]))
    else:
        gap, band = math.nan, math.nan
    return {"non_increasing": not rises, "rises": rises, "alpha_early": float(alpha[ie]),
            "alpha_late": float(alpha[il]), "gap": gap, "two_se": band,
            "decay": bool(np.isfinite(gap) and gap > band)}


def _min_feasible(pred, lo=1e-8, hi=1e8, iters=200, rtol=1e-10):
    """Smallest ``x`` in ``[lo, hi]`` with ``pred(x)`` for a monotone predicate (log bisection)."""
    if pred(lo):
        return lo
    if not pred(hi):
        return math.inf
    a, b = math.log(lo), math.log(hi)
    for _ in range(iters):
        m = 0.5 * (a + b)
        if pred(math.exp(m)):
            b = m
        else:
            a = m
        if b - a < rtol:
            break
    return math.exp(b)


def _union_flow(spec: VorticitySpec, perturbation: VorticitySpec, n: int, delta):
    """Shared labels sampling both fields; returns the flow and the perturbation values."""
    if perturbation.kind.atoms():
        raise ValueError("the perturbation must be a density, not point vortices")
    if perturbation.domain != spec.domain:
        raise ValueError("spec and perturbation live on different domains")
    union = VorticitySpec(Composite((spec.kind, perturbation.kind)), spec.domain, spec.tracers, spec.name)
    P, area, h = _grid_cells(union, n)
    dom = spec.domain
    v0 = spec.kind.evaluate(P, dom)
    vp = perturbation.kind.evaluate(P, dom)
    if dom.kind != "torus":
        keep = (np.abs(v0) >= 1e-14) | (np.abs(vp) >= 1e-14)
        P, v0, vp = P[keep], v0[keep], vp[keep]
    else:
        v0 = v0 - v0.mean()
        vp = vp - vp.mean()
    W = np.full(P.shape[0], area)
    atoms = spec.kind.atoms()
    labels = np.concatenate([P, np.array([p for p, _ in atoms]).reshape(-1, 2)])
    weights = np.concatenate([W, np.ones(len(atoms))])
    values = np.concatenate([v0, [g for _, g in atoms]])
    pvals = np.concatenate([vp, np.zeros(len(atoms))])
    n_tr = 0
    if spec.tracers:
        T = np.asarray(spec.tracers, dtype=float)
        n_tr = T.shape[0]
        labels = np.concatenate([labels, T])
        weights = np.concatenate([weights, np.zeros(n_tr)])
        values = np.concatenate([values, np.zeros(n_tr)])
        pvals = np.concatenate([pvals, np.zeros(n_tr)])
    if delta is None:
        delta = 0.5 * h
    from .domain import KernelParams
    flow = ParticleFlow(labels, labels.copy(), weights, values, dom, KernelParams(float(delta)),
                        0.0, float(h), n_tr, spec.name, len(atoms))
    return flow, pvals, (P, W, v0, vp)


def _check_eps_list(eps_list):
    eps = np.asarray(eps_list, dtype=float)
    if eps.size < 4:
        raise ValueError("eps_list needs at least four values")
    if np.any(np.diff(eps) >= 0) or np.any(eps < 0):
        raise ValueError("eps_list must be strictly decreasing and non-negative")
    return eps


# --------------------------------------------------------------------------
# initial-data dependence


def data_dependence_experiment(spec: VorticitySpec, perturbation: VorticitySpec, eps_list,
                               cfg: SolverConfig, theta: ThetaProfile = ThetaProfile(),
                               p: float = 4.0, n_per_axis: Optional[int] = None, report_times=None,
                               solver: str = "picard", jobs: int = 1,
                               alpha_window=(0.5, None)) -> StabilityReport:
    """Flows of ``omega_0`` and ``omega_0 + eps * perturbation`` on shared labels.

    ``d(t; eps)`` is the sup over labels of the position difference.  The
    exponent ``alpha(t)`` is the slope of ``ln d`` against ``ln eps`` over
    cells with ``d < 1/c0``.  The envelope constant ``C`` is the smallest
    value with

        nu(d(t; eps)) <= exp(C t ||omega_0||) nu(C eps ||perturbation||)

    on every cell, where ``||omega_0|| = L1 + Y_theta`` and
    ``||perturbation|| = L1 + L^p``; the ``L^inf`` norm is reported as well.
    ``nu`` is continued past its table maximum by the linear branch of ``M``.
    """
    eps = _check_eps_list(eps_list)
    n = n_per_axis or cfg.n_per_axis
    flow0, pvals, (P, W, v0, vp) = _union_flow(spec, perturbation, n, cfg.delta)
    n0 = flow0.norms(theta)["L1Y"]
    pl1 = float(np.sum(W * np.abs(vp)))
    plp = float(lp_norms(vp, W, [p])[0])
    np_norm = pl1 + plp
    norms = {"omega0_L1Y": n0, "pert_L1": pl1, f"pert_L{p:g}": plp, "pert_L1Lp": np_norm,
             "pert_Linf": float(np.max(np.abs(vp))) if vp.size else 0.0, "p": p}

    flows = [flow0] + [flow0.with_values(flow0.values + e * pvals) for e in eps]
    runs = _run_many(flows, cfg, solver, jobs)
    info = [r[1] for r in runs]
    base = runs[0][0]
    times = base.times
    idx = _report_index(times, report_times)
    D = np.zeros((eps.size, idx.size))
    for i, (traj, _) in enumerate(runs[1:]):
        D[i] = trajectory_distance(base, traj)[idx]
    rt = times[idx]

    bad = [i for i, s in enumerate(info) if s is not None and not s["converged"]]
    kit = modulus_kit(theta)
    alpha, se, npts = fit_holder_exponents(eps, D, theta.c0)

    def nu_ext(r):
        r = np.asarray(r, dtype=float)
        out = np.zeros(r.shape)
        pos = r > 0
        with np.errstate(over="ignore"):
            out[pos] = np.exp(-kit.big_m(r[pos], extend=True))
        return out

    nu_d = nu_ext(D)
    T, E = np.meshgrid(rt, eps)
    cells = (T > 0) & (E > 0)

    def rhs(C):
        with np.errstate(over="ignore", invalid="ignore"):
            return np.exp(C * T * n0) * nu_ext(C * E * np_norm)

    def feasible(C):
        return bool(np.all(nu_d[cells] <= rhs(C)[cells] * (1 + 1e-12)))

    C = _min_feasible(feasible) if np.any(cells & (D > 0)) else 0.0
    if np.isfinite(C) and C > 0:
        R = rhs(C)
        env = np.where(R > 0, kit.big_m_inv(-np.log(np.maximum(R, 1e-300)), extend=True), 0.0)
        flags = (nu_d <= R * (1 + 1e-12)) | ~cells
    else:
        env = np.zeros_like(D)
        flags = (D == 0) | ~cells if C == 0 else np.zeros_like(D, dtype=bool)
    t_early = alpha_window[0]
    t_late = alpha_window[1] if alpha_window[1] is not None else float(rt[-1])
    trend = alpha_trend(rt, alpha, se, t_early, t_late)
    rep = StabilityReport("data", rt, eps, D, alpha, se, npts, {"C": C}, env, nu_d, flags, norms,
                          {"trend": trend, "picard": info, "n_particles": int(flow0.n),
                           "delta": float(flow0.params.delta), "theta": theta.label})
    if bad:
        raise ExperimentAborted(f"Picard did not converge for runs {bad}", rep)
    return rep


# --------------------------------------------------------------------------
# domain dependence


def _fit_forced_envelope(kit, times, D, forcing, n_q, n_y, t_small):
    """Constants of ``d <= M^{-1}(M(C2 F n_q t) - C1 n_y t)``.

    ``C2`` is the smallest constant bounding the early growth
    ``d / (F n_q t)`` for ``t <= t_small``; ``C1`` is then the smallest
    constant for which the envelope holds at every cell.
    """
    T = np.broadcast_to(times, D.shape)
    F = np.broadcast_to(np.asarray(forcing, dtype=float).reshape(-1, 1), D.shape)
    cells = (T > 0) & (F > 0)
    early = cells & (T <= t_small + 1e-12)
    if not np.any(D[cells] > 0):
        return 0.0, 0.0, np.zeros(D.shape), np.ones(D.shape, dtype=bool)
    C2 = float(np.max(D[early] / (F[early] * n_q * T[early]))) if np.any(early) else 0.0
    C2 = max(C2, 1e-300)

    def envelope(C1):
        c = C2 * F * n_q * T
        out = np.zeros(D.shape)
        out[cells] = kit.envelope(c[cells], C1 * n_y, T[cells], extend=True)
        return out

    def feasible(C1):
        return bool(np.all(D[cells] <= envelope(C1)[cells] * (1 + 1e-9)))

    C1 = 0.0 if feasible(0.0) else _min_feasible(feasible, lo=1e-8, hi=1e8)
    env = envelope(C1) if np.isfinite(C1) else np.zeros(D.shape)
    flags = (D <= env * (1 + 1e-9)) | ~cells
    if not np.isfinite(C1):
        flags = ~cells
    return C1, C2, env, flags


def domain_dependence_experiment(spec: VorticitySpec, twist: TwistMap, eps_list, cfg: SolverConfig,
                                 theta: ThetaProfile = ThetaProfile(), q: float = 4.0,
                                 n_per_axis: Optional[int] = None, layout: str = "grid",
                                 angular_spacing: Optional[float] = None, report_times=None,
                                 solver: str = "picard", t_small: Optional[float] = None,
                                 jobs: int = 1, norm_grid: int = 256,
                                 forcing_norm: str = "C1") -> StabilityReport:
    """Flow of ``omega_0`` against the pulled-back flow of ``omega_0 o Phi^{-1}``.

    Run 2 carries the same values and weights at the twisted labels
    ``Phi(a)``, which is an exact change of variables because ``Phi``
    preserves area.  ``X~_1(a) = Phi^{-1}(X_2(Phi(a)))`` is compared with
    ``X_1(a)``.  The envelope has forcing ``C2 F_eps ||omega_0||_q t``
    with ``F_eps`` the finite-difference norm ``||D Phi - I||_{C^1}``
    (``forcing_norm="C1"``) or ``||Phi - id||_{C^2}`` (``"C2"``), and Osgood
    rate ``C1 ||omega_0||``; both fits are reported.
    """
    eps = _check_eps_list(eps_list)
    dom = spec.domain
    twist.check_domain(dom)
    for e in eps:
        twist.with_epsilon(e).check_jacobian(dom)
    n = n_per_axis or cfg.n_per_axis
    flow1 = discretize(spec, n, cfg.delta, layout=layout, angular_spacing=angular_spacing)
    nrm = flow1.norms(theta)
    dens = flow1.density_index
    n_q = float(lp_norms(flow1.values[dens], flow1.weights[dens], [q])[0]) if dens.size else 0.0
    n_y = nrm["L1Y"]
    tw = [twist.with_epsilon(e) for e in eps]
    flows = [flow1] + [replace(flow1, labels=t.forward(flow1.labels), positions=t.forward(flow1.labels))
                       for t in tw]
    runs = _run_many(flows, cfg, solver, jobs)
    info = [r[1] for r in runs]
    X1 = runs[0][0]
    times = X1.times
    idx = _report_index(times, report_times)
    D = np.zeros((eps.size, idx.size))
    for i, (t, (X2, _)) in enumerate(zip(tw, runs[1:])):
        back = t.inverse(X2.positions)
        D[i] = trajectory_distance(X1.positions, back, dom)[idx]
    rt = times[idx]
    tn = [twist_norms(t, dom, norm_grid) for t in tw]
    F1 = np.array([x["C1"] for x in tn])
    F2 = np.array([x["C2"] for x in tn])
    lin = {}
    for key, F in (("C1", F1), ("C2", F2), ("grad", np.array([x["grad"] for x in tn]))):
        pos = eps > 0
        if pos.sum() >= 2 and np.ptp(eps[pos]) > 0:
            fit = stats.linregress(eps[pos], F[pos])
            lin[key] = {"slope": float(fit.slope), "r2": float(fit.rvalue ** 2)}
        else:
            lin[key] = {"slope": math.nan, "r2": math.nan}
    kit = modulus_kit(theta)
    ts = t_small if t_small is not None else 0.1 * float(rt[-1])
    fits = {}
    for key, F in (("C1", F1), ("C2", F2)):
        fits[key] = _fit_forced_envelope(kit, rt, D, F, n_q, n_y, ts)
    C1, C2, env, flags = fits[forcing_norm]
    alpha, se, npts = fit_holder_exponents(eps, D, theta.c0)
    nu_d = np.where(D > 0, np.exp(-kit.big_m(np.maximum(D, 1e-300), extend=True)), 0.0)
    env_C = {"C1": C1, "C2": C2}
    other = "C2" if forcing_norm == "C1" else "C1"
    env_C[f"C1_{other}_forcing"] = fits[other][0]
    env_C[f"C2_{other}_forcing"] = fits[other][1]
    bad = [i for i, s in enumerate(info) if s is not None and not s["converged"]]
    rep = StabilityReport("domain", rt, eps, D, alpha, se, npts, env_C, env, nu_d, flags,
                          {"omega0_L1Y": n_y, f"omega0_L{q:g}": n_q, "q": q},
                          {"twist": twist.kind, "twist_norms": tn, "norm_linearity": lin,
                           "forcing_norm": forcing_norm, "t_small": ts,
                           "trend": alpha_trend(rt, alpha, se, 0.5 * float(rt[-1]), float(rt[-1])),
                           "picard": info, "n_particles": int(flow1.n),
                           "delta": float(flow1.params.delta), "theta": theta.label,
                           "max_d": float(D.max()) if D.size else 0.0})
    if bad:
        raise ExperimentAborted(f"Picard did not converge for runs {bad}", rep)
    return rep


# --------------------------------------------------------------------------
# quasi-Lipschitz rate


@dataclass
class QuasiLipschitzReport:
    times: np.ndarray
    d_in: np.ndarray      # d(X, Y)
    d_out: np.ndarray     # d(S0[X], S1[Y])
    derivative: np.ndarray
    rhs: np.ndarray
    ratio: np.ndarray
    C: float
    singular_branch: dict
    norms: dict

    @property
    def spread(self) -> float:
        r = self.ratio[np.isfinite(self.ratio) & (self.ratio > 0)]
        return float(r.max() / np.median(r)) if r.size else 0.0


def quasi_lipschitz_probe(X: Trajectory, Y: Trajectory, omega0: ParticleFlow, omega1: ParticleFlow,
                          theta: ThetaProfile = ThetaProfile(), cfg: Optional[SolverConfig] = None,
                          diff_norm: Optional[float] = None) -> QuasiLipschitzReport:
    """Growth rate of ``d(S_0[X], S_1[Y])`` against the quasi-Lipschitz shape

        ||omega_0 - omega_1|| + ||omega_0|| (mu(d(X, Y)) + mu(d(S_0[X], S_1[Y]))).

    ``S_i`` integrates with the values of ``omega_i`` through the frozen
    trajectories.  The finite-difference derivative of the output distance
    divided by the shape is the per-time ratio; ``C`` is its maximum.
    ``singular_branch`` records whether the distances stayed below ``1/c0``.
    """
    if X.times.shape != Y.times.shape or not np.allclose(X.times, Y.times):
        raise ValueError("trajectories are on different time grids")
    if cfg is None:
        cfg = SolverConfig(dt=X.dt, t_end=float(X.times[-1]))
    Xs = Trajectory(X.times, X.positions, omega0)
    Ys = Trajectory(Y.times, Y.positions, omega1)
    Xt = apply_solution_operator(Xs, cfg)
    Yt = apply_solution_operator(Ys, cfg)
    dom = omega0.domain
    d_in = trajectory_distance(X.positions, Y.positions, dom)
    d_out = trajectory_distance(Xt.positions, Yt.positions, dom)
    deriv = np.gradient(d_out, X.times) if X.times.size > 1 else np.zeros(1)
    n0 = omega0.norms(theta)["L1Y"]
    if diff_norm is None:
        dc = np.abs(omega0.circulations - omega1.circulations)
        diff_norm = math.fsum(dc)
    rhs = diff_norm + n0 * (mu(d_in, theta) + mu(d_out, theta))
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.where(rhs > 0, np.abs(deriv) / rhs, 0.0)
    knee = 1.0 / theta.c0
    pos_in = d_in[d_in > 0]
    pos_out = d_out[d_out > 0]
    branch = {"d_in_singular": bool(np.all(pos_in < knee)) if pos_in.size else True,
              "d_out_singular": bool(np.all(pos_out < knee)) if pos_out.size else True,
              "fraction_singular_out": float(np.mean(pos_out < knee)) if pos_out.size else 1.0}
    return QuasiLipschitzReport(X.times.copy(), d_in, d_out, deriv, rhs, ratio,
                                float(np.max(ratio)) if ratio.size else 0.0, branch,
                                {"omega0_L1Y": n0, "difference": diff_norm})


# --------------------------------------------------------------------------
# time continuity


@dataclass
class TimeContinuityReport:
    times: np.ndarray
    distance: np.ndarray
    envelope: np.ndarray
    C1: float
    C2: float
    passed: bool
    t_small: float

    def rows(self):
        for t, d, e in zip(self.times, self.distance, self.envelope):
            yield (t, d, e, bool(d <= e * (1 + 1e-9)))


def time_continuity_audit(traj: Trajectory, omega_norms: Optional[dict] = None,
                          theta: ThetaProfile = ThetaProfile(), t_small: Optional[float] = None,
                          q: float = 4.0) -> TimeContinuityReport:
    """``d(X(t), id)`` against ``M^{-1}(M(C1 n_q t) - C2 n_Y t)``.

    ``n_q`` is the ``L^q`` norm and ``n_Y`` the ``L1 + Y_theta`` norm of the
    initial vorticity (``omega_norms`` keys ``"q"`` and ``"Y"``; computed
    from the particles when omitted).  ``C1`` is the smallest constant
    covering the growth over ``(0, t_small]`` and ``C2`` the smallest one
    making the envelope hold over the whole run.
    """
    flow = traj.flow
    times = traj.times
    d = trajectory_distance(traj.positions, np.broadcast_to(flow.labels, traj.positions.shape),
                            flow.domain)
    if omega_norms is None:
        nr = flow.norms(theta)
        dens = flow.density_index
        nq = float(lp_norms(flow.values[dens], flow.weights[dens], [q])[0]) if dens.size else 0.0
        # atoms have no L^q norm; their circulation stands in for it
        nq = nq + math.fsum(np.abs(flow.circulations[flow.source_index])) * (dens.size == 0)
        omega_norms = {"q": nq, "Y": nr["L1Y"]}
    nq, ny = float(omega_norms["q"]), float(omega_norms["Y"])
    ts = t_small if t_small is not None else 0.1 * float(times[-1])
    kit = modulus_kit(theta)
    if not np.any(d > 0) or nq == 0:
        return TimeContinuityReport(times, d, np.zeros_like(d), 0.0, 0.0, bool(np.all(d == 0)), ts)
    C2, C1, env, flags = _fit_forced_envelope(kit, times, d[None, :], np.ones(1), nq, ny, ts)
    # the fitter returns the Osgood rate first; here C1 names the forcing constant
    return TimeContinuityReport(times, d, env[0], C1, C2, bool(np.all(flags)), ts)
