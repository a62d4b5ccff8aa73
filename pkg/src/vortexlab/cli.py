"""Command-line front end.

    vortexlab list
    vortexlab run <command> [--config PATH] [--seed N] [--out DIR] [--set key=value ...] [--key value ...]

Config files are flat ``key = value`` text where a ``[section]`` header
prefixes the keys below it (``[solver]`` then ``dt = 1e-3`` sets
``solver.dt``); JSON objects are accepted too.  An override key without a
section resolves to the unique full key ending in it, so ``--dt 1e-3`` sets
``solver.dt``, and a bare section name stands for its ``name`` key
(``--theta constant``).  Exit status: 0 when the run passes, 2 on a scientific
failure (violated envelope, no Picard convergence), 1 on usage or I/O
errors.
"""
from __future__ import annotations

import argparse
import ast
import configparser
import json
import logging
import math
import operator
import sys
import time
import warnings
from pathlib import Path

import numpy as np

from . import __version__
from . import builtins as bi
from .io import config_hash, header_lines, write_csv, write_json, write_trajectory_csv

log = logging.getLogger("vortexlab")

EXIT_OK, EXIT_USAGE, EXIT_FAIL = 0, 1, 2
COMMANDS = ("simulate", "picard", "kernel-audit", "modulus", "stability", "domain-compare", "time-audit")


class UsageError(Exception):
    pass


# --------------------------------------------------------------------------
# values


_OPS = {ast.Add: operator.add, ast.Sub: operator.sub, ast.Mult: operator.mul,
        ast.Div: operator.truediv, ast.Pow: operator.pow, ast.USub: operator.neg, ast.UAdd: operator.pos}
_NAMES = {"pi": math.pi, "e": math.e, "inf": math.inf}


def _arith(text: str) -> float:
    """Evaluate a numeric literal or a small arithmetic expression such as ``2*pi**2``."""
    def ev(node):
        if isinstance(node, ast.Expression):
            return ev(node.body)
        if isinstance(node, ast.Constant) and isinstance(node.value, (int, float)):
            return float(node.value)
        if isinstance(node, ast.Name) and node.id in _NAMES:
            return _NAMES[node.id]
        if isinstance(node, ast.BinOp) and type(node.op) in _OPS:
            return _OPS[type(node.op)](ev(node.left), ev(node.right))
        if isinstance(node, ast.UnaryOp) and type(node.op) in _OPS:
            return _OPS[type(node.op)](ev(node.operand))
        raise ValueError(text)
    try:
        return float(ev(ast.parse(text.strip(), mode="eval")))
    except (SyntaxError, ValueError, TypeError, ZeroDivisionError):
        raise UsageError(f"not a number: {text!r}") from None


def _float(v):
    return float(v) if isinstance(v, (int, float)) and not isinstance(v, bool) else _arith(str(v))


def _opt_float(v):
    if v is None or (isinstance(v, str) and v.strip().lower() in ("", "none", "auto")):
        return None
    return _float(v)


def _int(v):
    x = _float(v)
    if x != int(x):
        raise UsageError(f"not an integer: {v!r}")
    return int(x)


def _bool(v):
    if isinstance(v, bool):
        return v
    s = str(v).strip().lower()
    if s in ("1", "true", "yes", "on"):
        return True
    if s in ("0", "false", "no", "off"):
        return False
    raise UsageError(f"not a boolean: {v!r}")


def _str(v):
    return str(v).strip()


def _floats(v):
    if isinstance(v, (list, tuple)):
        return [_float(x) for x in v]
    items = [x for x in str(v).replace(";", ",").split(",") if x.strip()]
    return [_float(x) for x in items]


def _opt_floats(v):
    if v is None or (isinstance(v, str) and v.strip().lower() in ("", "none", "auto")):
        return None
    return _floats(v)


# --------------------------------------------------------------------------
# per-command schemas: key -> (default, parser)

_SOLVER = {
    "solver.dt": (1e-3, _float),
    "solver.t_end": (1.0, _float),
    "solver.delta": (None, _opt_float),
    "solver.picard_tol": (1e-8, _float),
    "solver.picard_max_iter": (30, _int),
    "solver.integrator": ("rk4", _str),
    "solver.n_per_axis": (32, _int),
    "solver.method": ("direct", _str),
}
_SPEC = {"spec.name": ("patch", _str), "spec.domain": (None, lambda v: None if v in (None, "") else _str(v)),
         "spec.period": (1.0, _float)}
_THETA = {"theta.name": ("constant", _str), "theta.alpha": (1.0, _float)}

SCHEMAS = {
    "simulate": {**_SPEC, **_SOLVER, "output.every": (0, _int), "output.snapshot": (False, _bool),
                 "check.return_tol": (None, _opt_float)},
    "picard": {**_SPEC, **_SOLVER, "solver.method": ("picard", _str), "output.every": (0, _int),
               "check.compare_direct": (False, _bool)},
    "kernel-audit": {"spec.domain": ("plane", _str), "spec.period": (1.0, _float),
                     "audit.n_samples": (100000, _int), "audit.delta": (0.0, _float),
                     "audit.y_max_radius": (0.9, _float), "audit.checks": (1000, _int),
                     "audit.divergence_tol": (1e-6, _float)},
    "modulus": {**_THETA, "modulus.r": ([1e-4], _floats), "modulus.method": ("quad", _str),
                "modulus.negative_control": (False, _bool)},
    "stability": {**_SPEC, **_SOLVER, **_THETA, "solver.method": ("picard", _str),
                  "solver.t_end": (2.0, _float),
                  "experiment.perturbation": ("patch-perturbation", _str),
                  "experiment.eps": ([1e-2, 1e-3, 1e-4, 1e-5], _floats),
                  "experiment.p": (4.0, _float), "experiment.report_times": (None, _opt_floats),
                  "experiment.jobs": (1, _int)},
    "domain-compare": {**_SPEC, **_SOLVER, **_THETA, "spec.name": ("offset-patch", _str),
                       "solver.method": ("picard", _str), "solver.n_per_axis": (24, _int),
                       "experiment.twist": ("radial", _str),
                       "experiment.eps": ([1e-2, 3.16e-3, 1e-3, 3.16e-4, 1e-4], _floats),
                       "experiment.q": (4.0, _float), "experiment.layout": ("grid", _str),
                       "experiment.angular_spacing": (None, _opt_float),
                       "experiment.report_times": (None, _opt_floats),
                       "experiment.t_small": (None, _opt_float), "experiment.jobs": (1, _int),
                       "experiment.forcing_norm": ("C1", _str)},
    "time-audit": {**_SPEC, **_SOLVER, **_THETA, "experiment.q": (4.0, _float),
                   "experiment.t_small": (None, _opt_float)},
}


def _resolve_key(key: str, schema: dict) -> str:
    key = key.strip().replace("-", "_")
    if key in schema:
        return key
    if f"{key}.name" in schema:
        return f"{key}.name"
    hits = [k for k in schema if k.split(".", 1)[-1] == key]
    if len(hits) == 1:
        return hits[0]
    valid = ", ".join(sorted(schema))
    if hits:
        raise UsageError(f"ambiguous key {key!r} (matches {', '.join(hits)})")
    raise UsageError(f"unknown config key {key!r}; valid keys: {valid}")


def parse_config_text(text: str) -> dict:
    """Flat ``key = value`` text with optional ``[section]`` headers, or a JSON object."""
    stripped = text.strip()
    if stripped.startswith("{"):
        obj = json.loads(stripped)
        if not isinstance(obj, dict):
            raise UsageError("JSON config must be an object")
        out = {}
        for k, v in obj.items():
            if isinstance(v, dict):
                out.update({f"{k}.{kk}": vv for kk, vv in v.items()})
            else:
                out[k] = v
        return out
    parser = configparser.ConfigParser(interpolation=None, default_section="\x00",
                                       inline_comment_prefixes=("#", ";"))
    parser.optionxform = str
    try:
        parser.read_string("[\x01]\n" + text)
    except configparser.Error as exc:
        raise UsageError(f"cannot parse config: {exc}") from None
    out = {}
    for sec in parser.sections():
        for k, v in parser.items(sec):
            out[k if sec == "\x01" else f"{sec}.{k}"] = v
    return out


def resolve_config(command: str, file_values: dict, overrides: dict, seed=None) -> dict:
    schema = SCHEMAS[command]
    raw = {}
    for src in (file_values, overrides):
        for k, v in src.items():
            if k == "seed":
                raw["seed"] = v
                continue
            raw[_resolve_key(k, schema)] = v
    cfg = {}
    for k, (default, parse) in schema.items():
        cfg[k] = parse(raw[k]) if k in raw else default
    cfg["seed"] = _int(seed if seed is not None else raw.get("seed", 0))
    cfg["command"] = command
    return cfg


# --------------------------------------------------------------------------
# helpers


def _group(cfg: dict, prefix: str) -> dict:
    n = len(prefix) + 1
    return {k[n:]: v for k, v in cfg.items() if k.startswith(prefix + ".")}


def _solver_config(cfg):
    from .flow import SolverConfig
    s = _group(cfg, "solver")
    return SolverConfig(dt=s["dt"], t_end=s["t_end"], delta=s["delta"], picard_tol=s["picard_tol"],
                        picard_max_iter=s["picard_max_iter"], integrator=s["integrator"],
                        seed=cfg["seed"], n_per_axis=s["n_per_axis"])


def _spec(cfg, key="spec.name", domain=None):
    try:
        return bi.get_spec(cfg[key], domain or cfg.get("spec.domain"), cfg.get("spec.period", 1.0))
    except KeyError as exc:
        raise UsageError(exc.args[0]) from None


def _theta(cfg):
    try:
        return bi.get_theta(cfg["theta.name"], cfg["theta.alpha"])
    except KeyError as exc:
        raise UsageError(exc.args[0]) from None


def _finite(x):
    x = float(x)
    return x if math.isfinite(x) else None


class _Run:
    """Output directory plus the shared header of every artifact."""

    def __init__(self, cfg: dict, out: Path):
        self.cfg = cfg
        self.out = out
        self.header = header_lines(__version__, cfg, cfg["seed"])

    def csv(self, name, columns, rows):
        p = write_csv(self.out / name, columns, rows, self.header)
        log.info("wrote %s", p)

    def summary(self, summary: dict, passed: bool):
        body = {"version": __version__, "config": self.cfg, "config_hash": config_hash(self.cfg),
                "seed": self.cfg["seed"], "passed": bool(passed), "result": summary}
        write_json(self.out / "summary.json", body)
        return EXIT_OK if passed else EXIT_FAIL


# --------------------------------------------------------------------------
# commands


def _solve(cfg, spec, scfg):
    from .flow import direct_solve, discretize, picard_solve
    flow = discretize(spec, scfg.n_per_axis, scfg.delta)
    method = cfg["solver.method"]
    if method == "direct":
        return direct_solve(flow, scfg), None
    if method == "picard":
        res = picard_solve(flow, scfg)
        return res.trajectory, res
    raise UsageError("solver.method must be 'direct' or 'picard'")


def _write_traj(run: _Run, traj, every: int):
    if every > 0:
        p = write_trajectory_csv(run.out / "trajectory.csv", traj, run.header, every)
        log.info("wrote %s", p)


def cmd_simulate(run: _Run) -> int:
    from .flow import hamiltonian
    from .io import write_snapshot
    cfg = run.cfg
    spec = _spec(cfg)
    scfg = _solver_config(cfg)
    traj, res = _solve(cfg, spec, scfg)
    flow = traj.flow
    P0, P1 = traj.positions[0], traj.positions[-1]
    scale = float(np.max(np.abs(P0))) if P0.size else 0.0
    ret = float(np.max(np.hypot(*(P1 - P0).T))) / scale if scale > 0 else 0.0
    summary = {"spec": spec.name, "n": flow.n, "steps": scfg.n_steps, "t_end": scfg.t_end,
               "return_error": ret}
    if flow.n and flow.domain.kind != "torus":
        h0, h1 = hamiltonian(flow, P0), hamiltonian(flow, P1)
        summary["hamiltonian_drift"] = abs(h1 - h0) / max(abs(h0), 1e-300)
    if res is not None:
        summary["picard"] = res.summary()
    run.csv("final_positions.csv", ["label_id", "label_x", "label_y", "pos_x", "pos_y", "weight", "omega"],
            ((i, *flow.labels[i], *P1[i], flow.weights[i], flow.values[i]) for i in range(flow.n)))
    _write_traj(run, traj, cfg["output.every"])
    if cfg["output.snapshot"]:
        write_snapshot(run.out / "trajectory.bin", traj.positions)
    tol = cfg["check.return_tol"]
    passed = (res is None or res.converged) and (tol is None or ret <= tol)
    print(f"simulate {spec.name}: N={flow.n} steps={scfg.n_steps} relative return error {ret:.3e}")
    return run.summary(summary, passed)


def cmd_picard(run: _Run) -> int:
    from .flow import direct_solve, trajectory_distance
    cfg = dict(run.cfg)
    if cfg["solver.method"] != "picard":
        raise UsageError("the picard command needs solver.method = picard")
    spec = _spec(cfg)
    scfg = _solver_config(cfg)
    traj, res = _solve(cfg, spec, scfg)
    summary = res.summary()
    if cfg["check.compare_direct"] and traj.flow.n:
        ref = direct_solve(traj.flow, scfg)
        summary["sup_distance_to_direct"] = float(np.max(trajectory_distance(traj, ref)))
    run.csv("picard_residuals.csv", ["iteration", "residual"],
            ((k + 1, r) for k, r in enumerate(res.residuals)))
    _write_traj(run, traj, cfg["output.every"])
    print(f"picard {spec.name}: {res.iterations} iteration(s), converged={res.converged}, "
          f"final residual {res.residuals[-1] if res.residuals else 0.0:.3e}")
    return run.summary(summary, res.converged)


def cmd_kernel_audit(run: _Run) -> int:
    from .domain import (Domain, KernelParams, disk_tangency_check, divergence_check,
                         kernel_bound_audit, torus_consistency_check)
    cfg = run.cfg
    kind = cfg["spec.domain"]
    if kind == "plane":
        dom = Domain.plane()
    elif kind == "disk":
        dom = Domain.disk()
    elif kind == "torus":
        dom = Domain.torus(cfg["spec.period"])
    else:
        raise UsageError(f"unknown domain {kind!r}; expected plane, disk or torus")
    params = KernelParams(cfg["audit.delta"])
    audit = kernel_bound_audit(dom, cfg["audit.n_samples"], cfg["seed"], params, cfg["audit.y_max_radius"])
    m = cfg["audit.checks"]
    div = divergence_check(dom, n=min(m, 200), seed=cfg["seed"], params=params)
    summary = {"domain": kind, "n_samples": audit.n_samples, "C1_fit": audit.C1_fit,
               "C2_fit": audit.C2_fit, "violations": audit.violations,
               "C1_history": audit.C1_history, "checkpoints": audit.checkpoints, "divergence": div}
    passed = audit.violations == 0 and div <= cfg["audit.divergence_tol"]
    if kind == "plane":
        summary["C1_relative_error"] = abs(audit.C1_fit * 2 * math.pi - 1.0)
    if kind == "disk":
        summary["tangency"] = disk_tangency_check(m, cfg["seed"], params)
        passed = passed and summary["tangency"] <= 1e-10
    if kind == "torus":
        summary["spectral_vs_images"] = torus_consistency_check(dom, m, cfg["seed"], params=params)
        passed = passed and summary["spectral_vs_images"] <= 1e-6
    audit.to_csv(run.out / "kernel_audit.csv", run.header)
    print(f"kernel-audit {kind}: C1 = {audit.C1_fit:.6g}, C2 = {audit.C2_fit:.6g}, "
          f"violations = {audit.violations}, divergence = {div:.2e}")
    return run.summary(summary, passed)


def cmd_modulus(run: _Run) -> int:
    from .modulus import ModulusDomainError, NonOsgoodWarning, big_m, modulus_kit, mu, negative_control, nu
    cfg = run.cfg
    theta = _theta(cfg)
    r = np.asarray(cfg["modulus.r"], dtype=float)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", NonOsgoodWarning)
        kit = modulus_kit(theta)
        try:
            m = np.atleast_1d(big_m(r, theta, method=cfg["modulus.method"]))
        except (ModulusDomainError, ValueError) as exc:
            raise UsageError(str(exc)) from None
        n = np.atleast_1d(nu(r, theta, method=cfg["modulus.method"]))
    u = np.atleast_1d(mu(r, theta))
    if not theta.is_osgood:
        print(f"warning: theta {theta.label} is not Osgood; M stays bounded as r -> 0", file=sys.stderr)
    for ri, ui, mi, ni in zip(r, u, m, n):
        print(f"r = {ri:.6g}  mu = {ui:.6g}  M = {mi:.6g}  nu = {ni:.6g}")
    run.csv("modulus.csv", ["r", "mu", "M", "nu"], zip(r, u, m, n))
    summary = {"theta": theta.to_dict(), "label": theta.label, "osgood": theta.is_osgood,
               "r_max": kit.r_max, "M_limit": _finite(kit.m_inf),
               "values": [{"r": float(a), "mu": float(b), "M": float(c), "nu": float(d)}
                          for a, b, c, d in zip(r, u, m, n)]}
    if cfg["modulus.negative_control"]:
        nc = negative_control(theta)
        summary["negative_control"] = {k: (v if not isinstance(v, float) else _finite(v))
                                       for k, v in nc.items()}
        run.csv("negative_control.csv", ["k", "r", "M", "saturation_time"],
                zip(nc["k"], nc["r"], nc["M"], nc["saturation_time"]))
    return run.summary(summary, True)


def _stability_out(run: _Run, rep) -> int:
    rep.to_csv(run.out / "stability.csv", run.header)
    s = rep.summary()
    print(f"{rep.kind} experiment: passed={rep.passed} constants={s['envelope_C']}")
    return run.summary(s, rep.passed)


def cmd_stability(run: _Run) -> int:
    from .stability import ExperimentAborted, data_dependence_experiment
    cfg = run.cfg
    spec = _spec(cfg)
    pert = _spec(cfg, "experiment.perturbation", spec.domain.kind)
    try:
        rep = data_dependence_experiment(spec, pert, cfg["experiment.eps"], _solver_config(cfg),
                                         _theta(cfg), p=cfg["experiment.p"],
                                         report_times=cfg["experiment.report_times"],
                                         solver=cfg["solver.method"], jobs=cfg["experiment.jobs"])
    except ExperimentAborted as exc:
        print(f"stability aborted: {exc}", file=sys.stderr)
        return run.summary({"aborted": str(exc)}, False)
    return _stability_out(run, rep)


def cmd_domain_compare(run: _Run) -> int:
    from .stability import ExperimentAborted, domain_dependence_experiment
    cfg = run.cfg
    spec = _spec(cfg)
    try:
        twist = bi.get_twist(cfg["experiment.twist"], 1.0, spec.domain.period)
    except KeyError as exc:
        raise UsageError(exc.args[0]) from None
    try:
        rep = domain_dependence_experiment(
            spec, twist, cfg["experiment.eps"], _solver_config(cfg), _theta(cfg), q=cfg["experiment.q"],
            layout=cfg["experiment.layout"], angular_spacing=cfg["experiment.angular_spacing"],
            report_times=cfg["experiment.report_times"], solver=cfg["solver.method"],
            t_small=cfg["experiment.t_small"], jobs=cfg["experiment.jobs"],
            forcing_norm=cfg["experiment.forcing_norm"])
    except ExperimentAborted as exc:
        print(f"domain-compare aborted: {exc}", file=sys.stderr)
        return run.summary({"aborted": str(exc)}, False)
    return _stability_out(run, rep)


def cmd_time_audit(run: _Run) -> int:
    from .stability import time_continuity_audit
    cfg = run.cfg
    spec = _spec(cfg)
    scfg = _solver_config(cfg)
    traj, res = _solve(cfg, spec, scfg)
    rep = time_continuity_audit(traj, theta=_theta(cfg), t_small=cfg["experiment.t_small"],
                                q=cfg["experiment.q"])
    run.csv("time_audit.csv", ["t", "d", "envelope", "pass"], rep.rows())
    summary = {"C1": _finite(rep.C1), "C2": _finite(rep.C2), "t_small": rep.t_small,
               "max_distance": float(np.max(rep.distance))}
    passed = rep.passed and (res is None or res.converged)
    print(f"time-audit {spec.name}: passed={passed} C1={rep.C1:.4g} C2={rep.C2:.4g}")
    return run.summary(summary, passed)


HANDLERS = {"simulate": cmd_simulate, "picard": cmd_picard, "kernel-audit": cmd_kernel_audit,
            "modulus": cmd_modulus, "stability": cmd_stability, "domain-compare": cmd_domain_compare,
            "time-audit": cmd_time_audit}


# --------------------------------------------------------------------------
# entry point


def _parse_extra(tokens) -> dict:
    """``--key value`` and ``--key=value`` pairs left over by argparse."""
    out = {}
    i = 0
    while i < len(tokens):
        tok = tokens[i]
        if not tok.startswith("--") or len(tok) == 2:
            raise UsageError(f"unexpected argument {tok!r}")
        key = tok[2:]
        if "=" in key:
            key, val = key.split("=", 1)
            i += 1
        else:
            if i + 1 >= len(tokens):
                raise UsageError(f"missing value for {tok}")
            val = tokens[i + 1]
            i += 2
        out[key] = val
    return out


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="vortexlab", description="Lagrangian vortex flows and stability audits")
    ap.add_argument("--version", action="version", version=f"vortexlab {__version__}")
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="action", required=True)
    sub.add_parser("list", help="print the catalog of builtin specs, thetas and twists")
    run = sub.add_parser("run", help="run a command")
    run.add_argument("command", choices=COMMANDS)
    run.add_argument("--config", type=Path, help="config file (key = value with [sections], or JSON)")
    run.add_argument("--seed", type=int, default=None)
    run.add_argument("--out", type=Path, default=Path("out"), help="output directory (default: out)")
    run.add_argument("--set", dest="sets", action="append", default=[], metavar="KEY=VALUE",
                     help="override a config key (repeatable)")
    return ap


def _print_catalog():
    cat = bi.list_builtins()
    print("specs:")
    for s in cat["specs"]:
        print(f"  {s['name']:<24} [{s['domain']}] {s['description']}")
    print("thetas:")
    for t in cat["thetas"]:
        tags = f" [{', '.join(t['tags'])}]" if t["tags"] else ""
        print(f"  {t['name']:<24} {t['description']}{tags}")
    print("twists:")
    for t in cat["twists"]:
        print(f"  {t['name']:<24} {t['description']}")


def main(argv=None) -> int:
    ap = build_parser()
    try:
        args, extra = ap.parse_known_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_USAGE
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    if args.action == "list":
        if extra:
            print(f"error: unexpected arguments {extra}", file=sys.stderr)
            return EXIT_USAGE
        _print_catalog()
        return EXIT_OK
    try:
        file_values = {}
        if args.config is not None:
            try:
                text = args.config.read_text()
            except OSError as exc:
                raise UsageError(f"cannot read config {args.config}: {exc.strerror}") from None
            file_values = parse_config_text(text)
        overrides = {}
        for item in args.sets:
            if "=" not in item:
                raise UsageError(f"--set expects key=value, got {item!r}")
            k, v = item.split("=", 1)
            overrides[k.strip()] = v.strip()
        overrides.update(_parse_extra(extra))
        cfg = resolve_config(args.command, file_values, overrides, args.seed)
        t0 = time.perf_counter()
        status = HANDLERS[args.command](_Run(cfg, args.out))
        log.info("%s finished in %.2f s", args.command, time.perf_counter() - t0)
        return status
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except RuntimeError as exc:
        # particles leaving the domain and similar numerical breakdowns
        print(f"failed: {exc}", file=sys.stderr)
        return EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
