"""Config-driven experiment runner.

    nonlocal-mosco run experiment.yaml --out results --jobs 4
    nonlocal-mosco validate experiment.yaml
    nonlocal-mosco catalog

A config is one YAML document::

    spec_version: 1
    name: bbm_1d
    experiment: bbm_limit
    domain: {dim: 1, geometry: [0, 1], n: 8, r_trunc: 2}
    kernel: {kind: nu, base: power_law}
    alpha_sweep: [1.5, 1.9, 1.99, 1.999]
    tolerances: {quad_tol: 1.0e-8}
    seed: 0
    params: {u: {kind: linear, coef: [1.0]}}

Exit codes: 0 all assertions pass, 1 an assertion failed, 2 the config
could not be parsed or validated, 3 a numerical failure.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
import yaml

from .domains import build_domain, sample_function
from .forms import (
    FormReport,
    QuadratureError,
    _fmt,
    concentration_integral,
    diffusion_matrix,
    eval_form_full,
    eval_form_inner,
    eval_form_local,
    bump,
    seminorm_V_nu,
    smooth_approximation,
)
from .kernels import (
    KERNEL_PARAMS,
    MOLLIFIER_PARAMS,
    check_condition_E,
    check_condition_L,
    make_kernel,
    make_mollifier,
    violator_kernel,
)
from .mosco_lab import DEFAULT_ALPHA_SWEEP, SPACE_PAIRS, SolverError, mosco_sweep

SPEC_VERSION = 1
EXPERIMENTS = ("check_kernel", "bbm_limit", "diffusion_matrix", "concentration", "cross_term", "mosco", "density")
DEFAULT_TOLERANCES = {
    "tail_tol": 1e-10,
    "matrix_tol": 1e-3,
    "mosco_tol": 5e-3,
    "solver_tol": 1e-10,
    "quad_tol": 1e-8,
}
EXIT_PASS, EXIT_ASSERT, EXIT_CONFIG, EXIT_NUMERIC = 0, 1, 2, 3


class ConfigError(ValueError):
    """The config document is malformed or inconsistent."""


# ------------------------------------------------------------- config


@dataclass
class ExperimentConfig:
    name: str
    experiment: str
    domain: dict
    kernel: dict
    alpha_sweep: tuple
    tolerances: dict
    seed: int = 0
    output: Optional[str] = None
    params: dict = field(default_factory=dict)
    spec_version: int = SPEC_VERSION

    def as_dict(self) -> dict:
        return {
            "spec_version": self.spec_version,
            "name": self.name,
            "experiment": self.experiment,
            "domain": self.domain,
            "kernel": self.kernel,
            "alpha_sweep": list(self.alpha_sweep),
            "tolerances": self.tolerances,
            "seed": self.seed,
            "output": self.output,
            "params": self.params,
        }


_KNOWN_KEYS = {"spec_version", "name", "experiment", "domain", "kernel", "alpha_sweep", "tolerances", "seed", "output", "params"}


def parse_config(text: str, seed: Optional[int] = None) -> ExperimentConfig:
    """Parse and validate a YAML config; raises :class:`ConfigError`."""
    try:
        doc = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ConfigError(f"YAML parse error: {exc}") from exc
    if not isinstance(doc, dict):
        raise ConfigError("config must be a mapping")
    unknown = set(doc) - _KNOWN_KEYS
    if unknown:
        raise ConfigError(f"unknown top-level keys: {sorted(unknown)}")
    if doc.get("spec_version") != SPEC_VERSION:
        raise ConfigError(f"spec_version must be {SPEC_VERSION}, got {doc.get('spec_version')!r}")
    exp = doc.get("experiment")
    if exp not in EXPERIMENTS:
        raise ConfigError(f"experiment must be one of {list(EXPERIMENTS)}, got {exp!r}")
    name = str(doc.get("name", exp))
    if not name or any(c in name for c in "/\\"):
        raise ConfigError("name must be a non-empty file stem")
    sweep = doc.get("alpha_sweep", list(DEFAULT_ALPHA_SWEEP))
    try:
        sweep = tuple(float(a) for a in sweep)
    except (TypeError, ValueError) as exc:
        raise ConfigError("alpha_sweep must be a list of numbers") from exc
    if not sweep or any(not 0 < a < 2 for a in sweep) or any(b <= a for a, b in zip(sweep, sweep[1:])):
        raise ConfigError("alpha_sweep must be strictly increasing inside (0, 2)")
    tol = dict(DEFAULT_TOLERANCES)
    given = doc.get("tolerances") or {}
    if not isinstance(given, dict) or set(given) - set(tol):
        raise ConfigError(f"tolerances must be a mapping with keys from {sorted(tol)}")
    for k, v in given.items():
        try:
            tol[k] = float(v)
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"tolerance {k} is not a number") from exc
    if any(not (v > 0 and math.isfinite(v)) for v in tol.values()):
        raise ConfigError("all tolerances must be positive")
    s = doc.get("seed", 0) if seed is None else seed
    if not isinstance(s, int) or isinstance(s, bool) or s < 0:
        raise ConfigError("seed must be a non-negative integer")
    for key in ("domain", "kernel", "params"):
        if doc.get(key) is not None and not isinstance(doc[key], dict):
            raise ConfigError(f"{key} must be a mapping")
    domain = doc.get("domain") or {}
    if exp != "concentration" and not domain:
        raise ConfigError("domain is required")
    kernel = doc.get("kernel") or {}
    if not kernel:
        raise ConfigError("kernel is required")
    return ExperimentConfig(
        name, exp, domain, kernel, sweep, tol, s, doc.get("output"), doc.get("params") or {}, SPEC_VERSION
    )


def _setup(fn, *args, **kw):
    """Build config-derived objects; their ValueErrors are config errors."""
    try:
        return fn(*args, **kw)
    except ConfigError:
        raise
    except (ValueError, TypeError, KeyError) as exc:
        raise ConfigError(f"{type(exc).__name__}: {exc}") from exc


def _dim(cfg: ExperimentConfig) -> int:
    return int(cfg.domain.get("dim", cfg.kernel.get("d", 1)))


def build_kernel(cfg: ExperimentConfig):
    spec = dict(cfg.kernel)
    kind = spec.pop("kind", None)
    d = int(spec.pop("d", _dim(cfg)))
    if kind == "violator":
        base = spec.pop("base", "power_law")
        base = make_mollifier(base, d=d) if isinstance(base, str) else make_mollifier(base.pop("id"), d=d, **base)
        return violator_kernel(base, **spec)
    if kind == "mollifier":
        raise ConfigError("use kernel.kind = nu with a base family for mollifier experiments")
    return make_kernel(kind, seed=cfg.seed, d=d, **spec)


def build_family(cfg: ExperimentConfig):
    base = cfg.kernel.get("base", "power_law")
    d = int(cfg.kernel.get("d", cfg.domain.get("dim", 1)))
    if isinstance(base, dict):
        b = dict(base)
        return make_mollifier(b.pop("id"), d=d, **b)
    return make_mollifier(base, d=d)


def test_function(spec: dict, d: int, seed: int) -> Callable:
    """Closed-form test functions addressable from a config."""
    kind = spec.get("kind", "linear")
    if kind == "linear":
        c = np.atleast_1d(np.asarray(spec.get("coef", [1.0] * d), dtype=float))
        if d == 1:
            return lambda x: c[0] * x
        return lambda x: x @ c
    if kind == "constant":
        v = float(spec.get("value", 1.0))
        return lambda x: np.full(len(x), v)
    if kind == "bump":
        ctr = np.atleast_1d(np.asarray(spec.get("center", [0.5] * d), dtype=float))
        rad = float(spec.get("radius", 0.3))
        if d == 1:
            return lambda x: bump((x - ctr[0]) / rad)
        return lambda x: bump(np.linalg.norm(x - ctr, axis=1) / rad)
    if kind == "indicator":
        lo, hi = float(spec.get("lo", 0.0)), float(spec.get("hi", 0.5))
        if d == 1:
            return lambda x: ((x > lo) & (x < hi)).astype(float)
        return lambda x: ((x[:, 0] > lo) & (x[:, 0] < hi)).astype(float)
    if kind == "random":
        rng = np.random.default_rng(seed)
        k = rng.normal(size=(3, d))
        a = rng.normal(size=3)
        if d == 1:
            return lambda x: np.sin(np.outer(x, k[:, 0])) @ a
        return lambda x: np.sin(x @ k.T) @ a
    raise ConfigError(f"unknown test function kind {kind!r}")


# --------------------------------------------------------- assertions


@dataclass
class Outcome:
    columns: tuple
    rows: list
    assertions: list = field(default_factory=list)
    extra: dict = field(default_factory=dict)

    def check(self, aid: str, passed: bool, value, tolerance, description: str):
        self.assertions.append(
            {
                "id": aid,
                "passed": bool(passed),
                "value": _jsonable(value),
                "tolerance": _jsonable(tolerance),
                "description": description,
            }
        )


def _jsonable(v):
    if isinstance(v, (np.floating, float)):
        v = float(v)
        return v if math.isfinite(v) else str(v)
    if isinstance(v, (np.integer,)):
        return int(v)
    if isinstance(v, (np.ndarray, list, tuple)):
        return [_jsonable(x) for x in v]
    if isinstance(v, dict):
        return {k: _jsonable(x) for k, x in v.items()}
    return v


def _strictly_decreasing(vals) -> bool:
    return all(b < a for a, b in zip(vals[:-1], vals[1:]))


# -------------------------------------------------------- experiments


def _exp_check_kernel(cfg: ExperimentConfig, jobs: int) -> Outcome:
    f = _setup(build_kernel, cfg)
    out = Outcome(("alpha", "holds", "worst_ratio", "min_ratio", "max_ratio", "lam", "witness_x", "witness_h"), [])
    for a in cfg.alpha_sweep:
        r = check_condition_E(f, a)
        wx, wh = ("", "") if r.witness is None else (
            " ".join(_fmt(t) for t in np.ravel(r.witness[0])),
            " ".join(_fmt(t) for t in np.ravel(r.witness[1])),
        )
        out.rows.append([_fmt(a), str(r.holds).lower(), _fmt(r.worst_ratio), _fmt(r.min_ratio), _fmt(r.max_ratio), _fmt(r.lam), wx, wh])
        out.check(f"E@{a}", r.holds, r.worst_ratio, r.lam, "sampled ratio J/nu stays in [1/lam, lam]")
        if r.witness is not None:
            out.extra.setdefault("witnesses", []).append({"alpha": a, "x": _jsonable(np.ravel(r.witness[0])), "h": _jsonable(np.ravel(r.witness[1]))})
    delta = cfg.params.get("delta")
    if delta is not None:
        rl = check_condition_L(f, float(delta), cfg.alpha_sweep)
        out.extra["condition_L"] = {"values": _jsonable(rl.values), "trend": rl.trend}
        out.check("L.trend", rl.trend in ("decreasing", "zero", "non-increasing"), rl.trend, None, "far-field mass does not grow along the sweep")
    return out


def _exp_bbm_limit(cfg: ExperimentConfig, jobs: int) -> Outcome:
    tol = cfg.tolerances
    f = _setup(build_kernel, cfg)
    dom = _setup(build_domain, {**cfg.domain, "tail_tol": tol["tail_tol"]}, f, cfg.alpha_sweep)
    uspec = cfg.params.get("u", {"kind": "linear"})
    u = sample_function(dom, _setup(test_function, uspec, dom.dim, cfg.seed))
    form = cfg.params.get("form", "inner")
    x0 = 0.5 * (dom.omega_lo + dom.omega_hi)
    A = diffusion_matrix(f, x0, float(cfg.params.get("delta", 0.5)), cfg.alpha_sweep, tol["matrix_tol"], delta_check=0).entries
    local = eval_form_local(A, u, u)
    out = Outcome(FormReport.CSV_COLUMNS + ("local_energy", "gap"), [])
    gaps = []
    closed = _bbm_closed_form(cfg, dom, f, uspec)
    for a in cfg.alpha_sweep:
        ev = eval_form_inner if form == "inner" else eval_form_full
        rep = ev(f, a, u, u, jobs=jobs, quad_tol=tol["quad_tol"])
        gaps.append(abs(rep.value - local))
        out.rows.append(rep.csv_row(cfg.name) + [_fmt(local), _fmt(gaps[-1])])
        if closed is not None:
            ref = closed(a)
            rel = abs(rep.value - ref) / abs(ref)
            out.check(f"closed_form@{a}", rel <= 1e-6, rel, 1e-6, "relative error against 1-(2-a)/(3-a)")
    final_tol = float(cfg.params.get("final_tol", 1e-3))
    out.check("gap.decreasing", _strictly_decreasing(gaps), gaps, None, "gap to the local energy decreases along the sweep")
    out.check("gap.final", gaps[-1] <= final_tol, gaps[-1], final_tol, "final gap to the local energy")
    out.extra["local_energy"] = local
    return out


def _bbm_closed_form(cfg, dom, f, uspec):
    # E_(0,1)(c x, c x) for nu^alpha over the power-law family
    if dom.dim != 1 or f.kind != "nu" or f.base.family_id != "power_law" or uspec.get("kind", "linear") != "linear":
        return None
    if not (np.allclose(dom.omega_lo, 0.0) and np.allclose(dom.omega_hi, 1.0)):
        return None
    c = float(np.atleast_1d(uspec.get("coef", [1.0]))[0])
    return lambda a: c * c * (1.0 - (2.0 - a) / (3.0 - a))


def _exp_diffusion_matrix(cfg: ExperimentConfig, jobs: int) -> Outcome:
    tol = cfg.tolerances
    f = _setup(build_kernel, cfg)
    d = f.d
    x = np.asarray(cfg.params.get("x", [0.5] * d), dtype=float)
    delta = float(cfg.params.get("delta", 0.5))
    dm = diffusion_matrix(f, x, delta, cfg.alpha_sweep, tol["matrix_tol"])
    names = [f"a{i + 1}{j + 1}" for i in range(d) for j in range(d)]
    out = Outcome(("alpha",) + tuple(names), [])
    for a, m in zip(dm.alphas, dm.matrices):
        out.rows.append([_fmt(a)] + [_fmt(v) for v in np.ravel(m)])
    out.rows.append(["limit"] + [_fmt(v) for v in np.ravel(dm.entries)])
    if cfg.params.get("assert_converged", True):
        out.check("converged", dm.converged, dm.cauchy_gaps[-1] if dm.cauchy_gaps else None, tol["matrix_tol"], "last two iterates agree")
    else:
        out.extra["cauchy_gaps"] = _jsonable(dm.cauchy_gaps)
    agree_tol = float(cfg.params.get("delta_tol", tol["matrix_tol"]))
    out.check("delta_independent", dm.delta_agreement <= agree_tol, dm.delta_agreement, agree_tol, "A at delta vs delta/2")
    target = cfg.params.get("target")
    if target is not None:
        T = np.eye(d) if target == "identity" else np.atleast_2d(np.asarray(target, dtype=float))
        err = float(np.max(np.abs(dm.entries - T)))
        out.check("target", err <= tol["matrix_tol"], err, tol["matrix_tol"], "max-norm distance of A to the target matrix")
    if f.kind == "perturbed":
        ev = dm.eigenvalues()
        lo, hi = 1.0 / (d * f.lam) - tol["matrix_tol"], f.lam / d + tol["matrix_tol"]
        ok = bool(np.all((ev >= lo) & (ev <= hi)))
        out.check("ellipticity", ok, ev, [lo, hi], "eigenvalues of A inside [1/(d lam), lam/d]")
    out.extra["A"] = _jsonable(dm.entries)
    return out


def _exp_concentration(cfg: ExperimentConfig, jobs: int) -> Outcome:
    fam = _setup(build_family, cfg)
    betas = [float(b) for b in cfg.params.get("betas", [0.0, 0.5, 1.0, 2.0])]
    eps = [float(e) for e in cfg.params.get("eps_sweep", [0.1, 0.01])]
    R = float(cfg.params.get("R", 1.0))
    out = Outcome(("beta", "eps", "value", "closed_form"), [])
    for b in betas:
        vals = concentration_integral(fam, b, R, eps)
        for e, v in zip(eps, vals):
            ref = e / (b + e) if (fam.family_id == "power_law" and R >= 1.0) else math.nan
            out.rows.append([_fmt(b), _fmt(e), _fmt(v), _fmt(ref)])
            if b == 0.0:
                out.check(f"mass@eps={e}", abs(v - 1.0) <= 1e-10, v, 1e-10, "beta = 0 integral equals 1")
            elif not math.isnan(ref):
                out.check(f"closed_form@beta={b},eps={e}", abs(v - ref) <= 1e-8, abs(v - ref), 1e-8, "eps/(beta+eps)")
        if b > 0:
            order = np.argsort(eps)[::-1]
            seq = [vals[i] for i in order]
            out.check(f"decreasing@beta={b}", _strictly_decreasing(seq), seq, None, "moment shrinks as eps decreases")
    return out


def _exp_cross_term(cfg: ExperimentConfig, jobs: int) -> Outcome:
    tol = cfg.tolerances
    f = _setup(build_kernel, cfg)
    dom = _setup(build_domain, {**cfg.domain, "tail_tol": tol["tail_tol"]}, f, cfg.alpha_sweep)
    u = sample_function(dom, _setup(test_function, cfg.params.get("u", {"kind": "bump"}), dom.dim, cfg.seed))
    out = Outcome(FormReport.CSV_COLUMNS, [])
    cross = []
    for a in cfg.alpha_sweep:
        rep = eval_form_full(f, a, u, u, jobs=jobs, quad_tol=tol["quad_tol"])
        cross.append(rep.cross)
        out.rows.append(rep.csv_row(cfg.name))
    final_tol = float(cfg.params.get("final_tol", 1e-2))
    out.check("cross.decreasing", _strictly_decreasing(cross), cross, None, "Omega x Omega^c part decreases")
    out.check("cross.final", cross[-1] < final_tol, cross[-1], final_tol, "final cross term")
    return out


def _exp_mosco(cfg: ExperimentConfig, jobs: int) -> Outcome:
    tol = cfg.tolerances
    f = _setup(build_kernel, cfg)
    dom = _setup(build_domain, {**cfg.domain, "tail_tol": tol["tail_tol"]}, f, cfg.alpha_sweep)
    src = sample_function(dom, _setup(test_function, cfg.params.get("f", {"kind": "constant", "value": 1.0}), dom.dim, cfg.seed))
    pair = cfg.params.get("pair", "dirichlet")
    if pair not in SPACE_PAIRS:
        raise ConfigError(f"unknown pair {pair!r}")
    rep = mosco_sweep(
        src,
        f,
        cfg.alpha_sweep,
        pair=pair,
        lam=float(cfg.params.get("lam", 1.0)),
        A=cfg.params.get("A"),
        mosco_tol=tol["mosco_tol"],
        solver_tol=tol["solver_tol"],
        matrix_tol=tol["matrix_tol"],
        jobs=jobs,
    )
    if rep.error is not None:
        raise SolverError(rep.error)
    out = Outcome(rep.CSV_COLUMNS, rep.csv_rows())
    out.check("distance.decreasing", all(rep.decreasing_flags), rep.l2_distances, None, "L2 distance to the local resolvent decreases")
    out.check("distance.final", rep.within_tol, rep.l2_distances[-1], tol["mosco_tol"], "final L2 distance")
    out.extra["A"] = _jsonable(rep.A)
    return out


def _exp_density(cfg: ExperimentConfig, jobs: int) -> Outcome:
    tol = cfg.tolerances
    f = _setup(build_kernel, cfg)
    alpha = float(cfg.params.get("alpha", cfg.alpha_sweep[0]))
    dom = _setup(build_domain, {**cfg.domain, "tail_tol": tol["tail_tol"]}, f, (alpha,))
    basis = cfg.params.get("basis", "constant")
    u = _setup(sample_function, dom, test_function(cfg.params.get("u", {"kind": "indicator"}), dom.dim, cfg.seed), basis=basis)
    eps = [float(e) for e in cfg.params.get("eps_sweep", [0.2, 0.1, 0.05, 0.025])]
    out = Outcome(("eps", "seminorm"), [])
    vals = []
    for e in eps:
        w = smooth_approximation(u, e) - u
        vals.append(seminorm_V_nu((f, alpha), w, jobs=jobs))
        out.rows.append([_fmt(e), _fmt(vals[-1])])
    out.check("seminorm.decreasing", _strictly_decreasing(vals), vals, None, "V_nu seminorm of the smoothing error decreases with eps")
    return out


_RUNNERS = {
    "check_kernel": _exp_check_kernel,
    "bbm_limit": _exp_bbm_limit,
    "diffusion_matrix": _exp_diffusion_matrix,
    "concentration": _exp_concentration,
    "cross_term": _exp_cross_term,
    "mosco": _exp_mosco,
    "density": _exp_density,
}


# -------------------------------------------------------------- run


def write_csv(path: str, columns, rows) -> None:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    w.writerows(rows)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(buf.getvalue())


def run(cfg: ExperimentConfig, out_dir: Optional[str] = None, jobs: int = 1) -> int:
    """Run one experiment, write ``<name>.csv`` and ``<name>.summary.json``; return the exit code."""
    out_dir = out_dir or cfg.output or "."
    os.makedirs(out_dir, exist_ok=True)
    summary = {"name": cfg.name, "experiment": cfg.experiment, "spec_version": SPEC_VERSION, "seed": cfg.seed, "config": cfg.as_dict()}
    outcome = None
    try:
        with np.errstate(all="ignore"):
            outcome = _RUNNERS[cfg.experiment](cfg, jobs)
    except ConfigError as exc:
        code, reason = EXIT_CONFIG, {"kind": "config", "message": str(exc)}
    except (QuadratureError, SolverError, ArithmeticError, np.linalg.LinAlgError, ValueError) as exc:
        code, reason = EXIT_NUMERIC, {"kind": "numerical", "message": f"{type(exc).__name__}: {exc}"}
    else:
        failed = [a["id"] for a in outcome.assertions if not a["passed"]]
        code = EXIT_ASSERT if failed else EXIT_PASS
        reason = {"kind": "assertion", "failed": failed} if failed else None
    if outcome is not None:
        write_csv(os.path.join(out_dir, f"{cfg.name}.csv"), outcome.columns, outcome.rows)
        summary["assertions"] = outcome.assertions
        summary.update(_jsonable(outcome.extra))
    summary["status"] = {0: "pass", 1: "fail", 2: "config_error", 3: "numerical_error"}[code]
    summary["exit_code"] = code
    summary["reason"] = reason
    with open(os.path.join(out_dir, f"{cfg.name}.summary.json"), "w", encoding="utf-8") as fh:
        json.dump(_jsonable(summary), fh, indent=2, sort_keys=True)
        fh.write("\n")
    return code


def list_catalog() -> str:
    """Sorted listing of mollifier families and kernel kinds with their parameters."""
    lines = ["mollifiers:"]
    for fid in sorted(MOLLIFIER_PARAMS):
        params = MOLLIFIER_PARAMS[fid]
        desc = ", ".join(k if k == "d" else f"{k}={params[k]}" for k in sorted(params))
        lines.append(f"  {fid}: {{{desc}}}")
    lines.append("kernels:")
    for kind in sorted(KERNEL_PARAMS):
        params = KERNEL_PARAMS[kind]
        desc = ", ".join(f"{k}={params[k]}" for k in sorted(params))
        lines.append(f"  {kind}: {{{desc}}}" if desc else f"  {kind}: {{}} (no extra params)")
    lines.append("  violator: {base=power_law, lam=2.0, power=-0.5}")
    lines.append("experiments:")
    lines.extend(f"  {e}" for e in sorted(EXPERIMENTS))
    return "\n".join(lines) + "\n"


def _load(path: str, seed: Optional[int]) -> ExperimentConfig:
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc}") from exc
    return parse_config(text, seed)


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(prog="nonlocal-mosco", description=__doc__.split("\n")[0])
    sub = ap.add_subparsers(dest="cmd", required=True)
    p_run = sub.add_parser("run", help="run an experiment config")
    p_run.add_argument("config")
    p_run.add_argument("--jobs", type=int, default=1, help="cap on worker threads")
    p_run.add_argument("--out", default=None, help="output directory")
    p_run.add_argument("--seed", type=int, default=None, help="override the config seed")
    p_val = sub.add_parser("validate", help="parse and validate a config")
    p_val.add_argument("config")
    p_val.add_argument("--seed", type=int, default=None)
    sub.add_parser("catalog", help="list kernel and mollifier families")
    args = ap.parse_args(argv)

    if args.cmd == "catalog":
        sys.stdout.write(list_catalog())
        return EXIT_PASS
    try:
        cfg = _load(args.config, args.seed)
    except ConfigError as exc:
        print(json.dumps({"status": "config_error", "exit_code": EXIT_CONFIG, "reason": str(exc)}), file=sys.stderr)
        return EXIT_CONFIG
    if args.cmd == "validate":
        print(json.dumps(cfg.as_dict(), sort_keys=True))
        return EXIT_PASS
    if args.jobs < 1:
        print("--jobs must be at least 1", file=sys.stderr)
        return EXIT_CONFIG
    code = run(cfg, args.out, args.jobs)
    print(f"{cfg.name}: {['pass', 'fail', 'config_error', 'numerical_error'][code]} (exit {code})")
    return code


if __name__ == "__main__":
    sys.exit(main())
