"""Command-line interface.

Subcommands surface each layer of the library: ``pvalue`` and ``stat``
for single evaluations, ``ci`` for test inversion, ``diagnose`` for the
pathology scanners, ``coverage`` for enumeration-based operating
characteristics, and ``compare`` for the five methods side by side.

Two sign conventions circulate for the treatment-minus-control
difference in the noninferiority literature, and mixing them up flips
the hypothesis.  Reports are therefore convention-tagged: the default
``--convention delta`` uses delta = p_C - p_T (margin boundary at
``+margin``), while ``--convention cap`` uses the internal
d = p_T - p_C (boundary at ``-margin``).  Any endpoint printed under
one convention is exactly the negation of the endpoint under the
other.

Exit codes: 0 success, 1 usage error (bad flags or values), 2 domain
error from the computational layer, 3 degenerate EC calibration (the
exact p-value at the boundary is 0 or 1, so no finite correction
exists).

JSON reports carry ``"schema": "riskdiff/1"`` and serialize with
sorted keys, so parsing and re-serializing a report is byte-stable.
Infinite statistic values follow Python's JSON extension
(``Infinity``).  CSV output is UTF-8 with a header row and LF line
endings; text output rounds to 6 significant digits.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from dataclasses import dataclass

import numpy as np

from .ci import (DEFAULT_SCAN_POINTS, invert_asymptotic, invert_cz_exact,
                 invert_ec, noninferiority_decision)
from .coverage import coverage_surface
from .diagnostics import (liberal_conservative_map, scan_ci_nesting,
                          scan_margin_coherence, scan_pexact_monotonicity,
                          scan_zec_monotonicity)
from .errors import DegenerateCalibrationError, DomainError, UsageError
from .ec import z_ec
from .exact import DEFAULT_GRID_POINTS, DEFAULT_REFINE_TOL, exact_pvalue
from .kernel import Outcome, TrialDesign, normal_sf
from .score import z_mee, z_mn, z_wald

__all__ = ["RunConfig", "main"]

SCHEMA = "riskdiff/1"

_STAT_FNS = {"mee": z_mee, "mn": z_mn, "wald": z_wald}


@dataclass(frozen=True)
class RunConfig:
    """Validated run-wide settings shared by all subcommands."""

    convention: str = "delta"
    grid_points: int = DEFAULT_GRID_POINTS
    refine_tol: float = DEFAULT_REFINE_TOL
    scan_points: int = DEFAULT_SCAN_POINTS
    alpha: float = 0.05
    margin: float | None = None
    output_format: str = "text"
    output_path: str | None = None
    threads: int = 0


class _Parser(argparse.ArgumentParser):
    """Argument parser whose failures map to exit code 1."""

    def error(self, message):
        raise UsageError(message)


# ---------------------------------------------------------------------------
# argument validation


def _require(args, *names):
    for name in names:
        if getattr(args, name, None) is None:
            raise UsageError(f"--{name} is required for this command")


def _design(args) -> TrialDesign:
    _require(args, "nt", "nc")
    if args.nt < 1 or args.nc < 1:
        raise UsageError(f"group sizes must be >= 1, got ({args.nt}, {args.nc})")
    return TrialDesign(args.nt, args.nc)


def _outcome(args, design: TrialDesign) -> Outcome:
    _require(args, "xt", "xc")
    if not (0 <= args.xt <= design.n_t and 0 <= args.xc <= design.n_c):
        raise UsageError(
            f"counts must satisfy 0 <= xt <= nt and 0 <= xc <= nc, "
            f"got xt={args.xt}, xc={args.xc}"
        )
    return Outcome(args.xt, args.xc)


def _margin(args, allow_zero: bool = False) -> float:
    _require(args, "margin")
    m = args.margin
    lo_ok = m >= 0.0 if allow_zero else m > 0.0
    if not (lo_ok and m < 1.0) or math.isnan(m):
        bound = "[0, 1)" if allow_zero else "(0, 1)"
        raise UsageError(f"--margin must lie in {bound}, got {m}")
    return float(m)


def _alpha(args) -> float:
    a = args.alpha
    if not (0.0 < a < 1.0) or math.isnan(a):
        raise UsageError(f"--alpha must lie in (0, 1), got {a}")
    return float(a)


def _config(args) -> RunConfig:
    if args.grid_points < 3:
        raise UsageError(f"--grid-points must be >= 3, got {args.grid_points}")
    if not (args.refine_tol > 0.0):
        raise UsageError(f"--refine-tol must be positive, got {args.refine_tol}")
    if args.scan_points < 11:
        raise UsageError(f"--scan-points must be >= 11, got {args.scan_points}")
    if args.threads < 0:
        raise UsageError(f"--threads must be >= 0, got {args.threads}")
    return RunConfig(convention=args.convention, grid_points=args.grid_points,
                     refine_tol=args.refine_tol, scan_points=args.scan_points,
                     alpha=args.alpha, margin=args.margin,
                     output_format=args.format, output_path=args.output,
                     threads=args.threads)


# ---------------------------------------------------------------------------
# convention-aware serialization


def _iv(interval, conv):
    """One (lo, hi) cap-scale interval under the requested convention."""
    if interval is None:
        return None
    lo, hi = interval
    if conv == "cap":
        return [float(lo), float(hi)]
    return [-float(hi), -float(lo)]


def _ivs(intervals, conv):
    out = [_iv(iv, conv) for iv in intervals]
    if conv == "delta":
        out.reverse()
    return out


def _fmt(v) -> str:
    if v is None:
        return "-"
    if isinstance(v, bool):
        return str(v)
    if isinstance(v, float):
        if math.isnan(v):
            return "nan"
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        return f"{v:.6g}"
    return str(v)


def _fmt_iv(interval) -> str:
    if interval is None:
        return "(empty)"
    return f"({_fmt(interval[0])}, {_fmt(interval[1])})"


def _confidence_fields(cs, conv) -> dict:
    return {
        "components": _ivs(cs.components, conv),
        "hull": _iv(cs.hull, conv),
        "gaps": _ivs(cs.gaps, conv),
        "width": cs.width,
    }


def _cert_json(cert, conv) -> dict:
    """Certificate with difference-scale witness fields mapped to the
    requested convention (grids reverse so they stay increasing)."""
    w = dict(cert.witness)
    if cert.kind == "zec_nonmonotone" and conv == "cap":
        w["delta_points"] = [-d for d in reversed(w["delta_points"])]
        w["zec_values"] = list(reversed(w["zec_values"]))
    elif cert.kind == "pexact_nonmonotone" and conv == "delta":
        w["delta_caps"] = [-d for d in reversed(w["delta_caps"])]
        w["p_values"] = list(reversed(w["p_values"]))
    elif cert.kind == "nesting_failure" and conv == "delta":
        w["delta_cap"] = -w["delta_cap"]
    out = {
        "kind": cert.kind,
        "n_t": cert.design.n_t, "n_c": cert.design.n_c,
        "x_t": cert.outcome.x_t, "x_c": cert.outcome.x_c,
        "witness": {k: (list(v) if isinstance(v, (tuple, list)) else v)
                    for k, v in w.items()},
        "tolerance_used": cert.tolerance_used,
        "verified": cert.verify(),
    }
    return out


def _emit(cfg: RunConfig, report: dict, rows, text_lines) -> None:
    if cfg.output_format == "json":
        payload = json.dumps(report, sort_keys=True, indent=2) + "\n"
    elif cfg.output_format == "csv":
        header = list(rows[0].keys()) if rows else []
        lines = [",".join(header)]
        for row in rows:
            lines.append(",".join(_csv_field(row[k]) for k in header))
        payload = "\n".join(lines) + "\n"
    else:
        payload = "\n".join(text_lines) + "\n"
    if cfg.output_path:
        with open(cfg.output_path, "w", encoding="utf-8", newline="") as fh:
            fh.write(payload)
    else:
        sys.stdout.write(payload)


def _csv_field(v) -> str:
    if v is None:
        return ""
    if isinstance(v, str):
        if any(c in v for c in ',"\n'):
            return '"' + v.replace('"', '""') + '"'
        return v
    if isinstance(v, bool):
        return str(v)
    return repr(v) if isinstance(v, float) else str(v)


def _base_report(command: str, cfg: RunConfig) -> dict:
    return {"schema": SCHEMA, "command": command,
            "convention": cfg.convention}


def _boundary_text(cfg: RunConfig, m: float) -> str:
    if cfg.convention == "delta":
        return f"delta = {_fmt(m)}"
    return f"d = {_fmt(-m)}"


# ---------------------------------------------------------------------------
# subcommands


def cmd_pvalue(args) -> int:
    cfg = _config(args)
    design = _design(args)
    outcome = _outcome(args, design)
    method = args.method or "chan"
    if method not in ("chan", "mee", "mn", "wald", "ec"):
        raise UsageError(f"--method must be chan, mee, mn, wald or ec for "
                         f"pvalue; got {method!r}")
    m = _margin(args, allow_zero=(method != "ec"))
    report = _base_report("pvalue", cfg)
    report.update({"method": method, "margin": m,
                   "n_t": design.n_t, "n_c": design.n_c,
                   "x_t": outcome.x_t, "x_c": outcome.x_c,
                   "alternative": "larger"})
    if method in ("chan", "ec"):
        res = exact_pvalue(design, outcome, -m, grid_points=cfg.grid_points,
                           refine_tol=cfg.refine_tol)
        report.update({"p_value": res.value,
                       "nuisance_argmax": res.argmax_p_c,
                       "grid_points": cfg.grid_points})
    else:
        z = _STAT_FNS[method](design, outcome, -m)
        p = 1.0 if z.degenerate else normal_sf(z.value)
        report.update({"p_value": p, "nuisance_argmax": None,
                       "grid_points": None})
    text = [f"method: {method}",
            f"null boundary: {_boundary_text(cfg, m)}",
            f"p-value: {_fmt(report['p_value'])}"]
    if report["nuisance_argmax"] is not None:
        text.append(f"nuisance argmax: {_fmt(report['nuisance_argmax'])}")
    rows = [{k: report[k] for k in
             ("method", "margin", "p_value", "nuisance_argmax",
              "grid_points", "convention")}]
    _emit(cfg, report, rows, text)
    return 0


def cmd_stat(args) -> int:
    cfg = _config(args)
    design = _design(args)
    outcome = _outcome(args, design)
    method = args.method or "mee"
    if method not in ("mee", "mn", "wald", "ec"):
        raise UsageError(f"--method must be mee, mn, wald or ec for stat; "
                         f"got {method!r}")
    m = _margin(args, allow_zero=(method != "ec"))
    if method == "ec":
        z = z_ec(design, outcome, m, -m, grid_points=cfg.grid_points,
                 refine_tol=cfg.refine_tol)
    else:
        z = _STAT_FNS[method](design, outcome, -m)
    report = _base_report("stat", cfg)
    report.update({"method": method, "margin": m,
                   "statistic": z.value, "degenerate": z.degenerate,
                   "n_t": design.n_t, "n_c": design.n_c,
                   "x_t": outcome.x_t, "x_c": outcome.x_c})
    text = [f"method: {method}",
            f"evaluated at: {_boundary_text(cfg, m)}",
            f"statistic: {_fmt(z.value)}"]
    if z.degenerate:
        text.append("degenerate: True")
    rows = [{k: report[k] for k in
             ("method", "margin", "statistic", "degenerate", "convention")}]
    _emit(cfg, report, rows, text)
    return 0


def _invert(method, design, outcome, alpha, margin, cfg):
    if method in ("wald", "mee", "mn"):
        return invert_asymptotic(method, design, outcome, alpha,
                                 scan_points=cfg.scan_points)
    if method == "cz_exact":
        return invert_cz_exact(design, outcome, alpha,
                               scan_points=cfg.scan_points,
                               grid_points=cfg.grid_points,
                               refine_tol=cfg.refine_tol)
    return invert_ec(design, outcome, margin, alpha,
                     scan_points=cfg.scan_points,
                     grid_points=cfg.grid_points,
                     refine_tol=cfg.refine_tol)


def cmd_ci(args) -> int:
    cfg = _config(args)
    design = _design(args)
    outcome = _outcome(args, design)
    method = args.method or "mee"
    if method not in ("wald", "mee", "mn", "cz_exact", "ec"):
        raise UsageError(f"--method must be wald, mee, mn, cz_exact or ec "
                         f"for ci; got {method!r}")
    alpha = _alpha(args)
    m = _margin(args) if (method == "ec" or args.margin is not None) else None
    cs = _invert(method, design, outcome, alpha, m, cfg)
    report = _base_report("ci", cfg)
    report.update({"method": method, "alpha": alpha, "margin": m,
                   "n_t": design.n_t, "n_c": design.n_c,
                   "x_t": outcome.x_t, "x_c": outcome.x_c})
    report.update(_confidence_fields(cs, cfg.convention))
    if cs.boundary_consistent is not None:
        report["boundary_consistent"] = cs.boundary_consistent
    if m is not None:
        reject, p_used = noninferiority_decision(method, design, outcome, m,
                                                 alpha)
        report.update({"reject_noninferiority": reject, "p_used": p_used})
    scale = cfg.convention
    text = [f"method: {method}   confidence: {_fmt(1 - alpha)}",
            f"components ({scale}): "
            + (", ".join(_fmt_iv(iv) for iv in report["components"])
               or "(empty)"),
            f"hull ({scale}): {_fmt_iv(report['hull'])}"]
    if report["gaps"]:
        text.append(f"gaps ({scale}): "
                    + ", ".join(_fmt_iv(iv) for iv in report["gaps"]))
    if m is not None:
        text.append(f"noninferiority at {_boundary_text(cfg, m)}: "
                    f"reject={report['reject_noninferiority']} "
                    f"(p={_fmt(report['p_used'])})")
    hull = report["hull"]
    rows = [{"method": method, "alpha": alpha, "margin": m,
             "lower": None if hull is None else hull[0],
             "upper": None if hull is None else hull[1],
             "n_components": len(cs.components),
             "convention": cfg.convention}]
    _emit(cfg, report, rows, text)
    return 0


def _window(args, default_lo, default_hi):
    if args.window is None:
        return default_lo, default_hi
    lo, hi = args.window
    if not (lo < hi):
        raise UsageError(f"--window needs LO < HI, got ({lo}, {hi})")
    return float(lo), float(hi)


def cmd_diagnose(args) -> int:
    cfg = _config(args)
    design = _design(args)
    mode = args.mode
    report = _base_report("diagnose", cfg)
    report["mode"] = mode
    if mode == "map":
        m = _margin(args)
        lcmap = liberal_conservative_map(design, -m,
                                         grid_points=cfg.grid_points,
                                         refine_tol=cfg.refine_tol)
        rows = [{"x_t": r.outcome.x_t, "x_c": r.outcome.x_c,
                 "p_asy": r.p_asy, "p_exact": r.p_exact,
                 "relation": r.relation} for r in lcmap.rows]
        report.update({"margin": m, "n_t": design.n_t, "n_c": design.n_c,
                       "rows": rows,
                       "liberal_fraction": lcmap.liberal_fraction})
        text = [f"asymptotic vs exact at {_boundary_text(cfg, m)} "
                f"on ({design.n_t}, {design.n_c}):"]
        for r in lcmap.rows:
            text.append(f"  ({r.outcome.x_t}, {r.outcome.x_c})  "
                        f"p_asy={_fmt(r.p_asy)}  p_exact={_fmt(r.p_exact)}  "
                        f"{r.relation}")
        text.append(f"liberal fraction: {_fmt(lcmap.liberal_fraction)}")
        _emit(cfg, report, rows, text)
        return 0

    outcome = _outcome(args, design)
    if mode == "zec":
        m = _margin(args)
        lo, hi = _window(args, -0.9999, -0.98)
        if cfg.convention == "cap":
            lo, hi = -hi, -lo
        grid = np.linspace(lo, hi, args.steps)
        certs = scan_zec_monotonicity(design, outcome, m, grid)
        params = {"margin": m, "window_delta": [lo, hi], "steps": args.steps}
    elif mode == "pexact":
        lo, hi = _window(args, -0.95, 0.95)
        if cfg.convention == "delta":
            lo, hi = -hi, -lo
        grid = np.linspace(lo, hi, args.steps)
        certs = scan_pexact_monotonicity(design, outcome, grid,
                                         grid_points=cfg.grid_points,
                                         refine_tol=cfg.refine_tol)
        params = {"window_cap": [lo, hi], "steps": args.steps}
    elif mode == "margins":
        alpha = _alpha(args)
        lo, hi = _window(args, 0.01, 0.5)
        if not (0.0 < lo and hi < 1.0):
            raise UsageError(f"margin window must lie in (0, 1), "
                            f"got ({lo}, {hi})")
        grid = np.linspace(lo, hi, args.steps)
        certs = scan_margin_coherence(design, outcome, alpha, grid,
                                      grid_points=cfg.grid_points,
                                      refine_tol=cfg.refine_tol)
        params = {"alpha": alpha, "margin_window": [lo, hi],
                  "steps": args.steps}
    elif mode == "nesting":
        method = args.method or "mee"
        if method not in ("wald", "mee", "mn", "cz_exact", "ec"):
            raise UsageError(f"--method must be wald, mee, mn, cz_exact or "
                             f"ec for nesting; got {method!r}")
        m = _margin(args) if (method == "ec" or args.margin is not None) \
            else None
        pairs = [tuple(map(float, p)) for p in (args.alphas or
                                                [(0.1, 0.05), (0.05, 0.01)])]
        certs = scan_ci_nesting(method, design, outcome, m, pairs,
                                scan_points=cfg.scan_points)
        params = {"method": method, "margin": m,
                  "alpha_pairs": [list(p) for p in pairs]}
    else:  # pragma: no cover - argparse restricts choices
        raise UsageError(f"unknown diagnose mode {mode!r}")

    cert_dicts = [_cert_json(c, cfg.convention) for c in certs]
    report.update(params)
    report.update({"n_t": design.n_t, "n_c": design.n_c,
                   "x_t": outcome.x_t, "x_c": outcome.x_c,
                   "certificates": cert_dicts, "count": len(cert_dicts)})
    text = [f"{mode} scan on ({design.n_t}, {design.n_c}) outcome "
            f"({outcome.x_t}, {outcome.x_c}): "
            f"{len(cert_dicts)} certificate(s)"]
    for c in cert_dicts:
        detail = ", ".join(f"{k}={_wfmt(v)}" for k, v in c["witness"].items())
        text.append(f"  {c['kind']}: {detail} [verified={c['verified']}]")
    rows = [{"kind": c["kind"], "x_t": c["x_t"], "x_c": c["x_c"],
             "tolerance_used": c["tolerance_used"],
             "verified": c["verified"],
             "witness": json.dumps(c["witness"], sort_keys=True)}
            for c in cert_dicts]
    _emit(cfg, report, rows, text)
    return 0


def _wfmt(v):
    if isinstance(v, (list, tuple)):
        return "(" + ", ".join(_fmt(x) for x in v) + ")"
    return _fmt(v)


def cmd_coverage(args) -> int:
    cfg = _config(args)
    design = _design(args)
    method = args.method or "cz_exact"
    if method not in ("wald", "mee", "mn", "cz_exact", "ec"):
        raise UsageError(f"--method must be wald, mee, mn, cz_exact or ec "
                         f"for coverage; got {method!r}")
    alpha = _alpha(args)
    m = _margin(args) if (method == "ec" or args.margin is not None) else None
    # For coverage, --grid-points is the probability resolution: points
    # per axis on [0, 1] (21 -> step 0.05), not the nuisance grid.
    points = args.grid_points
    if points < 3 or points > 201:
        raise UsageError(f"--grid-points (points per probability axis) must "
                         f"lie in [3, 201] for coverage, got {points}")
    step = 1.0 / (points - 1)
    surface = coverage_surface(method, design, step, alpha, delta0=m,
                               raw_components=args.raw_components,
                               threads=cfg.threads)
    worst = surface.argmin_cell
    report = _base_report("coverage", cfg)
    report.update({"method": method, "alpha": alpha, "margin": m,
                   "n_t": design.n_t, "n_c": design.n_c,
                   "grid_step": step, "points_per_axis": points,
                   "n_cells": len(surface),
                   "min_coverage": surface.min_coverage,
                   "argmin": {"p_t": worst.p_t, "p_c": worst.p_c,
                              "coverage": worst.coverage,
                              "expected_width": worst.expected_width}})
    rows = [{"method": method, "alpha": alpha, "margin": m,
             "p_t": c.p_t, "p_c": c.p_c, "coverage": c.coverage,
             "expected_width": c.expected_width} for c in surface]
    text = [f"method: {method}   nominal: {_fmt(1 - alpha)}   "
            f"design: ({design.n_t}, {design.n_c})",
            f"grid: {points} points per axis (step {_fmt(step)}), "
            f"{len(surface)} cells",
            f"min coverage: {_fmt(surface.min_coverage)} at "
            f"(p_t={_fmt(worst.p_t)}, p_c={_fmt(worst.p_c)})",
            f"expected width there: {_fmt(worst.expected_width)}"]
    _emit(cfg, report, rows, text)
    return 0


def cmd_compare(args) -> int:
    cfg = _config(args)
    design = _design(args)
    outcome = _outcome(args, design)
    alpha = _alpha(args)
    m = _margin(args) if args.margin is not None else None
    methods = ["wald", "mee", "mn", "cz_exact"]
    if m is not None:
        methods.append("ec")
    entries = []
    for method in methods:
        cs = _invert(method, design, outcome, alpha, m, cfg)
        entry = {"method": method}
        entry.update(_confidence_fields(cs, cfg.convention))
        if m is not None:
            reject, p_used = noninferiority_decision(method, design, outcome,
                                                     m, alpha)
            entry.update({"reject_noninferiority": reject, "p_used": p_used})
        entries.append(entry)
    report = _base_report("compare", cfg)
    report.update({"alpha": alpha, "margin": m,
                   "n_t": design.n_t, "n_c": design.n_c,
                   "x_t": outcome.x_t, "x_c": outcome.x_c,
                   "methods": entries})
    rows = []
    for e in entries:
        hull = e["hull"]
        rows.append({"method": e["method"], "alpha": alpha, "margin": m,
                     "lower": None if hull is None else hull[0],
                     "upper": None if hull is None else hull[1],
                     "width": e["width"],
                     "p_used": e.get("p_used"),
                     "reject": e.get("reject_noninferiority"),
                     "convention": cfg.convention})
    header = (f"{'method':<9} {'lower':>12} {'upper':>12} {'width':>10}")
    if m is not None:
        header += f" {'p(noninf)':>12} {'reject':>7}"
    text = [f"({design.n_t}, {design.n_c}) outcome "
            f"({outcome.x_t}, {outcome.x_c})   confidence: {_fmt(1 - alpha)}"
            f"   convention: {cfg.convention}", header]
    for e in entries:
        hull = e["hull"]
        lo = "-" if hull is None else _fmt(hull[0])
        hi = "-" if hull is None else _fmt(hull[1])
        line = f"{e['method']:<9} {lo:>12} {hi:>12} {_fmt(e['width']):>10}"
        if m is not None:
            line += (f" {_fmt(e['p_used']):>12} "
                     f"{str(e['reject_noninferiority']):>7}")
        text.append(line)
    _emit(cfg, report, rows, text)
    return 0


# ---------------------------------------------------------------------------
# parser assembly


def _add_common(p, counts: bool = True):
    p.add_argument("--nt", type=int, help="treatment group size")
    p.add_argument("--nc", type=int, help="control group size")
    if counts:
        p.add_argument("--xt", type=int, help="treatment successes")
        p.add_argument("--xc", type=int, help="control successes")
    p.add_argument("--margin", type=float,
                   help="noninferiority margin (positive, both conventions)")
    p.add_argument("--alpha", type=float, default=0.05,
                   help="two-sided level (default 0.05)")
    p.add_argument("--method", help="statistical method")
    p.add_argument("--convention", choices=("delta", "cap"), default="delta",
                   help="sign convention for reported differences: delta = "
                        "p_C - p_T (default) or cap = p_T - p_C")
    p.add_argument("--grid-points", type=int, default=DEFAULT_GRID_POINTS,
                   help="nuisance grid resolution (coverage: points per "
                        "probability axis)")
    p.add_argument("--refine-tol", type=float, default=DEFAULT_REFINE_TOL,
                   help="nuisance-maximum refinement tolerance")
    p.add_argument("--scan-points", type=int, default=DEFAULT_SCAN_POINTS,
                   help="inversion scan resolution")
    p.add_argument("--format", choices=("text", "json", "csv"),
                   default="text", help="output format")
    p.add_argument("--output", help="write the report to this path")
    p.add_argument("--threads", type=int, default=0,
                   help="worker threads (0 = auto)")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="riskdiff",
                     description="Exact and asymptotic inference for the "
                                 "difference of two binomial proportions.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("pvalue", help="one-sided p-value at the margin")
    _add_common(p)
    p.set_defaults(fn=cmd_pvalue)

    p = sub.add_parser("stat", help="test statistic at the margin")
    _add_common(p)
    p.set_defaults(fn=cmd_stat)

    p = sub.add_parser("ci", help="confidence set by test inversion")
    _add_common(p)
    p.set_defaults(fn=cmd_ci)

    p = sub.add_parser("diagnose", help="pathology scanners")
    dsub = p.add_subparsers(dest="mode", required=True)
    for mode, helptext in (
            ("zec", "non-monotonicity of the EC statistic in the margin"),
            ("pexact", "non-monotonicity of the exact p-value in the "
                       "null boundary"),
            ("margins", "rejection at a small margin without rejection "
                        "at a larger one"),
            ("nesting", "confidence sets that fail to nest across levels"),
            ("map", "liberal/conservative map of the score test vs the "
                    "exact test")):
        q = dsub.add_parser(mode, help=helptext)
        _add_common(q, counts=(mode != "map"))
        if mode in ("zec", "pexact", "margins"):
            q.add_argument("--window", type=float, nargs=2,
                           metavar=("LO", "HI"),
                           help="scan window (reported convention)")
            q.add_argument("--steps", type=int,
                           default={"zec": 200, "pexact": 201,
                                    "margins": 50}[mode],
                           help="number of scan points")
        if mode == "nesting":
            q.add_argument("--alphas", type=float, nargs=2, action="append",
                           metavar=("ALPHA_HI", "ALPHA_LO"),
                           help="level pair to check (repeatable)")
        q.set_defaults(fn=cmd_diagnose, mode=mode)

    p = sub.add_parser("coverage",
                       help="exact coverage over a probability grid")
    _add_common(p, counts=False)
    p.add_argument("--raw-components", action="store_true",
                   help="score the raw (possibly disconnected) EC set "
                        "instead of its hull")
    p.set_defaults(fn=cmd_coverage, grid_points=21)

    p = sub.add_parser("compare", help="all methods side by side")
    _add_common(p)
    p.set_defaults(fn=cmd_compare)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.fn(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except DegenerateCalibrationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except DomainError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
