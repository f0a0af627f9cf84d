"""Experiment orchestration and CSV/text report emission.

All CSV output uses '.' decimals, 17 significant digits and LF endings.
"""

from __future__ import annotations

import csv
import io
import logging
from dataclasses import asdict, fields
from pathlib import Path

from .config import build_problem, serialize_config
from .energy import kirchhoff_cap
from .errors import (
    BoundaryTrap,
    CapExceeded,
    CertificationFailed,
    IterationLimit,
    PxKirchhoffError,
    ValidationError,
)
from .geometry import mountain_pass_constants
from .mesh import gridfunction_to_csv, x_norm
from .solvers import IterRecord, solve_pair
from .varx import embedding_constants

log = logging.getLogger(__name__)

EXIT_CERTIFIED = 0
EXIT_NOT_CERTIFIED = 1
EXIT_SOLVER = 2
EXIT_IO = 3
EXIT_CONFIG = 4

GEOMETRY_COLUMNS = ("rho", "C_rho", "lambda_bar", "delta", "alpha", "min_sphere_J", "t0", "J_e")
CONSTANT_COLUMNS = ("rho", "C_rho", "lambda_bar", "delta", "alpha", "epsilon", "C_epsilon",
                    "C1", "C2", "C3", "embedding", "norm_f", "norm_g", "norm_h")


def _num(x):
    return "" if x is None else f"{float(x):.17g}"


def _csv(header, rows):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow(row)
    return buf.getvalue()


def geometry_csv(geo, sphere=None, ray=None):
    row = [geo.rho, geo.C_rho, geo.lambda_bar, geo.delta, geo.alpha,
           None if sphere is None else sphere.min_J,
           None if ray is None else ray.t0,
           None if ray is None else ray.J_e]
    return _csv(GEOMETRY_COLUMNS, [[_num(v) for v in row]])


def constants_csv(geo):
    c, n = geo.constants, geo.norms
    row = [geo.rho, geo.C_rho, geo.lambda_bar, geo.delta, geo.alpha, geo.epsilon, geo.C_epsilon,
           c.C1, c.C2, c.C3, c.embedding, n.f, n.g, n.h]
    return _csv(CONSTANT_COLUMNS, [[_num(v) for v in row]])


def iterations_csv(records):
    names = [f.name for f in fields(IterRecord)]
    rows = []
    for rec in records:
        d = asdict(rec)
        rows.append([d["solver"], str(d["iter"])] + [_num(d[k]) for k in names[2:]])
    return _csv(names, rows)


def compute_geometry(spec, prob=None):
    prob = build_problem(spec) if prob is None else prob
    consts = embedding_constants(prob.grid, prob.p, prob.q, prob.r, spec.probes,
                                 spec.constants_seed, spec.safety)
    return mountain_pass_constants(prob, consts), consts


def _write(path, text):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)


def run_experiment(spec, out_dir):
    """Run the full pipeline and write the five report files; returns an exit status."""
    out = Path(out_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
        probe = out / ".write_test"
        _write(probe, "")
        probe.unlink()
    except OSError as exc:
        log.error("cannot write to %s: %s", out, exc)
        return EXIT_IO

    stages = {}
    status, clause, message = EXIT_CERTIFIED, None, ""
    pair = None
    try:
        prob = build_problem(spec)
        pair = solve_pair(prob, spec.solver, probes=spec.probes, seed=spec.constants_seed,
                          sphere_samples=spec.sphere_samples, stages=stages)
    except CertificationFailed as exc:
        status, clause, message = EXIT_NOT_CERTIFIED, exc.clause, str(exc)
    except (IterationLimit, BoundaryTrap, CapExceeded) as exc:
        status, clause, message = EXIT_SOLVER, type(exc).__name__, str(exc)
    except ValidationError as exc:
        status, clause, message = EXIT_CONFIG, "config", str(exc)
    except PxKirchhoffError as exc:
        status, clause, message = EXIT_SOLVER, type(exc).__name__, str(exc)

    geo = stages.get("geometry")
    records = []
    for key in ("ball", "mountain"):
        res = stages.get(key)
        if res is not None:
            records.extend(res.log)
    try:
        if geo is not None:
            _write(out / "geometry.csv", geometry_csv(geo, stages.get("sphere"), stages.get("ray")))
        _write(out / "iterations.csv", iterations_csv(records))
        for name, key in (("u1.csv", "mountain"), ("u2.csv", "ball")):
            res = stages.get(key)
            if res is not None:
                _write(out / name, gridfunction_to_csv(res.u))
        _write(out / "report.txt", _report_text(spec, stages, pair, status, clause, message))
    except OSError as exc:
        log.error("failed writing report files: %s", exc)
        return EXIT_IO
    return status


def _report_text(spec, stages, pair, status, clause, message):
    lines = ["status: " + ("CERTIFIED" if status == EXIT_CERTIFIED else "FAILED"),
             f"exit_code: {status}"]
    if clause is not None:
        lines.append(f"failed_clause: {clause}")
        lines.append(f"message: {message}")
    lines.append(f"mode: {spec.mode}")
    geo = stages.get("geometry")
    if geo is not None:
        lines += [
            f"rho: {geo.rho:.17g}",
            f"C_rho: {geo.C_rho:.17g}",
            f"lambda: {spec.lam:.17g}",
            f"lambda_bar: {geo.lambda_bar:.17g}",
            f"h_norm: {geo.norms.h:.17g}",
            f"delta: {geo.delta:.17g}",
            f"alpha: {geo.alpha:.17g}",
        ]
    sphere = stages.get("sphere")
    if sphere is not None:
        lines.append(f"sphere_samples: {sphere.samples} min_J: {sphere.min_J:.17g}")
    ray = stages.get("ray")
    if ray is not None:
        lines.append(f"ray_t0: {ray.t0:.17g} J_e: {ray.J_e:.17g}")
    if pair is not None:
        prob = build_problem(spec)
        cap = kirchhoff_cap(prob.kirchhoff)
        lines += [
            f"cap: {cap:.17g}",
            f"J1: {pair.J1:.17g} residual1: {pair.res1:.17g} degeneracy_gap1: {pair.ps1.degeneracy_gap:.17g}",
            f"J2: {pair.J2:.17g} residual2: {pair.res2:.17g} x_norm2: {x_norm(pair.u2, prob.p):.17g}",
            "verdict: two nontrivial weak solutions with J1 > 0 > J2",
        ]
    lines += ["", "# configuration", serialize_config(spec).rstrip("\n")]
    return "\n".join(lines) + "\n"
