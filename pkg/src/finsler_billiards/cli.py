"""Command line front end: ``caustic``, ``magnetic``, ``distance``, ``shots``, ``verify``.

A scene is one JSON document (``--config``); command-line flags override its
fields.  Exit codes: 0 success, 2 configuration error, 3 numerical failure
(the error class name goes to stderr).
"""

from __future__ import annotations

import argparse
import json
import os
import sys

import numpy as np

from . import caustics, magnetic, verify
from .billiard import BilliardTable, n_bounce_shots, shot_length
from .errors import ConfigError, FinslerBilliardError
from .geom2d import parse_oval
from .metrics import (FunkMetric, HilbertMetric, funk_distance,
                      hilbert_distance, parse_metric, segment_length)
from .svg import caustic_figure, magnetic_figure

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC = 0, 2, 3

DEFAULTS = {
    "table": "circle:1",
    "metric": "euclid",
    "source": [0.3, 0.0],
    "bounces": 1,
    "samples": 4096,
    "offset": 0.0,
    "workers": 1,
    "probes": 20,
    "rays": 12,
    "out": None,
}


def _parse_point(text):
    try:
        vals = [float(v) for v in str(text).split(",")]
    except ValueError as exc:
        raise ConfigError(f"bad point {text!r}") from exc
    if len(vals) != 2:
        raise ConfigError(f"a point needs two coordinates, got {text!r}")
    return vals


def load_config(args, command):
    """Merge defaults, the JSON config file and explicit flags (in that order)."""
    cfg = dict(DEFAULTS)
    cfg["out"] = command
    if getattr(args, "config", None):
        try:
            with open(args.config) as fh:
                cfg.update(json.load(fh))
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {args.config}: {exc}") from exc
    for key, value in vars(args).items():
        if key in ("config", "command", "func") or value is None:
            continue
        cfg[key] = value
    for key in ("source", "target"):
        if isinstance(cfg.get(key), str):
            cfg[key] = _parse_point(cfg[key])
    return cfg


def _scene(cfg):
    try:
        oval = parse_oval(cfg["table"])
        metric = parse_metric(cfg["metric"])
        table = BilliardTable(oval, metric)
    except FinslerBilliardError as exc:
        raise ConfigError(f"{type(exc).__name__}: {exc}") from exc
    O = np.asarray(cfg["source"], float)
    if not table.contains(O):
        raise ConfigError("source must lie strictly inside the table")
    return table, O


def _paths(prefix):
    folder = os.path.dirname(prefix)
    if folder:
        os.makedirs(folder, exist_ok=True)
    return prefix + ".svg", prefix + "_envelope.csv", prefix + ".json"


def _figure_id(cfg, kind):
    if kind == "magnetic":
        return "magnetic-caustics: Larmor centers and two-component envelope"
    if cfg["table"].startswith("circle") and cfg["metric"] == "euclid":
        return "circle-caustics: caustics by reflection in a circle"
    return "four-cusp theorem check"


def cmd_caustic(args):
    cfg = load_config(args, "caustic")
    table, O = _scene(cfg)
    n = int(cfg["bounces"])
    grid = int(cfg["probes"])
    probes = caustics.probe_grid(table, size=grid)
    report = caustics.four_cusp_verify(table, O, n, m=int(cfg["samples"]),
                                       offset=float(cfg["offset"]), probes=probes,
                                       workers=int(cfg["workers"]))
    svg_path, csv_path, json_path = _paths(cfg["out"])
    report.envelope_to_csv(csv_path)
    report.curve.to_csv(cfg["out"] + "_dual.csv")
    report.to_json(json_path, envelope_csv=os.path.basename(csv_path),
                   table=cfg["table"], metric=cfg["metric"], source=[float(c) for c in O],
                   figure=_figure_id(cfg, "caustic"), theorem_holds=report.theorem_holds,
                   segre_failures=report.segre.failures if report.segre else None)
    caustic_figure(table, O, n, report, int(cfg["rays"])).save(svg_path)
    print(f"n={n} cusps={report.cusp_count} winding={report.winding} "
          f"segre_ok={report.segre_ok} degenerate={report.degenerate} -> {json_path}")
    return EXIT_OK if (report.degenerate or report.cusp_count >= 4) else EXIT_NUMERIC


def cmd_magnetic(args):
    cfg = load_config(args, "magnetic")
    if cfg.get("R") is None:
        raise ConfigError("magnetic needs a Larmor radius R")
    try:
        oval = parse_oval(cfg["table"])
        mb = magnetic.MagneticBilliard(oval, float(cfg["R"]))
    except FinslerBilliardError as exc:
        raise ConfigError(f"{type(exc).__name__}: {exc}") from exc
    O = np.asarray(cfg["source"], float)
    if not oval.contains(O):
        raise ConfigError("source must lie strictly inside the table")
    n = int(cfg["bounces"])
    report = magnetic.magnetic_caustic(mb, O, n, m=int(cfg["samples"]),
                                       offset=float(cfg["offset"]))
    svg_path, csv_path, json_path = _paths(cfg["out"])
    report.envelope_to_csv(csv_path)
    report.to_json(json_path, envelope_csv=os.path.basename(csv_path), table=cfg["table"],
                   source=[float(c) for c in O], figure=_figure_id(cfg, "magnetic"))
    magnetic_figure(mb, O, n, report, int(cfg["rays"])).save(svg_path)
    print(f"n={n} R={mb.R} inner cusps={report.inner_count} outer cusps={report.outer_count} "
          f"-> {json_path}")
    return EXIT_OK if (report.degenerate or report.inner_count >= 4) else EXIT_NUMERIC


def cmd_distance(args):
    cfg = load_config(args, "distance")
    domain = parse_oval(cfg.get("domain", "circle:1"))
    rng = np.random.default_rng(int(cfg.get("seed", 0)))
    count = int(cfg.get("pairs", 100))
    funk, hilb = FunkMetric(domain), HilbertMetric(domain)
    pts = domain.sample(4096)
    box_lo, box_hi = pts.min(axis=0), pts.max(axis=0)
    pairs = []
    while len(pairs) < count:
        x, y = rng.uniform(box_lo, box_hi), rng.uniform(box_lo, box_hi)
        if domain.level(x) < -1e-3 and domain.level(y) < -1e-3:
            pairs.append((x, y))
    rows, worst = [], 0.0
    for x, y in pairs:
        fc, fq = funk_distance(domain, x, y), segment_length(funk, x, y)
        hc, hq = hilbert_distance(domain, x, y), segment_length(hilb, x, y)
        worst = max(worst, abs(fc - fq), abs(hc - hq))
        rows.append((*x, *y, fc, fq, hc, hq))
    prefix = cfg["out"]
    _paths(prefix)
    with open(prefix + ".csv", "w") as fh:
        fh.write("x1,y1,x2,y2,funk_closed,funk_quadrature,hilbert_closed,hilbert_quadrature\n")
        for row in rows:
            fh.write(",".join(repr(float(v)) for v in row) + "\n")
    tol = float(cfg.get("tolerance", 1e-9))
    doc = {"domain": cfg.get("domain", "circle:1"), "pairs": count, "seed": int(cfg.get("seed", 0)),
           "max_abs_difference": worst, "tolerance": tol, "ok": worst < tol,
           "table_csv": os.path.basename(prefix + ".csv")}
    with open(prefix + ".json", "w") as fh:
        fh.write(json.dumps(doc, indent=2, sort_keys=True) + "\n")
    print(f"max |closed form - quadrature| = {worst:.3e} over {count} pairs")
    return EXIT_OK if worst < tol else EXIT_NUMERIC


def cmd_shots(args):
    cfg = load_config(args, "shots")
    table, O = _scene(cfg)
    if cfg.get("target") is None:
        raise ConfigError("shots needs a target point")
    A = np.asarray(cfg["target"], float)
    if not table.contains(A):
        raise ConfigError("target must lie strictly inside the table")
    n = int(cfg["bounces"])
    shots = n_bounce_shots(table, O, A, n, multistart=cfg.get("multistart"))
    prefix = cfg["out"]
    _paths(prefix)
    with open(prefix + ".csv", "w") as fh:
        fh.write("shot,bounce_index,t,x,y,vx,vy\n")
        for k, traj in enumerate(shots):
            for row in traj.rows():
                fh.write(",".join([str(k), str(row[0])] + [repr(float(v)) for v in row[1:]]) + "\n")
    doc = {"table": cfg["table"], "metric": cfg["metric"], "source": [float(c) for c in O],
           "target": [float(c) for c in A], "n": n, "count": len(shots),
           "lengths": [shot_length(table, O, A, s.params) for s in shots],
           "params": [[float(t) for t in s.params] for s in shots],
           "shots_csv": os.path.basename(prefix + ".csv")}
    with open(prefix + ".json", "w") as fh:
        fh.write(json.dumps(doc, indent=2, sort_keys=True) + "\n")
    print(f"{len(shots)} {n}-bounce shots from {O.tolist()} to {A.tolist()}")
    return EXIT_OK if shots else EXIT_NUMERIC


def cmd_verify(args):
    scale = float(args.tol_scale) if args.tol_scale is not None else 1.0
    results = verify.run_suite(scale)
    text = verify.summary(results, scale)
    out = args.out or "verify.json"
    folder = os.path.dirname(out)
    if folder:
        os.makedirs(folder, exist_ok=True)
    with open(out, "w") as fh:
        fh.write(text)
    for r in results:
        flag = "PASS" if r.ok else "FAIL"
        if not r.asserted:
            flag = "INFO"
        print(f"{flag} {r.name}: {r.value:.3e} (tol {r.tol:.1e})")
    return EXIT_OK if all(r.ok for r in results) else 1


def build_parser():
    parser = argparse.ArgumentParser(prog="finsler-billiards",
                                     description="Caustics and cusps of Finsler billiards.")
    sub = parser.add_subparsers(dest="command", required=True)

    def scene_flags(p, bounces=True):
        p.add_argument("--config", help="JSON scene document")
        p.add_argument("--table", help="circle:r | ellipse:a,b | support:c0,a1,b1,...")
        p.add_argument("--source", help="source point x,y")
        if bounces:
            p.add_argument("--bounces", type=int)
        p.add_argument("--out", help="output path prefix")

    p = sub.add_parser("caustic", help="caustic by reflection and its cusps")
    scene_flags(p)
    p.add_argument("--metric", help="euclid | minkowski:rho=... | funk:<oval> | hilbert:<oval> | ...")
    p.add_argument("--samples", type=int)
    p.add_argument("--offset", type=float)
    p.add_argument("--probes", type=int, help="probe grid size per side")
    p.add_argument("--rays", type=int, help="sample trajectories drawn in the SVG")
    p.add_argument("--workers", type=int)
    p.set_defaults(func=cmd_caustic)

    p = sub.add_parser("magnetic", help="magnetic billiard caustic (two components)")
    scene_flags(p)
    p.add_argument("--R", type=float, help="Larmor radius")
    p.add_argument("--samples", type=int)
    p.add_argument("--offset", type=float)
    p.add_argument("--rays", type=int)
    p.set_defaults(func=cmd_magnetic)

    p = sub.add_parser("distance", help="Funk/Hilbert closed forms vs quadrature")
    p.add_argument("--config")
    p.add_argument("--domain", help="oval spec of the convex domain")
    p.add_argument("--pairs", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--tolerance", type=float)
    p.add_argument("--out")
    p.set_defaults(func=cmd_distance)

    p = sub.add_parser("shots", help="n-bounce billiard shots from source to target")
    scene_flags(p)
    p.add_argument("--metric")
    p.add_argument("--target", help="target point x,y")
    p.add_argument("--multistart", type=int)
    p.set_defaults(func=cmd_shots)

    p = sub.add_parser("verify", help="run the invariant suite")
    p.add_argument("--tol-scale", type=float, dest="tol_scale")
    p.add_argument("--out", help="summary JSON path (default verify.json)")
    p.set_defaults(func=cmd_verify)
    return parser


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code else EXIT_OK
    try:
        return args.func(args)
    except FinslerBilliardError as exc:
        print(f"{type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (ConfigError, ValueError, OSError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
