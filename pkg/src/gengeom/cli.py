"""Command line entry point: ``gengeom check | verify-paper | scan | export-s6``.

Exit codes: 0 success, 1 verification failure, 2 configuration error,
3 numeric or domain error.
"""
from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from .chart import AsymmetryError, ChartMismatch, InvolutionError, SingularMetricError
from .config import ConfigError, RunConfig, build_structure, export_sphere6, load_chart
from .exprcore import DomainError, ParseError
from .genbundle import NormError, classify
from .integrability import condition_residuals, oracle_frame_nijenhuis

EXIT_OK, EXIT_FAIL, EXIT_CONFIG, EXIT_NUMERIC = 0, 1, 2, 3
AGREEMENT_TOL = 1e-8

NUMERIC_ERRORS = (DomainError, InvolutionError, SingularMetricError, AsymmetryError, NormError,
                  ChartMismatch, ZeroDivisionError, FloatingPointError, np.linalg.LinAlgError)


def _item(claim_id, anchor, residual, tol, ok, comparison="<="):
    return {"claim_id": claim_id, "paper_anchor": anchor, "residual": float(residual),
            "tolerance": float(tol), "comparison": comparison, "pass": bool(ok)}


def _emit(report: dict, out: str | None):
    text = json.dumps(report, sort_keys=True, indent=2) + "\n"
    if out:
        with open(out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _table_hook(args):
    if not getattr(args, "negate_table", False):
        return None
    from .sphere6 import calibrate_table

    return calibrate_table().negated()


def cmd_check(cfg: RunConfig, table=None) -> tuple[int, dict]:
    setup = load_chart(cfg.chart, table)
    pts = setup.sample(cfg.points, cfg.seed)
    T = build_structure(setup, cfg.structure, pts)
    cls = classify(T, pts)
    rep = condition_residuals(T, pts)
    oracle = oracle_frame_nijenhuis(T, pts, check=False)
    diff = np.abs(rep.residuals - oracle)
    agree = bool(np.all(diff <= AGREEMENT_TOL * (1.0 + rep.scale)))
    verdict = rep.verdict(cfg.tol_vanish, cfg.tol_nonvanish)
    if verdict == "nonvanishing":
        integrable = False
    elif verdict == "vanishes" and cls.strong:
        integrable = True
    else:
        integrable = None  # only necessity is known for weak structures
    report = {
        "command": "check", "chart": setup.chart.label, "structure": cfg.structure or setup.structure,
        "seed": cfg.seed, "points": cfg.points,
        "classification": {"weak": cls.weak, "strong": cls.strong},
        "conditions": rep.summary(cfg.tol_vanish, cfg.tol_nonvanish),
        "integrable": integrable,
        "items": [_item("oracle_agreement", "coordinate conditions vs frame Nijenhuis components",
                        float(diff.max()), AGREEMENT_TOL, agree)],
        "pass": agree,
    }
    return (EXIT_OK if agree else EXIT_FAIL), report


def cmd_verify_paper(cfg: RunConfig, tol_vanish=None, table=None) -> tuple[int, dict]:
    from .verify import run_all

    items = run_all(cfg.seed, cfg.points, tol_vanish, cfg.tol_nonvanish, table)
    rows = [it.as_dict() for it in items]
    failed = [r["claim_id"] for r in rows if not r["pass"]]
    report = {"command": "verify-paper", "seed": cfg.seed, "points": cfg.points,
              "items": rows, "failed": failed, "pass": not failed}
    return (EXIT_OK if not failed else EXIT_FAIL), report


def _directions(text: str | None):
    from .sphere6 import default_directions

    if text is None:
        return default_directions()
    text = text.strip()
    if not text:
        raise ConfigError("empty direction set")
    if text.isdigit():
        if int(text) < 1:
            raise ConfigError("empty direction set")
        return default_directions(int(text))
    dirs = []
    for chunk in text.split(";"):
        vals = [float(v) for v in chunk.split(",") if v.strip()]
        if len(vals) != 3:
            raise ConfigError(f"direction {chunk!r} needs three numbers a,b,c")
        v = np.array(vals)
        norm = np.linalg.norm(v)
        if norm == 0:
            raise ConfigError("zero direction")
        dirs.append(v / norm)
    return np.array(dirs)


def cmd_scan(cfg: RunConfig, table=None) -> tuple[int, dict]:
    from .sphere6 import scan_nonexistence, sphere6

    if cfg.chart != "s6":
        raise ConfigError("scan runs on the built-in s6 chart")
    dirs = _directions(cfg.directions)
    s6 = sphere6(table)
    pts = s6.sample(cfg.points, seed=cfg.seed)
    out = scan_nonexistence(dirs, pts, s6=s6, tol_nonvanish=cfg.tol_nonvanish)
    report = {"command": "scan", "seed": cfg.seed, "points": cfg.points, **out,
              "items": [_item("nonexistence_scan", "no constant spherical combination is integrable",
                              out["min_max_residual"], cfg.tol_nonvanish, out["all_violate"], ">=")],
              "pass": out["all_violate"]}
    return (EXIT_OK if out["all_violate"] else EXIT_FAIL), report


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="gengeom", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p, points=100):
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--points", type=int, default=points)
        p.add_argument("--tol-vanish", type=float, default=None)
        p.add_argument("--tol-nonvanish", type=float, default=1e-3)
        p.add_argument("--out", default=None, help="write the JSON report here instead of stdout")
        p.add_argument("--negate-table", action="store_true",
                       help="negative control: use the sign-flipped cross table")

    p = sub.add_parser("check", help="classify a structure and evaluate the conditions")
    p.add_argument("--chart", default="s6", help="s6, r2, r4 or a chart file")
    p.add_argument("--structure", default=None,
                   help='e.g. "spherical:a=0,b=0,c=1", "lambda:-1", "omega", "g", "weak", "blocks"')
    common(p)
    p = sub.add_parser("verify-paper", help="run every verification item")
    common(p)
    p = sub.add_parser("scan", help="constant-direction nonexistence scan on S^6")
    p.add_argument("--chart", default="s6")
    p.add_argument("--directions", default=None,
                   help='a count, or explicit "a,b,c;a,b,c" (normalized)')
    common(p, points=50)
    p = sub.add_parser("export-s6", help="print the S^6 chart as a chart file")
    p.add_argument("--out", default=None)
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    try:
        if args.command == "export-s6":
            text = export_sphere6()
            if args.out:
                with open(args.out, "w", encoding="utf-8") as fh:
                    fh.write(text)
            else:
                sys.stdout.write(text)
            return EXIT_OK
        cfg = RunConfig(chart=getattr(args, "chart", "s6"), structure=getattr(args, "structure", None),
                        seed=args.seed, points=args.points,
                        tol_vanish=args.tol_vanish if args.tol_vanish is not None else 1e-9,
                        tol_nonvanish=args.tol_nonvanish, out=args.out,
                        directions=getattr(args, "directions", None))
        table = _table_hook(args)
        if args.command == "check":
            code, report = cmd_check(cfg, table)
        elif args.command == "verify-paper":
            code, report = cmd_verify_paper(cfg, args.tol_vanish, table)
        else:
            code, report = cmd_scan(cfg, table)
    except (ConfigError, ParseError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NUMERIC_ERRORS as exc:
        print(f"numeric error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    _emit(report, cfg.out)
    if code == EXIT_FAIL:
        failed = report.get("failed") or [i["claim_id"] for i in report["items"] if not i["pass"]]
        print("verification failed: " + ", ".join(failed), file=sys.stderr)
    return code


if __name__ == "__main__":
    sys.exit(main())
