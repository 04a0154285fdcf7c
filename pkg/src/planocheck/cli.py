"""Command-line entry point: ``planocheck check|synth|report``.

Exit codes: 0 compliant, 3 non-compliant, 1 error.
"""
from __future__ import annotations

import argparse
import json
import sys

from .errors import PlanocheckError
from .overlay import render_svg, render_text
from .pipeline import Config, load_config, run_check
from .planogram import load_planogram
from .scene import dumps_scene, load_scene, synth_spec_from_dict, synthesize

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_NONCOMPLIANT = 3


def _write(path: str, text: str) -> None:
    if path in ("", "-"):
        sys.stdout.write(text)
    else:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(text)


def build_config(args) -> Config:
    cfg = Config()
    if getattr(args, "config", None):
        cfg = load_config(args.config, cfg)
    return cfg.updated(
        seed=args.seed,
        jobs=args.jobs,
        max_per_region=args.max_per_region,
        refine=True if args.refine else None,
        out=args.out,
        overlay=args.overlay,
    )


def cmd_check(args) -> int:
    cfg = build_config(args)
    if args.print_config:
        sys.stdout.write(cfg.dumps())
        return EXIT_OK
    if not args.planogram or not args.scene:
        print("check: --planogram and --scene are required", file=sys.stderr)
        return EXIT_ERROR
    planogram = load_planogram(args.planogram)
    scene = load_scene(args.scene)
    result = run_check(planogram, scene, cfg)
    text = result.dumps()
    _write(cfg.out or "-", text)
    if cfg.overlay:
        _write(cfg.overlay, render_svg(result.to_dict()))
    return EXIT_OK if result.compliant else EXIT_NONCOMPLIANT


def cmd_synth(args) -> int:
    planogram = load_planogram(args.planogram)
    with open(args.spec, encoding="utf-8") as fh:
        spec = synth_spec_from_dict(json.load(fh), planogram)
    scene, _ = synthesize(spec)
    _write(args.out or "-", dumps_scene(scene))
    return EXIT_OK


def cmd_report(args) -> int:
    with open(args.report, encoding="utf-8") as fh:
        rep = json.load(fh)
    _write(args.out or "-", render_text(rep))
    if args.overlay:
        _write(args.overlay, render_svg(rep))
    return EXIT_OK


def make_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="planocheck", description="Planogram compliance checking on feature scenes.")
    sub = ap.add_subparsers(dest="command", required=True)

    c = sub.add_parser("check", help="check a scene against a planogram")
    c.add_argument("--planogram", help="planogram XML")
    c.add_argument("--scene", help="feature scene JSON")
    c.add_argument("--out", help="report JSON path (default: stdout)")
    c.add_argument("--overlay", help="write an SVG overlay of the detections")
    c.add_argument("--config", help="key = value config file")
    c.add_argument("--seed", type=int)
    c.add_argument("--jobs", type=int)
    c.add_argument("--refine", action="store_true", help="re-detect missed products from exemplars")
    c.add_argument("--max-per-region", type=int, dest="max_per_region")
    c.add_argument("--print-config", action="store_true", dest="print_config",
                   help="print the effective configuration and exit")
    c.set_defaults(func=cmd_check)

    s = sub.add_parser("synth", help="generate a synthetic feature scene")
    s.add_argument("--planogram", required=True)
    s.add_argument("--spec", required=True, help="synthesis parameters (JSON)")
    s.add_argument("--out", help="scene JSON path (default: stdout)")
    s.set_defaults(func=cmd_synth)

    r = sub.add_parser("report", help="render a report JSON as text and/or SVG")
    r.add_argument("report", help="report JSON written by 'check'")
    r.add_argument("--out", help="text output path (default: stdout)")
    r.add_argument("--overlay", help="write an SVG overlay")
    r.set_defaults(func=cmd_report)
    return ap


def main(argv=None) -> int:
    args = make_parser().parse_args(argv)
    try:
        return args.func(args)
    except (PlanocheckError, OSError, ValueError, KeyError, json.JSONDecodeError) as exc:
        print(f"planocheck {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
