"""Command line entry point: ``coinvert run|preset|render``."""

import argparse
import sys

from . import io
from .config import PRESETS, load_config, load_preset, parse_aperture
from .pipeline import StageError, run_experiment


def _summary(manifest):
    d = manifest["derived"]
    reg = d.get("regularization", {})
    lines = [f"receivers used: {d.get('receivers_used')}",
             f"alpha = {reg.get('alpha', float('nan')):.3e} ({reg.get('status')})"]
    for kind, rec in sorted(d.get("peaks", {}).items()):
        if "top_n" in rec:
            hit = sum(rec["top_n"]["matched"])
            lines.append(f"{kind}: {hit}/{len(rec['top_n']['matched'])} sources matched by the top peaks")
        elif "top_decile_distance" in rec:
            t = rec["top_decile_distance"]
            lines.append(f"{kind}: top-decile boundary distance mean {t['mean']:.3f}, max {t['max']:.3f}")
    return "\n".join(lines)


def _execute(cfg, out):
    try:
        manifest = run_experiment(cfg, out)
    except StageError as exc:
        print(f"error: stage {exc.stage}: {exc.__cause__}", file=sys.stderr)
        return 2
    print(_summary(manifest))
    print(f"outputs written to {out}")
    return 0


def build_parser():
    p = argparse.ArgumentParser(prog="coinvert", description=__doc__)
    sub = p.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run an experiment described by a TOML or JSON file")
    run.add_argument("config")
    run.add_argument("--out", default=None, help="output directory (default: out/<name>)")

    pre = sub.add_parser("preset", help="run one of the built-in example presets")
    pre.add_argument("name", choices=PRESETS)
    pre.add_argument("--noise", type=float, default=None, help="relative noise level")
    pre.add_argument("--seed", type=int, default=None)
    pre.add_argument("--aperture", default=None, help="receiver arc 'a,b' in radians, e.g. 0,3pi/2")
    pre.add_argument("--aux", type=int, default=None, help="number of auxiliary sources")
    pre.add_argument("--out", default=None)

    ren = sub.add_parser("render", help="render a field CSV as a P6 heatmap")
    ren.add_argument("csv")
    ren.add_argument("ppm")
    ren.add_argument("--colormap", choices=("viridis", "gray"), default="viridis")
    ren.add_argument("--reciprocal", action="store_true", help="show 1/value (I2 convention)")
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    if args.command == "render":
        try:
            io.render_csv(args.csv, args.ppm, args.colormap, args.reciprocal)
        except (OSError, ValueError) as exc:
            print(f"error: stage render: {exc}", file=sys.stderr)
            return 2
        return 0
    try:
        if args.command == "run":
            cfg = load_config(args.config)
        else:
            cfg = load_preset(args.name)
            aperture = parse_aperture(args.aperture) if args.aperture else None
            cfg = cfg.with_overrides(noise=args.noise, seed=args.seed, aperture=aperture,
                                     aux_count=args.aux)
    except (OSError, ValueError, KeyError) as exc:
        print(f"error: stage config: {exc}", file=sys.stderr)
        return 2
    return _execute(cfg, args.out or f"out/{cfg.name}")


if __name__ == "__main__":
    sys.exit(main())
