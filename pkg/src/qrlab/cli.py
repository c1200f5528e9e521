"""Command line entry point: ``qrlab {run,aggregate,plot,all}``."""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from .harness.config import load_config
from .harness.curves import DEFAULT_BIN, read_aggregate
from .harness.plot import emit_plot
from .harness.runner import aggregate_dir, read_manifest, run_experiment, variant_dirs


def _seeds(text: str) -> list[int]:
    return [int(s) for s in text.split(",") if s.strip()]


def cmd_run(args) -> Path:
    cfg = load_config(args.config, seeds=args.seeds)
    root = run_experiment(cfg, args.out, args.workers, resume=args.resume)
    manifest = read_manifest(root)
    failed = [(v["name"], r["seed"]) for v in manifest["variants"] for r in v["runs"]
              if r["status"] == "failed"]
    print(f"wrote {root}")
    if failed:
        raise RuntimeError(f"{len(failed)} run(s) failed: {failed}")
    return root


def cmd_aggregate(args) -> None:
    for name, path in aggregate_dir(args.dir, args.bin).items():
        print(f"{name}: {path}")


def cmd_plot(args) -> Path:
    root = Path(args.dir)
    manifest = read_manifest(root)
    labels = {v["name"]: v["label"] for v in (manifest or {}).get("variants", [])}
    aggs = {}
    for vdir in variant_dirs(root):
        agg_path = vdir / "aggregate.csv"
        if not agg_path.exists():
            aggregate_dir(vdir)
        aggs[labels.get(vdir.name, vdir.name)] = read_aggregate(agg_path)
    total = manifest["total_steps"] if manifest else max(int(a.bin_start.max()) for a in aggs.values() if len(a))
    name = manifest["name"] if manifest else root.name
    path = emit_plot(aggs, root / name, total, title=name, fmt=args.format)
    print(f"wrote {path}")
    return path


def cmd_all(args) -> None:
    root = cmd_run(args)
    cmd_aggregate(argparse.Namespace(dir=root, bin=args.bin))
    cmd_plot(argparse.Namespace(dir=root, format=args.format))


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="qrlab", description=__doc__)
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    def run_opts(p):
        p.add_argument("config", help="experiment YAML file")
        p.add_argument("--seeds", type=_seeds, help="comma-separated seed list, e.g. 0,1,2")
        p.add_argument("--out", help="output root (default: config output_dir)")
        p.add_argument("--workers", type=int, help="parallel runs (default: $QRL_WORKERS or 1)")
        p.add_argument("--resume", action="store_true", help="skip runs already completed")

    run_opts(sub.add_parser("run", help="train every variant and seed"))
    p = sub.add_parser("aggregate", help="bin per-seed curves into aggregate.csv")
    p.add_argument("dir")
    p.add_argument("--bin", type=int, default=DEFAULT_BIN)
    p = sub.add_parser("plot", help="draw mean +- std learning curves")
    p.add_argument("dir")
    p.add_argument("--format", default="svg", choices=["svg", "pdf"])
    p = sub.add_parser("all", help="run, aggregate and plot")
    run_opts(p)
    p.add_argument("--bin", type=int, default=DEFAULT_BIN)
    p.add_argument("--format", default="svg", choices=["svg", "pdf"])
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(asctime)s %(name)s: %(message)s")
    handler = {"run": cmd_run, "aggregate": cmd_aggregate, "plot": cmd_plot, "all": cmd_all}
    try:
        handler[args.command](args)
    except Exception as exc:
        print(f"qrlab {args.command}: error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
