"""Multi-seed orchestration: one training run per (variant, seed), one file per run."""

from __future__ import annotations

import dataclasses
import json
import logging
import os
import platform
import traceback
from concurrent.futures import ProcessPoolExecutor
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from .. import __version__
from ..ppo import PPOConfig, train
from .config import ExperimentConfig, Variant, agent_from_dict
from .curves import DEFAULT_BIN, aggregate, read_curve, write_aggregate, write_curve

log = logging.getLogger(__name__)

MANIFEST = "manifest.json"


def _now() -> str:
    return datetime.now(timezone.utc).isoformat(timespec="seconds")


def default_workers() -> int:
    env = os.environ.get("QRL_WORKERS")
    if env:
        return max(1, int(env))
    return 1


def _run_one(agent: dict, ppo_kwargs: dict, seed: int, csv_path: str, variant_hash: str) -> dict:
    started = _now()
    meta = {"seed": seed, "variant_hash": variant_hash, "started": started}
    try:
        curve = train(agent_from_dict(agent), PPOConfig(**ppo_kwargs, seed=seed))
        write_curve(csv_path, curve)
        meta.update(status="aborted" if curve.aborted else "ok", message=curve.message,
                    episodes=len(curve.returns), wall_time=round(curve.wall_time, 3))
    except Exception as exc:  # recorded; the experiment carries on with other seeds
        meta.update(status="failed", message=f"{type(exc).__name__}: {exc}",
                    traceback=traceback.format_exc())
    meta["finished"] = _now()
    with open(csv_path.removesuffix(".csv") + ".meta.json", "w") as fh:
        json.dump(meta, fh, indent=1)
    return meta


def seed_csv(root: Path, variant: Variant, seed: int) -> Path:
    return root / variant.name / f"seed_{seed}.csv"


def _cached(csv_path: Path, variant_hash: str) -> dict | None:
    meta_path = csv_path.with_suffix(".meta.json")
    if not (csv_path.exists() and meta_path.exists()):
        return None
    meta = json.loads(meta_path.read_text())
    if meta.get("variant_hash") == variant_hash and meta.get("status") == "ok":
        return meta
    return None


def run_experiment(config: ExperimentConfig, out_dir: str | Path | None = None,
                   workers: int | None = None, resume: bool = False) -> Path:
    """Train every (variant, seed) pair and write CSVs plus ``manifest.json``.

    With ``resume`` a run is skipped if its CSV exists and its sidecar records a
    successful run of the same variant hash.
    """
    root = Path(out_dir if out_dir is not None else config.output_dir) / config.name
    root.mkdir(parents=True, exist_ok=True)
    workers = workers or default_workers()
    ppo_kwargs = {k: v for k, v in dataclasses.asdict(config.ppo_config(0)).items() if k != "seed"}
    started = _now()
    jobs, results = [], {}
    for variant in config.variants():
        (root / variant.name).mkdir(exist_ok=True)
        vh = config.variant_hash(variant)
        for seed in config.seeds:
            path = seed_csv(root, variant, seed)
            meta = _cached(path, vh) if resume else None
            if meta is not None:
                results[(variant.name, seed)] = {**meta, "cached": True}
            else:
                jobs.append((variant, seed, (variant.agent, ppo_kwargs, seed, str(path), vh)))

    log.info("%s: %d runs to do, %d cached, %d workers", config.name, len(jobs), len(results), workers)
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            futures = [(v, s, pool.submit(_run_one, *args)) for v, s, args in jobs]
            for v, s, fut in futures:
                results[(v.name, s)] = fut.result()
    else:
        for v, s, args in jobs:
            results[(v.name, s)] = _run_one(*args)
            log.info("%s/%s seed %d: %s (%.1fs)", config.name, v.name, s,
                     results[(v.name, s)]["status"], results[(v.name, s)].get("wall_time", 0.0))

    manifest = {
        "name": config.name,
        "config": config.to_dict(),
        "config_hash": config.config_hash(),
        "approximated": config.approximated,
        "total_steps": config.total_steps,
        "seeds": list(config.seeds),
        "variants": [
            {"name": v.name, "label": v.label, "factors": v.factors, "agent": v.agent,
             "variant_hash": config.variant_hash(v),
             "runs": [results[(v.name, s)] for s in config.seeds]}
            for v in config.variants()
        ],
        "started": started,
        "finished": _now(),
        "versions": {"qrlab": __version__, "numpy": np.__version__,
                     "python": platform.python_version()},
    }
    with open(root / MANIFEST, "w") as fh:
        json.dump(manifest, fh, indent=1)
    return root


def variant_dirs(root: str | Path) -> list[Path]:
    root = Path(root)
    if any(root.glob("seed_*.csv")):
        return [root]
    return sorted(p for p in root.iterdir() if p.is_dir() and any(p.glob("seed_*.csv")))


def load_curves(vdir: str | Path):
    files = sorted(Path(vdir).glob("seed_*.csv"), key=lambda p: int(p.stem.split("_")[1]))
    return [read_curve(p) for p in files]


def aggregate_dir(root: str | Path, bin_width: int = DEFAULT_BIN) -> dict[str, Path]:
    """Write ``aggregate.csv`` next to every variant's seed files."""
    out = {}
    dirs = variant_dirs(root)
    if not dirs:
        raise FileNotFoundError(f"no seed_*.csv files under {root}")
    for vdir in dirs:
        path = vdir / "aggregate.csv"
        write_aggregate(path, aggregate(load_curves(vdir), bin_width))
        out[vdir.name] = path
    return out


def read_manifest(root: str | Path) -> dict | None:
    path = Path(root) / MANIFEST
    return json.loads(path.read_text()) if path.exists() else None


def run_wall_times(root: str | Path) -> dict[str, list[float]]:
    manifest = read_manifest(root) or {"variants": []}
    return {v["name"]: [r.get("wall_time", float("nan")) for r in v["runs"]]
            for v in manifest["variants"]}
