"""Train every experiment under configs/acceptance/ into the acceptance cache.

Completed runs are skipped, so the script can be interrupted and restarted.
``pytest tests/test_acceptance.py`` then reads the cached curves.

    QRL_WORKERS=4 python scripts/run_acceptance_experiments.py [name ...]
"""

import argparse
import logging
import os
import time
from pathlib import Path

from qrlab.harness import load_config, run_experiment

REPO = Path(__file__).resolve().parents[1]
ORDER = ["baseline_mlp", "skolik_dr", "uqc_or", "uqc_or_entangled", "perf_uqc_deep"]


def main():
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("names", nargs="*", default=ORDER)
    ap.add_argument("--out", default=os.environ.get("QRL_ACCEPTANCE_DIR", REPO / "results" / "acceptance"))
    args = ap.parse_args()
    logging.basicConfig(level=logging.INFO, format="%(asctime)s %(message)s")
    for name in args.names:
        t0 = time.time()
        root = run_experiment(load_config(REPO / "configs" / "acceptance" / f"{name}.yaml"),
                              args.out, resume=True)
        print(f"{name}: {root} ({time.time() - t0:.0f}s)", flush=True)


if __name__ == "__main__":
    main()
