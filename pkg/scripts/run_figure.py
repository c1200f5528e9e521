"""Run one or more figure configs end to end: train, aggregate, plot.

    python scripts/run_figure.py configs/fig4a_hybrid_or.yaml [--seeds 0,1] [--out results]

Equivalent to ``qrlab all <config> --resume`` for each file.
"""

import sys

from qrlab.cli import main

if __name__ == "__main__":
    configs = [a for a in sys.argv[1:] if a.endswith((".yaml", ".yml"))]
    extra = [a for a in sys.argv[1:] if a not in configs]
    if not configs:
        sys.exit(__doc__)
    sys.exit(max(main(["all", c, "--resume", *extra]) for c in configs))
