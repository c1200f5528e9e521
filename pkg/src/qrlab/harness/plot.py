from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

from .curves import AggregateCurve  # noqa: E402

MAX_RETURN = 500


def emit_plot(aggregates: dict[str, AggregateCurve], path: str | Path, total_steps: int,
              title: str = "", fmt: str = "svg") -> Path:
    """Mean line with a shaded one-std band per configuration, one chart per call."""
    if not aggregates:
        raise ValueError("emit_plot() needs at least one aggregate")
    plt.rcParams["svg.hashsalt"] = "qrlab"
    fig, ax = plt.subplots(figsize=(7, 4.2))
    for label, agg in aggregates.items():
        x = agg.bin_start + 0.0
        (line,) = ax.plot(x, agg.mean, label=label, lw=1.6)
        if (agg.std > 0).any():
            ax.fill_between(x, agg.mean - agg.std, agg.mean + agg.std,
                            color=line.get_color(), alpha=0.2, lw=0)
    ax.set_xlim(0, total_steps)
    ax.set_ylim(0, MAX_RETURN)
    ax.set_xlabel("environment steps")
    ax.set_ylabel("episodic return")
    if title:
        ax.set_title(title)
    ax.legend(loc="upper left", fontsize=8, frameon=False)
    ax.grid(alpha=0.3)
    fig.tight_layout()
    path = Path(path).with_suffix(f".{fmt}")
    fig.savefig(path, format=fmt, metadata={"Date": None} if fmt == "svg" else None)
    plt.close(fig)
    return path
