from .config import ExperimentConfig, Variant, agent_from_dict, load_config
from .curves import (
    AggregateCurve,
    aggregate,
    final_window_mean,
    last_episodes_mean,
    read_aggregate,
    read_curve,
    write_aggregate,
    write_curve,
)
from .runner import aggregate_dir, load_curves, read_manifest, run_experiment, variant_dirs

__all__ = [
    "AggregateCurve",
    "ExperimentConfig",
    "Variant",
    "agent_from_dict",
    "aggregate",
    "aggregate_dir",
    "final_window_mean",
    "last_episodes_mean",
    "load_config",
    "load_curves",
    "read_aggregate",
    "read_curve",
    "read_manifest",
    "run_experiment",
    "variant_dirs",
    "write_aggregate",
    "write_curve",
]
