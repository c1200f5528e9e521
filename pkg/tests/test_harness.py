import json
import xml.etree.ElementTree as ET
from pathlib import Path

import numpy as np
import pytest
import yaml
from hypothesis import given
from hypothesis import strategies as st

from oracles import aggregate_direct
from qrlab.cli import main
from qrlab.harness import (
    ExperimentConfig,
    aggregate,
    aggregate_dir,
    final_window_mean,
    load_config,
    read_aggregate,
    read_curve,
    run_experiment,
    write_aggregate,
    write_curve,
)
from qrlab.harness.plot import emit_plot
from qrlab.ppo import LearningCurve
from qrlab.statevector import ConfigError

CONFIGS = Path(__file__).resolve().parents[1] / "configs"


def smoke(tmp_path, **kw):
    data = dict(name="smoke", agent={"kind": "hybrid", "family": "uqc_b", "num_qubits": 2,
                                     "dr_layers": 1, "entangled": False, "reuse": 4},
                ppo={"total_steps": 2048}, seeds=[0, 1])
    data.update(kw)
    path = tmp_path / "smoke.yaml"
    path.write_text(yaml.safe_dump(data))
    return path


# -- configs ---------------------------------------------------------------------


def grid_of(name):
    cfg = load_config(CONFIGS / f"{name}.yaml")
    return cfg, {tuple(sorted(v.factors.items())) for v in cfg.variants()}


def test_fig4_grids():
    cfg, grid = grid_of("fig4a_hybrid_or")
    assert sorted(v.factors["reuse"] for v in cfg.variants()) == [4, 8, 16, 32]
    assert cfg.agent["kind"] == "hybrid" and cfg.agent["family"] == "uqc_b"
    cfg, _ = grid_of("fig4b_classical_or")
    assert sorted(v.factors["reuse"] for v in cfg.variants()) == [4, 8, 16, 32]
    assert cfg.agent["kind"] == "or_control"


def test_fig5_grids():
    cfg, grid = grid_of("fig5a_skolik_dr")
    assert grid == {(("dr_layers", L), ("num_qubits", q)) for L in (1, 2, 5) for q in (4, 8)}
    assert cfg.agent["family"] == "skolik_a" and cfg.approximated
    cfg, grid = grid_of("fig5b_uqc_dr")
    assert grid == {(("dr_layers", L), ("num_qubits", q)) for L in (1, 2, 5) for q in (1, 2)}
    assert cfg.agent["family"] == "uqc_b"


def test_fig6_fig7_grids():
    cfg, grid = grid_of("fig6_template_a_entanglement")
    assert grid == {(("dr_layers", L), ("entangled", e)) for L in (1, 2, 5) for e in (True, False)}
    assert cfg.agent["family"] == "skolik_a"
    cfg, grid = grid_of("fig7a_template_b_or_entanglement")
    assert grid == {(("entangled", e), ("reuse", r)) for r in (4, 16) for e in (True, False)}
    cfg, grid = grid_of("fig7b_template_b_dr_entanglement")
    assert grid == {(("dr_layers", L), ("entangled", e)) for L in (1, 2, 5) for e in (True, False)}
    assert cfg.agent["family"] == "uqc_b"


@pytest.mark.parametrize("path", sorted(CONFIGS.glob("*.yaml")), ids=lambda p: p.stem)
def test_shipped_configs_load(path):
    cfg = load_config(path)
    assert cfg.name == path.stem
    if cfg.name != "smoke":
        assert cfg.seeds == tuple(range(10))
        assert cfg.total_steps == 99_968


def test_config_validation(tmp_path):
    with pytest.raises(ConfigError):
        ExperimentConfig(name="bad/name", agent={"kind": "mlp"})
    with pytest.raises(ConfigError):
        ExperimentConfig(name="x", agent={"kind": "mlp"}, seeds=[1, 1])
    with pytest.raises(ConfigError):
        ExperimentConfig(name="x", agent={"kind": "mlp"}, seeds=[])
    with pytest.raises(ConfigError):
        ExperimentConfig(name="x", agent={"kind": "hybrid", "family": "skolik_a", "num_qubits": 3})
    with pytest.raises(ConfigError):
        ExperimentConfig(name="x", agent={"kind": "mlp"}, ppo={"seed": 3})
    with pytest.raises(ConfigError):
        ExperimentConfig(name="x", agent={"kind": "quantum"})
    with pytest.raises(ConfigError):
        load_config(smoke(tmp_path, colour="blue"))


# -- curves ----------------------------------------------------------------------


@given(rows=st.lists(st.tuples(st.integers(1, 10**6), st.floats(0, 500)), max_size=50))
def test_csv_round_trip(tmp_path_factory, rows):
    rows = sorted(rows)
    curve = LearningCurve(3, [s for s, _ in rows], [r for _, r in rows])
    path = tmp_path_factory.mktemp("c") / "seed_3.csv"
    write_curve(path, curve)
    back = read_curve(path)
    assert back.seed == 3 and back.steps == curve.steps and back.returns == curve.returns


def test_csv_schema(tmp_path):
    write_curve(tmp_path / "seed_0.csv", LearningCurve(0, [12, 40], [12.0, 28.0]))
    assert (tmp_path / "seed_0.csv").read_text() == "step,episodic_return\n12,12.0\n40,28.0\n"
    agg = aggregate([([12, 40], [12.0, 28.0])], 2000)
    write_aggregate(tmp_path / "agg.csv", agg)
    text = (tmp_path / "agg.csv").read_text()
    assert text.splitlines()[0] == "bin_start,mean,std,n_seeds"
    back = read_aggregate(tmp_path / "agg.csv")
    np.testing.assert_array_equal(back.mean, agg.mean)


def test_aggregate_single_seed_has_zero_std():
    agg = aggregate([([100, 2500, 4100], [10.0, 20.0, 30.0])])
    np.testing.assert_array_equal(agg.std, 0)
    np.testing.assert_array_equal(agg.bin_start, [0, 2000, 4000])


def test_aggregate_two_constant_curves():
    steps = list(range(50, 10_000, 100))
    agg = aggregate([(steps, [100.0] * len(steps)), (steps, [300.0] * len(steps))], 1000)
    np.testing.assert_allclose(agg.mean, 200)
    np.testing.assert_allclose(agg.std, 100)
    np.testing.assert_array_equal(agg.n_seeds, 2)


def test_aggregate_matches_direct_oracle():
    rng = np.random.default_rng(0)
    curves = []
    for _ in range(10):
        steps = np.sort(rng.choice(100_000, size=rng.integers(20, 400), replace=False)) + 1
        curves.append((steps.tolist(), rng.uniform(8, 500, len(steps)).tolist()))
    agg = aggregate(curves, 2000)
    want = aggregate_direct(curves, 2000)
    assert len(agg) == len(want)
    for row, w in zip(zip(agg.bin_start, agg.mean, agg.std, agg.n_seeds), want):
        assert row[0] == w[0] and row[3] == w[3]
        assert abs(row[1] - w[1]) < 1e-12 and abs(row[2] - w[2]) < 1e-12


def test_aggregate_properties():
    rng = np.random.default_rng(1)
    curves = [(np.sort(rng.integers(1, 20_000, 30)).tolist(), rng.uniform(0, 500, 30).tolist())
              for _ in range(4)]
    curves.append(([30_001], [42.0]))
    agg = aggregate(curves, 2000)
    assert np.all(np.diff(agg.bin_start) > 0)
    assert np.all(agg.std >= 0)
    assert agg.n_seeds[-1] == 1 and agg.mean[-1] == 42.0
    with pytest.raises(ValueError):
        aggregate([])


def test_final_window_mean():
    c = LearningCurve(0, [10, 50_000, 90_000, 99_000], [1.0, 2.0, 3.0, 5.0])
    assert final_window_mean(c, 100_000) == 4.0
    assert np.isnan(final_window_mean(LearningCurve(0, [10], [1.0]), 100_000))


# -- running ---------------------------------------------------------------------


def test_run_experiment_smoke_and_rerun(tmp_path):
    cfg = load_config(smoke(tmp_path))
    root = run_experiment(cfg, tmp_path / "out")
    csvs = sorted(root.rglob("*.csv"))
    assert [p.name for p in csvs] == ["seed_0.csv", "seed_1.csv"]
    manifest = json.loads((root / "manifest.json").read_text())
    assert manifest["seeds"] == [0, 1] and manifest["config_hash"] == cfg.config_hash()
    assert all(r["status"] == "ok" for r in manifest["variants"][0]["runs"])
    first = [p.read_bytes() for p in csvs]
    root2 = run_experiment(cfg, tmp_path / "again")
    assert [p.read_bytes() for p in sorted(root2.rglob("*.csv"))] == first


def test_resume_skips_completed(tmp_path):
    cfg = load_config(smoke(tmp_path, seeds=[4]))
    root = run_experiment(cfg, tmp_path / "out")
    manifest = json.loads((root / "manifest.json").read_text())
    assert "cached" not in manifest["variants"][0]["runs"][0]
    root = run_experiment(cfg, tmp_path / "out", resume=True)
    manifest = json.loads((root / "manifest.json").read_text())
    assert manifest["variants"][0]["runs"][0]["cached"]


def test_failed_seed_is_recorded(tmp_path, monkeypatch):
    import qrlab.harness.runner as runner

    def boom(*a, **k):
        raise RuntimeError("simulated failure")

    monkeypatch.setattr(runner, "train", boom)
    cfg = ExperimentConfig(name="broken", agent={"kind": "mlp"}, seeds=[0, 1])
    root = run_experiment(cfg, tmp_path)
    runs = json.loads((root / "manifest.json").read_text())["variants"][0]["runs"]
    assert [r["status"] for r in runs] == ["failed", "failed"]
    assert "simulated failure" in runs[0]["message"]


def test_parallel_workers_match_sequential(tmp_path):
    cfg = load_config(smoke(tmp_path, ppo={"total_steps": 512}))
    a = run_experiment(cfg, tmp_path / "seq", workers=1)
    b = run_experiment(cfg, tmp_path / "par", workers=2)
    for p in sorted(a.rglob("seed_*.csv")):
        assert p.read_bytes() == (b / p.relative_to(a)).read_bytes()


# -- plotting and CLI ------------------------------------------------------------


def test_emit_plot_is_valid_svg(tmp_path):
    aggs = {"R=4": aggregate([([1000, 3000], [20.0, 40.0])]),
            "R=16": aggregate([([1000, 3000], [30.0, 80.0]), ([1500, 3500], [50.0, 60.0])])}
    path = emit_plot(aggs, tmp_path / "fig", 100_000, title="t")
    root = ET.parse(path).getroot()
    assert root.tag.endswith("svg")
    text = path.read_text()
    assert "R=16" in text and "R=4" in text


def test_plot_axes_cover_bounds(tmp_path, monkeypatch):
    import matplotlib.figure

    seen = {}
    orig = matplotlib.figure.Figure.savefig

    def spy(self, *a, **k):
        ax = self.axes[0]
        seen["x"], seen["y"] = ax.get_xlim(), ax.get_ylim()
        seen["bands"] = len(ax.collections)
        return orig(self, *a, **k)

    monkeypatch.setattr(matplotlib.figure.Figure, "savefig", spy)
    emit_plot({"solo": aggregate([([1000, 3000], [20.0, 40.0])])}, tmp_path / "f", 50_000)
    assert seen["x"] == (0, 50_000) and seen["y"] == (0, 500)
    assert seen["bands"] == 0


def test_cli_all_and_errors(tmp_path, capsys):
    cfg = smoke(tmp_path, ppo={"total_steps": 512})
    out = tmp_path / "res"
    assert main(["all", str(cfg), "--out", str(out), "--seeds", "0,1", "--bin", "256"]) == 0
    root = out / "smoke"
    assert (root / "base" / "aggregate.csv").exists()
    ET.parse(root / "smoke.svg")
    assert main(["aggregate", str(root), "--bin", "128"]) == 0
    assert read_aggregate(root / "base" / "aggregate.csv").bin_start[1] == 128
    assert main(["plot", str(root)]) == 0
    assert main(["run", str(tmp_path / "missing.yaml")]) != 0
    assert main(["aggregate", str(tmp_path)]) != 0
    assert "error" in capsys.readouterr().err


def test_cli_workers_env(tmp_path, monkeypatch):
    from qrlab.harness.runner import default_workers

    monkeypatch.setenv("QRL_WORKERS", "3")
    assert default_workers() == 3
    monkeypatch.delenv("QRL_WORKERS")
    assert default_workers() == 1
