import json
import math

import numpy as np
import pytest

from lmgdfm.fracsim import simulate_panel
from lmgdfm.harness.config import ConfigError, ExperimentConfig, load_config, preset_config, preset_model
from lmgdfm.harness.figures import run_figure
from lmgdfm.harness.montecarlo import (CellResult, emit_table, parse_table_csv, replication_seed,
                                       run_montecarlo)


def _small(**kw):
    doc = dict(model="table12", grid=[[20, 40], [30, 40]], replications=3, seed=7, M=4)
    doc.update(kw)
    return ExperimentConfig.from_dict(doc)


def test_deterministic_and_thread_independent():
    cfg = _small(methods=["dynamic", "static", "oracle"])
    a = run_montecarlo(cfg, threads=1)
    b = run_montecarlo(cfg, threads=3)
    for method in cfg.methods:
        assert emit_table(a, method) == emit_table(b, method)
        for key, cell in a.cells.items():
            np.testing.assert_array_equal(cell.values, b.cells[key].values)
    assert a.meta["config_hash"] == cfg.config_hash()


def test_seed_changes_results():
    a = run_montecarlo(_small(seed=1, methods=["static"]))
    b = run_montecarlo(_small(seed=2, methods=["static"]))
    assert not np.array_equal(a.get(20, 40, "static").values, b.get(20, 40, "static").values)


@pytest.mark.filterwarnings("ignore:.*empty kernel window")
def test_zero_loading_cell_is_invalid():
    n = 6
    model = {"d": [0.3] * n, "c": [0.0] * n, "alpha": [0.5] * n, "idio": {"kind": "white", "sigma": 1.0}}
    cfg = ExperimentConfig.from_dict({"model": model, "grid": [[n, 32]], "replications": 3, "M": 2})
    table = run_montecarlo(cfg)
    cell = table.get(n, 32, "dynamic")
    assert cell.failures == 3 and not cell.valid
    assert emit_table(table, "dynamic").splitlines()[1] == f"{n},-"
    assert parse_table_csv(emit_table(table, "dynamic"))[(n, 32)] is None


def test_failure_limit():
    vals = np.array([0.1] * 8 + [math.nan] * 2)
    assert not CellResult(1, 1, "x", vals, 2).valid
    vals = np.array([0.1] * 9 + [math.nan])
    assert CellResult(1, 1, "x", vals, 1).cell() == "0.100(0.000)"


def test_csv_round_trip_and_markdown():
    table = run_montecarlo(_small())
    parsed = parse_table_csv(emit_table(table, "static"))
    for (n, T), (mean, std) in parsed.items():
        cell = table.get(n, T, "static")
        assert mean == pytest.approx(cell.mean, abs=5e-4)
        assert std == pytest.approx(cell.std, abs=5e-4)
    md = emit_table(table, "static", "markdown").splitlines()
    assert md[0] == "| n\\T | 40 |"
    assert len(md) == 2 + len(table.ns)
    with pytest.raises(ValueError):
        emit_table(table, "static", "latex")


@pytest.mark.parametrize("doc", [
    {"grid": [[20, 40]]},
    {"model": "table12", "grid": [[20, 40]], "bogus": 1},
    {"model": "nope", "grid": [[20, 40]]},
    {"model": "table12", "grid": [[20, 40]], "b": 1.5},
    {"model": "table12", "grid": [[20, 40]], "methods": ["magic"]},
    {"model": "table12", "grid": [[1, 40]]},
    {"model": "table12", "grid": [[20, 8]]},
    {"model": {"d": [0.3, 0.3], "c": 1.0, "alpha": [0.5, 0.5]}, "grid": [[5, 40]]},
])
def test_schema_errors(doc):
    with pytest.raises(ConfigError):
        ExperimentConfig.from_dict(doc)


def test_load_config(tmp_path):
    with pytest.raises(ConfigError):
        load_config(tmp_path / "missing.json")
    (tmp_path / "bad.json").write_text("{not json")
    with pytest.raises(ConfigError):
        load_config(tmp_path / "bad.json")
    cfg = _small()
    (tmp_path / "ok.json").write_text(json.dumps(cfg.to_dict()))
    loaded = load_config(tmp_path / "ok.json")
    assert loaded == cfg and loaded.config_hash() == cfg.config_hash()
    assert cfg.replace(seed=8).config_hash() != cfg.config_hash()


def test_presets():
    assert preset_config("table12").grid == ((50, 200),)
    with pytest.raises(ConfigError):
        preset_model("missing")
    assert preset_model("rank3-factor", 12).q == 3


def test_replication_streams_uncorrelated():
    spec = preset_model("table12", 50)
    seeds = {replication_seed(0, 50, 200, r) for r in range(50)}
    assert len(seeds) == 50
    a = simulate_panel(spec, 200, replication_seed(0, 50, 200, 0)).xi.ravel()
    b = simulate_panel(spec, 200, replication_seed(0, 50, 200, 1)).xi.ravel()
    assert abs(np.corrcoef(a, b)[0, 1]) <= 0.1


def test_run_figure_with_injected_norms(tmp_path):
    h = np.arange(1, 401)
    res = run_figure("decay", norms=np.column_stack([h, 2.0 / h]))
    assert f"{res.fit.slope:.3f}" == "-1.000"
    res.to_csv(tmp_path / "decay.csv")
    assert (tmp_path / "decay.csv").read_text().startswith("h,norm,fit_slope,fit_intercept")
    with pytest.raises(ConfigError):
        run_figure("nope")
    with pytest.raises(ConfigError):
        run_figure("decay", colour="red")


def test_eigengap_figure():
    res = run_figure("eigengap", n=40, points=20)
    assert res.data.shape == (20, 2)
    assert res.summary["doubling_ratio"] == pytest.approx(2.0, rel=0.1)
