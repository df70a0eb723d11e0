import csv
import io
import json

import pytest

from hybridnoc import cli
from hybridnoc.config import Config, config_from_dict, load_config, parse_config
from hybridnoc.errors import ConfigurationError, LayoutError
from hybridnoc.experiment import ExperimentPlan, load_manifest, run_plan
from hybridnoc.topology import VARIANTS
from hybridnoc.traffic import SHIPPED_PATTERNS

SMALL_INI = """
[experiment]
patterns = FCP-center
variants = 1x1, 8x4
duration = 200
"""


def test_defaults_and_digest():
    a, b = Config(), load_config(None)
    assert a.digest() == b.digest()
    assert config_from_dict(a.to_dict()) == a


def test_parse_special_keys():
    cfg = parse_config("""
[dse]
lengths_mm = 10:30:10
data_rates_gbps = 8 16
[experiment]
variants = all
baseline = no
[sim]
cycle_ceiling = 500
""")
    assert cfg.dse.lengths == (0.01, 0.02, 0.03)
    assert cfg.dse.data_rates == (8e9, 16e9)
    assert cfg.experiment.variants == VARIANTS
    assert cfg.experiment.baseline is False
    assert cfg.sim.cycle_ceiling == 500


@pytest.mark.parametrize("text", [
    "[nope]\nx = 1\n", "[sim]\nbogus = 1\n", "[sim]\nvc_depth = deep\n",
    "[experiment]\nbaseline = maybe\n",
])
def test_bad_config(text):
    with pytest.raises(ConfigurationError):
        parse_config(text)


def test_missing_config_file(tmp_path):
    with pytest.raises(ConfigurationError):
        load_config(tmp_path / "absent.ini")


def test_full_plan_cardinality(tmp_path):
    plan = ExperimentPlan(Config(), tmp_path)
    assert len(plan.cells()) == len(VARIANTS) * len(SHIPPED_PATTERNS) + len(SHIPPED_PATTERNS)


def test_plan_rejects_bad_variant(tmp_path):
    with pytest.raises(LayoutError):
        ExperimentPlan(parse_config("[experiment]\nvariants = 3x1\n"), tmp_path)


def _rows(path):
    return list(csv.DictReader(io.StringIO(path.read_text())))


def test_baseline_only_plan(tmp_path):
    cfg = parse_config("[experiment]\npatterns = MFM-corner\nvariants = \nduration = 200\n")
    rows = run_plan(ExperimentPlan(cfg, tmp_path))
    assert len(rows) == 1 and rows[0]["status"] == "ok" and rows[0]["K"] is None
    (row,) = _rows(tmp_path / "results.csv")
    assert row["photonic_dynamic_J"] == "" and row["photonic_static_W"] == ""
    assert float(row["mean_latency"]) > 0


def test_rerun_from_manifest_is_identical(tmp_path):
    cfg = parse_config(SMALL_INI)
    first = tmp_path / "a"
    rows = run_plan(ExperimentPlan(cfg, first))
    assert [r["K"] for r in rows] == [None, 1, 8]
    assert all(r["status"] == "ok" for r in rows)
    replay = load_manifest(first / "manifest.json")
    assert replay == cfg
    second = tmp_path / "b"
    run_plan(ExperimentPlan(replay, second), workers=2)
    assert (first / "results.csv").read_bytes() == (second / "results.csv").read_bytes()
    assert sorted(p.name for p in (first / "cells").iterdir()) == \
        sorted(p.name for p in (second / "cells").iterdir())


def test_tampered_manifest(tmp_path):
    cfg = parse_config(SMALL_INI)
    run_plan(ExperimentPlan(cfg, tmp_path))
    path = tmp_path / "manifest.json"
    data = json.loads(path.read_text())
    data["config"]["experiment"]["seed"] = 99
    path.write_text(json.dumps(data))
    with pytest.raises(ConfigurationError):
        load_manifest(path)


# ---- CLI --------------------------------------------------------------------

def test_length_arg():
    assert cli.length_arg("70mm") == pytest.approx(0.07)
    assert cli.length_arg("0.07m") == pytest.approx(0.07)
    assert cli.length_arg("70") == pytest.approx(0.07)


def test_malformed_length(capsys):
    with pytest.raises(SystemExit) as exc:
        cli.main(["dse", "--L", "seventy", "--E", "16", "--S", "1"])
    assert exc.value.code != 0
    assert "--L" in capsys.readouterr().err


def test_dse_single_point(capsys):
    assert cli.main(["dse", "--L", "70mm", "--E", "16", "--S", "1"]) == 0
    rows = list(csv.reader(io.StringIO(capsys.readouterr().out)))
    assert len(rows) == 2
    assert rows[1][3] == "16"


def test_dse_trend(tmp_path):
    assert cli.main(["dse", "--trend", "--E", "16", "--S", "2", "--out", str(tmp_path)]) == 0
    rows = _rows(tmp_path / "dse_trend_E16_S2.csv")
    assert len(rows) == 64
    feasible = [r for r in rows if r["photonic_pJ"]]
    assert feasible and all(float(r["L_mm"]) % 5 == 0 for r in feasible)


def test_router_sweep(capsys):
    assert cli.main(["router-sweep"]) == 0
    rows = list(csv.DictReader(io.StringIO(capsys.readouterr().out)))
    assert min(rows, key=lambda r: float(r["total_pJ"]))["config"] == "128b@1GHz"


def test_topo_all(tmp_path):
    assert cli.main(["topo", "--all", "--out", str(tmp_path)]) == 0
    assert len(_rows(tmp_path / "variants.csv")) == 14


def test_select_and_tables(tmp_path):
    out = str(tmp_path)
    assert cli.main(["select", "--K", "2", "--S", "2", "--pattern", "FCP-side", "--tables",
                     "--out", out, "--seed", "3"]) == 0
    sel = json.loads((tmp_path / "selection_K2_S2.json").read_text())
    assert sel["activated"]
    assert (tmp_path / "routing_K2_S2.json").exists()


def test_select_from_matrix(tmp_path, capsys):
    m = tmp_path / "m.csv"
    m.write_text("src,dst,volume\n0,63,10\n")
    assert cli.main(["select", "--matrix", str(m)]) == 0
    data = json.loads(capsys.readouterr().out)
    assert data["activated"][0]["destination"] == 63


def test_sim_from_trace(tmp_path, capsys):
    t = tmp_path / "t.trace"
    t.write_text("0 0 63 1\n")
    assert cli.main(["sim", "--trace", str(t)]) == 0
    data = json.loads(capsys.readouterr().out)
    assert data["sim"]["mean_latency"] == 15


def test_sim_bad_trace_exit_code(tmp_path, capsys):
    t = tmp_path / "t.trace"
    t.write_text("0 0 63\n")
    assert cli.main(["sim", "--trace", str(t)]) == 1
    assert "line 1" in capsys.readouterr().err


def test_experiment_command(tmp_path):
    ini = tmp_path / "c.ini"
    ini.write_text(SMALL_INI)
    out = tmp_path / "res"
    assert cli.main(["experiment", "--config", str(ini), "--out", str(out)]) == 0
    assert len(_rows(out / "results.csv")) == 3
    again = tmp_path / "again"
    assert cli.main(["experiment", "--manifest", str(out / "manifest.json"),
                     "--out", str(again)]) == 0
    assert (out / "results.csv").read_bytes() == (again / "results.csv").read_bytes()
