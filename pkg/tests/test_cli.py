"""Command-line entry point: exit codes and written files."""

import json

import pandas as pd
import pytest

from comet_dse.cli import build_parser, main

TINY_SWEEP = [
    "--set", "sweep.ms_values=[3.0e+5]",
    "--set", "sweep.ku_values=[5.0e+5]",
    "--set", "sweep.alpha_values=[0.01]",
    "--set", "sweep.jc_values=[5.0e+11, 1.0e+12]",
    "--set", "sweep.vfe_values=[0.11]",
]


def test_no_command_prints_help(capsys):
    assert main([]) == 2
    assert "usage: comet-dse" in capsys.readouterr().out


def test_parser_knows_every_command():
    parser = build_parser()
    for command in ("nucleate", "propagate", "gate", "sweep", "pareto", "report"):
        assert parser.parse_args([command]).command == command


def test_unknown_config_key_exits_with_2(tmp_path, caplog):
    assert main(["gate", "--set", "material.ms_pm=1", "--out", str(tmp_path)]) == 2
    assert "did you mean 'material.ms_pma'" in caplog.text


def test_missing_config_file_exits_with_2(tmp_path):
    assert main(["gate", "--config", str(tmp_path / "nope.yaml"), "--out", str(tmp_path)]) == 2


def test_solver_failure_exits_with_3(tmp_path):
    assert main(["propagate", "--set", "dw.horizon=1 ps", "--out", str(tmp_path)]) == 3
    assert not (tmp_path / "metadata.json").exists()


def test_pareto_without_results_exits_with_4(tmp_path):
    assert main(["pareto", "--out", str(tmp_path)]) == 4


def test_gate_writes_report_files(tmp_path, capsys):
    assert main(["gate", "--quiet", "--out", str(tmp_path)]) == 0
    assert capsys.readouterr().out.startswith("T = ")
    for name in ("table2.csv", "reports.json", "schedule.csv", "annotations.json"):
        assert (tmp_path / name).is_file()
    table = pd.read_csv(tmp_path / "table2.csv")
    assert table["t_nucleate_ps"].tolist() == [35.0]
    metadata = json.loads((tmp_path / "metadata.json").read_text())
    assert metadata["command"] == f"comet-dse gate --quiet --out {tmp_path}"
    assert metadata["config"]["node"] == "15nm"


def test_propagate_writes_trace(tmp_path):
    assert main(["propagate", "-q", "-o", str(tmp_path)]) == 0
    summary = json.loads((tmp_path / "propagation.json").read_text())
    assert summary["v_avg"] == pytest.approx(summary["distance"] / summary["t_propagate"])
    trace = pd.read_csv(tmp_path / "propagation_trace.csv")
    assert list(trace.columns) == ["t", "q", "phi", "delta", "v_inst"]


def test_propagation_sweep_outputs(tmp_path):
    assert main(["sweep", "-q", "--mode", "propagation", "-o", str(tmp_path), *TINY_SWEEP]) == 0
    results = pd.read_csv(tmp_path / "results.csv")
    assert results["index"].tolist() == [0, 1]
    assert (tmp_path / "fig-prop.csv").is_file()
    clusters = json.loads((tmp_path / "clusters.json").read_text())
    assert clusters["separated"] is True


def test_gate_sweep_then_pareto(tmp_path, capsys):
    assert main(["sweep", "-q", "--mode", "gate", "-o", str(tmp_path), *TINY_SWEEP]) == 0
    assert (tmp_path / "fig-edp.csv").is_file()
    assert main(["pareto", "-q", "-o", str(tmp_path), *TINY_SWEEP]) == 0
    summary = json.loads((tmp_path / "pareto.json").read_text())
    assert 1 <= len(summary["front"]) <= 2
    assert len(summary["knees"]) == 1
    assert "Front of" in capsys.readouterr().out


@pytest.mark.parametrize("mode, files", [("propagation", ["results.csv", "fig-prop.csv"]),
                                         ("gate", ["results.csv", "fig-edp.csv"])])
def test_repeated_sweeps_write_identical_files(tmp_path, mode, files):
    first, second = tmp_path / "first", tmp_path / "second"
    assert main(["sweep", "-q", "--mode", mode, "-o", str(first), *TINY_SWEEP]) == 0
    assert main(["sweep", "-q", "--mode", mode, "-j", "2", "-o", str(second), *TINY_SWEEP]) == 0
    for name in files:
        assert (first / name).read_bytes() == (second / name).read_bytes(), name


@pytest.mark.slow
def test_report_writes_both_tables(tmp_path):
    assert main(["report", "-q", "-o", str(tmp_path)]) == 0
    published = pd.read_csv(tmp_path / "table2_published.csv", dtype={"node": str})
    assert published["t_comet_ps"].tolist()[:2] == [242.4, 165.0]
    assert len(pd.read_csv(tmp_path / "table2.csv")) == 8
    annotations = json.loads((tmp_path / "annotations.json").read_text())
    assert set(annotations) == {"modelled", "published", "calibration"}
