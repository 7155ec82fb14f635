"""CLI pipeline: subcommands, exit codes, artifact composability."""

from __future__ import annotations

import json
from pathlib import Path

import pytest

from gridlens.cli import main
from gridlens.export import load_export, load_slice

FIXTURE = {
    "sheets": [{
        "name": "S",
        "cells": [
            {"addr": "A1", "value": 5},
            {"addr": "B1", "formula": "=A1*2"},
            {"addr": "C1", "formula": "=B1+1"},
        ],
    }]
}

LINEAR = {
    "sheets": [{
        "name": "S",
        "cells": [
            {"addr": "A1", "value": 1, "label": "x1"},
            {"addr": "A2", "value": 1, "label": "x2"},
            {"addr": "B1", "formula": "=2*A1-A2"},
        ],
    }]
}


@pytest.fixture
def workdir(tmp_path: Path) -> Path:
    (tmp_path / "wb.json").write_text(json.dumps(FIXTURE))
    (tmp_path / "linear.json").write_text(json.dumps(LINEAR))
    (tmp_path / "factors.json").write_text(json.dumps({
        "factors": [
            {"cell": "S!A1", "min": 0, "max": 10},
            {"cell": "S!A2", "min": 0, "max": 10},
        ]
    }))
    return tmp_path


def run_slice(workdir: Path, workbook: str = "wb.json", kpi: str = "S!C1") -> Path:
    out = workdir / "out"
    code = main([
        "slice", "--workbook", str(workdir / workbook), "--kpi", kpi,
        "--out", str(out),
    ])
    assert code == 0
    return out / "slice.json"


class TestSlice:
    def test_success_summary(self, workdir, capsys):
        artifact = run_slice(workdir)
        out = capsys.readouterr().out
        assert "3 cells, 1 input, 2 references" in out
        assert artifact.exists()
        loaded = load_slice(artifact.read_bytes())
        assert loaded.cell_count == 3

    def test_unknown_kpi_exit_3(self, workdir, capsys):
        code = main([
            "slice", "--workbook", str(workdir / "wb.json"),
            "--kpi", "S!Z99", "--out", str(workdir / "out"),
        ])
        assert code == 3

    def test_cycle_exit_4(self, workdir, capsys):
        doc = {
            "sheets": [{
                "name": "S",
                "cells": [
                    {"addr": "A1", "formula": "=B1"},
                    {"addr": "B1", "formula": "=A1"},
                    {"addr": "C1", "formula": "=A1+1"},
                ],
            }]
        }
        (workdir / "cyc.json").write_text(json.dumps(doc))
        code = main([
            "slice", "--workbook", str(workdir / "cyc.json"),
            "--kpi", "S!C1", "--out", str(workdir / "out"),
        ])
        assert code == 4
        err = capsys.readouterr().err
        assert "S!A1" in err and "S!B1" in err

    def test_schema_error_exit_2(self, workdir):
        (workdir / "bad.json").write_text("{broken")
        code = main([
            "slice", "--workbook", str(workdir / "bad.json"),
            "--kpi", "S!C1", "--out", str(workdir / "out"),
        ])
        assert code == 2

    def test_missing_file_exit_2(self, workdir):
        code = main([
            "slice", "--workbook", str(workdir / "nope.json"),
            "--kpi", "S!C1", "--out", str(workdir / "out"),
        ])
        assert code == 2

    def test_validation_findings_on_stderr(self, workdir, capsys):
        doc = {
            "sheets": [{
                "name": "S",
                "cells": [
                    {"addr": "A1", "formula": "=Missing!A1+FOO(1)"},
                    {"addr": "B1", "formula": "=A1+1"},
                ],
            }]
        }
        (workdir / "warn.json").write_text(json.dumps(doc))
        code = main([
            "slice", "--workbook", str(workdir / "warn.json"),
            "--kpi", "S!B1", "--out", str(workdir / "out"),
        ])
        assert code == 0  # findings, not failures
        err = capsys.readouterr().err
        assert "unknown-sheet" in err and "unknown-function" in err

    def test_disciplines_override(self, workdir, capsys):
        (workdir / "disc.json").write_text(json.dumps({"S": "Energy"}))
        out = workdir / "out"
        code = main([
            "slice", "--workbook", str(workdir / "wb.json"), "--kpi", "S!C1",
            "--disciplines", str(workdir / "disc.json"), "--out", str(out),
        ])
        assert code == 0
        loaded = load_slice((out / "slice.json").read_bytes())
        assert loaded.workbook.discipline_of("S") == "Energy"


class TestMetrics:
    def test_csv_to_stdout(self, workdir, capsys):
        artifact = run_slice(workdir)
        code = main(["metrics", "--slice", str(artifact), "--format", "csv"])
        assert code == 0
        out = capsys.readouterr().out
        assert "Discipline Model,Cell Counts,Inputs,% Inputs,Average Valency" in out
        assert "Coupling Metrics" in out

    def test_single_discipline_matrix(self, workdir, capsys):
        artifact = run_slice(workdir)
        capsys.readouterr()
        code = main(["metrics", "--slice", str(artifact), "--format", "json"])
        assert code == 0
        doc = json.loads(capsys.readouterr().out)
        assert doc["couplingMatrix"]["disciplines"] == ["S"]
        assert doc["couplingMetrics"][0]["instability"] == 0.0

    def test_missing_artifact_exit_2(self, workdir):
        assert main(["metrics", "--slice", str(workdir / "none.json")]) == 2

    def test_write_to_out_dir(self, workdir, capsys):
        artifact = run_slice(workdir)
        out = workdir / "reports"
        code = main([
            "metrics", "--slice", str(artifact), "--format", "markdown",
            "--out", str(out),
        ])
        assert code == 0
        assert (out / "metrics.md").exists()

    def test_check_quadrant_warns_on_stderr(self, workdir, capsys):
        doc = {
            "sheets": [
                {"name": "In: A", "cells": [
                    {"addr": "A1", "formula": "='Out: B'!A1*2"},
                    {"addr": "A2", "formula": "=A1+1"},
                ]},
                {"name": "Out: B", "cells": [{"addr": "A1", "value": 3}]},
            ]
        }
        (workdir / "quad.json").write_text(json.dumps(doc))
        out = workdir / "outq"
        main(["slice", "--workbook", str(workdir / "quad.json"),
              "--kpi", "In: A!A2", "--out", str(out)])
        capsys.readouterr()
        code = main([
            "metrics", "--slice", str(out / "slice.json"),
            "--format", "json", "--check-quadrant",
        ])
        assert code == 0
        err = capsys.readouterr().err
        assert "input-reads-output" in err or "reads" in err


class TestSensitivity:
    def test_linear_fixture_report(self, workdir, capsys):
        artifact = run_slice(workdir, "linear.json", kpi="S!B1")
        out = workdir / "sens"
        code = main([
            "sensitivity", "--slice", str(artifact),
            "--factors", str(workdir / "factors.json"), "--out", str(out),
        ])
        assert code == 0
        csv_text = (out / "sensitivity.csv").read_text()
        lines = csv_text.splitlines()
        assert lines[0] == "Factor,Cell,Discipline,S!B1 rawEffect,S!B1 normalized"
        assert lines[1].startswith("x1,S!A1,S,20,100")
        assert lines[2].startswith("x2,S!A2,S,-10,50")
        assert (out / "design.json").exists()
        assert (out / "responses.json").exists()

    def test_min_above_max_exit_2(self, workdir, capsys):
        artifact = run_slice(workdir, "linear.json", kpi="S!B1")
        (workdir / "badf.json").write_text(json.dumps({
            "factors": [{"cell": "S!A1", "min": 5, "max": 1}]
        }))
        code = main([
            "sensitivity", "--slice", str(artifact),
            "--factors", str(workdir / "badf.json"), "--out", str(workdir / "sens"),
        ])
        assert code == 2
        assert "S!A1" in capsys.readouterr().err

    def test_failed_runs_exit_5(self, workdir, capsys):
        doc = {
            "sheets": [{
                "name": "S",
                "cells": [
                    {"addr": "A1", "value": 1},
                    {"addr": "B1", "formula": "=1/A1"},
                ],
            }]
        }
        (workdir / "div.json").write_text(json.dumps(doc))
        artifact = run_slice(workdir, "div.json", kpi="S!B1")
        (workdir / "divf.json").write_text(json.dumps({
            "factors": [{"cell": "S!A1", "min": 0, "max": 1}]
        }))
        code = main([
            "sensitivity", "--slice", str(artifact),
            "--factors", str(workdir / "divf.json"), "--out", str(workdir / "sens"),
        ])
        assert code == 5
        assert "failed" in capsys.readouterr().err

    def test_kpi_subset_and_foldover(self, workdir, capsys):
        artifact = run_slice(workdir, "linear.json", kpi="S!B1")
        out = workdir / "sens_fold"
        code = main([
            "sensitivity", "--slice", str(artifact),
            "--factors", str(workdir / "factors.json"),
            "--kpi", "S!B1", "--foldover", "--out", str(out),
        ])
        assert code == 0
        design = json.loads((out / "design.json").read_text())
        assert design["folded"] is True and design["runs"] == 8
        lines = (out / "sensitivity.csv").read_text().splitlines()
        assert lines[1].startswith("x1,S!A1,S,20,100")

    def test_jobs_flag_is_byte_identical(self, workdir, capsys):
        artifact = run_slice(workdir, "linear.json", kpi="S!B1")
        outputs = []
        for jobs, out_name in (("1", "s1"), ("4", "s4")):
            out = workdir / out_name
            code = main([
                "sensitivity", "--slice", str(artifact),
                "--factors", str(workdir / "factors.json"),
                "--jobs", jobs, "--out", str(out),
            ])
            assert code == 0
            outputs.append((out / "sensitivity.csv").read_bytes())
        assert outputs[0] == outputs[1]


class TestCompare:
    def test_identical_slices(self, workdir, capsys):
        artifact = run_slice(workdir)
        code = main(["compare", "--slice", str(artifact), "--slice", str(artifact)])
        assert code == 0
        out = capsys.readouterr().out
        assert "+0" in out

    def test_version_mismatch_exit_2(self, workdir):
        artifact = run_slice(workdir)
        doc = json.loads(artifact.read_text())
        doc["version"] = "gridlens-slice/999"
        bad = workdir / "bad_slice.json"
        bad.write_text(json.dumps(doc))
        assert main(["compare", "--slice", str(artifact), "--slice", str(bad)]) == 2

    def test_deltas_printed(self, workdir, capsys):
        a = run_slice(workdir)
        bigger = {
            "sheets": [{
                "name": "S",
                "cells": [
                    {"addr": "A1", "value": 5},
                    {"addr": "A2", "value": 6},
                    {"addr": "B1", "formula": "=A1*2"},
                    {"addr": "B2", "formula": "=A2+A1"},
                    {"addr": "C1", "formula": "=B1+B2"},
                ],
            }]
        }
        (workdir / "wb2.json").write_text(json.dumps(bigger))
        out2 = workdir / "out2"
        main(["slice", "--workbook", str(workdir / "wb2.json"), "--kpi", "S!C1",
              "--out", str(out2)])
        capsys.readouterr()
        code = main(["compare", "--slice", str(a), "--slice", str(out2 / "slice.json")])
        assert code == 0
        out = capsys.readouterr().out
        assert "+2" in out  # cells 3 -> 5
        assert "+3" in out  # references 2 -> 5


class TestExportGraph:
    def test_export_validates_against_schema(self, workdir, capsys):
        artifact = run_slice(workdir)
        target = workdir / "graph.json"
        code = main([
            "export-graph", "--slice", str(artifact), "--out", str(target),
            "--with-values",
        ])
        assert code == 0
        doc = load_export(target.read_bytes())
        assert doc.version == "gridlens-export/1"
        assert {n.kind for n in doc.nodes} == {"input", "formula", "kpi"}
        by_id = {n.id: n for n in doc.nodes}
        assert by_id["S!C1"].value == 11.0

    def test_deterministic_artifacts(self, workdir, capsys):
        artifact = run_slice(workdir)
        t1, t2 = workdir / "g1.json", workdir / "g2.json"
        main(["export-graph", "--slice", str(artifact), "--out", str(t1)])
        main(["export-graph", "--slice", str(artifact), "--out", str(t2)])
        assert t1.read_bytes() == t2.read_bytes()
