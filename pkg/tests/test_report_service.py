"""Tests for report rendering."""

import csv
import io
import json
import os
import tempfile

import pytest

from src.models import ComparisonRow, ComparisonStatus, ExperimentConfig, ExperimentReport
from src.report_service import ReportFormat, ReportService
from tests.test_models import make_singularity_report


def make_experiment_report(statuses=(ComparisonStatus.PASS,)):
    rows = [ComparisonRow("e/n", "edge-mean", 1.8, 1.79, 0.0056, 0.02, status) for status in statuses]
    return ExperimentReport(
        config=ExperimentConfig(class_spec="wheels", n=100, samples=2),
        constants=make_singularity_report(),
        empirical={"samples": 2, "vMean": 101.0, "eMean": 180.0,
                   "c1OverN": {"mean": 0.05}, "perSample": []},
        comparisons=rows,
        acceptance={"accepted": 2, "attempts": 40, "acceptanceRate": 0.05, "attemptsPerWorker": [40]},
        census_rows=[(4, 0.03, 0.031, 1 / 30), (5, 0.02, None, None)],
    )


class TestRenderConstants:
    """Tests for constants reports."""

    def setup_method(self):
        self.service = ReportService()

    def test_json_is_sorted_and_parsable(self):
        text = self.service.render_constants(make_singularity_report(), ReportFormat.JSON)
        data = json.loads(text)
        assert data["classSpec"] == "wheels"
        assert data["lambdaValue"] == "inf"
        assert text.endswith("\n")
        assert list(data) == sorted(data)

    def test_txt(self):
        text = self.service.render_constants(make_singularity_report(), ReportFormat.TXT)
        assert "CONSTANTS FOR WHEELS" in text
        assert "Regime:" in text
        [lambda_line] = [line for line in text.splitlines() if line.startswith("lambda:")]
        assert lambda_line.split() == ["lambda:", "inf"]
        assert "p_k (first entries):" in text

    def test_markdown(self):
        text = self.service.render_constants(make_singularity_report(), ReportFormat.MARKDOWN)
        assert text.startswith("# Constants for `wheels`")
        assert "| rhoN | 0.1 |" in text

    def test_csv_not_supported(self):
        with pytest.raises(ValueError):
            self.service.render_constants(make_singularity_report(), ReportFormat.CSV)


class TestRenderExperiment:
    """Tests for experiment reports."""

    def setup_method(self):
        self.service = ReportService()
        self.temp_dir = tempfile.mkdtemp()

    def teardown_method(self):
        for root, dirs, files in os.walk(self.temp_dir, topdown=False):
            for name in files:
                os.remove(os.path.join(root, name))
            for name in dirs:
                os.rmdir(os.path.join(root, name))
        os.rmdir(self.temp_dir)

    def test_json_is_deterministic(self):
        report = make_experiment_report()
        first = self.service.render_experiment(report, ReportFormat.JSON)
        second = self.service.render_experiment(report, ReportFormat.JSON)
        assert first == second
        assert json.loads(first)["acceptance"]["accepted"] == 2

    def test_census_csv(self):
        text = self.service.census_csv(make_experiment_report())
        rows = list(csv.reader(io.StringIO(text)))
        assert rows[0] == ["k", "predicted", "empirical", "rel_err"]
        assert rows[1][0] == "4"
        assert float(rows[1][2]) == pytest.approx(0.031)
        assert rows[2] == ["5", "0.02", "", ""]

    def test_txt_summary(self):
        text = self.service.render_experiment(make_experiment_report(), ReportFormat.TXT)
        assert "EXPERIMENT WHEELS n=100" in text
        assert "edge-mean" in text
        assert text.rstrip().endswith("ALL PASSED")

    def test_txt_reports_failures(self):
        report = make_experiment_report((ComparisonStatus.PASS, ComparisonStatus.FAIL))
        text = self.service.render_experiment(report, ReportFormat.TXT)
        assert text.rstrip().endswith("SOME COMPARISONS FAILED")

    def test_markdown_table(self):
        text = self.service.render_experiment(make_experiment_report(), ReportFormat.MARKDOWN)
        assert "| edge-mean | e/n | 1.8 | 1.79 |" in text

    def test_write_experiment(self):
        path = os.path.join(self.temp_dir, "out", "run.json")
        written = self.service.write_experiment(make_experiment_report(), path)
        assert [str(p) for p in written] == [path, path + ".census.csv"]
        with open(path, encoding="utf-8") as f:
            assert json.load(f)["config"]["classSpec"] == "wheels"
        with open(path + ".census.csv", encoding="utf-8") as f:
            assert f.readline().strip() == "k,predicted,empirical,rel_err"
