"""Tests for the selftest runner and its quicker suites."""

import os
import tempfile
from unittest.mock import patch

from src.errors import NonConvergence
from src.selftest import (
    SelftestOptions,
    SuiteResult,
    phi_identities,
    run_selftest,
    table_validation,
    trace_identities,
)


class TestSuiteResult:
    """Tests for suite bookkeeping."""

    def test_check(self):
        result = SuiteResult("demo")
        result.check(True, "fine")
        result.check(False, "broken")
        assert result.checks == 2
        assert not result.passed
        assert result.failures == ["broken"]


class TestSuites:
    """Tests for individual suites."""

    def test_table_validation(self):
        result = table_validation(SelftestOptions())
        assert result.passed, result.failures
        assert result.checks == 3

    def test_table_validation_flags_bad_files(self):
        temp_dir = tempfile.mkdtemp()
        good = os.path.join(temp_dir, "good.tsv")
        missing = os.path.join(temp_dir, "missing.tsv")
        try:
            with open(good, "w", encoding="utf-8") as f:
                f.write("4\t6\t1\n")
            result = table_validation(SelftestOptions(tables=(good, missing)))
            assert result.checks == 5
            assert len(result.failures) == 1
            assert "missing.tsv" in result.failures[0]
        finally:
            os.remove(good)
            os.rmdir(temp_dir)

    def test_phi_identities(self):
        result = phi_identities(SelftestOptions())
        assert result.passed, result.failures

    def test_trace_identities(self):
        result = trace_identities(SelftestOptions(trace_runs=50))
        assert result.passed, result.failures
        assert result.checks == 50


class TestRunSelftest:
    """Tests for the runner."""

    def test_exception_counts_as_failure(self):
        def exploding_suite(options):
            raise NonConvergence("did not settle")

        with patch("src.selftest.SUITES", [exploding_suite]):
            [result] = run_selftest()
        assert result.name == "exploding-suite"
        assert not result.passed
        assert result.failures == ["did not settle"]

    def test_order_is_preserved(self):
        suites = [lambda options, n=n: SuiteResult(f"s{n}") for n in range(3)]
        with patch("src.selftest.SUITES", suites):
            assert [r.name for r in run_selftest()] == ["s0", "s1", "s2"]
