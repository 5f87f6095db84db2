"""Tests for sampling campaigns and predicted-vs-empirical comparisons."""

import json
from unittest.mock import Mock, patch

import numpy as np
import pytest
from hypothesis import given, strategies as st

from src.experiment_service import (
    CORE_RANGE_CENSUS,
    DRAW_COUNTER_CONCENTRATION,
    EDGE_MEAN,
    EDGE_VARIANCE_SCALING,
    GIANT_CORE_FRACTION,
    SECOND_CORE_GAP,
    SMALL_CORE_CENSUS,
    SUBCRITICAL_MAX_CORE,
    ExperimentService,
    SampleStats,
    compare,
    compare_edge_variance,
    edge_variance_per_vertex,
    run_worker,
    split_samples,
    summarize,
)
from src.errors import AttemptsExhausted
from src.models import ComparisonStatus, ExperimentConfig, ExperimentReport, Regime
from tests.test_models import make_singularity_report


def make_stats(count=10, v=1000, census=None, c1=5, c2=4, counters=(2000, 900, 500, 100, 200), e=1800):
    census = {4: 60, 5: 40} if census is None else census
    return [SampleStats(v=v, e=e, census=dict(census), c1=c1, c2=c2, counters=counters, attempts=3)
            for _ in range(count)]


def rows_by_source(rows):
    grouped = {}
    for row in rows:
        grouped.setdefault(row.source, []).append(row)
    return grouped


class TestSplitSamples:
    """Tests for sharing samples among workers."""

    def test_values(self):
        assert split_samples(10, 3) == [4, 3, 3]
        assert split_samples(2, 4) == [1, 1, 0, 0]

    @given(st.integers(min_value=1, max_value=10000), st.integers(min_value=1, max_value=64))
    def test_shares_add_up(self, samples, workers):
        """Property: shares sum to the total and differ by at most one."""
        shares = split_samples(samples, workers)
        assert len(shares) == workers
        assert sum(shares) == samples
        assert max(shares) - min(shares) <= 1


class TestSummarize:
    """Tests for the empirical statistics."""

    def test_empty(self):
        assert summarize([]) == {"samples": 0, "perSample": []}

    def test_values(self):
        stats = make_stats(count=2) + make_stats(count=2, v=500, e=1000, c1=9)
        summary = summarize(stats)
        assert summary["samples"] == 4
        assert summary["vMean"] == pytest.approx(750.0)
        assert summary["edgesPerVertex"] == pytest.approx(1.9)
        assert summary["minEdgeExcess"] == 500
        assert summary["censusRates"]["4"] == pytest.approx((0.06 + 0.06 + 0.12 + 0.12) / 4)
        assert summary["c1OverN"]["max"] == pytest.approx(9 / 500)
        assert len(summary["perSample"]) == 4

    def test_edge_variance_ignores_size_spread(self):
        """e following v exactly has no edge variance at fixed size."""
        stats = [SampleStats(v=v, e=2 * v, census={}, c1=0, c2=0, counters=(0, 0, 0, 0, 0), attempts=1)
                 for v in (100, 105, 110, 115, 120)]
        summary = summarize(stats)
        assert summary["eVar"] > 100
        assert summary["edgeVariancePerVertex"] == pytest.approx(0.0, abs=1e-12)

    def test_edge_variance_values(self):
        stats = [SampleStats(v=100, e=e, census={}, c1=0, c2=0, counters=(0, 0, 0, 0, 0), attempts=1)
                 for e in (170, 180, 190)]
        assert edge_variance_per_vertex(np.array([100.0] * 3), np.array([170.0, 180.0, 190.0])) == \
            pytest.approx(1.0)
        assert summarize(stats)["edgeVariancePerVertex"] == pytest.approx(1.0)


class TestCompare:
    """Tests for the comparison rows."""

    def setup_method(self):
        self.config = ExperimentConfig(class_spec="wheels", n=1000, samples=10)

    def test_subcritical_rows_pass(self):
        constants = make_singularity_report(a_t=0.1)
        rows, census_rows = compare(constants, make_stats(), self.config)
        grouped = rows_by_source(rows)

        census = {row.statistic: row for row in grouped[SMALL_CORE_CENSUS]}
        assert census["c(4)/n"].status is ComparisonStatus.PASS
        # a_T p_5 n = 40 is below the census threshold
        assert census["c(5)/n"].status is ComparisonStatus.INSUFFICIENT
        assert [k for k, *_ in census_rows] == [4, 5]

        [core_range] = grouped[CORE_RANGE_CENSUS]
        assert core_range.predicted == pytest.approx(0.1)
        assert core_range.status is ComparisonStatus.PASS

        [max_core] = grouped[SUBCRITICAL_MAX_CORE]
        assert max_core.status is ComparisonStatus.PASS
        assert GIANT_CORE_FRACTION not in grouped

        [edge_mean] = grouped[EDGE_MEAN]
        assert edge_mean.predicted == pytest.approx(1.8)
        assert edge_mean.status is ComparisonStatus.PASS

        counters = grouped[DRAW_COUNTER_CONCENTRATION]
        assert [row.statistic for row in counters] == ["aNet/n", "aSer/n", "aPar/n", "vT/n", "eT/n"]
        assert all(row.status is ComparisonStatus.PASS for row in counters)

    def test_detects_wrong_edge_mean(self):
        rows, _ = compare(make_singularity_report(a_t=0.1), make_stats(e=2500), self.config)
        [edge_mean] = rows_by_source(rows)[EDGE_MEAN]
        assert edge_mean.status is ComparisonStatus.FAIL

    def test_few_samples_are_insufficient(self):
        rows, _ = compare(make_singularity_report(a_t=0.1), make_stats(count=1), self.config)
        assert all(row.status is ComparisonStatus.INSUFFICIENT for row in rows)

    def test_max_core_needs_large_n(self):
        config = ExperimentConfig(class_spec="wheels", n=100, samples=10)
        rows, _ = compare(make_singularity_report(), make_stats(v=100, e=180), config)
        [max_core] = rows_by_source(rows)[SUBCRITICAL_MAX_CORE]
        assert max_core.status is ComparisonStatus.INSUFFICIENT

    def test_supercritical_rows(self):
        constants = make_singularity_report(regime=Regime.SUPERCRITICAL, gamma_t=0.5, tau=1.0,
                                            singular_exponent=1.5, lambda_value=-0.3)
        rows, _ = compare(constants, make_stats(c1=500, c2=6), self.config)
        grouped = rows_by_source(rows)
        [giant] = grouped[GIANT_CORE_FRACTION]
        assert giant.predicted == 0.5
        assert giant.empirical == pytest.approx(0.5)
        assert giant.status is ComparisonStatus.PASS
        [gap] = grouped[SECOND_CORE_GAP]
        assert gap.status is ComparisonStatus.PASS
        assert SUBCRITICAL_MAX_CORE not in grouped


class TestEdgeVarianceScaling:
    """Tests for the variance comparison across two campaign sizes."""

    def _report(self, variance_per_vertex, samples=20):
        return ExperimentReport(
            config=ExperimentConfig(class_spec="wheels", n=100),
            constants=make_singularity_report(),
            empirical={"samples": samples, "edgeVariancePerVertex": variance_per_vertex},
            comparisons=[],
            acceptance={},
        )

    def test_linear_growth_passes(self):
        row = compare_edge_variance(self._report(0.4), self._report(0.5))
        assert row.source == EDGE_VARIANCE_SCALING
        assert row.status is ComparisonStatus.PASS
        assert row.empirical == pytest.approx(1.25)

    def test_superlinear_growth_fails(self):
        row = compare_edge_variance(self._report(0.4), self._report(4.0))
        assert row.status is ComparisonStatus.FAIL

    def test_missing_data(self):
        row = compare_edge_variance(self._report(0.4, samples=3), self._report(0.5))
        assert row.status is ComparisonStatus.INSUFFICIENT


class TestExperimentService:
    """Tests for full campaigns."""

    def test_rejects_invalid_config(self):
        with pytest.raises(ValueError):
            ExperimentService(ExperimentConfig(class_spec="wheels", n=10, samples=0))

    def test_rejects_unknown_class(self):
        with pytest.raises(ValueError):
            ExperimentService(ExperimentConfig(class_spec="cubes", n=10))

    def test_size_only_class_requires_flag(self):
        with pytest.raises(ValueError):
            ExperimentService(ExperimentConfig(class_spec="synthetic:alpha=1.5,lambda=1", n=10))

    def test_build_tasks(self):
        config = ExperimentConfig(class_spec="wheels", n=20, samples=5, workers=2, master_seed=3)
        service = ExperimentService(config)
        tasks = service.build_tasks(make_singularity_report())
        assert [task.samples for task in tasks] == [3, 2]
        assert tasks[0].seed.spawn_key != tasks[1].seed.spawn_key
        assert all(task.x == 0.1 for task in tasks)

    def test_small_campaign(self):
        config = ExperimentConfig(class_spec="wheels", n=20, eps=0.5, samples=12, master_seed=1, k_max=200)
        report = ExperimentService(config).run()
        assert report.acceptance["accepted"] == 12
        assert report.acceptance["attempts"] >= 12
        assert report.empirical["samples"] == 12
        assert all(20 <= s["v"] <= 30 for s in report.empirical["perSample"])
        sources = {row.source for row in report.comparisons}
        assert {EDGE_MEAN, DRAW_COUNTER_CONCENTRATION, SUBCRITICAL_MAX_CORE} <= sources
        [max_core] = [row for row in report.comparisons if row.source == SUBCRITICAL_MAX_CORE]
        assert max_core.status is ComparisonStatus.INSUFFICIENT

    def test_campaign_is_deterministic(self):
        config = ExperimentConfig(class_spec="wheels", n=15, eps=0.5, samples=4, master_seed=9, k_max=100)
        first = ExperimentService(config).run().to_dict()
        second = ExperimentService(config).run().to_dict()
        assert json.dumps(first, sort_keys=True) == json.dumps(second, sort_keys=True)

    def test_single_sample_is_insufficient(self):
        config = ExperimentConfig(class_spec="wheels", n=10, eps=0.5, samples=1, k_max=100)
        report = ExperimentService(config).run()
        assert all(row.status is ComparisonStatus.INSUFFICIENT for row in report.comparisons)
        assert report.all_passed()

    @pytest.mark.integration
    def test_workers_merge_in_order(self):
        base = dict(class_spec="wheels", n=15, eps=0.5, samples=6, master_seed=5, k_max=100)
        pooled = ExperimentService(ExperimentConfig(workers=2, **base)).run()
        again = ExperimentService(ExperimentConfig(workers=2, **base)).run()
        assert pooled.acceptance["accepted"] == 6
        assert len(pooled.acceptance["attemptsPerWorker"]) == 2
        assert pooled.empirical["perSample"] == again.empirical["perSample"]

    def test_rejects_variance_size_equal_to_n(self):
        with pytest.raises(ValueError):
            ExperimentService(ExperimentConfig(class_spec="wheels", n=10, variance_n=10))

    def test_companion_stream_uses_other_seeds(self):
        config = ExperimentConfig(class_spec="wheels", n=20, samples=4, workers=2, master_seed=3,
                                  variance_n=40)
        service = ExperimentService(config)
        main = service.build_tasks(make_singularity_report())
        companion = service.build_tasks(make_singularity_report(), stream=1)
        assert [task.seed.spawn_key for task in main] == [(0,), (1,)]
        assert [task.seed.spawn_key for task in companion] == [(2,), (3,)]

    def test_campaign_with_variance_companion(self):
        config = ExperimentConfig(class_spec="wheels", n=15, eps=0.5, samples=4, master_seed=2,
                                  k_max=100, variance_n=30)
        report = ExperimentService(config).run()
        [row] = [row for row in report.comparisons if row.source == EDGE_VARIANCE_SCALING]
        # four samples per campaign are below the sample minimum
        assert row.status is ComparisonStatus.INSUFFICIENT
        assert report.empirical["varianceCompanion"]["n"] == 30
        assert report.empirical["varianceCompanion"]["samples"] == 4
        assert report.config.n == 15
        assert report.acceptance["companionAttempts"] >= 4


class TestRunWorker:
    """Tests for a single worker."""

    def _sample(self, attempts):
        sample = Mock()
        sample.network.labeled_vertex_count = 10
        sample.network.edge_count = 18
        sample.attempts = attempts
        sample.trace.a_net = sample.trace.a_ser = sample.trace.a_par = 1
        sample.trace.v_t = sample.trace.e_t = 0
        return sample

    def _census(self):
        census = Mock(counts={}, c1=0)
        census.second_largest.return_value = 0
        return census

    def test_exhaustion_reports_observed_rate(self):
        task = ExperimentService(ExperimentConfig(class_spec="wheels", n=10, samples=3)).build_tasks(
            make_singularity_report())[0]
        outcomes = [self._sample(4), self._sample(6), AttemptsExhausted(10)]
        with patch("src.experiment_service.SamplerContext"), \
                patch("src.experiment_service.core_census_from_trace", return_value=self._census()), \
                patch("src.experiment_service.sample_exact_size", side_effect=outcomes):
            with pytest.raises(AttemptsExhausted) as excinfo:
                run_worker(task)
        assert excinfo.value.attempts == 20
        assert excinfo.value.hits == 2
        assert excinfo.value.acceptance_rate == pytest.approx(0.1)
