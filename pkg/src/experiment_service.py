"""Sampling campaigns: run the exact-size sampler, merge statistics, compare with the limit laws."""

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Any, Dict, List, Optional, Tuple

import logging
import math

import numpy as np

from src.core_classes import parse_class_spec
from src.errors import AttemptsExhausted
from src.models import (
    ComparisonRow,
    ComparisonStatus,
    ExperimentConfig,
    ExperimentReport,
    GFValues,
    Regime,
    SingularityReport,
)
from src.sampler import SamplerContext, core_census_from_trace, sample_exact_size
from src.singularity import network_constants, predicted_core_density, predicted_range_density


# Configure logging
logger = logging.getLogger(__name__)

SMALL_CORE_CENSUS = "small-core-census"
CORE_RANGE_CENSUS = "core-range-census"
GIANT_CORE_FRACTION = "giant-core-fraction"
SECOND_CORE_GAP = "second-core-gap"
SUBCRITICAL_MAX_CORE = "subcritical-max-core"
EDGE_MEAN = "edge-mean"
DRAW_COUNTER_CONCENTRATION = "draw-counter-concentration"
EDGE_VARIANCE_SCALING = "edge-variance-scaling"

MAX_CORE_MIN_N = 200
RANGE_XI = 2.0


@dataclass(frozen=True)
class SampleStats:
    """
    Statistics of one accepted sample.

    Attributes:
        v: Labeled vertices
        e: Edges
        census: Cores per total vertex count
        c1: Largest core (total vertices)
        c2: Second largest core
        counters: Draw counters (aNet, aSer, aPar, vT, eT)
        attempts: Boltzmann runs spent on this sample
    """
    v: int
    e: int
    census: Dict[int, int]
    c1: int
    c2: int
    counters: Tuple[int, int, int, int, int]
    attempts: int

    def to_dict(self) -> Dict[str, Any]:
        return {"v": self.v, "e": self.e, "c1": self.c1, "c2": self.c2,
                "cores": sum(self.census.values()), "attempts": self.attempts}


@dataclass
class WorkerTask:
    """Everything a worker needs; plain data so it crosses process boundaries."""
    class_spec: str
    x: float
    y: float
    gf: GFValues
    n: int
    eps: float
    samples: int
    size_only: bool
    max_attempts: int
    seed: np.random.SeedSequence


@dataclass
class CampaignResult:
    """Merged output of all workers, in worker order."""
    stats: List[SampleStats] = field(default_factory=list)
    attempts_per_worker: List[int] = field(default_factory=list)

    def merge(self, worker_stats: List[SampleStats]) -> None:
        self.stats.extend(worker_stats)
        self.attempts_per_worker.append(sum(s.attempts for s in worker_stats))


def run_worker(task: WorkerTask) -> List[SampleStats]:
    """
    Collect ``task.samples`` accepted samples with the worker's own random stream.

    Raises:
        AttemptsExhausted: If one sample cannot be produced within the attempt cap;
            it carries the worker's attempts and hits so far
    """
    core_class = parse_class_spec(task.class_spec)
    ctx = SamplerContext.build(core_class, task.x, task.y, gf=task.gf, size_only=task.size_only)
    rng = np.random.default_rng(task.seed)
    results = []
    for _ in range(task.samples):
        try:
            sample = sample_exact_size(ctx, task.n, task.eps, rng, max_attempts=task.max_attempts)
        except AttemptsExhausted as exc:
            spent = sum(s.attempts for s in results) + exc.attempts
            raise AttemptsExhausted(spent, hits=len(results) + exc.hits) from exc
        trace = sample.trace
        census = core_census_from_trace(trace)
        results.append(SampleStats(
            v=sample.network.labeled_vertex_count,
            e=sample.network.edge_count,
            census=census.counts,
            c1=census.c1,
            c2=census.second_largest(),
            counters=(trace.a_net, trace.a_ser, trace.a_par, trace.v_t, trace.e_t),
            attempts=sample.attempts,
        ))
    return results


def split_samples(samples: int, workers: int) -> List[int]:
    """Share of samples per worker; the first ``samples % workers`` get one extra."""
    base, extra = divmod(samples, workers)
    return [base + (1 if i < extra else 0) for i in range(workers)]


def _relative_error(predicted: float, empirical: float) -> Optional[float]:
    if predicted == 0 or not math.isfinite(predicted):
        return None
    return abs(empirical - predicted) / abs(predicted)


def _relative_row(statistic: str, source: str, predicted: float, empirical: Optional[float],
                  tolerance: float, enough: bool) -> ComparisonRow:
    rel_err = None if empirical is None else _relative_error(predicted, empirical)
    if not enough or rel_err is None:
        status = ComparisonStatus.INSUFFICIENT
    else:
        status = ComparisonStatus.PASS if rel_err <= tolerance else ComparisonStatus.FAIL
    return ComparisonRow(statistic=statistic, source=source, predicted=predicted,
                         empirical=empirical, rel_err=rel_err, tolerance=tolerance, status=status)


def _rate_row(statistic: str, source: str, empirical: Optional[float],
              threshold: float, enough: bool) -> ComparisonRow:
    """Pass-rate comparison: the predicted rate is 1, the gate is ``empirical >= threshold``."""
    if not enough or empirical is None:
        status = ComparisonStatus.INSUFFICIENT
    else:
        status = ComparisonStatus.PASS if empirical >= threshold else ComparisonStatus.FAIL
    rel_err = None if empirical is None else 1.0 - empirical
    return ComparisonRow(statistic=statistic, source=source, predicted=1.0,
                         empirical=empirical, rel_err=rel_err, tolerance=threshold, status=status)


class ExperimentService:
    """
    Runs sampling campaigns and compares them with the predicted constants.

    Attributes:
        config: The campaign configuration
    """

    def __init__(self, config: ExperimentConfig):
        """
        Initialize the ExperimentService.

        Args:
            config: Campaign configuration

        Raises:
            ValueError: If the configuration is invalid
        """
        errors = config.validate()
        if errors:
            raise ValueError("; ".join(errors))
        self.config = config
        self.core_class = parse_class_spec(config.class_spec)
        if self.core_class.size_only and not config.size_only:
            raise ValueError(f"{config.class_spec} can only be sampled with --size-only")

    def compute_constants(self) -> SingularityReport:
        """Constants at the dominant singularity; the coefficient fit is skipped."""
        return network_constants(self.core_class, self.config.y, k_max=self.config.k_max, fit_order=0)

    def build_tasks(self, constants: SingularityReport,
                    cfg: Optional[ExperimentConfig] = None, stream: int = 0) -> List[WorkerTask]:
        """
        One task per worker, each with its own spawned seed.

        Campaign ``stream`` s takes the children s·workers .. (s+1)·workers − 1 of the
        master seed.
        """
        cfg = cfg or self.config
        first = stream * cfg.workers
        seeds = np.random.SeedSequence(cfg.master_seed).spawn(first + cfg.workers)[first:]
        return [
            WorkerTask(class_spec=cfg.class_spec, x=constants.rho_n, y=cfg.y, gf=constants.gf,
                       n=cfg.n, eps=cfg.eps, samples=share, size_only=cfg.size_only,
                       max_attempts=cfg.max_attempts, seed=seed)
            for share, seed in zip(split_samples(cfg.samples, cfg.workers), seeds)
        ]

    def run_campaign(self, tasks: List[WorkerTask]) -> CampaignResult:
        """Run every task (in a process pool when there is more than one worker) and merge."""
        result = CampaignResult()
        if len(tasks) == 1:
            result.merge(run_worker(tasks[0]))
            return result
        with ProcessPoolExecutor(max_workers=len(tasks)) as pool:
            futures = [pool.submit(run_worker, task) for task in tasks]
            for future in futures:
                result.merge(future.result())
        return result

    def run(self) -> ExperimentReport:
        """
        Compute constants, sample, and compare.

        With ``variance_n`` set, a second campaign at that size is sampled from the
        same constants and the edge-variance scaling row is added to the report.

        Returns:
            ExperimentReport

        Raises:
            AttemptsExhausted: If a worker cannot reach the size window
            NoSingularityFound: If the constants cannot be computed
        """
        cfg = self.config
        logger.info(f"Campaign {cfg.class_spec}: n={cfg.n}, eps={cfg.eps}, "
                    f"samples={cfg.samples}, workers={cfg.workers}, mode={cfg.mode}")
        constants = self.compute_constants()
        logger.info(f"Sampling at x=rhoN={constants.rho_n:.10g} ({constants.regime.value})")
        report = self._sample_and_compare(constants, cfg, stream=0)

        if cfg.variance_n:
            companion_cfg = replace(cfg, n=cfg.variance_n, variance_n=None, out=None)
            logger.info(f"Companion campaign at n={companion_cfg.n} for the edge variance")
            companion = self._sample_and_compare(constants, companion_cfg, stream=1)
            small, large = sorted((report, companion), key=lambda r: r.config.n)
            report.comparisons.append(compare_edge_variance(small, large))
            report.empirical["varianceCompanion"] = {
                "n": companion_cfg.n,
                "samples": companion.empirical["samples"],
                "edgeVariancePerVertex": companion.empirical.get("edgeVariancePerVertex"),
            }
            report.acceptance["companionAttempts"] = companion.acceptance["attempts"]

        failed = [row.statistic for row in report.comparisons if row.status is ComparisonStatus.FAIL]
        logger.info(f"Campaign finished: {len(report.empirical.get('perSample', []))} samples, "
                    f"{len(report.comparisons)} comparisons, {len(failed)} failed")
        return report

    def _sample_and_compare(self, constants: SingularityReport, cfg: ExperimentConfig,
                            stream: int) -> ExperimentReport:
        campaign = self.run_campaign(self.build_tasks(constants, cfg, stream))
        stats = campaign.stats
        empirical = summarize(stats)
        comparisons, census_rows = compare(constants, stats, cfg)
        accepted = len(stats)
        attempts = sum(campaign.attempts_per_worker)
        acceptance = {
            "accepted": accepted,
            "attempts": attempts,
            "acceptanceRate": accepted / attempts if attempts else 0.0,
            "attemptsPerWorker": list(campaign.attempts_per_worker),
        }
        if accepted and accepted / attempts < 1e-4:
            logger.warning(f"Low acceptance rate {accepted / attempts:.3g} at n={cfg.n}")
        return ExperimentReport(config=cfg, constants=constants, empirical=empirical,
                                comparisons=comparisons, acceptance=acceptance,
                                census_rows=census_rows)


def edge_variance_per_vertex(v: np.ndarray, e: np.ndarray) -> float:
    """
    Edge-count variance at fixed size, divided by the mean size.

    Uses the residual e − (ē/v̄)·v, so the part of the spread that only follows v
    across the size window is left out.
    """
    if v.size < 2:
        return 0.0
    residual = e - (e.mean() / v.mean()) * v
    return float(residual.var(ddof=1) / v.mean())


def summarize(stats: List[SampleStats]) -> Dict[str, Any]:
    """
    Empirical statistics of a campaign.

    Means and variances of v and e, census rates c(k)/n averaged over samples, the
    C1/n distribution, the second largest core and the raw per-sample records.
    """
    if not stats:
        return {"samples": 0, "perSample": []}
    v = np.array([s.v for s in stats], dtype=float)
    e = np.array([s.e for s in stats], dtype=float)
    c1 = np.array([s.c1 for s in stats], dtype=float) / v
    c2 = np.array([s.c2 for s in stats], dtype=float)
    ddof = 1 if len(stats) > 1 else 0
    census_rates: Dict[str, float] = {}
    for k in sorted({k for s in stats for k in s.census}):
        rates = [s.census.get(k, 0) / s.v for s in stats]
        census_rates[str(k)] = float(np.mean(rates))
    return {
        "samples": len(stats),
        "vMean": float(v.mean()),
        "vVar": float(v.var(ddof=ddof)),
        "eMean": float(e.mean()),
        "eVar": float(e.var(ddof=ddof)),
        "edgesPerVertex": float(np.mean(e / v)),
        "edgeVariancePerVertex": edge_variance_per_vertex(v, e),
        "minEdgeExcess": int(np.min(e - v)),
        "censusRates": census_rates,
        "c1OverN": {
            "mean": float(c1.mean()),
            "std": float(c1.std(ddof=ddof)),
            "min": float(c1.min()),
            "median": float(np.median(c1)),
            "max": float(c1.max()),
        },
        "secondLargest": {"mean": float(c2.mean()), "max": int(c2.max())},
        "perSample": [s.to_dict() for s in stats],
    }


def compare(
    constants: SingularityReport,
    stats: List[SampleStats],
    cfg: ExperimentConfig,
) -> Tuple[List[ComparisonRow], List[Tuple[int, float, Optional[float], Optional[float]]]]:
    """
    Predicted-vs-empirical rows for a campaign.

    Census rows are gated when the expected count a_T p_k n per sample reaches the
    census threshold; below it they are reported as insufficient data. Every comparison
    is insufficient when fewer than ``min_samples`` samples were accepted.

    Returns:
        Comparison rows and the (k, predicted, empirical, rel_err) census rows
    """
    tol = cfg.tolerances
    enough = len(stats) >= tol.min_samples
    n = cfg.n
    rows: List[ComparisonRow] = []
    census_rows = []

    def mean_of(values) -> Optional[float]:
        return float(np.mean(list(values))) if stats else None

    for k in sorted(constants.pk):
        predicted = predicted_core_density(constants, k)
        if k > n + 2:
            break
        if predicted * n * max(len(stats), 1) < 1:
            continue
        empirical = mean_of(s.census.get(k, 0) / s.v for s in stats)
        gated = enough and predicted * n >= tol.census_min_expected
        row = _relative_row(f"c({k})/n", SMALL_CORE_CENSUS, predicted, empirical, tol.census_rel, gated)
        rows.append(row)
        census_rows.append((k, predicted, empirical, row.rel_err))

    low = 4
    while low <= n + 2:
        high = RANGE_XI * low
        predicted = predicted_range_density(constants, low, RANGE_XI)
        if predicted * n < 1:
            break
        empirical = mean_of(_range_count(s.census, low, high) / s.v for s in stats)
        gated = enough and predicted * n >= tol.census_min_expected
        rows.append(_relative_row(f"c({low},{high:g})/n", CORE_RANGE_CENSUS, predicted,
                                  empirical, tol.census_rel, gated))
        low *= 2

    if constants.regime is Regime.SUPERCRITICAL:
        empirical = mean_of(s.c1 / s.v for s in stats)
        rows.append(_relative_row("C1/n", GIANT_CORE_FRACTION, constants.gamma_t, empirical,
                                  tol.giant_rel, enough))
        alpha = constants.singular_exponent
        if alpha:
            omega = math.log(math.log(n)) if n > math.e else 1.0
            gap = (n * omega) ** (1.0 / alpha)
            empirical = mean_of(1.0 if s.c2 <= gap else 0.0 for s in stats)
            rows.append(_rate_row(f"P(C2 <= {gap:.4g})", SECOND_CORE_GAP, empirical,
                                  tol.gap_pass_rate, enough))
    else:
        bound = _max_core_bound(constants.tau, n, tol.max_core_factor)
        empirical = mean_of(1.0 if s.c1 <= bound else 0.0 for s in stats)
        rows.append(_rate_row(f"P(C1 <= {bound:.4g})", SUBCRITICAL_MAX_CORE, empirical,
                              tol.max_core_pass_rate, enough and n >= MAX_CORE_MIN_N))

    empirical = mean_of(s.e / s.v for s in stats)
    rows.append(_relative_row("e/n", EDGE_MEAN, constants.y * constants.mu, empirical,
                              tol.edge_rel, enough))

    names = ("aNet/n", "aSer/n", "aPar/n", "vT/n", "eT/n")
    for index, (name, predicted) in enumerate(zip(names, constants.alpha_vec.as_list())):
        empirical = mean_of(s.counters[index] / s.v for s in stats)
        gated = enough and predicted * n * len(stats) >= tol.census_min_expected
        rows.append(_relative_row(name, DRAW_COUNTER_CONCENTRATION, predicted, empirical,
                                  tol.counter_rel, gated))
    return rows, census_rows


def _range_count(census: Dict[int, int], low: int, high: float) -> int:
    return sum(count for k, count in census.items() if low <= k <= high)


def _max_core_bound(tau: float, n: int, factor: float) -> float:
    """factor · log_{1/τ} n; unbounded when τ = 0 (classes without a singularity)."""
    if tau <= 0:
        return math.inf
    return factor * math.log(n) / math.log(1.0 / tau)


def compare_edge_variance(small: ExperimentReport, large: ExperimentReport,
                          factor: float = 2.0) -> ComparisonRow:
    """
    Check that the edge-count variance grows linearly in n.

    Var(e)/n at the two campaign sizes must agree within ``factor``.
    """
    a = small.empirical.get("edgeVariancePerVertex")
    b = large.empirical.get("edgeVariancePerVertex")
    enough = (small.empirical.get("samples", 0) >= small.config.tolerances.min_samples
              and large.empirical.get("samples", 0) >= large.config.tolerances.min_samples)
    if not a or not b or not enough:
        return ComparisonRow(statistic="Var(e)/n ratio", source=EDGE_VARIANCE_SCALING,
                             predicted=1.0, empirical=None, rel_err=None, tolerance=factor,
                             status=ComparisonStatus.INSUFFICIENT)
    ratio = b / a
    ok = 1.0 / factor <= ratio <= factor
    return ComparisonRow(statistic="Var(e)/n ratio", source=EDGE_VARIANCE_SCALING,
                         predicted=1.0, empirical=ratio, rel_err=abs(ratio - 1.0), tolerance=factor,
                         status=ComparisonStatus.PASS if ok else ComparisonStatus.FAIL)
