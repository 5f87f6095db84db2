"""Oracle suites run by ``netcore selftest``."""

from dataclasses import dataclass, field
from typing import Callable, List, Optional, Sequence

import logging
import math

import numpy as np

from src.core_classes import WheelsClass, parse_class_spec
from src.errors import Aborted, NetcoreError
from src.oracle import decompose_network, enumerate_networks
from src.sampler import (
    SamplerContext,
    boltzmann_run,
    check_trace_identities,
    core_census_from_trace,
)
from src.series import solve_network_series
from src.singularity import locate_singularity, phi_eval, solve_gf_values
from src.tables import (
    brute_force_three_connected,
    format_table,
    load_table,
    parse_table,
    validate_table,
)


# Configure logging
logger = logging.getLogger(__name__)

ENUMERATION_CLASS = "wheels+k33+prism"
THREE_CONNECTED_COUNTS = {(4, 6): 1, (5, 8): 15, (5, 9): 10, (5, 10): 1}
EXACTNESS_X = 0.05
CENSUS_ABORT_SIZE = 15


@dataclass
class SuiteResult:
    """
    Outcome of one selftest suite.

    Attributes:
        name: Suite name
        passed: True when every check held
        checks: Number of individual checks run
        failures: Description of each failed check
    """
    name: str
    passed: bool = True
    checks: int = 0
    failures: List[str] = field(default_factory=list)

    def check(self, ok: bool, description: str) -> None:
        self.checks += 1
        if not ok:
            self.passed = False
            self.failures.append(description)


@dataclass
class SelftestOptions:
    """
    Sizes of the selftest suites.

    Attributes:
        seed: Seed of every random stream
        n_max: Largest n compared between series and enumeration
        trace_runs: Boltzmann runs for the trace and census suites
        exactness_runs: Boltzmann runs for the exactness suite
        tables: Extra table files to validate
    """
    seed: int = 0
    n_max: int = 4
    trace_runs: int = 300
    exactness_runs: int = 20000
    tables: Sequence[str] = ()


def series_vs_enumeration(options: SelftestOptions) -> SuiteResult:
    """n! [x^n]N(x, 1) from the series engine equals the brute-force network count."""
    result = SuiteResult("series-vs-enumeration")
    core_class = parse_class_spec(ENUMERATION_CLASS)
    solved = solve_network_series(core_class, 1.0, order=options.n_max, scale=1.0)
    enumeration = enumerate_networks(core_class, options.n_max)
    for n in range(options.n_max + 1):
        value = solved.N.egf_count(n)
        count = enumeration.weighted_total(n, 1.0)
        close = abs(value - round(value)) <= 1e-6 * max(1.0, value)
        result.check(close and round(value) == count,
                     f"n={n}: series gives {value!r}, enumeration {count}")
    return result


def _sampling_context(abort_size: Optional[int] = None) -> SamplerContext:
    core_class = WheelsClass()
    location = locate_singularity(core_class, 1.0)
    return SamplerContext.build(core_class, 0.9 * location.rho_n, 1.0, abort_size=abort_size)


def trace_identities(options: SelftestOptions) -> SuiteResult:
    """The exact counter relations hold on every sampled network."""
    result = SuiteResult("trace-identities")
    ctx = _sampling_context()
    rng = np.random.default_rng(options.seed)
    for run in range(options.trace_runs):
        network, trace = boltzmann_run(ctx, rng)
        violated = check_trace_identities(trace, network)
        result.check(not violated, f"run {run}: {', '.join(violated)}")
    return result


def census_cross_validation(options: SelftestOptions) -> SuiteResult:
    """The census recorded by the sampler equals the census of the decomposed output."""
    result = SuiteResult("census-cross-validation")
    ctx = _sampling_context(abort_size=CENSUS_ABORT_SIZE)
    rng = np.random.default_rng(options.seed + 1)
    accepted = 0
    while accepted < options.trace_runs:
        try:
            network, trace = boltzmann_run(ctx, rng)
        except Aborted:
            continue
        accepted += 1
        recorded = core_census_from_trace(trace)
        recovered = decompose_network(network)
        result.check(recorded == recovered,
                     f"sample {accepted}: sampler {recorded.counts}, decomposition {recovered.counts}")
    return result


def boltzmann_exactness(options: SelftestOptions) -> SuiteResult:
    """
    Empirical frequencies of the smallest networks match x^n y^m/(n! N) within 3σ.

    The networks are the single edge, the path through one vertex and that path
    together with the pole edge.
    """
    result = SuiteResult("boltzmann-exactness")
    core_class = WheelsClass()
    gf = solve_gf_values(core_class, EXACTNESS_X, 1.0)
    ctx = SamplerContext.build(core_class, EXACTNESS_X, 1.0, gf=gf)
    rng = np.random.default_rng(options.seed + 2)
    x, y = EXACTNESS_X, 1.0
    expected = {(0, 1): y / gf.N, (1, 2): x * y ** 2 / gf.N, (1, 3): x * y ** 3 / gf.N}
    observed = {key: 0 for key in expected}
    runs = options.exactness_runs
    for _ in range(runs):
        network, _ = boltzmann_run(ctx, rng)
        key = (network.labeled_vertex_count, network.edge_count)
        if key in observed:
            observed[key] += 1
    for key, p in expected.items():
        sigma = math.sqrt(p * (1 - p) / runs)
        freq = observed[key] / runs
        result.check(abs(freq - p) <= 3 * sigma,
                     f"(n, m)={key}: frequency {freq:.5f}, expected {p:.5f} ± {3 * sigma:.5f}")
    return result


def phi_identities(options: SelftestOptions) -> SuiteResult:
    """Φ(0, y, y) = 0, Φ_z(0, y, y) = −1/(1+y) and solved values satisfy the equations."""
    result = SuiteResult("phi-identities")
    for spec in ("wheels", "k33+prism", "synthetic:alpha=1.5,lambda=1"):
        core_class = parse_class_spec(spec)
        for y in (0.5, 1.0, 2.0):
            values = phi_eval(core_class, 0.0, y, y)
            result.check(abs(values.phi) < 1e-12, f"{spec}, y={y}: Φ(0,y,y) = {values.phi}")
            result.check(abs(values.phi_z + 1 / (1 + y)) < 1e-12,
                         f"{spec}, y={y}: Φ_z(0,y,y) = {values.phi_z}")
        location = locate_singularity(core_class, 1.0)
        gf = solve_gf_values(core_class, 0.5 * location.rho_n, 1.0)
        residuals = gf.residuals()
        result.check(max(abs(r) for r in residuals) < 1e-9,
                     f"{spec}: residuals {residuals} at x = ρ_N/2")
    return result


def table_validation(options: SelftestOptions) -> SuiteResult:
    """Brute-forced small counts, their text round trip, and every user table."""
    result = SuiteResult("table-validation")
    table = brute_force_three_connected(5)
    result.check(table.entries == THREE_CONNECTED_COUNTS,
                 f"3-connected counts for n <= 5: {table.entries}")
    result.check(not validate_table(table), f"brute-forced table: {validate_table(table)}")
    result.check(parse_table(format_table(table)) == table, "format/parse round trip changed the table")
    for path in options.tables:
        try:
            load_table(path)
            result.check(True, path)
        except (OSError, NetcoreError) as exc:
            result.check(False, f"{path}: {exc}")
    return result


SUITES: List[Callable[[SelftestOptions], SuiteResult]] = [
    table_validation,
    series_vs_enumeration,
    phi_identities,
    trace_identities,
    census_cross_validation,
    boltzmann_exactness,
]


def run_selftest(options: Optional[SelftestOptions] = None) -> List[SuiteResult]:
    """
    Run every suite; an exception inside a suite counts as its failure.

    Returns:
        One result per suite, in a fixed order
    """
    options = options or SelftestOptions()
    results = []
    for suite in SUITES:
        name = suite.__name__.replace("_", "-")
        logger.info(f"Running selftest suite {name}")
        try:
            results.append(suite(options))
        except (NetcoreError, ValueError, ArithmeticError) as exc:
            logger.error(f"Suite {name} raised: {exc}")
            results.append(SuiteResult(name, passed=False, checks=1, failures=[str(exc)]))
    return results

