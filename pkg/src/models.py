"""Data models shared across the netcore toolkit."""

from collections import Counter
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Dict, FrozenSet, Iterable, List, Optional, Tuple, Union

import math

import networkx as nx


# Pole identifiers; labeled vertices are 1..n
LEFT_POLE = -1
RIGHT_POLE = -2


def normalize_edge(u: int, v: int) -> Tuple[int, int]:
    """Return the edge as an ordered pair (smaller id first)."""
    return (u, v) if u < v else (v, u)


class Regime(Enum):
    """Sign of Φ_z at the dominant singularity."""
    SUBCRITICAL = "subcritical"
    SUPERCRITICAL = "supercritical"

    @property
    def sign(self) -> str:
        return "+" if self is Regime.SUBCRITICAL else "-"


@dataclass(frozen=True)
class CoreGraph:
    """
    A core network: a 3-connected graph with one oriented edge deleted.

    Attributes:
        labeled_vertex_count: Number k of non-pole vertices (the core has k + 2 vertices)
        edges: Edges over {LEFT_POLE, RIGHT_POLE, 1..k}
        origin: Tag of the class member the core was drawn from
    """
    labeled_vertex_count: int
    edges: Tuple[Tuple[int, int], ...]
    origin: str = ""

    @property
    def edge_count(self) -> int:
        return len(self.edges)

    def to_graph(self, with_pole_edge: bool = True) -> nx.Graph:
        """Return the underlying graph, re-inserting the deleted pole edge by default."""
        graph = nx.Graph()
        graph.add_nodes_from([LEFT_POLE, RIGHT_POLE])
        graph.add_nodes_from(range(1, self.labeled_vertex_count + 1))
        graph.add_edges_from(self.edges)
        if with_pole_edge:
            graph.add_edge(LEFT_POLE, RIGHT_POLE)
        return graph


@dataclass(frozen=True)
class SizeOnlyCore:
    """A core drawn without structure: only its labeled-vertex and edge counts."""
    labeled_vertex_count: int
    edge_count: int
    origin: str = ""


DrawnCore = Union[CoreGraph, SizeOnlyCore]

GraphEdges = Tuple[Tuple[int, int], ...]


@dataclass(frozen=True)
class TbarValues:
    """T̄(x, z) and the partial derivatives the analyzer needs."""
    value: float
    dx: float
    dz: float
    dzz: float

    def __add__(self, other: "TbarValues") -> "TbarValues":
        return TbarValues(self.value + other.value, self.dx + other.dx,
                          self.dz + other.dz, self.dzz + other.dzz)


@dataclass
class CoefficientTable:
    """
    Counts of labeled 3-connected graphs by vertex and edge number.

    Attributes:
        entries: (n, m) -> number of labeled 3-connected graphs with n vertices and m edges
        graphs: (n, m) -> explicit labeled graphs, each an edge tuple over 1..n
    """
    entries: Dict[Tuple[int, int], int] = field(default_factory=dict)
    graphs: Dict[Tuple[int, int], List[GraphEdges]] = field(default_factory=dict)

    def count(self, n: int, m: int) -> int:
        return self.entries.get((n, m), 0)

    def has_complete_list(self, n: int, m: int) -> bool:
        """True when every counted graph of size (n, m) is listed."""
        return len(self.graphs.get((n, m), [])) == self.count(n, m)

    def keys_for_vertices(self, n: int) -> List[Tuple[int, int]]:
        return sorted(key for key in self.entries if key[0] == n)

    def __eq__(self, other) -> bool:
        if not isinstance(other, CoefficientTable):
            return NotImplemented
        mine = {key: sorted(value) for key, value in self.graphs.items() if value}
        theirs = {key: sorted(value) for key, value in other.graphs.items() if value}
        return self.entries == other.entries and mine == theirs


@dataclass
class Network:
    """
    A network: a graph with two poles whose union with the pole edge is 2-connected.

    Attributes:
        labeled_vertex_count: Number of labeled (non-pole) vertices
        edge_count: Number of edges
        edges: Edge list over {LEFT_POLE, RIGHT_POLE, 1..n} (empty in size-only mode)
        size_only: True when only the counts were retained
        root_type: Symbol drawn at the root of the sampler ("e", "S", "P" or "H")
    """
    labeled_vertex_count: int
    edge_count: int
    edges: List[Tuple[int, int]] = field(default_factory=list)
    size_only: bool = False
    root_type: str = ""

    def vertices(self) -> List[int]:
        """Return all vertex ids, poles first."""
        return [LEFT_POLE, RIGHT_POLE] + list(range(1, self.labeled_vertex_count + 1))

    def edge_key(self) -> FrozenSet[Tuple[int, int]]:
        """Canonical hashable form of the labeled edge set."""
        return frozenset(normalize_edge(u, v) for u, v in self.edges)

    def has_pole_edge(self) -> bool:
        return (RIGHT_POLE, LEFT_POLE) in self.edge_key()

    def to_graph(self) -> nx.Graph:
        """Return the network as a simple networkx graph."""
        if self.size_only:
            raise ValueError("size-only networks carry no adjacency")
        graph = nx.Graph()
        graph.add_nodes_from(self.vertices())
        graph.add_edges_from(self.edges)
        return graph

    @staticmethod
    def from_graph(graph: nx.Graph, left: Any, right: Any) -> "Network":
        """
        Build a network from a graph and the two vertices acting as poles.

        Non-pole vertices are relabeled 1..n in sorted order of their original ids.

        Args:
            graph: Simple graph containing both poles
            left: Vertex that becomes the left pole
            right: Vertex that becomes the right pole

        Returns:
            Network with labeled vertices renumbered
        """
        others = sorted((v for v in graph.nodes if v != left and v != right), key=repr)
        mapping = {left: LEFT_POLE, right: RIGHT_POLE}
        for index, vertex in enumerate(others, start=1):
            mapping[vertex] = index
        edges = [normalize_edge(mapping[u], mapping[v]) for u, v in graph.edges]
        edges.sort()
        return Network(labeled_vertex_count=len(others), edge_count=len(edges), edges=edges)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "labeledVertexCount": self.labeled_vertex_count,
            "edgeCount": self.edge_count,
            "edges": [list(edge) for edge in sorted(self.edge_key())],
            "sizeOnly": self.size_only,
        }


@dataclass
class SamplerTrace:
    """
    Draw counters recorded by one run of the network sampler.

    Attributes:
        a_net: Number of Net draws
        a_ser: Number of Ser draws (= number of series networks built)
        a_par: Number of Par draws
        a_sh: Number of sh draws
        a1: Par draws equal to 1 (pole edge present)
        a2: Par draws equal to 2
        a_t: Number of cores drawn
        core_sizes: Labeled-vertex count of every drawn core, in draw order
        core_edges: Edge count of every drawn core network
        net_symbols: Tally of Net outcomes over {e, S, P, H}
        ser_symbols: Tally of Ser outcomes over {e, P, H}
        par_values: Tally of Par outcomes over {1, 2}
        sh_symbols: Tally of sh outcomes over {S, H}
        poisson_total: Sum of all truncated-Poisson draws
        aborted: True when the run stopped on its vertex budget
    """
    a_net: int = 0
    a_ser: int = 0
    a_par: int = 0
    a_sh: int = 0
    a1: int = 0
    a2: int = 0
    a_t: int = 0
    core_sizes: List[int] = field(default_factory=list)
    core_edges: List[int] = field(default_factory=list)
    net_symbols: Counter = field(default_factory=Counter)
    ser_symbols: Counter = field(default_factory=Counter)
    par_values: Counter = field(default_factory=Counter)
    sh_symbols: Counter = field(default_factory=Counter)
    poisson_total: int = 0
    aborted: bool = False

    @property
    def v_t(self) -> int:
        """Total labeled vertices inside cores."""
        return sum(self.core_sizes)

    @property
    def e_t(self) -> int:
        """Total edges of all core networks."""
        return sum(self.core_edges)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "aNet": self.a_net,
            "aSer": self.a_ser,
            "aPar": self.a_par,
            "aSh": self.a_sh,
            "a1": self.a1,
            "a2": self.a2,
            "aT": self.a_t,
            "coreSizes": list(self.core_sizes),
            "coreEdges": list(self.core_edges),
            "netSymbols": dict(sorted(self.net_symbols.items())),
            "serSymbols": dict(sorted(self.ser_symbols.items())),
            "parValues": {str(k): v for k, v in sorted(self.par_values.items())},
            "shSymbols": dict(sorted(self.sh_symbols.items())),
        }


@dataclass(frozen=True)
class CensusReport:
    """
    Core census of one network.

    Attributes:
        counts: Number of cores per total vertex count k
        c1: Vertex count of a largest core (0 when there are no cores)
        total_cores: Total number of cores
    """
    counts: Dict[int, int]
    c1: int
    total_cores: int

    @staticmethod
    def from_core_vertex_counts(sizes: Iterable[int]) -> "CensusReport":
        """Build a census from the total vertex counts of the cores."""
        counts = Counter(sizes)
        return CensusReport(
            counts=dict(sorted(counts.items())),
            c1=max(counts) if counts else 0,
            total_cores=sum(counts.values()),
        )

    def second_largest(self) -> int:
        """Vertex count of the second largest core (0 if fewer than two cores)."""
        sizes = sorted(
            (k for k, count in self.counts.items() for _ in range(min(count, 2))),
            reverse=True,
        )
        return sizes[1] if len(sizes) > 1 else 0

    def range_count(self, low: int, high: float) -> int:
        """Number of cores whose vertex count lies in [low, high]."""
        return sum(count for k, count in self.counts.items() if low <= k <= high)


@dataclass(frozen=True)
class GFValues:
    """
    Values of the network generating functions at a point (x, y).

    Attributes:
        x: Vertex variable
        y: Edge variable
        N: All networks
        S: Series networks
        P: Parallel networks
        H: Core networks
    """
    x: float
    y: float
    N: float
    S: float
    P: float
    H: float

    def residuals(self) -> Tuple[float, float]:
        """Residuals of the sum equation and of the parallel equation."""
        sum_residual = self.N - (self.y + self.S + self.P + self.H)
        par_residual = self.P - ((1 + self.y) * math.expm1(self.S + self.H) - self.S - self.H)
        return sum_residual, par_residual

    def to_dict(self) -> Dict[str, float]:
        return {"x": self.x, "y": self.y, "N": self.N, "S": self.S, "P": self.P, "H": self.H}


@dataclass(frozen=True)
class AlphaVector:
    """Limit densities per vertex of the sampler's draw counters."""
    a_net: float
    a_ser: float
    a_par: float
    v_t: float
    e_t: float

    def as_list(self) -> List[float]:
        return [self.a_net, self.a_ser, self.a_par, self.v_t, self.e_t]

    def to_dict(self) -> Dict[str, float]:
        return {"aNet": self.a_net, "aSer": self.a_ser, "aPar": self.a_par,
                "vT": self.v_t, "eT": self.e_t}


@dataclass(frozen=True)
class SingularityReport:
    """
    Everything the analyzer computes at the dominant singularity.

    Attributes:
        class_spec: Specification string of the core class
        y: Edge variable
        rho_n: Dominant singularity ρ_N(y)
        n0: N(ρ_N, y)
        gf: Generating-function values at (ρ_N, y)
        regime: Subcritical (branch point) or supercritical (inherited singularity)
        lambda_value: Φ_z at the critical candidate, +inf when none exists
        phi_z_at_root: Φ_z(ρ_N, y, N₀) (vanishes at a branch point)
        tau: ρ_N / ρ_T(N₀)
        mu: −ρ_N'(y)/ρ_N(y)
        alpha_vec: Solution of the draw-counter system
        a_t: Cores per vertex
        gamma_t: Giant-core fraction
        beta_lemma: Acceptance exponent as stated for the regime (5/2 or α)
        beta_singular: Exponent implied by the singularity type (3/2 or α + 1)
        beta_fitted: Exponent fitted on the solved series (None if skipped)
        condition_b: The non-degeneracy expression built from ρ_N'' and ρ_N'
        det_m: Determinant of the draw-counter matrix
        det_closed_form: ρ_N N₀² + (ρ_N + 1) N₀ + 1
        pk: Probability that a drawn core has k vertices, 4 <= k <= kMax
        pk_tail_mass: Mass of p_k beyond kMax
        near_critical: |λ| below the boundary tolerance
        entire_function: The class has no finite singularity (finite tables, fixed graphs)
        pole_type: The class singularity is a pole rather than a fractional power
        singular_exponent: Declared exponent of the class (None when entire)
    """
    class_spec: str
    y: float
    rho_n: float
    n0: float
    gf: GFValues
    regime: Regime
    lambda_value: float
    phi_z_at_root: float
    tau: float
    mu: float
    alpha_vec: AlphaVector
    a_t: float
    gamma_t: float
    beta_lemma: float
    beta_singular: float
    beta_fitted: Optional[float]
    condition_b: float
    det_m: float
    det_closed_form: float
    pk: Dict[int, float]
    pk_tail_mass: float
    near_critical: bool = False
    entire_function: bool = False
    pole_type: bool = False
    singular_exponent: Optional[float] = None

    def to_dict(self) -> Dict[str, Any]:
        return {
            "classSpec": self.class_spec,
            "y": self.y,
            "rhoN": self.rho_n,
            "N0": self.n0,
            "gf": self.gf.to_dict(),
            "regime": self.regime.value,
            "lambdaSign": self.regime.sign,
            "lambdaValue": _finite_or_string(self.lambda_value),
            "phiZAtRoot": self.phi_z_at_root,
            "tau": self.tau,
            "mu": self.mu,
            "alphaVec": self.alpha_vec.to_dict(),
            "aT": self.a_t,
            "gammaT": self.gamma_t,
            "beta": self.beta_lemma,
            "betaSingular": self.beta_singular,
            "betaFitted": self.beta_fitted,
            "conditionB": self.condition_b,
            "detM": self.det_m,
            "detClosedForm": self.det_closed_form,
            "pk": {str(k): v for k, v in sorted(self.pk.items())},
            "pkTailMass": self.pk_tail_mass,
            "nearCritical": self.near_critical,
            "entireFunction": self.entire_function,
            "poleType": self.pole_type,
            "singularExponent": self.singular_exponent,
        }


def _finite_or_string(value: float) -> Union[float, str]:
    """JSON has no infinity; spell it out."""
    if math.isinf(value):
        return "inf" if value > 0 else "-inf"
    return value


class ComparisonStatus(Enum):
    """Outcome of one predicted-vs-empirical comparison."""
    PASS = "pass"
    FAIL = "fail"
    INSUFFICIENT = "insufficient data"


@dataclass(frozen=True)
class ComparisonRow:
    """
    One predicted-vs-empirical comparison.

    Attributes:
        statistic: Name of the compared statistic (e.g. "c(5)/n")
        source: Fixed tag naming the limit law being checked
        predicted: Predicted value
        empirical: Empirical value (None when no data)
        rel_err: Relative error (None when undefined)
        tolerance: Tolerance applied (relative, or a pass-rate threshold)
        status: Pass, fail or insufficient data
    """
    statistic: str
    source: str
    predicted: float
    empirical: Optional[float]
    rel_err: Optional[float]
    tolerance: float
    status: ComparisonStatus

    def to_dict(self) -> Dict[str, Any]:
        return {
            "statistic": self.statistic,
            "source": self.source,
            "predicted": _finite_or_string(self.predicted),
            "empirical": self.empirical,
            "relErr": self.rel_err,
            "tolerance": self.tolerance,
            "status": self.status.value,
        }


@dataclass(frozen=True)
class Tolerances:
    """
    Gates applied by the experiment harness.

    Attributes:
        census_rel: Relative tolerance for census rates
        census_min_expected: Minimum expected count a_T p_k n for a census row to be gated
        giant_rel: Relative tolerance for mean C1/n
        edge_rel: Relative tolerance for mean e/n against μ
        counter_rel: Relative tolerance for the draw-counter densities
        max_core_factor: Slack factor c in C1 <= c log_{1/τ} n (subcritical)
        max_core_pass_rate: Fraction of samples that must satisfy the max-core bound
        gap_pass_rate: Fraction of samples without a second core above the gap
        min_samples: Fewer accepted samples than this marks comparisons as insufficient
    """
    census_rel: float = 0.10
    census_min_expected: float = 50.0
    giant_rel: float = 0.05
    edge_rel: float = 0.02
    counter_rel: float = 0.10
    max_core_factor: float = 3.0
    max_core_pass_rate: float = 0.99
    gap_pass_rate: float = 0.95
    min_samples: int = 10

    def to_dict(self) -> Dict[str, float]:
        return {
            "censusRel": self.census_rel,
            "censusMinExpected": self.census_min_expected,
            "giantRel": self.giant_rel,
            "edgeRel": self.edge_rel,
            "counterRel": self.counter_rel,
            "maxCoreFactor": self.max_core_factor,
            "maxCorePassRate": self.max_core_pass_rate,
            "gapPassRate": self.gap_pass_rate,
            "minSamples": self.min_samples,
        }


@dataclass(frozen=True)
class ExperimentConfig:
    """
    Immutable description of a sampling campaign.

    Attributes:
        class_spec: Core-class specification string
        n: Target number of labeled vertices
        eps: Relative size window, samples have n <= v <= (1 + eps) n
        samples: Number of accepted samples to collect
        master_seed: 64-bit master seed
        workers: Number of worker processes
        size_only: Sample sizes only (no adjacency)
        out: Output path of the JSON report (None: no file)
        y: Edge variable
        k_max: Length of the p_k table
        tolerances: Gates for the comparisons
        max_attempts: Rejection cap per accepted sample
        variance_n: Size of a companion campaign for the edge-variance scaling check
    """
    class_spec: str
    n: int
    eps: float = 0.1
    samples: int = 100
    master_seed: int = 0
    workers: int = 1
    size_only: bool = False
    out: Optional[str] = None
    y: float = 1.0
    k_max: int = 2000
    tolerances: Tolerances = field(default_factory=Tolerances)
    max_attempts: int = 10 ** 7
    variance_n: Optional[int] = None

    @property
    def mode(self) -> str:
        return "sizeOnly" if self.size_only else "graph"

    def validate(self) -> List[str]:
        """
        Validate the configuration and return the list of problems.

        Returns:
            List of error messages. Empty list if the configuration is valid.
        """
        errors = []
        if self.samples < 1:
            errors.append("samples must be >= 1")
        if not 0 <= self.eps <= 0.5:
            errors.append("eps must be between 0 and 0.5")
        if self.n < 1:
            errors.append("n must be >= 1")
        if self.workers < 1:
            errors.append("workers must be >= 1")
        if not 0 <= self.master_seed < 2 ** 64:
            errors.append("seed must be an unsigned 64-bit integer")
        if self.y <= 0:
            errors.append("y must be positive")
        if self.k_max < 4:
            errors.append("k_max must be >= 4")
        if self.variance_n is not None and (self.variance_n < 1 or self.variance_n == self.n):
            errors.append("variance_n must be >= 1 and differ from n")
        return errors

    def to_dict(self) -> Dict[str, Any]:
        return {
            "classSpec": self.class_spec,
            "mode": self.mode,
            "n": self.n,
            "eps": self.eps,
            "samples": self.samples,
            "masterSeed": self.master_seed,
            "workers": self.workers,
            "y": self.y,
            "kMax": self.k_max,
            "tolerances": self.tolerances.to_dict(),
            "out": self.out,
            "varianceN": self.variance_n,
        }


@dataclass
class ExperimentReport:
    """
    Result of a sampling campaign.

    Attributes:
        config: The campaign configuration
        constants: Singularity report the predictions come from
        empirical: Empirical statistics (means, variances, census rates, C1 distribution)
        comparisons: Predicted-vs-empirical rows
        acceptance: Rejection-sampling counters
        census_rows: (k, predicted, empirical, rel_err) rows for the CSV export
    """
    config: ExperimentConfig
    constants: SingularityReport
    empirical: Dict[str, Any]
    comparisons: List[ComparisonRow]
    acceptance: Dict[str, Any]
    census_rows: List[Tuple[int, float, Optional[float], Optional[float]]] = field(default_factory=list)

    def all_passed(self) -> bool:
        """True when no comparison failed (insufficient data is not a failure)."""
        return all(row.status is not ComparisonStatus.FAIL for row in self.comparisons)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "config": self.config.to_dict(),
            "constants": self.constants.to_dict(),
            "empirical": self.empirical,
            "comparisons": [row.to_dict() for row in self.comparisons],
            "acceptance": self.acceptance,
        }
