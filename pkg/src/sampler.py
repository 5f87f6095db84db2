"""
Boltzmann samplers for networks.

ΓN draws the type of the network (edge, series, parallel or core) and delegates.
ΓS chains a non-series network and an arbitrary network through a fresh vertex, ΓP
identifies the poles of a truncated-Poisson number of series/core networks
(optionally with the pole edge), and ΓH substitutes a network for every edge of a core
drawn from the class. Recursion is unrolled onto an explicit work stack.
"""

from dataclasses import dataclass, replace
from functools import lru_cache
from typing import List, Optional, Tuple

import logging
import math

import networkx as nx
import numpy as np

from src import config
from src.core_classes import CoreClass
from src.errors import (
    Aborted,
    AssemblyConflict,
    AttemptsExhausted,
    PoleEdgeConflict,
    RecursionBudgetExceeded,
)
from src.singularity import solve_gf_values
from src.models import (
    LEFT_POLE,
    RIGHT_POLE,
    CensusReport,
    CoreGraph,
    GFValues,
    Network,
    SamplerTrace,
    normalize_edge,
)


# Configure logging
logger = logging.getLogger(__name__)

POISSON_REJECTION_RATE = 30.0

# Work items
_NET, _SER, _PAR, _CORE = 0, 1, 2, 3


@dataclass(frozen=True)
class SamplerContext:
    """
    Immutable parameters of the network sampler at (x, y).

    Attributes:
        core_class: Core class
        x: Vertex variable
        y: Edge variable
        gf: Generating-function values at (x, y)
        p_net: Probabilities of e, S, P, H for the network type: (y, S, P, H)/N
        p_ser: Probabilities of e, P, H for the left part of a series network: (y, P, H)/(N − S)
        q_par: Probability that a parallel network has no pole edge: (e^{S+H} − 1 − S − H)/P
        p_sh: Probabilities of S, H for a parallel component: (S, H)/(S + H)
        poisson_rate: S + H
        size_only: Keep counts only
        abort_size: Labeled-vertex budget (None: unbounded)
    """
    core_class: CoreClass
    x: float
    y: float
    gf: GFValues
    p_net: Tuple[float, float, float, float]
    p_ser: Tuple[float, float, float]
    q_par: float
    p_sh: Tuple[float, float]
    poisson_rate: float
    size_only: bool = False
    abort_size: Optional[int] = None

    @staticmethod
    def build(
        core_class: CoreClass,
        x: float,
        y: float,
        gf: Optional[GFValues] = None,
        size_only: bool = False,
        abort_size: Optional[int] = None,
    ) -> "SamplerContext":
        """
        Derive all draw probabilities at (x, y).

        Args:
            core_class: Core class
            x: Vertex variable (0 < x <= ρ_N(y))
            y: Edge variable
            gf: Precomputed values at (x, y); solved when omitted
            size_only: Keep counts only
            abort_size: Labeled-vertex budget

        Raises:
            ValueError: If the class cannot produce graphs and size_only is False
        """
        if core_class.size_only and not size_only:
            raise ValueError(f"{core_class.spec} only supports size-only sampling")
        if gf is None:
            gf = solve_gf_values(core_class, x, y)
        if not x > 0:
            raise ValueError("the sampler needs x > 0")
        core_class.check_domain(x, gf.N)
        n_value, s_value, p_value, h_value = gf.N, gf.S, gf.P, gf.H
        rest = y + p_value + h_value
        u = s_value + h_value
        return SamplerContext(
            core_class=core_class,
            x=x,
            y=y,
            gf=gf,
            p_net=(y / n_value, s_value / n_value, p_value / n_value, h_value / n_value),
            p_ser=(y / rest, p_value / rest, h_value / rest),
            q_par=(math.expm1(u) - u) / p_value,
            p_sh=(s_value / u, h_value / u),
            poisson_rate=u,
            size_only=size_only,
            abort_size=abort_size,
        )

    def with_abort_size(self, abort_size: Optional[int]) -> "SamplerContext":
        return replace(self, abort_size=abort_size)


@lru_cache(maxsize=64)
def _truncated_poisson_cdf(rate: float, minimum: int) -> np.ndarray:
    """CDF of Po(rate) conditioned on >= minimum, over minimum, minimum+1, ..."""
    weights = [1.0]
    total = 1.0
    k = minimum
    while True:
        weight = weights[-1] * rate / (k + 1)
        if weight < 1e-17 * total:
            break
        weights.append(weight)
        total += weight
        k += 1
    cdf = np.cumsum(weights) / total
    cdf[-1] = 1.0
    return cdf


def draw_truncated_poisson(rate: float, minimum: int, rng: np.random.Generator) -> int:
    """
    Draw K >= minimum with P(K = k) proportional to rate^k/k!.

    Inversion over weights relative to the smallest admissible value; rejection
    from the plain Poisson law for large rates.
    """
    if not rate > 0:
        raise ValueError("rate must be positive")
    if rate > POISSON_REJECTION_RATE:
        while True:
            k = int(rng.poisson(rate))
            if k >= minimum:
                return k
    cdf = _truncated_poisson_cdf(rate, minimum)
    return minimum + int(np.searchsorted(cdf, rng.random(), side="right"))


def _pick(probabilities, u: float) -> int:
    acc = 0.0
    for index, p in enumerate(probabilities):
        acc += p
        if u < acc:
            return index
    return len(probabilities) - 1


def _core_key(vertex: int) -> int:
    """Orientation of core edges: left pole, right pole, then labels in order."""
    if vertex == LEFT_POLE:
        return 0
    if vertex == RIGHT_POLE:
        return 1
    return vertex + 1


def gamma_n(
    ctx: SamplerContext,
    rng: np.random.Generator,
    trace: Optional[SamplerTrace] = None,
) -> Network:
    """
    Draw a network from the Boltzmann distribution at (ctx.x, ctx.y).

    Every draw is recorded in ``trace``. Labeled vertices are allocated in creation
    order and receive one uniform relabeling at the end.

    Raises:
        Aborted: If the labeled-vertex count exceeds ctx.abort_size
        RecursionBudgetExceeded: If the work stack exceeds config.RECURSION_BUDGET
        AssemblyConflict: If substitution would create a parallel edge
    """
    trace = SamplerTrace() if trace is None else trace
    size_only = ctx.size_only
    abort_size = ctx.abort_size if ctx.abort_size is not None else math.inf
    budget = config.RECURSION_BUDGET
    x, z = ctx.x, ctx.gf.N
    p_net, p_ser, p_sh_s = ctx.p_net, ctx.p_ser, ctx.p_sh[0]

    stack: List[Tuple[int, int, int]] = [(_NET, LEFT_POLE, RIGHT_POLE)]
    edges: List[Tuple[int, int]] = []
    edge_set = set()
    edge_count = 0
    vertices = 0
    processed = 0

    def add_edge(a: int, b: int) -> None:
        nonlocal edge_count
        edge_count += 1
        if size_only:
            return
        edge = normalize_edge(a, b)
        if edge in edge_set:
            raise AssemblyConflict(f"edge {edge} substituted twice")
        edge_set.add(edge)
        edges.append(edge)

    def allocate(count: int) -> int:
        nonlocal vertices
        first = vertices + 1
        vertices += count
        if vertices > abort_size:
            trace.aborted = True
            raise Aborted(f"labeled-vertex count {vertices} exceeds {ctx.abort_size}")
        return first

    root_type = ""
    while stack:
        processed += 1
        if processed > budget or len(stack) > budget:
            raise RecursionBudgetExceeded(f"more than {budget} sampler tasks")
        kind, a, b = stack.pop()

        if kind == _NET:
            trace.a_net += 1
            symbol = "eSPH"[_pick(p_net, rng.random())]
            trace.net_symbols[symbol] += 1
            if not root_type:
                root_type = symbol
            if symbol == "e":
                add_edge(a, b)
            elif symbol == "S":
                stack.append((_SER, a, b))
            elif symbol == "P":
                stack.append((_PAR, a, b))
            else:
                stack.append((_CORE, a, b))

        elif kind == _SER:
            trace.a_ser += 1
            c = allocate(1)
            symbol = "ePH"[_pick(p_ser, rng.random())]
            trace.ser_symbols[symbol] += 1
            stack.append((_NET, c, b))
            if symbol == "e":
                add_edge(a, c)
            elif symbol == "P":
                stack.append((_PAR, a, c))
            else:
                stack.append((_CORE, a, c))

        elif kind == _PAR:
            trace.a_par += 1
            par = 2 if rng.random() < ctx.q_par else 1
            trace.par_values[par] += 1
            if par == 1:
                trace.a1 += 1
                add_edge(a, b)
            else:
                trace.a2 += 1
            count = draw_truncated_poisson(ctx.poisson_rate, par, rng)
            trace.poisson_total += count
            trace.a_sh += count
            for _ in range(count):
                if rng.random() < p_sh_s:
                    trace.sh_symbols["S"] += 1
                    stack.append((_SER, a, b))
                else:
                    trace.sh_symbols["H"] += 1
                    stack.append((_CORE, a, b))

        else:
            core = ctx.core_class.sample_core(x, z, rng)
            trace.a_t += 1
            k = core.labeled_vertex_count
            trace.core_sizes.append(k)
            trace.core_edges.append(core.edge_count)
            first = allocate(k)
            if size_only or not isinstance(core, CoreGraph):
                stack.extend((_NET, 0, 0) for _ in range(core.edge_count))
                continue
            mapping = {LEFT_POLE: a, RIGHT_POLE: b}
            mapping.update({i: first + i - 1 for i in range(1, k + 1)})
            for u, v in core.edges:
                if _core_key(u) > _core_key(v):
                    u, v = v, u
                stack.append((_NET, mapping[u], mapping[v]))

    if size_only:
        return Network(labeled_vertex_count=vertices, edge_count=edge_count,
                       size_only=True, root_type=root_type)

    labels = rng.permutation(vertices) + 1

    def relabel(v: int) -> int:
        return v if v < 0 else int(labels[v - 1])

    relabeled = sorted(normalize_edge(relabel(u), relabel(v)) for u, v in edges)
    return Network(labeled_vertex_count=vertices, edge_count=edge_count,
                   edges=relabeled, root_type=root_type)


def boltzmann_run(ctx: SamplerContext, rng: np.random.Generator) -> Tuple[Network, SamplerTrace]:
    """One unconditioned Boltzmann draw with a fresh trace."""
    trace = SamplerTrace()
    network = gamma_n(ctx, rng, trace)
    return network, trace


@dataclass
class ExactSizeSample:
    """
    Output of the rejection sampler.

    Attributes:
        network: Accepted network
        trace: Trace of the accepted run
        attempts: Boltzmann runs used, the accepted one included
    """
    network: Network
    trace: SamplerTrace
    attempts: int


def sample_exact_size(
    ctx: SamplerContext,
    n: int,
    eps: float,
    rng: np.random.Generator,
    max_attempts: Optional[int] = None,
) -> ExactSizeSample:
    """
    Rejection sampling of a network with n <= v <= (1 + eps) n labeled vertices.

    Conditioned on its size the Boltzmann output is uniform, so with eps = 0 the
    result is uniform over the networks on n labeled vertices.

    Raises:
        AttemptsExhausted: If no run hits the window within max_attempts
    """
    if eps < 0:
        raise ValueError("eps must be >= 0")
    max_attempts = config.MAX_ATTEMPTS if max_attempts is None else max_attempts
    upper = math.floor((1 + eps) * n + 1e-9)
    bounded = ctx.with_abort_size(upper)
    for attempt in range(1, max_attempts + 1):
        trace = SamplerTrace()
        try:
            network = gamma_n(bounded, rng, trace)
        except Aborted:
            continue
        if network.labeled_vertex_count >= n:
            return ExactSizeSample(network=network, trace=trace, attempts=attempt)
    raise AttemptsExhausted(max_attempts, hits=0)


def core_census_from_trace(trace: SamplerTrace) -> CensusReport:
    """Census of core vertex counts k = labeled size + 2 from a completed trace."""
    return CensusReport.from_core_vertex_counts(size + 2 for size in trace.core_sizes)


def check_trace_identities(trace: SamplerTrace, network: Network) -> List[str]:
    """
    Check the exact relations between draw counters and the output network.

    Returns:
        Names of the violated identities (empty when all hold)
    """
    checks = {
        "vertices": network.labeled_vertex_count == trace.a_ser + trace.v_t,
        "edges": network.edge_count
        == trace.net_symbols["e"] + trace.ser_symbols["e"] + trace.par_values[1],
        "net-draws": trace.a_net == 1 + trace.a_ser + trace.e_t,
        "par-values": trace.a1 + trace.a2 == trace.a_par
        and trace.a1 == trace.par_values[1] and trace.a2 == trace.par_values[2],
        "par-draws": trace.a_par == trace.net_symbols["P"] + trace.ser_symbols["P"],
        "sh-draws": trace.a_sh == trace.poisson_total
        == trace.sh_symbols["S"] + trace.sh_symbols["H"],
        "ser-draws": trace.a_ser == trace.net_symbols["S"] + trace.sh_symbols["S"],
        "core-draws": trace.a_t
        == trace.net_symbols["H"] + trace.ser_symbols["H"] + trace.sh_symbols["H"],
    }
    return [name for name, ok in checks.items() if not ok]


def network_to_biconnected(
    network: Network,
    add_pole_edge: bool,
    rng: np.random.Generator,
) -> nx.Graph:
    """
    Turn a network into a labeled graph on 1..n+2.

    The poles receive fresh labels uniformly among the n + 2 positions; with
    ``add_pole_edge`` the pole edge is inserted.

    Raises:
        PoleEdgeConflict: If the pole edge is requested but already present
    """
    if add_pole_edge and network.has_pole_edge():
        raise PoleEdgeConflict("the network already contains the pole edge")
    order = network.vertices()
    labels = rng.permutation(len(order)) + 1
    mapping = {v: int(label) for v, label in zip(order, labels)}
    graph = nx.Graph()
    graph.add_nodes_from(mapping.values())
    graph.add_edges_from((mapping[u], mapping[v]) for u, v in network.edges)
    if add_pole_edge:
        graph.add_edge(mapping[LEFT_POLE], mapping[RIGHT_POLE])
    return graph
