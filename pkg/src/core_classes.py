"""
Pluggable families of 3-connected cores.

Each class describes T̄(x, z), the egf of its core networks (a 3-connected graph with
one oriented edge deleted, the endpoints turned into poles), and draws cores from the
Boltzmann distribution of T̄.
"""

from abc import ABC, abstractmethod
from typing import Dict, List, Optional, Sequence, Tuple

import logging
import math

import mpmath
import networkx as nx
import numpy as np
from networkx.algorithms.isomorphism import GraphMatcher

from src.errors import ClassSpecError, MissingGraphList, OutsideDomain
from src.models import (
    LEFT_POLE,
    RIGHT_POLE,
    CoefficientTable,
    CoreGraph,
    DrawnCore,
    SizeOnlyCore,
    TbarValues,
    normalize_edge,
)


# Configure logging
logger = logging.getLogger(__name__)

ZERO_TBAR = TbarValues(0.0, 0.0, 0.0, 0.0)


def core_from_graph(
    edges: Sequence[Tuple[int, int]],
    vertices: Sequence[int],
    rng: np.random.Generator,
    origin: str = "",
) -> CoreGraph:
    """
    Turn a labeled 3-connected graph into a uniformly rooted core network.

    A uniform oriented edge is deleted, its tail becomes the left pole and its head
    the right pole; the other vertices receive a uniform relabeling by 1..k.

    Args:
        edges: Edge list of the graph
        vertices: Its vertex set
        rng: Random stream
        origin: Tag recorded on the core

    Returns:
        The core network
    """
    index = int(rng.integers(2 * len(edges)))
    u, v = edges[index // 2]
    if index % 2:
        u, v = v, u
    others = [w for w in vertices if w != u and w != v]
    labels = rng.permutation(len(others)) + 1
    mapping = {u: LEFT_POLE, v: RIGHT_POLE}
    mapping.update({w: int(label) for w, label in zip(others, labels)})
    core_edges = tuple(sorted(
        normalize_edge(mapping[a], mapping[b])
        for a, b in edges
        if {a, b} != {u, v}
    ))
    return CoreGraph(labeled_vertex_count=len(others), edges=core_edges, origin=origin)


def _logsumexp(values: List[float]) -> float:
    if not values:
        return -math.inf
    top = max(values)
    if top == -math.inf:
        return top
    return top + math.log(sum(math.exp(v - top) for v in values))


class CoreClass(ABC):
    """
    A family T of 3-connected graphs, seen through the egf T̄(x, z).

    Coefficients are exposed in log form: ``tbar_log_terms(k)`` maps each z degree d to
    log [x^k z^d]T̄, so p_k tables stay finite far beyond floating-point range.
    """

    #: Cores are drawn as sizes only (no adjacency)
    size_only: bool = False
    #: The defining series converges on its circle of convergence
    boundary_ok: bool = False
    #: The singularity of T̄ is a pole
    pole_type: bool = False

    @property
    @abstractmethod
    def spec(self) -> str:
        """Specification string that parses back to this class."""

    @abstractmethod
    def tbar_log_terms(self, k: int) -> Dict[int, float]:
        """z degree -> log [x^k z^degree]T̄ for the non-zero coefficients."""

    @abstractmethod
    def rho_t(self, z: float) -> float:
        """Radius of convergence of T̄(·, z), possibly infinite."""

    @abstractmethod
    def _eval(self, x: float, z: float) -> TbarValues:
        """Closed-form evaluation inside the domain."""

    @abstractmethod
    def sample_core(self, x: float, z: float, rng: np.random.Generator) -> DrawnCore:
        """Draw a core network from the Boltzmann distribution of T̄ at (x, z)."""

    @property
    def singular_exponent(self) -> Optional[float]:
        """Declared singular exponent α of T̄ (None when T̄ is entire)."""
        return None

    @property
    def entire(self) -> bool:
        return math.isinf(self.rho_t(1.0))

    def contains(self, graph: nx.Graph) -> bool:
        """Whether a 3-connected graph (up to isomorphism) belongs to the class."""
        raise TypeError(f"class {self.spec} has no graph membership test")

    def check_domain(self, x: float, z: float) -> None:
        """
        Raises:
            OutsideDomain: If (x, z) lies outside the region where T̄ is evaluated
        """
        if x < 0 or z <= 0 or not (math.isfinite(x) and math.isfinite(z)):
            raise OutsideDomain(f"T̄ evaluated at x={x}, z={z}")
        rho = self.rho_t(z)
        if math.isinf(rho):
            return
        if x > rho * (1 + 1e-12) or (x >= rho and not self.boundary_ok):
            raise OutsideDomain(f"x={x} is not below ρ_T({z})={rho}")

    def tbar_eval(self, x: float, z: float) -> TbarValues:
        """
        Value and partials (d/dx, d/dz, d²/dz²) of T̄ at (x, z).

        Raises:
            OutsideDomain: If x >= ρ_T(z) (x > ρ_T(z) for classes that converge on the boundary)
        """
        self.check_domain(x, z)
        if x == 0:
            return ZERO_TBAR
        return self._eval(x, z)

    def tbar_coeff(self, k: int, z: float) -> float:
        """[x^k]T̄(x, z); zero outside the support."""
        if k < 0 or z <= 0:
            return 0.0
        log_z = math.log(z)
        return sum(math.exp(c + d * log_z) for d, c in self.tbar_log_terms(k).items())

    def log_tbar_term(self, k: int, x: float, z: float) -> float:
        """log([x^k]T̄(x, z) · x^k), -inf when the term vanishes."""
        if x <= 0 or z <= 0:
            return -math.inf
        log_x, log_z = math.log(x), math.log(z)
        return _logsumexp([c + k * log_x + d * log_z for d, c in self.tbar_log_terms(k).items()])

    def tbar_term(self, k: int, x: float, z: float) -> float:
        """[x^k]T̄(x, z) · x^k."""
        return math.exp(self.log_tbar_term(k, x, z))

    def tail_mass(self, k_max: int, x: float, z: float) -> float:
        """Sum of the terms [x^k]T̄ x^k over k > k_max."""
        total = 0.0
        k = k_max + 1
        quiet = 0
        while quiet < 50 and k < k_max + 10 ** 6:
            term = self.tbar_term(k, x, z)
            total += term
            quiet = quiet + 1 if term <= 1e-17 * max(total, 1e-300) else 0
            k += 1
        return total

    def __repr__(self) -> str:
        return f"{type(self).__name__}({self.spec!r})"


class WheelsClass(CoreClass):
    """
    Wheels W_r (a hub joined to an r-cycle, r >= 3), W_3 being K₄.

    T̄(x, z) = x²z⁵/2 + 2x³z⁷/(1 − xz²).
    """

    pole_type = True

    @property
    def spec(self) -> str:
        return "wheels"

    @property
    def singular_exponent(self) -> Optional[float]:
        return -1.0

    def tbar_log_terms(self, k: int) -> Dict[int, float]:
        if k == 2:
            return {5: math.log(0.5)}
        if k >= 3:
            return {2 * k + 1: math.log(2.0)}
        return {}

    def rho_t(self, z: float) -> float:
        return 1.0 / (z * z)

    def _eval(self, x: float, z: float) -> TbarValues:
        w = x * z * z
        q = 1.0 - w
        value = 0.5 * x ** 2 * z ** 5 + 2 * x ** 3 * z ** 7 / q
        dx = x * z ** 5 + (6 * x ** 2 * z ** 7 - 4 * x ** 3 * z ** 9) / q ** 2
        dz_num = 14 * x ** 3 * z ** 6 - 10 * x ** 4 * z ** 8
        dz = 2.5 * x ** 2 * z ** 4 + dz_num / q ** 2
        dzz = (10 * x ** 2 * z ** 3
               + (84 * x ** 3 * z ** 5 - 80 * x ** 4 * z ** 7) / q ** 2
               + dz_num * 4 * x * z / q ** 3)
        return TbarValues(value, dx, dz, dzz)

    def tail_mass(self, k_max: int, x: float, z: float) -> float:
        k0 = max(k_max + 1, 3)
        w = x * z * z
        tail = 2 * z * w ** k0 / (1 - w)
        if k_max < 2:
            tail += self.tbar_term(2, x, z)
        return tail

    def rim_weight(self, r: int, x: float, z: float) -> float:
        """Boltzmann weight of the cores coming from W_r."""
        return self.tbar_term(r - 1, x, z)

    def sample_core(self, x: float, z: float, rng: np.random.Generator) -> CoreGraph:
        self.check_domain(x, z)
        w = x * z * z
        total = self.tbar_eval(x, z).value
        if rng.random() * total < 0.5 * x ** 2 * z ** 5:
            rim = 3
        else:
            rim = 3 + int(rng.geometric(1.0 - w))
        return core_from_graph(wheel_edges(rim), list(range(rim + 1)), rng, origin="wheels")

    def contains(self, graph: nx.Graph) -> bool:
        n = graph.number_of_nodes()
        if n < 4 or graph.number_of_edges() != 2 * (n - 1):
            return False
        for hub, degree in graph.degree():
            if degree == n - 1:
                rest = graph.subgraph(v for v in graph if v != hub)
                if all(d == 2 for _, d in rest.degree()) and nx.is_connected(rest):
                    return True
        return False


def wheel_edges(rim: int) -> List[Tuple[int, int]]:
    """Edges of W_rim with hub 0 and rim vertices 1..rim in cyclic order."""
    spokes = [(0, i) for i in range(1, rim + 1)]
    cycle = [normalize_edge(i, i % rim + 1) for i in range(1, rim + 1)]
    return spokes + cycle


def automorphism_count(graph: nx.Graph) -> int:
    """Number of automorphisms of a small graph."""
    return sum(1 for _ in GraphMatcher(graph, graph).isomorphisms_iter())


class FixedGraphClass(CoreClass):
    """
    All labeled copies of a single 3-connected graph G.

    With n vertices, m edges and L = n!/|Aut(G)| labeled copies the class contributes
    (2mL/n!) x^{n−2} z^{m−1}.
    """

    def __init__(self, graph: nx.Graph, tag: str):
        if graph.number_of_nodes() < 4 or nx.node_connectivity(graph) < 3:
            raise ClassSpecError(f"{tag} is not a 3-connected graph")
        self.graph = nx.convert_node_labels_to_integers(graph)
        self.tag = tag
        self.n = graph.number_of_nodes()
        self.m = graph.number_of_edges()
        self.automorphisms = automorphism_count(self.graph)
        self.labeled_copies = math.factorial(self.n) // self.automorphisms
        self.coefficient = 2.0 * self.m / self.automorphisms
        self._edges = [normalize_edge(u, v) for u, v in self.graph.edges]

    @property
    def spec(self) -> str:
        return self.tag

    def tbar_log_terms(self, k: int) -> Dict[int, float]:
        if k == self.n - 2:
            return {self.m - 1: math.log(self.coefficient)}
        return {}

    def rho_t(self, z: float) -> float:
        return math.inf

    def _eval(self, x: float, z: float) -> TbarValues:
        k, d, c = self.n - 2, self.m - 1, self.coefficient
        value = c * x ** k * z ** d
        return TbarValues(value, value * k / x, value * d / z, value * d * (d - 1) / z ** 2)

    def sample_core(self, x: float, z: float, rng: np.random.Generator) -> CoreGraph:
        self.check_domain(x, z)
        return core_from_graph(self._edges, list(self.graph.nodes), rng, origin=self.tag)

    def contains(self, graph: nx.Graph) -> bool:
        return (graph.number_of_nodes() == self.n and graph.number_of_edges() == self.m
                and nx.is_isomorphic(graph, self.graph))


BUILTIN_GRAPHS = {
    "k4": lambda: nx.complete_graph(4),
    "k5": lambda: nx.complete_graph(5),
    "k33": lambda: nx.complete_bipartite_graph(3, 3),
    "prism": lambda: nx.circular_ladder_graph(3),
}


class UnionClass(CoreClass):
    """Disjoint union of core classes: T̄ is the sum of the members' egfs."""

    def __init__(self, members: Sequence[CoreClass]):
        if not members:
            raise ClassSpecError("a union needs at least one member")
        self.members = list(members)
        self.size_only = any(m.size_only for m in self.members)
        self.boundary_ok = all(m.boundary_ok or m.entire for m in self.members)
        self.pole_type = any(m.pole_type for m in self.members)

    @property
    def spec(self) -> str:
        return "+".join(m.spec for m in self.members)

    @property
    def singular_exponent(self) -> Optional[float]:
        finite = [m for m in self.members if not m.entire]
        if not finite:
            return None
        dominant = min(finite, key=lambda m: m.rho_t(1.0))
        return dominant.singular_exponent

    def tbar_log_terms(self, k: int) -> Dict[int, float]:
        merged: Dict[int, List[float]] = {}
        for member in self.members:
            for degree, log_coeff in member.tbar_log_terms(k).items():
                merged.setdefault(degree, []).append(log_coeff)
        return {d: _logsumexp(values) for d, values in sorted(merged.items())}

    def rho_t(self, z: float) -> float:
        return min(m.rho_t(z) for m in self.members)

    def check_domain(self, x: float, z: float) -> None:
        for member in self.members:
            member.check_domain(x, z)

    def _eval(self, x: float, z: float) -> TbarValues:
        total = ZERO_TBAR
        for member in self.members:
            total = total + member.tbar_eval(x, z)
        return total

    def tail_mass(self, k_max: int, x: float, z: float) -> float:
        return sum(m.tail_mass(k_max, x, z) for m in self.members)

    def sample_core(self, x: float, z: float, rng: np.random.Generator) -> DrawnCore:
        self.check_domain(x, z)
        weights = np.array([m.tbar_eval(x, z).value for m in self.members])
        index = int(np.searchsorted(np.cumsum(weights), rng.random() * weights.sum(), side="right"))
        return self.members[min(index, len(self.members) - 1)].sample_core(x, z, rng)

    def contains(self, graph: nx.Graph) -> bool:
        return any(m.contains(graph) for m in self.members)


class TableClass(CoreClass):
    """
    A class given by a table of counts |T_{n,m}|, optionally with explicit graphs.

    [x^{n−2} z^{m−1}]T̄ = 2m|T_{n,m}|/n!. A finite table makes T̄ a polynomial, so
    ρ_T is infinite.
    """

    def __init__(self, table: CoefficientTable, source: str = ""):
        self.table = table
        self.source = source
        self._terms: Dict[int, Dict[int, float]] = {}
        for (n, m), count in sorted(table.entries.items()):
            if count > 0:
                log_coeff = math.log(2 * m * count) - math.lgamma(n + 1)
                self._terms.setdefault(n - 2, {})[m - 1] = log_coeff

    @property
    def spec(self) -> str:
        return f"table:{self.source}"

    def tbar_log_terms(self, k: int) -> Dict[int, float]:
        return dict(self._terms.get(k, {}))

    def rho_t(self, z: float) -> float:
        return math.inf

    def _eval(self, x: float, z: float) -> TbarValues:
        value = dx = dz = dzz = 0.0
        for k, row in self._terms.items():
            for d, log_coeff in row.items():
                term = math.exp(log_coeff) * x ** k * z ** d
                value += term
                dx += term * k / x
                dz += term * d / z
                dzz += term * d * (d - 1) / z ** 2
        return TbarValues(value, dx, dz, dzz)

    def tail_mass(self, k_max: int, x: float, z: float) -> float:
        return sum(self.tbar_term(k, x, z) for k in self._terms if k > k_max)

    def sample_core(self, x: float, z: float, rng: np.random.Generator) -> CoreGraph:
        self.check_domain(x, z)
        keys = [(n, m) for (n, m), count in sorted(self.table.entries.items()) if count > 0]
        log_x, log_z = math.log(x), math.log(z)
        logs = np.array([self._terms[n - 2][m - 1] + (n - 2) * log_x + (m - 1) * log_z
                         for n, m in keys])
        weights = np.exp(logs - logs.max())
        index = int(np.searchsorted(np.cumsum(weights), rng.random() * weights.sum(), side="right"))
        n, m = keys[min(index, len(keys) - 1)]
        if not self.table.has_complete_list(n, m):
            raise MissingGraphList(
                f"table {self.source} counts {self.table.count(n, m)} graphs with "
                f"n={n}, m={m} but lists {len(self.table.graphs.get((n, m), []))}"
            )
        graphs = self.table.graphs[(n, m)]
        edges = list(graphs[int(rng.integers(len(graphs)))])
        return core_from_graph(edges, list(range(1, n + 1)), rng, origin=self.spec)

    def contains(self, graph: nx.Graph) -> bool:
        n, m = graph.number_of_nodes(), graph.number_of_edges()
        if self.table.count(n, m) == 0:
            return False
        if not self.table.has_complete_list(n, m):
            raise MissingGraphList(f"table {self.source} lists no graphs for n={n}, m={m}")
        for edges in self.table.graphs[(n, m)]:
            candidate = nx.Graph(list(edges))
            if nx.is_isomorphic(graph, candidate):
                return True
        return False


class SyntheticPolylogClass(CoreClass):
    """
    Size-only class with T̄(x, z) = λ Σ_{k >= min} k^{−α−1} (xz²/c)^k.

    ρ_T(z) = c/z² and every drawn core has k labeled vertices and 2k edges. The
    series converges at x = ρ_T for α > 0 and is evaluated with polylogarithms.
    """

    size_only = True
    boundary_ok = True

    def __init__(self, alpha: float, lam: float, min_size: int = 2, radius: float = 1.0):
        if not alpha > 0:
            raise ClassSpecError(f"alpha must be positive, got {alpha}")
        if not lam > 0:
            raise ClassSpecError(f"lambda must be positive, got {lam}")
        if min_size < 2:
            raise ClassSpecError("min must be >= 2 (cores have at least 4 vertices)")
        if not radius > 0:
            raise ClassSpecError(f"radius must be positive, got {radius}")
        self.alpha = float(alpha)
        self.lam = float(lam)
        self.min_size = int(min_size)
        self.radius = float(radius)
        self.order = self.alpha + 1.0

    @property
    def spec(self) -> str:
        parts = [f"alpha={self.alpha:g}", f"lambda={self.lam:g}"]
        if self.radius != 1.0:
            parts.append(f"radius={self.radius:g}")
        if self.min_size != 2:
            parts.append(f"min={self.min_size}")
        return "synthetic:" + ",".join(parts)

    @property
    def singular_exponent(self) -> Optional[float]:
        return self.alpha

    def tbar_log_terms(self, k: int) -> Dict[int, float]:
        if k < self.min_size:
            return {}
        log_coeff = math.log(self.lam) - self.order * math.log(k) - k * math.log(self.radius)
        return {2 * k: log_coeff}

    def rho_t(self, z: float) -> float:
        return self.radius / (z * z)

    def _tail(self, s: float, w: float) -> float:
        """Σ_{k >= min} k^{−s} w^k."""
        if w >= 1.0 and s <= 1.0:
            return math.inf
        w = min(w, 1.0)
        head = sum(k ** -s * w ** k for k in range(1, self.min_size))
        return float(mpmath.polylog(s, w)) - head

    def _eval(self, x: float, z: float) -> TbarValues:
        w = min(x * z * z / self.radius, 1.0)
        s = self.order
        t0, t1, t2 = self._tail(s, w), self._tail(s - 1, w), self._tail(s - 2, w)
        return TbarValues(
            value=self.lam * t0,
            dx=self.lam * t1 / x,
            dz=2 * self.lam * t1 / z,
            dzz=self.lam * (4 * t2 - 2 * t1) / z ** 2,
        )

    def tail_mass(self, k_max: int, x: float, z: float) -> float:
        w = min(x * z * z / self.radius, 1.0)
        start = max(k_max + 1, self.min_size)
        tail = mpmath.power(w, start) * mpmath.lerchphi(w, self.order, start)
        return self.lam * float(tail)

    def sample_core(self, x: float, z: float, rng: np.random.Generator) -> SizeOnlyCore:
        self.check_domain(x, z)
        w = min(x * z * z / self.radius, 1.0)
        while True:
            k = int(rng.zipf(self.order))
            if k < self.min_size:
                continue
            if w >= 1.0 or rng.random() < w ** (k - self.min_size):
                return SizeOnlyCore(labeled_vertex_count=k, edge_count=2 * k, origin=self.spec)


def _parse_synthetic(body: str) -> SyntheticPolylogClass:
    fields = {}
    for item in filter(None, body.split(",")):
        if "=" not in item:
            raise ClassSpecError(f"synthetic parameter {item!r} is not key=value")
        key, value = item.split("=", 1)
        fields[key.strip()] = value.strip()
    unknown = set(fields) - {"alpha", "lambda", "radius", "min"}
    if unknown:
        raise ClassSpecError(f"unknown synthetic parameters: {', '.join(sorted(unknown))}")
    if "alpha" not in fields or "lambda" not in fields:
        raise ClassSpecError("synthetic classes need alpha and lambda")
    try:
        return SyntheticPolylogClass(
            alpha=float(fields["alpha"]),
            lam=float(fields["lambda"]),
            min_size=int(fields.get("min", 2)),
            radius=float(fields.get("radius", 1.0)),
        )
    except ValueError as exc:
        if isinstance(exc, ClassSpecError):
            raise
        raise ClassSpecError(f"bad synthetic parameter: {exc}") from exc


def _parse_member(token: str) -> CoreClass:
    token = token.strip()
    if token == "wheels":
        return WheelsClass()
    if token in BUILTIN_GRAPHS:
        return FixedGraphClass(BUILTIN_GRAPHS[token](), token)
    if token.startswith("table:"):
        from src.tables import load_table

        path = token[len("table:"):]
        if not path:
            raise ClassSpecError("table: needs a path")
        return TableClass(load_table(path), source=path)
    if token.startswith("synthetic:"):
        return _parse_synthetic(token[len("synthetic:"):])
    raise ClassSpecError(f"unknown core class {token!r}")


def parse_class_spec(spec: str) -> CoreClass:
    """
    Parse a core-class specification.

    Grammar: ``wheels``, ``k4``, ``k5``, ``k33``, ``prism``, ``table:<path>``,
    ``synthetic:alpha=<r>,lambda=<r>[,radius=<r>][,min=<int>]``, joined with ``+``
    for unions. A table path runs to the end of the spec.

    Raises:
        ClassSpecError: If the spec cannot be parsed
    """
    spec = spec.strip()
    if not spec:
        raise ClassSpecError("empty class spec")
    members: List[CoreClass] = []
    rest = spec
    while rest:
        if rest.startswith("table:"):
            members.append(_parse_member(rest))
            break
        token, sep, rest = rest.partition("+")
        if sep and not rest:
            raise ClassSpecError(f"dangling '+' in {spec!r}")
        members.append(_parse_member(token))
    if len(members) == 1:
        return members[0]
    logger.debug(f"Parsed union of {len(members)} core classes from {spec!r}")
    return UnionClass(members)
