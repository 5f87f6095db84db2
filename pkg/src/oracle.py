"""
Brute-force ground truth for networks.

Validation, recursive series/parallel/core decomposition of a given network, and
exhaustive enumeration of all networks on a few labeled vertices.
"""

from dataclasses import dataclass, field
from itertools import combinations
from pathlib import Path
from typing import Dict, FrozenSet, Hashable, List, Optional, Set, Tuple, Union

import logging

import networkx as nx
import numpy as np

from src.core_classes import CoreClass
from src.errors import NotANetwork
from src.graph_masks import (
    edge_slots,
    incidence_matrix,
    is_three_connected,
    iter_mask_chunks,
    mask_bits,
    mask_edges,
    relabel_weight,
    sorted_rows,
)
from src.models import LEFT_POLE, RIGHT_POLE, CensusReport, CoefficientTable, Network
from src.tables import format_table, parse_table


# Configure logging
logger = logging.getLogger(__name__)


@dataclass
class DecompositionNode:
    """
    One node of the decomposition tree of a network.

    Attributes:
        kind: "edge", "series", "parallel" or "core"
        left: Left pole of the sub-network
        right: Right pole of the sub-network
        graph: The sub-network itself
        children: Sub-networks it is composed of
        core: For core nodes, the 3-connected core (pole edge included)
    """
    kind: str
    left: Hashable
    right: Hashable
    graph: nx.Graph
    children: List["DecompositionNode"] = field(default_factory=list)
    core: Optional[nx.Graph] = None

    def walk(self):
        """Pre-order iteration over the subtree."""
        yield self
        for child in self.children:
            yield from child.walk()

    def census(self) -> CensusReport:
        return CensusReport.from_core_vertex_counts(
            node.core.number_of_nodes() for node in self.walk() if node.kind == "core"
        )


def _network_graph(network: Network) -> nx.Graph:
    if network.size_only:
        raise NotANetwork("size-only networks carry no adjacency")
    return network.to_graph()


def is_valid_network(graph: nx.Graph, left: Hashable, right: Hashable) -> bool:
    """True iff graph is simple and graph plus the pole edge is 2-connected."""
    if nx.number_of_selfloops(graph) or left not in graph or right not in graph:
        return False
    if graph.number_of_nodes() == 2:
        return graph.has_edge(left, right)
    if any(degree == 0 for _, degree in graph.degree()):
        return False
    closed = graph.copy()
    closed.add_edge(left, right)
    return nx.is_biconnected(closed)


def validate_network(network: Network) -> bool:
    """
    True iff the network is simple and adding the pole edge makes it 2-connected.

    The single edge between the poles is a valid network.
    """
    if network.size_only:
        return False
    if len(network.edge_key()) != len(network.edges):
        return False
    allowed = set(network.vertices())
    if any(u not in allowed or v not in allowed or u == v for u, v in network.edges):
        return False
    return is_valid_network(network.to_graph(), LEFT_POLE, RIGHT_POLE)


def _series_cut(graph: nx.Graph, left: Hashable, right: Hashable) -> Optional[Hashable]:
    """The cut vertex separating the poles that is closest to the left pole."""
    cuts = set(nx.articulation_points(graph)) - {left, right}
    if not cuts:
        return None
    distance = nx.single_source_shortest_path_length(graph, left)
    return min(cuts, key=lambda v: (distance[v], repr(v)))


def _isolate_core(graph: nx.Graph, left: Hashable, right: Hashable) -> Tuple[nx.Graph, Dict[FrozenSet, Set]]:
    """
    Contract every sub-network hanging off a separation pair into a virtual edge.

    Works on graph + pole edge. A separation pair {u, v} qualifies when some component
    of the graph without u and v contains neither pole; those components (and an
    existing uv edge) are replaced by one edge uv that remembers the hidden vertices.

    Returns:
        The core (pole edge included) and hidden vertices per core edge
    """
    work = graph.copy()
    work.add_edge(left, right)
    hidden: Dict[FrozenSet, Set] = {}
    changed = True
    while changed:
        changed = False
        for u, v in combinations(sorted(work.nodes, key=repr), 2):
            if {u, v} == {left, right}:
                continue
            rest = work.copy()
            rest.remove_nodes_from((u, v))
            inner = [c for c in nx.connected_components(rest) if left not in c and right not in c]
            if not inner:
                continue
            swallowed = set().union(*inner)
            key = frozenset((u, v))
            bucket = hidden.setdefault(key, set())
            bucket |= swallowed
            for other in list(hidden):
                if other != key and other & swallowed:
                    bucket |= hidden.pop(other) | (set(other) - {u, v})
            work.remove_nodes_from(swallowed)
            work.add_edge(u, v)
            changed = True
            break
    return work, hidden


def decompose_network_tree(
    network: Union[Network, nx.Graph],
    left: Hashable = LEFT_POLE,
    right: Hashable = RIGHT_POLE,
) -> DecompositionNode:
    """
    Recover the series/parallel/core decomposition of a network.

    Args:
        network: A Network, or a networkx graph together with its poles
        left: Left pole (for graphs)
        right: Right pole (for graphs)

    Returns:
        Root of the decomposition tree

    Raises:
        NotANetwork: If the input is not a valid network
    """
    graph = _network_graph(network) if isinstance(network, Network) else network
    if not is_valid_network(graph, left, right):
        raise NotANetwork("graph plus pole edge is not 2-connected")
    return _decompose(graph, left, right)


def _decompose(graph: nx.Graph, left: Hashable, right: Hashable) -> DecompositionNode:
    node = DecompositionNode(kind="edge", left=left, right=right, graph=graph)
    if graph.number_of_nodes() == 2:
        return node

    inner = graph.copy()
    inner.remove_nodes_from((left, right))
    components = list(nx.connected_components(inner))
    has_pole_edge = graph.has_edge(left, right)

    if has_pole_edge or len(components) > 1:
        node.kind = "parallel"
        if has_pole_edge:
            node.children.append(_decompose(nx.Graph([(left, right)]), left, right))
        for component in sorted(components, key=lambda c: sorted(map(repr, c))):
            part = graph.subgraph(component | {left, right}).copy()
            if part.has_edge(left, right):
                part.remove_edge(left, right)
            node.children.append(_decompose(part, left, right))
        return node

    cut = _series_cut(graph, left, right)
    if cut is not None:
        node.kind = "series"
        rest = graph.copy()
        rest.remove_node(cut)
        left_side = nx.node_connected_component(rest, left)
        left_part = graph.subgraph(left_side | {cut}).copy()
        right_part = graph.subgraph(set(graph) - left_side).copy()
        node.children.append(_decompose(left_part, left, cut))
        node.children.append(_decompose(right_part, cut, right))
        return node

    core, hidden = _isolate_core(graph, left, right)
    if not is_three_connected(core):
        raise NotANetwork(f"no 3-connected core between poles {left} and {right}")
    node.kind = "core"
    node.core = core
    for u, v in sorted(core.edges, key=lambda e: sorted(map(repr, e))):
        if {u, v} == {left, right}:
            continue
        vertices = hidden.get(frozenset((u, v)), set())
        if not vertices:
            node.children.append(_decompose(nx.Graph([(u, v)]), u, v))
            continue
        part = graph.subgraph(vertices | {u, v}).copy()
        node.children.append(_decompose(part, u, v))
    return node


def decompose_network(network: Network) -> CensusReport:
    """Core census of a network from its structural decomposition."""
    return decompose_network_tree(network).census()


def core_graphs(network: Network) -> List[nx.Graph]:
    """The 3-connected cores of a network, each with its virtual pole edge."""
    tree = decompose_network_tree(network)
    return [node.core for node in tree.walk() if node.kind == "core"]


@dataclass
class NetworkEnumeration:
    """
    Exhaustive network counts.

    Attributes:
        counts: (n, m) -> number of networks with n labeled vertices and m edges
        networks: (n, m) -> explicit networks (small n only)
    """
    counts: Dict[Tuple[int, int], int] = field(default_factory=dict)
    networks: Dict[Tuple[int, int], List[Network]] = field(default_factory=dict)

    def total(self, n: int) -> int:
        return sum(count for (size, _), count in self.counts.items() if size == n)

    def weighted_total(self, n: int, y: float) -> float:
        """Σ_m count(n, m) y^m, to compare with n! [x^n]N(x, y)."""
        return sum(count * y ** m for (size, m), count in self.counts.items() if size == n)

    def support(self, n: int) -> List[Network]:
        return [net for (size, _), nets in sorted(self.networks.items()) if size == n for net in nets]


def _in_class(network: Network, core_class: CoreClass) -> bool:
    return all(core_class.contains(core) for core in core_graphs(network))


def enumerate_networks(
    core_class: CoreClass,
    n_max: int,
    keep_lists_up_to: int = 4,
) -> NetworkEnumeration:
    """
    Enumerate every network on n <= n_max labeled vertices whose cores belong to a class.

    All graphs on {L, R, 1..n} are visited as edge bitmasks. Beyond
    ``keep_lists_up_to`` only graphs whose labeled degrees are non-increasing are
    examined, each weighted by the number of degree assignments it represents.

    Args:
        core_class: Class whose members the cores must be isomorphic to
        n_max: Largest number of labeled vertices (6 is the practical limit)
        keep_lists_up_to: Largest n for which explicit networks are listed

    Returns:
        NetworkEnumeration
    """
    result = NetworkEnumeration()
    for n in range(0, n_max + 1):
        vertices = [LEFT_POLE, RIGHT_POLE] + list(range(1, n + 1))
        slots = edge_slots(vertices)
        incidence = incidence_matrix(slots, vertices)
        listing = n <= keep_lists_up_to
        for masks in iter_mask_chunks(len(slots)):
            bits = mask_bits(masks, len(slots))
            degrees = bits @ incidence
            edges = bits.sum(axis=1)
            keep = (edges >= n + 1) & (degrees[:, :2].min(axis=1) >= 1)
            if n:
                labeled = degrees[:, 2:]
                keep &= labeled.min(axis=1) >= 2
                if not listing:
                    keep &= sorted_rows(labeled)
            for row in np.flatnonzero(keep):
                edge_list = mask_edges(int(masks[row]), slots)
                network = Network(labeled_vertex_count=n, edge_count=len(edge_list),
                                  edges=sorted(tuple(sorted(e)) for e in edge_list))
                if not validate_network(network) or not _in_class(network, core_class):
                    continue
                key = (n, network.edge_count)
                weight = 1 if listing else relabel_weight(degrees[row, 2:])
                result.counts[key] = result.counts.get(key, 0) + weight
                if listing:
                    result.networks.setdefault(key, []).append(network)
        logger.info(f"Enumerated networks on {n} labeled vertices: {result.total(n)}")
    return result


def save_network_counts(enumeration: NetworkEnumeration, path: Union[str, Path]) -> None:
    """Write the counts as ``N<TAB>n<TAB>m<TAB>count`` records."""
    Path(path).write_text(format_network_counts(enumeration), encoding="utf-8")


def format_network_counts(enumeration: NetworkEnumeration) -> str:
    return format_table(CoefficientTable(entries=dict(enumeration.counts)), record_prefix="N")


def load_network_counts(path: Union[str, Path]) -> Dict[Tuple[int, int], int]:
    table = parse_table(Path(path).read_text(encoding="utf-8"), record_prefix="N")
    return dict(table.entries)
