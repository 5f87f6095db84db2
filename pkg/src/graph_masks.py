"""Exhaustive enumeration of small labeled graphs as edge bitmasks."""

from collections import Counter
from typing import Iterator, List, Sequence, Tuple

import math

import networkx as nx
import numpy as np


CHUNK_SIZE = 1 << 18


def edge_slots(vertices: Sequence[int]) -> List[Tuple[int, int]]:
    """All unordered vertex pairs, in lexicographic order of positions."""
    return [(vertices[i], vertices[j])
            for i in range(len(vertices)) for j in range(i + 1, len(vertices))]


def incidence_matrix(slots: Sequence[Tuple[int, int]], vertices: Sequence[int]) -> np.ndarray:
    """slots x vertices 0/1 matrix."""
    index = {v: i for i, v in enumerate(vertices)}
    matrix = np.zeros((len(slots), len(vertices)), dtype=np.int16)
    for s, (u, v) in enumerate(slots):
        matrix[s, index[u]] = 1
        matrix[s, index[v]] = 1
    return matrix


def iter_mask_chunks(slot_count: int, chunk_size: int = CHUNK_SIZE) -> Iterator[np.ndarray]:
    """Yield every mask over ``slot_count`` edge slots, in increasing chunks."""
    total = 1 << slot_count
    for start in range(0, total, chunk_size):
        yield np.arange(start, min(start + chunk_size, total), dtype=np.int64)


def mask_bits(masks: np.ndarray, slot_count: int) -> np.ndarray:
    """masks x slots matrix of edge indicators."""
    return ((masks[:, None] >> np.arange(slot_count, dtype=np.int64)) & 1).astype(np.int16)


def mask_edges(mask: int, slots: Sequence[Tuple[int, int]]) -> List[Tuple[int, int]]:
    return [slot for s, slot in enumerate(slots) if (mask >> s) & 1]


def mask_graph(mask: int, slots: Sequence[Tuple[int, int]], vertices: Sequence[int]) -> nx.Graph:
    graph = nx.Graph()
    graph.add_nodes_from(vertices)
    graph.add_edges_from(mask_edges(mask, slots))
    return graph


def sorted_rows(degrees: np.ndarray) -> np.ndarray:
    """Rows whose entries are non-increasing (one representative per degree pattern)."""
    if degrees.shape[1] < 2:
        return np.ones(degrees.shape[0], dtype=bool)
    return np.all(degrees[:, :-1] >= degrees[:, 1:], axis=1)


def relabel_weight(degrees: Sequence[int]) -> int:
    """
    Number of vertex-degree assignments with the same multiset of degrees.

    A graph whose labeled vertices carry non-increasing degrees stands for this many
    labeled graphs, as relabeling maps the graphs of one assignment bijectively onto
    those of another.
    """
    weight = math.factorial(len(degrees))
    for multiplicity in Counter(int(d) for d in degrees).values():
        weight //= math.factorial(multiplicity)
    return weight


def is_three_connected(graph: nx.Graph) -> bool:
    return graph.number_of_nodes() >= 4 and nx.node_connectivity(graph) >= 3
