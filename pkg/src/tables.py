"""Coefficient tables of labeled 3-connected graphs: file format and brute-force oracle."""

from pathlib import Path
from typing import Dict, List, Optional, Tuple, Union

import logging
import math

import networkx as nx
import numpy as np

from src.errors import TableParseError, TableValidationError
from src.graph_masks import (
    edge_slots,
    incidence_matrix,
    is_three_connected,
    iter_mask_chunks,
    mask_bits,
    mask_edges,
    mask_graph,
    relabel_weight,
    sorted_rows,
)
from src.models import CoefficientTable, GraphEdges, normalize_edge


# Configure logging
logger = logging.getLogger(__name__)

PathLike = Union[str, Path]


def edge_range(n: int) -> Tuple[int, int]:
    """Smallest and largest edge count of a 3-connected graph on n vertices."""
    return math.ceil(3 * n / 2), n * (n - 1) // 2


def _parse_int(text: str, line_number: int, what: str) -> int:
    try:
        return int(text)
    except ValueError:
        raise TableParseError(line_number, f"{what} {text!r} is not an integer") from None


def _parse_edges(text: str, line_number: int) -> GraphEdges:
    edges = []
    for item in filter(None, text.split(",")):
        parts = item.split("-")
        if len(parts) != 2:
            raise TableParseError(line_number, f"edge {item!r} is not of the form u-v")
        u = _parse_int(parts[0], line_number, "vertex")
        v = _parse_int(parts[1], line_number, "vertex")
        edges.append(normalize_edge(u, v))
    return tuple(sorted(edges))


def parse_table(text: str, record_prefix: Optional[str] = None) -> CoefficientTable:
    """
    Parse the text form of a coefficient table.

    Lines are ``n<TAB>m<TAB>count`` or ``G<TAB>n<TAB>m<TAB>u1-v1,u2-v2,...``; blank
    lines and ``#`` comments are skipped. With ``record_prefix`` set, count records
    must carry that prefix as their first field (``N`` for network counts).

    Raises:
        TableParseError: On the first malformed line
    """
    table = CoefficientTable()
    for line_number, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        fields = line.split("\t") if "\t" in line else line.split()
        fields = [f.strip() for f in fields]
        if fields[0] == "G":
            if len(fields) != 4:
                raise TableParseError(line_number, "graph lines need G, n, m and an edge list")
            n = _parse_int(fields[1], line_number, "n")
            m = _parse_int(fields[2], line_number, "m")
            table.graphs.setdefault((n, m), []).append(_parse_edges(fields[3], line_number))
            continue
        if record_prefix is not None:
            if fields[0] != record_prefix:
                raise TableParseError(line_number, f"expected a {record_prefix!r} record")
            fields = fields[1:]
        if len(fields) != 3:
            raise TableParseError(line_number, f"expected 3 fields, found {len(fields)}")
        n = _parse_int(fields[0], line_number, "n")
        m = _parse_int(fields[1], line_number, "m")
        count = _parse_int(fields[2], line_number, "count")
        if (n, m) in table.entries:
            raise TableParseError(line_number, f"duplicate record for n={n}, m={m}")
        table.entries[(n, m)] = count
    return table


def validate_table(table: CoefficientTable) -> List[str]:
    """
    Check the invariants of a 3-connected coefficient table.

    Returns:
        List of problems; empty when the table is valid
    """
    problems = []
    for (n, m), count in sorted(table.entries.items()):
        low, high = edge_range(n)
        if n < 4:
            problems.append(f"n={n}: 3-connected graphs have at least 4 vertices")
        elif not low <= m <= high:
            problems.append(f"n={n}, m={m}: edge count outside [{low}, {high}]")
        if count <= 0:
            problems.append(f"n={n}, m={m}: count must be positive")
    for (n, m), graphs in sorted(table.graphs.items()):
        if (n, m) not in table.entries:
            problems.append(f"n={n}, m={m}: graphs listed without a count")
            continue
        if len(graphs) > table.entries[(n, m)]:
            problems.append(f"n={n}, m={m}: more graphs listed than counted")
        seen = set()
        for index, edges in enumerate(graphs):
            label = f"n={n}, m={m}, graph {index + 1}"
            edge_set = frozenset(edges)
            if len(edge_set) != len(edges) or any(u == v for u, v in edges):
                problems.append(f"{label}: not a simple graph")
                continue
            if len(edges) != m:
                problems.append(f"{label}: has {len(edges)} edges")
                continue
            vertices = {v for edge in edges for v in edge}
            if vertices != set(range(1, n + 1)):
                problems.append(f"{label}: vertices are not 1..{n}")
                continue
            if edge_set in seen:
                problems.append(f"{label}: duplicate graph")
                continue
            seen.add(edge_set)
            if not is_three_connected(nx.Graph(list(edges))):
                problems.append(f"{label}: not 3-connected")
    return problems


def load_table(path: PathLike) -> CoefficientTable:
    """
    Load and validate a coefficient table file.

    Raises:
        TableParseError: On a malformed line
        TableValidationError: If the table violates its invariants
    """
    text = Path(path).read_text(encoding="utf-8")
    table = parse_table(text)
    problems = validate_table(table)
    if problems:
        raise TableValidationError(f"{path}: " + "; ".join(problems))
    logger.debug(f"Loaded table {path} with {len(table.entries)} records")
    return table


def format_table(table: CoefficientTable, record_prefix: Optional[str] = None) -> str:
    """Text form of a table; records sorted by (n, m), graphs sorted by edge list."""
    lines = []
    for (n, m), count in sorted(table.entries.items()):
        fields = [str(n), str(m), str(count)]
        if record_prefix:
            fields.insert(0, record_prefix)
        lines.append("\t".join(fields))
    for (n, m), graphs in sorted(table.graphs.items()):
        for edges in sorted(graphs):
            edge_text = ",".join(f"{u}-{v}" for u, v in edges)
            lines.append(f"G\t{n}\t{m}\t{edge_text}")
    return "\n".join(lines) + ("\n" if lines else "")


def save_table(table: CoefficientTable, path: PathLike) -> None:
    """Write a table so that load_table reproduces it."""
    Path(path).write_text(format_table(table), encoding="utf-8")
    logger.info(f"Saved table with {len(table.entries)} records to {path}")


def brute_force_three_connected(
    n_max: int,
    restrict_to=None,
    with_graphs_up_to: int = 6,
) -> CoefficientTable:
    """
    Count labeled 3-connected graphs on 4 <= n <= n_max vertices by exhaustion.

    Up to ``with_graphs_up_to`` vertices every labeled graph is visited and listed.
    Beyond that only graphs whose degrees are non-increasing in the labels are
    visited and each is weighted by the number of degree assignments it stands for.

    Args:
        n_max: Largest vertex count (8 is the practical limit)
        restrict_to: Optional core class; only graphs it contains are kept
        with_graphs_up_to: Largest n for which explicit graphs are listed

    Returns:
        CoefficientTable with counts (and graph lists for small n)
    """
    table = CoefficientTable()
    for n in range(4, n_max + 1):
        vertices = list(range(1, n + 1))
        slots = edge_slots(vertices)
        incidence = incidence_matrix(slots, vertices)
        low, _ = edge_range(n)
        listing = n <= with_graphs_up_to
        counts: Dict[int, int] = {}
        for masks in iter_mask_chunks(len(slots)):
            bits = mask_bits(masks, len(slots))
            degrees = bits @ incidence
            edges = bits.sum(axis=1)
            keep = (edges >= low) & (degrees.min(axis=1) >= 3)
            if not listing:
                keep &= sorted_rows(degrees)
            for row in np.flatnonzero(keep):
                mask = int(masks[row])
                graph = mask_graph(mask, slots, vertices)
                if not is_three_connected(graph):
                    continue
                if restrict_to is not None and not restrict_to.contains(graph):
                    continue
                m = int(edges[row])
                weight = 1 if listing else relabel_weight(degrees[row])
                counts[m] = counts.get(m, 0) + weight
                if listing:
                    table.graphs.setdefault((n, m), []).append(tuple(mask_edges(mask, slots)))
        for m, count in counts.items():
            table.entries[(n, m)] = count
        logger.info(f"Enumerated 3-connected graphs on {n} vertices: {sum(counts.values())}")
    for key in table.graphs:
        table.graphs[key].sort()
    return table
