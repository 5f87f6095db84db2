"""Tests for coefficient tables and the brute-force 3-connected oracle."""

import math
import os
import tempfile

import networkx as nx
import pytest

from src.core_classes import WheelsClass
from src.errors import TableParseError, TableValidationError
from src.graph_masks import relabel_weight, sorted_rows
from src.models import CoefficientTable
from src.tables import (
    brute_force_three_connected,
    edge_range,
    format_table,
    load_table,
    parse_table,
    save_table,
    validate_table,
)

K4_EDGES = ((1, 2), (1, 3), (1, 4), (2, 3), (2, 4), (3, 4))


class TestEdgeRange:
    """Tests for the admissible edge counts."""

    @pytest.mark.parametrize("n, expected", [(4, (6, 6)), (5, (8, 10)), (6, (9, 15)), (7, (11, 21))])
    def test_values(self, n, expected):
        assert edge_range(n) == expected


class TestParseTable:
    """Tests for the table text format."""

    def test_counts_and_graphs(self):
        text = "# K4\n4\t6\t1\n\n5 8 15\nG\t4\t6\t1-2,1-3,1-4,2-3,2-4,3-4\n"
        table = parse_table(text)
        assert table.entries == {(4, 6): 1, (5, 8): 15}
        assert table.graphs == {(4, 6): [K4_EDGES]}

    def test_round_trip(self):
        table = CoefficientTable(entries={(4, 6): 1, (5, 9): 10}, graphs={(4, 6): [K4_EDGES]})
        assert parse_table(format_table(table)) == table

    def test_record_prefix(self):
        table = parse_table("N\t1\t3\t2\n", record_prefix="N")
        assert table.entries == {(1, 3): 2}
        assert format_table(table, record_prefix="N") == "N\t1\t3\t2\n"

    def test_empty_text(self):
        assert parse_table("") == CoefficientTable()
        assert format_table(CoefficientTable()) == ""

    @pytest.mark.parametrize("text, line_number, fragment", [
        ("4\t6\n", 1, "expected 3 fields"),
        ("4\t6\t1\n4\tsix\t1\n", 2, "not an integer"),
        ("# header\n4\t6\t1\n4\t6\t2\n", 3, "duplicate"),
        ("G\t4\t6\n", 1, "graph lines"),
        ("G\t4\t6\t1-2-3\n", 1, "u-v"),
    ])
    def test_errors_carry_line_numbers(self, text, line_number, fragment):
        with pytest.raises(TableParseError) as excinfo:
            parse_table(text)
        assert excinfo.value.line_number == line_number
        assert fragment in str(excinfo.value)

    def test_missing_prefix(self):
        with pytest.raises(TableParseError):
            parse_table("1\t3\t2\n", record_prefix="N")


class TestValidateTable:
    """Tests for table invariants."""

    def test_valid(self):
        table = CoefficientTable(entries={(4, 6): 1}, graphs={(4, 6): [K4_EDGES]})
        assert validate_table(table) == []

    @pytest.mark.parametrize("table, fragment", [
        (CoefficientTable(entries={(3, 3): 1}), "at least 4 vertices"),
        (CoefficientTable(entries={(5, 7): 1}), "outside"),
        (CoefficientTable(entries={(5, 11): 1}), "outside"),
        (CoefficientTable(entries={(4, 6): 0}), "positive"),
        (CoefficientTable(graphs={(4, 6): [K4_EDGES]}), "without a count"),
        (CoefficientTable(entries={(4, 6): 1}, graphs={(4, 6): [K4_EDGES, K4_EDGES]}), "more graphs"),
        (CoefficientTable(entries={(4, 6): 2}, graphs={(4, 6): [K4_EDGES, K4_EDGES]}), "duplicate graph"),
        (CoefficientTable(entries={(4, 6): 1}, graphs={(4, 6): [K4_EDGES[:5] + ((1, 1),)]}), "not a simple graph"),
        (CoefficientTable(entries={(4, 6): 1}, graphs={(4, 6): [K4_EDGES[:5]]}), "has 5 edges"),
        (CoefficientTable(entries={(5, 8): 1},
                          graphs={(5, 8): [((1, 2), (1, 3), (1, 4), (2, 3), (2, 4), (3, 4), (1, 5), (2, 5))]}),
         "not 3-connected"),
    ])
    def test_problems(self, table, fragment):
        problems = validate_table(table)
        assert any(fragment in problem for problem in problems)

    def test_wrong_vertex_labels(self):
        shifted = tuple((u + 1, v + 1) for u, v in K4_EDGES)
        problems = validate_table(CoefficientTable(entries={(4, 6): 1}, graphs={(4, 6): [shifted]}))
        assert any("vertices are not" in problem for problem in problems)


class TestSaveLoad:
    """Tests for table files."""

    def setup_method(self):
        self.temp_dir = tempfile.mkdtemp()

    def teardown_method(self):
        for name in os.listdir(self.temp_dir):
            os.remove(os.path.join(self.temp_dir, name))
        os.rmdir(self.temp_dir)

    def test_save_and_load(self):
        table = brute_force_three_connected(5)
        path = os.path.join(self.temp_dir, "t5.tsv")
        save_table(table, path)
        assert load_table(path) == table

    def test_load_rejects_invalid_table(self):
        path = os.path.join(self.temp_dir, "bad.tsv")
        with open(path, "w", encoding="utf-8") as f:
            f.write("5\t7\t3\n")
        with pytest.raises(TableValidationError) as excinfo:
            load_table(path)
        assert "edge count outside" in str(excinfo.value)

    def test_load_reports_parse_errors(self):
        path = os.path.join(self.temp_dir, "broken.tsv")
        with open(path, "w", encoding="utf-8") as f:
            f.write("4\t6\t1\nnot a record\n")
        with pytest.raises(TableParseError) as excinfo:
            load_table(path)
        assert excinfo.value.line_number == 2


class TestBruteForce:
    """Tests for exhaustive counting of labeled 3-connected graphs."""

    def test_small_counts(self):
        table = brute_force_three_connected(5)
        assert table.entries == {(4, 6): 1, (5, 8): 15, (5, 9): 10, (5, 10): 1}
        assert validate_table(table) == []
        assert len(table.graphs[(5, 8)]) == 15

    def test_six_vertices(self):
        table = brute_force_three_connected(6)
        # K33 contributes 10 labelings, the prism 60
        assert table.entries[(6, 9)] == 70
        assert sum(count for (n, _), count in table.entries.items() if n == 6) == sum(
            len(table.graphs[key]) for key in table.graphs if key[0] == 6)

    def test_degree_representatives_agree_with_listing(self):
        listed = brute_force_three_connected(6, with_graphs_up_to=6)
        weighted = brute_force_three_connected(6, with_graphs_up_to=5)
        assert weighted.entries == listed.entries
        assert (6, 9) not in weighted.graphs

    def test_restricted_to_wheels(self):
        table = brute_force_three_connected(6, restrict_to=WheelsClass())
        # K4, the 15 labelings of W_4 and the 72 of W_5
        assert table.entries == {(4, 6): 1, (5, 8): 15, (6, 10): 72}

    def test_graphs_are_three_connected(self):
        table = brute_force_three_connected(5)
        for graphs in table.graphs.values():
            for edges in graphs:
                assert nx.node_connectivity(nx.Graph(list(edges))) >= 3


class TestRelabelWeight:
    """Tests for degree-pattern weights."""

    def test_values(self):
        assert relabel_weight([3, 3, 3, 3]) == 1
        assert relabel_weight([4, 3, 3, 3, 3]) == 5
        assert relabel_weight([4, 4, 3, 3, 3, 3]) == math.comb(6, 2)

    def test_sorted_rows(self):
        import numpy as np

        rows = sorted_rows(np.array([[4, 3, 3], [3, 4, 3]]))
        assert list(rows) == [True, False]
