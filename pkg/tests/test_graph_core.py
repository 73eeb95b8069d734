import numpy as np
import pytest

from gss.core.errors import ConstructionError, GraphValidationError
from gss.services.builtin_graphs import builtin_graph, resolve_graph
from gss.services.graph_core import (
    GridLayout,
    build_2regular_recursive,
    build_g7,
    build_graph,
    canonical_cycle,
    complement_graph,
    cycle_from_order,
    enumerate_noncontiguous_cycles,
    from_edge_list_text,
    is_noncontiguous_wrt,
    recursive_partition_order,
    rook_contiguity,
    to_edge_list_text,
)


def edge_set(g):
    return set(g.edges())


class TestBuildGraph:
    def test_triangle(self, triangle):
        assert triangle.n_edges == 3
        assert triangle.is_regular(2)
        assert triangle.walkable

    def test_rook_3x3_degrees(self, rook3):
        assert rook3.n_edges == 12
        assert [rook3.degree(v) for v in rook3.nodes()] == [2, 3, 2, 3, 4, 3, 2, 3, 2]

    def test_single_edge_not_walkable(self):
        g = build_graph(2, [(1, 2)])
        assert g.min_degree == 1
        assert not g.walkable

    def test_duplicates_collapse(self):
        g = build_graph(3, [(1, 2), (2, 1), (2, 3)])
        assert g.n_edges == 2
        assert g.has_edge(1, 2) and g.has_edge(2, 1)

    @pytest.mark.parametrize("edges", [[(1, 1)], [(0, 1)], [(1, 4)]])
    def test_invalid_edges(self, edges):
        with pytest.raises(GraphValidationError):
            build_graph(3, edges)


class TestRookContiguity:
    @pytest.mark.parametrize("side, n_edges", [(2, 4), (3, 12), (20, 760)])
    def test_edge_counts(self, side, n_edges):
        g = rook_contiguity(GridLayout(side, side))
        assert g.n_edges == n_edges

    def test_2x2_all_degree_two(self):
        assert rook_contiguity(GridLayout(2, 2)).is_regular(2)

    def test_row_major_ids(self):
        layout = GridLayout(3, 4)
        assert layout.id_of(2, 3) == 7
        assert layout.position_of(7) == (2, 3)
        with pytest.raises(GraphValidationError):
            layout.id_of(4, 1)


class TestCycles:
    def test_cycle_from_order_triangle(self, triangle):
        assert edge_set(cycle_from_order((1, 2, 3))) == edge_set(triangle)

    def test_g4_is_noncontiguous(self, g4, rook3):
        assert g4.is_regular(2) and g4.is_connected()
        assert is_noncontiguous_wrt(g4, rook3)

    def test_cycle_order_starts_towards_smaller_neighbor(self, g4):
        assert g4.cycle_order() == (1, 3, 9, 2, 8, 4, 6, 7, 5)

    def test_cycle_order_rejects_non_cycles(self, rook3):
        with pytest.raises(GraphValidationError):
            rook3.cycle_order()

    def test_bad_order(self):
        with pytest.raises(GraphValidationError):
            cycle_from_order((1, 2, 2))
        with pytest.raises(GraphValidationError):
            cycle_from_order((1, 2))

    def test_canonical_cycle(self):
        assert canonical_cycle((3, 1, 2)) == (1, 2, 3)
        assert canonical_cycle((2, 5, 4, 1, 3)) == canonical_cycle((1, 4, 5, 2, 3))


class TestComplement:
    def test_rook_complement(self, rook3):
        g = complement_graph(rook3)
        assert g.n_edges == 24
        assert g.degree(1) == 6
        assert g.degree(5) == 4
        assert is_noncontiguous_wrt(g, rook3)

    def test_complete_and_triangle_complements_are_empty(self, triangle):
        k4 = build_graph(4, [(i, j) for i in range(1, 5) for j in range(i + 1, 5)])
        assert complement_graph(k4).n_edges == 0
        assert complement_graph(triangle).n_edges == 0
        assert not complement_graph(triangle).walkable


class TestNoncontiguity:
    def test_graph_against_itself(self, rook3):
        assert not is_noncontiguous_wrt(rook3, rook3)

    def test_empty_graph(self, rook3):
        assert is_noncontiguous_wrt(build_graph(9, []), rook3)

    def test_size_mismatch(self, rook3, triangle):
        with pytest.raises(GraphValidationError):
            is_noncontiguous_wrt(triangle, rook3)


class TestRecursivePartition:
    @pytest.mark.parametrize("side, parts, size", [(8, 4, 4), (20, 4, 25), (2, 2, 1)])
    def test_part_sizes(self, side, parts, size):
        partition = recursive_partition_order(GridLayout(side, side), parts)
        assert partition.n_parts == parts ** 2
        for part in range(partition.n_parts):
            assert len(partition.members(part)) == size
        assert sorted(partition.order) == list(range(1, side * side + 1))

    def test_parts_are_spatial_blocks(self):
        layout = GridLayout(4, 4)
        partition = recursive_partition_order(layout, 2)
        # top-left 2x2 block first
        assert sorted(partition.order[:4]) == [1, 2, 5, 6]

    def test_indivisible_grid(self):
        with pytest.raises(GraphValidationError):
            recursive_partition_order(GridLayout(3, 3), 2)


class TestRecursiveTwoRegular:
    @pytest.mark.parametrize("side", [8, 20])
    def test_noncontiguous_hamiltonian_cycle(self, side):
        layout = GridLayout(side, side)
        contiguity = rook_contiguity(layout)
        g = build_2regular_recursive(layout, 4, contiguity, np.random.default_rng(6))
        assert g.n_nodes == side * side
        assert g.is_regular(2)
        assert g.is_connected()
        assert is_noncontiguous_wrt(g, contiguity)

    def test_every_window_covers_each_part_once(self):
        layout = GridLayout(20, 20)
        partition = recursive_partition_order(layout, 4)
        g = build_2regular_recursive(layout, 4, rook_contiguity(layout), np.random.default_rng(11))
        order = g.cycle_order()
        wrapped = order + order[:15]
        for start in range(len(order)):
            parts = {partition.part_of[v] for v in wrapped[start : start + 16]}
            assert len(parts) == 16

    def test_each_unit_neighbours_its_reflected_part(self):
        layout = GridLayout(20, 20)
        partition = recursive_partition_order(layout, 4)
        g = build_2regular_recursive(layout, 4, rook_contiguity(layout), np.random.default_rng(12))

        def block(v):
            row, col = layout.position_of(v)
            return (row - 1) // 5, (col - 1) // 5

        for v in g.nodes():
            mirror = tuple(3 - k for k in block(v))
            assert any(
                block(u) == mirror
                and partition.cell_of[u] == partition.cell_of[v]
                for u in g.neighbors(v)
            )

    def test_degenerate_3x3(self, grid3, rook3):
        with pytest.raises(GraphValidationError):
            build_2regular_recursive(grid3, 3, rook3, np.random.default_rng(0))

    def test_construction_error_carries_retries(self):
        err = ConstructionError("dead end", retries=7)
        assert err.retries == 7
        assert "7 retries" in str(err)


class TestG7:
    def test_reflection_edges(self):
        layout = GridLayout(20, 20)
        g = build_g7(layout, np.random.default_rng(7))
        assert g.has_edge(layout.id_of(1, 1), layout.id_of(20, 20))
        assert g.has_edge(layout.id_of(10, 10), layout.id_of(11, 11))
        assert g.is_regular(2)
        assert g.is_connected()

    def test_requires_even_square(self):
        with pytest.raises(GraphValidationError):
            build_g7(GridLayout(3, 3), np.random.default_rng(0))


class TestEnumeration:
    def test_contains_g4(self, rook3, g4):
        target = edge_set(g4)
        assert any(edge_set(g) == target for g in enumerate_noncontiguous_cycles(rook3))

    def test_all_cycles_noncontiguous_and_distinct(self, rook3):
        cycles = list(enumerate_noncontiguous_cycles(rook3))
        assert cycles
        assert all(is_noncontiguous_wrt(g, rook3) for g in cycles)
        keys = {canonical_cycle(g.cycle_order()) for g in cycles}
        assert len(keys) == len(cycles)

    def test_complete_contiguity_gives_nothing(self):
        k5 = build_graph(5, [(i, j) for i in range(1, 6) for j in range(i + 1, 6)])
        assert list(enumerate_noncontiguous_cycles(k5)) == []

    def test_unconstrained_count(self):
        empty = build_graph(9, [])
        assert sum(1 for _ in enumerate_noncontiguous_cycles(empty)) == 20160

    def test_limit(self, rook3):
        assert len(list(enumerate_noncontiguous_cycles(rook3, limit=3))) == 3

    def test_sampled_mode(self, rook3):
        rng = np.random.default_rng(3)
        cycles = list(enumerate_noncontiguous_cycles(rook3, limit=5, rng=rng, mode="sampled"))
        assert len(cycles) == 5
        assert all(is_noncontiguous_wrt(g, rook3) for g in cycles)

    def test_sampled_mode_needs_rng(self, rook3):
        with pytest.raises(GraphValidationError):
            list(enumerate_noncontiguous_cycles(rook3, mode="sampled"))


class TestEdgeList:
    def test_text_format(self, triangle):
        text = to_edge_list_text(triangle)
        assert text.splitlines() == ["3", "1 2", "1 3", "2 3"]
        assert edge_set(from_edge_list_text("# comment\n" + text)) == edge_set(triangle)

    def test_malformed(self):
        with pytest.raises(GraphValidationError):
            from_edge_list_text("3\n1\n")
        with pytest.raises(GraphValidationError):
            from_edge_list_text("1 2\n")


class TestBuiltinGraphs:
    @pytest.mark.parametrize("name", ["g2", "g3", "g4", "g5"])
    def test_noncontiguous_nine_cycles(self, name, rook3):
        g = builtin_graph(name)
        assert g.is_regular(2) and g.is_connected()
        assert is_noncontiguous_wrt(g, rook3)

    def test_g3_cycle(self):
        assert builtin_graph("g3").cycle_order() == (1, 5, 3, 4, 9, 7, 2, 6, 8)

    def test_complement_spec(self, rook3):
        g = resolve_graph("complement:grid:3x3")
        assert edge_set(g) == edge_set(complement_graph(rook3))
        assert resolve_graph("complement:triangle").n_edges == 0

    def test_g5_is_the_single_contiguous_triple_cycle(self):
        assert builtin_graph("g5").cycle_order() == (1, 3, 8, 4, 6, 2, 9, 7, 5)

    def test_unknown_spec(self):
        with pytest.raises(GraphValidationError):
            resolve_graph("complement:nowhere")
