import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from eulersparse.errors import InvalidGraph, InvalidParams, NonPowerOfTwoWeight
from eulersparse.graph import (
    DirectedMultigraph,
    binary_decompose,
    degree_difference,
    generate_random_eulerian,
    has_power_of_two_weights,
    is_connected,
    is_eulerian,
    partition_by_weight,
    read_graph,
    read_json,
    read_tsv,
    write_json,
    write_tsv,
)
from eulersparse.linalg import laplacian_directed


def g_of(n, edges):
    return DirectedMultigraph.from_edges(n, edges)


class TestConstruction:
    def test_arrays_are_read_only(self, triangle):
        with pytest.raises(ValueError):
            triangle.weights[0] = 5

    def test_integral_weights_stored_as_int(self, triangle):
        assert triangle.weights.dtype == np.int64
        assert triangle.is_integral

    def test_real_weights_kept_as_float(self):
        g = g_of(2, [(0, 1, 0.5), (1, 0, 0.5)])
        assert g.weights.dtype == np.float64
        assert not g.is_integral

    @pytest.mark.parametrize(
        "edges",
        [[(0, 0, 1)], [(0, 3, 1)], [(0, 1, 0)], [(0, 1, -2)], [(0, 1, float("inf"))], [(0, 1, 2.0**63)]],
    )
    def test_rejects_bad_edges(self, edges):
        with pytest.raises(InvalidGraph):
            g_of(3, edges)

    def test_large_weight_warns(self):
        with pytest.warns(RuntimeWarning):
            g_of(2, [(0, 1, 2**41), (1, 0, 2**41)])

    def test_equality_is_positional_multiset_is_not(self):
        a = g_of(3, [(0, 1, 1), (1, 2, 1), (2, 0, 1)])
        b = g_of(3, [(2, 0, 1), (0, 1, 1), (1, 2, 1)])
        assert a != b  # edge ids differ
        assert a.edge_multiset() == b.edge_multiset()
        assert a == g_of(3, [(0, 1, 1), (1, 2, 1), (2, 0, 1)])

    def test_concat_and_subgraph(self, triangle):
        both = DirectedMultigraph.concat(3, [triangle, triangle])
        assert both.m == 6
        assert both.subgraph([0, 1, 2]) == triangle


class TestEulerian:
    def test_three_cycle(self, triangle):
        assert is_eulerian(triangle)

    def test_single_edge(self):
        assert not is_eulerian(g_of(2, [(0, 1, 1)]))

    def test_antiparallel_pair(self):
        assert is_eulerian(g_of(2, [(0, 1, 2), (1, 0, 2)]))

    def test_degree_difference_examples(self, triangle):
        assert degree_difference(triangle).tolist() == [0, 0, 0]
        assert degree_difference(g_of(2, [(0, 1, 3)])).tolist() == [3, -3]
        assert degree_difference(g_of(3, [(0, 1, 1), (1, 2, 1)])).tolist() == [1, 0, -1]

    def test_real_weights_use_relative_tolerance(self):
        g = g_of(3, [(0, 1, 0.1 + 0.2), (1, 2, 0.3), (2, 0, 0.30000000000000004)])
        assert is_eulerian(g)


class TestBinaryDecompose:
    def test_weight_five(self):
        h = binary_decompose(g_of(2, [(0, 1, 5)]))
        assert sorted(h.weights.tolist()) == [1, 4]

    def test_weight_eight(self):
        assert binary_decompose(g_of(2, [(0, 1, 8)])).weights.tolist() == [8]

    def test_two_cycle_of_threes(self):
        h = binary_decompose(g_of(2, [(0, 1, 3), (1, 0, 3)]))
        assert sorted(h.weights.tolist()) == [1, 1, 2, 2]
        assert is_eulerian(h)

    def test_rejects_real_weights(self):
        with pytest.raises(InvalidGraph):
            binary_decompose(g_of(2, [(0, 1, 1.5), (1, 0, 1.5)]))


class TestPartition:
    def test_two_levels(self):
        p = partition_by_weight(g_of(3, [(0, 1, 1), (1, 2, 1), (2, 0, 2)]))
        assert [(lv.level, lv.graph.m) for lv in p.levels] == [(0, 2), (1, 1)]

    def test_single_level(self):
        p = partition_by_weight(g_of(3, [(0, 1, 4), (1, 2, 4), (2, 0, 4)]))
        assert [lv.level for lv in p.levels] == [2]

    def test_weight_three_rejected(self):
        with pytest.raises(NonPowerOfTwoWeight):
            partition_by_weight(g_of(2, [(0, 1, 3), (1, 0, 3)]))

    def test_reassemble_identity(self, medium_graph):
        g = binary_decompose(medium_graph)
        assert partition_by_weight(g).reassemble() == g


class TestGenerator:
    def test_single_cycle(self):
        g = generate_random_eulerian(5, 1, max_len=5, seed=3)
        assert is_eulerian(g)
        assert 3 <= g.m <= 5

    def test_many_cycles_eulerian(self):
        assert is_eulerian(generate_random_eulerian(50, 200, seed=1))

    def test_deterministic(self):
        a = generate_random_eulerian(30, 40, max_weight_exp=3, seed=9)
        b = generate_random_eulerian(30, 40, max_weight_exp=3, seed=9)
        assert a.edge_multiset() == b.edge_multiset()
        assert np.array_equal(a.tails, b.tails)

    def test_power_of_two_weights(self):
        g = generate_random_eulerian(20, 30, max_weight_exp=4, seed=2)
        assert has_power_of_two_weights(g)
        assert g.weights.max() <= 16

    def test_connected_option(self):
        assert is_connected(generate_random_eulerian(40, 40, seed=4, ensure_connected=True))

    @pytest.mark.parametrize("args", [(2, 1), (5, 0), (5, 1, 2), (5, 1, 4, -1)])
    def test_invalid_params(self, args):
        with pytest.raises(InvalidParams):
            generate_random_eulerian(*args)


class TestSerialisation:
    def test_tsv_round_trip(self, medium_graph, tmp_path):
        path = tmp_path / "g.tsv"
        text = write_tsv(medium_graph, path)
        assert text.startswith(f"# directed-eulerian n={medium_graph.n} m={medium_graph.m}")
        assert read_tsv(path) == medium_graph
        assert read_graph(str(path)) == medium_graph

    def test_tsv_rejects_real_weights(self):
        with pytest.raises(InvalidGraph):
            write_tsv(g_of(2, [(0, 1, 0.5), (1, 0, 0.5)]))

    def test_tsv_edge_count_checked(self):
        with pytest.raises(InvalidGraph):
            read_tsv("# directed-eulerian n=2 m=3\n0\t1\t1\n")

    def test_json_round_trip_real(self, tmp_path):
        g = g_of(3, [(0, 1, 1.5), (1, 2, 1.5), (2, 0, 1.5)])
        path = tmp_path / "g.json"
        write_json(g, path)
        assert json.loads(path.read_text())["format"] == "directed-eulerian-json"
        assert read_json(path) == g
        assert read_graph(str(path)) == g


edge_lists = st.integers(3, 8).flatmap(
    lambda n: st.tuples(
        st.just(n),
        st.lists(
            st.tuples(st.integers(0, n - 1), st.integers(0, n - 1), st.integers(1, 40)).filter(lambda e: e[0] != e[1]),
            min_size=1,
            max_size=25,
        ),
    )
)


@settings(max_examples=80, deadline=None)
@given(edge_lists)
def test_eulerian_iff_zero_difference(data):
    g = g_of(*data)
    assert is_eulerian(g) == (not np.any(degree_difference(g)))


@settings(max_examples=80, deadline=None)
@given(edge_lists)
def test_binary_decompose_preserves_laplacian(data):
    g = g_of(*data)
    h = binary_decompose(g)
    assert has_power_of_two_weights(h)
    assert np.array_equal(laplacian_directed(g), laplacian_directed(h))
    assert partition_by_weight(h).reassemble() == h


@settings(max_examples=40, deadline=None)
@given(st.integers(3, 30), st.integers(1, 40), st.integers(3, 7), st.integers(0, 3), st.integers(0, 2**31))
def test_generator_always_eulerian(n, k, max_len, exp, seed):
    assert is_eulerian(generate_random_eulerian(n, k, max_len=max_len, max_weight_exp=exp, seed=seed))
