"""
Tests for database nodes: downlink selection, read answers and writes
"""

import os
import sys

import pytest

sys.path.insert(0, os.path.join(os.path.dirname(__file__), '..'))

from client import SparseSelection, build_write_tuples
from coded_storage import StorageState, decode_read_answers, decode_storage, init_storage
from coordinator import build_config
from database_node import DatabaseNode, UpdateHistogram, WriteTuple, format_pairs, select_downlink
from exceptions import DimensionError, IndexRangeError, ProtocolError
from permutations import build_reverser_sets, permuted_to_real, sample_permutation_set


def build_nodes(params, rng):
    model = params.field.random_matrix(rng, params.P, params.ell)
    perms = sample_permutation_set(params, rng)
    reversers = build_reverser_sets(params, perms, rng)
    states = init_storage(model, params, rng)
    nodes = [
        DatabaseNode(index=n + 1, params=params, storage=state, reverser=rev)
        for n, (state, rev) in enumerate(zip(states, reversers))
    ]
    return model, perms, nodes


class TestDownlinkSelection:

    def test_first_round_bootstrap(self, case1_params):
        assert select_downlink(None, case1_params) == [(1, 1), (2, 1)]

    def test_most_common_pairs(self, case1_params):
        hist = UpdateHistogram.for_params(case1_params)
        hist.record([(3, 2), (1, 1)])
        hist.record([(3, 2), (5, 3)])
        assert hist.count((3, 2)) == 2
        assert hist.total == 4
        assert hist.users == 2
        assert select_downlink(hist, case1_params) == [(3, 2), (1, 1)]

    def test_ties_by_segment_then_subpacket(self, case1_params):
        hist = UpdateHistogram.for_params(case1_params)
        hist.record([(1, 2), (4, 1)])
        assert select_downlink(hist, case1_params) == [(4, 1), (1, 2)]

    def test_zero_downlink(self, make_config):
        params = build_config(make_config(r_prime='0')).to_params()
        assert select_downlink(None, params) == []

    def test_format_pairs(self):
        assert format_pairs([(1, 3), (2, 1)]) == "1:3 2:1"


class TestDatabaseNode:

    def test_storage_size_checked(self, case1_params, rng):
        _, _, nodes = build_nodes(case1_params, rng)
        with pytest.raises(DimensionError):
            DatabaseNode(index=1, params=case1_params,
                         storage=StorageState(symbols=[0] * 5, segment_size=5),
                         reverser=nodes[0].reverser)

    def test_read_decodes_real_subpacket(self, any_params, rng):
        model, perms, nodes = build_nodes(any_params, rng)
        for pair in [(1, 1), (any_params.segment_size, any_params.B), (2, 1)]:
            answers = [node.serve_read(1, [pair])[0] for node in nodes]
            real = permuted_to_real(pair, perms, any_params.scheme)
            assert decode_read_answers(answers, any_params) == model[any_params.global_index(*real)]

    def test_write_lands_on_real_subpackets(self, any_params, rng):
        model, perms, nodes = build_nodes(any_params, rng)
        field_ = any_params.field
        pairs = [(1, 1), (2, any_params.B), (any_params.segment_size, 1)]
        deltas = [tuple(field_.random_vector(rng, any_params.ell)) for _ in pairs]
        sel = SparseSelection(real_pairs=tuple(pairs), deltas=tuple(deltas))

        for node, tuples in zip(nodes, build_write_tuples(sel, perms, any_params, rng)):
            node.apply_write(tuples, user=1)

        expected = [list(row) for row in model]
        for pair, delta in zip(pairs, deltas):
            row = expected[any_params.global_index(*pair)]
            for k, value in enumerate(delta):
                row[k] = field_.add(row[k], value)
        assert decode_storage([node.storage for node in nodes], any_params) == expected

    def test_duplicate_pair_rejected(self, case1_params, rng):
        _, _, nodes = build_nodes(case1_params, rng)
        with pytest.raises(ProtocolError):
            nodes[0].apply_write([WriteTuple(5, 1, 1), WriteTuple(6, 1, 1)], user=1)

    def test_pair_out_of_range(self, case1_params, rng):
        _, _, nodes = build_nodes(case1_params, rng)
        with pytest.raises(IndexRangeError):
            nodes[0].apply_write([WriteTuple(5, 6, 1)], user=1)

    def test_empty_write(self, case2_params, rng):
        _, _, nodes = build_nodes(case2_params, rng)
        node = nodes[0]
        before = list(node.storage.symbols)
        node.apply_write([], user=3)
        assert node.storage.symbols == before
        assert node.histogram.users == 1
        assert node.traces[-1].uplink_symbols == 0

    def test_write_trace_and_histogram(self, case1_params, rng):
        _, _, nodes = build_nodes(case1_params, rng)
        node = nodes[1]
        node.begin_round(1)
        node.apply_write([WriteTuple(5, 2, 1), WriteTuple(6, 4, 3)], user=1)
        trace = node.traces[-1]
        # two tuples, each: the update plus one symbol per index
        assert trace.uplink_symbols == 2 * 3
        assert trace.pairs == "2:1 4:3"
        assert node.histogram.count((4, 3)) == 1

    def test_zero_query(self, case2_params, rng):
        _, _, nodes = build_nodes(case2_params, rng)
        assert nodes[0].answer_read_query((1, 1), [0] * case2_params.P) == 0

    def test_broadcaster(self, case1_params, rng):
        _, _, nodes = build_nodes(case1_params, rng)
        assert nodes[0].is_broadcaster
        nodes[0].broadcast_downlink(1, [(1, 1), (2, 1)])
        assert nodes[0].traces[-1].downlink_symbols == 2
        with pytest.raises(ProtocolError):
            nodes[1].broadcast_downlink(1, [(1, 1)])

    def test_stored_symbol_count(self, case1_params, case2_params, rng):
        _, _, nodes1 = build_nodes(case1_params, rng)
        _, _, nodes2 = build_nodes(case2_params, rng)
        assert nodes1[0].stored_symbol_count() == 90
        assert nodes2[0].stored_symbol_count() == 12 + 3 * 16 + 9

    def test_begin_round_rotates_histogram(self, case1_params, rng):
        _, _, nodes = build_nodes(case1_params, rng)
        node = nodes[0]
        node.begin_round(1)
        assert node.previous_histogram is None
        node.apply_write([WriteTuple(1, 5, 2), WriteTuple(1, 3, 3)], user=1)
        node.begin_round(2)
        assert node.previous_histogram.count((5, 2)) == 1
        assert node.histogram.total == 0
        assert node.select_downlink() == [(5, 2), (3, 3)]

    def test_trace_frame(self, case1_params, rng):
        _, _, nodes = build_nodes(case1_params, rng)
        node = nodes[0]
        node.begin_round(1)
        node.apply_write([WriteTuple(1, 1, 1)], user=1)
        node.serve_read(1, [(1, 1)])
        frame = node.trace_frame()
        assert list(frame.columns) == [
            'round', 'database', 'event', 'user', 'pairs', 'uplink_symbols', 'downlink_symbols'
        ]
        assert list(frame['event']) == ['write', 'read']
