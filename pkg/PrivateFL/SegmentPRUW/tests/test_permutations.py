"""
Tests for permutations, index mappings and reversing matrices
"""

import os
import sys
from collections import Counter

import numpy as np
import pytest
from scipy.stats import chisquare

sys.path.insert(0, os.path.join(os.path.dirname(__file__), '..'))

from coded_storage import Scheme
from exceptions import DimensionError, IndexRangeError, ProtocolError
from finite_field import PrimeField
from permutations import (
    PermutationSet,
    ReverserSet,
    build_reverser,
    build_reverser_sets,
    case2_apply_reverser,
    case2_reverser_column,
    check_permutation,
    invert_permutation,
    permutation_matrix,
    permuted_to_real,
    real_to_permuted,
    sample_permutation,
    sample_permutation_set,
)


def dense_case2_reverser(rev):
    """blockdiag(R^[k]) (R_hat kron I_m), built entry by entry"""
    m, B, q = rev.segment_size, rev.segment_count, rev.q
    size = m * B
    blockdiag = [[0] * size for _ in range(size)]
    for k, block in enumerate(rev.within_rev):
        for a in range(m):
            for b in range(m):
                blockdiag[k * m + a][k * m + b] = block[a][b]
    kron = [[0] * size for _ in range(size)]
    for k in range(B):
        for j in range(B):
            for t in range(m):
                kron[k * m + t][j * m + t] = rev.inter_rev[k][j]
    return [
        [sum(blockdiag[row][t] * kron[t][col] for t in range(size)) % q for col in range(size)]
        for row in range(size)
    ]


class TestPermutationBasics:

    def test_sample_is_bijection(self, rng):
        for size in (1, 2, 5, 9):
            assert sorted(sample_permutation(size, rng)) == list(range(1, size + 1))

    def test_sampling_is_deterministic(self):
        first = sample_permutation(8, np.random.default_rng(3))
        second = sample_permutation(8, np.random.default_rng(3))
        assert first == second

    def test_sampling_is_uniform(self):
        rng = np.random.default_rng(11)
        draws = Counter(sample_permutation(3, rng) for _ in range(6000))
        assert len(draws) == 6
        _, p_value = chisquare(list(draws.values()))
        assert p_value > 1e-4

    def test_inverse(self):
        perm = (2, 1, 4, 5, 3)
        inverse = invert_permutation(perm)
        assert inverse == (2, 1, 5, 3, 4)
        assert all(perm[inverse[k] - 1] == k + 1 for k in range(5))

    def test_not_a_bijection(self):
        with pytest.raises(ProtocolError):
            check_permutation((1, 1, 3))
        with pytest.raises(ProtocolError):
            check_permutation((0, 1, 2))


class TestMatrices:

    def test_matrix_orientation(self):
        perm = (3, 1, 2)
        matrix = permutation_matrix(perm)
        for k, image in enumerate(perm, start=1):
            column = [matrix[row][k - 1] for row in range(3)]
            assert column == [1 if row + 1 == image else 0 for row in range(3)]

    def test_reverser_places_permuted_entries(self):
        field_ = PrimeField(257)
        perm = (2, 1, 4, 5, 3)
        reverser = build_reverser(field_, perm, 1, 0, [[0] * 5 for _ in range(5)])
        # value at permuted position k lands at real position perm(k)
        y = [10, 20, 30, 40, 50]
        out = field_.matvec(reverser, y)
        assert out == [20, 10, 50, 30, 40]

    def test_reverser_noise_scaling(self):
        field_ = PrimeField(257)
        noise = [[1, 2], [3, 4]]
        reverser = build_reverser(field_, (2, 1), 3, 2, noise)
        assert reverser == [[9, 1 + 18], [1 + 27, 36]]

    def test_noise_shape_checked(self):
        with pytest.raises(DimensionError):
            build_reverser(PrimeField(257), (1, 2), 1, 1, [[0, 0]])

    def test_shared_noise_across_databases(self, case2_params, rng):
        perms = sample_permutation_set(case2_params, rng)
        reversers = build_reverser_sets(case2_params, perms, rng)
        field_ = case2_params.field
        ell = case2_params.ell
        bare = permutation_matrix(perms.within[0])
        recovered = []
        for alpha, rev in zip(case2_params.alphas, reversers):
            unscale = field_.pow(alpha, -ell)
            recovered.append([
                [field_.mul(field_.sub(v, b), unscale) for v, b in zip(row, bare_row)]
                for row, bare_row in zip(rev.within_rev[0], bare)
            ])
        assert all(noise == recovered[0] for noise in recovered)


class TestIndexMappings:

    def setup_method(self):
        self.case1 = PermutationSet(within=((2, 1, 4, 5, 3), (3, 5, 2, 4, 1), (5, 2, 3, 1, 4)))
        self.case2 = PermutationSet(within=((2, 4, 3, 1), (1, 3, 2, 4), (3, 1, 4, 2)), inter=(2, 3, 1))

    def test_case1_keeps_segment(self):
        assert real_to_permuted((2, 1), self.case1, Scheme.CASE1) == (1, 1)
        assert real_to_permuted((5, 3), self.case1, Scheme.CASE1) == (1, 3)

    def test_case2_permutes_segment(self):
        assert real_to_permuted((2, 1), self.case2, Scheme.CASE2) == (1, 3)
        assert real_to_permuted((3, 3), self.case2, Scheme.CASE2) == (1, 2)

    @pytest.mark.parametrize('scheme', [Scheme.CASE1, Scheme.CASE2])
    def test_round_trip(self, scheme):
        perms = self.case1 if scheme is Scheme.CASE1 else self.case2
        size, segments = len(perms.within[0]), len(perms.within)
        seen = set()
        for phi in range(1, segments + 1):
            for eta in range(1, size + 1):
                permuted = real_to_permuted((eta, phi), perms, scheme)
                assert permuted_to_real(permuted, perms, scheme) == (eta, phi)
                seen.add(permuted)
        assert len(seen) == size * segments

    def test_out_of_range(self):
        with pytest.raises(IndexRangeError):
            real_to_permuted((6, 1), self.case1, Scheme.CASE1)
        with pytest.raises(IndexRangeError):
            permuted_to_real((1, 4), self.case2, Scheme.CASE2)


class TestPermutationSet:

    def test_validation(self, case1_params, case2_params, rng):
        perms = sample_permutation_set(case1_params, rng)
        perms.validate_for(case1_params)
        assert perms.inter is None
        with pytest.raises(ProtocolError):
            perms.validate_for(case2_params)

        perms2 = sample_permutation_set(case2_params, rng)
        perms2.validate_for(case2_params)
        assert len(perms2.inter) == case2_params.B

    def test_inter_size_mismatch(self):
        with pytest.raises(ProtocolError):
            PermutationSet(within=((1, 2), (2, 1)), inter=(1, 2, 3))

    def test_dict_round_trip(self, case2_params, rng):
        perms = sample_permutation_set(case2_params, rng)
        assert PermutationSet.from_dict(perms.to_dict()) == perms


class TestCase2Reverser:

    def setup_method(self):
        rng = np.random.default_rng(5)
        field_ = PrimeField(257)
        within = tuple(
            build_reverser(field_, sample_permutation(4, rng), 2, 1, field_.random_matrix(rng, 4, 4))
            for _ in range(3)
        )
        inter = build_reverser(field_, (2, 3, 1), 2, 1, field_.random_matrix(rng, 3, 3))
        self.rev = ReverserSet(q=257, within_rev=within, inter_rev=inter)
        self.dense = dense_case2_reverser(self.rev)
        self.field = field_

    def test_columns_match_dense(self):
        for column in range(1, 13):
            expected = [row[column - 1] for row in self.dense]
            assert case2_reverser_column(self.rev, column) == expected

    def test_apply_matches_dense(self):
        y = [7, 0, 3, 250, 1, 0, 0, 9, 11, 4, 0, 2]
        assert case2_apply_reverser(self.rev, y) == self.field.matvec(self.dense, y)

    def test_requires_inter_reverser(self):
        rev = ReverserSet(q=257, within_rev=self.rev.within_rev)
        with pytest.raises(ProtocolError):
            case2_reverser_column(rev, 1)
        with pytest.raises(ProtocolError):
            case2_apply_reverser(rev, [0] * 12)

    def test_bounds(self):
        with pytest.raises(IndexRangeError):
            case2_reverser_column(self.rev, 13)
        with pytest.raises(DimensionError):
            case2_apply_reverser(self.rev, [0] * 11)


class TestReverserSet:

    def test_symbol_counts(self, case1_params, case2_params, rng):
        case1 = build_reverser_sets(case1_params, sample_permutation_set(case1_params, rng), rng)
        case2 = build_reverser_sets(case2_params, sample_permutation_set(case2_params, rng), rng)
        assert len(case1) == case1_params.N
        assert case1[0].symbol_count() == 75
        assert case2[0].symbol_count() == 3 * 16 + 9

    def test_dict_round_trip(self, case2_params, rng):
        reversers = build_reverser_sets(case2_params, sample_permutation_set(case2_params, rng), rng)
        assert ReverserSet.from_dict(reversers[2].to_dict()) == reversers[2]
