"""
Secret permutations and the noise-added permutation-reversing matrices.

A permutation of size m is stored as a tuple perm with perm[k-1] = P(k),
values 1-indexed. Its reversing matrix M has a single 1 in column k at row
P(k), so M e_k = e_{P(k)}: a vector laid out in permuted positions comes out
in real positions.
"""

import logging
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from coded_storage import Scheme, SystemParams
from exceptions import DimensionError, IndexRangeError, ProtocolError
from finite_field import PrimeField

logger = logging.getLogger(__name__)

Permutation = Tuple[int, ...]
Matrix = List[List[int]]


def check_permutation(perm: Sequence[int]) -> Permutation:
    perm = tuple(int(v) for v in perm)
    if sorted(perm) != list(range(1, len(perm) + 1)):
        raise ProtocolError(f"Not a bijection of 1..{len(perm)}: {perm}")
    return perm


def invert_permutation(perm: Sequence[int]) -> Permutation:
    inverse = [0] * len(perm)
    for k, image in enumerate(perm, start=1):
        inverse[image - 1] = k
    return tuple(inverse)


def sample_permutation(size: int, rng: np.random.Generator) -> Permutation:
    """Uniform permutation of 1..size by Fisher-Yates on the given stream"""
    values = list(range(1, size + 1))
    for i in range(size - 1, 0, -1):
        j = int(rng.integers(0, i + 1))
        values[i], values[j] = values[j], values[i]
    return tuple(values)


@dataclass(frozen=True)
class PermutationSet:
    """User-side secret: one permutation per segment, plus the inter-segment one in case 2"""

    within: Tuple[Permutation, ...]
    inter: Optional[Permutation] = None

    def __post_init__(self):
        object.__setattr__(self, 'within', tuple(check_permutation(p) for p in self.within))
        if self.inter is not None:
            inter = check_permutation(self.inter)
            if len(inter) != len(self.within):
                raise ProtocolError(
                    f"Inter-segment permutation of size {len(inter)} for {len(self.within)} segments"
                )
            object.__setattr__(self, 'inter', inter)

    def validate_for(self, params: SystemParams):
        if len(self.within) != params.B:
            raise ProtocolError(f"Expected {params.B} within-segment permutations, got {len(self.within)}")
        if any(len(p) != params.segment_size for p in self.within):
            raise ProtocolError(f"Within-segment permutations must have size {params.segment_size}")
        if (self.inter is not None) != (params.scheme is Scheme.CASE2):
            raise ProtocolError("Inter-segment permutation is present exactly in case 2")

    def to_dict(self) -> Dict:
        return {
            'within': [list(p) for p in self.within],
            'inter': list(self.inter) if self.inter is not None else None,
        }

    @classmethod
    def from_dict(cls, data: Dict) -> 'PermutationSet':
        inter = data.get('inter')
        return cls(within=tuple(tuple(p) for p in data['within']),
                   inter=tuple(inter) if inter is not None else None)


def sample_permutation_set(params: SystemParams, rng: np.random.Generator) -> PermutationSet:
    """
    Draw the coordinator's secret permutations

    Args:
        params: System parameters (B segments of P/B subpackets)
        rng: Coordinator permutation stream

    Returns:
        PermutationSet: B within-segment permutations, and the inter-segment
        one when the scheme is case 2
    """
    within = tuple(sample_permutation(params.segment_size, rng) for _ in range(params.B))
    inter = sample_permutation(params.B, rng) if params.scheme is Scheme.CASE2 else None
    return PermutationSet(within=within, inter=inter)


def permutation_matrix(perm: Sequence[int]) -> Matrix:
    """0/1 matrix M with M e_k = e_{perm(k)}"""
    size = len(perm)
    matrix = [[0] * size for _ in range(size)]
    for k, image in enumerate(perm, start=1):
        matrix[image - 1][k - 1] = 1
    return matrix


def build_reverser(field_: PrimeField, perm: Sequence[int], alpha_n: int, ell: int,
                   noise: Sequence[Sequence[int]]) -> Matrix:
    """
    Noise-added permutation-reversing matrix M + alpha_n^ell * noise

    Args:
        field_: The prime field
        perm: Permutation being reversed
        alpha_n: Evaluation point of the database
        ell: Subpacketization
        noise: m x m noise matrix shared by all databases

    Returns:
        list: m x m matrix over GF(q)
    """
    perm = check_permutation(perm)
    size = len(perm)
    if len(noise) != size or any(len(row) != size for row in noise):
        raise DimensionError(f"Noise matrix must be {size}x{size}")
    scale = field_.pow(alpha_n, ell)
    matrix = permutation_matrix(perm)
    return [
        [(matrix[i][k] + scale * noise[i][k]) % field_.q for k in range(size)]
        for i in range(size)
    ]


@dataclass(frozen=True)
class ReverserSet:
    """Database-side provisioning: reversers for one database"""

    q: int
    within_rev: Tuple[Matrix, ...]
    inter_rev: Optional[Matrix] = None

    @property
    def segment_size(self) -> int:
        return len(self.within_rev[0]) if self.within_rev else 0

    @property
    def segment_count(self) -> int:
        return len(self.within_rev)

    def symbol_count(self) -> int:
        """Field elements held; the combined case-2 matrix is never among them"""
        count = sum(len(m) * len(m[0]) for m in self.within_rev if m)
        if self.inter_rev is not None:
            count += len(self.inter_rev) * len(self.inter_rev[0])
        return count

    def to_dict(self) -> Dict:
        return {
            'q': self.q,
            'within_rev': [[list(row) for row in m] for m in self.within_rev],
            'inter_rev': [list(row) for row in self.inter_rev] if self.inter_rev is not None else None,
        }

    @classmethod
    def from_dict(cls, data: Dict) -> 'ReverserSet':
        inter = data.get('inter_rev')
        return cls(
            q=int(data['q']),
            within_rev=tuple([[int(v) for v in row] for row in m] for m in data['within_rev']),
            inter_rev=[[int(v) for v in row] for row in inter] if inter is not None else None,
        )


def build_reverser_sets(params: SystemParams, perms: PermutationSet,
                        rng: np.random.Generator) -> List[ReverserSet]:
    """
    Reversers for every database from one shared set of noise matrices

    The noise of each reverser is drawn once and scaled by alpha_n^ell per
    database, which keeps written increments polynomial in alpha.
    """
    perms.validate_for(params)
    field_, m = params.field, params.segment_size
    within_noise = [field_.random_matrix(rng, m, m) for _ in range(params.B)]
    inter_noise = field_.random_matrix(rng, params.B, params.B) if perms.inter is not None else None

    reversers = []
    for alpha in params.alphas:
        within = tuple(
            build_reverser(field_, perm, alpha, params.ell, noise)
            for perm, noise in zip(perms.within, within_noise)
        )
        inter = None
        if perms.inter is not None:
            inter = build_reverser(field_, perms.inter, alpha, params.ell, inter_noise)
        reversers.append(ReverserSet(q=params.q, within_rev=within, inter_rev=inter))
    logger.info(f"Built reversers for {params.N} databases ({params.B} segments of {m})")
    return reversers


def real_to_permuted(real: Tuple[int, int], perms: PermutationSet,
                     scheme: Scheme) -> Tuple[int, int]:
    """
    Map a real (subpacket, segment) pair to the permuted pair sent on the wire

    Case 1 keeps the segment index; case 2 also permutes segments.
    """
    eta_r, phi_r = real
    _check_range(eta_r, phi_r, perms)
    eta_p = invert_permutation(perms.within[phi_r - 1])[eta_r - 1]
    if Scheme(scheme) is Scheme.CASE1:
        return eta_p, phi_r
    return eta_p, invert_permutation(perms.inter)[phi_r - 1]


def permuted_to_real(permuted: Tuple[int, int], perms: PermutationSet,
                     scheme: Scheme) -> Tuple[int, int]:
    """Inverse of real_to_permuted"""
    eta_p, phi_p = permuted
    _check_range(eta_p, phi_p, perms)
    phi_r = phi_p if Scheme(scheme) is Scheme.CASE1 else perms.inter[phi_p - 1]
    return perms.within[phi_r - 1][eta_p - 1], phi_r


def _check_range(subpacket: int, segment: int, perms: PermutationSet):
    if not 1 <= segment <= len(perms.within):
        raise IndexRangeError(f"Segment index {segment} outside [1, {len(perms.within)}]")
    size = len(perms.within[segment - 1])
    if not 1 <= subpacket <= size:
        raise IndexRangeError(f"Subpacket index {subpacket} outside [1, {size}]")


def _require_case2(rev: ReverserSet):
    if rev.inter_rev is None:
        raise ProtocolError("Combined reverser needs the inter-segment reverser (case 2)")


def case2_reverser_column(rev: ReverserSet, column: int) -> List[int]:
    """
    Column c of blockdiag(R^[1..B]) (R_hat kron I_m), from the stored factors

    With c = (j-1)m + i, block k of the column is R_hat[k][j] * R^[k][:, i].
    """
    _require_case2(rev)
    m, B, q = rev.segment_size, rev.segment_count, rev.q
    if not 1 <= column <= m * B:
        raise IndexRangeError(f"Column {column} outside [1, {m * B}]")
    j, i = divmod(column - 1, m)
    result = []
    for k in range(B):
        weight = rev.inter_rev[k][j]
        block = rev.within_rev[k]
        result.extend(weight * block[row][i] % q for row in range(m))
    return result


def case2_apply_reverser(rev: ReverserSet, y: Sequence[int]) -> List[int]:
    """
    blockdiag(R^[1..B]) ((R_hat kron I_m) y) in two stages

    Stage one mixes whole segments by R_hat, O(B*P); stage two applies each
    within-segment reverser to its block, O(P^2/B).
    """
    _require_case2(rev)
    m, B, q = rev.segment_size, rev.segment_count, rev.q
    if len(y) != m * B:
        raise DimensionError(f"Update vector of length {len(y)}, expected {m * B}")
    blocks = [y[j * m:(j + 1) * m] for j in range(B)]

    mixed = []
    for k in range(B):
        row = rev.inter_rev[k]
        mixed.append([
            sum(row[j] * blocks[j][t] for j in range(B)) % q for t in range(m)
        ])

    result = []
    for k in range(B):
        block = rev.within_rev[k]
        result.extend(sum(a * b for a, b in zip(block[t], mixed[k])) % q for t in range(m))
    return result
