"""
Noisy MDS coded storage of model subpackets.

Each database n stores, for every subpacket s, the single symbol

    S_n[s] = sum_{i=1..ell} alpha_n^{-i} W_i[s] + sum_{i=0..x} alpha_n^i Z_{s,i}

with x = ell (case 1) or x = 2*ell (case 2). The noise coefficients Z are
shared across databases, so the N symbols of one subpacket are evaluations
of one Laurent polynomial in alpha.
"""

import logging
import struct
from dataclasses import dataclass, field as dataclass_field
from enum import Enum
from fractions import Fraction
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from config import FIELD_CONFIG
from exceptions import (
    ConfigurationError,
    DegreeStructureError,
    DimensionError,
    IndexRangeError,
    UnderdeterminedError,
)
from finite_field import (
    EvaluationPoints,
    PrimeField,
    evaluate_power_series,
    solve_consistent,
    solve_power_system,
)

logger = logging.getLogger(__name__)


class Scheme(Enum):
    CASE1 = "case1"  # within-segment permutations
    CASE2 = "case2"  # within- and inter-segment permutations

    @property
    def redundancy(self) -> int:
        """N = redundancy * ell + 1"""
        return 3 if self is Scheme.CASE1 else 5

    @property
    def case_number(self) -> int:
        return 1 if self is Scheme.CASE1 else 2

    @classmethod
    def from_case_number(cls, number: int) -> 'Scheme':
        try:
            return {1: cls.CASE1, 2: cls.CASE2}[int(number)]
        except (KeyError, ValueError):
            raise ConfigurationError(f"Unknown scheme case: {number} (expected 1 or 2)")


def subpacketization(N: int, scheme: Scheme) -> int:
    """
    Subpacket size ell fixed by the number of databases

    Args:
        N: Number of databases
        scheme: Case 1 (N = 3*ell + 1) or case 2 (N = 5*ell + 1)

    Returns:
        int: ell

    Raises:
        ConfigurationError: If N does not satisfy the scheme's congruence
    """
    scheme = Scheme(scheme)
    k = scheme.redundancy
    if N < 4:
        raise ConfigurationError(f"Need at least N=4 databases, got N={N}")
    if (N - 1) % k != 0:
        raise ConfigurationError(
            f"Case {scheme.case_number} requires N = {k}*ell + 1 (N ≡ 1 mod {k}), got N={N}"
        )
    return (N - 1) // k


def _as_fraction(value, name: str) -> Fraction:
    try:
        return Fraction(str(value)) if not isinstance(value, Fraction) else value
    except (ValueError, ZeroDivisionError):
        raise ConfigurationError(f"{name} must be a rational number, got {value!r}")


@dataclass(frozen=True)
class SystemParams:
    """Global parameters shared by the coordinator, databases and users"""

    N: int
    P: int
    B: int
    scheme: Scheme = Scheme.CASE1
    r: Fraction = Fraction(0)
    r_prime: Fraction = Fraction(0)
    q: int = FIELD_CONFIG['default_modulus']
    alphas: tuple = ()
    field: PrimeField = dataclass_field(init=False, repr=False, compare=False)
    points: EvaluationPoints = dataclass_field(init=False, repr=False, compare=False)

    def __post_init__(self):
        set_ = object.__setattr__
        try:
            set_(self, 'scheme', Scheme(self.scheme))
        except ValueError:
            raise ConfigurationError(f"Unknown scheme: {self.scheme!r}")
        set_(self, 'r', _as_fraction(self.r, 'r'))
        set_(self, 'r_prime', _as_fraction(self.r_prime, 'r_prime'))

        subpacketization(self.N, self.scheme)
        if self.P < 1 or self.B < 1:
            raise ConfigurationError(f"P and B must be positive, got P={self.P}, B={self.B}")
        if self.P % self.B != 0:
            raise ConfigurationError(f"B must divide P, got P={self.P}, B={self.B}")
        for name, rate in (('r', self.r), ('r_prime', self.r_prime)):
            if not 0 <= rate <= 1:
                raise ConfigurationError(f"{name} must lie in [0, 1], got {rate}")
            if (self.P * rate).denominator != 1:
                raise ConfigurationError(
                    f"P*{name} must be an integer, got P={self.P}, {name}={rate}"
                )

        max_q = FIELD_CONFIG['max_modulus']
        if self.q > max_q:
            raise ConfigurationError(
                f"Field modulus q={self.q} exceeds max_modulus={max_q} (2^63 - 1)"
            )
        field_ = PrimeField(self.q)
        if self.alphas:
            points = EvaluationPoints(field_, tuple(self.alphas))
        else:
            points = EvaluationPoints.default(field_, self.N)
        if len(points) != self.N:
            raise ConfigurationError(f"Need {self.N} evaluation points, got {len(points)}")
        set_(self, 'alphas', points.alphas)
        set_(self, 'field', field_)
        set_(self, 'points', points)

    @property
    def ell(self) -> int:
        return subpacketization(self.N, self.scheme)

    @property
    def L(self) -> int:
        return self.P * self.ell

    @property
    def segment_size(self) -> int:
        """P/B subpackets per segment"""
        return self.P // self.B

    @property
    def noise_degree(self) -> int:
        """x in the storage polynomial"""
        return self.ell if self.scheme is Scheme.CASE1 else 2 * self.ell

    @property
    def read_degree(self) -> int:
        """Highest noise exponent in a read answer"""
        return 2 * self.ell if self.scheme is Scheme.CASE1 else 4 * self.ell

    @property
    def uplink_count(self) -> int:
        """P*r sparse subpackets written per user"""
        return int(self.P * self.r)

    @property
    def downlink_count(self) -> int:
        """P*r' sparse subpackets read per user"""
        return int(self.P * self.r_prime)

    def global_index(self, subpacket: int, segment: int) -> int:
        """Zero-based position of 1-indexed (subpacket, segment)"""
        self.check_pair(subpacket, segment)
        return (segment - 1) * self.segment_size + (subpacket - 1)

    def pair_of(self, index: int) -> Tuple[int, int]:
        """Inverse of global_index"""
        if not 0 <= index < self.P:
            raise IndexRangeError(f"Subpacket position {index} outside [0, {self.P})")
        return index % self.segment_size + 1, index // self.segment_size + 1

    def check_pair(self, subpacket: int, segment: int):
        if not 1 <= subpacket <= self.segment_size:
            raise IndexRangeError(
                f"Subpacket index {subpacket} outside [1, {self.segment_size}]"
            )
        if not 1 <= segment <= self.B:
            raise IndexRangeError(f"Segment index {segment} outside [1, {self.B}]")

    def to_dict(self) -> Dict:
        return {
            'scheme': self.scheme.value,
            'N': self.N,
            'P': self.P,
            'B': self.B,
            'ell': self.ell,
            'L': self.L,
            'q': self.q,
            'r': str(self.r),
            'r_prime': str(self.r_prime),
            'alphas': list(self.alphas),
        }


def mds_share(field_: PrimeField, values: Sequence[int], alpha_n: int) -> int:
    """sum_{i=1..len} alpha_n^{-i} values[i-1]"""
    inv_alpha = field_.inv(alpha_n)
    power = inv_alpha
    total = 0
    for value in values:
        total = (total + value * power) % field_.q
        power = power * inv_alpha % field_.q
    return total


def encode_subpacket(field_: PrimeField, plain: Sequence[int], noise: Sequence[int],
                     alpha_n: int, x: int) -> int:
    """
    Coded symbol of one subpacket at one database

    Args:
        field_: The prime field
        plain: W_1..W_ell of the subpacket
        noise: Z_0..Z_x
        alpha_n: Evaluation point of the database (nonzero)
        x: Noise polynomial degree

    Returns:
        int: S_n for this subpacket
    """
    if len(noise) != x + 1:
        raise DimensionError(f"Noise must have x+1={x + 1} symbols, got {len(noise)}")
    return field_.add(
        mds_share(field_, plain, alpha_n),
        evaluate_power_series(field_, noise, alpha_n, 0),
    )


@dataclass
class StorageState:
    """The P coded symbols held by one database, grouped in segments"""

    symbols: List[int]
    segment_size: int

    def __post_init__(self):
        if self.segment_size < 1 or len(self.symbols) % self.segment_size:
            raise DimensionError(
                f"{len(self.symbols)} symbols do not split into segments of {self.segment_size}"
            )

    @property
    def segment_count(self) -> int:
        return len(self.symbols) // self.segment_size

    def segment(self, j: int) -> List[int]:
        """Storage vector S_{n,j} of 1-indexed segment j"""
        if not 1 <= j <= self.segment_count:
            raise IndexRangeError(f"Segment index {j} outside [1, {self.segment_count}]")
        start = (j - 1) * self.segment_size
        return self.symbols[start:start + self.segment_size]

    def add_to_segment(self, field_: PrimeField, j: int, increment: Sequence[int]):
        if len(increment) != self.segment_size:
            raise DimensionError(
                f"Segment increment of length {len(increment)}, expected {self.segment_size}"
            )
        start = (j - 1) * self.segment_size
        for offset, value in enumerate(increment):
            self.symbols[start + offset] = (self.symbols[start + offset] + value) % field_.q

    def add_vector(self, field_: PrimeField, increment: Sequence[int]):
        if len(increment) != len(self.symbols):
            raise DimensionError(
                f"Storage increment of length {len(increment)}, expected {len(self.symbols)}"
            )
        self.symbols = field_.add_vectors(self.symbols, increment)

    def to_dict(self) -> Dict:
        return {'segment_size': self.segment_size, 'symbols': list(self.symbols)}

    @classmethod
    def from_dict(cls, data: Dict) -> 'StorageState':
        return cls(symbols=[int(s) for s in data['symbols']], segment_size=int(data['segment_size']))


def init_storage(model: Sequence[Sequence[int]], params: SystemParams,
                 rng: np.random.Generator) -> List[StorageState]:
    """
    Encode a plaintext model into the N initial database states

    Args:
        model: P subpackets of ell field elements each
        params: System parameters
        rng: Coordinator storage stream

    Returns:
        list: One StorageState per database
    """
    if len(model) != params.P:
        raise DimensionError(f"Model has {len(model)} subpackets, expected P={params.P}")
    field_, x = params.field, params.noise_degree
    columns = [[] for _ in range(params.N)]
    for s, plain in enumerate(model):
        if len(plain) != params.ell:
            raise DimensionError(
                f"Subpacket {s + 1} has {len(plain)} parameters, expected ell={params.ell}"
            )
        noise = field_.random_vector(rng, x + 1)
        for n, alpha in enumerate(params.alphas):
            columns[n].append(encode_subpacket(field_, plain, noise, alpha, x))
    logger.info(f"Encoded {params.P} subpackets into {params.N} databases (x={x})")
    return [StorageState(symbols=col, segment_size=params.segment_size) for col in columns]


def decode_read_answers(answers: Sequence[int], params: SystemParams) -> List[int]:
    """
    Recover W_1..W_ell of one subpacket from the N read answers

    Args:
        answers: One answer per database, in database order
        params: System parameters

    Returns:
        list: The ell plaintext parameters

    Raises:
        UnderdeterminedError: Fewer than N answers
    """
    if len(answers) < params.N:
        raise UnderdeterminedError(
            f"Decoding needs all N={params.N} answers, got {len(answers)}"
        )
    ell = params.ell
    coefficients = solve_power_system(
        params.field, answers, params.points, -ell, params.read_degree
    )
    # c_{-ell}..c_{-1} hold W_ell..W_1; the rest is noise
    return list(reversed(coefficients[:ell]))


def decode_storage(states: Sequence[StorageState], params: SystemParams) -> List[List[int]]:
    """
    Decode every stored subpacket directly from the databases' symbols

    Solves with the first ell + x + 1 databases and checks the others lie on
    the same polynomial, so a symbol that drifted out of the expected form is
    reported instead of silently decoded.

    Raises:
        DegreeStructureError: Symbols of some subpacket leave the range [-ell, x]
    """
    ell, x = params.ell, params.noise_degree
    model = []
    for s in range(params.P):
        column = [state.symbols[s] for state in states]
        coefficients = solve_consistent(params.field, column, params.points, -ell, x)
        if coefficients is None:
            raise DegreeStructureError(
                f"Subpacket {s + 1}: stored symbols are not of degree range [-{ell}, {x}]"
            )
        model.append(list(reversed(coefficients[:ell])))
    return model


def snapshot_bytes(states: Sequence[StorageState], q: int) -> bytes:
    """Binary snapshot: q, N, P, then N*P little-endian residues"""
    width = FIELD_CONFIG['residue_bytes']
    P = len(states[0].symbols) if states else 0
    out = bytearray(struct.pack('<QQQ', q, len(states), P))
    for state in states:
        for symbol in state.symbols:
            out += int(symbol).to_bytes(width, 'little')
    return bytes(out)


def from_snapshot_bytes(data: bytes, segment_size: Optional[int] = None) -> Tuple[int, List[StorageState]]:
    """Inverse of snapshot_bytes"""
    width = FIELD_CONFIG['residue_bytes']
    q, N, P = struct.unpack_from('<QQQ', data, 0)
    expected = 24 + N * P * width
    if len(data) != expected:
        raise DimensionError(f"Snapshot has {len(data)} bytes, expected {expected}")
    states = []
    offset = 24
    for _ in range(N):
        symbols = []
        for _ in range(P):
            symbols.append(int.from_bytes(data[offset:offset + width], 'little'))
            offset += width
        states.append(StorageState(symbols=symbols, segment_size=segment_size or P))
    return q, states
