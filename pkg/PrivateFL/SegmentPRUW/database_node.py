"""
One simulated database: coded storage, reversers, downlink selection,
read answers and permuted writes.

Databases only ever see permuted (subpacket, segment) pairs. Every node
receives the same index stream, so all of them derive the same downlink set
from their own histogram without talking to each other.
"""

import logging
from dataclasses import asdict, dataclass, field as dataclass_field
from typing import Dict, List, Optional, Sequence, Tuple

import pandas as pd

from coded_storage import Scheme, StorageState, SystemParams
from exceptions import DimensionError, ProtocolError
from finite_field import ceil_log
from permutations import ReverserSet, case2_apply_reverser, case2_reverser_column

logger = logging.getLogger(__name__)

Pair = Tuple[int, int]


@dataclass(frozen=True)
class WriteTuple:
    """(U_n, permuted subpacket, permuted segment) as received by one database"""

    combined_update: int
    permuted_subpacket: int
    permuted_segment: int

    @property
    def pair(self) -> Pair:
        return self.permuted_subpacket, self.permuted_segment


class UpdateHistogram:
    """Write counts per permuted (subpacket, segment), accumulated over one round"""

    def __init__(self, segment_size: int, segments: int):
        self.segment_size = segment_size
        self.segments = segments
        self.counts = [[0] * segments for _ in range(segment_size)]
        self.users = 0

    @classmethod
    def for_params(cls, params: SystemParams) -> 'UpdateHistogram':
        return cls(params.segment_size, params.B)

    def record(self, pairs: Sequence[Pair]):
        """Count one user's written pairs"""
        for subpacket, segment in pairs:
            self.counts[subpacket - 1][segment - 1] += 1
        self.users += 1

    def count(self, pair: Pair) -> int:
        return self.counts[pair[0] - 1][pair[1] - 1]

    @property
    def total(self) -> int:
        return sum(sum(row) for row in self.counts)

    def ranked_pairs(self) -> List[Pair]:
        """Pairs by count descending, ties by (segment, subpacket) ascending"""
        pairs = [
            (subpacket, segment)
            for segment in range(1, self.segments + 1)
            for subpacket in range(1, self.segment_size + 1)
        ]
        return sorted(pairs, key=lambda p: (-self.count(p), p[1], p[0]))


def select_downlink(hist: Optional[UpdateHistogram], params: SystemParams) -> List[Pair]:
    """
    The P*r' most commonly updated permuted pairs of the previous round

    Args:
        hist: Histogram of the previous round, or None in round 1
        params: System parameters

    Returns:
        list: Permuted (subpacket, segment) pairs, most frequent first. Without
        a histogram the first P*r' pairs in (segment, subpacket) order.
    """
    if hist is None:
        hist = UpdateHistogram.for_params(params)
    return hist.ranked_pairs()[:params.downlink_count]


@dataclass
class TraceRecord:
    """One communication event seen by a database"""

    round: int
    database: int
    event: str  # write | downlink | read
    user: int
    pairs: str
    uplink_symbols: int = 0
    downlink_symbols: int = 0


def format_pairs(pairs: Sequence[Pair]) -> str:
    return ' '.join(f"{sub}:{seg}" for sub, seg in pairs)


@dataclass
class DatabaseNode:
    """State owner for database n (1-indexed)"""

    index: int
    params: SystemParams
    storage: StorageState
    reverser: ReverserSet
    round: int = 0
    histogram: Optional[UpdateHistogram] = None
    previous_histogram: Optional[UpdateHistogram] = None
    traces: List[TraceRecord] = dataclass_field(default_factory=list)

    def __post_init__(self):
        if self.histogram is None:
            self.histogram = UpdateHistogram.for_params(self.params)
        if len(self.storage.symbols) != self.params.P:
            raise DimensionError(
                f"Database {self.index} holds {len(self.storage.symbols)} symbols, expected P={self.params.P}"
            )

    @property
    def alpha(self) -> int:
        return self.params.alphas[self.index - 1]

    @property
    def is_broadcaster(self) -> bool:
        """Database 1 announces the downlink indices"""
        return self.index == 1

    def begin_round(self, round_number: int):
        self.round = round_number
        self.previous_histogram = self.histogram if round_number > 1 else None
        self.histogram = UpdateHistogram.for_params(self.params)

    def select_downlink(self) -> List[Pair]:
        return select_downlink(self.previous_histogram, self.params)

    def broadcast_downlink(self, user: int, pairs: Sequence[Pair]):
        """Record the index broadcast to one user (designated database only)"""
        if not self.is_broadcaster:
            raise ProtocolError(f"Database {self.index} is not the downlink broadcaster")
        cost = len(pairs) * ceil_log(self.params.P, self.params.q)
        self._trace('downlink', user, pairs, downlink_symbols=cost)

    def build_read_query(self, permuted: Pair) -> List[int]:
        """
        Query vector for a permuted pair, never leaving this database

        Case 1: column eta_p of R^[phi_p]. Case 2: column (phi_p-1)*P/B + eta_p
        of the combined reverser, assembled from its stored factors.
        """
        eta_p, phi_p = permuted
        self.params.check_pair(eta_p, phi_p)
        if self.params.scheme is Scheme.CASE1:
            block = self.reverser.within_rev[phi_p - 1]
            return [row[eta_p - 1] for row in block]
        column = (phi_p - 1) * self.params.segment_size + eta_p
        return case2_reverser_column(self.reverser, column)

    def answer_read_query(self, permuted: Pair, query: Sequence[int]) -> int:
        """Inner product of the segment (case 1) or full (case 2) storage with the query"""
        field_ = self.params.field
        if self.params.scheme is Scheme.CASE1:
            return field_.dot(self.storage.segment(permuted[1]), query)
        return field_.dot(self.storage.symbols, query)

    def serve_read(self, user: int, pairs: Sequence[Pair]) -> List[int]:
        """Answer one user's read of the broadcast pairs"""
        answers = [self.answer_read_query(pair, self.build_read_query(pair)) for pair in pairs]
        self._trace('read', user, pairs, downlink_symbols=len(answers))
        return answers

    def segment_update_vectors(self, tuples: Sequence[WriteTuple]) -> Dict[int, List[int]]:
        """Case 1: permuted update vector Y^[j] for every segment a tuple targets"""
        q, m = self.params.q, self.params.segment_size
        vectors: Dict[int, List[int]] = {}
        for t in tuples:
            y = vectors.setdefault(t.permuted_segment, [0] * m)
            y[t.permuted_subpacket - 1] = t.combined_update % q
        return vectors

    def full_update_vector(self, tuples: Sequence[WriteTuple]) -> List[int]:
        """Case 2: permuted update vector of length P, segment-major"""
        q, m = self.params.q, self.params.segment_size
        y = [0] * self.params.P
        for t in tuples:
            y[(t.permuted_segment - 1) * m + t.permuted_subpacket - 1] = t.combined_update % q
        return y

    def apply_write(self, tuples: Sequence[WriteTuple], user: int = 0):
        """
        Un-permute one user's tuples with the noisy reversers and add them to storage

        Args:
            tuples: The user's P*r write tuples for this database
            user: User id for the trace

        Raises:
            ProtocolError: Two tuples of one user target the same permuted pair
        """
        params = self.params
        pairs = [t.pair for t in tuples]
        for pair in pairs:
            params.check_pair(*pair)
        if len(set(pairs)) != len(pairs):
            raise ProtocolError(f"Database {self.index}: duplicate permuted pair in user {user}'s write")

        uplink = len(tuples) * (1 + ceil_log(params.segment_size, params.q) + ceil_log(params.B, params.q))
        self._trace('write', user, pairs, uplink_symbols=uplink)
        self.histogram.record(pairs)
        if not tuples:
            return

        field_ = params.field
        if params.scheme is Scheme.CASE1:
            for segment, y in sorted(self.segment_update_vectors(tuples).items()):
                increment = field_.matvec(self.reverser.within_rev[segment - 1], y)
                self.storage.add_to_segment(field_, segment, increment)
        else:
            y = self.full_update_vector(tuples)
            self.storage.add_vector(field_, case2_apply_reverser(self.reverser, y))
        logger.debug(f"Database {self.index} applied {len(tuples)} tuples from user {user}")

    def stored_symbol_count(self) -> int:
        """Coded symbols plus reverser entries held by this database"""
        return len(self.storage.symbols) + self.reverser.symbol_count()

    def _trace(self, event: str, user: int, pairs: Sequence[Pair], **symbols):
        self.traces.append(TraceRecord(
            round=self.round, database=self.index, event=event, user=user,
            pairs=format_pairs(pairs), **symbols,
        ))

    def trace_frame(self) -> pd.DataFrame:
        columns = list(TraceRecord.__dataclass_fields__)
        return pd.DataFrame([asdict(t) for t in self.traces], columns=columns)

    def write_trace_csv(self, path: str):
        self.trace_frame().to_csv(path, index=False)
        logger.info(f"Trace for database {self.index} written to {path}")
