"""
Communication and storage cost accounting.

Costs are symbols per model parameter: downloaded (reading) or uploaded
(writing) field symbols for one user, divided by L = P * ell. An index in
[1, m] travels as ceil(log_q m) symbols.
"""

import logging
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Dict, Sequence, Tuple

from coded_storage import Scheme, SystemParams
from config import ACCOUNTING_CONFIG
from database_node import TraceRecord
from exceptions import OracleViolation, ProtocolError
from finite_field import ceil_log

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class FormulaCosts:
    """Closed-form costs, with real log_q and with integer ceil(log_q)"""

    reading_real: float
    writing_real: float
    reading_ceil: Fraction
    writing_ceil: Fraction


def _log_q(value: int, q: int) -> float:
    return math.log(value) / math.log(q)


def formula_costs(params: SystemParams) -> FormulaCosts:
    """
    Reading and writing cost of one user

    C_R * L = P r' log_q P + P r' N
    C_W * L = P r N (1 + log_q B + log_q (P/B))

    Returns:
        FormulaCosts: Real-valued and ceiling variants
    """
    P, N, L, q = params.P, params.N, params.L, params.q
    down, up = params.downlink_count, params.uplink_count
    reading_real = (down * _log_q(P, q) + down * N) / L
    writing_real = up * N * (1 + _log_q(P, q)) / L
    index_up = ceil_log(params.B, q) + ceil_log(params.segment_size, q)
    return FormulaCosts(
        reading_real=reading_real,
        writing_real=writing_real,
        reading_ceil=Fraction(down * ceil_log(P, q) + down * N, L),
        writing_ceil=Fraction(up * N * (1 + index_up), L),
    )


def closed_form_costs(params: SystemParams) -> Tuple[float, float]:
    """
    The same real-valued costs written through N = k*ell + 1

    C_R = k r' (1 + log_q P / N) / (1 - 1/N),  C_W = k r (1 + log_q P) / (1 - 1/N)
    with k = 3 in case 1 and k = 5 in case 2.
    """
    k, N = params.scheme.redundancy, params.N
    log_p = _log_q(params.P, params.q)
    reading = k * float(params.r_prime) * (1 + log_p / N) / (1 - 1 / N)
    writing = k * float(params.r) * (1 + log_p) / (1 - 1 / N)
    return reading, writing


def storage_symbol_count(P: int, B: int, scheme: Scheme) -> int:
    """Per-database symbols: P coded symbols, B reversers of (P/B)^2, and B^2 in case 2"""
    count = P + B * (P // B) ** 2
    if Scheme(scheme) is Scheme.CASE2:
        count += B * B
    return count


def storage_complexity(params: SystemParams) -> Tuple[int, str]:
    count = storage_symbol_count(params.P, params.B, params.scheme)
    if params.scheme is Scheme.CASE1:
        return count, "O(L^2/(B N^2))"
    return count, "max{O(L^2/(N^2 B)), O(B^2)}"


@dataclass
class CostReport:
    """Measured and formula costs of one round, per user"""

    round: int
    users: int
    reading_cost: Fraction
    writing_cost: Fraction
    storage_symbols: int
    formula_reading: Fraction
    formula_writing: Fraction
    formula_reading_real: float = 0.0
    formula_writing_real: float = 0.0

    def to_dict(self) -> Dict:
        return {
            'round': self.round,
            'users': self.users,
            'reading_cost': str(self.reading_cost),
            'writing_cost': str(self.writing_cost),
            'storage_symbols': self.storage_symbols,
            'formula_reading': str(self.formula_reading),
            'formula_writing': str(self.formula_writing),
            'formula_reading_real': self.formula_reading_real,
            'formula_writing_real': self.formula_writing_real,
        }

    def to_row(self) -> Dict:
        """Flat CSV row, fractions also given as floats"""
        row = self.to_dict()
        row['reading_cost_float'] = float(self.reading_cost)
        row['writing_cost_float'] = float(self.writing_cost)
        return row


def measured_costs(traces: Sequence[TraceRecord], params: SystemParams,
                   storage_symbols: int = 0) -> CostReport:
    """
    Count the symbols exchanged in one round's traces

    Args:
        traces: Every database's records for a single round
        params: System parameters
        storage_symbols: Counted per-database storage, carried into the report

    Returns:
        CostReport: Totals divided by the number of users and by L

    Raises:
        ProtocolError: Records from several rounds, or a user missing a write,
            a read or the index broadcast
    """
    rounds = {t.round for t in traces}
    if len(rounds) > 1:
        raise ProtocolError(f"Traces span several rounds: {sorted(rounds)}")
    users = sorted({t.user for t in traces})
    if not users:
        raise ProtocolError("No traces to account")

    for user in users:
        events = [t.event for t in traces if t.user == user]
        expected = {'write': params.N, 'read': params.N, 'downlink': 1}
        for event, count in expected.items():
            if events.count(event) != count:
                raise ProtocolError(
                    f"Incomplete trace for user {user}: {events.count(event)} '{event}' records, expected {count}"
                )

    downloaded = sum(t.downlink_symbols for t in traces)
    uploaded = sum(t.uplink_symbols for t in traces)
    formula = formula_costs(params)
    return CostReport(
        round=rounds.pop(),
        users=len(users),
        reading_cost=Fraction(downloaded, len(users) * params.L),
        writing_cost=Fraction(uploaded, len(users) * params.L),
        storage_symbols=storage_symbols,
        formula_reading=formula.reading_ceil,
        formula_writing=formula.writing_ceil,
        formula_reading_real=formula.reading_real,
        formula_writing_real=formula.writing_real,
    )


def real_formula_gap(params: SystemParams) -> Tuple[float, float]:
    """Ceiling-variant minus real-valued cost, for reading and for writing"""
    formula = formula_costs(params)
    return (float(formula.reading_ceil) - formula.reading_real,
            float(formula.writing_ceil) - formula.writing_real)


def reconcile_costs(report: CostReport, params: SystemParams):
    """
    Check measured costs against the formulas

    Measured must equal the ceiling variant exactly, and the real-valued
    formula may trail it by at most P r' / L (reading) and 2 P r N / L (writing).

    Raises:
        OracleViolation: On any mismatch
    """
    if report.reading_cost != report.formula_reading:
        raise OracleViolation(
            f"Round {report.round}: measured reading cost {report.reading_cost} "
            f"!= formula {report.formula_reading}"
        )
    if report.writing_cost != report.formula_writing:
        raise OracleViolation(
            f"Round {report.round}: measured writing cost {report.writing_cost} "
            f"!= formula {report.formula_writing}"
        )
    expected = storage_symbol_count(params.P, params.B, params.scheme)
    if report.storage_symbols and report.storage_symbols != expected:
        raise OracleViolation(
            f"Round {report.round}: {report.storage_symbols} stored symbols, expected {expected}"
        )

    tolerance = ACCOUNTING_CONFIG['gap_tolerance']
    read_gap, write_gap = real_formula_gap(params)
    read_bound = params.downlink_count / params.L
    write_bound = 2 * params.uplink_count * params.N / params.L
    if not -tolerance <= read_gap <= read_bound + tolerance:
        raise OracleViolation(f"Reading cost gap {read_gap} outside [0, {read_bound}]")
    if not -tolerance <= write_gap <= write_bound + tolerance:
        raise OracleViolation(f"Writing cost gap {write_gap} outside [0, {write_bound}]")
    logger.debug(f"Round {report.round}: costs reconciled")
