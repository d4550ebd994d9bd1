"""
Index-information leakage of segmented sparse writes.

A database that sees a user's permuted write indices learns how many of the
P*r updated subpackets fall in each segment (case 1), or only the multiset
of those counts (case 2). With every P*r subset equally likely, the count
vector is multivariate hypergeometric. Probabilities are exact Fractions;
entropies are in bits.
"""

import itertools
import logging
import math
from collections import Counter
from dataclasses import asdict, dataclass
from fractions import Fraction
from typing import Dict, Iterator, List, Optional, Sequence, Tuple

import pandas as pd

from accounting import storage_symbol_count
from coded_storage import Scheme
from config import LEAKAGE_CONFIG
from exceptions import ConfigurationError

logger = logging.getLogger(__name__)

CountVector = Tuple[int, ...]


def _check(P: int, B: int, Pr: int):
    if P < 1 or B < 1 or P % B:
        raise ConfigurationError(f"B must be a positive divisor of P, got P={P}, B={B}")
    if not 0 <= Pr <= P:
        raise ConfigurationError(f"Pr must lie in [0, P], got Pr={Pr}, P={P}")


def _compositions(total: int, parts: int, cap: int) -> Iterator[CountVector]:
    """All (x_1..x_parts) with 0 <= x_i <= cap summing to total"""
    if parts == 1:
        if total <= cap:
            yield (total,)
        return
    for first in range(min(cap, total) + 1):
        rest = total - first
        if rest <= (parts - 1) * cap:
            for tail in _compositions(rest, parts - 1, cap):
                yield (first,) + tail


def pmf_hat(P: int, B: int, Pr: int) -> Dict[CountVector, Fraction]:
    """
    Distribution of the per-segment counts of a uniform Pr-subset

    Pr[X = x] = prod_i C(P/B, x_i) / C(P, Pr)

    Args:
        P: Number of subpackets
        B: Number of segments (divides P)
        Pr: Number of updated subpackets

    Returns:
        dict: Count vector to exact probability, zero-probability vectors omitted
    """
    _check(P, B, Pr)
    m, total = P // B, math.comb(P, Pr)
    return {
        x: Fraction(math.prod(math.comb(m, xi) for xi in x), total)
        for x in _compositions(Pr, B, m)
    }


def sorted_pmf(pmf: Dict[CountVector, Fraction]) -> Dict[CountVector, Fraction]:
    """Push a count-vector pmf forward under descending sort"""
    out: Dict[CountVector, Fraction] = {}
    for x, p in pmf.items():
        key = tuple(sorted(x, reverse=True))
        out[key] = out.get(key, Fraction(0)) + p
    return out


def entropy_bits(pmf: Dict) -> float:
    """Shannon entropy in bits of an exact pmf"""
    h = 0.0
    for p in pmf.values():
        if p:
            h -= float(p) * (math.log2(p.numerator) - math.log2(p.denominator))
    return h


def entropy_hat(P: int, B: int, Pr: int) -> float:
    return entropy_bits(pmf_hat(P, B, Pr))


def entropy_tilde(P: int, B: int, Pr: int) -> float:
    return entropy_bits(sorted_pmf(pmf_hat(P, B, Pr)))


def brute_force_entropies(P: int, B: int, Pr: int) -> Tuple[float, float]:
    """
    Both entropies by enumerating every Pr-subset of the P subpackets

    Raises:
        ConfigurationError: C(P, Pr) above the enumeration limit
    """
    _check(P, B, Pr)
    subsets = math.comb(P, Pr)
    limit = LEAKAGE_CONFIG['brute_force_limit']
    if subsets > limit:
        raise ConfigurationError(f"C({P}, {Pr}) = {subsets} subsets exceeds the limit of {limit}")

    m = P // B
    tally: Counter = Counter()
    for subset in itertools.combinations(range(P), Pr):
        tally[observed_count_vector(((i % m + 1, i // m + 1) for i in subset), B)] += 1
    pmf = {x: Fraction(c, subsets) for x, c in tally.items()}
    logger.debug(f"Enumerated {subsets} subsets for P={P}, B={B}, Pr={Pr}")
    return entropy_bits(pmf), entropy_bits(sorted_pmf(pmf))


def observed_count_vector(pairs, B: int) -> CountVector:
    """Per-segment counts of (subpacket, segment) pairs as a database sees them"""
    counts = [0] * B
    for _, segment in pairs:
        counts[segment - 1] += 1
    return tuple(counts)


@dataclass(frozen=True)
class LeakageRow:
    B: int
    H_hat_bits: float
    H_tilde_bits: float
    subsets: int
    storage_case1: int
    storage_case2: int


def sweep_leakage(P: int, Pr: int, B_list: Sequence[int]) -> List[LeakageRow]:
    """
    Leakage and per-database storage for each segment count

    Args:
        P: Number of subpackets
        Pr: Number of updated subpackets
        B_list: Segment counts to evaluate, each dividing P

    Returns:
        list: One LeakageRow per B, in the given order
    """
    rows = []
    for B in B_list:
        pmf = pmf_hat(P, B, Pr)
        rows.append(LeakageRow(
            B=B,
            H_hat_bits=entropy_bits(pmf),
            H_tilde_bits=entropy_bits(sorted_pmf(pmf)),
            subsets=math.comb(P, Pr),
            storage_case1=storage_symbol_count(P, B, Scheme.CASE1),
            storage_case2=storage_symbol_count(P, B, Scheme.CASE2),
        ))
    logger.info(f"Leakage sweep P={P}, Pr={Pr} over B={list(B_list)}")
    return rows


def max_segments_within_budget(rows: Sequence[LeakageRow], epsilon: float,
                               scheme: Scheme) -> Optional[int]:
    """
    Largest B whose leakage stays within epsilon bits

    Case 1 leaks the count vector, case 2 only its sorted form.

    Returns:
        int or None: The largest feasible B, None if no row is feasible
    """
    tolerance = LEAKAGE_CONFIG['budget_tolerance']
    attr = 'H_hat_bits' if Scheme(scheme) is Scheme.CASE1 else 'H_tilde_bits'
    feasible = [row.B for row in rows if getattr(row, attr) <= epsilon + tolerance]
    return max(feasible) if feasible else None


def sweep_frame(rows: Sequence[LeakageRow]) -> pd.DataFrame:
    """Plot-ready table; entropies in bits"""
    frame = pd.DataFrame([asdict(row) for row in rows])
    return frame.rename(columns={'subsets': 'C(P,Pr)'})[
        ['B', 'H_hat_bits', 'H_tilde_bits', 'C(P,Pr)', 'storage_case1', 'storage_case2']
    ]
