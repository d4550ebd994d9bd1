"""
Hand-checkable reference configurations and their expected layouts.

Case 1: N=4, P=15, B=3 with within-segment permutations
(2,1,4,5,3), (3,5,2,4,1), (5,2,3,1,4).
Case 2: N=6, P=12, B=3 with within-segment permutations
(2,4,3,1), (1,3,2,4), (3,1,4,2) and inter-segment permutation (2,3,1).
Reversers are built noiseless so layouts show plain 0/1 placement.
"""

import logging
from dataclasses import dataclass
from typing import Callable, List, Sequence

import numpy as np

from accounting import storage_symbol_count
from client import SparseSelection, build_write_tuples, top_r_select
from coded_storage import Scheme, StorageState, SystemParams
from coordinator import Simulation, build_config, coordinator_init
from database_node import DatabaseNode, WriteTuple
from exceptions import PRUWError
from finite_field import PrimeField
from permutations import PermutationSet, ReverserSet, build_reverser, permuted_to_real, real_to_permuted

logger = logging.getLogger(__name__)

CASE1_PERMUTATIONS = PermutationSet(within=((2, 1, 4, 5, 3), (3, 5, 2, 4, 1), (5, 2, 3, 1, 4)))
CASE2_PERMUTATIONS = PermutationSet(
    within=((2, 4, 3, 1), (1, 3, 2, 4), (3, 1, 4, 2)),
    inter=(2, 3, 1),
)

CASE1_CONFIG = {'scheme': 'case1', 'N': 4, 'P': 15, 'B': 3, 'r': '4/15', 'r_prime': '2/15',
                'users_per_round': 1, 'rounds': 2, 'seed': 0}
CASE2_CONFIG = {'scheme': 'case2', 'N': 6, 'P': 12, 'B': 3, 'r': '1/4', 'r_prime': '1/6',
                'users_per_round': 1, 'rounds': 2, 'seed': 0}

CASE1_REAL = [(2, 1), (4, 1), (2, 2), (5, 3)]
CASE1_PERMUTED = [(1, 1), (3, 1), (3, 2), (1, 3)]
CASE2_REAL = [(2, 1), (2, 2), (3, 3)]
CASE2_PERMUTED = [(1, 3), (3, 1), (1, 2)]


@dataclass(frozen=True)
class CheckResult:
    name: str
    ok: bool
    detail: str = ''


def noiseless_reversers(perms: PermutationSet, q: int) -> ReverserSet:
    """Reversers with zero noise: plain permutation-reversing matrices"""
    field_ = PrimeField(q)

    def bare(perm):
        size = len(perm)
        return build_reverser(field_, perm, 1, 0, [[0] * size for _ in range(size)])

    inter = bare(perms.inter) if perms.inter is not None else None
    return ReverserSet(q=q, within_rev=tuple(bare(p) for p in perms.within), inter_rev=inter)


def _zero_node(params: SystemParams, perms: PermutationSet) -> DatabaseNode:
    storage = StorageState(symbols=[0] * params.P, segment_size=params.segment_size)
    return DatabaseNode(index=1, params=params, storage=storage,
                        reverser=noiseless_reversers(perms, params.q))


def _expect(name: str, actual, expected) -> CheckResult:
    ok = actual == expected
    detail = '' if ok else f"got {actual}, expected {expected}"
    return CheckResult(name, ok, detail)


def _updates_at(values: dict, size: int) -> List[int]:
    out = [0] * size
    for position, value in values.items():
        out[position - 1] = value
    return out


def case1_checks() -> List[CheckResult]:
    params = build_config(CASE1_CONFIG).to_params()
    perms, scheme = CASE1_PERMUTATIONS, Scheme.CASE1
    results = [
        _expect('case1: real to permuted tuples',
                [real_to_permuted(p, perms, scheme) for p in CASE1_REAL], CASE1_PERMUTED),
        _expect('case1: downlink {1,3} of segment 1 is real {2,4}',
                [permuted_to_real(p, perms, scheme) for p in [(1, 1), (3, 1)]], [(2, 1), (4, 1)]),
    ]

    scores = [0] * params.P
    for pair in CASE1_REAL:
        scores[params.global_index(*pair)] = 10
    results.append(_expect('case1: top-r selection', sorted(top_r_select(scores, params)), sorted(CASE1_REAL)))

    node = _zero_node(params, perms)
    results.append(_expect('case1: query for first permuted subpacket',
                           node.build_read_query((1, 1)), [0, 1, 0, 0, 0]))

    # U values 11, 13, 17, 19 for real (2,1), (4,1), (2,2), (5,3)
    tuples = [WriteTuple(u, *pair) for u, pair in zip((11, 13, 17, 19), CASE1_PERMUTED)]
    results.append(_expect('case1: permuted update vectors per segment',
                           node.segment_update_vectors(tuples),
                           {1: [11, 0, 13, 0, 0], 2: [0, 0, 17, 0, 0], 3: [19, 0, 0, 0, 0]}))
    node.apply_write(tuples)
    results.append(_expect('case1: rearranged updates land at real positions',
                           [node.storage.segment(j) for j in (1, 2, 3)],
                           [[0, 11, 0, 13, 0], [0, 17, 0, 0, 0], [0, 0, 0, 0, 19]]))

    results.append(_expect('case1: storage symbols per database',
                           storage_symbol_count(params.P, params.B, scheme), 90))
    return results


def case2_checks() -> List[CheckResult]:
    params = build_config(CASE2_CONFIG).to_params()
    perms, scheme = CASE2_PERMUTATIONS, Scheme.CASE2
    results = [
        _expect('case2: real to permuted tuples',
                [real_to_permuted(p, perms, scheme) for p in CASE2_REAL], CASE2_PERMUTED),
        _expect('case2: permuted to real',
                [permuted_to_real(p, perms, scheme) for p in [(1, 1), (1, 2), (1, 3)]],
                [(1, 2), (3, 3), (2, 1)]),
    ]

    node = _zero_node(params, perms)
    results.append(_expect('case2: query for permuted (1,3)',
                           node.build_read_query((1, 3)), [0, 1, 0, 0] + [0] * 8))

    tuples = [WriteTuple(u, *pair) for u, pair in zip((11, 13, 17), CASE2_PERMUTED)]
    results.append(_expect('case2: permuted update vector', node.full_update_vector(tuples),
                           _updates_at({9: 11, 3: 13, 5: 17}, 12)))
    node.apply_write(tuples)
    results.append(_expect('case2: rearranged updates land at real positions',
                           node.storage.symbols, _updates_at({2: 11, 6: 13, 11: 17}, 12)))

    sel = SparseSelection(real_pairs=tuple(CASE2_REAL), deltas=((1,), (2,), (3,)))
    written = build_write_tuples(sel, perms, params, np.random.default_rng(0))
    results.append(_expect('case2: tuples sent to each database',
                           [t.pair for t in written[0]], CASE2_PERMUTED))

    results.append(_expect('case2: storage symbols per database',
                           storage_symbol_count(params.P, params.B, scheme), 69))
    return results


def end_to_end_checks() -> List[CheckResult]:
    """Both reference configurations run against the shadow model"""
    results = []
    for name, data, perms in (('case1', CASE1_CONFIG, CASE1_PERMUTATIONS),
                              ('case2', CASE2_CONFIG, CASE2_PERMUTATIONS)):
        config = build_config(data)
        try:
            Simulation(config, coordinator_init(config, permutations=perms)).run()
            results.append(CheckResult(f'{name}: simulation matches shadow model', True))
        except PRUWError as e:
            results.append(CheckResult(f'{name}: simulation matches shadow model', False, str(e)))
    return results


CHECKS: Sequence[Callable[[], List[CheckResult]]] = (case1_checks, case2_checks, end_to_end_checks)


def verify_worked_examples() -> List[CheckResult]:
    """Run every reference check; each result names what it verified"""
    results = []
    for check in CHECKS:
        results.extend(check())
    failed = [r for r in results if not r.ok]
    logger.info(f"Worked examples: {len(results) - len(failed)}/{len(results)} passed")
    return results
