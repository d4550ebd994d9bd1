"""
Federated-learning user: top-r selection, combined updates, permuted write
tuples and decoding of the downlink read.
"""

import logging
from dataclasses import dataclass
from typing import List, Sequence, Tuple

import numpy as np

from coded_storage import SystemParams, decode_read_answers, mds_share
from config import SIMULATION_CONFIG
from database_node import WriteTuple
from exceptions import ConfigurationError, DimensionError, ProtocolError
from finite_field import PrimeField
from permutations import PermutationSet, permuted_to_real, real_to_permuted

logger = logging.getLogger(__name__)

Pair = Tuple[int, int]


@dataclass(frozen=True)
class SparseSelection:
    """Real (subpacket, segment) pairs a user updates, with ell update symbols each"""

    real_pairs: Tuple[Pair, ...]
    deltas: Tuple[Tuple[int, ...], ...]

    def __post_init__(self):
        if len(set(self.real_pairs)) != len(self.real_pairs):
            raise ProtocolError(f"Selected pairs must be distinct: {self.real_pairs}")
        if len(self.deltas) != len(self.real_pairs):
            raise DimensionError(f"{len(self.deltas)} deltas for {len(self.real_pairs)} pairs")

    def __len__(self):
        return len(self.real_pairs)


def top_r_select(scores: Sequence, params: SystemParams) -> List[Pair]:
    """
    The P*r most significant subpackets

    Args:
        scores: One non-negative score per subpacket, in global order
        params: System parameters

    Returns:
        list: Real (subpacket, segment) pairs, highest score first, ties by
        global position ascending
    """
    if len(scores) != params.P:
        raise DimensionError(f"Expected {params.P} scores, got {len(scores)}")
    ranked = sorted(range(params.P), key=lambda i: (-scores[i], i))
    return [params.pair_of(i) for i in ranked[:params.uplink_count]]


def combine_update(field_: PrimeField, delta: Sequence[int], alpha_n: int, z: int) -> int:
    """U_n = sum_k alpha_n^{-k} delta_k + z"""
    return field_.add(mds_share(field_, delta, alpha_n), z)


def build_write_tuples(sel: SparseSelection, perms: PermutationSet, params: SystemParams,
                       rng: np.random.Generator) -> List[List[WriteTuple]]:
    """
    Per-database write tuples for one user's sparse update

    One noise symbol z is drawn per selected subpacket and shared by all N
    databases.

    Args:
        sel: The user's selection and update symbols
        perms: The user's copy of the secret permutations
        params: System parameters
        rng: The user's noise stream for this round

    Returns:
        list: N lists of WriteTuple, database order
    """
    field_ = params.field
    per_database: List[List[WriteTuple]] = [[] for _ in range(params.N)]
    for pair, delta in zip(sel.real_pairs, sel.deltas):
        if len(delta) != params.ell:
            raise DimensionError(f"Update of {len(delta)} symbols, expected ell={params.ell}")
        z = field_.random_element(rng)
        eta_p, phi_p = real_to_permuted(pair, perms, params.scheme)
        for n, alpha in enumerate(params.alphas):
            per_database[n].append(WriteTuple(combine_update(field_, delta, alpha, z), eta_p, phi_p))
    return per_database


def decode_downlink(permuted_pairs: Sequence[Pair], answers: Sequence[Sequence[int]],
                    perms: PermutationSet, params: SystemParams) -> List[Tuple[Pair, List[int]]]:
    """
    Map each broadcast pair back to its real pair and decode its subpacket

    Args:
        permuted_pairs: Pairs announced by the broadcaster
        answers: For each pair, the N answers in database order
        perms: The user's copy of the secret permutations
        params: System parameters

    Returns:
        list: (real pair, ell plaintext symbols) per broadcast pair
    """
    if len(answers) != len(permuted_pairs):
        raise DimensionError(f"{len(answers)} answer sets for {len(permuted_pairs)} pairs")
    decoded = []
    for pair, pair_answers in zip(permuted_pairs, answers):
        real = permuted_to_real(pair, perms, params.scheme)
        decoded.append((real, decode_read_answers(pair_answers, params)))
    return decoded


def quantize(values, q: int, scale: int = SIMULATION_CONFIG['quantization_scale']) -> List[int]:
    """Symmetric fixed point: round(v * scale) as a residue mod q"""
    return [int(round(float(v) * scale)) % q for v in np.ravel(values)]


def dequantize(residues: Sequence[int], q: int,
               scale: int = SIMULATION_CONFIG['quantization_scale']) -> List[float]:
    """Centered lift of residues to (-q/2, q/2], divided by scale"""
    half = q // 2
    return [((r % q) - q if (r % q) > half else (r % q)) / scale for r in residues]


class UpdateGenerator:
    """Synthetic per-round scores and update symbols for one user"""

    def __init__(self, params: SystemParams,
                 distribution: str = SIMULATION_CONFIG['default_score_distribution'],
                 scale: int = SIMULATION_CONFIG['quantization_scale']):
        if distribution not in SIMULATION_CONFIG['score_distributions']:
            raise ConfigurationError(
                f"Unknown score distribution '{distribution}', "
                f"expected one of {SIMULATION_CONFIG['score_distributions']}"
            )
        self.params = params
        self.distribution = distribution
        self.scale = scale

    def draw(self, rng: np.random.Generator) -> Tuple[List[float], List[List[int]]]:
        """
        Scores and quantized updates for all P subpackets

        heavy_tailed: Student-t pseudo-gradients, scored by their L1 norm.
        uniform: i.i.d. uniform scores, so every P*r subset is equally likely.
        """
        P, ell, q = self.params.P, self.params.ell, self.params.q
        if self.distribution == 'heavy_tailed':
            gradients = rng.standard_t(SIMULATION_CONFIG['heavy_tail_dof'], size=(P, ell))
            scores = np.abs(gradients).sum(axis=1)
        else:
            gradients = rng.uniform(-1.0, 1.0, size=(P, ell))
            scores = rng.random(P)
        deltas = [quantize(row, q, self.scale) for row in gradients]
        return [float(s) for s in scores], deltas


class Client:
    """One user holding the shared permutations"""

    def __init__(self, user_id: int, params: SystemParams, perms: PermutationSet,
                 generator: UpdateGenerator):
        perms.validate_for(params)
        self.user_id = user_id
        self.params = params
        self.perms = perms
        self.generator = generator

    def prepare_write(self, update_rng: np.random.Generator,
                      noise_rng: np.random.Generator) -> Tuple[SparseSelection, List[List[WriteTuple]]]:
        """Draw this round's update, keep the top P*r subpackets, and build the tuples"""
        scores, deltas = self.generator.draw(update_rng)
        pairs = top_r_select(scores, self.params)
        sel = SparseSelection(
            real_pairs=tuple(pairs),
            deltas=tuple(tuple(deltas[self.params.global_index(*p)]) for p in pairs),
        )
        logger.debug(f"User {self.user_id} selected {len(sel)} subpackets")
        return sel, build_write_tuples(sel, self.perms, self.params, noise_rng)

    def read(self, permuted_pairs: Sequence[Pair],
             answers: Sequence[Sequence[int]]) -> List[Tuple[Pair, List[int]]]:
        return decode_downlink(permuted_pairs, answers, self.perms, self.params)
