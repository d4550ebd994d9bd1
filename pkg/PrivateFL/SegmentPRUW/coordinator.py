"""
Coordinator provisioning and deterministic round orchestration.

The coordinator is a function: it draws the secret permutations, builds the
reversers and the initial coded storage from one seed, hands them out and is
gone. Simulation then drives write, downlink selection and read phases, and
checks every decoded value against a plaintext shadow model.
"""

import json
import logging
import os
import zlib
from dataclasses import dataclass, field as dataclass_field
from fractions import Fraction
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd
from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator

from accounting import CostReport, measured_costs, reconcile_costs
from client import Client, SparseSelection, UpdateGenerator
from coded_storage import (
    Scheme,
    StorageState,
    SystemParams,
    decode_storage,
    init_storage,
    snapshot_bytes,
)
from config import FIELD_CONFIG, OUTPUT_CONFIG, SIMULATION_CONFIG
from database_node import DatabaseNode
from exceptions import ConfigurationError, DegreeStructureError, OracleViolation, ProtocolError
from permutations import (
    PermutationSet,
    ReverserSet,
    build_reverser_sets,
    permuted_to_real,
    sample_permutation_set,
)
from utils import ensure_output_dir, parse_fraction, write_json

logger = logging.getLogger(__name__)

Pair = Tuple[int, int]


class SimulationConfig(BaseModel):
    """Validated simulation configuration; unknown fields are rejected"""

    model_config = ConfigDict(extra='forbid', arbitrary_types_allowed=True)

    scheme: Scheme = Scheme.CASE1
    N: int = Field(ge=4)
    P: int = Field(ge=1)
    B: int = Field(ge=1)
    r: Fraction = Fraction(0)
    r_prime: Fraction = Fraction(0)
    q: int = Field(FIELD_CONFIG['default_modulus'], ge=2)
    alphas: Optional[List[int]] = None
    users_per_round: int = Field(1, ge=1)
    rounds: int = Field(1, ge=1)
    seed: int = Field(0, ge=0, le=SIMULATION_CONFIG['max_seed'])
    score_distribution: str = SIMULATION_CONFIG['default_score_distribution']
    quantization_scale: int = Field(SIMULATION_CONFIG['quantization_scale'], ge=1)
    output_dir: Optional[str] = None

    @field_validator('scheme', mode='before')
    @classmethod
    def _scheme(cls, value):
        if isinstance(value, int) and not isinstance(value, bool):
            return Scheme.from_case_number(value)
        return value

    @field_validator('r', 'r_prime', mode='before')
    @classmethod
    def _rate(cls, value):
        return parse_fraction(value)

    @field_validator('score_distribution')
    @classmethod
    def _distribution(cls, value):
        allowed = SIMULATION_CONFIG['score_distributions']
        if value not in allowed:
            raise ValueError(f"must be one of {', '.join(allowed)}")
        return value

    def to_params(self) -> SystemParams:
        return SystemParams(
            N=self.N, P=self.P, B=self.B, scheme=self.scheme,
            r=self.r, r_prime=self.r_prime, q=self.q,
            alphas=tuple(self.alphas or ()),
        )

    def with_overrides(self, **overrides) -> 'SimulationConfig':
        """Revalidated copy; None values leave a field unchanged"""
        data = self.model_dump()
        data.update({k: v for k, v in overrides.items() if v is not None})
        return build_config(data)

    def to_dict(self) -> Dict:
        data = self.model_dump()
        data['scheme'] = self.scheme.value
        data['r'] = str(self.r)
        data['r_prime'] = str(self.r_prime)
        return data


def _validation_message(error: ValidationError) -> str:
    parts = []
    for err in error.errors():
        location = '.'.join(str(p) for p in err['loc']) or 'config'
        parts.append(f"{location}: {err['msg']}")
    return '; '.join(parts)


def build_config(data: Dict) -> SimulationConfig:
    """
    Validate a configuration mapping, including the system-parameter constraints

    Raises:
        ConfigurationError: Naming each failing field or constraint
    """
    try:
        config = SimulationConfig.model_validate(data)
    except ValidationError as e:
        raise ConfigurationError(f"Invalid configuration: {_validation_message(e)}") from e
    config.to_params()
    return config


def load_config(path: str, **overrides) -> SimulationConfig:
    """Read a JSON configuration file and apply command-line overrides"""
    try:
        with open(path, 'r', encoding='utf-8') as f:
            data = json.load(f)
    except OSError as e:
        raise ConfigurationError(f"Cannot read config file {path}: {e}") from e
    except json.JSONDecodeError as e:
        raise ConfigurationError(f"Config file {path} is not valid JSON: {e}") from e
    if not isinstance(data, dict):
        raise ConfigurationError(f"Config file {path} must hold a JSON object")
    data.update({k: v for k, v in overrides.items() if v is not None})
    return build_config(data)


class SeedStreams:
    """Named, independent numpy generators derived from one root seed"""

    def __init__(self, seed: int):
        self.seed = int(seed)

    def stream(self, name: str) -> np.random.Generator:
        sequence = np.random.SeedSequence(entropy=self.seed, spawn_key=(zlib.crc32(name.encode()),))
        return np.random.Generator(np.random.PCG64(sequence))


class ShadowModel:
    """Plaintext copy of the model, updated by the orchestrator only"""

    def __init__(self, model: Sequence[Sequence[int]], q: int):
        self.q = q
        self.model = [[int(v) % q for v in row] for row in model]

    def apply(self, selection: SparseSelection, params: SystemParams):
        for pair, delta in zip(selection.real_pairs, selection.deltas):
            row = self.model[params.global_index(*pair)]
            for k, value in enumerate(delta):
                row[k] = (row[k] + value) % self.q

    def subpacket(self, pair: Pair, params: SystemParams) -> List[int]:
        return list(self.model[params.global_index(*pair)])


@dataclass
class ProvisioningBundle:
    params: SystemParams
    permutations: PermutationSet
    reversers: List[ReverserSet]
    storages: List[StorageState]
    shadow: ShadowModel


def coordinator_init(config: SimulationConfig, permutations: Optional[PermutationSet] = None,
                     model: Optional[Sequence[Sequence[int]]] = None) -> ProvisioningBundle:
    """
    Provision users and databases from the configuration seed

    Args:
        config: Validated configuration
        permutations: Fixed permutations instead of sampled ones
        model: Fixed initial model (P subpackets of ell symbols) instead of a random one

    Returns:
        ProvisioningBundle: User permutations, per-database reversers and
        storage, and the shadow model
    """
    params = config.to_params()
    streams = SeedStreams(config.seed)

    storage_rng = streams.stream('coordinator.storage')
    if model is None:
        model = params.field.random_matrix(storage_rng, params.P, params.ell)
    if permutations is None:
        permutations = sample_permutation_set(params, streams.stream('coordinator.permutations'))
    permutations.validate_for(params)

    reversers = build_reverser_sets(params, permutations, streams.stream('coordinator.reversers'))
    storages = init_storage(model, params, storage_rng)
    logger.info(
        f"Provisioned case {params.scheme.case_number}: N={params.N}, P={params.P}, "
        f"B={params.B}, ell={params.ell}, seed={config.seed}"
    )
    return ProvisioningBundle(params, permutations, reversers, storages, ShadowModel(model, params.q))


@dataclass
class RoundReport:
    """Outcome of one round; only database_visible is what databases observe"""

    round: int
    downlink_pairs: List[Pair]
    writes_permuted: Dict[int, List[Pair]]
    writes_real: Dict[int, List[Pair]]
    downlink_real: List[Pair]
    histogram: List[List[int]]
    costs: CostReport
    oracle: Dict[str, str] = dataclass_field(default_factory=dict)

    def to_dict(self) -> Dict:
        return {
            'round': self.round,
            'database_visible': {
                'downlink_pairs': [list(p) for p in self.downlink_pairs],
                'writes': {str(u): [list(p) for p in pairs] for u, pairs in self.writes_permuted.items()},
                'histogram': self.histogram,
            },
            'real_domain': {
                'downlink_pairs': [list(p) for p in self.downlink_real],
                'writes': {str(u): [list(p) for p in pairs] for u, pairs in self.writes_real.items()},
            },
            'costs': self.costs.to_dict(),
            'oracle': dict(self.oracle),
        }


class Simulation:
    """Round driver over N database nodes and the configured users"""

    def __init__(self, config: SimulationConfig, bundle: Optional[ProvisioningBundle] = None):
        self.config = config
        self.bundle = bundle or coordinator_init(config)
        self.params = self.bundle.params
        self.streams = SeedStreams(config.seed)
        self.shadow = self.bundle.shadow
        self.nodes = [
            DatabaseNode(index=n + 1, params=self.params, storage=storage, reverser=reverser)
            for n, (storage, reverser) in enumerate(zip(self.bundle.storages, self.bundle.reversers))
        ]
        generator = UpdateGenerator(self.params, config.score_distribution, config.quantization_scale)
        self.clients = [
            Client(u, self.params, self.bundle.permutations, generator)
            for u in range(1, config.users_per_round + 1)
        ]
        self.round = 0
        self.reports: List[RoundReport] = []

    def _write_phase(self) -> Tuple[Dict[int, List[Pair]], Dict[int, List[Pair]]]:
        t = self.round
        permuted, real = {}, {}
        for client in self.clients:
            u = client.user_id
            selection, tuples = client.prepare_write(
                self.streams.stream(f'user.{u}.round.{t}.updates'),
                self.streams.stream(f'user.{u}.round.{t}.noise'),
            )
            for node, node_tuples in zip(self.nodes, tuples):
                node.apply_write(node_tuples, user=u)
            self.shadow.apply(selection, self.params)
            permuted[u] = [tup.pair for tup in tuples[0]]
            real[u] = list(selection.real_pairs)
        return permuted, real

    def _select_downlink(self) -> List[Pair]:
        choices = [node.select_downlink() for node in self.nodes]
        if any(choice != choices[0] for choice in choices[1:]):
            raise ProtocolError(f"Round {self.round}: databases disagree on the downlink set")
        return choices[0]

    def _read_phase(self, pairs: List[Pair]) -> int:
        broadcaster = self.nodes[0]
        checked = 0
        for client in self.clients:
            u = client.user_id
            broadcaster.broadcast_downlink(u, pairs)
            per_node = [node.serve_read(u, pairs) for node in self.nodes]
            per_pair = [[answers[k] for answers in per_node] for k in range(len(pairs))]
            for real, plain in client.read(pairs, per_pair):
                expected = self.shadow.subpacket(real, self.params)
                if plain != expected:
                    raise OracleViolation(
                        f"Round {self.round}, user {u}: read of subpacket {real} decoded "
                        f"{plain}, shadow holds {expected}"
                    )
                checked += 1
        return checked

    def _check_storage(self):
        try:
            decoded = decode_storage([node.storage for node in self.nodes], self.params)
        except DegreeStructureError as e:
            raise OracleViolation(f"Round {self.round}: {e}") from e
        for s, (plain, expected) in enumerate(zip(decoded, self.shadow.model)):
            if plain != expected:
                pair = self.params.pair_of(s)
                raise OracleViolation(
                    f"Round {self.round}: stored subpacket {pair} decodes to {plain}, shadow holds {expected}"
                )

    def _costs(self) -> CostReport:
        counts = {node.stored_symbol_count() for node in self.nodes}
        if len(counts) != 1:
            raise OracleViolation(f"Round {self.round}: databases store different symbol counts {sorted(counts)}")
        traces = [t for node in self.nodes for t in node.traces if t.round == self.round]
        report = measured_costs(traces, self.params, storage_symbols=counts.pop())
        reconcile_costs(report, self.params)
        return report

    def run_round(self) -> RoundReport:
        """
        Write phase for every user, downlink selection, then read phase

        Raises:
            OracleViolation: Any decoded value or cost disagrees with its oracle
        """
        self.round += 1
        for node in self.nodes:
            node.begin_round(self.round)
        logger.info(f"Round {self.round}: {len(self.clients)} users")

        writes_permuted, writes_real = self._write_phase()
        hist = self.nodes[0].histogram
        logger.info(f"Round {self.round}: {hist.total} permuted writes from {hist.users} users")
        pairs = self._select_downlink()
        checked = self._read_phase(pairs)
        self._check_storage()
        costs = self._costs()

        perms, scheme = self.bundle.permutations, self.params.scheme
        report = RoundReport(
            round=self.round,
            downlink_pairs=pairs,
            writes_permuted=writes_permuted,
            writes_real=writes_real,
            downlink_real=[permuted_to_real(p, perms, scheme) for p in pairs],
            histogram=[list(row) for row in self.nodes[0].histogram.counts],
            costs=costs,
            oracle={'reads_checked': str(checked), 'storage_decode': 'ok', 'costs': 'ok'},
        )
        self.reports.append(report)
        logger.info(f"Round {self.round}: {checked} reads and full storage match the shadow model")
        return report

    def run(self) -> List[RoundReport]:
        for _ in range(self.config.rounds):
            self.run_round()
        return self.reports

    def write_outputs(self, out_dir: str, dump_provisioning: bool = False) -> List[str]:
        """
        Persist round reports, the cost table, per-database traces and the storage snapshot

        Returns:
            list: Paths written
        """
        ensure_output_dir(out_dir)
        written = [write_json(
            os.path.join(out_dir, OUTPUT_CONFIG['round_reports_file']),
            {
                'config': self.config.to_dict(),
                'params': self.params.to_dict(),
                'rounds': [r.to_dict() for r in self.reports],
            },
        )]

        costs_path = os.path.join(out_dir, OUTPUT_CONFIG['costs_file'])
        pd.DataFrame([r.costs.to_row() for r in self.reports]).to_csv(costs_path, index=False)
        written.append(costs_path)

        traces_dir = ensure_output_dir(os.path.join(out_dir, OUTPUT_CONFIG['traces_dir']))
        for node in self.nodes:
            path = os.path.join(traces_dir, f'database_{node.index}.csv')
            node.write_trace_csv(path)
            written.append(path)

        snapshot_path = os.path.join(out_dir, OUTPUT_CONFIG['snapshot_file'])
        states = [node.storage for node in self.nodes]
        with open(snapshot_path, 'wb') as f:
            f.write(snapshot_bytes(states, self.params.q))
        written.append(snapshot_path)
        written.append(write_json(
            os.path.splitext(snapshot_path)[0] + '.json',
            {'q': self.params.q, 'databases': [list(s.symbols) for s in states]},
        ))

        if dump_provisioning:
            prov_dir = ensure_output_dir(os.path.join(out_dir, OUTPUT_CONFIG['provisioning_dir']))
            written.append(write_json(
                os.path.join(prov_dir, 'permutations.json'), self.bundle.permutations.to_dict()
            ))
            for n, reverser in enumerate(self.bundle.reversers, start=1):
                written.append(write_json(
                    os.path.join(prov_dir, f'reversers_database_{n}.json'), reverser.to_dict()
                ))

        logger.info(f"Wrote {len(written)} files to {out_dir}")
        return written
