"""
Tests for the command-line interface
"""

import json
import os
import sys

import pandas as pd
import pytest

sys.path.insert(0, os.path.join(os.path.dirname(__file__), '..'))

from coordinator import Simulation
from exceptions import OracleViolation
from main import create_parser, main


@pytest.fixture
def config_file(tmp_path, make_config):
    def write(**overrides):
        path = tmp_path / 'config.json'
        path.write_text(json.dumps(make_config(**overrides)))
        return str(path)
    return write


class TestParser:

    def test_subcommands(self):
        parser = create_parser()
        args = parser.parse_args(['leakage-sweep', '--segments', '1,2', '--epsilon', '0.5'])
        assert args.command == 'leakage-sweep'
        assert args.subpackets == 18
        assert args.selected == 3
        assert args.epsilon == 0.5

    def test_case_choices(self):
        with pytest.raises(SystemExit):
            create_parser().parse_args(['costs', '--config', 'x.json', '--case', '3'])

    def test_no_command(self, capsys):
        assert main([]) == 0
        assert 'simulate' in capsys.readouterr().out


class TestVerifyExamples:

    def test_passes(self, capsys):
        assert main(['verify-examples']) == 0
        assert 'checks passed' in capsys.readouterr().out

    def test_json_output(self, capsys):
        assert main(['verify-examples', '--output', 'json']) == 0
        payload = json.loads(capsys.readouterr().out)
        assert all(row['result'] for row in payload['rows'])


class TestLeakageSweep:

    def test_csv_and_budget(self, tmp_path, capsys):
        out = tmp_path / 'sweep' / 'leakage.csv'
        code = main(['leakage-sweep', '-P', '18', '--selected', '3', '--segments', '1,2,3,6,9',
                     '--epsilon', '0', '--out', str(out)])
        assert code == 0
        frame = pd.read_csv(out)
        assert len(frame) == 5
        assert list(frame.columns) == ['B', 'H_hat_bits', 'H_tilde_bits', 'C(P,Pr)', 'storage_case1', 'storage_case2']
        assert frame['H_hat_bits'][0] == 0
        assert (frame['H_tilde_bits'] <= frame['H_hat_bits']).all()
        printed = capsys.readouterr().out
        assert 'Case 1: largest B within 0.0 bits = 1' in printed
        assert 'Case 2: largest B within 0.0 bits = 1' in printed

    def test_enumeration_cross_check(self):
        assert main(['leakage-sweep', '-P', '12', '--selected', '2', '--verify']) == 0

    def test_bad_segments(self, capsys):
        assert main(['leakage-sweep', '-P', '18', '--segments', '4']) == 1
        assert 'B must be a positive divisor' in capsys.readouterr().err


@pytest.mark.integration
class TestSimulate:

    def test_deterministic_outputs(self, tmp_path, config_file):
        path = config_file()
        for name in ('a', 'b'):
            assert main(['simulate', '--config', path, '--seed', '42', '--out', str(tmp_path / name)]) == 0
        with open(tmp_path / 'a' / 'round_reports.json', 'rb') as fa, \
                open(tmp_path / 'b' / 'round_reports.json', 'rb') as fb:
            assert fa.read() == fb.read()

    def test_case_override(self, tmp_path, config_file):
        path = config_file(N=6)
        assert main(['simulate', '--config', path, '--case', '2', '--out', str(tmp_path)]) == 0
        with open(tmp_path / 'round_reports.json') as f:
            assert json.load(f)['params']['scheme'] == 'case2'

    def test_dump_provisioning(self, tmp_path, config_file):
        assert main(['simulate', '--config', config_file(), '--out', str(tmp_path), '--dump-provisioning']) == 0
        assert (tmp_path / 'provisioning' / 'permutations.json').exists()
        assert (tmp_path / 'provisioning' / 'reversers_database_4.json').exists()

    def test_invalid_segments(self, tmp_path, config_file, capsys):
        assert main(['simulate', '--config', config_file(B=5), '--out', str(tmp_path)]) == 1
        assert 'B must divide P' in capsys.readouterr().err

    def test_unknown_field(self, tmp_path, config_file, capsys):
        assert main(['simulate', '--config', config_file(bogus=True), '--out', str(tmp_path)]) == 1
        assert 'bogus' in capsys.readouterr().err

    def test_modulus_too_large(self, tmp_path, config_file, capsys):
        path = config_file(q=(1 << 89) - 1)
        assert main(['simulate', '--config', path, '--out', str(tmp_path)]) == 1
        assert 'max_modulus' in capsys.readouterr().err

    def test_missing_config(self, tmp_path):
        assert main(['simulate', '--config', str(tmp_path / 'nope.json')]) == 1

    def test_oracle_violation(self, tmp_path, config_file, mocker, capsys):
        mocker.patch.object(Simulation, 'run', side_effect=OracleViolation('forced mismatch'))
        assert main(['simulate', '--config', config_file(), '--out', str(tmp_path)]) == 2
        assert 'Oracle violation: forced mismatch' in capsys.readouterr().err


class TestCosts:

    def test_report(self, tmp_path, config_file):
        assert main(['costs', '--config', config_file(), '--out', str(tmp_path)]) == 0
        with open(tmp_path / 'costs.json') as f:
            report = json.load(f)
        assert report['storage_symbols'] == 12 + 3 * 16
        assert report['storage_complexity'] == "O(L^2/(B N^2))"
        assert report['writing_ceil'] == '3'
        assert report['reading_ceil'] == '5/6'
