#!/usr/bin/env python3
"""
Segmented PRUW simulator - private read-update-write for sparse federated
learning over N non-colluding databases
"""

import argparse
import logging
import os
import sys
import traceback

from accounting import closed_form_costs, formula_costs, storage_complexity
from coded_storage import Scheme
from config import EXIT_CODES, LOGGING_CONFIG, OUTPUT_CONFIG
from coordinator import Simulation, coordinator_init, load_config
from exceptions import ConfigurationError, OracleViolation, PRUWError
from formatters import get_formatter
from leakage import brute_force_entropies, max_segments_within_budget, sweep_frame, sweep_leakage
from utils import ensure_output_dir, format_fraction, parse_int_list, write_json
from worked_examples import verify_worked_examples

logger = logging.getLogger(__name__)

BRUTE_FORCE_TOLERANCE = 1e-9


def setup_logging(verbose=False):
    """Configure root logging once; logs go to stderr"""
    level = logging.DEBUG if verbose else getattr(logging, LOGGING_CONFIG['level'], logging.INFO)
    logging.basicConfig(level=level, format=LOGGING_CONFIG['format'], stream=sys.stderr)


def create_parser():
    """Create and configure the argument parser"""
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument(
        '--verbose', '-v',
        action='store_true',
        help='Debug logging and tracebacks on error'
    )
    common.add_argument(
        '--output', '-o',
        choices=['console', 'json', 'rich'],
        default='console',
        help='Output format (default: console)'
    )

    parser = argparse.ArgumentParser(
        description="Private read-update-write simulator for top-r sparse federated learning",
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog="""
Examples:
  %(prog)s simulate --config case1.json --seed 42 --out results/
  %(prog)s leakage-sweep -P 18 --selected 3 --segments 1,2,3,6,9 --epsilon 1.0
  %(prog)s costs --config case2.json --case 2
  %(prog)s verify-examples

Exit codes: 0 success, 1 configuration or input error, 2 oracle violation
        """
    )
    subparsers = parser.add_subparsers(dest='command', help='Available commands')

    simulate_parser = subparsers.add_parser('simulate', parents=[common], help='Run the protocol simulation')
    simulate_parser.add_argument('--config', required=True, help='JSON simulation config')
    simulate_parser.add_argument('--seed', type=int, help='Override the config seed')
    simulate_parser.add_argument('--out', help='Output directory (default: config output_dir or PRUW_OUTPUT_DIR)')
    simulate_parser.add_argument('--case', type=int, choices=[1, 2], help='Override the scheme case')
    simulate_parser.add_argument(
        '--dump-provisioning',
        action='store_true',
        help='Also write the permutations and per-database reversers'
    )

    sweep_parser = subparsers.add_parser('leakage-sweep', parents=[common], help='Index leakage versus segment count')
    sweep_parser.add_argument('-P', '--subpackets', type=int, default=18, help='Number of subpackets P (default: 18)')
    sweep_parser.add_argument('--selected', type=int, default=3, help='Updated subpackets Pr (default: 3)')
    sweep_parser.add_argument('--segments', type=str, help='Comma-separated B values (default: all divisors of P)')
    sweep_parser.add_argument('--epsilon', type=float, help='Leakage budget in bits; report the largest feasible B')
    sweep_parser.add_argument('--verify', action='store_true', help='Cross-check every row by subset enumeration')
    sweep_parser.add_argument('--out', help='CSV file for the sweep table')

    costs_parser = subparsers.add_parser('costs', parents=[common], help='Closed-form costs and storage for a config')
    costs_parser.add_argument('--config', required=True, help='JSON simulation config')
    costs_parser.add_argument('--case', type=int, choices=[1, 2], help='Override the scheme case')
    costs_parser.add_argument('--out', help='Directory for costs.json')

    subparsers.add_parser('verify-examples', parents=[common], help='Check the reference worked examples')

    return parser


def run_simulate(args, formatter):
    scheme = Scheme.from_case_number(args.case) if args.case else None
    config = load_config(args.config, seed=args.seed, scheme=scheme)
    out_dir = args.out or config.output_dir or OUTPUT_CONFIG['output_dir']

    simulation = Simulation(config, coordinator_init(config))
    reports = simulation.run()
    simulation.write_outputs(out_dir, dump_provisioning=args.dump_provisioning)

    formatter.display({
        'title': f"SIMULATION case {config.scheme.case_number} "
                 f"(N={config.N}, P={config.P}, B={config.B}, seed={config.seed})",
        'columns': ['round', 'users', 'reads checked', 'C_R', 'C_W', 'storage'],
        'rows': [
            [r.round, r.costs.users, r.oracle['reads_checked'], format_fraction(r.costs.reading_cost),
             format_fraction(r.costs.writing_cost), r.costs.storage_symbols]
            for r in reports
        ],
        'notes': [f"All oracle checks passed. Outputs in {out_dir}"],
        'details': [f"round {r.round} downlink (permuted): {r.downlink_pairs}" for r in reports],
    }, verbose=args.verbose)
    return EXIT_CODES['ok']


def _divisors(P):
    return [b for b in range(1, P + 1) if P % b == 0]


def run_leakage_sweep(args, formatter):
    P, Pr = args.subpackets, args.selected
    segments = parse_int_list(args.segments) if args.segments else _divisors(P)
    rows = sweep_leakage(P, Pr, segments)

    if args.verify:
        for row in rows:
            hat, tilde = brute_force_entropies(P, row.B, Pr)
            if abs(hat - row.H_hat_bits) > BRUTE_FORCE_TOLERANCE or abs(tilde - row.H_tilde_bits) > BRUTE_FORCE_TOLERANCE:
                raise OracleViolation(
                    f"B={row.B}: enumeration gives ({hat}, {tilde}), closed form ({row.H_hat_bits}, {row.H_tilde_bits})"
                )

    notes = ["Entropies in bits"]
    if args.epsilon is not None:
        for scheme in (Scheme.CASE1, Scheme.CASE2):
            best = max_segments_within_budget(rows, args.epsilon, scheme)
            notes.append(f"Case {scheme.case_number}: largest B within {args.epsilon} bits = {best}")
    if args.out:
        parent = os.path.dirname(args.out)
        if parent:
            ensure_output_dir(parent)
        sweep_frame(rows).to_csv(args.out, index=False)
        notes.append(f"Table written to {args.out}")

    formatter.display({
        'title': f"INDEX LEAKAGE P={P}, Pr={Pr}",
        'columns': ['B', 'H_hat_bits', 'H_tilde_bits', 'C(P,Pr)', 'storage_case1', 'storage_case2'],
        'rows': [[r.B, r.H_hat_bits, r.H_tilde_bits, r.subsets, r.storage_case1, r.storage_case2] for r in rows],
        'notes': notes,
    }, verbose=args.verbose)
    return EXIT_CODES['ok']


def run_costs(args, formatter):
    scheme = Scheme.from_case_number(args.case) if args.case else None
    config = load_config(args.config, scheme=scheme)
    params = config.to_params()
    formula = formula_costs(params)
    closed_read, closed_write = closed_form_costs(params)
    count, label = storage_complexity(params)

    rows = [
        ['ell', params.ell],
        ['L', params.L],
        ['C_R (real log_q)', formula.reading_real],
        ['C_R (closed form)', closed_read],
        ['C_R (integer symbols)', format_fraction(formula.reading_ceil)],
        ['C_W (real log_q)', formula.writing_real],
        ['C_W (closed form)', closed_write],
        ['C_W (integer symbols)', format_fraction(formula.writing_ceil)],
        ['storage symbols per database', count],
        ['storage complexity', label],
    ]
    if args.out:
        path = write_json(os.path.join(ensure_output_dir(args.out), 'costs.json'), {
            'params': params.to_dict(),
            'reading_real': formula.reading_real,
            'writing_real': formula.writing_real,
            'reading_ceil': str(formula.reading_ceil),
            'writing_ceil': str(formula.writing_ceil),
            'storage_symbols': count,
            'storage_complexity': label,
        })
        logger.info(f"Cost report written to {path}")

    formatter.display({
        'title': f"COSTS case {params.scheme.case_number} (N={params.N}, P={params.P}, B={params.B}, q={params.q})",
        'columns': ['quantity', 'value'],
        'rows': rows,
    }, verbose=args.verbose)
    return EXIT_CODES['ok']


def run_verify_examples(args, formatter):
    results = verify_worked_examples()
    failed = [r for r in results if not r.ok]
    formatter.display({
        'title': "WORKED EXAMPLES",
        'columns': ['check', 'result', 'detail'],
        'rows': [[r.name, r.ok, r.detail] for r in results],
        'notes': [f"{len(results) - len(failed)}/{len(results)} checks passed"],
    }, verbose=args.verbose)
    return EXIT_CODES['oracle_violation'] if failed else EXIT_CODES['ok']


COMMANDS = {
    'simulate': run_simulate,
    'leakage-sweep': run_leakage_sweep,
    'costs': run_costs,
    'verify-examples': run_verify_examples,
}


def _fail(message, code, verbose):
    """Report an error on stderr, with the traceback under --verbose"""
    print(message, file=sys.stderr)
    if verbose:
        traceback.print_exc()
    return code


def main(argv=None):
    """Main entry point; returns the process exit code"""
    parser = create_parser()
    args = parser.parse_args(argv)

    if not args.command:
        parser.print_help()
        return EXIT_CODES['ok']

    setup_logging(args.verbose)
    formatter = get_formatter(args.output)

    try:
        return COMMANDS[args.command](args, formatter)
    except ConfigurationError as e:
        return _fail(f"Error: {e}", EXIT_CODES['config_error'], args.verbose)
    except (ValueError, OSError) as e:
        return _fail(f"Error: {e}", EXIT_CODES['config_error'], args.verbose)
    except OracleViolation as e:
        return _fail(f"Oracle violation: {e}", EXIT_CODES['oracle_violation'], args.verbose)
    except PRUWError as e:
        return _fail(f"Protocol failure: {e}", EXIT_CODES['oracle_violation'], args.verbose)
    except KeyboardInterrupt:
        print("\nOperation cancelled by user.", file=sys.stderr)
        return EXIT_CODES['config_error']


if __name__ == '__main__':
    sys.exit(main())
