"""
Configuration settings for the segmented PRUW simulator
"""

import os

from dotenv import load_dotenv

# Load environment variables
load_dotenv()

# Field configuration
FIELD_CONFIG = {
    'default_modulus': (1 << 61) - 1,  # Mersenne prime, fast reduction
    'max_modulus': (1 << 63) - 1,  # numpy int64 draws and 8-byte snapshot residues
    'residue_bytes': 8,  # snapshot width per residue
    'solver_cache_size': 64,  # inverted power matrices kept per process
}

# Simulation defaults
SIMULATION_CONFIG = {
    'quantization_scale': 1 << 16,
    'heavy_tail_dof': 2.5,  # Student-t degrees of freedom for pseudo-gradients
    'score_distributions': ('uniform', 'heavy_tailed'),
    'default_score_distribution': 'heavy_tailed',
    'max_seed': (1 << 64) - 1,
}

# Leakage analysis
LEAKAGE_CONFIG = {
    'brute_force_limit': 10 ** 7,  # max C(P, Pr) enumerated by the oracle
    'budget_tolerance': 1e-12,
}

# Cost accounting
ACCOUNTING_CONFIG = {
    'gap_tolerance': 1e-12,  # float slack when comparing real-valued log_q costs
}

# Output formatting
OUTPUT_CONFIG = {
    'json_indent': 2,
    'float_precision': 6,
    'console_width': 80,
    'output_dir': os.getenv('PRUW_OUTPUT_DIR', 'pruw_output'),
    'round_reports_file': 'round_reports.json',
    'costs_file': 'costs.csv',
    'traces_dir': 'traces',
    'snapshot_file': 'storage_snapshot.bin',
    'provisioning_dir': 'provisioning',
}

LOGGING_CONFIG = {
    'level': os.getenv('PRUW_LOG_LEVEL', 'INFO').upper(),
    'format': '%(asctime)s - %(levelname)s - %(message)s',
}

# Process exit codes for the CLI
EXIT_CODES = {
    'ok': 0,
    'config_error': 1,
    'oracle_violation': 2,
}
