"""
Shared fixtures for the simulator tests
"""

import os
import sys
from fractions import Fraction

import numpy as np
import pytest

# Add the parent directory to the path so we can import the modules
sys.path.insert(0, os.path.join(os.path.dirname(__file__), '..'))

from coded_storage import Scheme, SystemParams


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture
def case1_params():
    """N=4 (ell=1), 15 subpackets in 3 segments"""
    return SystemParams(N=4, P=15, B=3, scheme=Scheme.CASE1, r=Fraction(4, 15), r_prime=Fraction(2, 15))


@pytest.fixture
def case2_params():
    """N=6 (ell=1), 12 subpackets in 3 segments"""
    return SystemParams(N=6, P=12, B=3, scheme=Scheme.CASE2, r=Fraction(1, 4), r_prime=Fraction(1, 6))


@pytest.fixture
def case1_ell2_params():
    """N=7 (ell=2), 12 subpackets in 4 segments"""
    return SystemParams(N=7, P=12, B=4, scheme=Scheme.CASE1, r=Fraction(1, 4), r_prime=Fraction(1, 6))


@pytest.fixture
def case2_ell2_params():
    """N=11 (ell=2), 12 subpackets in 2 segments"""
    return SystemParams(N=11, P=12, B=2, scheme=Scheme.CASE2, r=Fraction(1, 4), r_prime=Fraction(1, 6))


@pytest.fixture(params=['case1', 'case1_ell2', 'case2', 'case2_ell2'])
def any_params(request):
    """Every reference parameter set, both schemes and ell in {1, 2}"""
    return request.getfixturevalue(f'{request.param}_params')


@pytest.fixture
def make_config():
    """Builder for a small valid simulation config mapping"""
    def config_dict(**overrides):
        data = {
            'scheme': 'case1', 'N': 4, 'P': 12, 'B': 3, 'r': '1/4', 'r_prime': '1/6',
            'users_per_round': 2, 'rounds': 2, 'seed': 7,
        }
        data.update(overrides)
        return data
    return config_dict
