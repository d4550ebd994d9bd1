"""
Prime-field arithmetic and the power-system solver used for encoding/decoding.

Field elements are plain Python ints holding residues in [0, q). Python ints
keep products of two 61-bit residues exact, so nothing in the protocol path
ever touches floating point.
"""

from dataclasses import dataclass, field as dataclass_field
from functools import lru_cache
from typing import List, Optional, Sequence, Tuple

import numpy as np

from config import FIELD_CONFIG
from exceptions import (
    ConfigurationError,
    DimensionError,
    FieldArithmeticError,
    SingularMatrixError,
    UnderdeterminedError,
)

# Deterministic Miller-Rabin bases, exact for n < 3.3e24
_MR_BASES = (2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37)


def is_prime(n: int) -> bool:
    """
    Deterministic primality test for any modulus the simulator accepts

    Args:
        n: Candidate modulus

    Returns:
        bool: True if n is prime
    """
    if n < 2:
        return False
    for p in _MR_BASES:
        if n % p == 0:
            return n == p
    d, s = n - 1, 0
    while d % 2 == 0:
        d //= 2
        s += 1
    for a in _MR_BASES:
        x = pow(a, d, n)
        if x in (1, n - 1):
            continue
        for _ in range(s - 1):
            x = x * x % n
            if x == n - 1:
                break
        else:
            return False
    return True


@dataclass(frozen=True)
class PrimeField:
    """GF(q) for prime q; all operands are residues in [0, q)"""

    q: int = FIELD_CONFIG['default_modulus']

    def __post_init__(self):
        if not is_prime(self.q):
            raise ConfigurationError(f"Field modulus must be prime, got q={self.q}")

    def add(self, a: int, b: int) -> int:
        return (a + b) % self.q

    def sub(self, a: int, b: int) -> int:
        return (a - b) % self.q

    def neg(self, a: int) -> int:
        return -a % self.q

    def mul(self, a: int, b: int) -> int:
        return a * b % self.q

    def inv(self, a: int) -> int:
        """Multiplicative inverse via Fermat's little theorem"""
        if a % self.q == 0:
            raise FieldArithmeticError(f"Cannot invert zero in GF({self.q})")
        return pow(a, self.q - 2, self.q)

    def pow(self, a: int, k: int) -> int:
        """a^k for signed k; negative exponents go through the inverse"""
        if k < 0:
            return pow(self.inv(a), -k, self.q)
        return pow(a, k, self.q)

    def dot(self, u: Sequence[int], v: Sequence[int]) -> int:
        if len(u) != len(v):
            raise DimensionError(f"Inner product of lengths {len(u)} and {len(v)}")
        return sum(a * b for a, b in zip(u, v)) % self.q

    def scale(self, c: int, v: Sequence[int]) -> List[int]:
        return [c * a % self.q for a in v]

    def add_vectors(self, u: Sequence[int], v: Sequence[int]) -> List[int]:
        if len(u) != len(v):
            raise DimensionError(f"Vector sum of lengths {len(u)} and {len(v)}")
        return [(a + b) % self.q for a, b in zip(u, v)]

    def matvec(self, matrix: Sequence[Sequence[int]], v: Sequence[int]) -> List[int]:
        return [self.dot(row, v) for row in matrix]

    def random_element(self, rng: np.random.Generator) -> int:
        return int(rng.integers(0, self.q))

    def random_vector(self, rng: np.random.Generator, size: int) -> List[int]:
        if size == 0:
            return []
        return [int(x) for x in rng.integers(0, self.q, size=size)]

    def random_matrix(self, rng: np.random.Generator, rows: int, cols: int) -> List[List[int]]:
        return [self.random_vector(rng, cols) for _ in range(rows)]


@dataclass(frozen=True)
class EvaluationPoints:
    """Globally known distinct nonzero constants alpha_1..alpha_N"""

    field: PrimeField
    alphas: tuple = dataclass_field(default_factory=tuple)

    def __post_init__(self):
        values = tuple(int(a) for a in self.alphas)
        object.__setattr__(self, 'alphas', values)
        if len(values) >= self.field.q:
            raise ConfigurationError(
                f"Need N < q distinct evaluation points, got N={len(values)}, q={self.field.q}"
            )
        if any(a % self.field.q == 0 for a in values):
            raise ConfigurationError("Evaluation points must be nonzero in the field")
        if any(a < 0 or a >= self.field.q for a in values):
            raise ConfigurationError("Evaluation points must be residues in [0, q)")
        if len(set(values)) != len(values):
            raise ConfigurationError(f"Evaluation points must be distinct, got {values}")

    @classmethod
    def default(cls, field_: PrimeField, count: int) -> 'EvaluationPoints':
        """alpha_n = n for n = 1..N"""
        return cls(field_, tuple(range(1, count + 1)))

    def __len__(self):
        return len(self.alphas)

    def __getitem__(self, index):
        return self.alphas[index]

    def __iter__(self):
        return iter(self.alphas)


def evaluate_power_series(field_: PrimeField, coefficients: Sequence[int],
                          alpha: int, low_deg: int) -> int:
    """
    Evaluate sum_k c_k * alpha^k for k = low_deg .. low_deg + len(c) - 1

    Args:
        field_: The prime field
        coefficients: c_{low_deg}, ..., c_{high_deg}
        alpha: Evaluation point (nonzero if low_deg < 0)
        low_deg: Exponent of the first coefficient, may be negative

    Returns:
        int: The evaluated residue
    """
    q = field_.q
    power = field_.pow(alpha, low_deg)
    total = 0
    for c in coefficients:
        total = (total + c * power) % q
        power = power * alpha % q
    return total


@lru_cache(maxsize=FIELD_CONFIG['solver_cache_size'])
def power_matrix_inverse(q: int, alphas: Tuple[int, ...], low_deg: int,
                         high_deg: int) -> Tuple[Tuple[int, ...], ...]:
    """
    Inverse over GF(q) of the square matrix with rows [alpha^low_deg, ..., alpha^high_deg]

    Cached per (q, alphas, degree range).

    Raises:
        SingularMatrixError: Duplicate or zero evaluation points
    """
    field_ = PrimeField(q)
    size = high_deg - low_deg + 1
    rows = []
    for r, alpha in enumerate(alphas):
        if alpha % q == 0 and low_deg < 0:
            raise SingularMatrixError("Zero evaluation point with negative exponents")
        row = []
        power = field_.pow(alpha, low_deg)
        for _ in range(size):
            row.append(power)
            power = power * alpha % q
        row.extend(1 if c == r else 0 for c in range(size))
        rows.append(row)

    # Gauss-Jordan elimination on [V | I]
    for col in range(size):
        pivot = next((r for r in range(col, size) if rows[r][col]), None)
        if pivot is None:
            raise SingularMatrixError(
                f"Power system is singular (evaluation points {list(alphas)})"
            )
        rows[col], rows[pivot] = rows[pivot], rows[col]
        inv_pivot = field_.inv(rows[col][col])
        rows[col] = [v * inv_pivot % q for v in rows[col]]
        for r in range(size):
            factor = rows[r][col]
            if r != col and factor:
                pivot_row = rows[col]
                rows[r] = [(v - factor * p) % q for v, p in zip(rows[r], pivot_row)]

    return tuple(tuple(row[size:]) for row in rows)


def solve_power_system(field_: PrimeField, answers: Sequence[int], alphas: Sequence[int],
                       low_deg: int, high_deg: int) -> List[int]:
    """
    Solve sum_k c_k alpha_n^k = answers[n] for c_{low_deg..high_deg}

    The system matrix has rows [alpha_n^low_deg, ..., alpha_n^high_deg], one
    row per answering database.

    Args:
        field_: The prime field
        answers: One residue per evaluation point
        alphas: Evaluation points matching the answers (EvaluationPoints or ints)
        low_deg: Lowest exponent (may be negative)
        high_deg: Highest exponent

    Returns:
        list: Coefficients c_{low_deg}, ..., c_{high_deg}

    Raises:
        UnderdeterminedError: Fewer answers than unknowns
        DimensionError: More answers than unknowns or mismatched alphas
        SingularMatrixError: Duplicate or zero evaluation points
    """
    unknowns = high_deg - low_deg + 1
    if unknowns < 1:
        raise DimensionError(f"Empty exponent range [{low_deg}, {high_deg}]")
    if len(answers) != len(alphas):
        raise DimensionError(f"{len(answers)} answers for {len(alphas)} evaluation points")
    if len(answers) < unknowns:
        raise UnderdeterminedError(
            f"{len(answers)} answers cannot determine {unknowns} unknowns "
            f"(exponents {low_deg}..{high_deg})"
        )
    if len(answers) > unknowns:
        raise DimensionError(
            f"Need exactly {unknowns} answers for exponents {low_deg}..{high_deg}, got {len(answers)}"
        )

    q = field_.q
    inverse = power_matrix_inverse(q, tuple(int(a) % q for a in alphas), low_deg, high_deg)
    return field_.matvec(inverse, [a % q for a in answers])


def solve_consistent(field_: PrimeField, answers: Sequence[int], alphas: Sequence[int],
                     low_deg: int, high_deg: int) -> Optional[List[int]]:
    """
    Solve an overdetermined power system and check the spare equations

    Uses the first (high_deg - low_deg + 1) points to solve, then verifies
    the remaining points against the solution.

    Returns:
        list or None: Coefficients if every answer is consistent, else None
    """
    unknowns = high_deg - low_deg + 1
    coefficients = solve_power_system(
        field_, answers[:unknowns], alphas[:unknowns], low_deg, high_deg
    )
    for alpha, answer in zip(alphas[unknowns:], answers[unknowns:]):
        if evaluate_power_series(field_, coefficients, alpha, low_deg) != answer % field_.q:
            return None
    return coefficients


def ceil_log(m: int, q: int) -> int:
    """
    Number of q-ary symbols needed to name one of m values, ceil(log_q m)

    Integer arithmetic only; a single value (m = 1) costs nothing.
    """
    if m < 1:
        raise DimensionError(f"Cannot index an empty range (m={m})")
    symbols, reach = 0, 1
    while reach < m:
        reach *= q
        symbols += 1
    return symbols
