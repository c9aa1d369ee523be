"""Shared independent oracles for the test suite.

Everything in here is deliberately brute force: permutation and partition
enumeration, exact Fraction-polynomial integration, and literal kron
products.  None of it calls back into the package's own closed forms.
"""

import itertools
import math
from fractions import Fraction

import numpy as np

SIGMA = {
    "I": np.eye(2, dtype=complex),
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "Z": np.array([[1, 0], [0, -1]], dtype=complex),
}


def kron_oracle(label: str, coeff: complex = 1.0) -> np.ndarray:
    mat = np.array([[coeff]], dtype=complex)
    for ch in label:
        mat = np.kron(SIGMA[ch], mat)
    return mat


def op_oracle(op) -> np.ndarray:
    dim = 1 << op.n_sites
    out = np.zeros((dim, dim), dtype=complex)
    for term in op:
        out += kron_oracle(term.label(), term.coeff)
    return out


def count_permutations_with_cycles(n: int, k: int) -> int:
    count = 0
    for perm in itertools.permutations(range(n)):
        seen = [False] * n
        cycles = 0
        for start in range(n):
            if seen[start]:
                continue
            cycles += 1
            j = start
            while not seen[j]:
                seen[j] = True
                j = perm[j]
        if cycles == k:
            count += 1
    return count


def set_partitions(items: list):
    if not items:
        yield []
        return
    first, rest = items[0], items[1:]
    for part in set_partitions(rest):
        for i in range(len(part)):
            yield part[:i] + [[first] + part[i]] + part[i + 1:]
        yield [[first]] + part


def count_set_partitions(n: int, k: int) -> int:
    return sum(1 for p in set_partitions(list(range(n))) if len(p) == k)


def recurrence_coeffs(kind: int, k_max: int) -> list[list[Fraction]]:
    """Exact coefficients of the comparison polynomials by integrating the
    defining recurrences term by term."""
    rows = [[Fraction(1)], [Fraction(0), Fraction(1)]]
    for k in range(2, k_max + 1):
        integrand = [Fraction(0)] * k
        for m in range(1, k + 1):
            weight = Fraction(math.comb(k, m)) * (
                Fraction(math.factorial(m - 1)) if kind == 1 else Fraction(1)
            )
            prev = rows[k - m]
            for j, c in enumerate(prev):
                integrand[j] += weight * c
        row = [Fraction(0)] * (k + 1)
        for j, c in enumerate(integrand):
            row[j + 1] = c / (j + 1)
        rows.append(row)
    return rows
