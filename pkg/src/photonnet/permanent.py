"""Matrix permanents.

Bosonic overlaps of factored multi-photon terms are permanents of the matrix
of single-photon overlaps.  Small matrices are enumerated, mid-size ones use
Ryser's inclusion-exclusion formula, and matrices with repeated rows/columns
(identical photons, e.g. coherent-state terms) use Glynn's formula summed over
multiplicities so that the cost depends on the number of *distinct* rows.
"""

from __future__ import annotations

import itertools
import math
from typing import Sequence

import numpy as np

from .errors import CapExceeded

ENUMERATION_MAX = 5
RYSER_MAX = 12
REPEATED_MAX_TERMS = 1 << 16


def permanent_enumerate(m: np.ndarray) -> complex:
    n = m.shape[0]
    if n == 0:
        return 1.0 + 0j
    rows = np.arange(n)
    total = 0j
    for perm in itertools.permutations(range(n)):
        total += np.prod(m[rows, perm])
    return complex(total)


def permanent_ryser(m: np.ndarray) -> complex:
    """Ryser's formula, ``(-1)^n sum_S (-1)^|S| prod_i sum_{j in S} m_ij``."""
    n = m.shape[0]
    if n == 0:
        return 1.0 + 0j
    total = 0j
    # Gray-code walk over column subsets keeps each row-sum update O(n).
    row_sums = np.zeros(n, dtype=complex)
    included = [False] * n
    size = 0
    for k in range(1, 1 << n):
        col = (k & -k).bit_length() - 1
        if included[col]:
            row_sums -= m[:, col]
            size -= 1
        else:
            row_sums += m[:, col]
            size += 1
        included[col] = not included[col]
        term = np.prod(row_sums)
        total += -term if size % 2 else term
    return complex(total if n % 2 == 0 else -total)


def permanent(m: np.ndarray) -> complex:
    """Permanent of a square matrix: enumeration up to 5, Ryser up to 12."""
    m = np.asarray(m, dtype=complex)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValueError(f"permanent needs a square matrix, got shape {m.shape}")
    n = m.shape[0]
    if n <= ENUMERATION_MAX:
        return permanent_enumerate(m)
    if n <= RYSER_MAX:
        return permanent_ryser(m)
    raise CapExceeded(f"permanent of a {n}x{n} matrix without repeated rows exceeds the cap of {RYSER_MAX}")


def permanent_repeated(m: np.ndarray, row_mult: Sequence[int], col_mult: Sequence[int]) -> complex:
    """Permanent of the matrix obtained by repeating row ``i`` ``row_mult[i]`` times
    and column ``j`` ``col_mult[j]`` times.

    Uses Glynn's formula with the sign vector summed per group of identical rows.
    """
    m = np.asarray(m, dtype=complex)
    row_mult = [int(r) for r in row_mult]
    col_mult = [int(c) for c in col_mult]
    n = sum(row_mult)
    if n != sum(col_mult):
        raise ValueError("row and column multiplicities must have equal totals")
    if n == 0:
        return 1.0 + 0j
    keep_r = [i for i, r in enumerate(row_mult) if r > 0]
    keep_c = [j for j, c in enumerate(col_mult) if c > 0]
    m = m[np.ix_(keep_r, keep_c)]
    row_mult = [row_mult[i] for i in keep_r]
    col_mult = np.array([col_mult[j] for j in keep_c])

    if n <= ENUMERATION_MAX or (all(r == 1 for r in row_mult) and all(c == 1 for c in col_mult)):
        expanded = np.repeat(np.repeat(m, row_mult, axis=0), col_mult, axis=1)
        return permanent(expanded)
    if m.shape[0] == 1 and m.shape[1] == 1:
        return complex(math.factorial(n) * m[0, 0] ** n)

    # Glynn: per = 2^{1-n} sum_delta (prod delta) prod_j (sum_i delta_i m_ij)^{s_j},
    # with delta_1 fixed to +1.  For a group of r identical rows with t minus
    # signs the contribution is C(r, t) (-1)^t (r - 2t) m_i.
    free = [row_mult[0] - 1] + row_mult[1:]
    n_terms = math.prod(r + 1 for r in free)
    if n_terms > REPEATED_MAX_TERMS:
        raise CapExceeded(
            f"repeated-row permanent needs {n_terms} Glynn terms, cap is {REPEATED_MAX_TERMS}"
        )
    mults = np.array(row_mult)
    total = 0j
    for minus in itertools.product(*(range(r + 1) for r in free)):
        t = np.array(minus)
        coeff = 1
        for r, k in zip(free, minus):
            coeff *= math.comb(r, k) * (-1) ** k
        net = mults - 2 * t
        col_sums = net @ m
        total += coeff * np.prod(col_sums**col_mult)
    return complex(total / 2 ** (n - 1))
