"""Filters for representability by sums of odd squares.

Necessary side: the parity condition (i), r == Q(w) (mod 8), r <= Q(w) and
r <= r_{K,w}.  Sufficient side: removing a composition of k (the residue of
Q(w) mod 8, taken in 1..8) from the w-diagonal entries keeps the form
positive definite, which gives a representation by Sigma_{k+8}.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction
from math import isqrt
from typing import Iterator

from .core import CosetSpec, GramMatrix, determinant, is_positive_definite, parity_condition_holds, quadratic_value

__all__ = [
    "NecessaryReport",
    "SplitCertificate",
    "MINKOWSKI_C",
    "residue_k",
    "r_kw",
    "necessary_conditions",
    "minkowski_lower_bound_ok",
    "compositions",
    "find_split",
    "congruence_filter",
    "coset_min_norm",
]

# Q(x) >= C(n) * m_ii * x_i^2 for a reduced form of rank n
MINKOWSKI_C = {2: Fraction(3, 4), 3: Fraction(1, 2), 4: Fraction(1, 5)}


def residue_k(q_w: int) -> int:
    """Q(w) mod 8 taken in 1..8."""
    return q_w % 8 or 8


def r_kw(coset: CosetSpec) -> int:
    """Largest integer <= sum of Q(d_i) over w that is congruent to Q(w) mod 8.

    May be zero or negative, meaning no admissible r exists.
    """
    cap = sum(coset.gram.rows[i][i] for i in coset.w)
    return cap - ((cap - coset.q_w) % 8)


def coset_min_norm(coset: CosetSpec) -> int:
    """Smallest Q(x) over x in w + 2K.

    Every r with a representation satisfies r <= this value, since each odd
    square is at least 1.  Exact: scans the box Q(x) <= Q(w), where
    x_i^2 <= Q(w) * (M^-1)_ii.
    """
    rows = coset.gram.rows
    n = coset.n
    det = determinant(rows)
    q = coset.q_w
    wv = coset.w_vector()
    ranges = []
    for i in range(n):
        minor = [[rows[a][b] for b in range(n) if b != i] for a in range(n) if a != i]
        adj = determinant(minor) if n > 1 else 1
        top = isqrt(q * adj // det)
        lo = -top if (top - wv[i]) % 2 == 0 else -top + 1
        ranges.append(range(lo, top + 1, 2))
    return min(quadratic_value(rows, x) for x in itertools.product(*ranges))


@dataclass(frozen=True)
class NecessaryReport:
    parity_ok: bool
    q_w: int
    r_cap_qw: int
    r_kw: int
    admissible_r: tuple[int, ...]

    def to_json(self) -> dict:
        return {
            "parity_ok": self.parity_ok,
            "q_w": self.q_w,
            "r_cap_qw": self.r_cap_qw,
            "r_kw": self.r_kw,
            "admissible_r": list(self.admissible_r),
        }


def necessary_conditions(coset: CosetSpec) -> NecessaryReport:
    q = coset.q_w
    rk = r_kw(coset)
    cap = min(q, rk)
    start = residue_k(q)
    admissible = tuple(range(start, cap + 1, 8)) if cap >= 1 else ()
    return NecessaryReport(
        parity_ok=parity_condition_holds(coset.gram.rows, coset.w),
        q_w=q,
        r_cap_qw=q,
        r_kw=rk,
        admissible_r=admissible,
    )


def congruence_filter(q_w: int, r: int) -> bool:
    """The 2-adic obstruction as a filter: r must be congruent to Q(w) mod 8."""
    if isinstance(q_w, CosetSpec):
        q_w = q_w.q_w
    return (r - q_w) % 8 == 0


def minkowski_lower_bound_ok(gram: GramMatrix | int, i: int, k: int) -> bool:
    """C(n) * m_ii > k, so that Q(x) - k x_i^2 stays positive definite.

    ``gram`` may also be passed as the rank n, with ``i`` then read as the
    diagonal value m_ii.
    """
    if isinstance(gram, GramMatrix):
        n, m_ii = gram.n, gram.rows[i][i]
    else:
        n, m_ii = gram, i
    if n not in MINKOWSKI_C:
        raise ValueError(f"no Minkowski constant for n={n}")
    if not 1 <= k <= 8:
        raise ValueError("k must lie in 1..8")
    return MINKOWSKI_C[n] * m_ii > k


def compositions(k: int, t: int) -> Iterator[tuple[int, ...]]:
    """Compositions of k into t non-negative parts, lexicographically increasing."""
    if t == 1:
        yield (k,)
        return
    for first in range(k + 1):
        for rest in compositions(k - first, t - 1):
            yield (first,) + rest


@dataclass(frozen=True)
class SplitCertificate:
    k: int
    w: tuple[int, ...]
    parts: tuple[int, ...]
    reduced: GramMatrix

    def to_json(self) -> dict:
        return {
            "k": self.k,
            "w": [i + 1 for i in self.w],
            "parts": list(self.parts),
            "reduced": self.reduced.to_json(),
            "r": self.k + 8,
        }


def find_split(coset: CosetSpec) -> SplitCertificate | None:
    """First composition (lexicographically smallest) of k over w keeping M - diag positive definite."""
    q = coset.q_w
    if q <= 8:
        raise ValueError("find_split requires Q(w) > 8")
    k = residue_k(q)
    n = coset.n
    m = coset.gram.rows
    for parts in compositions(k, len(coset.w)):
        amounts = [0] * n
        for i, p in zip(coset.w, parts):
            amounts[i] = p
        rows = [[m[a][b] - (amounts[a] if a == b else 0) for b in range(n)] for a in range(n)]
        if is_positive_definite(rows):
            return SplitCertificate(k, coset.w, parts, GramMatrix(tuple(tuple(r) for r in rows)))
    return None
