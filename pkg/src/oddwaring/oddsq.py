"""Sums of odd squares: the rank-one case.

A positive integer M is a sum of r odd squares only if r == M (mod 8) and
r <= M.  For r >= 3 those conditions are also sufficient (three odd squares
cover every M == 3 (mod 8), pad with ones), so only r = 1 and r = 2 need
arithmetic.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from math import isqrt

__all__ = [
    "OddSquareDecomposition",
    "is_sum_of_three_squares",
    "is_sum_of_two_squares",
    "decompose_odd_squares",
    "min_odd_squares",
    "odd_square_feasible",
]


@dataclass(frozen=True)
class OddSquareDecomposition:
    target: int
    parts: tuple[int, ...]

    def __post_init__(self):
        if sum(t * t for t in self.parts) != self.target:
            raise ValueError("parts do not square-sum to target")
        if any(t < 1 or t % 2 == 0 for t in self.parts):
            raise ValueError("parts must be positive odd integers")

    @property
    def r(self) -> int:
        return len(self.parts)


def is_sum_of_three_squares(m: int) -> bool:
    """Legendre: m is a sum of three squares unless m = 4^a (8b + 7)."""
    if m < 0:
        return False
    if m == 0:
        return True
    while m % 4 == 0:
        m //= 4
    return m % 8 != 7


@lru_cache(maxsize=65536)
def is_sum_of_two_squares(m: int) -> bool:
    """Trial-division factorization; every prime 3 (mod 4) must occur to an even power."""
    if m < 0:
        return False
    if m < 3:
        return True
    while m % 2 == 0:
        m //= 2
    p = 3
    while p * p <= m:
        if m % p == 0:
            e = 0
            while m % p == 0:
                m //= p
                e += 1
            if p % 4 == 3 and e % 2:
                return False
        p += 2
    return m % 4 != 3


def odd_square_feasible(m: int, r: int) -> bool:
    """Is m a sum of exactly r odd squares (r >= 0)?"""
    if r == 0:
        return m == 0
    if m < r or (m - r) % 8:
        return False
    if r == 1:
        s = isqrt(m)
        return s * s == m
    if r == 2:
        return is_sum_of_two_squares(m)
    return True


def decompose_odd_squares(m: int, r: int) -> OddSquareDecomposition | None:
    """Lexicographically greatest descending list of r odd parts, or None.

    Greedy on the largest part is exact: if some decomposition has a part
    larger than the chosen t1, that part would itself have been a feasible
    first choice.
    """
    if m < 1 or r < 1:
        raise ValueError("m and r must be positive")
    if not odd_square_feasible(m, r):
        return None
    parts = []
    rest, left = m, r
    while left:
        t = isqrt(rest - (left - 1))
        if t % 2 == 0:
            t -= 1
        while t >= 1 and not odd_square_feasible(rest - t * t, left - 1):
            t -= 2
        if t < 1:  # pragma: no cover - feasibility was established above
            raise AssertionError("greedy descent failed on a feasible instance")
        parts.append(t)
        rest -= t * t
        left -= 1
    return OddSquareDecomposition(m, tuple(parts))


def min_odd_squares(m: int) -> int:
    if m < 1:
        raise ValueError("m must be positive")
    k = m % 8 or 8
    if odd_square_feasible(m, k):
        return k
    # only k = 1 (m not a square) or k = 2 (m not a sum of two squares) get here
    return k + 8
