"""Growth bounds for the odd-square number and the diagonal splitting identity.

All growth quantities are evaluated in double precision.  Each has a ``log_``
twin that stays finite; the direct form raises BoundOverflow instead of
returning inf.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

from .oddsq import min_odd_squares

__all__ = [
    "BoundOverflow",
    "BoundParams",
    "hermite_sigma",
    "alpha_bar",
    "log_alpha_bar",
    "c_bar",
    "log_c_bar",
    "G",
    "log_G",
    "ChainStep",
    "upper_bound_chain",
    "envelope_log_ratio",
    "envelope_threshold",
    "SplitDecomposition",
    "SplitConditionError",
    "split_decompose",
]

_SQRT_GROWTH = 4 + 4 * math.sqrt(2)  # multiplies sqrt(n/2); equals (4 + 2 sqrt 2) sqrt n


class BoundOverflow(OverflowError):
    pass


@dataclass(frozen=True)
class BoundParams:
    n: int
    D: float = 1.0
    epsilon: float = 1.0

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("n must be >= 1")
        if not self.D >= 1:
            raise ValueError("D must be >= 1")
        if not self.epsilon > 0:
            raise ValueError("epsilon must be positive")


def _exp(x: float) -> float:
    try:
        v = math.exp(x)
    except OverflowError:
        v = math.inf
    if math.isinf(v):
        raise BoundOverflow(f"exp({x:.6g}) overflows a double; use the log_ form")
    return v


def _check_D(D: float) -> None:
    if not D >= 1:
        raise ValueError("D must be >= 1")


def hermite_sigma(k: int) -> float:
    """4/pi * Gamma(k/2 + 1)^(2/k)."""
    if k < 2:
        raise ValueError("k must be >= 2")
    return _exp(math.log(4 / math.pi) + (2 / k) * math.lgamma(k / 2 + 1))


def log_alpha_bar(n: int) -> float:
    if n < 1:
        raise ValueError("n must be >= 1")
    L = math.log(n + 1)
    return L + L * L


def alpha_bar(n: int) -> float:
    return _exp(log_alpha_bar(n))


def log_c_bar(m: float, D: float = 1.0) -> float:
    if m < 0:
        raise ValueError("m must be >= 0")
    _check_D(D)
    return math.log(D) + math.sqrt(2 * m)


def c_bar(m: float, D: float = 1.0) -> float:
    return _exp(log_c_bar(m, D))


def log_G(n: int, D: float = 1.0) -> float:
    if n < 1:
        raise ValueError("n must be >= 1")
    _check_D(D)
    L = math.log(n + 1)
    return (math.log(144) + 6 * math.log(D) + 12 * math.log(n)
            + 4 * (L + L * L) + _SQRT_GROWTH * math.sqrt(n / 2))


def G(n: int, D: float = 1.0) -> float:
    return _exp(log_G(n, D))


def _logaddexp(a: float, b: float) -> float:
    hi, lo = (a, b) if a >= b else (b, a)
    return hi + math.log1p(math.exp(lo - hi))


@dataclass(frozen=True)
class ChainStep:
    n: int
    log_chain: float
    log_closed_form: float  # log(n G(n))

    @property
    def chain(self) -> float | None:
        """Direct value, or None when it does not fit in a double."""
        try:
            return _exp(self.log_chain)
        except BoundOverflow:
            return None

    @property
    def closed_form(self) -> float | None:
        try:
            return _exp(self.log_closed_form)
        except BoundOverflow:
            return None

    @property
    def within_closed_form(self) -> bool:
        return self.log_chain <= self.log_closed_form + 1e-12

    def to_json(self) -> dict:
        return {
            "n": self.n,
            "chain": self.chain,
            "log_chain": self.log_chain,
            "closed_form": self.closed_form,
            "log_closed_form": self.log_closed_form,
            "log_space": self.chain is None or self.closed_form is None,
            "within_closed_form": self.within_closed_form,
        }


def upper_bound_chain(n: int, D: float = 1.0) -> list[ChainStep]:
    """Iterate g(m) <= max(g(m-1) + G(m), 3m^2 - 3m + 11) from g(2) = 12 up to m = n.

    Carried in log space so large n never overflow.
    """
    if n < 3:
        raise ValueError("the recursion starts at n = 3")
    log_g = math.log(12)
    out = []
    for m in range(3, n + 1):
        lg = log_G(m, D)
        log_g = max(_logaddexp(log_g, lg), math.log(3 * m * m - 3 * m + 11))
        out.append(ChainStep(m, log_g, math.log(m) + lg))
    return out


def envelope_log_ratio(n: int, D: float = 1.0, epsilon: float = 1.0) -> float:
    """log( n G(n) / exp((4 + 2 sqrt 2 + eps) sqrt n) ).

    The exponential parts cancel exactly, leaving the polynomial prefactor
    against exp(eps sqrt n); the ratio tends to -inf for every eps > 0.
    """
    if epsilon <= 0:
        raise ValueError("epsilon must be positive")
    return math.log(n) + log_G(n, D) - (4 + 2 * math.sqrt(2) + epsilon) * math.sqrt(n)


def envelope_threshold(D: float = 1.0, epsilon: float = 1.0) -> int:
    """Smallest n0 such that n G(n) <= exp((4 + 2 sqrt 2 + eps) sqrt n) for all n >= n0.

    The log ratio is concave in s = sqrt(n) once n >= 2, so after it turns
    negative on its decreasing branch it stays negative.
    """
    f = lambda n: envelope_log_ratio(n, D, epsilon)
    hi = 2
    while not (f(hi) <= 0 and f(hi + 1) < f(hi)):
        hi *= 2
        if hi > 2 ** 200:
            raise BoundOverflow("envelope threshold beyond search range")
    lo = hi // 2
    # f is positive somewhere below hi on the decreasing branch; bisect the crossing
    while lo + 1 < hi:
        mid = (lo + hi) // 2
        if f(mid) <= 0 and f(mid + 1) < f(mid):
            hi = mid
        else:
            lo = mid
    return hi


# --- splitting a large diagonal plus a small perturbation ---------------------------


class SplitConditionError(ValueError):
    pass


@dataclass(frozen=True)
class SplitDecomposition:
    n: int
    n0: int
    t: tuple[tuple[int | None, ...], ...]  # t[i][j] for i != j, None on the diagonal
    r0: int
    summands: tuple[tuple[tuple[int, ...], ...], ...]

    @property
    def pair_blocks(self) -> int:
        return (self.n - 1) * (self.n - 2) // 2

    @property
    def row_blocks(self) -> int:
        return self.n - 1

    @property
    def k0(self) -> int:
        return 0 if self.r0 == 0 else min_odd_squares(self.r0)

    @property
    def implied_size(self) -> int:
        """6 per pairwise block, 5 per block on row n0, plus the residual's odd-square count."""
        return 6 * self.pair_blocks + 5 * self.row_blocks + self.k0

    def total(self) -> list[list[int]]:
        acc = [[0] * self.n for _ in range(self.n)]
        for s in self.summands:
            for i in range(self.n):
                for j in range(self.n):
                    acc[i][j] += s[i][j]
        return acc

    def to_json(self) -> dict:
        return {
            "n": self.n,
            "n0": self.n0 + 1,
            "t": [list(row) for row in self.t],
            "r0": self.r0,
            "k0": self.k0,
            "implied_size": self.implied_size,
            "summands": [[list(r) for r in s] for s in self.summands],
        }


def _check_split_conditions(a: Sequence[int], s: Sequence[Sequence[int]], n0: int) -> None:
    n = len(a)
    if n < 3:
        raise SplitConditionError("n must be >= 3")
    if not 0 <= n0 < n:
        raise SplitConditionError("n0 out of range")
    if len(s) != n or any(len(r) != n for r in s):
        raise SplitConditionError("S must be n x n")
    if any(s[i][j] != s[j][i] for i in range(n) for j in range(n)):
        raise SplitConditionError("S must be symmetric")
    for i in range(n):
        if i != n0 and (a[i] + s[i][i] - s[i][n0]) % 2:
            raise SplitConditionError(f"condition (i) fails at i={i + 1}: a_i + s_ii and s_(i,n0) differ in parity")
    floor_a = 2 * n * (n - 1) * (3 * n + 2)
    for i in range(n):
        if a[i] <= floor_a:
            raise SplitConditionError(f"condition (ii) fails at i={i + 1}: a_i = {a[i]} <= {floor_a}")
    for i in range(n):
        for j in range(i, n):
            if a[i] * a[j] < 4 * n * n * s[i][j] ** 2:
                raise SplitConditionError(f"condition (iii) fails at ({i + 1},{j + 1})")


def split_decompose(a: Sequence[int], s: Sequence[Sequence[int]], n0: int) -> SplitDecomposition:
    """Write A + S (A = diag(a)) as rank-two blocks plus a residual on the n0 diagonal.

    ``n0`` is 0-based.  For i != n0 the entry a_i + s_ii is spread over t_ij
    (even for j != n0, parity of s_(i,n0) for j = n0) as evenly as parity
    allows.  The n0 entry keeps 6 for each pairwise block and is spread over
    t_(n0,j) congruent to 5 mod 8, the rest going to r0 in [0, 7(n-1)].
    """
    a = [int(x) for x in a]
    s = [[int(x) for x in row] for row in s]
    _check_split_conditions(a, s, n0)
    n = len(a)
    t: list[list[int | None]] = [[None] * n for _ in range(n)]

    for i in range(n):
        if i == n0:
            continue
        b = a[i] + s[i][i]
        base = 2 * ((b - 1) // (2 * (n - 1)))
        others = [j for j in range(n) if j != i]
        for j in others:
            t[i][j] = base
        if (base - s[i][n0]) % 2:
            t[i][n0] += 1
        rem = b - sum(t[i][j] for j in others)
        if rem < 0 or rem % 2:
            raise AssertionError("row budget for t_ij inconsistent")
        idx = 0
        while rem:
            t[i][others[idx % len(others)]] += 2
            rem -= 2
            idx += 1

    b0 = a[n0] + s[n0][n0] - 3 * (n - 1) * (n - 2)
    per = b0 // (n - 1)
    tau = per - ((per - 5) % 8)
    row = [j for j in range(n) if j != n0]
    for j in row:
        t[n0][j] = tau
    r0 = b0 - (n - 1) * tau
    idx = 0
    while r0 > 7 * (n - 1):
        t[n0][row[idx % len(row)]] += 8
        r0 -= 8
        idx += 1
    if r0 < 0:
        raise AssertionError("negative residual")

    def zero():
        return [[0] * n for _ in range(n)]

    summands = []
    for i in range(n):
        for j in range(i + 1, n):
            if n0 in (i, j):
                continue
            blk = zero()
            blk[n0][n0] = 6
            blk[i][i] = t[i][j]
            blk[j][j] = t[j][i]
            blk[i][j] = blk[j][i] = s[i][j]
            summands.append(blk)
    for j in row:
        blk = zero()
        blk[n0][n0] = t[n0][j]
        blk[j][j] = t[j][n0]
        blk[n0][j] = blk[j][n0] = s[n0][j]
        summands.append(blk)
    res = zero()
    res[n0][n0] = r0
    summands.append(res)

    dec = SplitDecomposition(
        n, n0, tuple(tuple(r) for r in t), r0, tuple(tuple(tuple(r) for r in m) for m in summands)
    )
    target = [[a[i] * (i == j) + s[i][j] for j in range(n)] for i in range(n)]
    if dec.total() != target:
        raise AssertionError("decomposition does not add up to A + S")
    for i in range(n):
        for j in range(i + 1, n):
            if t[i][j] * t[j][i] <= s[i][j] ** 2:
                raise AssertionError(f"block ({i + 1},{j + 1}) not positive definite")
    return dec
