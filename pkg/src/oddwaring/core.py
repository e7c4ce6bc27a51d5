"""Exact integer linear algebra for Gram matrices and half-vector cosets.

Everything here works on Python integers; no floating point is involved.
Indices are 0-based internally and 1-based in the JSON text format.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Callable, Iterator, Sequence

__all__ = [
    "GramMatrix",
    "CosetSpec",
    "ReducedEnumSpec",
    "quadratic_value",
    "is_positive_definite",
    "is_minkowski_reduced",
    "enumerate_reduced",
    "parity_condition_holds",
    "leading_minors",
    "determinant",
    "reduced_entries",
]

MAX_RANK = 5


@dataclass(frozen=True)
class GramMatrix:
    """Symmetric integer matrix, stored as a tuple of row tuples."""

    rows: tuple[tuple[int, ...], ...]

    def __post_init__(self):
        rows = tuple(tuple(int(v) for v in r) for r in self.rows)
        n = len(rows)
        if not 1 <= n <= MAX_RANK:
            raise ValueError(f"rank {n} outside supported range 1..{MAX_RANK}")
        if any(len(r) != n for r in rows):
            raise ValueError("Gram matrix must be square")
        for i in range(n):
            for j in range(i + 1, n):
                if rows[i][j] != rows[j][i]:
                    raise ValueError(f"asymmetric entry at ({i + 1},{j + 1})")
        object.__setattr__(self, "rows", rows)

    @classmethod
    def diag(cls, *d: int) -> "GramMatrix":
        n = len(d)
        return cls(tuple(tuple(d[i] if i == j else 0 for j in range(n)) for i in range(n)))

    @classmethod
    def identity(cls, n: int) -> "GramMatrix":
        return cls.diag(*([1] * n))

    @property
    def n(self) -> int:
        return len(self.rows)

    def __getitem__(self, ij: tuple[int, int]) -> int:
        i, j = ij
        return self.rows[i][j]

    def diagonal(self) -> tuple[int, ...]:
        return tuple(self.rows[i][i] for i in range(self.n))

    def tolist(self) -> list[list[int]]:
        return [list(r) for r in self.rows]

    def minus_diagonal(self, amounts: Sequence[int]) -> "GramMatrix":
        return GramMatrix(
            tuple(
                tuple(v - amounts[i] if i == j else v for j, v in enumerate(r))
                for i, r in enumerate(self.rows)
            )
        )

    def to_json(self) -> dict:
        return {"n": self.n, "m": self.tolist()}

    @classmethod
    def from_json(cls, obj: dict) -> "GramMatrix":
        g = cls(tuple(tuple(r) for r in obj["m"]))
        if "n" in obj and int(obj["n"]) != g.n:
            raise ValueError(f"declared n={obj['n']} but matrix has rank {g.n}")
        return g


@dataclass(frozen=True)
class CosetSpec:
    """A lattice K with Gram matrix ``gram`` and w = sum of the basis vectors in ``w``.

    ``w`` holds 0-based indices; the coset is K + w/2.
    """

    gram: GramMatrix
    w: tuple[int, ...]

    def __post_init__(self):
        w = tuple(int(i) for i in self.w)
        if not w:
            raise ValueError("w index set must be nonempty")
        if any(b <= a for a, b in zip(w, w[1:])):
            raise ValueError("w indices must be strictly increasing")
        if w[0] < 0 or w[-1] >= self.gram.n:
            raise ValueError("w index out of range")
        object.__setattr__(self, "w", w)

    @classmethod
    def of(cls, rows, w1: Sequence[int]) -> "CosetSpec":
        """Build from nested rows and 1-based indices (the convention used in JSON files)."""
        gram = rows if isinstance(rows, GramMatrix) else GramMatrix(tuple(tuple(r) for r in rows))
        return cls(gram, tuple(i - 1 for i in w1))

    @property
    def n(self) -> int:
        return self.gram.n

    @property
    def q_w(self) -> int:
        return sum(self.gram.rows[i][j] for i in self.w for j in self.w)

    def b_w(self, k: int) -> int:
        """B(w, d_k)."""
        return sum(self.gram.rows[i][k] for i in self.w)

    def w_vector(self) -> tuple[int, ...]:
        s = set(self.w)
        return tuple(1 if i in s else 0 for i in range(self.n))

    def to_json(self) -> dict:
        d = self.gram.to_json()
        d["w"] = [i + 1 for i in self.w]
        return d

    @classmethod
    def from_json(cls, obj: dict) -> "CosetSpec":
        gram = GramMatrix.from_json(obj)
        return cls(gram, tuple(int(i) - 1 for i in obj["w"]))

    @classmethod
    def loads(cls, text: str) -> "CosetSpec":
        return cls.from_json(json.loads(text))


def _rows(gram) -> Sequence[Sequence[int]]:
    return gram.rows if isinstance(gram, GramMatrix) else gram


def quadratic_value(gram, x: Sequence[int]) -> int:
    """x^t M x."""
    m = _rows(gram)
    n = len(m)
    if len(x) != n:
        raise ValueError(f"vector of length {len(x)} for rank {n} form")
    total = 0
    for i in range(n):
        xi = x[i]
        if not xi:
            continue
        row = m[i]
        total += xi * xi * row[i]
        for j in range(i + 1, n):
            if x[j]:
                total += 2 * xi * x[j] * row[j]
    return total


def leading_minors(gram) -> list[int]:
    """Leading principal minors, via fraction-free (Bareiss) elimination.

    Without pivoting the k-th Bareiss pivot is exactly the k-th leading minor.
    Elimination stops at the first zero pivot; the remaining minors are then
    computed directly.
    """
    m = [list(r) for r in _rows(gram)]
    n = len(m)
    minors = []
    prev = 1
    for k in range(n):
        pivot = m[k][k]
        minors.append(pivot)
        if pivot == 0:
            for size in range(k + 2, n + 1):
                minors.append(determinant([r[:size] for r in _rows(gram)[:size]]))
            return minors
        for i in range(k + 1, n):
            for j in range(k + 1, n):
                m[i][j] = (m[i][j] * pivot - m[i][k] * m[k][j]) // prev
        prev = pivot
    return minors


def determinant(gram) -> int:
    """Exact determinant by Bareiss elimination with row pivoting."""
    m = [list(r) for r in _rows(gram)]
    n = len(m)
    sign = 1
    prev = 1
    for k in range(n - 1):
        if m[k][k] == 0:
            for i in range(k + 1, n):
                if m[i][k] != 0:
                    m[k], m[i] = m[i], m[k]
                    sign = -sign
                    break
            else:
                return 0
        pivot = m[k][k]
        for i in range(k + 1, n):
            for j in range(k + 1, n):
                m[i][j] = (m[i][j] * pivot - m[i][k] * m[k][j]) // prev
        prev = pivot
    return sign * m[n - 1][n - 1] if n else 1


def is_positive_definite(gram) -> bool:
    """Sylvester's criterion with exact integer minors."""
    m = [list(r) for r in _rows(gram)]
    n = len(m)
    prev = 1
    for k in range(n):
        pivot = m[k][k]
        if pivot <= 0:
            return False
        for i in range(k + 1, n):
            mik = m[i][k]
            row_i = m[i]
            row_k = m[k]
            for j in range(k + 1, n):
                row_i[j] = (row_i[j] * pivot - mik * row_k[j]) // prev
        prev = pivot
    return True


def parity_condition_holds(gram, w: Sequence[int]) -> bool:
    """m_ii == B(w, d_i) (mod 2) for every i; equivalent to Q(k) == B(w,k) (mod 2) on K."""
    m = _rows(gram)
    for i in range(len(m)):
        if (m[i][i] - sum(m[i][j] for j in w)) % 2:
            return False
    return True


# --- Minkowski reduction (n <= 4) -------------------------------------------------
#
# All half-integer bounds are handled in doubled form: "m >= X/2" is written
# "2m >= X" so that everything stays integral.


def _ceil_half(x: int) -> int:
    return -((-x) // 2)


def _m34_window(m11, m22, m33, m12, m13, m14, m23, m24) -> tuple[int, int]:
    lo2 = max(
        -(m22 + m33) - 2 * m23 - 2 * m24,
        -(m22 + m33) + 2 * m23 + 2 * m24,
        -(m11 + m22 + m33) + 2 * (m12 + m13 + m14 - m23 - m24),
        -(m11 + m22 + m33) + 2 * (-m12 + m13 + m14 + m23 + m24),
        # pair (3,4) of the three-index conditions
        -(m11 + m33) + 2 * (m13 + m14),
        -m33,
    )
    hi2 = min(
        (m22 + m33) - 2 * m23 + 2 * m24,
        (m22 + m33) + 2 * m23 - 2 * m24,
        (m11 + m22 + m33) + 2 * (-m12 + m13 - m14 - m23 + m24),
        (m11 + m22 + m33) + 2 * (-m12 - m13 + m14 + m23 - m24),
        m33,
    )
    return _ceil_half(lo2), hi2 // 2


def is_minkowski_reduced(gram) -> bool:
    m = _rows(gram)
    n = len(m)
    if n > 4:
        raise ValueError("Minkowski reduction test implemented for n <= 4 only")
    d = [m[i][i] for i in range(n)]
    if d[0] <= 0 or any(d[i] > d[i + 1] for i in range(n - 1)):
        return False
    for i in range(n):
        for j in range(i + 1, n):
            if abs(2 * m[i][j]) > d[i]:
                return False
    if any(m[0][j] < 0 for j in range(1, n)):
        return False
    for i in range(1, n):
        for j in range(i + 1, n):
            if 2 * m[i][j] < -(d[0] + d[i]) + 2 * (m[0][i] + m[0][j]):
                return False
    if n == 4:
        lo, hi = _m34_window(d[0], d[1], d[2], m[0][1], m[0][2], m[0][3], m[1][2], m[1][3])
        if not lo <= m[2][3] <= hi:
            return False
    return True


@dataclass(frozen=True)
class ReducedEnumSpec:
    n: int
    diag_max: int
    parity_filter: tuple[int, ...] | None = None
    predicates: tuple[Callable[[GramMatrix], bool], ...] = field(default=())

    def __post_init__(self):
        if self.diag_max < 1:
            raise ValueError("diag_max must be >= 1")
        if not 1 <= self.n <= 4:
            raise ValueError("enumeration supports 1 <= n <= 4")


def _off_range(i, j, d, off):
    """Admissible values of m_ij (i < j) given the diagonal and earlier off-diagonals."""
    if i == 0:
        return range(0, d[0] // 2 + 1)
    lo = max(-(d[i] // 2), _ceil_half(-(d[0] + d[i]) + 2 * (off[(0, i)] + off[(0, j)])))
    return range(lo, d[i] // 2 + 1)


def reduced_entries(n: int, diag_max: int, diag_min: int = 1, first: int | None = None) -> Iterator[tuple[int, ...]]:
    """Raw enumeration of reduced, positive definite Gram matrices.

    Yields flat tuples (m11..mnn, m12, m13, ..., m(n-1)n) in lexicographic order.
    ``first`` pins m11 to a single value.
    """
    pairs = [(i, j) for i in range(n) for j in range(i + 1, n)]

    def diagonals(prefix):
        if len(prefix) == n:
            yield tuple(prefix)
            return
        start = prefix[-1] if prefix else diag_min
        stop = diag_max
        if not prefix and first is not None:
            start, stop = max(start, first), min(stop, first)
        for v in range(start, stop + 1):
            prefix.append(v)
            yield from diagonals(prefix)
            prefix.pop()

    for d in diagonals([]):
        if n == 1:
            yield d
            continue
        off: dict = {}

        def offdiag(k):
            if k == len(pairs):
                yield tuple(off[p] for p in pairs)
                return
            i, j = pairs[k]
            if (i, j) == (2, 3):
                lo, hi = _m34_window(d[0], d[1], d[2], off[(0, 1)], off[(0, 2)], off[(0, 3)],
                                     off[(1, 2)], off[(1, 3)])
                rng = range(lo, hi + 1)
            else:
                rng = _off_range(i, j, d, off)
            for v in rng:
                off[(i, j)] = v
                yield from offdiag(k + 1)
            off.pop((i, j), None)

        for o in offdiag(0):
            m = [[0] * n for _ in range(n)]
            for i in range(n):
                m[i][i] = d[i]
            for (i, j), v in zip(pairs, o):
                m[i][j] = m[j][i] = v
            if is_positive_definite(m):
                yield d + o


def _to_gram(n: int, flat: Sequence[int]) -> GramMatrix:
    m = [[0] * n for _ in range(n)]
    for i in range(n):
        m[i][i] = flat[i]
    k = n
    for i in range(n):
        for j in range(i + 1, n):
            m[i][j] = m[j][i] = flat[k]
            k += 1
    return GramMatrix(tuple(tuple(r) for r in m))


def enumerate_reduced(spec: ReducedEnumSpec) -> Iterator[GramMatrix]:
    """Stream the reduced positive definite matrices with diagonal <= spec.diag_max."""
    for flat in reduced_entries(spec.n, spec.diag_max):
        g = _to_gram(spec.n, flat)
        if spec.parity_filter is not None and not parity_condition_holds(g.rows, spec.parity_filter):
            continue
        if all(p(g) for p in spec.predicates):
            yield g
