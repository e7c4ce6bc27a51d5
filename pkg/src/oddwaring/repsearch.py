"""Global representation search: K + w/2 -> Sigma_r.

A representation is an n x r integer matrix T with T T^t = M whose columns
each have an odd coordinate sum over the w rows.  The search fills T row by
row, left to right, and proves non-existence by exhausting the tree.

Symmetry reduction (``canonicalize_columns``): permuting columns or negating
a column preserves both T T^t and the column parities (-x == x mod 2), so we
only visit matrices whose columns have a positive first nonzero entry and are
sorted in non-increasing lexicographic order.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import product
from math import isqrt
from typing import Sequence

from .core import CosetSpec, GramMatrix, determinant, is_positive_definite, parity_condition_holds, quadratic_value
from .criteria import necessary_conditions

__all__ = [
    "RepMatrix",
    "SearchBudget",
    "SearchResult",
    "MinRepResult",
    "find_representation",
    "min_representation",
    "verify_representation",
    "cosets_isometric",
]

FOUND, NONE, EXHAUSTED, EXCLUDED = "found", "none", "exhausted", "excluded"


@dataclass(frozen=True)
class RepMatrix:
    rows: tuple[tuple[int, ...], ...]

    @property
    def n(self) -> int:
        return len(self.rows)

    @property
    def r(self) -> int:
        return len(self.rows[0]) if self.rows else 0

    def tolist(self) -> list[list[int]]:
        return [list(r) for r in self.rows]

    def gram(self) -> GramMatrix:
        return GramMatrix(
            tuple(
                tuple(sum(a * b for a, b in zip(ri, rj)) for rj in self.rows) for ri in self.rows
            )
        )

    def column_sums(self, w: Sequence[int]) -> list[int]:
        return [sum(self.rows[i][j] for i in w) for j in range(self.r)]


def verify_representation(coset: CosetSpec, t: RepMatrix) -> bool:
    """Both clauses of M = T T^t and odd column sums over w, checked exactly."""
    if t.n != coset.n:
        return False
    if t.gram() != coset.gram:
        return False
    return all(s % 2 == 1 for s in t.column_sums(coset.w))


@dataclass(frozen=True)
class SearchBudget:
    max_nodes: int | None = None
    canonicalize_columns: bool = True

    def __post_init__(self):
        if self.max_nodes is not None and self.max_nodes < 1:
            raise ValueError("max_nodes must be >= 1")


@dataclass
class SearchResult:
    status: str
    r: int
    nodes: int
    rep: RepMatrix | None = None
    reason: str = ""

    @property
    def found(self) -> bool:
        return self.status == FOUND

    def to_json(self) -> dict:
        return {
            "r": self.r,
            "status": self.status,
            "representable": {FOUND: True, NONE: False, EXCLUDED: False}.get(self.status),
            "proof": {NONE: "exhaustive", EXCLUDED: "necessary-condition"}.get(self.status),
            "reason": self.reason,
            "nodes": self.nodes,
            "T": self.rep.tolist() if self.rep else None,
        }


class _Exhausted(Exception):
    pass


class _Search:
    def __init__(self, coset: CosetSpec, r: int, budget: SearchBudget):
        m = coset.gram.rows
        n = coset.n
        self.r = r
        self.n = n
        # small norms first; ties keep the original order
        self.order = sorted(range(n), key=lambda i: (m[i][i], i))
        self.m = [[m[a][b] for b in self.order] for a in self.order]
        w = set(coset.w)
        self.in_w = [o in w for o in self.order]
        self.last_w = max(p for p in range(n) if self.in_w[p])
        self.canonical = budget.canonicalize_columns
        self.max_nodes = budget.max_nodes
        self.nodes = 0
        self.t = [[0] * r for _ in range(n)]
        # suffix square sums of finished rows: suf[k][j] = sum_{j' >= j} t[k][j']^2
        self.suf = [[0] * (r + 1) for _ in range(n)]
        self.wpar = [0] * r  # parity of the partial w-sum in each column
        self.tied = [True] * r  # column j equal to column j-1 on finished rows
        self.zero = [True] * r  # column j zero on finished rows

    def run(self) -> list[list[int]] | None:
        if self._row(0):
            back = [None] * self.n
            for p, o in enumerate(self.order):
                back[o] = self.t[p]
            return back
        return None

    def _row(self, i: int) -> bool:
        if i == self.n:
            return True
        r = self.r
        forced = None
        if i == self.last_w:
            forced = [1 - p for p in self.wpar]
            odd_suffix = [0] * (r + 1)
            for j in range(r - 1, -1, -1):
                odd_suffix[j] = odd_suffix[j + 1] + forced[j]
            self._odd_suffix = odd_suffix
        self._forced = forced
        targets = self.m[i][:i]
        return self._cell(i, 0, self.m[i][i], [0] * i, targets)

    def _cell(self, i, j, rem, ips, targets) -> bool:
        r = self.r
        t = self.t
        if j == r:
            if rem or any(ip != tg for ip, tg in zip(ips, targets)):
                return False
            return self._finish_row(i)
        forced = self._forced
        hi = isqrt(rem)
        lo = -hi
        if self.canonical:
            if self.zero[j]:
                lo = 0
            if j and self.tied[j]:
                hi = min(hi, t[i][j - 1])
        if forced is not None:
            # remaining entries j..r-1 have forced parities
            odd_left = self._odd_suffix[j]
            if rem < odd_left or (rem - odd_left) % 4:
                return False
            par = forced[j]
        else:
            par = None
        col_prev = [t[k][j] for k in range(i)]
        suf_next = [self.suf[k][j + 1] for k in range(i)]
        for v in range(hi, lo - 1, -1):
            if par is not None and (v & 1) != par:
                continue
            self.nodes += 1
            if self.max_nodes is not None and self.nodes > self.max_nodes:
                raise _Exhausted
            rest = rem - v * v
            ok = True
            new_ips = ips[:]
            for k in range(i):
                ip = ips[k] + v * col_prev[k]
                new_ips[k] = ip
                gap = targets[k] - ip
                s = suf_next[k]
                if s == 0:
                    if gap:
                        ok = False
                        break
                elif gap * gap > rest * s:
                    ok = False
                    break
            if not ok:
                continue
            if j == r - 1 and rest:
                continue
            t[i][j] = v
            if self._cell(i, j + 1, rest, new_ips, targets):
                return True
        t[i][j] = 0
        return False

    def _finish_row(self, i) -> bool:
        r = self.r
        row = self.t[i]
        suf = self.suf[i]
        acc = 0
        for j in range(r - 1, -1, -1):
            acc += row[j] * row[j]
            suf[j] = acc
        suf[r] = 0
        saved = (self.tied[:], self.zero[:], self.wpar[:], self._forced,
                 getattr(self, "_odd_suffix", None))
        for j in range(r):
            if j:
                self.tied[j] = self.tied[j] and row[j] == row[j - 1]
            self.zero[j] = self.zero[j] and row[j] == 0
            if self.in_w[i]:
                self.wpar[j] ^= row[j] & 1
        if self._row(i + 1):
            return True
        self.tied, self.zero, self.wpar, self._forced, self._odd_suffix = saved
        return False


def find_representation(coset: CosetSpec, r: int, budget: SearchBudget | None = None) -> SearchResult:
    """Search for T with T T^t = M and odd w-column sums.

    status is "found", "none" (exhaustive proof of non-existence) or
    "exhausted" (node budget hit; nothing proven).
    """
    budget = budget or SearchBudget()
    if r < 1:
        raise ValueError("r must be positive")
    if not is_positive_definite(coset.gram):
        raise ValueError("Gram matrix is not positive definite")
    s = _Search(coset, r, budget)
    try:
        rows = s.run()
    except _Exhausted:
        return SearchResult(EXHAUSTED, r, s.nodes, reason="node budget exceeded")
    if rows is None:
        return SearchResult(NONE, r, s.nodes, reason="search tree exhausted")
    rep = RepMatrix(tuple(tuple(row) for row in rows))
    if not verify_representation(coset, rep):  # pragma: no cover - soundness guard
        raise AssertionError("search returned an invalid representation")
    return SearchResult(FOUND, r, s.nodes, rep)


@dataclass
class MinRepResult:
    r: int | None
    rep: RepMatrix | None
    trace: list[SearchResult] = field(default_factory=list)

    @property
    def exhausted(self) -> bool:
        return any(t.status == EXHAUSTED for t in self.trace)

    @property
    def nodes(self) -> int:
        return sum(t.nodes for t in self.trace)

    def to_json(self) -> dict:
        return {
            "min_r": self.r,
            "T": self.rep.tolist() if self.rep else None,
            "nodes": self.nodes,
            "trace": [
                {"r": t.r, "status": t.status, "reason": t.reason, "nodes": t.nodes}
                for t in self.trace
            ],
        }


def min_representation(coset: CosetSpec, r_max: int, budget: SearchBudget | None = None) -> MinRepResult:
    """Smallest r <= r_max with K + w/2 -> Sigma_r.

    Values of r failing the necessary conditions are recorded as "excluded"
    without searching.  If a smaller admissible r ran out of budget the
    returned minimum is only an upper bound; check ``exhausted``.
    """
    if r_max < 1:
        raise ValueError("r_max must be positive")
    if not is_positive_definite(coset.gram):
        raise ValueError("Gram matrix is not positive definite")
    nec = necessary_conditions(coset)
    admissible = set(nec.admissible_r) if nec.parity_ok else set()
    trace = []
    if not nec.parity_ok:
        trace.append(SearchResult(EXCLUDED, 0, 0, reason="parity condition (i) fails"))
        return MinRepResult(None, None, trace)
    for r in range(1, r_max + 1):
        if r not in admissible:
            if (r - nec.q_w) % 8 == 0:
                trace.append(SearchResult(EXCLUDED, r, 0, reason="r exceeds Q(w) or r_{K,w}"))
            continue
        res = find_representation(coset, r, budget)
        trace.append(res)
        if res.found:
            return MinRepResult(r, res.rep, trace)
    return MinRepResult(None, None, trace)


# --- isometry of cosets ----------------------------------------------------------


def _vectors_of_norm(gram: GramMatrix, norm: int) -> list[tuple[int, ...]]:
    """All x in Z^n with x^t M x == norm.

    Box bound from the dual form: x_k^2 <= norm * (M^-1)_kk, i.e.
    x_k^2 * det(M) <= norm * adj(M)_kk.
    """
    m = gram.rows
    n = gram.n
    det = determinant(m)
    bounds = []
    for k in range(n):
        minor = [[m[a][b] for b in range(n) if b != k] for a in range(n) if a != k]
        adj_kk = determinant(minor) if n > 1 else 1
        b = isqrt(norm * adj_kk // det)
        while (b + 1) * (b + 1) * det <= norm * adj_kk:
            b += 1
        bounds.append(b)
    out = []
    for x in product(*(range(-b, b + 1) for b in bounds)):
        if quadratic_value(m, x) == norm:
            out.append(x)
    return out


def cosets_isometric(a: CosetSpec, b: CosetSpec) -> bool:
    """Is there U in GL_n(Z) with U^t M_a U = M_b and U w_b == w_a (mod 2)?

    Columns of U are images of b's basis vectors, written in a's basis; they
    are drawn from the vectors of a with the required norms.
    """
    if a.n != b.n:
        raise ValueError("rank mismatch")
    n = a.n
    if n > 4:
        raise ValueError("isometry test supports n <= 4")
    ma, mb = a.gram.rows, b.gram.rows
    if determinant(ma) != determinant(mb):
        return False
    # Q(w) itself moves with the choice of w in its class mod 2K; only these survive
    pa, pb = parity_condition_holds(ma, a.w), parity_condition_holds(mb, b.w)
    if pa != pb or (pa and (a.q_w - b.q_w) % 8):
        return False
    cands = [_vectors_of_norm(a.gram, mb[i][i]) for i in range(n)]
    wa = a.w_vector()
    wb = b.w_vector()

    def bil(x, y):
        return sum(x[p] * ma[p][q] * y[q] for p in range(n) for q in range(n) if x[p] and y[q])

    chosen: list[tuple[int, ...]] = []

    def extend(i) -> bool:
        if i == n:
            cols = chosen
            u = [[cols[c][rw] for c in range(n)] for rw in range(n)]
            if abs(determinant(u)) != 1:
                return False
            for rw in range(n):
                s = sum(u[rw][c] * wb[c] for c in range(n))
                if (s - wa[rw]) % 2:
                    return False
            return True
        for x in cands[i]:
            if all(bil(chosen[k], x) == mb[k][i] for k in range(i)):
                chosen.append(x)
                if extend(i + 1):
                    return True
                chosen.pop()
        return False

    return extend(0)
