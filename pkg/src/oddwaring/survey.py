"""The finite case analysis for ranks 2, 3 and 4.

For a reduced Gram matrix M and w = sum of d_i over an index set, a candidate
is a coset satisfying the parity condition (i) with Q(w) > n + 10 and
k = Q(w) mod 8 in 1..n+2.  It *survives* when no composition of k over the
w-diagonal keeps M positive definite.

Enumeration strategy, by the largest w index i_t:

* i_t = n: every diagonal is bounded by the large-diagonal discharge
  (C(n) m_{i_t i_t} > k settles the coset), so the candidates are finite.
  For n = 4 the last row is never enumerated blindly: a survivor needs
  Schur complement m44 - v^t A^-1 v <= k, which confines v and m44.
* i_t < n: diagonals after i_t are unbounded.  The top block is enumerated,
  the later rows are confined by exact Schur-complement bounds (together
  with the printed bounds for the 3-(iii)/(iv) subcases), and the last
  diagonal is raised by 2 from its smallest admissible value until a split
  appears.  Termination is guaranteed when some composition leaves the top
  block positive definite; otherwise the run stops with an error.

Every pruning rule only removes matrices that provably have a split, so the
survivor list is exact.  All arithmetic is on Python integers or Fractions.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import combinations, product
from math import floor
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .core import CosetSpec, GramMatrix, _m34_window, is_positive_definite, reduced_entries
from .criteria import MINKOWSKI_C, compositions, coset_min_norm, find_split, necessary_conditions, residue_k
from .repsearch import RepMatrix, SearchBudget, cosets_isometric, find_representation

__all__ = [
    "CaseSpec",
    "Survivor",
    "SurveyReport",
    "SurveyError",
    "ClaimContradiction",
    "case_label",
    "cases_for",
    "run_case",
    "run_cases",
    "certify_survivor",
    "run_witnesses",
    "WITNESSES",
    "EXCEPTIONAL_3I",
    "case3iii_m33_bound",
    "case3iv_m22_bound",
    "SCALED_BOUND",
    "DEFAULT_RKW_FILTER",
    "isometric_to_exceptional",
]

# diagonal cap used by --scaled runs; still covers the exceptional rank-4 cosets (diagonal 9)
SCALED_BOUND = {2: None, 3: None, 4: 10}

# r_{K,w} cut per rank.  Rank 4 keeps r_{K,w} = n + 10 because the known exceptional
# cosets sit exactly there; blocks whose whole family sits at that value are skipped
# (counted as family_at_target) since no admissible r can exceed n + 10 for them.
DEFAULT_RKW_FILTER = {2: "strict", 3: "strict", 4: "inclusive"}

EXCEPTIONAL_3I = (
    ((9, 3, 3, 2), (3, 9, 3, -4), (3, 3, 9, -4), (2, -4, -4, 9)),
    ((9, 3, 4, 2), (3, 9, 3, -4), (4, 3, 9, -3), (2, -4, -3, 9)),
    ((9, 4, 3, 2), (4, 9, 3, -3), (3, 3, 9, -4), (2, -3, -4, 9)),
    ((9, 4, 4, 2), (4, 9, 3, -3), (4, 3, 9, -3), (2, -3, -3, 9)),
)


class SurveyError(RuntimeError):
    """A case run could not be completed (unbounded loop, resource cap)."""


class ClaimContradiction(RuntimeError):
    """An exhaustive computation disagrees with a published claim."""


def case_label(n: int, w: Sequence[int]) -> str:
    """Case name (e.g. "3-i") for rank n and 0-based index set w."""
    w = tuple(w)
    it = w[-1] + 1
    if n == 2:
        return "1-i" if len(w) == 1 else "1-ii"
    if n == 3:
        if len(w) == 1:
            return "2-i"
        return "2-ii" if w == (0, 1) else "2-iii"
    if n == 4:
        return {4: "3-i", 3: "3-ii", 2: "3-iii", 1: "3-iv"}[it]
    raise ValueError("cases exist for n = 2, 3, 4 only")


@dataclass(frozen=True)
class CaseSpec:
    n: int
    w: tuple[int, ...]
    label: str = ""
    diag_bound: int = 0
    iterate_last_diag: bool = False
    scaled_bound: int | None = None
    use_discharge: bool = True
    rkw_filter: str = ""

    def __post_init__(self):
        if self.n not in (2, 3, 4):
            raise ValueError("n must be 2, 3 or 4")
        w = tuple(self.w)
        if not w or any(not 0 <= i < self.n for i in w) or list(w) != sorted(set(w)):
            raise ValueError("bad w index set")
        object.__setattr__(self, "w", w)
        if not self.label:
            object.__setattr__(self, "label", case_label(self.n, w))
        if not self.rkw_filter:
            object.__setattr__(self, "rkw_filter", DEFAULT_RKW_FILTER[self.n])
        if self.rkw_filter not in ("strict", "inclusive", "off"):
            raise ValueError("rkw_filter must be strict, inclusive or off")
        if not self.diag_bound:
            # largest m_{i_t i_t} not settled by C(n) m > k for the largest allowed k
            object.__setattr__(self, "diag_bound", floor(Fraction(self.n + 2) / MINKOWSKI_C[self.n]))
        object.__setattr__(self, "iterate_last_diag", w[-1] < self.n - 1)
        if self.diag_bound < 1:
            raise ValueError("diag_bound must be positive")

    @property
    def i_t(self) -> int:
        return self.w[-1]

    @property
    def target(self) -> int:
        return self.n + 10

    @property
    def k_max(self) -> int:
        return self.n + 2

    def to_json(self) -> dict:
        return {
            "n": self.n,
            "w": [i + 1 for i in self.w],
            "label": self.label,
            "diag_bound": self.diag_bound,
            "iterate_last_diag": self.iterate_last_diag,
            "scaled_bound": self.scaled_bound,
            "use_discharge": self.use_discharge,
            "rkw_filter": self.rkw_filter,
        }


def cases_for(n: int, label: str | None = None, scaled: bool = False, **kw) -> list[CaseSpec]:
    out = []
    for t in range(1, n + 1):
        for w in combinations(range(n), t):
            if label is None or case_label(n, w) == label:
                out.append(CaseSpec(n, w, scaled_bound=SCALED_BOUND[n] if scaled else None, **kw))
    out.sort(key=lambda c: (c.label, c.w[-1], c.w))
    return out


@dataclass(frozen=True)
class Survivor:
    gram: GramMatrix
    w: tuple[int, ...]
    q_w: int
    k: int
    r_kw: int

    def coset(self) -> CosetSpec:
        return CosetSpec(self.gram, self.w)

    def key(self) -> tuple:
        n = self.gram.n
        m = self.gram.rows
        return tuple(m[i][i] for i in range(n)) + tuple(m[i][j] for i in range(n) for j in range(i + 1, n))

    def to_json(self) -> dict:
        d = CosetSpec(self.gram, self.w).to_json()
        d.update({"q_w": self.q_w, "k": self.k, "r_kw": self.r_kw})
        return d

    @classmethod
    def from_json(cls, obj: dict) -> "Survivor":
        c = CosetSpec.from_json(obj)
        return cls(c.gram, c.w, obj["q_w"], obj["k"], obj["r_kw"])


@dataclass
class SurveyReport:
    case: CaseSpec
    candidates_scanned: int = 0
    prefixes_scanned: int = 0
    filtered_by: dict = field(default_factory=dict)
    survivors: list[Survivor] = field(default_factory=list)
    certificates: list = field(default_factory=list)
    truncated_loops: int = 0
    scaled: bool = False

    def bump(self, key: str, by: int = 1) -> None:
        self.filtered_by[key] = self.filtered_by.get(key, 0) + by

    def to_json(self) -> dict:
        return {
            "case": self.case.to_json(),
            "scaled": self.scaled,
            "candidates_scanned": self.candidates_scanned,
            "prefixes_scanned": self.prefixes_scanned,
            "filtered_by": dict(sorted(self.filtered_by.items())),
            "truncated_loops": self.truncated_loops,
            "survivors": [s.to_json() for s in self.survivors],
            "certificates": [
                None if c is None else {"r": c.r, "T": c.tolist()} for c in self.certificates
            ],
        }


# --- small exact helpers ----------------------------------------------------------


def _full(n: int, flat: Sequence[int]) -> list[list[int]]:
    m = [[0] * n for _ in range(n)]
    for i in range(n):
        m[i][i] = flat[i]
    k = n
    for i in range(n):
        for j in range(i + 1, n):
            m[i][j] = m[j][i] = flat[k]
            k += 1
    return m


def _adj3(a):
    (a11, a12, a13), (_, a22, a23), (_, _, a33) = a
    c11 = a22 * a33 - a23 * a23
    c12 = a13 * a23 - a12 * a33
    c13 = a12 * a23 - a13 * a22
    c22 = a11 * a33 - a13 * a13
    c23 = a12 * a13 - a11 * a23
    c33 = a11 * a22 - a12 * a12
    det = a11 * c11 + a12 * c12 + a13 * c13
    return (c11, c12, c13, c22, c23, c33), det


def _qf3(adj, v1, v2, v3):
    c11, c12, c13, c22, c23, c33 = adj
    return (c11 * v1 * v1 + c22 * v2 * v2 + c33 * v3 * v3
            + 2 * (c12 * v1 * v2 + c13 * v1 * v3 + c23 * v2 * v3))


def _pd3(a) -> bool:
    (a11, a12, a13), (_, a22, a23), (_, _, a33) = a
    if a11 <= 0 or a11 * a22 - a12 * a12 <= 0:
        return False
    return _adj3(a)[1] > 0


def _schur2(p11, p12, p22, r):
    """R^t adj(P) R for 2x2 P and 2x2 R = ((r13, r14), (r23, r24)); returns (s11, s12, s22)."""
    (x1, y1), (x2, y2) = r
    # adj(P) = [[p22, -p12], [-p12, p11]]
    s11 = p22 * x1 * x1 - 2 * p12 * x1 * x2 + p11 * x2 * x2
    s22 = p22 * y1 * y1 - 2 * p12 * y1 * y2 + p11 * y2 * y2
    s12 = p22 * x1 * y1 - p12 * (x1 * y2 + x2 * y1) + p11 * x2 * y2
    return s11, s12, s22


def _lam_max_ge(s, det, t_num, t_den=1) -> bool:
    """lambda_max(S_hat / det) >= t_num / t_den for a symmetric 2x2 S_hat (det > 0)."""
    s11, s12, s22 = s
    x = t_num * det
    a = x - t_den * s11
    b = x - t_den * s22
    c = t_den * s12
    return not (a > 0 and a * b - c * c > 0)


def case3iii_m33_bound(m11, m12, m13, m14, m22, m23, m24, k, as_printed: bool = False) -> Fraction | None:
    """Printed m33 cut-off for w ending at index 2 of a rank-4 coset.

    Returns 8/3 * C0, beyond which Q(x) - k x_2^2 is positive definite, or
    None when the hypotheses (Q(x1 d1 + x2 d2) - k x2^2 positive definite and
    C > 0) fail.  The completing-square identity behind the bound needs the
    squared couplings m23^2, m24^2 and the x3, x4 shifts (m13 + m14)/C.
    ``as_printed`` uses the first powers m23, m24 instead; that variant is
    not a valid cut-off and is kept only for comparison.
    """
    m22p = m22 - k
    if m22p <= 0 or m11 * m22p - m12 * m12 <= 0:
        return None
    c = Fraction(m11) - Fraction(5 * m12 * m12, 2 * m22p)
    if c <= 0:
        return None
    s = m13 + m14
    tail3 = Fraction(m13 * s) / c
    tail4 = Fraction(m14 * s) / c
    e23, e24 = (m23, m24) if as_printed else (m23 * m23, m24 * m24)
    c0 = max(Fraction(10 * e23, 3 * m22p) + tail3, Fraction(10 * e24, 3 * m22p) + tail4)
    return Fraction(8, 3) * c0


def case3iv_m22_bound(m11, m12, m13, m14, k) -> Fraction | None:
    """For w = d1: Q(x) - k x1^2 is positive definite once m22 > 2 m234^2 / (m11 - k).

    None when m12 = m13 = m14 = 0 (then the split is immediate).
    """
    m234 = m12 + m13 + m14
    if m234 == 0:
        return None
    return Fraction(2 * m234 * m234, m11 - k)


# --- per-w bookkeeping -------------------------------------------------------------


class _Ctx:
    def __init__(self, case: CaseSpec, scaled: bool):
        self.case = case
        self.n = case.n
        self.w = case.w
        self.report = SurveyReport(case, scaled=scaled)
        self.cap = case.diag_bound
        if scaled and case.scaled_bound:
            self.cap = min(self.cap, case.scaled_bound)
        self.loop_cap = case.scaled_bound if scaled and case.scaled_bound else None

    # prefix-level quantities: everything that only involves rows/columns in w
    def q_w(self, m) -> int:
        return sum(m[i][j] for i in self.w for j in self.w)

    def parity_rows_ok(self, m, rows) -> bool:
        w = self.w
        for i in rows:
            if (m[i][i] - sum(m[i][j] for j in w)) % 2:
                return False
        return True

    def assumption_ok(self, m) -> bool:
        q = self.q_w(m)
        if q <= self.case.target or residue_k(q) > self.case.k_max:
            return False
        mode = self.case.rkw_filter
        if mode != "off":
            cap = sum(m[i][i] for i in self.w)
            rkw = cap - ((cap - q) % 8)
            if rkw < self.case.target or (mode == "strict" and rkw == self.case.target):
                return False
        return True

    def family_at_target(self, block) -> bool:
        """r_Kw depends only on the w-diagonal, so a block whose r_Kw equals n + 10 fixes it
        for every completion; no admissible r can then exceed n + 10."""
        q = self.q_w(block)
        cap = sum(block[i][i] for i in self.w)
        return cap - ((cap - q) % 8) <= self.case.target

    def skip_or_fail(self, block) -> None:
        if self.family_at_target(block):
            self.report.bump("family_at_target")
            return
        raise SurveyError(f"no composition keeps {block} positive definite, w={self.w}")

    def discharged(self, m, k) -> bool:
        if not self.case.use_discharge:
            return False
        c = MINKOWSKI_C[self.n]
        return any(c * m[i][i] > k for i in self.w)

    def pd_kvecs(self, block) -> list[tuple[int, ...]]:
        """Compositions of k over w (w inside the block) leaving the block positive definite."""
        k = residue_k(self.q_w(block))
        size = len(block)
        out = []
        for parts in compositions(k, len(self.w)):
            sub = [row[:] for row in block]
            for i, p in zip(self.w, parts):
                sub[i][i] -= p
            if is_positive_definite(sub):
                out.append(parts)
        return out

    def evaluate(self, m) -> bool:
        """Run the filter chain on a full candidate; True when a split settles it."""
        rep = self.report
        rep.candidates_scanned += 1
        if not is_positive_definite(m):
            rep.bump("not_pd")
            return False
        if not self.parity_rows_ok(m, range(self.n)):
            rep.bump("parity")
            return False
        if not self.assumption_ok(m):
            rep.bump("assumption")
            return False
        q = self.q_w(m)
        k = residue_k(q)
        if self.discharged(m, k):
            rep.bump("discharge")
            return True
        coset = CosetSpec(GramMatrix(tuple(tuple(r) for r in m)), self.w)
        if find_split(coset) is not None:
            rep.bump("split")
            return True
        cap = sum(m[i][i] for i in self.w)
        rep.survivors.append(Survivor(coset.gram, self.w, q, k, cap - ((cap - q) % 8)))
        return False


def _raise_last(ctx: _Ctx, m, lo: int) -> None:
    """Raise the last diagonal by 2 from ``lo`` (already parity-correct) until a split appears."""
    n = ctx.n
    d = lo
    guard = 0
    while True:
        if ctx.loop_cap is not None and d > ctx.loop_cap:
            ctx.report.truncated_loops += 1
            return
        m[n - 1][n - 1] = d
        if ctx.evaluate(m):
            return
        d += 2
        guard += 1
        if guard > 10000:  # pragma: no cover - termination is certified beforehand
            raise SurveyError("last-diagonal loop did not terminate")


def _start_parity(ctx: _Ctx, m, floor_value: int) -> int:
    """Smallest value >= floor_value satisfying the parity condition in the last row."""
    n = ctx.n
    need = sum(m[n - 1][j] for j in ctx.w if j != n - 1) % 2
    if n - 1 in ctx.w:
        # m_nn cancels on both sides; the condition is on the couplings only
        return floor_value
    return floor_value if floor_value % 2 == need else floor_value + 1


# --- i_t = n, n <= 3: plain enumeration -------------------------------------------


def _run_full_small(ctxs: list[_Ctx], m11: int) -> None:
    n = ctxs[0].n
    cap = max(c.cap for c in ctxs)
    for flat in reduced_entries(n, cap, first=m11):
        m = _full(n, flat)
        for ctx in ctxs:
            if m[n - 1][n - 1] <= ctx.cap:
                ctx.evaluate(m)


# --- i_t = n = 4 ------------------------------------------------------------------


def _box4(a, m14_rng=None):
    """Reduction-compatible ranges for the last column given the top 3x3 block."""
    m11, m22, m33 = a[0][0], a[1][1], a[2][2]
    m12, m13, m23 = a[0][1], a[0][2], a[1][2]
    for m14 in (m14_rng if m14_rng is not None else range(0, m11 // 2 + 1)):
        lo24 = max(-(m22 // 2), -((m11 + m22 - 2 * (m12 + m14)) // 2))
        for m24 in range(lo24, m22 // 2 + 1):
            lo34, hi34 = _m34_window(m11, m22, m33, m12, m13, m14, m23, m24)
            if lo34 <= hi34:
                yield m14, m24, lo34, hi34


def _vertex_max(adj, a) -> int:
    m11, m22, m33 = a[0][0], a[1][1], a[2][2]
    best = None
    for v1 in (0, m11 // 2):
        for v2 in (-(m22 // 2), m22 // 2):
            for v3 in (-(m33 // 2), m33 // 2):
                q = _qf3(adj, v1, v2, v3)
                if best is None or q > best:
                    best = q
    return best


def _run_last_in_w_4(ctxs: list[_Ctx], m11: int) -> None:
    """Cases with 4 in w.  A survivor has m44 - v^t A^-1 v <= k <= 6."""
    cap = max(c.cap for c in ctxs)
    kmax = 6
    for flat in reduced_entries(3, cap, first=m11):
        a = _full(3, flat)
        m33 = a[2][2]
        adj, det = _adj3(a)
        thr = (m33 - kmax) * det
        for ctx in ctxs:
            ctx.report.prefixes_scanned += 1
        if thr > 0 and _vertex_max(adj, a) < thr:
            for ctx in ctxs:
                ctx.report.bump("schur_prune")
            continue
        m = [row[:] + [0] for row in a] + [[0, 0, 0, 0]]
        v1, v2, v3 = _last_columns(a)
        q_all = _qf3_vec(adj, v1, v2, v3)
        keep = q_all >= thr
        for m14, m24, m34, q in zip(v1[keep].tolist(), v2[keep].tolist(), v3[keep].tolist(),
                                    q_all[keep].tolist()):
            lo44 = max(m33, q // det + 1)
            hi44 = min(cap, (q + kmax * det) // det)
            if lo44 > hi44:
                continue
            m[0][3] = m[3][0] = m14
            m[1][3] = m[3][1] = m24
            m[2][3] = m[3][2] = m34
            for m44 in range(lo44, hi44 + 1):
                m[3][3] = m44
                for ctx in ctxs:
                    if m44 <= ctx.cap and m33 <= ctx.cap:
                        ctx.evaluate(m)


# --- i_t = n - 1: enumerate the top block, raise the last diagonal -----------------


def _prefix_filters(ctx: _Ctx, block) -> bool:
    """Parity/assumption/discharge on the top block that contains all of w."""
    rep = ctx.report
    rep.prefixes_scanned += 1
    if not ctx.parity_rows_ok(block, range(len(block))):
        rep.bump("prefix_parity")
        return False
    if not ctx.assumption_ok(block):
        rep.bump("prefix_assumption")
        return False
    if ctx.discharged(block, residue_k(ctx.q_w(block))):
        rep.bump("prefix_discharge")
        return False
    return True


def _run_last_raised(ctxs: list[_Ctx], m11: int) -> None:
    """i_t = n - 1 for n = 3 or 4: top (n-1)-block, free last column, raised last diagonal."""
    n = ctxs[0].n
    cap = max(c.cap for c in ctxs)
    for flat in reduced_entries(n - 1, cap, first=m11):
        a = _full(n - 1, flat)
        active = []
        for ctx in ctxs:
            if a[n - 2][n - 2] > ctx.cap or not _prefix_filters(ctx, a):
                continue
            kvecs = ctx.pd_kvecs(a)
            if not kvecs:
                ctx.skip_or_fail(a)
                continue
            if n == 4:
                forms = []
                for parts in kvecs:
                    sub = [row[:] for row in a]
                    for i, p in zip(ctx.w, parts):
                        sub[i][i] -= p
                    forms.append(_adj3(sub))
                # survivors need v^t A'^-1 v >= m44 >= m33 for every admissible A'
                if any(_vertex_max(adj, a) < a[2][2] * det for adj, det in forms):
                    ctx.report.bump("schur_prune")
                    continue
                active.append((ctx, forms))
            else:
                active.append((ctx, None))
        if not active:
            continue
        if n == 2:
            raise SurveyError(f"w={active[0][0].w} in rank 2 is not covered by the enumeration")
        if n == 3:
            _raise_rank3(a, active)
        else:
            _raise_rank4(a, active)


def _raise_rank3(a, active) -> None:
    m11, m22, m12 = a[0][0], a[1][1], a[0][1]
    for m13 in range(0, m11 // 2 + 1):
        lo23 = max(-(m22 // 2), -((m11 + m22 - 2 * (m12 + m13)) // 2))
        for m23 in range(lo23, m22 // 2 + 1):
            m = [[m11, m12, m13], [m12, m22, m23], [m13, m23, 0]]
            for ctx, _ in active:
                _raise_last(ctx, m, _start_parity(ctx, m, m22))


def _last_columns(a):
    """All (m14, m24, m34) compatible with reduction given the top 3x3 block, as int64 arrays."""
    m11, m22, m33 = a[0][0], a[1][1], a[2][2]
    m12, m13, m23 = a[0][1], a[0][2], a[1][2]
    v1, v2, v3 = np.meshgrid(
        np.arange(0, m11 // 2 + 1, dtype=np.int64),
        np.arange(-(m22 // 2), m22 // 2 + 1, dtype=np.int64),
        np.arange(-(m33 // 2), m33 // 2 + 1, dtype=np.int64),
        indexing="ij",
    )
    v1, v2, v3 = v1.ravel(), v2.ravel(), v3.ravel()
    ok = 2 * v2 >= -(m11 + m22) + 2 * (m12 + v1)
    x3 = 2 * v3
    for lo in (
        -(m22 + m33) - 2 * m23 - 2 * v2,
        -(m22 + m33) + 2 * m23 + 2 * v2,
        -(m11 + m22 + m33) + 2 * (m12 + m13 + v1 - m23 - v2),
        -(m11 + m22 + m33) + 2 * (-m12 + m13 + v1 + m23 + v2),
        -(m11 + m33) + 2 * (m13 + v1),
    ):
        ok &= x3 >= lo
    for hi in (
        (m22 + m33) - 2 * m23 + 2 * v2,
        (m22 + m33) + 2 * m23 - 2 * v2,
        (m11 + m22 + m33) + 2 * (-m12 + m13 - v1 - m23 + v2),
        (m11 + m22 + m33) + 2 * (-m12 - m13 + v1 + m23 - v2),
    ):
        ok &= x3 <= hi
    return v1[ok], v2[ok], v3[ok]


def _qf3_vec(adj, v1, v2, v3):
    c11, c12, c13, c22, c23, c33 = adj
    return (c11 * v1 * v1 + c22 * v2 * v2 + c33 * v3 * v3
            + 2 * (c12 * v1 * v2 + c13 * v1 * v3 + c23 * v2 * v3))


def _raise_rank4(a, active) -> None:
    m33 = a[2][2]
    v1, v2, v3 = _last_columns(a)
    for ctx, forms in active:
        x1, x2, x3 = v1, v2, v3
        for adj, det in forms:
            keep = _qf3_vec(adj, x1, x2, x3) >= m33 * det
            x1, x2, x3 = x1[keep], x2[keep], x3[keep]
            if not x1.size:
                break
        ctx.report.bump("schur_prune", int(v1.size - x1.size))
        for m14, m24, m34 in zip(x1.tolist(), x2.tolist(), x3.tolist()):
            m = [row[:] + [0] for row in a] + [[m14, m24, m34, 0]]
            for i, v in enumerate((m14, m24, m34)):
                m[i][3] = v
            _raise_last(ctx, m, _start_parity(ctx, m, m33))


# --- rank 4 with i_t <= 2: two rows after a 2x2 block -------------------------------


def _two_rows(ctx: _Ctx, p, kforms, r_iter, m33_cap=None) -> None:
    """Rows 3 and 4 after the fixed 2x2 block p.

    kforms: (parts, adj(P'), det(P')) for each composition leaving P' positive
    definite.  A survivor needs N - R^t P'^-1 R not positive definite for
    every one of them, where N = [[m33, m34], [m34, m44]] has
    lambda_min(N) >= m33 - |m34| >= m33 / 2.
    """
    rep = ctx.report
    m11, m12, m22 = p[0][0], p[0][1], p[1][1]
    loop_cap = ctx.loop_cap
    for r in r_iter:
        (m13, m14), (m23, m24) = r
        schurs = [(_schur2(pp[0][0], pp[0][1], pp[1][1], r), det) for pp, det in kforms]
        if not all(_lam_max_ge(s, det, m22, 2) for s, det in schurs):
            rep.bump("schur_prune")
            continue
        bound = m33_cap(m13, m14, m23, m24) if m33_cap else None
        m33 = m22
        while True:
            if bound is not None and m33 > bound:
                break
            if not all(_lam_max_ge(s, det, m33, 2) for s, det in schurs):
                break
            if loop_cap is not None and m33 > loop_cap:
                rep.truncated_loops += 1
                break
            if (m33 - m13 * (0 in ctx.w) - m23 * (1 in ctx.w)) % 2 == 0:
                _two_rows_m33(ctx, p, r, m33, schurs)
            m33 += 1


def _two_rows_m33(ctx, p, r, m33, schurs) -> None:
    m11, m12, m22 = p[0][0], p[0][1], p[1][1]
    (m13, m14), (m23, m24) = r
    top = [[m11, m12, m13], [m12, m22, m23], [m13, m23, m33]]
    if not _pd3(top):
        return
    if not ctx.pd_kvecs(top):
        ctx.skip_or_fail(top)
        return
    lo34, hi34 = _m34_window(m11, m22, m33, m12, m13, m14, m23, m24)
    for m34 in range(lo34, hi34 + 1):
        if not all(_lam_max_ge(s, det, m33 - abs(m34)) for s, det in schurs):
            ctx.report.bump("schur_prune")
            continue
        m = [[m11, m12, m13, m14], [m12, m22, m23, m24], [m13, m23, m33, m34], [m14, m24, m34, 0]]
        _raise_last(ctx, m, _start_parity(ctx, m, m33))


def _kforms2(ctx: _Ctx, p):
    out = []
    for parts in ctx.pd_kvecs(p):
        pp = [row[:] for row in p]
        for i, v in zip(ctx.w, parts):
            pp[i][i] -= v
        out.append((pp, pp[0][0] * pp[1][1] - pp[0][1] * pp[0][1]))
    return out


def _r_grid(m11, m12, m22, m13_rng=None, m14_rng=None):
    half = m11 // 2
    for m13 in (m13_rng if m13_rng is not None else range(0, half + 1)):
        lo23 = max(-(m22 // 2), -((m11 + m22 - 2 * (m12 + m13)) // 2))
        for m14 in (m14_rng if m14_rng is not None else range(0, half + 1)):
            lo24 = max(-(m22 // 2), -((m11 + m22 - 2 * (m12 + m14)) // 2))
            for m23 in range(lo23, m22 // 2 + 1):
                for m24 in range(lo24, m22 // 2 + 1):
                    yield (m13, m14), (m23, m24)


def _run_it2(ctxs: list[_Ctx], m11: int) -> None:
    cap = max(c.cap for c in ctxs)
    for flat in reduced_entries(2, cap, first=m11):
        p = _full(2, flat)
        for ctx in ctxs:
            if p[1][1] > ctx.cap or not _prefix_filters(ctx, p):
                continue
            kforms = _kforms2(ctx, p)
            if not kforms:
                ctx.skip_or_fail(p)
                continue
            k = residue_k(ctx.q_w(p))
            m11, m12, m22 = p[0][0], p[0][1], p[1][1]

            def m33_cap(m13, m14, m23, m24, k=k, m11=m11, m12=m12, m22=m22):
                b = case3iii_m33_bound(m11, m12, m13, m14, m22, m23, m24, k)
                return None if b is None else floor(b)

            _two_rows(ctx, p, kforms, _r_grid(m11, m12, m22), m33_cap)


def _run_it1(ctxs: list[_Ctx], m11: int) -> None:
    for ctx in ctxs:
        _run_it1_one(ctx, m11)


def _run_it1_one(ctx: _Ctx, m11: int) -> None:
    rep = ctx.report
    if m11 <= ctx.cap:
        p1 = [[m11]]
        if not _prefix_filters(ctx, p1):
            return
        k = residue_k(m11)
        half = m11 // 2
        for m12, m13, m14 in product(range(half + 1), repeat=3):
            b = case3iv_m22_bound(m11, m12, m13, m14, k)
            if b is None:
                # m12 = m13 = m14 = 0: removing k from m11 obviously keeps M positive definite
                rep.bump("prefix_split")
                continue
            hi22 = floor(b)
            if ctx.loop_cap is not None and hi22 > ctx.loop_cap:
                hi22 = ctx.loop_cap
                rep.truncated_loops += 1
            for m22 in range(m11, hi22 + 1):
                if (m22 - m12) % 2:
                    continue
                p = [[m11, m12], [m12, m22]]
                rep.prefixes_scanned += 1
                kforms = _kforms2(ctx, p)
                if not kforms:
                    ctx.skip_or_fail(p)
                    continue
                _two_rows(ctx, p, kforms, _r_grid(m11, m12, m22, (m13,), (m14,)))


# --- driver -----------------------------------------------------------------------


def _route(case: CaseSpec):
    n, it = case.n, case.i_t
    if it == n - 1:
        return "last_in_w_4" if n == 4 else "full_small"
    if it == n - 2:
        return "last_raised"
    if n == 4 and it == 1:
        return "it2"
    if n == 4 and it == 0:
        return "it1"
    return "prefix_only"


def _run_prefix_only(ctxs: list[_Ctx], m11: int) -> None:
    """i_t <= n - 3 for n <= 3, i.e. w = {1} in rank 3: the assumption already fails on m11."""
    for ctx in ctxs:
        if m11 <= ctx.cap:
            if _prefix_filters(ctx, [[m11]]):
                raise SurveyError(f"case {ctx.case.label} w={ctx.w} is not covered by the enumeration")


_RUNNERS = {
    "full_small": _run_full_small,
    "last_in_w_4": _run_last_in_w_4,
    "last_raised": _run_last_raised,
    "it2": _run_it2,
    "it1": _run_it1,
    "prefix_only": _run_prefix_only,
}


def _snapshot_path(snapshot: str | os.PathLike | None) -> Path | None:
    if snapshot:
        return Path(snapshot)
    d = os.environ.get("ODD_WARING_SNAPSHOT_DIR")
    return Path(d) / "survey.jsonl" if d else None


def _run_chunk(route: str, cases: list[CaseSpec], scaled: bool, m11: int) -> list[SurveyReport]:
    ctxs = [_Ctx(c, scaled) for c in cases]
    _RUNNERS[route](ctxs, m11)
    return [c.report for c in ctxs]


def _merge(into: SurveyReport, part: SurveyReport) -> None:
    into.candidates_scanned += part.candidates_scanned
    into.prefixes_scanned += part.prefixes_scanned
    into.truncated_loops += part.truncated_loops
    for k, v in part.filtered_by.items():
        into.bump(k, v)
    into.survivors.extend(part.survivors)


def _group_key(route: str, cases: list[CaseSpec], scaled: bool) -> str:
    return json.dumps({"route": route, "scaled": scaled, "cases": [c.to_json() for c in cases]}, sort_keys=True)


def _load_snapshot(path: Path | None, key: str, cases: list[CaseSpec], scaled: bool):
    """Last recorded progress for this group: (m11 done, partial reports) or None."""
    if path is None or not path.exists():
        return None
    last = None
    for line in path.read_text().splitlines():
        if not line.strip():
            continue
        rec = json.loads(line)
        if rec.get("key") == key:
            last = rec
    if last is None:
        return None
    reports = []
    for case, data in zip(cases, last["reports"]):
        rep = SurveyReport(case, scaled=scaled)
        rep.candidates_scanned = data["candidates_scanned"]
        rep.prefixes_scanned = data["prefixes_scanned"]
        rep.truncated_loops = data["truncated_loops"]
        rep.filtered_by = dict(data["filtered_by"])
        rep.survivors = [Survivor.from_json(s) for s in data["survivors"]]
        reports.append(rep)
    return last["m11_done"], reports


def _write_snapshot(path: Path, key: str, m11: int, reports: list[SurveyReport]) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    rec = {
        "key": key,
        "m11_done": m11,
        "reports": [
            {
                "candidates_scanned": r.candidates_scanned,
                "prefixes_scanned": r.prefixes_scanned,
                "truncated_loops": r.truncated_loops,
                "filtered_by": dict(sorted(r.filtered_by.items())),
                "survivors": [s.to_json() for s in r.survivors],
            }
            for r in reports
        ],
    }
    with path.open("a") as fh:
        fh.write(json.dumps(rec, sort_keys=True) + "\n")


def run_cases(cases: Iterable[CaseSpec], scaled: bool = False, snapshot=None,
              certify: bool = True, threads: int = 1) -> list[SurveyReport]:
    """Run several cases, sharing enumeration between cases with the same route.

    Work is split by the value of m11.  With a snapshot path (or
    ODD_WARING_SNAPSHOT_DIR) a JSON line with the cumulative state is
    appended after every m11, and a rerun resumes after the last one
    recorded.  Chunks may run in ``threads`` worker processes; results are
    merged in m11 order so the output does not depend on the worker count.
    """
    cases = list(cases)
    if threads < 1:
        raise ValueError("threads must be >= 1")
    reports = {id(c): SurveyReport(c, scaled=scaled) for c in cases}
    groups: dict[str, list[CaseSpec]] = {}
    for c in cases:
        groups.setdefault(_route(c), []).append(c)
    snap = _snapshot_path(snapshot)
    for route, group in groups.items():
        key = _group_key(route, group, scaled)
        cap = max(_Ctx(c, scaled).cap for c in group)
        acc = [SurveyReport(c, scaled=scaled) for c in group]
        start = 1
        resumed = _load_snapshot(snap, key, group, scaled)
        if resumed is not None:
            start, acc = resumed[0] + 1, resumed[1]
        chunks = list(range(start, cap + 1))

        def absorb(m11, parts):
            for a, p in zip(acc, parts):
                _merge(a, p)
            if snap is not None:
                _write_snapshot(snap, key, m11, acc)

        if threads > 1 and len(chunks) > 1:
            from concurrent.futures import ProcessPoolExecutor

            with ProcessPoolExecutor(max_workers=threads) as ex:
                futs = [ex.submit(_run_chunk, route, group, scaled, m) for m in chunks]
                for m, f in zip(chunks, futs):
                    absorb(m, f.result())
        else:
            for m in chunks:
                absorb(m, _run_chunk(route, group, scaled, m))
        for c, a in zip(group, acc):
            reports[id(c)] = a
    out = [reports[id(c)] for c in cases]
    for rep in out:
        rep.survivors.sort(key=lambda s: s.key())
        if certify:
            rep.certificates = [certify_survivor(s.gram, s.w, rep.case.target) for s in rep.survivors]
    return out


def run_case(case: CaseSpec, scaled: bool = False, snapshot=None, certify: bool = True,
             threads: int = 1) -> SurveyReport:
    return run_cases([case], scaled=scaled, snapshot=snapshot, certify=certify, threads=threads)[0]


def certify_survivor(gram, w: Sequence[int], r: int) -> RepMatrix | None:
    """A representation by Sigma_s for some admissible s <= r, found by exhaustive search.

    Returns None when the coset has no representation at all: every s with
    s == Q(w) (mod 8) and s <= min Q(w + 2K) is refuted.  Such a coset is not a
    counterexample to the bound.  Raises ClaimContradiction when every
    admissible s <= r is refuted but a larger s is still possible.
    """
    gram = gram if isinstance(gram, GramMatrix) else GramMatrix(tuple(tuple(x) for x in gram))
    coset = CosetSpec(gram, tuple(w))
    nec = necessary_conditions(coset)
    if not nec.parity_ok:
        return None
    floor_cap = coset_min_norm(coset)
    possible = [s for s in nec.admissible_r if s <= floor_cap]
    tried = []
    proven = True
    for s in sorted((s for s in possible if s <= r), reverse=True):
        res = find_representation(coset, s, SearchBudget())
        if res.found:
            return res.rep
        proven = proven and res.status == "none"
        tried.append(s)
    if proven and all(s <= r for s in possible):
        return None
    raise ClaimContradiction(
        f"coset {coset.to_json()} has no representation by Sigma_s for admissible s <= {r} (tried {tried})"
    )


# --- lower-bound witnesses ---------------------------------------------------------

WITNESSES = (
    (CosetSpec.of([[8, 2], [2, 12]], [2]), 12, 4),
    (CosetSpec.of(GramMatrix.diag(3, 3, 23), [1, 2, 3]), 13, 5),
    (CosetSpec.of(GramMatrix.diag(1, 3, 3, 23), [1, 2, 3, 4]), 14, 6),
    (CosetSpec.of(GramMatrix.diag(2, 2, 2, 2, 16), [5]), 16, 8),
)


@dataclass
class WitnessVerdict:
    coset: CosetSpec
    r_pos: int
    r_neg: int
    positive: object
    negative: object

    @property
    def ok(self) -> bool:
        return self.positive.status == "found" and self.negative.status == "none"

    def to_json(self) -> dict:
        d = self.coset.to_json()
        d.update({
            "r_pos": self.r_pos,
            "r_neg": self.r_neg,
            "positive": self.positive.to_json(),
            "negative": self.negative.to_json(),
            "ok": self.ok,
        })
        return d


def run_witnesses(witnesses=WITNESSES, strict: bool = True) -> list[WitnessVerdict]:
    out = []
    for coset, r_pos, r_neg in witnesses:
        pos = find_representation(coset, r_pos, SearchBudget())
        neg = find_representation(coset, r_neg, SearchBudget())
        v = WitnessVerdict(coset, r_pos, r_neg, pos, neg)
        if strict and not v.ok:
            raise ClaimContradiction(f"witness {coset.to_json()} gave {pos.status}@{r_pos}, {neg.status}@{r_neg}")
        out.append(v)
    return out


def isometric_to_exceptional(s: Survivor) -> int | None:
    """Index of the Case 3-(i) exceptional coset isometric to s, if any."""
    for idx, rows in enumerate(EXCEPTIONAL_3I):
        if cosets_isometric(s.coset(), CosetSpec(GramMatrix(rows), (0, 3))):
            return idx
    return None
