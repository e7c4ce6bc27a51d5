"""Unpruned reference search for n <= 2, used as an oracle for find_representation.

Every row of T is a vector in Z^r of squared length m_ii, so it is enough to
list all such vectors and test every pair for the inner product and the
column-parity condition.  No symmetry reduction, no ordering tricks.
"""

from functools import lru_cache
from math import isqrt

import numpy as np


@lru_cache(maxsize=None)
def vectors_of_norm(norm: int, r: int) -> np.ndarray:
    b = isqrt(norm)
    # grow coordinate by coordinate, dropping prefixes that already overshoot
    layer = {(): 0}
    for _ in range(r):
        nxt = {}
        for v, s in layer.items():
            for x in range(-b, b + 1):
                t = s + x * x
                if t <= norm:
                    nxt[v + (x,)] = t
        layer = nxt
    out = [v for v, s in layer.items() if s == norm]
    return np.array(out, dtype=np.int64).reshape(-1, r)


def representable(gram, w, r) -> bool:
    """Is there T (n x r) with T T^t = gram and odd column sums over the rows in w?"""
    n = len(gram)
    if n == 1:
        a = vectors_of_norm(gram[0][0], r)
        return bool(len(a)) and bool(np.any(np.all(a % 2 == 1, axis=1)))
    if n != 2:
        raise ValueError("reference search handles n <= 2 only")
    a = vectors_of_norm(gram[0][0], r)
    b = vectors_of_norm(gram[1][1], r)
    if not len(a) or not len(b):
        return False
    ip = a @ b.T == gram[0][1]
    pa, pb = a % 2, b % 2
    w = set(w)
    if w == {0}:
        par = np.all(pa == 1, axis=1)[:, None] & np.ones(len(b), dtype=bool)[None, :]
    elif w == {1}:
        par = np.ones(len(a), dtype=bool)[:, None] & np.all(pb == 1, axis=1)[None, :]
    else:
        # every column of a + b odd: the parity vectors are complementary
        mismatch = pa @ (1 - pb).T + (1 - pa) @ pb.T
        par = mismatch == r
    return bool(np.any(ip & par))
