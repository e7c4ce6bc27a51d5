# How many odd squares does it take to write a number?
import numpy as np

from oddwaring.oddsq import decompose_odd_squares, min_odd_squares

m = np.arange(1, 2001)
k = np.array([min_odd_squares(int(x)) for x in m])

# the count is tied to m mod 8, plus one extra round of 8 when the residue class fails
print("values taken:", sorted(set(k.tolist())))
print("worst case first seen at", int(m[k == k.max()][0]), "->", decompose_odd_squares(42, 10).parts)

table = np.zeros((8, 2), dtype=int)
for res in range(8):
    sel = k[m % 8 == res]
    table[res] = sel.min(), sel.max()
print("residue  min  max")
for res, (lo, hi) in enumerate(table):
    print(f"{res:7d} {lo:4d} {hi:4d}")

# the ones needing 10 are exactly the m = 2 mod 8 that are not a sum of two squares
tens = m[k == 10]
print(len(tens), "of", len(m), "need ten; first few:", tens[:8].tolist())
