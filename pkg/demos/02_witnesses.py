# Lower-bound witnesses: cosets that need many odd squares, and proofs that fewer fail.
import time

import numpy as np

from oddwaring.criteria import necessary_conditions
from oddwaring.repsearch import find_representation
from oddwaring.survey import WITNESSES

for coset, r_pos, r_neg in WITNESSES:
    nec = necessary_conditions(coset)
    t0 = time.time()
    pos = find_representation(coset, r_pos)
    neg = find_representation(coset, r_neg)
    print(f"n={coset.n} w={[i + 1 for i in coset.w]} admissible r={list(nec.admissible_r)}")
    print(f"   r={r_pos}: {pos.status} ({pos.nodes} nodes)   r={r_neg}: {neg.status} ({neg.nodes} nodes)"
          f"   {time.time() - t0:.2f}s")

# the smallest one, printed as T with T T^t = M
coset, r_pos, _ = WITNESSES[0]
t = np.array(find_representation(coset, r_pos).rep.tolist())
print(t)
print("T T^t =", (t @ t.T).tolist(), " odd column sums over w:", (t[list(coset.w)].sum(axis=0) % 2).tolist())
