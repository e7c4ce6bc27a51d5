# The rank-4 cosets that no diagonal split handles, and what the survey finds at a reduced bound.
import numpy as np

from oddwaring.core import CosetSpec, GramMatrix
from oddwaring.criteria import find_split, r_kw
from oddwaring.survey import EXCEPTIONAL_3I, cases_for, isometric_to_exceptional, run_cases

for rows in EXCEPTIONAL_3I:
    c = CosetSpec(GramMatrix(rows), (0, 3))
    a = np.array(rows)
    print(a, "\n  Q(w) =", c.q_w, " r_Kw =", r_kw(c), " split:", find_split(c),
          " min eigenvalue %.3f" % np.linalg.eigvalsh(a).min())

# diagonal capped at 10; the exceptions have diagonal 9 so they are inside the box
for label in ("3-ii", "3-iii", "3-iv"):
    for rep in run_cases(cases_for(4, label, scaled=True), scaled=True):
        w = [i + 1 for i in rep.case.w]
        iso = [isometric_to_exceptional(s) for s in rep.survivors]
        print(label, w, "survivors:", len(rep.survivors), "isometric to:", iso,
              "certified at:", [c.r for c in rep.certificates])

rep = run_cases([c for c in cases_for(4, "3-i", scaled=True) if c.w == (0, 3)], scaled=True)[0]
print("3-i [1, 4] survivors equal the printed four:", [s.gram.rows for s in rep.survivors] == list(EXCEPTIONAL_3I))
