# Growth of the general upper bound, in log space so nothing overflows.
import numpy as np

from oddwaring import bounds

ns = np.arange(3, 201)
chain = bounds.upper_bound_chain(int(ns[-1]))
log_chain = np.array([s.log_chain for s in chain])
log_closed = np.array([s.log_closed_form for s in chain])
quad = np.log(3 * ns ** 2 - 3 * ns + 11)

print("chain stays below n G(n):", bool(np.all(log_chain <= log_closed + 1e-12)))
print("G(n) vs 3n^2-3n+11 at n=3,10,50 (log):",
      [(int(n), round(float(a), 1), round(float(b), 1)) for n, a, b in zip(ns, log_closed, quad) if n in (3, 10, 50)])

# log ratio against exp((4 + 2 sqrt 2 + eps) sqrt n): positive for a long while, then negative for good
for eps in (1.0, 0.5):
    n0 = bounds.envelope_threshold(1.0, eps)
    print(f"eps={eps}: envelope holds from n = {n0}; log ratio there {bounds.envelope_log_ratio(n0, 1.0, eps):.2e}")

print("alpha_bar(1) = %.4f" % bounds.alpha_bar(1))

# split a large diagonal plus a small symmetric perturbation into rank-two blocks
rng = np.random.default_rng(0)
n = 4
s = rng.integers(-20, 21, size=(n, n))
s = np.triu(s) + np.triu(s, 1).T
a = np.full(n, 2 * n * (n - 1) * (3 * n + 2) + 500)
for i in range(1, n):
    if (a[i] + s[i, i] - s[i, 0]) % 2:
        a[i] += 1
dec = bounds.split_decompose(a.tolist(), s.tolist(), 0)
print(len(dec.summands), "summands, residual", dec.r0, "implied size", dec.implied_size)
print("reconstructs A + S:", np.array_equal(np.array(dec.total()), np.diag(a) + s))
