# Dense power-iteration PageRank on the 5-node two-layer graph used in
# test_sampling.cpp. Prints the frozen scores.
import numpy as np

n = 5
a1 = np.zeros((n, n))
for u, v in [(0, 1), (1, 2), (2, 3), (3, 4)]:
    a1[u, v] = a1[v, u] = 1.0
a2 = np.zeros((n, n))
for v, w in [(1, 1.0), (2, 1.0), (3, 1.0), (4, 2.0)]:
    a2[0, v] = a2[v, 0] = w
a2[2, 2] = 1.0

def transition(a):
    a = np.abs(a.copy())
    np.fill_diagonal(a, 0.0)
    col = a.sum(axis=0)
    t = np.empty_like(a)
    for j in range(n):
        t[:, j] = a[:, j] / col[j] if col[j] > 0 else 1.0 / n
    return t

m = (transition(a1) + transition(a2)) / 2
g = 0.85 * m + 0.15 / n
r = np.full(n, 1.0 / n)
for _ in range(100000):
    nxt = g @ r
    if np.abs(nxt - r).sum() < 1e-15:
        r = nxt
        break
    r = nxt
print(", ".join("%.15f" % v for v in r))
