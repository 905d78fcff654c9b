"""Reference computations that share no code with the package.

* ``exact_b1`` rebuilds the buffer-one chain from the switching rules in
  exact rational arithmetic and solves it by Gaussian elimination.
* ``uniformized_stationary`` finds pi by power iteration on the uniformized
  jump matrix instead of a linear solve.
"""

from __future__ import annotations

from fractions import Fraction

import numpy as np


def _solve_exact(a: list[list[Fraction]], b: list[Fraction]) -> list[Fraction]:
    n = len(b)
    m = [row[:] + [rhs] for row, rhs in zip(a, b)]
    for col in range(n):
        piv = next(r for r in range(col, n) if m[r][col] != 0)
        m[col], m[piv] = m[piv], m[col]
        for r in range(n):
            if r != col and m[r][col] != 0:
                f = m[r][col] / m[col][col]
                m[r] = [x - f * y for x, y in zip(m[r], m[col])]
    return [m[i][n] / m[i][i] for i in range(n)]


def exact_b1(k: int, mu, alpha, r1, r2, r3):
    """Exact (pi, c3, c2) for B=1, states ordered (0,0), (1,0), (1,1)."""
    mu, alpha, r1, r2, r3 = (Fraction(x) for x in (mu, alpha, r1, r2, r3))
    # (from, to, rate, bsm per firing, ghz per firing)
    arcs = [
        (0, 1, k * mu, 0, 0),
        (1, 0, (k - 1) * mu * r1, 1, 0),
        (1, 2, (k - 1) * mu * (1 - r1), 0, 0),
        (1, 0, alpha, 0, 0),
        (2, 1, 2 * mu * r3, 1, 0),
        (2, 0, (k - 2) * mu * r2, 0, 1),
        (2, 1, (k - 2) * mu * (1 - r2), 1, 0),
        (2, 1, 2 * alpha, 0, 0),
    ]
    q = [[Fraction(0)] * 3 for _ in range(3)]
    for i, j, rate, _, _ in arcs:
        q[i][j] += rate
        q[i][i] -= rate
    # pi Q = 0 -> Q^T pi = 0; replace the first equation by normalization
    a = [[q[j][i] for j in range(3)] for i in range(3)]
    a[0] = [Fraction(1)] * 3
    pi = _solve_exact(a, [Fraction(1), Fraction(0), Fraction(0)])
    c2 = sum(pi[i] * rate * bsm for i, _, rate, bsm, _ in arcs)
    c3 = sum(pi[i] * rate * ghz for i, _, rate, _, ghz in arcs)
    return pi, c3, c2


def uniformized_stationary(q: np.ndarray, tol: float = 1e-15, max_iter: int = 200_000) -> np.ndarray:
    lam = 1.05 * np.max(-np.diag(q))
    p = np.eye(q.shape[0]) + q / lam
    pi = np.full(q.shape[0], 1.0 / q.shape[0])
    for _ in range(max_iter):
        nxt = pi @ p
        if np.max(np.abs(nxt - pi)) < tol:
            return nxt / nxt.sum()
        pi = nxt
    raise RuntimeError("power iteration did not converge")
