"""Compiled numeric cores.

Everything here is numba-jitted and works on plain float64 arrays; nothing
validates its inputs. The public modules wrap these kernels with checking and
friendly result types. Status codes shared by all kernels:

    0  converged / solved
    1  iteration cap reached
    2  LP unbounded (impossible for shifted-positive matrices)
    3  LP objective nonpositive (degenerate input)

Matrix games use the LP reduction: rescale the matrix to unit size, shift it
entrywise positive, solve ``max 1'w  s.t.  B w <= 1, w >= 0`` with a dense
tableau simplex, then read the column mixture from the primal solution and
the row mixture from the slack reduced costs. The leaving row is chosen
lexicographically (right-hand side first, then slack columns, then structural
columns), which prevents cycling on degenerate games; entering column is the
most negative reduced cost with lowest index on ties, so the pivot path is
deterministic.

Stochastic-game state data arrives padded to rectangular tensors: for K
active states with at most mmax/nmax actions, G is (K, mmax, nmax) stage
payoffs, W is (K, mmax, nmax) expected absorbing payoff per cell, Q is
(K, mmax, nmax, K) transition mass to active states, and ms/ns give the true
action counts. Padding cells are never read.
"""

from __future__ import annotations

import numpy as np
from numba import njit

_ENTER_TOL = 1e-12
_PIVOT_TOL = 1e-11


@njit(cache=True)
def _lex_less(T, a, b, c, n, m):
    # True if row a beats row b as the leaving row for pivot column c.
    rhs = n + m
    pa = T[a, c]
    pb = T[b, c]
    ra = T[a, rhs] / pa
    rb = T[b, rhs] / pb
    if ra != rb:
        return ra < rb
    for j in range(n, n + m):
        ra = T[a, j] / pa
        rb = T[b, j] / pb
        if ra != rb:
            return ra < rb
    for j in range(n):
        ra = T[a, j] / pa
        rb = T[b, j] / pb
        if ra != rb:
            return ra < rb
    return False


@njit(cache=True)
def _lp_max_sum(B):
    # max 1'w  s.t.  B w <= 1, w >= 0, for entrywise-positive B.
    # Returns (objective, w, duals, status).
    m, n = B.shape
    rhs = n + m
    T = np.zeros((m + 1, rhs + 1))
    for i in range(m):
        for j in range(n):
            T[i, j] = B[i, j]
        T[i, n + i] = 1.0
        T[i, rhs] = 1.0
    for j in range(n):
        T[m, j] = -1.0
    basis = np.empty(m, np.int64)
    for i in range(m):
        basis[i] = n + i
    cap = 200 * (m + n + 2)
    for _ in range(cap):
        c = -1
        best = -_ENTER_TOL
        for j in range(rhs):
            if T[m, j] < best:
                best = T[m, j]
                c = j
        if c < 0:
            w = np.zeros(n)
            for i in range(m):
                if basis[i] < n:
                    w[basis[i]] = T[i, rhs]
            u = np.empty(m)
            for i in range(m):
                u[i] = T[m, n + i]
            return T[m, rhs], w, u, 0
        r = -1
        for i in range(m):
            if T[i, c] > _PIVOT_TOL:
                if r < 0 or _lex_less(T, i, r, c, n, m):
                    r = i
        if r < 0:
            return 0.0, np.zeros(n), np.zeros(m), 2
        piv = T[r, c]
        for j in range(rhs + 1):
            T[r, j] /= piv
        T[r, c] = 1.0
        for i in range(m + 1):
            if i == r:
                continue
            fac = T[i, c]
            if fac != 0.0:
                for j in range(rhs + 1):
                    T[i, j] -= fac * T[r, j]
                T[i, c] = 0.0
        basis[r] = c
    return 0.0, np.zeros(n), np.zeros(m), 1


@njit(cache=True)
def matrix_game(A):
    """Value and optimal mixtures of the zero-sum game A (row maximizes)."""
    m, n = A.shape
    x = np.zeros(m)
    y = np.zeros(n)
    if m == 1 and n == 1:
        x[0] = 1.0
        y[0] = 1.0
        return A[0, 0], x, y, 0
    if n == 1:
        bi = 0
        for i in range(1, m):
            if A[i, 0] > A[bi, 0]:
                bi = i
        x[bi] = 1.0
        y[0] = 1.0
        return A[bi, 0], x, y, 0
    if m == 1:
        bj = 0
        for j in range(1, n):
            if A[0, j] < A[0, bj]:
                bj = j
        x[0] = 1.0
        y[bj] = 1.0
        return A[0, bj], x, y, 0
    amax = 0.0
    for i in range(m):
        for j in range(n):
            a = abs(A[i, j])
            if a > amax:
                amax = a
    s = amax if amax > 1.0 else 1.0
    B = np.empty((m, n))
    lo = A[0, 0] / s
    for i in range(m):
        for j in range(n):
            B[i, j] = A[i, j] / s
            if B[i, j] < lo:
                lo = B[i, j]
    shift = 1.0 - lo
    for i in range(m):
        for j in range(n):
            B[i, j] += shift
    obj, w, u, st = _lp_max_sum(B)
    if st != 0:
        return 0.0, x, y, st
    if obj <= 0.0:
        return 0.0, x, y, 3
    sy = 0.0
    for j in range(n):
        t = w[j]
        if t < 0.0:
            t = 0.0
        y[j] = t
        sy += t
    for j in range(n):
        y[j] /= sy
    sx = 0.0
    for i in range(m):
        t = u[i]
        if t < 0.0:
            t = 0.0
        x[i] = t
        sx += t
    for i in range(m):
        x[i] /= sx
    return (1.0 / obj - shift) * s, x, y, 0


@njit(cache=True)
def apply_operator(G, W, Q, ms, ns, lam, f, out):
    """One-step operator: out[k] = val of the lambda-weighted stage game."""
    K = ms.shape[0]
    status = 0
    for k in range(K):
        m = ms[k]
        n = ns[k]
        M = np.empty((m, n))
        for i in range(m):
            for j in range(n):
                cont = W[k, i, j]
                for kp in range(K):
                    cont += Q[k, i, j, kp] * f[kp]
                M[i, j] = lam * G[k, i, j] + (1.0 - lam) * cont
        v, x, y, st = matrix_game(M)
        out[k] = v
        if st != 0:
            status = st
    return status


@njit(cache=True)
def value_iteration(G, W, Q, ms, ns, lam, f0, resid_tol, max_iter):
    """Iterate f <- Phi(lam, f) until the sup-norm step is <= resid_tol.

    Returns (f, iterations, last_step, status). The returned f is the image
    of the last iterate, so its own residual is at most (1-lam) * last_step.
    """
    K = ms.shape[0]
    f = f0.copy()
    fn = np.empty(K)
    it = 0
    d = 0.0
    while it < max_iter:
        st = apply_operator(G, W, Q, ms, ns, lam, f, fn)
        if st != 0:
            return f, it, d, st
        d = 0.0
        for k in range(K):
            dk = abs(fn[k] - f[k])
            if dk > d:
                d = dk
            f[k] = fn[k]
        it += 1
        if d <= resid_tol:
            return f, it, d, 0
    return f, it, d, 1


@njit(cache=True)
def stabilize(G, W, Q, ms, ns, plus_side, f0, stop_tol, max_iter):
    """Monotone clamp under the undiscounted operator.

    Plus side iterates f <- min(f, Phi(0, f)), minus side the mirror with
    max. Either way the iterate moves monotonically and every limit point
    satisfies the corresponding weak inequality. Returns (f, iters, status).
    """
    K = ms.shape[0]
    f = f0.copy()
    fn = np.empty(K)
    it = 0
    while it < max_iter:
        st = apply_operator(G, W, Q, ms, ns, 0.0, f, fn)
        if st != 0:
            return f, it, st
        d = 0.0
        for k in range(K):
            t = fn[k]
            if plus_side:
                nk = t if t < f[k] else f[k]
            else:
                nk = t if t > f[k] else f[k]
            dk = abs(nk - f[k])
            if dk > d:
                d = dk
            f[k] = nk
        it += 1
        if d <= stop_tol:
            return f, it, 0
    return f, it, 1


@njit(cache=True)
def mdp_value_iteration(R, PW, P, na, lam, minimize, f0, resid_tol, max_iter):
    """One-player value iteration on a collapsed game.

    R is (K, amax) stage payoff, PW the absorbed continuation part, P the
    (K, amax, K) active transition mass, na the action counts. Returns
    (V, iterations, last_step, status).
    """
    K = na.shape[0]
    V = f0.copy()
    Vn = np.empty(K)
    it = 0
    d = 0.0
    while it < max_iter:
        for k in range(K):
            best = 1e300 if minimize else -1e300
            for a in range(na[k]):
                cont = PW[k, a]
                for kp in range(K):
                    cont += P[k, a, kp] * V[kp]
                q = lam * R[k, a] + (1.0 - lam) * cont
                if minimize:
                    if q < best:
                        best = q
                else:
                    if q > best:
                        best = q
            Vn[k] = best
        d = 0.0
        for k in range(K):
            dk = abs(Vn[k] - V[k])
            if dk > d:
                d = dk
            V[k] = Vn[k]
        it += 1
        if d <= resid_tol:
            return V, it, d, 0
    return V, it, d, 1


@njit(cache=True)
def mdp_greedy(R, PW, P, na, lam, minimize, V):
    """Greedy pure policy for V; ties break to the lowest action index."""
    K = na.shape[0]
    pol = np.zeros(K, np.int64)
    for k in range(K):
        best = 1e300 if minimize else -1e300
        arg = 0
        for a in range(na[k]):
            cont = PW[k, a]
            for kp in range(K):
                cont += P[k, a, kp] * V[kp]
            q = lam * R[k, a] + (1.0 - lam) * cont
            if minimize:
                if q < best:
                    best = q
                    arg = a
            else:
                if q > best:
                    best = q
                    arg = a
        pol[k] = arg
    return pol


def warm_up() -> None:
    """Force compilation of every kernel on tiny inputs."""
    A = np.array([[3.0, 0.0], [1.0, 2.0]])
    matrix_game(A)
    G = np.zeros((1, 2, 2))
    W = np.array([[[1.0, 0.0], [0.0, 1.0]]])
    Q = np.zeros((1, 2, 2, 1))
    ms = np.array([2], dtype=np.int64)
    ns = np.array([2], dtype=np.int64)
    out = np.empty(1)
    apply_operator(G, W, Q, ms, ns, 0.5, np.zeros(1), out)
    value_iteration(G, W, Q, ms, ns, 0.5, np.zeros(1), 1e-6, 1000)
    stabilize(G, W, Q, ms, ns, True, np.zeros(1), 1e-12, 100)
    R = np.zeros((1, 2))
    PW = np.array([[0.3, 0.7]])
    P = np.zeros((1, 2, 1))
    na = np.array([2], dtype=np.int64)
    mdp_value_iteration(R, PW, P, na, 0.5, True, np.zeros(1), 1e-6, 1000)
    mdp_greedy(R, PW, P, na, 0.5, True, np.zeros(1))
