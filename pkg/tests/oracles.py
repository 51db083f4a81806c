"""Reference computations that share no code with the package.

Each oracle reaches the same quantity by a different route: HiGHS through
scipy instead of the in-house simplex, vertex enumeration instead of
pivoting, a dense linear solve of the absorbing chain instead of the
gambler's-ruin closed form, and so on.
"""

import itertools

import numpy as np
from scipy.optimize import linprog
from scipy.stats import wasserstein_distance


def mot_system(x, mu_mass, y, nu_mass):
    """Equality rows for q[i, j] >= 0 (row-major): row sums, column sums,
    and sum_j q[i, j] (y_j - x_i) = 0."""
    n, m = len(x), len(y)
    rows, rhs = [], []
    for i in range(n):
        r = np.zeros((n, m))
        r[i, :] = 1.0
        rows.append(r.ravel())
        rhs.append(mu_mass[i])
    for j in range(m):
        r = np.zeros((n, m))
        r[:, j] = 1.0
        rows.append(r.ravel())
        rhs.append(nu_mass[j])
    for i in range(n):
        r = np.zeros((n, m))
        r[i, :] = np.asarray(y) - x[i]
        rows.append(r.ravel())
        rhs.append(0.0)
    return np.array(rows), np.array(rhs)


def highs_mot(x, mu_mass, y, nu_mass, cost_fn, sense="min"):
    A, b = mot_system(x, mu_mass, y, nu_mass)
    C = np.array([[cost_fn(xi, yj) for yj in y] for xi in x], dtype=float).ravel()
    sign = 1.0 if sense == "min" else -1.0
    res = linprog(sign * C, A_eq=A, b_eq=b, bounds=(0, None), method="highs")
    if res.status != 0:
        return None, None
    return sign * res.fun, res.x.reshape(len(x), len(y))


def vertex_enumeration(c, A, b, tol=1e-10):
    """Min and max of c.q over {A q = b, q >= 0} by trying every basis."""
    A = np.asarray(A, dtype=float)
    b = np.asarray(b, dtype=float)
    c = np.asarray(c, dtype=float)
    rank = np.linalg.matrix_rank(A)
    # keep a maximal independent set of rows
    keep = []
    for i in range(A.shape[0]):
        if np.linalg.matrix_rank(A[keep + [i]]) > len(keep):
            keep.append(i)
    A, b = A[keep], b[keep]
    values, vertices = [], []
    for cols in itertools.combinations(range(A.shape[1]), rank):
        B = A[:, cols]
        if abs(np.linalg.det(B)) < 1e-12:
            continue
        qb = np.linalg.solve(B, b)
        if qb.min() < -tol:
            continue
        q = np.zeros(A.shape[1])
        q[list(cols)] = qb
        values.append(float(c @ q))
        vertices.append(q)
    return min(values), max(values), vertices


def highs_lp(c, A, b):
    res = linprog(c, A_eq=A, b_eq=b, bounds=(0, None), method="highs")
    status = {0: "optimal", 2: "infeasible", 3: "unbounded"}.get(res.status, "other")
    return status, (res.fun if res.status == 0 else None)


def highs_competitor_min(alpha_entries, cost_fn):
    """min beta(c) over competitors of alpha on the grid of alpha's x and y
    values."""
    xs = sorted({x for x, _, _ in alpha_entries})
    ys = sorted({y for _, y, _ in alpha_entries})
    n, m = len(xs), len(ys)
    M = np.zeros((n, m))
    for x, y, w in alpha_entries:
        M[xs.index(x), ys.index(y)] += w
    rows, rhs = [], []
    for i in range(n):
        r = np.zeros((n, m))
        r[i, :] = 1.0
        rows.append(r.ravel())
        rhs.append(M[i].sum())
        r = np.zeros((n, m))
        r[i, :] = np.asarray(ys) - xs[i]
        rows.append(r.ravel())
        rhs.append(M[i] @ (np.asarray(ys) - xs[i]))
    for j in range(m):
        r = np.zeros((n, m))
        r[:, j] = 1.0
        rows.append(r.ravel())
        rhs.append(M[:, j].sum())
    C = np.array([[cost_fn(x, y) for y in ys] for x in xs]).ravel()
    res = linprog(C, A_eq=np.array(rows), b_eq=np.array(rhs), bounds=(0, None), method="highs")
    return res.fun, float((C * M.ravel()).sum())


def absorbing_chain(stop_cols, start_col, size, exclude_time_zero):
    """Distribution of the stopping column of a +-1 walk on columns
    0..size-1 (plus escape states -1 and size), absorbed on ``stop_cols``.

    Solved as (I - Q) N = R on the transient states.
    """
    stop = set(int(c) for c in stop_cols)
    states = list(range(-1, size + 1))
    absorbing = [s for s in states if s in stop or s in (-1, size)]
    transient = [s for s in states if s not in absorbing]
    out = np.zeros(size + 2)  # column 0 is escape below, size + 1 escape above
    if start_col in stop and not exclude_time_zero:
        out[start_col + 1] = 1.0
        return out

    def land(p):
        # where a walk standing at p (after at least one step) ends up
        if p in absorbing:
            r = np.zeros(size + 2)
            r[p + 1] = 1.0
            return r
        return None

    if transient:
        ti = {s: k for k, s in enumerate(transient)}
        Q = np.zeros((len(transient), len(transient)))
        R = np.zeros((len(transient), size + 2))
        for s in transient:
            for p in (s - 1, s + 1):
                if p in ti:
                    Q[ti[s], ti[p]] += 0.5
                else:
                    R[ti[s], p + 1] += 0.5
        N = np.linalg.solve(np.eye(len(transient)) - Q, R)
    else:
        ti, N = {}, None

    def from_state(p):
        hit = land(p)
        return hit if hit is not None else N[ti[p]]

    if start_col in stop:
        return 0.5 * from_state(start_col - 1) + 0.5 * from_state(start_col + 1)
    return from_state(start_col)


def w1(pos_a, mass_a, pos_b, mass_b):
    return wasserstein_distance(pos_a, pos_b, mass_a, mass_b)


def blind_lstsq(values, x_grid, y_grid):
    """Least-squares fit of f(x, y) by phi(x) + psi(y) + k(x) y; returns the
    root-mean-square misfit."""
    n, m = len(x_grid), len(y_grid)
    cols = []
    for i in range(n):
        v = np.zeros((n, m))
        v[i, :] = 1.0
        cols.append(v.ravel())
        v = np.zeros((n, m))
        v[i, :] = y_grid
        cols.append(v.ravel())
    for j in range(m):
        v = np.zeros((n, m))
        v[:, j] = 1.0
        cols.append(v.ravel())
    D = np.array(cols).T
    f = np.asarray(values, dtype=float).ravel()
    coef = np.linalg.lstsq(D, f, rcond=None)[0]
    return float(np.sqrt(np.mean((D @ coef - f) ** 2)))
