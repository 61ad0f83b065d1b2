"""Independent reference computations used by the test-suite."""

import itertools

import numpy as np


def active_set_qp(P, q, A, lb, ub, tol=1e-9):
    """Brute-force solution of a small strictly convex QP.

    Enumerates every assignment of each row to {inactive, at lower, at upper}
    (equality rows are always active), solves the equality-constrained KKT
    system densely and returns the unique KKT point: primal feasible with
    correctly signed multipliers. Returns ``(x, y)`` with the convention
    ``Px + q + A'y = 0``.
    """
    P = np.asarray(P, float)
    q = np.asarray(q, float)
    A = np.asarray(A, float)
    n = len(q)
    m = len(lb)
    choices = []
    for i in range(m):
        if lb[i] == ub[i]:
            choices.append(("eq",))
            continue
        opts = ["free"]
        if np.isfinite(lb[i]):
            opts.append("lo")
        if np.isfinite(ub[i]):
            opts.append("up")
        choices.append(tuple(opts))
    best = None
    for combo in itertools.product(*choices):
        active = [i for i, c in enumerate(combo) if c != "free"]
        if len(active) > n:
            continue
        k = len(active)
        Aa = A[active]
        rhs_b = np.array([lb[i] if combo[i] in ("eq", "lo") else ub[i] for i in active])
        K = np.zeros((n + k, n + k))
        K[:n, :n] = P
        K[:n, n:] = Aa.T
        K[n:, :n] = Aa
        try:
            sol = np.linalg.solve(K, np.concatenate([-q, rhs_b]))
        except np.linalg.LinAlgError:
            continue
        if not np.all(np.isfinite(sol)):
            continue
        x, ya = sol[:n], sol[n:]
        ax = A @ x
        if np.any(ax < lb - tol) or np.any(ax > ub + tol):
            continue
        ok = True
        for j, i in enumerate(active):
            if combo[i] == "lo" and ya[j] > tol:
                ok = False
            if combo[i] == "up" and ya[j] < -tol:
                ok = False
        if not ok:
            continue
        y = np.zeros(m)
        y[active] = ya
        obj = 0.5 * x @ P @ x + q @ x
        if best is None or obj < best[2] - 1e-12:
            best = (x, y, obj)
    if best is None:
        raise ValueError("no KKT point found (infeasible?)")
    return best[0], best[1]


def random_convex_qp(rng, n, m, two_sided=0.3, equalities=0):
    """Random strictly convex QP whose feasible set contains a known point."""
    M = rng.normal(size=(n, n))
    P = M @ M.T + 0.5 * np.eye(n)
    q = rng.normal(size=n) * 3
    A = rng.normal(size=(m, n))
    x0 = rng.normal(size=n) * 0.3
    ax0 = A @ x0
    lb = np.full(m, -np.inf)
    ub = np.full(m, np.inf)
    for i in range(m):
        if i < equalities:
            lb[i] = ub[i] = ax0[i]
            continue
        r = rng.random()
        if r < two_sided:
            lb[i] = ax0[i] - rng.uniform(0.1, 1.0)
            ub[i] = ax0[i] + rng.uniform(0.1, 1.0)
        elif r < two_sided + (1 - two_sided) / 2:
            ub[i] = ax0[i] + rng.uniform(0.0, 1.0)
        else:
            lb[i] = ax0[i] - rng.uniform(0.0, 1.0)
    return P, q, A, lb, ub


def central_difference(fun, x, step=1e-5):
    """Central finite-difference Jacobian of a vector function at ``x``."""
    x = np.asarray(x, float)
    f0 = np.atleast_1d(fun(x))
    J = np.zeros((len(f0), len(x)))
    for k in range(len(x)):
        dx = np.zeros_like(x)
        dx[k] = step
        J[:, k] = (np.atleast_1d(fun(x + dx)) - np.atleast_1d(fun(x - dx))) / (2 * step)
    return J


def directional_difference(fun, step=1e-5):
    """Central difference of ``fun(e)`` at ``e = 0`` along a scalar parameter."""
    return (np.atleast_1d(fun(step)) - np.atleast_1d(fun(-step))) / (2 * step)
