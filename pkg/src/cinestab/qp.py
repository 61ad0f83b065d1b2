"""Sparse convex QP solver.

Solves::

    minimize    1/2 x'Px + q'x
    subject to  lb <= Ax <= ub

with a Mehrotra predictor-corrector primal-dual interior-point method.
Rows with ``lb == ub`` are equalities; infinite bounds drop the
corresponding side. Each Newton step factors the sparse quasi-definite
augmented KKT matrix

    [ P + rho*I   E'         G'             ]
    [ E          -delta*I    0              ]
    [ G           0         -S/Z - delta*I  ]

with SuperLU and polishes the step by iterative refinement against the
unregularized system. Problem data are Ruiz-equilibrated first.
"""

from dataclasses import dataclass, field
from enum import Enum

import logging

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla


log = logging.getLogger(__name__)


class Status(str, Enum):
    OPTIMAL = "optimal"
    MAX_ITERATIONS = "max_iterations"
    INFEASIBLE = "infeasible"


@dataclass(frozen=True)
class SparseQP:
    P: sp.csc_matrix
    q: np.ndarray
    A: sp.csc_matrix
    lb: np.ndarray
    ub: np.ndarray

    def __post_init__(self):
        P = sp.csc_matrix(self.P, dtype=float)
        A = sp.csc_matrix(self.A, dtype=float)
        q = np.asarray(self.q, dtype=float).reshape(-1)
        lb = np.asarray(self.lb, dtype=float).reshape(-1)
        ub = np.asarray(self.ub, dtype=float).reshape(-1)
        n = len(q)
        if P.shape != (n, n):
            raise ValueError(f"P has shape {P.shape}, expected ({n}, {n})")
        if A.shape[1] != n and A.shape[0] > 0:
            raise ValueError(f"A has {A.shape[1]} columns, expected {n}")
        if A.shape[0] == 0:
            A = sp.csc_matrix((0, n))
        m = A.shape[0]
        if lb.shape != (m,) or ub.shape != (m,):
            raise ValueError("bound vectors must have one entry per constraint row")
        if np.any(lb > ub):
            raise ValueError("lower bound exceeds upper bound")
        if np.any(np.isnan(lb)) or np.any(np.isnan(ub)) or not np.all(np.isfinite(q)):
            raise ValueError("NaN in problem data")
        asym = abs(P - P.T).max() if P.nnz else 0.0
        if asym > 1e-12 * max(1.0, abs(P).max() if P.nnz else 1.0):
            raise ValueError(f"P is not symmetric (max asymmetry {asym:.3g})")
        object.__setattr__(self, "P", P)
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "q", q)
        object.__setattr__(self, "lb", lb)
        object.__setattr__(self, "ub", ub)

    @property
    def dims(self):
        return self.A.shape[1], self.A.shape[0]

    def objective(self, x):
        return 0.5 * float(x @ (self.P @ x)) + float(self.q @ x)


@dataclass(frozen=True)
class SolverSettings:
    eps_primal: float = 1e-6
    eps_dual: float = 1e-6
    # complementarity target, in unscaled units
    eps_gap: float = 1e-10
    eps_infeasible: float = 1e-8
    max_iterations: int = 200
    ruiz_iterations: int = 10
    refine_steps: int = 10
    primal_reg: float = 1e-8
    dual_reg: float = 1e-8
    # SuperLU diagonal pivot threshold; 0 keeps the symmetric ordering
    pivot_threshold: float = 0.0

    def __post_init__(self):
        for name in ("eps_primal", "eps_dual", "eps_gap", "eps_infeasible", "primal_reg", "dual_reg"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be at least 1")


@dataclass(frozen=True)
class QpSolution:
    x: np.ndarray
    y: np.ndarray
    status: Status
    iterations: int
    primal_res: float
    dual_res: float
    comp_slack: float = 0.0
    objective: float = float("nan")
    info: dict = field(default_factory=dict)

    @property
    def optimal(self):
        return self.status is Status.OPTIMAL


def kkt_residuals(qp, sol):
    """Primal infeasibility, dual infeasibility and complementarity violation.

    ``sol`` may be a :class:`QpSolution` or an ``(x, y)`` pair.
    """
    x, y = (sol.x, sol.y) if isinstance(sol, QpSolution) else sol
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    ax = qp.A @ x
    primal = float(np.max(np.abs(np.clip(ax, qp.lb, qp.ub) - ax), initial=0.0))
    dual = float(np.max(np.abs(qp.P @ x + qp.q + qp.A.T @ y), initial=0.0))
    # y > 0 pairs with the upper bound, y < 0 with the lower bound
    with np.errstate(invalid="ignore"):
        gap_up = np.where(y > 0, y * (qp.ub - ax), 0.0)
        gap_lo = np.where(y < 0, -y * (ax - qp.lb), 0.0)
    comp = np.abs(np.concatenate([gap_up, gap_lo]))
    comp = np.where(np.isnan(comp), np.inf, comp)
    return primal, dual, float(np.max(comp, initial=0.0))


def _ruiz(P, A, iterations):
    n = P.shape[0]
    m = A.shape[0]
    d = np.ones(n)
    e = np.ones(m)
    Ps, As = P.copy(), A.copy()
    for _ in range(iterations):
        col_p = np.abs(Ps).max(axis=0).toarray().ravel() if Ps.nnz else np.zeros(n)
        col_a = np.abs(As).max(axis=0).toarray().ravel() if As.nnz else np.zeros(n)
        row_a = np.abs(As).max(axis=1).toarray().ravel() if As.nnz else np.zeros(m)
        dn = np.maximum(col_p, col_a)
        dn = np.where(dn < 1e-8, 1.0, dn)
        dd = 1.0 / np.sqrt(np.clip(dn, 1e-4, 1e4))
        ee = 1.0 / np.sqrt(np.clip(np.where(row_a < 1e-8, 1.0, row_a), 1e-4, 1e4))
        Dd = sp.diags(dd)
        Ps = (Dd @ Ps @ Dd).tocsc()
        As = (sp.diags(ee) @ As @ Dd).tocsc()
        d *= dd
        e *= ee
    return Ps, As, d, e


def _split_rows(lb, ub):
    eq = np.flatnonzero(lb == ub)
    upper = np.flatnonzero(np.isfinite(ub) & (lb != ub))
    lower = np.flatnonzero(np.isfinite(lb) & (lb != ub))
    return eq, upper, lower


class _Kkt:
    """Augmented Newton system for one set of barrier weights.

    ``winv`` holds ``s / z`` for the inequality rows. Keeping it on the
    diagonal (rather than forming ``G'WG``) avoids the cancellation that
    ruins accuracy once the weights span many orders of magnitude.
    """

    def __init__(self, Pbar, G, E, winv, settings):
        n = Pbar.shape[0]
        me, mi = E.shape[0], G.shape[0]
        self.n, self.me = n, me
        self.k_true = sp.bmat([
            [Pbar, E.T, G.T],
            [E, sp.csc_matrix((me, me)), sp.csc_matrix((me, mi))],
            [G, sp.csc_matrix((mi, me)), sp.diags(-np.asarray(winv, dtype=float)).reshape(mi, mi)],
        ], format="csc")
        reg = np.concatenate([np.full(n, settings.primal_reg), np.full(me, -settings.dual_reg),
                              np.full(mi, -settings.dual_reg)])
        k_reg = (self.k_true + sp.diags(reg)).tocsc()
        self.lu = spla.splu(k_reg, permc_spec="MMD_AT_PLUS_A", diag_pivot_thresh=settings.pivot_threshold,
                            options={"SymmetricMode": True})
        self.refine = settings.refine_steps

    def solve(self, rhs):
        sol = self.lu.solve(rhs)
        res = rhs - self.k_true @ sol
        err = np.max(np.abs(res), initial=0.0)
        tol = 1e-14 * max(1.0, np.max(np.abs(rhs), initial=0.0))
        for _ in range(self.refine):
            if err <= tol:
                break
            cand = sol + self.lu.solve(res)
            cres = rhs - self.k_true @ cand
            cerr = np.max(np.abs(cres), initial=0.0)
            if not cerr < err:
                break
            sol, res, err = cand, cres, cerr
        n, me = self.n, self.me
        return sol[:n], sol[n:n + me], sol[n + me:]


def _max_step(v, dv):
    neg = dv < 0
    if not np.any(neg):
        return 1.0
    return min(1.0, float(np.min(-v[neg] / dv[neg])))


def solve(qp, settings=None):
    """Solve ``qp``; the returned status is one of :class:`Status`.

    The result is deterministic for identical inputs and settings.
    """
    settings = settings or SolverSettings()
    n, m = qp.dims
    eq, upper, lower = _split_rows(qp.lb, qp.ub)

    Ps, As, d, e = _ruiz(qp.P, qp.A, settings.ruiz_iterations)
    qs = d * qp.q
    cost_scale = max(
        float(np.abs(Ps).max(axis=0).toarray().mean()) if Ps.nnz else 0.0,
        float(np.max(np.abs(qs), initial=0.0)),
    )
    c = 1.0 / cost_scale if cost_scale > 1e-8 else 1.0
    c = float(np.clip(c, 1e-4, 1e4))
    Pbar = (c * Ps).tocsc()
    qbar = c * qs
    As = As.tocsr()
    lbs = qp.lb * e
    ubs = qp.ub * e

    E = As[eq].tocsc()
    b = ubs[eq]
    G = sp.vstack([As[upper], -As[lower]], format="csc") if len(upper) + len(lower) else sp.csc_matrix((0, n))
    h = np.concatenate([ubs[upper], -lbs[lower]])
    n_up = len(upper)
    mi = len(h)
    GT = G.T.tocsc()
    ET = E.T.tocsc()

    def unscale(x, yeq, z):
        ybar = np.zeros(m)
        ybar[eq] = yeq
        np.add.at(ybar, upper, z[:n_up])
        np.add.at(ybar, lower, -z[n_up:])
        return d * x, e * ybar / c

    def finish(status, it, x, yeq, z, info=None):
        xu, yu = unscale(x, yeq, z)
        pr, du, comp = kkt_residuals(qp, (xu, yu))
        return QpSolution(xu, yu, status, it, pr, du, comp, qp.objective(xu), info or {})

    # initial point from a least-squares KKT solve with unit barrier weights
    kkt = _Kkt(Pbar, G, E, np.ones(mi), settings)
    x, yeq, z = kkt.solve(np.concatenate([-qbar, b, h]))
    s = -z.copy()
    if mi:
        shift_s = -s.min()
        if shift_s >= 0:
            s = s + 1.0 + shift_s
        shift_z = -z.min()
        if shift_z >= 0:
            z = z + 1.0 + shift_z

    comp_target = settings.eps_gap
    for it in range(1, settings.max_iterations + 1):
        rd = Pbar @ x + qbar + ET @ yeq + GT @ z
        re = E @ x - b
        ri = G @ x + s - h
        mu = float(s @ z) / mi if mi else 0.0

        xu, yu = unscale(x, yeq, z)
        pr, du, comp = kkt_residuals(qp, (xu, yu))
        # s_i z_i in unscaled units is (s_i z_i) / c
        gap = mu / c
        if pr <= settings.eps_primal and du <= settings.eps_dual and gap <= comp_target:
            return finish(Status.OPTIMAL, it - 1, x, yeq, z, {"mu": gap})

        if mi and _certifies_infeasible(GT, ET, h, b, z, yeq, settings.eps_infeasible):
            return finish(Status.INFEASIBLE, it - 1, x, yeq, z, {"mu": gap})

        kkt = _Kkt(Pbar, G, E, s / z if mi else np.zeros(0), settings)

        def newton(rc):
            dx, dy, dz = kkt.solve(np.concatenate([-rd, -re, -ri + rc / z if mi else np.zeros(0)]))
            ds = -(rc + s * dz) / z if mi else np.zeros(0)
            return dx, dy, ds, dz

        # predictor
        dx, dy, ds, dz = newton(s * z)
        if mi:
            alpha = min(_max_step(s, ds), _max_step(z, dz))
            mu_aff = float((s + alpha * ds) @ (z + alpha * dz)) / mi
            sigma = (mu_aff / mu) ** 3 if mu > 0 else 0.0
            # corrector
            dx, dy, ds, dz = newton(s * z + ds * dz - sigma * mu)
            alpha = min(1.0, 0.99 * min(_max_step(s, ds), _max_step(z, dz)))
        else:
            alpha = 1.0
        log.debug("it %3d  pres %.2e  dres %.2e  mu %.2e  sigma %.2e  alpha %.3f",
                  it, pr, du, gap, sigma if mi else 0.0, alpha)
        x = x + alpha * dx
        yeq = yeq + alpha * dy
        s = s + alpha * ds
        z = z + alpha * dz
        if mi:
            # guard against underflow of the barrier variables
            s = np.maximum(s, 1e-300)
            z = np.maximum(z, 1e-300)

    return finish(Status.MAX_ITERATIONS, settings.max_iterations, x, yeq, z)


def _certifies_infeasible(GT, ET, h, b, z, yeq, tol):
    # Farkas: E'y + G'z = 0, z >= 0, b'y + h'z < 0
    scale = max(np.max(np.abs(z), initial=0.0), np.max(np.abs(yeq), initial=0.0))
    if scale < 1e6:
        return False
    zn = z / scale
    yn = yeq / scale
    resid = np.max(np.abs(GT @ zn + ET @ yn), initial=0.0)
    return resid <= tol * 1e2 and float(h @ zn + b @ yn) < -tol


def dump_triplets(qp, fh):
    """Write ``qp`` as text, one nonzero per line: ``<tag> <row> <col> <value>``.

    Tags are ``P`` and ``A`` for matrix entries (``P`` lists the full
    symmetric matrix); vectors use ``q``, ``lb`` and ``ub`` with ``col`` 0.
    A first line ``# qp <num_vars> <num_constraints>`` gives the dimensions.
    """
    n, m = qp.dims
    fh.write(f"# qp {n} {m}\n")
    for tag, mat in (("P", qp.P), ("A", qp.A)):
        coo = mat.tocoo()
        order = np.lexsort((coo.col, coo.row))
        for i, j, v in zip(coo.row[order], coo.col[order], coo.data[order]):
            fh.write(f"{tag} {i} {j} {float(v):.17g}\n")
    for tag, vec in (("q", qp.q), ("lb", qp.lb), ("ub", qp.ub)):
        for i, v in enumerate(vec):
            if v != 0.0:
                fh.write(f"{tag} {i} 0 {float(v):.17g}\n")


def load_triplets(fh):
    header = fh.readline().split()
    if header[:2] != ["#", "qp"]:
        raise ValueError("missing '# qp n m' header")
    n, m = int(header[2]), int(header[3])
    trip = {"P": ([], [], []), "A": ([], [], [])}
    vecs = {"q": np.zeros(n), "lb": np.zeros(m), "ub": np.zeros(m)}
    for line in fh:
        tag, i, j, v = line.split()
        if tag in trip:
            trip[tag][0].append(int(i))
            trip[tag][1].append(int(j))
            trip[tag][2].append(float(v))
        else:
            vecs[tag][int(i)] = float(v)
    P = sp.csc_matrix((trip["P"][2], (trip["P"][0], trip["P"][1])), shape=(n, n))
    A = sp.csc_matrix((trip["A"][2], (trip["A"][0], trip["A"][1])), shape=(m, n))
    return SparseQP(P, vecs["q"], A, vecs["lb"], vecs["ub"])
