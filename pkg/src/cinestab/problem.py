"""Assembly of the stabilization QP and extraction of correction plans.

The decision vector is laid out frame by frame. Frame ``t`` owns a
contiguous block holding its 9 log-correction entries ``p_t``, then the
epigraph variables of ``e1(t)``, ``e2(t)`` and ``e3(t)`` (when those
derivatives exist), then any soft-saliency slack variables. Keeping each
frame contiguous keeps the KKT matrix narrowly banded.
"""

from dataclasses import dataclass, field, asdict
from typing import Optional, Sequence

import numpy as np
import scipy.sparse as sp

from . import lie
from .errors import ConfigError, InfeasibleSaliency, LengthMismatch, NotOptimal
from .path import STENCILS, AnalysisPath, FrameGeometry, derivatives
from .qp import SolverSettings, SparseQP, Status

DEFAULT_LB = np.array([-0.15, -0.15, -0.5, -0.15, -0.15, -0.5, -0.2, -0.2, -np.inf])
DEFAULT_UB = -DEFAULT_LB

SALIENCY_MODES = ("hard", "soft", "center")


@dataclass(frozen=True)
class SaliencyTrack:
    """Salient points per frame, normalized coordinates; empty frames are unconstrained."""

    points: tuple

    def __post_init__(self):
        pts = tuple(np.asarray(p, dtype=float).reshape(-1, 2) for p in self.points)
        for t, p in enumerate(pts):
            if not np.all(np.isfinite(p)):
                raise ConfigError(f"saliency frame {t}: non-finite point")
        object.__setattr__(self, "points", pts)

    def __len__(self):
        return len(self.points)

    def slice(self, start, stop):
        return SaliencyTrack(self.points[start:stop])

    def centroid(self, t):
        p = self.points[t]
        return p.mean(axis=0) if len(p) else None


@dataclass(frozen=True)
class StabilizerConfig:
    # Fidelity weight in normalized units. Translations are ~1000x smaller
    # than in pixels, so w0 = 1 lets the L1 terms flatten any slow pan.
    w0: object = 170.0
    w1: float = 10.0
    w2: float = 1.0
    w3: float = 100.0
    crop_fraction: float = 0.2
    crop_margin: Optional[float] = None
    element_lb: Sequence[float] = tuple(DEFAULT_LB)
    element_ub: Sequence[float] = tuple(DEFAULT_UB)
    w_diag: float = 10.0
    w_offdiag: float = 10.0
    keystone_ratio_weight: float = 10.0
    saliency: Optional[SaliencyTrack] = None
    saliency_mode: str = "soft"
    saliency_penalty: float = 50.0
    center_weight: float = 100.0
    window_length: int = 1800
    window_stride: int = 1500
    solver: SolverSettings = field(default_factory=SolverSettings)

    def __post_init__(self):
        w0 = np.asarray(self.w0, dtype=float)
        if w0.ndim > 1 or np.any(~np.isfinite(w0)) or np.any(w0 <= 0):
            raise ConfigError("w0 must be a positive scalar or per-frame sequence")
        for name in ("w1", "w2", "w3", "w_diag", "w_offdiag", "keystone_ratio_weight",
                     "saliency_penalty", "center_weight"):
            v = getattr(self, name)
            if not (np.isfinite(v) and v >= 0):
                raise ConfigError(f"{name} must be a finite non-negative number, got {v}")
        if not (0.0 < self.crop_fraction <= 0.5):
            raise ConfigError(f"crop fraction must lie in (0, 0.5], got {self.crop_fraction}")
        lb = np.asarray(self.element_lb, dtype=float)
        ub = np.asarray(self.element_ub, dtype=float)
        if lb.shape != (9,) or ub.shape != (9,):
            raise ConfigError("element bounds must be 9-vectors")
        if np.any(lb > 0) or np.any(ub < 0):
            raise ConfigError("element bounds must contain zero")
        if self.saliency_mode not in SALIENCY_MODES:
            raise ConfigError(f"saliency mode must be one of {SALIENCY_MODES}")
        if self.window_stride < 4 or self.window_stride >= self.window_length:
            raise ConfigError("window stride must satisfy 4 <= l_s < l_w")
        object.__setattr__(self, "element_lb", tuple(float(v) for v in lb))
        object.__setattr__(self, "element_ub", tuple(float(v) for v in ub))
        if w0.ndim == 1:
            object.__setattr__(self, "w0", tuple(float(v) for v in w0))

    def frame_weights(self, n, start=0):
        w0 = np.asarray(self.w0, dtype=float)
        if w0.ndim == 0:
            return np.full(n, float(w0))
        if len(w0) < start + n:
            raise LengthMismatch(f"w0 has {len(w0)} entries, need {start + n}")
        return w0[start:start + n].copy()

    def to_dict(self):
        """Plain JSON-ready echo of every setting except the saliency points."""
        d = asdict(self)
        d.pop("saliency")
        d["has_saliency"] = self.saliency is not None
        d["w0"] = list(self.w0) if isinstance(self.w0, tuple) else float(self.w0)
        d["element_lb"] = list(self.element_lb)
        d["element_ub"] = list(self.element_ub)
        return d


@dataclass(frozen=True)
class VariableLayout:
    n: int
    orders: tuple
    p: np.ndarray
    u: dict
    slack: tuple
    frame_start: np.ndarray
    size: int

    def frame_slice(self, t):
        stop = self.frame_start[t + 1] if t + 1 < self.n else self.size
        return slice(int(self.frame_start[t]), int(stop))


def make_layout(n, orders=(1, 2, 3), slack_counts=None):
    """Frame-major variable layout; only derivative orders with ``n > order`` get epigraph variables."""
    orders = tuple(k for k in orders if n > k)
    slack_counts = np.zeros(n, dtype=int) if slack_counts is None else np.asarray(slack_counts, dtype=int)
    p = np.zeros((n, 9), dtype=int)
    u = {k: np.zeros((n - k, 9), dtype=int) for k in orders}
    slack = []
    starts = np.zeros(n, dtype=int)
    pos = 0
    for t in range(n):
        starts[t] = pos
        p[t] = np.arange(pos, pos + 9)
        pos += 9
        for k in orders:
            if t < n - k:
                u[k][t] = np.arange(pos, pos + 9)
                pos += 9
        slack.append(np.arange(pos, pos + slack_counts[t]))
        pos += slack_counts[t]
    return VariableLayout(n, orders, p, u, tuple(slack), starts, pos)


@dataclass
class CostBlock:
    name: str
    P: sp.csr_matrix
    q: np.ndarray
    constant: float = 0.0


@dataclass
class RowBlock:
    name: str
    A: sp.csr_matrix
    lb: np.ndarray
    ub: np.ndarray
    frame: np.ndarray


def _rows(name, layout, rows, cols, vals, lb, ub, frame):
    A = sp.csr_matrix((vals, (rows, cols)), shape=(len(lb), layout.size))
    return RowBlock(name, A, np.asarray(lb, float), np.asarray(ub, float), np.asarray(frame, int))


def _cost(name, layout, rows=(), cols=(), vals=(), q=None, constant=0.0):
    P = sp.csr_matrix((vals, (rows, cols)), shape=(layout.size, layout.size))
    return CostBlock(name, P, np.zeros(layout.size) if q is None else q, constant)


def _per_frame_rows(layout, M, lo, hi, frames=None):
    """Replicate the block row ``M @ p_t`` for every frame, returning COO data."""
    frames = np.arange(layout.n) if frames is None else np.asarray(frames)
    k = M.shape[0]
    r, c = np.nonzero(M)
    rows = (np.arange(len(frames))[:, None] * k + r[None, :]).ravel()
    cols = layout.p[frames][:, c].ravel()
    vals = np.tile(M[r, c], len(frames))
    lb = np.tile(lo, len(frames))
    ub = np.tile(hi, len(frames))
    return rows, cols, vals, lb, ub, np.repeat(frames, k)


def build_l1_epigraph(f, layout, w1, w2, w3):
    """Epigraph rows ``-u <= e_k(t) <= u`` and linear costs ``w_k * u``."""
    f = np.asarray(f, dtype=float)
    weights = {1: w1, 2: w2, 3: w3}
    q = np.zeros(layout.size)
    rows, cols, vals, lbs, ubs, frames = [], [], [], [], [], []
    row = 0
    for k in layout.orders:
        m = layout.n - k
        u = layout.u[k]
        q[u.ravel()] = weights[k]
        cp, cf = STENCILS[k]
        const = sum(cf[i] * f[i:i + m] for i in range(k + 1)).ravel()
        base = row + 2 * np.arange(m * 9)
        for i in range(k + 1):
            pc = layout.p[i:i + m].ravel()
            for sign_row in (0, 1):
                rows.append(base + sign_row)
                cols.append(pc)
                vals.append(np.full(m * 9, cp[i]))
        # row 2r: e - u <= 0 ; row 2r + 1: e + u >= 0
        rows += [base, base + 1]
        cols += [u.ravel(), u.ravel()]
        vals += [np.full(m * 9, -1.0), np.full(m * 9, 1.0)]
        lb = np.empty(2 * m * 9)
        ub = np.empty(2 * m * 9)
        lb[0::2] = -np.inf
        ub[0::2] = -const
        lb[1::2] = -const
        ub[1::2] = np.inf
        lbs.append(lb)
        ubs.append(ub)
        frames.append(np.repeat(np.arange(m), 18))
        row += 2 * m * 9
    if not lbs:
        return _cost("l1", layout, q=q), _rows("epigraph", layout, [], [], [], [], [], [])
    block = _rows("epigraph", layout, np.concatenate(rows), np.concatenate(cols), np.concatenate(vals),
                  np.concatenate(lbs), np.concatenate(ubs), np.concatenate(frames))
    return _cost("l1", layout, q=q), block


def build_fidelity(w0, layout):
    """``1/2 * w0_t * ||p_t||^2`` for every frame."""
    w0 = np.broadcast_to(np.asarray(w0, dtype=float), (layout.n,))
    idx = layout.p.ravel()
    return _cost("fidelity", layout, idx, idx, np.repeat(w0, 9))


def build_trace_and_bounds(layout, element_lb, element_ub):
    lb9 = np.asarray(element_lb, dtype=float)
    ub9 = np.asarray(element_ub, dtype=float)
    finite = np.flatnonzero(np.isfinite(lb9) | np.isfinite(ub9))
    M = np.zeros((1 + len(finite), 9))
    M[0, [0, 4, 8]] = 1.0
    M[np.arange(1, 1 + len(finite)), finite] = 1.0
    lo = np.concatenate([[0.0], lb9[finite]])
    hi = np.concatenate([[0.0], ub9[finite]])
    return _rows("trace_bounds", layout, *_per_frame_rows(layout, M, lo, hi))


def build_valid_pixel(geom, layout):
    """Linearized corners of the corrected crop window stay inside the frame."""
    J = lie.corner_jacobian(geom.crop_window)
    c = geom.crop_window.reshape(-1)
    half = np.tile(geom.frame_half_extent, 4)
    return _rows("valid_pixel", layout, *_per_frame_rows(layout, J, -half - c, half - c))


def fov_rows(geom):
    """Linearized area and sidelength rows ``M @ p >= rhs`` for one frame."""
    J = lie.corner_jacobian(geom.crop_window)
    M = np.vstack([lie.area_gradient(geom.crop_window) @ J,
                   lie.sidelength_gradients(geom.crop_window) @ J])
    offset = np.concatenate([[geom.window_area], lie.sidelengths(geom.crop_window)])
    bound = np.concatenate([[geom.min_area], geom.min_sidelengths])
    return M, bound - offset


def build_fov(geom, layout):
    M, rhs = fov_rows(geom)
    return _rows("fov", layout, *_per_frame_rows(layout, M, rhs, np.full(len(rhs), np.inf)))


def build_distortion(layout, w_diag, w_offdiag):
    """``w_diag (p0 - p4)^2 + w_offdiag (p1 + p3)^2`` per frame."""
    Q = np.zeros((9, 9))
    a = np.zeros(9)
    a[[0, 4]] = [1.0, -1.0]
    b = np.zeros(9)
    b[[1, 3]] = [1.0, 1.0]
    Q += 2.0 * w_diag * np.outer(a, a) + 2.0 * w_offdiag * np.outer(b, b)
    return _block_diag_cost("distortion", layout, Q)


def _block_diag_cost(name, layout, Q, q_frames=None, constant=0.0, frames=None):
    frames = np.arange(layout.n) if frames is None else np.asarray(frames, dtype=int)
    r, c = np.nonzero(Q)
    rows = layout.p[frames][:, r].ravel()
    cols = layout.p[frames][:, c].ravel()
    vals = np.tile(Q[r, c], len(frames))
    q = np.zeros(layout.size)
    if q_frames is not None:
        q[layout.p[frames].ravel()] = np.asarray(q_frames).ravel()
    return _cost(name, layout, rows, cols, vals, q, constant)


def estimate_keystone_ratio(f, min_frames=8, max_relative_residual=0.5):
    """Least-squares keystone/translation slopes ``(R_x, R_y)`` of the input increments.

    An axis gets ``R = 0`` when the translation energy is negligible or the
    linear fit explains too little of the keystone signal.
    """
    f = f.f if isinstance(f, AnalysisPath) else np.asarray(f, dtype=float)
    if len(f) < min_frames:
        return 0.0, 0.0
    ratios = []
    for k_idx, t_idx in zip(lie.KEYSTONE, lie.TRANSLATION):
        k = f[:, k_idx]
        t = f[:, t_idx]
        tt = float(t @ t)
        if tt < 1e-8:
            ratios.append(0.0)
            continue
        r = float(k @ t) / tt
        kk = float(np.linalg.norm(k))
        resid = float(np.linalg.norm(k - r * t))
        ratios.append(r if kk > 0 and resid <= max_relative_residual * kk else 0.0)
    return tuple(ratios)


def build_keystone_ratio(layout, ratio, weight):
    """``weight * ((p6 - R_x p2)^2 + (p7 - R_y p5)^2)`` per frame."""
    Q = np.zeros((9, 9))
    for (k_idx, t_idx), r in zip(zip(lie.KEYSTONE, lie.TRANSLATION), ratio):
        v = np.zeros(9)
        v[k_idx] = 1.0
        v[t_idx] = -r
        Q += 2.0 * weight * np.outer(v, v)
    return _block_diag_cost("keystone_ratio", layout, Q)


def saliency_slack_counts(track, mode):
    if track is None or mode != "soft":
        return None
    return np.array([4 * len(p) for p in track.points], dtype=int)


def build_saliency_inclusion(track, geom, layout, mode, penalty=50.0):
    """Rows keeping ``s - J(s) p_t`` (linearized ``P_t^-1 s``) inside the crop window.

    Four one-sided rows per point: right, left, top, bottom edges. In soft
    mode each row gets its own non-negative slack with linear cost.
    """
    wx, wy = geom.window_half_extent
    rows, cols, vals, lbs, ubs, frames = [], [], [], [], [], []
    q = np.zeros(layout.size)
    row = 0
    for t, pts in enumerate(track.points):
        for j, s in enumerate(pts):
            J = lie.displacement_jacobian(s)
            # (-J_axis p) with bound on the inverse-corrected coordinate
            specs = [(0, -np.inf, wx - s[0], -1.0), (0, -wx - s[0], np.inf, 1.0),
                     (1, -np.inf, wy - s[1], -1.0), (1, -wy - s[1], np.inf, 1.0)]
            for r_i, (axis, lo, hi, slack_sign) in enumerate(specs):
                nz = np.flatnonzero(J[axis])
                rows.append(np.full(len(nz), row))
                cols.append(layout.p[t][nz])
                vals.append(-J[axis][nz])
                if mode == "soft":
                    sidx = layout.slack[t][4 * j + r_i]
                    rows.append(np.array([row]))
                    cols.append(np.array([sidx]))
                    vals.append(np.array([slack_sign]))
                    q[sidx] = penalty
                lbs.append(lo)
                ubs.append(hi)
                frames.append(t)
                row += 1
    if mode == "soft":
        # slack >= 0
        for t in range(layout.n):
            for sidx in layout.slack[t]:
                rows.append(np.array([row]))
                cols.append(np.array([sidx]))
                vals.append(np.array([1.0]))
                lbs.append(0.0)
                ubs.append(np.inf)
                frames.append(t)
                row += 1
    cat = (lambda a: np.concatenate(a)) if rows else (lambda a: np.zeros(0))
    block = _rows("saliency", layout, cat(rows), cat(cols), cat(vals), lbs, ubs, frames)
    return block, _cost("saliency_slack", layout, q=q)


def centering_targets(track):
    """Per-frame pure-translation logs moving the crop window onto the salient centroid.

    With ``p_t`` equal to the target, ``P_t^-1`` maps the centroid to the origin.
    Frames without points get ``None``.
    """
    out = []
    for t in range(len(track)):
        c = track.centroid(t)
        out.append(None if c is None else lie.translation_log(c[0], c[1]))
    return out


def build_centering(track, layout, weight):
    """``weight * ||p_t - target_t||^2`` on frames with salient points."""
    targets = centering_targets(track)
    frames = [t for t, g in enumerate(targets) if g is not None]
    if not frames or weight == 0:
        return _cost("centering", layout)
    tg = np.array([targets[t] for t in frames])
    Q = 2.0 * weight * np.eye(9)
    constant = weight * float(np.sum(tg * tg))
    return _block_diag_cost("centering", layout, Q, q_frames=-2.0 * weight * tg,
                            constant=constant, frames=frames)


def build_fixed_prefix(layout, fixed):
    """Equality rows ``p_t = fixed_t`` for the first ``len(fixed)`` frames."""
    fixed = np.asarray(fixed, dtype=float).reshape(-1, 9)
    k = len(fixed)
    rows = np.arange(9 * k)
    cols = layout.p[:k].ravel()
    vals = np.ones(9 * k)
    return _rows("fixed_prefix", layout, rows, cols, vals, fixed.ravel(), fixed.ravel(), np.repeat(np.arange(k), 9))


@dataclass
class StabilizationProblem:
    qp: SparseQP
    layout: VariableLayout
    path: AnalysisPath
    geom: FrameGeometry
    config: StabilizerConfig
    costs: list
    blocks: list
    keystone_ratio: tuple
    saliency: Optional[SaliencyTrack] = None
    frame_offset: int = 0

    def block_rows(self):
        """Map block name to its row range in the stacked constraint matrix."""
        out = {}
        start = 0
        for b in self.blocks:
            out[b.name] = slice(start, start + len(b.lb))
            start += len(b.lb)
        return out


def assemble(path, geom, config, keystone_ratio=None, fixed=None, saliency=None, frame_offset=0):
    """Build the full stabilization QP for ``path``.

    ``keystone_ratio`` overrides the ratio estimated from ``path``;
    ``fixed`` pins the first rows of ``p``; ``saliency`` overrides
    ``config.saliency`` (the window solver passes per-window slices).
    ``frame_offset`` selects per-frame fidelity weights for a window.
    """
    n = path.n
    track = config.saliency if saliency is None else saliency
    if track is not None and len(track) != n:
        raise LengthMismatch(f"saliency track has {len(track)} frames, path has {n}")
    mode = config.saliency_mode
    weights = {1: config.w1, 2: config.w2, 3: config.w3}
    orders = tuple(k for k in (1, 2, 3) if weights[k] > 0)
    layout = make_layout(n, orders, saliency_slack_counts(track, mode))
    if keystone_ratio is None:
        keystone_ratio = estimate_keystone_ratio(path.f)

    costs = []
    blocks = []
    l1_cost, epi = build_l1_epigraph(path.f, layout, config.w1, config.w2, config.w3)
    costs += [build_fidelity(config.frame_weights(n, frame_offset), layout), l1_cost]
    if config.w_diag or config.w_offdiag:
        costs.append(build_distortion(layout, config.w_diag, config.w_offdiag))
    if config.keystone_ratio_weight:
        costs.append(build_keystone_ratio(layout, keystone_ratio, config.keystone_ratio_weight))
    blocks += [epi, build_trace_and_bounds(layout, config.element_lb, config.element_ub),
               build_valid_pixel(geom, layout), build_fov(geom, layout)]
    if track is not None:
        if mode in ("hard", "soft"):
            sal_rows, sal_cost = build_saliency_inclusion(track, geom, layout, mode, config.saliency_penalty)
            blocks.append(sal_rows)
            costs.append(sal_cost)
        else:
            costs.append(build_centering(track, layout, config.center_weight))
    if fixed is not None and len(fixed):
        blocks.append(build_fixed_prefix(layout, fixed))

    P = sum((c.P for c in costs), sp.csr_matrix((layout.size, layout.size)))
    P = ((P + P.T) * 0.5).tocsc()
    q = sum(c.q for c in costs)
    A = sp.vstack([b.A for b in blocks], format="csc")
    lb = np.concatenate([b.lb for b in blocks])
    ub = np.concatenate([b.ub for b in blocks])
    qp = SparseQP(P, q, A, lb, ub)
    return StabilizationProblem(qp, layout, path, geom, config, costs, blocks,
                                tuple(float(r) for r in keystone_ratio), track, frame_offset)


@dataclass
class CorrectionPlan:
    """Result of a stabilization run.

    ``corrections[t]`` is applied to the crop window; rendering applies
    ``inverse_corrections[t]`` to the input frame and then crops.
    """

    p: np.ndarray
    corrections: np.ndarray
    inverse_corrections: np.ndarray
    crop_window: np.ndarray
    geometry: FrameGeometry
    e1: np.ndarray
    e2: np.ndarray
    e3: np.ndarray
    diagnostics: dict = field(default_factory=dict)

    @property
    def n(self):
        return len(self.p)


def objective_breakdown(p, f, config, keystone_ratio, saliency=None, slack_total=0.0, frame_offset=0):
    """Value of every objective term at corrections ``p`` (log domain)."""
    p = np.asarray(p, dtype=float)
    n = len(p)
    e1, e2, e3 = derivatives(p, f)
    w0 = config.frame_weights(n, frame_offset)
    out = {
        "fidelity": 0.5 * float(np.sum(w0[:, None] * p * p)),
        "l1_e1": config.w1 * float(np.abs(e1).sum()),
        "l1_e2": config.w2 * float(np.abs(e2).sum()),
        "l1_e3": config.w3 * float(np.abs(e3).sum()),
        "distortion": config.w_diag * float(np.sum((p[:, 0] - p[:, 4]) ** 2))
        + config.w_offdiag * float(np.sum((p[:, 1] + p[:, 3]) ** 2)),
        "keystone_ratio": config.keystone_ratio_weight * float(
            np.sum((p[:, 6] - keystone_ratio[0] * p[:, 2]) ** 2)
            + np.sum((p[:, 7] - keystone_ratio[1] * p[:, 5]) ** 2)),
        "centering": 0.0,
        "saliency_slack": float(slack_total),
    }
    if saliency is not None and config.saliency_mode == "center":
        for t, g in enumerate(centering_targets(saliency)):
            if g is not None:
                out["centering"] += config.center_weight * float(np.sum((p[t] - g) ** 2))
    out["total"] = float(sum(out.values()))
    return out


def active_report(problem, x, tol=1e-7):
    ax = problem.qp.A @ x
    report = {}
    for name, rows in problem.block_rows().items():
        lo = problem.qp.lb[rows]
        hi = problem.qp.ub[rows]
        v = ax[rows]
        active = (np.abs(v - lo) <= tol) | (np.abs(v - hi) <= tol)
        report[name] = {"rows": int(len(v)), "active": int(active.sum())}
    return report


def plan_from_corrections(p, path, geom, diagnostics=None):
    p = np.asarray(p, dtype=float).reshape(-1, 9)
    corrections = np.array([lie.exp_h(pt) for pt in p])
    inverses = np.array([np.linalg.inv(c) for c in corrections])
    e1, e2, e3 = derivatives(p, path.f)
    return CorrectionPlan(p, corrections, inverses, geom.crop_window.copy(), geom,
                          e1, e2, e3, diagnostics or {})


def solution_summary(solution):
    return {
        "status": solution.status.value,
        "iterations": int(solution.iterations),
        "primal_res": float(solution.primal_res),
        "dual_res": float(solution.dual_res),
        "comp_slack": float(solution.comp_slack),
    }


def extract_plan(solution, problem):
    """Turn an optimal QP solution into a :class:`CorrectionPlan`.

    Raises:
        NotOptimal: if the solver did not report an optimal status.
    """
    if solution.status is not Status.OPTIMAL:
        if solution.status is Status.INFEASIBLE and problem.saliency is not None \
                and problem.config.saliency_mode == "hard":
            raise InfeasibleSaliency("hard saliency constraints cannot be satisfied")
        raise NotOptimal(f"solver finished with status {solution.status.value}", solution.status.value)
    layout = problem.layout
    x = solution.x
    p = x[layout.p]
    slack_idx = np.concatenate(layout.slack) if layout.n else np.zeros(0, dtype=int)
    slack_total = problem.config.saliency_penalty * float(x[slack_idx].sum()) if len(slack_idx) else 0.0
    diag = {
        "solver": solution_summary(solution),
        "objective": objective_breakdown(p, problem.path.f, problem.config, problem.keystone_ratio,
                                         problem.saliency, slack_total, problem.frame_offset),
        "active_constraints": active_report(problem, x),
        "keystone_ratio": list(problem.keystone_ratio),
        "epigraph": {k: x[layout.u[k]] for k in layout.orders},
    }
    return plan_from_corrections(p, problem.path, problem.geom, diag)
