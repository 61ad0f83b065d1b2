"""Global and overlapping-window solvers.

A window ``[start, end)`` is solved as a full stabilization problem. Its
first ``fixed_prefix`` frames are pinned to values fixed by the previous
window: the third-order difference is the longest coupling in the
objective, so three pinned frames carry all the history a window needs.
"""

import logging
from dataclasses import dataclass

import numpy as np

from .errors import BadWindowParams, NotOptimal, WindowInfeasible
from .path import crop_window_from_fraction
from .problem import (
    assemble,
    estimate_keystone_ratio,
    extract_plan,
    plan_from_corrections,
    objective_breakdown,
)
from .qp import Status, solve

log = logging.getLogger(__name__)

OVERLAP = 3


@dataclass(frozen=True)
class Window:
    start: int
    end: int
    fixed_prefix: int
    # frames [start, commit) are final once this window is solved
    commit: int


@dataclass(frozen=True)
class WindowSchedule:
    n: int
    length: int
    stride: int
    windows: tuple

    def __iter__(self):
        return iter(self.windows)

    def __len__(self):
        return len(self.windows)


def schedule(n, length, stride):
    """Window layout for ``n`` frames.

    Each window keeps its first ``stride`` frames; the next one starts
    ``stride - 3`` frames later so the three overlap frames can be pinned.
    The final window is truncated at ``n`` and keeps everything.
    """
    if stride < 4 or length <= stride:
        raise BadWindowParams(f"need 4 <= stride < length, got length={length}, stride={stride}")
    if n < 1:
        raise BadWindowParams("need at least one frame")
    windows = []
    start = 0
    while True:
        end = min(start + length, n)
        prefix = 0 if start == 0 else OVERLAP
        if end == n:
            windows.append(Window(start, end, prefix, n))
            break
        windows.append(Window(start, end, prefix, start + stride))
        start += stride - OVERLAP
    # a final window shorter than 4 frames has degenerate derivative terms
    if len(windows) > 1 and windows[-1].end - windows[-1].start < 4:
        last = windows.pop()
        prev = windows.pop()
        windows.append(Window(prev.start, last.end, prev.fixed_prefix, n))
    return WindowSchedule(n, length, stride, tuple(windows))


def default_geometry(path, config):
    return crop_window_from_fraction(config.crop_fraction, path.aspect, config.crop_margin)


def _identity_plan(path, geom, config, ratio):
    p = np.zeros((path.n, 9))
    diag = {
        "solver": {"status": Status.OPTIMAL.value, "iterations": 0, "primal_res": 0.0,
                   "dual_res": 0.0, "comp_slack": 0.0},
        "objective": objective_breakdown(p, path.f, config, ratio, config.saliency),
        "keystone_ratio": list(ratio),
    }
    return plan_from_corrections(p, path, geom, diag)


def solve_global(path, geom=None, config=None, keystone_ratio=None):
    """Solve one problem over every frame."""
    from .problem import StabilizerConfig

    config = config or StabilizerConfig()
    geom = geom or default_geometry(path, config)
    ratio = estimate_keystone_ratio(path.f) if keystone_ratio is None else keystone_ratio
    if path.n == 1:
        return _identity_plan(path, geom, config, ratio)
    problem = assemble(path, geom, config, keystone_ratio=ratio)
    sol = solve(problem.qp, config.solver)
    plan = extract_plan(sol, problem)
    plan.diagnostics["mode"] = "global"
    plan.diagnostics["problem_size"] = {"variables": problem.qp.dims[0], "constraints": problem.qp.dims[1]}
    return plan


def solve_windowed(path, geom=None, config=None, keystone_ratio=None, on_window=None):
    """Approximate the global solution with overlapping windows.

    ``on_window(window, problem, solution)`` is called after each solve,
    which the tests use to inspect per-window problem sizes.
    """
    from .problem import StabilizerConfig

    config = config or StabilizerConfig()
    geom = geom or default_geometry(path, config)
    ratio = estimate_keystone_ratio(path.f) if keystone_ratio is None else keystone_ratio
    sched = schedule(path.n, config.window_length, config.window_stride)
    if len(sched) == 1:
        plan = solve_global(path, geom, config, ratio)
        plan.diagnostics["mode"] = "windowed"
        plan.diagnostics["windows"] = [dict(start=0, end=path.n, fixed_prefix=0,
                                            **plan.diagnostics["solver"])]
        return plan

    p = np.zeros((path.n, 9))
    window_diags = []
    max_size = (0, 0)
    for win in sched:
        sub = path.slice(win.start, win.end)
        sal = None if config.saliency is None else config.saliency.slice(win.start, win.end)
        fixed = p[win.start:win.start + win.fixed_prefix] if win.fixed_prefix else None
        problem = assemble(sub, geom, config, keystone_ratio=ratio, fixed=fixed,
                           saliency=sal, frame_offset=win.start)
        sol = solve(problem.qp, config.solver)
        if sol.status is Status.INFEASIBLE and win.fixed_prefix:
            raise WindowInfeasible(f"window [{win.start}, {win.end}) is infeasible with its pinned prefix")
        try:
            wplan = extract_plan(sol, problem)
        except NotOptimal as exc:
            raise NotOptimal(f"window [{win.start}, {win.end}): {exc}", sol.status.value) from exc
        if on_window is not None:
            on_window(win, problem, sol)
        max_size = max(max_size, problem.qp.dims)
        keep = win.commit - win.start
        p[win.start:win.commit] = wplan.p[:keep]
        window_diags.append(dict(start=win.start, end=win.end, fixed_prefix=win.fixed_prefix,
                                 **wplan.diagnostics["solver"]))
        log.debug("window [%d, %d) solved in %d iterations", win.start, win.end, sol.iterations)

    diag = {
        "mode": "windowed",
        "solver": _aggregate(window_diags),
        "windows": window_diags,
        "objective": objective_breakdown(p, path.f, config, ratio, config.saliency),
        "keystone_ratio": list(ratio),
        "problem_size": {"variables": max_size[0], "constraints": max_size[1]},
    }
    return plan_from_corrections(p, path, geom, diag)


def _aggregate(window_diags):
    return {
        "status": "optimal" if all(w["status"] == "optimal" for w in window_diags) else "failed",
        "iterations": int(sum(w["iterations"] for w in window_diags)),
        "primal_res": max(w["primal_res"] for w in window_diags),
        "dual_res": max(w["dual_res"] for w in window_diags),
        "comp_slack": max(w["comp_slack"] for w in window_diags),
    }


def stabilize(path, config=None, geom=None, mode="auto"):
    """Entry point: ``mode`` is ``"global"``, ``"windowed"`` or ``"auto"``."""
    from .problem import StabilizerConfig

    config = config or StabilizerConfig()
    if mode == "global" or (mode == "auto" and path.n <= config.window_length):
        return solve_global(path, geom, config)
    return solve_windowed(path, geom, config)
