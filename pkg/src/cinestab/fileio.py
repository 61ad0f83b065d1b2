"""Trajectory, saliency, plan and CSV files.

Trajectory files are JSON::

    {"version": 1, "frames": 3, "space": "pixel", "width": 1920, "height": 1080,
     "homographies": [[1, 0, 0, 0, 1, 0, 0, 0, 1], ...]}

``space`` is ``"pixel"`` (origin at the frame center, ``width`` and
``height`` required) or ``"normalized"`` (origin at the frame center, x in
[-1, 1], optional ``aspect`` = height / width, default 9/16). Each entry is
a row-major 3x3 matrix mapping frame ``t`` to frame ``t - 1``.

Every float written by this module uses 17 significant digits, which
round-trips binary64 exactly.
"""

import csv
import json
import math

import numpy as np

from . import lie
from .errors import LogDomain, NonPositiveDeterminant, ParseError
from .path import AnalysisPath
from .problem import SaliencyTrack

FORMAT_VERSION = 1


def fmt_float(v):
    v = float(v)
    if math.isnan(v):
        return "NaN"
    if math.isinf(v):
        return "Infinity" if v > 0 else "-Infinity"
    return "%.17g" % v


def dumps(obj, indent=0, _level=0):
    """JSON text with 17-significant-digit floats.

    Lists of numbers stay on one line so matrices read one per line.
    """
    pad = " " * (indent * (_level + 1))
    end = " " * (indent * _level)
    if isinstance(obj, np.ndarray):
        obj = obj.tolist()
    if obj is None or isinstance(obj, (bool, np.bool_)):
        return json.dumps(None if obj is None else bool(obj))
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        return fmt_float(obj)
    if isinstance(obj, str):
        return json.dumps(obj)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{pad}{json.dumps(str(k))}: {dumps(v, indent, _level + 1)}" for k, v in obj.items()]
        return "{\n" + ",\n".join(items) + "\n" + end + "}"
    if isinstance(obj, (list, tuple)):
        if all(isinstance(v, (int, float, np.integer, np.floating)) and not isinstance(v, bool) for v in obj):
            return "[" + ", ".join(dumps(v) for v in obj) + "]"
        if not obj:
            return "[]"
        items = [pad + dumps(v, indent, _level + 1) for v in obj]
        return "[\n" + ",\n".join(items) + "\n" + end + "]"
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def _loads(text, what):
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"{what}: {exc.msg}", line=exc.lineno) from exc


def _line_of(text, needle_index):
    """1-based line of the ``needle_index``-th matrix in a homography list."""
    start = text.find('"homographies"')
    if start < 0:
        return None
    depth = 0
    count = -1
    line = text.count("\n", 0, start) + 1
    for ch in text[start:]:
        if ch == "\n":
            line += 1
        elif ch == "[":
            depth += 1
            if depth == 2:
                count += 1
                if count == needle_index:
                    return line
        elif ch == "]":
            depth -= 1
            if depth == 0:
                break
    return line


def pixel_to_normalized(width):
    """Matrix ``N`` with normalized = ``N @ pixel`` for centered pixel coordinates."""
    s = 2.0 / width
    return np.diag([s, s, 1.0])


def parse_trajectory(text):
    """Parse a trajectory file into an :class:`AnalysisPath`.

    Raises:
        ParseError: malformed JSON, missing fields or frames, bad matrices.
        LogDomain: a matrix has no real principal logarithm (frame index set).
    """
    doc = _loads(text, "trajectory")
    if not isinstance(doc, dict):
        raise ParseError("trajectory must be a JSON object", line=1)
    version = doc.get("version", FORMAT_VERSION)
    if version != FORMAT_VERSION:
        raise ParseError(f"unsupported trajectory version {version!r}", field="version")
    mats = doc.get("homographies")
    if not isinstance(mats, list):
        raise ParseError("missing 'homographies' list", field="homographies")
    frames = doc.get("frames", len(mats))
    if not isinstance(frames, int) or frames < 1:
        raise ParseError("'frames' must be a positive integer", field="frames")
    if len(mats) < frames:
        raise ParseError(f"frame {len(mats)} is missing ({len(mats)} of {frames} homographies present)",
                         line=_line_of(text, len(mats) - 1), field=f"homographies[{len(mats)}]")
    if len(mats) > frames:
        raise ParseError(f"{len(mats)} homographies but 'frames' says {frames}", field="frames")

    space = doc.get("space", "normalized")
    if space == "pixel":
        try:
            width = float(doc["width"])
            height = float(doc["height"])
        except (KeyError, TypeError, ValueError) as exc:
            raise ParseError("pixel trajectories need numeric 'width' and 'height'", field="width") from exc
        if not (width > 0 and height > 0):
            raise ParseError("'width' and 'height' must be positive", field="width")
        aspect = height / width
        N = pixel_to_normalized(width)
        Ninv = np.linalg.inv(N)
    elif space == "normalized":
        aspect = doc.get("aspect", 9.0 / 16.0)
        if not isinstance(aspect, (int, float)) or not aspect > 0:
            raise ParseError("'aspect' must be a positive number", field="aspect")
        N = Ninv = None
    else:
        raise ParseError(f"unknown coordinate space {space!r}", field="space")

    f = np.zeros((frames, 9))
    for t, m in enumerate(mats):
        where = f"homographies[{t}]"
        if not isinstance(m, list) or len(m) != 9:
            raise ParseError(f"frame {t}: expected 9 numbers", line=_line_of(text, t), field=where)
        try:
            H = np.array([float(v) for v in m]).reshape(3, 3)
        except (TypeError, ValueError) as exc:
            raise ParseError(f"frame {t}: non-numeric entry", line=_line_of(text, t), field=where) from exc
        if not np.all(np.isfinite(H)):
            raise ParseError(f"frame {t}: non-finite entry", line=_line_of(text, t), field=where)
        if N is not None:
            H = N @ H @ Ninv
        try:
            f[t] = lie.log_h(lie.normalize_det1(H))
        except NonPositiveDeterminant as exc:
            raise ParseError(f"frame {t}: {exc}", line=_line_of(text, t), field=where) from exc
        except LogDomain as exc:
            raise LogDomain(str(exc), frame=t) from exc
    return AnalysisPath(f, float(aspect))


def trajectory_text(path):
    """Normalized-space trajectory file for ``path`` (exact homographies of its increments)."""
    doc = {
        "version": FORMAT_VERSION,
        "frames": path.n,
        "space": "normalized",
        "aspect": path.aspect,
        "homographies": [lie.exp_h(v).reshape(-1) for v in path.f],
    }
    return dumps(doc, indent=1) + "\n"


def parse_saliency(text, n):
    """Saliency file: ``{"points": [[[x, y], ...], ...]}`` per frame, or ``{"frames": {"t": [...]}}``.

    Frames past the end of the list, or absent from the mapping, carry no
    constraint.
    """
    doc = _loads(text, "saliency")
    if not isinstance(doc, dict):
        raise ParseError("saliency file must be a JSON object", line=1)
    per_frame = [[] for _ in range(n)]
    if "points" in doc:
        items = enumerate(doc["points"])
    elif "frames" in doc and isinstance(doc["frames"], dict):
        items = doc["frames"].items()
    else:
        raise ParseError("saliency file needs 'points' or 'frames'", field="points")
    for key, pts in items:
        try:
            t = int(key)
        except ValueError as exc:
            raise ParseError(f"bad frame index {key!r}", field="frames") from exc
        if not 0 <= t < n:
            raise ParseError(f"saliency frame {t} outside [0, {n})", field=f"frames[{t}]")
        arr = np.asarray(pts, dtype=float).reshape(-1, 2) if len(pts) else np.zeros((0, 2))
        if not np.all(np.isfinite(arr)):
            raise ParseError(f"saliency frame {t}: non-finite point", field=f"frames[{t}]")
        per_frame[t] = arr
    return SaliencyTrack(tuple(np.asarray(p, dtype=float).reshape(-1, 2) for p in per_frame))


def plan_document(plan, config, quality=None, width=None, height=None, extra=None):
    """The PlanFile contents as a plain dictionary."""
    geom = plan.geometry
    if width is None:
        width = 1920.0
    if height is None:
        height = width * geom.aspect
    # centered pixel coordinates, the same convention as pixel trajectory files
    crop_px = np.asarray(plan.crop_window) * geom.pixel_scale(width)
    diag = {k: v for k, v in plan.diagnostics.items() if k != "epigraph"}
    doc = {
        "version": FORMAT_VERSION,
        "frames": plan.n,
        "aspect": geom.aspect,
        "crop": {
            "fraction": geom.crop_fraction,
            "margin": geom.margin,
            "normalized": plan.crop_window,
            "pixel": crop_px,
            "pixel_size": [width, height],
        },
        "corrections": [H.reshape(-1) for H in plan.corrections],
        "inverse_corrections": [H.reshape(-1) for H in plan.inverse_corrections],
        "log_corrections": [v for v in plan.p],
        "config": config.to_dict(),
        "diagnostics": diag,
    }
    if quality is not None:
        doc["quality"] = quality.to_dict()
    if extra:
        doc.update(extra)
    return doc


def write_plan(fh, plan, config, quality=None, width=None, height=None, extra=None):
    fh.write(dumps(plan_document(plan, config, quality, width, height, extra), indent=1) + "\n")


def read_plan(text):
    """Parse a PlanFile; matrices come back as ``(n, 3, 3)`` arrays."""
    doc = _loads(text, "plan")
    try:
        doc["corrections"] = np.array(doc["corrections"], dtype=float).reshape(-1, 3, 3)
        doc["inverse_corrections"] = np.array(doc["inverse_corrections"], dtype=float).reshape(-1, 3, 3)
        doc["log_corrections"] = np.array(doc["log_corrections"], dtype=float).reshape(-1, 9)
    except (KeyError, ValueError) as exc:
        raise ParseError(f"plan file: {exc}") from exc
    return doc


def csv_header():
    cols = ["frame"]
    cols += [f"f{i}" for i in range(9)]
    cols += [f"p{i}" for i in range(9)]
    cols += [f"stab{i}" for i in range(9)]
    for k in (1, 2, 3):
        cols += [f"abs_e{k}_{i}" for i in range(9)]
    return cols


def write_csv(fh, plan, path):
    """One row per frame: input increment, correction, stabilized increment, |e1|, |e2|, |e3|.

    The stabilized increment is ``f_t + p_t - p_{t-1}`` (``p_{-1} = 0``).
    Derivative cells are blank where the forward difference does not exist.
    """
    p = plan.p
    prev = np.vstack([np.zeros((1, 9)), p[:-1]])
    stab = path.f + p - prev
    writer = csv.writer(fh, lineterminator="\n")
    writer.writerow(csv_header())
    traces = (plan.e1, plan.e2, plan.e3)
    for t in range(plan.n):
        row = [str(t)]
        row += [fmt_float(v) for v in path.f[t]]
        row += [fmt_float(v) for v in p[t]]
        row += [fmt_float(v) for v in stab[t]]
        for e in traces:
            row += [fmt_float(abs(v)) for v in e[t]] if t < len(e) else [""] * 9
        writer.writerow(row)
