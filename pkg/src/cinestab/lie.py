"""SL(3) homographies and their log-domain (sl(3)) representation.

Conventions used throughout the package:

* A homography is a 3x3 ``ndarray`` acting on homogeneous column points
  ``(x, y, 1)``. Points live in normalized frame coordinates: the origin is
  the frame center, ``x`` spans ``[-1, 1]`` and ``y`` spans
  ``[-aspect, aspect]`` with ``aspect = height / width``.
* A log-homography is a length-9 ``ndarray``, the row-major flattening of a
  trace-zero 3x3 matrix. Index 2 and 5 are the x/y translation entries,
  6 and 7 the keystone (perspective) entries, 0, 1, 3, 4 the affine block
  and 8 the bottom-right entry fixed by the trace.
* A corner set is a ``(4, 2)`` array ordered so the shoelace sum is
  positive (counter-clockwise with y pointing up), starting top-left.
"""

import numpy as np

from .errors import (
    DegenerateEdge,
    LogDomain,
    NegativeArea,
    NonPositiveDeterminant,
    PointAtInfinity,
)

TRANSLATION = (2, 5)
KEYSTONE = (6, 7)
AFFINE = (0, 1, 3, 4)

_DET_EPS = 1e-12
_BRANCH_EPS = 1e-9
_EXP_TARGET_NORM = 0.125
_LOG_TARGET_NORM = 0.25


def normalize_det1(m):
    """Scale ``m`` so that its determinant is exactly one (up to rounding).

    Raises:
        NonPositiveDeterminant: if ``det(m) <= 1e-12``; orientation-reversing
            or singular matrices are not homographies of a video frame.
    """
    m = np.asarray(m, dtype=float)
    if m.shape != (3, 3):
        raise ValueError(f"expected a 3x3 matrix, got shape {m.shape}")
    det = np.linalg.det(m)
    if not np.isfinite(det) or det <= _DET_EPS:
        raise NonPositiveDeterminant(f"determinant {det:.3g} is not positive")
    return m / np.cbrt(det)


def to_matrix(h):
    return np.asarray(h, dtype=float).reshape(3, 3)


def to_vector(m):
    return np.asarray(m, dtype=float).reshape(9).copy()


def project_trace_zero(h):
    """Remove the trace of a log-homography (equivalent to det-1 scaling)."""
    h = np.array(h, dtype=float, copy=True)
    tr = (h[..., 0] + h[..., 4] + h[..., 8]) / 3.0
    h[..., 0] -= tr
    h[..., 4] -= tr
    h[..., 8] -= tr
    return h


def _expm(x):
    # scaling and squaring around a degree-14 Taylor polynomial
    norm = np.abs(x).sum(axis=0).max()
    s = 0
    if norm > _EXP_TARGET_NORM:
        s = int(np.ceil(np.log2(norm / _EXP_TARGET_NORM)))
    y = x / (2.0 ** s)
    result = np.eye(3)
    term = np.eye(3)
    for k in range(1, 15):
        term = term @ y / k
        result = result + term
    for _ in range(s):
        result = result @ result
    return result


def _sqrtm_db(a):
    # Denman-Beavers iteration, product form
    y = a.copy()
    z = np.eye(3)
    for _ in range(60):
        y_inv = np.linalg.inv(y)
        z_inv = np.linalg.inv(z)
        y_next = 0.5 * (y + z_inv)
        z = 0.5 * (z + y_inv)
        done = np.abs(y_next - y).max() <= 1e-15 * max(1.0, np.abs(y_next).max())
        y = y_next
        if done:
            break
    return y


def _logm_near_identity(a):
    # log(A) = 2 atanh((A - I)(A + I)^-1), odd power series
    eye = np.eye(3)
    y = (a - eye) @ np.linalg.inv(a + eye)
    y2 = y @ y
    term = y.copy()
    result = y.copy()
    for k in range(3, 200, 2):
        term = term @ y2
        contrib = term / k
        result = result + contrib
        if np.abs(contrib).max() < 1e-20:
            break
    return 2.0 * result


def check_log_domain(m):
    """Raise :class:`LogDomain` if ``m`` has an eigenvalue on the closed negative real axis."""
    eig = np.linalg.eigvals(np.asarray(m, dtype=float))
    scale = np.maximum(1.0, np.abs(eig))
    on_axis = (np.abs(eig.imag) <= _BRANCH_EPS * scale) & (eig.real <= _BRANCH_EPS * scale)
    if np.any(on_axis):
        bad = eig[on_axis][0]
        raise LogDomain(f"eigenvalue {bad:.6g} lies on the non-positive real axis")


def log_h(H):
    """Principal matrix logarithm of a homography as a trace-zero 9-vector.

    The input is only required to have positive determinant; the trace is
    projected out, which is the same as normalizing ``H`` to determinant one
    first. Computed by inverse scaling and squaring: repeated square roots
    bring the matrix close to the identity, where an ``atanh`` series
    converges quickly. Defective matrices (pure translations, shears) need
    no special treatment.

    Raises:
        LogDomain: if an eigenvalue lies within 1e-9 of the negative real axis.
    """
    a = np.asarray(H, dtype=float)
    if a.shape == (9,):
        a = a.reshape(3, 3)
    check_log_domain(a)
    eye = np.eye(3)
    k = 0
    while np.abs(a - eye).sum(axis=0).max() > _LOG_TARGET_NORM and k < 64:
        a = _sqrtm_db(a)
        k += 1
    log_a = _logm_near_identity(a) * (2.0 ** k)
    return project_trace_zero(log_a.reshape(9))


def exp_h(h):
    """Matrix exponential of a log-homography, returned as a 3x3 matrix.

    For trace-zero input the result has determinant one.
    """
    return _expm(to_matrix(h))


def translation(tx, ty):
    return np.array([[1.0, 0.0, tx], [0.0, 1.0, ty], [0.0, 0.0, 1.0]])


def translation_log(tx, ty):
    """Exact log of a pure translation (the matrix is unipotent)."""
    h = np.zeros(9)
    h[2] = tx
    h[5] = ty
    return h


def apply(H, p):
    """Apply ``H`` to a single point, with perspective division."""
    x, y = float(p[0]), float(p[1])
    H = np.asarray(H, dtype=float)
    w = H[2, 0] * x + H[2, 1] * y + H[2, 2]
    if abs(w) < 1e-12:
        raise PointAtInfinity(f"point ({x}, {y}) maps to infinity")
    return np.array([
        (H[0, 0] * x + H[0, 1] * y + H[0, 2]) / w,
        (H[1, 0] * x + H[1, 1] * y + H[1, 2]) / w,
    ])


def apply_points(H, pts):
    """Vectorized :func:`apply` over an ``(k, 2)`` array of points."""
    pts = np.asarray(pts, dtype=float).reshape(-1, 2)
    homog = np.column_stack([pts, np.ones(len(pts))]) @ np.asarray(H, dtype=float).T
    w = homog[:, 2]
    if np.any(np.abs(w) < 1e-12):
        raise PointAtInfinity("a point maps to infinity")
    return homog[:, :2] / w[:, None]


def displacement_jacobian(p):
    """Derivative of ``apply(exp_h(h), p) - p`` with respect to ``h`` at ``h = 0``.

    Returns a ``(2, 9)`` matrix. Row ``x`` is ``[x, y, 1, 0, 0, 0, -x^2, -xy, -x]``.
    """
    x, y = float(p[0]), float(p[1])
    return np.array([
        [x, y, 1.0, 0.0, 0.0, 0.0, -x * x, -x * y, -x],
        [0.0, 0.0, 0.0, x, y, 1.0, -x * y, -y * y, -y],
    ])


def corner_jacobian(corners):
    """Stack of :func:`displacement_jacobian` for each point, ``(2k, 9)``.

    Row order is ``x0, y0, x1, y1, ...`` matching ``corners.reshape(-1)``.
    """
    corners = np.asarray(corners, dtype=float).reshape(-1, 2)
    return np.vstack([displacement_jacobian(c) for c in corners])


def shoelace(corners):
    c = np.asarray(corners, dtype=float).reshape(-1, 2)
    x, y = c[:, 0], c[:, 1]
    xn, yn = np.roll(x, -1), np.roll(y, -1)
    return 0.5 * float(np.sum(x * yn - xn * y))


def quad_area(corners):
    """Area of a counter-clockwise quadrilateral (shoelace formula).

    Raises:
        NegativeArea: if the corners are ordered clockwise or degenerate.
    """
    area = shoelace(corners)
    if area <= 0.0:
        raise NegativeArea(f"signed area {area:.6g} is not positive; corners must be counter-clockwise")
    return area


def area_gradient(corners):
    """Gradient of the shoelace area with respect to ``corners.reshape(-1)``.

    ``dA/dx_i = (y_{i+1} - y_{i-1}) / 2`` and ``dA/dy_i = (x_{i-1} - x_{i+1}) / 2``.
    """
    c = np.asarray(corners, dtype=float).reshape(-1, 2)
    quad_area(c)
    nxt = np.roll(c, -1, axis=0)
    prv = np.roll(c, 1, axis=0)
    grad = np.empty_like(c)
    grad[:, 0] = 0.5 * (nxt[:, 1] - prv[:, 1])
    grad[:, 1] = 0.5 * (prv[:, 0] - nxt[:, 0])
    return grad.reshape(-1)


def sidelengths(corners):
    """Length of edge ``i`` from corner ``i`` to corner ``i + 1`` (cyclic)."""
    c = np.asarray(corners, dtype=float).reshape(-1, 2)
    return np.linalg.norm(np.roll(c, -1, axis=0) - c, axis=1)


def sidelength_gradients(corners):
    """Gradients of every edge length, shape ``(k, 2k)`` for ``k`` corners.

    Raises:
        DegenerateEdge: if two adjacent corners coincide (within 1e-9).
    """
    c = np.asarray(corners, dtype=float).reshape(-1, 2)
    k = len(c)
    grads = np.zeros((k, 2 * k))
    for i in range(k):
        j = (i + 1) % k
        d = c[j] - c[i]
        length = np.hypot(d[0], d[1])
        if length <= 1e-9:
            raise DegenerateEdge(f"edge {i} has length {length:.3g}")
        u = d / length
        grads[i, 2 * i:2 * i + 2] = -u
        grads[i, 2 * j:2 * j + 2] = u
    return grads


def validate_corners(corners):
    """Return ``corners`` as a ``(4, 2)`` float array after checking orientation and convexity."""
    c = np.asarray(corners, dtype=float)
    if c.shape != (4, 2):
        raise ValueError(f"a corner set has shape (4, 2), got {c.shape}")
    if not np.all(np.isfinite(c)):
        raise ValueError("corner coordinates must be finite")
    quad_area(c)
    e = np.roll(c, -1, axis=0) - c
    cross = e[:, 0] * np.roll(e, -1, axis=0)[:, 1] - e[:, 1] * np.roll(e, -1, axis=0)[:, 0]
    if np.any(cross <= 0.0):
        raise ValueError("corner set is not strictly convex")
    return c
