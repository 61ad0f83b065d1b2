import numpy as np
import pytest
import scipy.linalg
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from cinestab import lie
from cinestab.errors import DegenerateEdge, LogDomain, NegativeArea, NonPositiveDeterminant, PointAtInfinity
from oracles import directional_difference


def trace_zero(v):
    return lie.project_trace_zero(np.asarray(v, dtype=float))


small_h = arrays(np.float64, 9, elements=st.floats(-1.0, 1.0)).map(trace_zero).filter(
    lambda h: np.abs(h).max() <= 1.0)


# normalize_det1

def test_normalize_identity_and_uniform_scale():
    np.testing.assert_allclose(lie.normalize_det1(np.eye(3)), np.eye(3))
    np.testing.assert_allclose(lie.normalize_det1(2 * np.eye(3)), np.eye(3), atol=1e-15)


def test_normalize_random_has_unit_determinant():
    rng = np.random.default_rng(1)
    for _ in range(50):
        m = np.eye(3) + 0.3 * rng.normal(size=(3, 3))
        if np.linalg.det(m) <= 0:
            continue
        assert abs(np.linalg.det(lie.normalize_det1(m)) - 1) < 1e-9


@pytest.mark.parametrize("m", [np.zeros((3, 3)), np.diag([1.0, 1.0, -1.0]), np.diag([1, 1, 1e-13])])
def test_normalize_rejects_nonpositive_determinant(m):
    with pytest.raises(NonPositiveDeterminant):
        lie.normalize_det1(m)


# log / exp

def test_log_identity_is_zero():
    np.testing.assert_array_equal(lie.log_h(np.eye(3)), np.zeros(9))


def test_log_translation_is_exact():
    H = lie.translation(0.3, -0.2)
    np.testing.assert_allclose(lie.log_h(H), [0, 0, 0.3, 0, 0, -0.2, 0, 0, 0], atol=1e-15)


def test_log_diagonal():
    H = np.diag([np.e, np.e, np.e ** -2])
    np.testing.assert_allclose(lie.log_h(H), [1, 0, 0, 0, 1, 0, 0, 0, -2], atol=1e-14)


def test_exp_zero_and_translation():
    np.testing.assert_array_equal(lie.exp_h(np.zeros(9)), np.eye(3))
    np.testing.assert_allclose(lie.exp_h([0, 0, 0.3, 0, 0, -0.2, 0, 0, 0]), lie.translation(0.3, -0.2),
                               atol=1e-16)


def test_exp_matches_scipy_expm():
    rng = np.random.default_rng(2)
    for _ in range(30):
        h = trace_zero(rng.uniform(-1, 1, 9))
        np.testing.assert_allclose(lie.exp_h(h), scipy.linalg.expm(h.reshape(3, 3)), atol=1e-13)


def test_log_matches_scipy_logm():
    rng = np.random.default_rng(3)
    for _ in range(30):
        H = lie.normalize_det1(np.eye(3) + 0.2 * rng.normal(size=(3, 3)))
        ref = scipy.linalg.logm(H).real.reshape(9)
        np.testing.assert_allclose(lie.log_h(H), ref, atol=1e-11)


def test_log_rejects_negative_real_eigenvalue():
    # rotation by pi: eigenvalues -1, -1, 1
    H = np.diag([-1.0, -1.0, 1.0])
    with pytest.raises(LogDomain):
        lie.log_h(H)


def test_log_accepts_unnormalized_input():
    H = lie.exp_h(trace_zero([0.1, 0.02, 0.3, -0.01, 0.05, 0.1, 0.01, 0.0, 0.0]))
    np.testing.assert_allclose(lie.log_h(3.0 * H), lie.log_h(H), atol=1e-14)


@settings(max_examples=200, deadline=None)
@given(small_h)
def test_roundtrip_log_exp(h):
    out = lie.log_h(lie.exp_h(h))
    assert np.abs(out - h).max() <= 1e-8
    assert abs(out[0] + out[4] + out[8]) <= 1e-10


@settings(max_examples=100, deadline=None)
@given(small_h)
def test_exp_has_unit_determinant(h):
    assert abs(np.linalg.det(lie.exp_h(h)) - 1) <= 1e-9


@settings(max_examples=100, deadline=None)
@given(arrays(np.float64, 9, elements=st.floats(-0.05, 0.05)).map(trace_zero))
def test_first_order_inverse(h):
    inv = lie.log_h(np.linalg.inv(lie.exp_h(h)))
    m = np.abs(h).max()
    assert np.abs(inv + h).max() <= 10 * m * m + 1e-15


@settings(max_examples=100, deadline=None)
@given(arrays(np.float64, 9, elements=st.floats(-0.05, 0.05)).map(trace_zero),
       arrays(np.float64, 9, elements=st.floats(-0.05, 0.05)).map(trace_zero))
def test_first_order_composition(h1, h2):
    comp = lie.log_h(lie.exp_h(h1) @ lie.exp_h(h2))
    bound = 10 * (np.abs(h1).max() + np.abs(h2).max()) ** 2
    assert np.abs(comp - h1 - h2).max() <= bound + 1e-15


# point action

def test_apply_examples():
    np.testing.assert_allclose(lie.apply(np.eye(3), (0.2, 0.1)), (0.2, 0.1))
    np.testing.assert_allclose(lie.apply(lie.translation(0.3, -0.2), (0, 0)), (0.3, -0.2))
    H = np.eye(3)
    H[2, 0] = 0.1
    np.testing.assert_allclose(lie.apply(H, (0.5, 0.0)), (0.5 / 1.05, 0.0))


def test_apply_point_at_infinity():
    H = np.eye(3)
    H[2] = [1.0, 0.0, 0.0]
    with pytest.raises(PointAtInfinity):
        lie.apply(H, (0.0, 0.3))


def test_apply_points_matches_apply():
    rng = np.random.default_rng(4)
    H = lie.exp_h(trace_zero(rng.uniform(-0.2, 0.2, 9)))
    pts = rng.uniform(-1, 1, (6, 2))
    np.testing.assert_allclose(lie.apply_points(H, pts), [lie.apply(H, p) for p in pts], atol=1e-15)


# Jacobians

def test_displacement_jacobian_at_origin():
    J = lie.displacement_jacobian((0.0, 0.0))
    expected = np.zeros((2, 9))
    expected[0, 2] = 1
    expected[1, 5] = 1
    np.testing.assert_array_equal(J, expected)


def test_displacement_jacobian_last_column():
    J = lie.displacement_jacobian((0.3, -0.7))
    np.testing.assert_allclose(J[:, 8], (-0.3, 0.7))


def _rel_err(a, b):
    return np.abs(a - b).max() / max(np.abs(b).max(), 1e-12)


def test_displacement_jacobian_finite_differences():
    rng = np.random.default_rng(5)
    for _ in range(100):
        p = rng.uniform(-1, 1, 2)
        h = rng.normal(size=9)
        h /= np.linalg.norm(h)
        fd = directional_difference(lambda e: lie.apply(lie.exp_h(e * h), p) - p, 1e-5)
        assert _rel_err(lie.displacement_jacobian(p) @ h, fd) <= 1e-5


def test_corner_jacobian_stacks_blocks():
    square = np.array([[-0.5, 0.5], [-0.5, -0.5], [0.5, -0.5], [0.5, 0.5]])
    J = lie.corner_jacobian(square)
    assert J.shape == (8, 9)
    for i, c in enumerate(square):
        np.testing.assert_array_equal(J[2 * i:2 * i + 2], lie.displacement_jacobian(c))
    degenerate = lie.corner_jacobian(np.zeros((4, 2)))
    assert set(np.flatnonzero(np.abs(degenerate).sum(axis=0))) == {2, 5}


def random_convex_quad(rng):
    # jittered rectangle, counter-clockwise from top-left
    w, h = rng.uniform(0.3, 1.0, 2)
    base = np.array([[-w, h], [-w, -h], [w, -h], [w, h]])
    return base + rng.uniform(-0.05, 0.05, (4, 2))


def test_quad_area_examples():
    square = np.array([[-0.5, 0.5], [-0.5, -0.5], [0.5, -0.5], [0.5, 0.5]])
    assert lie.quad_area(square) == pytest.approx(1.0)
    assert lie.quad_area(2 * square) == pytest.approx(4.0)
    with pytest.raises(NegativeArea):
        lie.quad_area(square[::-1])


def test_quad_area_matches_triangulation():
    rng = np.random.default_rng(6)

    def tri(a, b, c):
        return 0.5 * abs((b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1]))

    for _ in range(100):
        c = random_convex_quad(rng)
        assert lie.quad_area(c) == pytest.approx(tri(c[0], c[1], c[2]) + tri(c[0], c[2], c[3]), abs=1e-12)


def test_area_gradient_by_hand_and_translation_invariance():
    square = np.array([[-0.5, 0.5], [-0.5, -0.5], [0.5, -0.5], [0.5, 0.5]])
    g = lie.area_gradient(square)
    # top-left x: (y_next - y_prev) / 2 = (-0.5 - 0.5) / 2
    assert g[0] == pytest.approx(-0.5)
    assert g @ np.tile([1.0, 0.0], 4) == pytest.approx(0.0, abs=1e-15)
    assert g @ np.tile([0.0, 1.0], 4) == pytest.approx(0.0, abs=1e-15)


def test_area_and_sidelength_gradients_finite_differences():
    rng = np.random.default_rng(7)
    for _ in range(100):
        c = random_convex_quad(rng).reshape(-1)
        d = rng.normal(size=8)
        fd_area = directional_difference(lambda e: lie.shoelace(c + e * d), 1e-5)
        assert _rel_err(lie.area_gradient(c) @ d, fd_area) <= 1e-5
        fd_side = directional_difference(lambda e: lie.sidelengths(c + e * d), 1e-5)
        assert _rel_err(lie.sidelength_gradients(c) @ d, fd_side) <= 1e-5


def test_sidelength_gradient_unit_square():
    square = np.array([[-0.5, 0.5], [-0.5, -0.5], [0.5, -0.5], [0.5, 0.5]])
    G = lie.sidelength_gradients(square)
    # edge 0 runs from top-left down to bottom-left
    np.testing.assert_allclose(G[0], [0, 1, 0, -1, 0, 0, 0, 0])
    np.testing.assert_allclose(G @ np.tile([1.0, 0.0], 4), 0, atol=1e-15)


def test_sidelength_degenerate_edge():
    c = np.array([[0.0, 0.0], [0.0, 0.0], [1.0, 0.0], [1.0, 1.0]])
    with pytest.raises(DegenerateEdge):
        lie.sidelength_gradients(c)


def test_validate_corners():
    with pytest.raises(NegativeArea):
        lie.validate_corners(np.array([[1, 1], [1, -1], [-1, -1], [-1, 1]], dtype=float))
    with pytest.raises(ValueError):
        lie.validate_corners(np.zeros((3, 2)))
