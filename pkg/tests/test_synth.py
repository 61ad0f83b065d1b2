import numpy as np
import pytest

from cinestab.errors import ConfigError, LengthMismatch
from cinestab.path import AnalysisPath, crop_window_from_fraction, cumulative_path, derivatives
from cinestab.problem import StabilizerConfig, plan_from_corrections
from cinestab.synth import (
    Segment,
    SynthSpec,
    compare_paths,
    gaussian,
    generate,
    ground_truth_increments,
    jitter,
    make_rng,
    quality,
    sinusoid_track,
)
from cinestab.window import solve_global


def test_static_without_jitter_is_zero():
    path, g = generate(SynthSpec([Segment(20, "static")]))
    assert np.all(path.f == 0) and np.all(g == 0)


def test_constant_velocity_without_jitter():
    path, _ = generate(SynthSpec([Segment(25, "velocity", (0.002, -0.001))]))
    np.testing.assert_array_equal(path.f, np.tile(path.f[0], (25, 1)))
    assert path.f[0, 2] == 0.002 and path.f[0, 5] == -0.001
    _, e2, e3 = derivatives(np.zeros_like(path.f), path.f)
    assert np.all(e2 == 0) and np.all(e3 == 0)


def test_acceleration_and_velocity_carry_over():
    spec = SynthSpec([Segment(3, "velocity", (0.001, 0.0)), Segment(3, "acceleration", (0.001, 0.0)),
                      Segment(2, "static")])
    g = ground_truth_increments(spec)
    np.testing.assert_allclose(g[:, 2], [0.001] * 3 + [0.002, 0.003, 0.004] + [0, 0])


def test_generated_increments_are_trace_zero():
    path, _ = generate(SynthSpec([Segment(50, "velocity", np.arange(9) * 1e-4)], 0.01, seed=2))
    assert np.abs(path.f[:, 0] + path.f[:, 4] + path.f[:, 8]).max() < 1e-15


def test_seed_determinism():
    spec = SynthSpec([Segment(30, "static")], 0.003, seed=9)
    a, _ = generate(spec)
    b, _ = generate(spec)
    assert a.f.tobytes() == b.f.tobytes()
    c, _ = generate(SynthSpec([Segment(30, "static")], 0.003, seed=10))
    assert not np.array_equal(a.f, c.f)


def test_gaussian_is_box_muller_of_pcg64():
    z = gaussian(make_rng(5), 3)
    u = make_rng(5).random(4)
    r = np.sqrt(-2 * np.log(1 - u[:2]))
    expected = np.concatenate([r * np.cos(2 * np.pi * u[2:]), r * np.sin(2 * np.pi * u[2:])])[:3]
    np.testing.assert_array_equal(z, expected)


def test_jitter_mean_is_small():
    n = 4000
    sigma = 0.002
    j = jitter(SynthSpec([Segment(n, "static")], sigma, seed=1))
    for k in range(8):
        assert abs(j[:, k].mean()) <= 3 * sigma / np.sqrt(n)


def test_positional_jitter_telescopes():
    spec = SynthSpec([Segment(40, "static")], 0.002, seed=6)
    path, _ = generate(spec)
    j = jitter(spec)
    np.testing.assert_allclose(cumulative_path(path.f)[:, :8], j[:, :8], atol=1e-15)
    inc, _ = generate(SynthSpec([Segment(40, "static")], 0.002, seed=6, jitter_mode="increment"))
    np.testing.assert_allclose(inc.f[:, :8], j[:, :8], atol=1e-15)


def test_keystone_tie():
    path, _ = generate(SynthSpec([Segment(30, "velocity", (0.002, 0.001))], 0.001, seed=3,
                                 keystone_ratio=(0.1, 0.1)))
    np.testing.assert_allclose(path.f[:, 6], 0.1 * path.f[:, 2], atol=1e-16)


def test_spec_validation_and_roundtrip():
    with pytest.raises(ConfigError):
        Segment(0)
    with pytest.raises(ConfigError):
        Segment(3, "jerk")
    with pytest.raises(ConfigError):
        SynthSpec([Segment(3)], -1.0)
    with pytest.raises(ConfigError):
        SynthSpec([])
    spec = SynthSpec([Segment(3, "velocity", (0.1, 0.2))], 0.5, seed=4)
    assert SynthSpec.from_dict(spec.to_dict()) == spec


def test_quality_of_zero_plan():
    path = AnalysisPath(np.zeros((10, 9)))
    geom = crop_window_from_fraction(0.2)
    plan = plan_from_corrections(np.zeros((10, 9)), path, geom)
    q = quality(plan, path)
    assert q.sparsity == (0.0, 0.0, 0.0)
    assert q.fov_ratio == pytest.approx(np.sqrt(geom.window_area / geom.frame_area))
    assert q.max_exit == 0.0 and q.rms_correction == 0.0


def test_quality_tau_zero_counts_nonzeros():
    f = np.zeros((6, 9))
    f[2, 2] = 0.01
    path = AnalysisPath(f)
    plan = plan_from_corrections(np.zeros((6, 9)), path, crop_window_from_fraction(0.2))
    q = quality(plan, path, tau=0.0)
    assert q.sparsity[0] == pytest.approx(1 / 45)
    assert all(0.0 <= s <= 1.0 for s in q.sparsity)


def test_virtual_tripod_plan_is_sparse():
    path, _ = generate(SynthSpec([Segment(30, "static")], 0.0005, seed=7))
    p = -cumulative_path(path.f)
    plan = plan_from_corrections(p, path, crop_window_from_fraction(0.2))
    assert quality(plan, path).sparsity[0] == 0.0


def test_quality_length_mismatch():
    path = AnalysisPath(np.zeros((5, 9)))
    plan = plan_from_corrections(np.zeros((4, 9)), AnalysisPath(np.zeros((4, 9))), crop_window_from_fraction(0.2))
    with pytest.raises(LengthMismatch):
        quality(plan, path)


def test_compare_paths():
    rng = np.random.default_rng(8)
    a = rng.normal(size=(12, 9))
    assert compare_paths(a, a) == (0.0, 0.0)
    c = rng.normal(size=9)
    mx, _ = compare_paths(a, a + c)
    assert mx == pytest.approx(np.abs(c).max())
    b = rng.normal(size=(12, 9))
    mx, rms = compare_paths(a, b)
    d = (a - b).ravel()
    assert mx == pytest.approx(max(abs(v) for v in d))
    assert rms == pytest.approx(np.sqrt(sum(v * v for v in d) / len(d)))
    with pytest.raises(LengthMismatch):
        compare_paths(a, b[:-1])


def test_sinusoid_track():
    tr = sinusoid_track(60, amplitude=0.25, period=60.0)
    pts = np.array([p[0] for p in tr.points])
    assert np.abs(pts[:, 0]).max() == pytest.approx(0.25, abs=1e-3)
    assert np.all(pts[:, 1] == 0)


def test_zero_jitter_static_gives_negligible_correction():
    path, _ = generate(SynthSpec([Segment(60, "static")]))
    plan = solve_global(path, config=StabilizerConfig())
    assert np.abs(plan.p).max() <= 1e-4


def test_zero_jitter_pan_is_only_eased_at_the_ends():
    # the L1 terms charge every moving frame, so the optimum eases in and out
    # at the clip boundaries; the interior keeps a constant velocity
    path, _ = generate(SynthSpec([Segment(60, "velocity", (0.002, 0.0))]))
    plan = solve_global(path, config=StabilizerConfig())
    mid = plan.e1[18:-18, 2]
    assert np.ptp(mid) < 1e-8
    assert mid[0] == pytest.approx(0.002, rel=0.05)
