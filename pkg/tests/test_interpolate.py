import numpy as np
import pytest

from shadowtrack.core import BBox, Trajectory
from shadowtrack.interpolate import GsiParams, gp_regress, interpolate_trajectory


def dense_gp_oracle(times, values, queries, length_scale, noise_var):
    """Direct dense GP solve with explicit kernel loops (no Cholesky)."""
    t = np.asarray(times, float)
    y = np.asarray(values, float)
    q = np.asarray(queries, float)
    n = len(t)
    K = np.empty((n, n))
    for i in range(n):
        for j in range(n):
            K[i, j] = np.exp(-((t[i] - t[j]) ** 2) / (2 * length_scale ** 2))
    K += noise_var * np.eye(n)
    mean = y.mean()
    alpha = np.linalg.solve(K, y - mean)
    out = np.empty(len(q))
    for a in range(len(q)):
        ks = np.array([np.exp(-((q[a] - t[j]) ** 2) / (2 * length_scale ** 2))
                       for j in range(n)])
        out[a] = ks @ alpha + mean
    return out


def traj(samples, ident=1):
    return Trajectory(id=ident, samples=tuple(samples))


class TestGpRegress:
    def test_constant_values(self):
        times = [1, 2, 3, 5, 9]
        preds = gp_regress(times, [4.2] * 5, [1, 2, 4, 7, 9])
        assert np.allclose(preds, 4.2, atol=1e-9)

    def test_noise_free_interpolates_observations(self):
        params = GsiParams(length_scale=2.0, noise_var=0.0)
        times = [0, 3, 6, 9]
        values = [1.0, 2.0, -0.5, 0.5]
        preds = gp_regress(times, values, times, params)
        assert np.allclose(preds, values, atol=1e-6)

    def test_linear_gap_against_oracle(self):
        params = GsiParams(length_scale=10.0, noise_var=1e-2)
        times = list(range(0, 5)) + list(range(8, 13))
        values = [2.0 * t for t in times]
        queries = [5, 6, 7]
        preds = gp_regress(times, values, queries, params)
        oracle = dense_gp_oracle(times, values, queries, 10.0, 1e-2)
        assert np.allclose(preds, oracle, atol=1e-8)
        assert np.all(np.abs(preds - 2.0 * np.asarray(queries)) <= 0.5)

    def test_random_instances_match_oracle(self):
        rng = np.random.default_rng(0)
        for _ in range(30):
            n = int(rng.integers(2, 51))
            times = np.sort(rng.choice(np.arange(200), size=n, replace=False))
            values = rng.standard_normal(n) * 5 + rng.uniform(-10, 10)
            queries = rng.uniform(times[0], times[-1], size=7)
            ell = float(rng.uniform(2, 20))
            noise = float(rng.uniform(1e-3, 1e-1))
            params = GsiParams(length_scale=ell, noise_var=noise)
            got = gp_regress(times, values, queries, params)
            want = dense_gp_oracle(times, values, queries, ell, noise)
            assert np.allclose(got, want, atol=1e-8)

    def test_errors(self):
        with pytest.raises(ValueError):
            gp_regress([1], [2.0], [1])
        with pytest.raises(ValueError):
            gp_regress([1, 1], [2.0, 3.0], [1])
        with pytest.raises(ValueError):
            gp_regress([2, 1], [2.0, 3.0], [1])
        with pytest.raises(ValueError):
            gp_regress([1, 2], [2.0, 3.0], [3])  # outside the span
        with pytest.raises(ValueError):
            gp_regress([1, 2], [2.0], [1.5])

    def test_param_validation(self):
        with pytest.raises(ValueError):
            GsiParams(length_scale=0)
        with pytest.raises(ValueError):
            GsiParams(noise_var=-1e-3)
        with pytest.raises(ValueError):
            GsiParams(max_gap=0)


class TestInterpolateTrajectory:
    def test_short_trajectory_unchanged(self):
        t = traj([(1, BBox(0, 0, 2, 2))])
        assert interpolate_trajectory(t) is t

    def test_gapless_constant_unchanged(self):
        box = BBox(10, 10, 4, 4)
        t = traj([(f, box) for f in range(1, 8)])
        out = interpolate_trajectory(t)
        assert out.frames() == t.frames()
        for a, b in zip(out.boxes(), t.boxes()):
            assert np.allclose([a.x, a.y, a.w, a.h], [b.x, b.y, b.w, b.h], atol=1e-6)

    def test_small_gap_filled(self):
        box = BBox(10, 10, 4, 4)
        t = traj([(1, box), (2, box), (6, box), (7, box)])  # 3 missing frames
        out = interpolate_trajectory(t)
        assert out.frames() == [1, 2, 3, 4, 5, 6, 7]

    def test_large_gap_left_open(self):
        box = BBox(10, 10, 4, 4)
        samples = [(f, box) for f in range(1, 4)] + [(f, box) for f in range(29, 32)]
        t = traj(samples)  # 25 missing frames > max_gap 20
        out = interpolate_trajectory(t)
        assert out.frames() == [1, 2, 3, 29, 30, 31]

    def test_gap_boundary(self):
        box = BBox(10, 10, 4, 4)
        params = GsiParams(max_gap=3)
        t = traj([(1, box), (5, box)])  # exactly 3 missing
        assert interpolate_trajectory(t, params).frames() == [1, 2, 3, 4, 5]
        t = traj([(1, box), (6, box)])  # 4 missing
        assert interpolate_trajectory(t, params).frames() == [1, 6]

    def test_no_extrapolation_and_frame_superset(self):
        rng = np.random.default_rng(1)
        for _ in range(20):
            frames = np.sort(rng.choice(np.arange(1, 60), size=8, replace=False))
            samples = [(int(f), BBox(float(rng.uniform(0, 50)), float(rng.uniform(0, 50)),
                                     float(rng.uniform(2, 6)), float(rng.uniform(2, 6))))
                       for f in frames]
            out = interpolate_trajectory(traj(samples))
            got = out.frames()
            assert set(got) >= set(int(f) for f in frames)
            assert min(got) == int(frames[0]) and max(got) == int(frames[-1])
            assert all(b.w >= 1.0 and b.h >= 1.0 for b in out.boxes())

    def test_smoothing_idempotent_on_constant(self):
        box = BBox(10, 10, 4, 4)
        t = traj([(f, box) for f in range(1, 12)])
        once = interpolate_trajectory(t)
        twice = interpolate_trajectory(once)
        for a, b in zip(once.boxes(), twice.boxes()):
            assert np.allclose([a.x, a.y, a.w, a.h], [b.x, b.y, b.w, b.h], atol=1e-6)

    def test_fill_only_keeps_observed_samples(self):
        rng = np.random.default_rng(2)
        samples = [(f, BBox(float(10 + f + rng.uniform(-1, 1)), 10.0, 4.0, 4.0))
                   for f in (1, 2, 3, 7, 8)]
        t = traj(samples)
        out = interpolate_trajectory(t, fill_only=True)
        kept = {f: b for f, b in out.samples}
        for f, b in samples:
            assert kept[f] == b
        assert out.frames() == [1, 2, 3, 4, 5, 6, 7, 8]

    def test_size_clamped_to_one(self):
        # shrinking sizes would dip below 1 px without the clamp
        samples = [(1, BBox(0, 0, 3.0, 3.0)), (2, BBox(0, 0, 1.0, 1.0)),
                   (3, BBox(0, 0, 1.0, 1.0)), (4, BBox(0, 0, 1.0, 1.0))]
        out = interpolate_trajectory(traj(samples), GsiParams(noise_var=0.5))
        assert all(b.w >= 1.0 and b.h >= 1.0 for b in out.boxes())
