import numpy as np
import pytest

from shadowtrack.fusion import fuse, fusion_weights, resample_level


class TestResample:
    def test_identity(self):
        rng = np.random.default_rng(0)
        m = rng.random((3, 4, 6))
        assert np.array_equal(resample_level(m, 2, 2), m)

    def test_constant_fixed_point(self):
        m = np.full((2, 4, 4), 1.7)
        down = resample_level(m, 1, 2)
        up = resample_level(m, 3, 1)
        assert down.shape == (2, 2, 2) and np.allclose(down, 1.7)
        assert up.shape == (2, 16, 16) and np.allclose(up, 1.7)

    def test_mean_pool_value(self):
        m = np.array([[[1.0, 2.0], [3.0, 4.0]]])
        out = resample_level(m, 1, 2)
        assert out.shape == (1, 1, 1)
        assert out[0, 0, 0] == 2.5

    def test_nearest_upsample(self):
        m = np.array([[[1.0, 2.0]]])
        out = resample_level(m, 2, 1)
        assert np.array_equal(out, [[[1, 1, 2, 2], [1, 1, 2, 2]]])

    def test_two_level_jump(self):
        rng = np.random.default_rng(1)
        m = rng.random((1, 8, 8))
        out = resample_level(m, 1, 3)
        assert out.shape == (1, 2, 2)
        # one 2x2 pool twice == one 4x4 mean
        assert out[0, 0, 0] == pytest.approx(m[0, :4, :4].mean())

    def test_down_up_round_trip_on_constants(self):
        m = np.full((1, 4, 4), 0.25)
        assert np.array_equal(resample_level(resample_level(m, 1, 3), 3, 1), m)

    def test_rejects_non_divisible(self):
        with pytest.raises(ValueError):
            resample_level(np.zeros((1, 3, 4)), 1, 2)

    def test_rejects_bad_levels(self):
        with pytest.raises(ValueError):
            resample_level(np.zeros((1, 2, 2)), 0, 1)

    def test_rejects_non_finite(self):
        with pytest.raises(ValueError):
            resample_level(np.full((1, 2, 2), np.nan), 1, 1)


class TestFusionWeights:
    def test_sum_to_one_and_bounded(self):
        rng = np.random.default_rng(2)
        for _ in range(100):
            logits = rng.standard_normal((3, 5, 7)) * rng.uniform(0.1, 30)
            w = fusion_weights(logits)
            assert np.allclose(w.sum(axis=0), 1.0, atol=1e-12)
            assert w.min() >= 0.0 and w.max() <= 1.0

    def test_equal_logits_uniform(self):
        w = fusion_weights(np.zeros((3, 2, 2)))
        assert np.allclose(w, 1.0 / 3.0, atol=1e-15)

    def test_shape_validation(self):
        with pytest.raises(ValueError):
            fusion_weights(np.zeros((2, 4, 4)))


def pyramid(rng, channels=2, rows=8, cols=8):
    return (rng.random((channels, rows, cols)),
            rng.random((channels, rows // 2, cols // 2)),
            rng.random((channels, rows // 4, cols // 4)))


class TestFuse:
    def test_identical_maps_any_logits(self):
        # constant pyramids resample to the same map at every level, so the
        # convex combination returns that map for any logits
        rng = np.random.default_rng(3)
        const = (np.full((2, 8, 8), 0.6), np.full((2, 4, 4), 0.6), np.full((2, 2, 2), 0.6))
        logits = rng.standard_normal((3, 4, 4))
        out = fuse(const, logits, target_level=2)
        assert np.allclose(out, 0.6, atol=1e-12)

    def test_saturated_logit_selects_map(self):
        rng = np.random.default_rng(4)
        maps = pyramid(rng)
        for pick in range(3):
            logits = np.zeros((3, 4, 4))
            logits[pick] = 50.0
            out = fuse(maps, logits, target_level=2)
            want = resample_level(maps[pick], pick + 1, 2)
            assert np.max(np.abs(out - want)) <= 1e-9

    def test_equal_logits_mean(self):
        rng = np.random.default_rng(5)
        maps = pyramid(rng)
        out = fuse(maps, np.zeros((3, 4, 4)), target_level=2)
        resampled = [resample_level(m, l, 2) for l, m in zip((1, 2, 3), maps)]
        assert np.allclose(out, sum(resampled) / 3.0, atol=1e-12)

    def test_positively_homogeneous(self):
        rng = np.random.default_rng(6)
        maps = pyramid(rng)
        logits = rng.standard_normal((3, 8, 8))
        base = fuse(maps, logits, target_level=1)
        scaled = fuse(tuple(3.5 * m for m in maps), logits, target_level=1)
        assert np.allclose(scaled, 3.5 * base, atol=1e-12)

    def test_convexity_bounds_fuzz(self):
        rng = np.random.default_rng(7)
        for _ in range(1000):
            maps = pyramid(rng, channels=1, rows=4, cols=4)
            level = int(rng.integers(1, 4))
            shape = {1: (4, 4), 2: (2, 2), 3: (1, 1)}[level]
            logits = rng.standard_normal((3, *shape)) * 5
            out = fuse(maps, logits, target_level=level)
            stack = np.stack([resample_level(m, l, level)
                              for l, m in zip((1, 2, 3), maps)])
            assert np.all(out <= stack.max(axis=0) + 1e-12)
            assert np.all(out >= stack.min(axis=0) - 1e-12)

    def test_shape_mismatch_logits(self):
        rng = np.random.default_rng(8)
        maps = pyramid(rng)
        with pytest.raises(ValueError):
            fuse(maps, np.zeros((3, 8, 8)), target_level=2)

    def test_wrong_map_count(self):
        with pytest.raises(ValueError):
            fuse((np.zeros((1, 2, 2)),), np.zeros((3, 2, 2)), 1)
