"""Conditioning layout and 3D rotary encoding tests."""

import numpy as np
import pytest

from panokit.tokens import (
    ConditioningBundle,
    build_stage1_input,
    build_stage2_inputs,
    default_rope_split,
    downsample_mask,
    downsample_mask_mean,
    dropout_conditioning,
    rope3d_apply,
    union_mask,
)

C, h, w = 4, 8, 16


def rand_latent(rng, channels=C):
    return rng.standard_normal((channels, h, w))


class TestDownsample:
    def test_all_ones(self):
        np.testing.assert_array_equal(downsample_mask(np.ones((16, 32)), 4),
                                      np.ones((4, 8)))

    def test_single_pixel_marks_one_cell(self):
        m = np.zeros((16, 32))
        m[5, 9] = 1.0
        d = downsample_mask(m, 4)
        assert d.sum() == 1.0
        assert d[1, 2] == 1.0  # cell (5//4, 9//4)

    def test_random_against_block_max_oracle(self):
        rng = np.random.default_rng(1)
        m = rng.random((16, 32))
        d = downsample_mask(m, 8)
        for i in range(2):
            for j in range(4):
                assert d[i, j] == m[8 * i:8 * i + 8, 8 * j:8 * j + 8].max()

    def test_indivisible_dims_rejected(self):
        with pytest.raises(ValueError):
            downsample_mask(np.ones((10, 32)), 4)

    def test_mean_variant(self):
        m = np.zeros((4, 4))
        m[0, 0] = 1.0
        # one set pixel in a 4x4 block: mean 1/16 < 0.5 -> off
        assert downsample_mask_mean(m, 4)[0, 0] == 0.0
        assert downsample_mask(m, 4)[0, 0] == 1.0


class TestStage1:
    def test_full_mask_zeroes_context(self):
        """Text-to-panorama degeneracy: m == 1 makes z_con identically 0."""
        rng = np.random.default_rng(2)
        bundle = build_stage1_input(rand_latent(rng), rand_latent(rng),
                                    np.ones((1, h, w)))
        np.testing.assert_array_equal(bundle.block("z_con"), 0.0)

    def test_zero_mask_passes_context(self):
        rng = np.random.default_rng(3)
        z0 = rand_latent(rng)
        bundle = build_stage1_input(rand_latent(rng), z0, np.zeros((1, h, w)))
        np.testing.assert_array_equal(bundle.block("z_con"), z0)

    def test_channel_arithmetic(self):
        rng = np.random.default_rng(4)
        bundle = build_stage1_input(rand_latent(rng), rand_latent(rng),
                                    np.zeros((1, h, w)))
        assert bundle.data.shape[0] == C + C + 1
        spans = [(s.name, s.offset, s.length) for s in bundle.manifest]
        assert spans == [("z_t", 0, C), ("z_con", C, C), ("m", 2 * C, 1)]
        assert bundle.layer_id == 0

    def test_shape_mismatch(self):
        rng = np.random.default_rng(5)
        with pytest.raises(ValueError):
            build_stage1_input(rand_latent(rng), rand_latent(rng, channels=2),
                               np.ones((1, h, w)))

    def test_manifest_roundtrip_bitwise(self):
        rng = np.random.default_rng(6)
        z_t, z_0 = rand_latent(rng), rand_latent(rng)
        bundle = build_stage1_input(z_t, z_0, np.zeros((1, h, w)))
        parts = bundle.split()
        np.testing.assert_array_equal(parts["z_t"], z_t)
        np.testing.assert_array_equal(parts["z_con"], z_0)
        rebuilt = np.concatenate([parts[s.name] for s in bundle.manifest], axis=0)
        np.testing.assert_array_equal(rebuilt, bundle.data)


class TestStage2:
    def test_k1_two_bundles(self):
        rng = np.random.default_rng(7)
        bundles = build_stage2_inputs(rand_latent(rng), rand_latent(rng),
                                      [rand_latent(rng)], [rand_latent(rng)],
                                      [np.zeros((1, h, w))])
        assert len(bundles) == 2
        assert bundles[0].layer_id == 0
        assert bundles[1].layer_id == 1
        assert [s.layer_id for s in bundles[1].manifest] == [1, 1, 1]

    def test_union_of_disjoint_boxes_is_sum(self):
        a = np.zeros((1, h, w))
        a[:, :4] = 1.0
        b = np.zeros((1, h, w))
        b[:, 4:] = 1.0
        np.testing.assert_array_equal(union_mask([a, b]), a + b)

    def test_global_bundle_masks_source(self):
        rng = np.random.default_rng(8)
        z_src = rand_latent(rng)
        m1 = np.zeros((1, h, w))
        m1[:, :, :8] = 1.0
        m2 = np.zeros((1, h, w))
        m2[:, 2:5] = 1.0
        bundles = build_stage2_inputs(rand_latent(rng), z_src,
                                      [rand_latent(rng)] * 2,
                                      [rand_latent(rng)] * 2, [m1, m2])
        mu = np.maximum(m1, m2)
        np.testing.assert_array_equal(bundles[0].block("z_con"), z_src * (1 - mu))
        np.testing.assert_array_equal(bundles[0].block("m"), mu)

    def test_spans_partition_channels(self):
        rng = np.random.default_rng(9)
        bundles = build_stage2_inputs(rand_latent(rng), rand_latent(rng),
                                      [rand_latent(rng)] * 3,
                                      [rand_latent(rng)] * 3,
                                      [np.ones((1, h, w))] * 3)
        for b in bundles:
            edges = [0]
            for s in b.manifest:
                assert s.offset == edges[-1]
                edges.append(s.offset + s.length)
            assert edges[-1] == b.data.shape[0]

    def test_k0_rejected(self):
        rng = np.random.default_rng(10)
        with pytest.raises(ValueError):
            build_stage2_inputs(rand_latent(rng), rand_latent(rng), [], [], [])

    def test_manifest_lines_format(self):
        rng = np.random.default_rng(11)
        bundle = build_stage1_input(rand_latent(rng), rand_latent(rng),
                                    np.ones((1, h, w)))
        assert bundle.manifest_lines() == [
            f"z_t 0 {C} 0", f"z_con {C} {C} 0", f"m {2 * C} 1 0"]


class TestDropout:
    def test_deterministic_per_seed(self):
        rng = np.random.default_rng(12)
        refs = [rand_latent(rng) for _ in range(6)]
        masks = [np.full((1, h, w), 0.5) for _ in range(6)]
        a = dropout_conditioning(refs, masks, 0.5, 0.5, seed=99)
        b = dropout_conditioning(refs, masks, 0.5, 0.5, seed=99)
        for x, y in zip(a[0] + a[1], b[0] + b[1]):
            np.testing.assert_array_equal(x, y)

    def test_drop_semantics(self):
        rng = np.random.default_rng(13)
        refs = [rand_latent(rng) for _ in range(64)]
        masks = [np.full((1, h, w), 0.5) for _ in range(64)]
        drefs, dmasks = dropout_conditioning(refs, masks, 1.0, 1.0, seed=0)
        for z in drefs:
            np.testing.assert_array_equal(z, 0.0)
        for m in dmasks:
            np.testing.assert_array_equal(m, 1.0)
        krefs, kmasks = dropout_conditioning(refs, masks, 0.0, 0.0, seed=0)
        assert all(np.array_equal(a, b) for a, b in zip(krefs, refs))
        assert all(np.array_equal(a, b) for a, b in zip(kmasks, masks))

    def test_rate_honored_statistically(self):
        rng = np.random.default_rng(14)
        refs = [rand_latent(rng) for _ in range(2000)]
        masks = [np.full((1, h, w), 0.5)] * 2000
        drefs, _ = dropout_conditioning(refs, masks, 0.3, 0.0, seed=5)
        dropped = sum(1 for z in drefs if not z.any())
        assert dropped / 2000 == pytest.approx(0.3, abs=0.03)


class TestRope:
    def test_default_split(self):
        assert default_rope_split(16) == (4, 6, 6)
        assert default_rope_split(64) == (16, 24, 24)
        d = default_rope_split(30)
        assert sum(d) == 30 and all(x % 2 == 0 for x in d)

    def test_identity_at_origin(self):
        rng = np.random.default_rng(15)
        v = rng.standard_normal(16)
        np.testing.assert_allclose(rope3d_apply(v, (0, 0, 0)), v, atol=0)

    def test_norm_preserved_10k(self):
        rng = np.random.default_rng(16)
        worst = 0.0
        for _ in range(10_000):
            v = rng.standard_normal(16)
            pos = tuple(rng.integers(0, 50, 3))
            r = rope3d_apply(v, pos)
            worst = max(worst, abs(np.linalg.norm(r) - np.linalg.norm(v)))
        assert worst < 1e-9

    def test_relative_shift_property(self):
        """<rot(q,p1), rot(k,p2)> depends only on p1 - p2, per axis."""
        rng = np.random.default_rng(17)
        for _ in range(50):
            q = rng.standard_normal(24)
            k = rng.standard_normal(24)
            p1 = rng.integers(0, 20, 3)
            p2 = rng.integers(0, 20, 3)
            d = rng.integers(-10, 10, 3)
            a = rope3d_apply(q, tuple(p1)) @ rope3d_apply(k, tuple(p2))
            b = rope3d_apply(q, tuple(p1 + d)) @ rope3d_apply(k, tuple(p2 + d))
            assert abs(a - b) < 1e-6

    def test_layer_ids_distinguishable(self):
        """Equal q = k vectors: the rotated dot product at equal layer ids
        differs from unequal layer ids (statistical, all 200 draws)."""
        rng = np.random.default_rng(18)
        distinct = 0
        for _ in range(200):
            q = rng.standard_normal(16)
            same = rope3d_apply(q, (3, 5, 7)) @ rope3d_apply(q, (3, 5, 7))
            cross = rope3d_apply(q, (3, 5, 7)) @ rope3d_apply(q, (4, 5, 7))
            if abs(same - cross) > 1e-9:
                distinct += 1
        assert distinct == 200

    def test_odd_subdimension_rejected(self):
        v = np.zeros(16)
        with pytest.raises(ValueError):
            rope3d_apply(v, (1, 2, 3), dims=(3, 7, 6))
        with pytest.raises(ValueError):
            rope3d_apply(v, (1, 2, 3), dims=(4, 6, 4))

    def test_matches_scalar_rotation_oracle(self):
        """Two-dimensional single-axis case equals a plain 2D rotation."""
        v = np.array([1.0, 0.0])
        out = rope3d_apply(v, (0, 0, 3), dims=(0, 0, 2), base=10000.0)
        # frequency for i=0 is base^0 = 1, so the angle is just the position
        np.testing.assert_allclose(out, [np.cos(3.0), np.sin(3.0)], atol=1e-15)
