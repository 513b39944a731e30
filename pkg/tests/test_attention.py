import numpy as np
import pytest

from app.appearance.attention import (
    ChannelAttentionWeights,
    FeatureMap,
    SpatialAttentionWeights,
    apply_channel_gate,
    apply_spatial_gate,
    attention_block,
    channel_attention,
    channel_pool,
    global_average_pool,
    load_attention_weights,
    save_attention_weights,
    spatial_attention,
    spatial_pool,
)
from app.data.models import AttentionOrder
from app.errors import NonFiniteValue, ShapeMismatch


def _random_map(rng, c=None, h=None, w=None):
    shape = (c or int(rng.integers(1, 9)), h or int(rng.integers(1, 7)), w or int(rng.integers(1, 7)))
    return rng.normal(size=shape)


def _loop_spatial_gate(x, kernel):
    """Direct sum over the zero-padded window."""
    c, h, w = x.shape
    s = kernel.shape[-1]
    r = s // 2
    planes = [x.max(axis=0), x.mean(axis=0)]
    out = np.zeros((h, w))
    for i in range(h):
        for j in range(w):
            total = 0.0
            for p in range(2):
                for a in range(s):
                    for b in range(s):
                        ii, jj = i + a - r, j + b - r
                        if 0 <= ii < h and 0 <= jj < w:
                            total += kernel[0, p, a, b] * planes[p][ii, jj]
            out[i, j] = 1.0 / (1.0 + np.exp(-total))
    return out[None]


class TestFeatureMap:
    def test_rejects_non_3d(self):
        with pytest.raises(ShapeMismatch):
            FeatureMap(data=np.zeros((2, 2)))

    def test_rejects_nan(self):
        data = np.zeros((2, 2, 2))
        data[1, 0, 1] = np.nan
        with pytest.raises(NonFiniteValue):
            FeatureMap(data=data)


class TestPooling:
    def test_constant_map(self):
        avg, mx = channel_pool(np.full((3, 4, 5), 2.0))
        np.testing.assert_array_equal(avg, [2.0, 2.0, 2.0])
        np.testing.assert_array_equal(mx, [2.0, 2.0, 2.0])

    def test_two_values(self):
        avg, mx = channel_pool(np.array([[[1.0, 3.0]]]))
        assert avg[0] == 2.0 and mx[0] == 3.0

    def test_against_loops(self):
        x = np.random.default_rng(0).normal(size=(4, 3, 3))
        avg, mx = channel_pool(x)
        for c in range(4):
            values = [x[c, i, j] for i in range(3) for j in range(3)]
            assert avg[c] == pytest.approx(sum(values) / 9, abs=1e-12)
            assert mx[c] == max(values)
        np.testing.assert_array_equal(global_average_pool(x), avg)

    def test_spatial_pool_planes(self):
        x = np.stack([np.ones((2, 3)), np.full((2, 3), 3.0)])
        pooled = spatial_pool(x)
        np.testing.assert_array_equal(pooled[0], 3.0)
        np.testing.assert_array_equal(pooled[1], 2.0)

    def test_spatial_pool_single_channel(self):
        x = np.random.default_rng(1).normal(size=(1, 3, 4))
        pooled = spatial_pool(x)
        np.testing.assert_array_equal(pooled[0], x[0])
        np.testing.assert_allclose(pooled[1], x[0])


class TestChannelAttention:
    def test_zero_weights_give_half(self):
        gate = channel_attention(np.random.default_rng(2).normal(size=(5, 3, 3)), ChannelAttentionWeights.zeros(5, 2))
        np.testing.assert_array_equal(gate, 0.5)

    def test_matches_formula(self):
        rng = np.random.default_rng(3)
        x = rng.normal(size=(6, 4, 5))
        w = ChannelAttentionWeights.seeded(6, 2, seed=4)
        avg, mx = x.mean(axis=(1, 2)), x.max(axis=(1, 2))
        mlp = lambda v: w.w2 @ np.maximum(w.w1 @ v, 0.0)  # noqa: E731
        expected = 1.0 / (1.0 + np.exp(-(mlp(avg) + mlp(mx))))
        np.testing.assert_allclose(channel_attention(x, w), expected, rtol=1e-12)

    def test_hidden_width_rounds_up(self):
        assert ChannelAttentionWeights.hidden_width(20, 16) == 2
        assert ChannelAttentionWeights.hidden_width(4, 16) == 1

    def test_channel_count_mismatch(self):
        with pytest.raises(ShapeMismatch):
            channel_attention(np.zeros((3, 2, 2)), ChannelAttentionWeights.zeros(4))

    def test_identity_and_zero_gates(self):
        x = np.random.default_rng(5).normal(size=(3, 2, 2))
        np.testing.assert_array_equal(apply_channel_gate(x, np.ones(3)).data, x)
        np.testing.assert_array_equal(apply_channel_gate(x, np.zeros(3)).data, 0.0)


class TestSpatialAttention:
    def test_zero_kernel_gives_half(self):
        gate = spatial_attention(np.random.default_rng(6).normal(size=(3, 4, 4)), SpatialAttentionWeights.zeros(7))
        assert gate.shape == (1, 4, 4)
        np.testing.assert_array_equal(gate, 0.5)

    @pytest.mark.parametrize("size", [1, 3, 7])
    def test_against_loops(self, size):
        rng = np.random.default_rng(size)
        x = rng.normal(size=(3, 5, 4))
        w = SpatialAttentionWeights.seeded(size, seed=size)
        np.testing.assert_allclose(spatial_attention(x, w), _loop_spatial_gate(x, w.kernel), rtol=1e-10)

    def test_even_kernel_rejected(self):
        with pytest.raises(ShapeMismatch):
            SpatialAttentionWeights(kernel=np.zeros((1, 2, 4, 4)))

    def test_apply_gate(self):
        x = np.random.default_rng(7).normal(size=(2, 3, 3))
        np.testing.assert_array_equal(apply_spatial_gate(x, np.ones((1, 3, 3))).data, x)
        np.testing.assert_array_equal(apply_spatial_gate(x, np.zeros((3, 3))).data, 0.0)
        gate = np.random.default_rng(8).uniform(size=(1, 3, 3))
        out = apply_spatial_gate(x, gate).data
        for c in range(2):
            for i in range(3):
                for j in range(3):
                    assert out[c, i, j] == x[c, i, j] * gate[0, i, j]


class TestGateInvariants:
    def test_random_maps(self):
        rng = np.random.default_rng(2024)
        for trial in range(200):
            x = _random_map(rng)
            c = x.shape[0]
            cw = ChannelAttentionWeights.seeded(c, reduction=int(rng.integers(1, 5)), seed=trial)
            sw = SpatialAttentionWeights.seeded(int(rng.choice([1, 3, 5, 7])), seed=trial)

            g_c = channel_attention(x, cw)
            g_s = spatial_attention(x, sw)
            assert np.all((g_c > 0) & (g_c < 1))
            assert np.all((g_s > 0) & (g_s < 1))

            flat = x.reshape(c, -1)
            shuffled = flat[:, rng.permutation(flat.shape[1])].reshape(x.shape)
            np.testing.assert_allclose(channel_attention(shuffled, cw), g_c, rtol=1e-12, atol=1e-15)
            np.testing.assert_allclose(spatial_attention(x[rng.permutation(c)], sw), g_s, rtol=1e-12, atol=1e-15)

            np.testing.assert_array_equal(channel_attention(x, ChannelAttentionWeights.zeros(c)), 0.5)
            np.testing.assert_array_equal(spatial_attention(x, SpatialAttentionWeights.zeros(sw.size)), 0.5)


class TestAttentionBlock:
    @pytest.mark.parametrize("order", [AttentionOrder.CHANNEL_THEN_SPATIAL, AttentionOrder.SPATIAL_THEN_CHANNEL])
    def test_zero_weights_quarter_the_map(self, order):
        x = np.random.default_rng(9).normal(size=(4, 3, 3))
        out = attention_block(x, ChannelAttentionWeights.zeros(4), SpatialAttentionWeights.zeros(3), order)
        np.testing.assert_allclose(out.data, 0.25 * x, rtol=1e-15)

    def test_parallel_uses_gates_from_input(self):
        rng = np.random.default_rng(10)
        x = rng.normal(size=(4, 5, 5))
        cw = ChannelAttentionWeights.seeded(4, 2, seed=1)
        sw = SpatialAttentionWeights.seeded(3, seed=2)
        expected = x * channel_attention(x, cw)[:, None, None] * spatial_attention(x, sw)
        np.testing.assert_allclose(attention_block(x, cw, sw, AttentionOrder.PARALLEL).data, expected)

    def test_orders_differ(self):
        rng = np.random.default_rng(11)
        x = rng.normal(size=(4, 5, 5))
        cw = ChannelAttentionWeights.seeded(4, 2, seed=1, scale=2.0)
        sw = SpatialAttentionWeights.seeded(3, seed=2, scale=2.0)
        a = attention_block(x, cw, sw, AttentionOrder.CHANNEL_THEN_SPATIAL).data
        b = attention_block(x, cw, sw, AttentionOrder.SPATIAL_THEN_CHANNEL).data
        assert not np.allclose(a, b)


class TestWeightFile:
    def test_save_and_load(self, tmp_path):
        cw = ChannelAttentionWeights.seeded(8, 4, seed=1)
        sw = SpatialAttentionWeights.seeded(5, seed=2)
        save_attention_weights(tmp_path / "att.bin", cw, sw)
        cw2, sw2 = load_attention_weights(tmp_path / "att.bin")
        assert cw2.reduction == 4
        np.testing.assert_allclose(cw2.w1, cw.w1, rtol=1e-6)
        np.testing.assert_allclose(cw2.w2, cw.w2, rtol=1e-6)
        np.testing.assert_allclose(sw2.kernel, sw.kernel, rtol=1e-6)
