"""Tests for the two-branch network: Resblocks, task transformer, forward pass and ablations."""

from __future__ import annotations

import numpy as np
import pytest

from t2net.engine import ops
from t2net.engine.gradcheck import check_gradients
from t2net.engine.tensor import Tensor, precision
from t2net.errors import ArtifactFormatError, DimensionError, ParameterError
from t2net.models.configs import ModelConfig, QueryMode, Variant
from t2net.network.layers import resblock_forward
from t2net.network.params import (
    ConvParams,
    T2NetParams,
    conv_layout,
    load_params,
    save_params,
)
from t2net.network.t2net import ablation_forward, run_network, t2net_forward
from t2net.network.task_transformer import (
    relevance_embedding,
    resample_value,
    task_transformer_forward,
    transfer_features,
)
from t2net.training.loss import multitask_loss


def _conv_ref(x: np.ndarray, w: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Stride-1, padding-1 3×3 cross-correlation by explicit window sums."""
    _, _, h, wd = x.shape
    xp = np.pad(x, ((0, 0), (0, 0), (1, 1), (1, 1)))
    out = np.zeros((x.shape[0], w.shape[0], h, wd))
    for dy in range(3):
        for dx in range(3):
            out += np.einsum("bchw,oc->bohw", xp[:, :, dy:dy + h, dx:dx + wd], w[:, :, dy, dx])
    return out + b[None, :, None, None]


def _conv_params(rng, cin: int, cout: int, scale: float = 0.3) -> ConvParams:
    return ConvParams(
        Tensor(rng.normal(scale=scale, size=(cout, cin, 3, 3))),
        Tensor(rng.normal(scale=scale, size=cout)),
    )


def _zero_conv(cin: int, cout: int) -> ConvParams:
    return ConvParams(Tensor(np.zeros((cout, cin, 3, 3))), Tensor(np.zeros(cout)))


def _transfer_ref(v: np.ndarray, t: np.ndarray, k: int) -> np.ndarray:
    b, c, h, w = v.shape
    r = k // 2
    vp = np.pad(v, ((0, 0), (0, 0), (r, r), (r, r)))
    out = np.zeros_like(v, dtype=np.float64)
    count = np.zeros((h, w))
    for bi in range(b):
        for i in range(h * w):
            yi, xi = divmod(i, w)
            yj, xj = divmod(int(t[bi, i]), w)
            for dy in range(k):
                for dx in range(k):
                    ty, tx = yi + dy - r, xi + dx - r
                    if 0 <= ty < h and 0 <= tx < w:
                        out[bi, :, ty, tx] += vp[bi, :, yj + dy, xj + dx]
                        if bi == 0:
                            count[ty, tx] += 1
    return out / count


def _small_config(**kw) -> ModelConfig:
    base = {"n_stages": 2, "channels": 4, "scale": 2, "zero_init_outputs": False}
    return ModelConfig(**{**base, **kw})


def _lr_input(seed: int = 0, size: int = 8, batch: int = 1) -> Tensor:
    return Tensor(np.random.default_rng(seed).uniform(size=(batch, 1, size, size)))


# ─── Resblock ────────────────────────────────────────────────────────


class TestResblock:

    def test_zero_weights_is_identity(self):
        x = Tensor(np.random.default_rng(0).normal(size=(1, 3, 5, 5)))
        out = resblock_forward(x, _zero_conv(3, 3), _zero_conv(3, 3))
        np.testing.assert_array_equal(out.data, x.data)

    def test_zero_input_zero_bias(self):
        rng = np.random.default_rng(1)
        c1, c2 = _conv_params(rng, 2, 2), _conv_params(rng, 2, 2)
        c1.bias.data[:] = 0
        c2.bias.data[:] = 0
        out = resblock_forward(Tensor(np.zeros((2, 2, 4, 4))), c1, c2)
        assert not out.data.any()

    def test_matches_window_sum_oracle(self):
        rng = np.random.default_rng(2)
        x = rng.normal(size=(2, 3, 6, 5))
        c1, c2 = _conv_params(rng, 3, 3), _conv_params(rng, 3, 3)
        hidden = np.maximum(_conv_ref(x, c1.weight.data, c1.bias.data), 0.0)
        expected = x + _conv_ref(hidden, c2.weight.data, c2.bias.data)
        out = resblock_forward(Tensor(x), c1, c2)
        np.testing.assert_allclose(out.data, expected, rtol=1e-4, atol=1e-5)


# ─── Relevance embedding ─────────────────────────────────────────────


class TestRelevanceEmbedding:

    def test_self_similarity(self):
        q = Tensor([[[[1.0, 0.0], [1.0, -1.0]], [[0.0, 1.0], [1.0, 0.5]]]])
        t, s = relevance_embedding(q, q, patch_k=1)
        np.testing.assert_array_equal(t, [[0, 1, 2, 3]])
        np.testing.assert_allclose(s.data.reshape(-1), 1.0, atol=1e-6)

    def test_hand_table(self):
        qv = np.array([1.0, -2.0, 3.0, 0.0])
        kv = np.array([-1.0, 2.0, 0.5, -4.0])
        q = Tensor(qv.reshape(1, 1, 2, 2))
        k = Tensor(kv.reshape(1, 1, 2, 2))
        t, s = relevance_embedding(q, k, patch_k=1)

        table = np.outer(np.sign(qv), np.sign(kv))
        np.testing.assert_array_equal(t[0], np.argmax(table, axis=1))
        np.testing.assert_array_equal(t[0], [1, 0, 1, 0])
        np.testing.assert_allclose(s.data.reshape(-1), [1.0, 1.0, 1.0, 0.0])

    def test_key_scale_invariance(self):
        rng = np.random.default_rng(3)
        q = Tensor(rng.normal(size=(2, 3, 5, 5)))
        k = Tensor(rng.normal(size=(2, 3, 5, 5)))
        t1, s1 = relevance_embedding(q, k)
        t2, s2 = relevance_embedding(q, Tensor(k.data * 7.5))
        np.testing.assert_array_equal(t1, t2)
        np.testing.assert_allclose(s1.data, s2.data, atol=1e-5)

    def test_invariants_on_random_pairs(self):
        rng = np.random.default_rng(7)
        identity = np.arange(16)[None]
        with precision("float64"):
            for _ in range(200):
                q = Tensor(rng.normal(size=(1, 2, 4, 4)))
                k = Tensor(rng.normal(size=(1, 2, 4, 4)))
                t_self, s_self = relevance_embedding(q, q)
                np.testing.assert_array_equal(t_self, identity)
                np.testing.assert_allclose(s_self.data, 1.0, atol=1e-12)

                t, s = relevance_embedding(q, k)
                cq, ck = rng.uniform(0.1, 10.0, size=2)
                t_scaled, s_scaled = relevance_embedding(Tensor(q.data * cq), Tensor(k.data * ck))
                np.testing.assert_array_equal(t_scaled, t)
                np.testing.assert_allclose(s_scaled.data, s.data, atol=1e-12)
                assert np.abs(s.data).max() <= 1.0

                np.testing.assert_allclose(transfer_features(k, identity).data, k.data, atol=1e-6)

    def test_chunking_does_not_change_result(self):
        rng = np.random.default_rng(4)
        q = Tensor(rng.normal(size=(1, 2, 6, 6)))
        k = Tensor(rng.normal(size=(1, 2, 6, 6)))
        t1, s1 = relevance_embedding(q, k, chunk_rows=5)
        t2, s2 = relevance_embedding(q, k, chunk_rows=1000)
        np.testing.assert_array_equal(t1, t2)
        np.testing.assert_allclose(s1.data, s2.data, atol=1e-6)

    def test_similarity_bounded_and_detached(self):
        rng = np.random.default_rng(5)
        q = Tensor(rng.normal(size=(1, 2, 4, 4)), requires_grad=True)
        t, s = relevance_embedding(q, Tensor(rng.normal(size=(1, 2, 4, 4))))
        assert t.shape == (1, 16)
        assert s.shape == (1, 1, 4, 4)
        assert np.all(np.abs(s.data) <= 1.0)
        assert not s.requires_grad

    def test_zero_key_gives_zero_similarity(self):
        q = Tensor(np.random.default_rng(6).normal(size=(1, 2, 3, 3)))
        t, s = relevance_embedding(q, Tensor(np.zeros((1, 2, 3, 3))))
        assert not t.any()
        assert not s.data.any()

    def test_shape_mismatch(self):
        with pytest.raises(DimensionError):
            relevance_embedding(Tensor(np.zeros((1, 2, 4, 4))), Tensor(np.zeros((1, 2, 4, 2))))


# ─── Transfer features ───────────────────────────────────────────────


class TestTransferFeatures:

    def test_identity_index(self):
        v = Tensor(np.random.default_rng(0).normal(size=(2, 3, 5, 4)))
        t = np.tile(np.arange(20), (2, 1))
        np.testing.assert_allclose(transfer_features(v, t).data, v.data, rtol=1e-5, atol=1e-5)

    def test_constant_index_unit_patch(self):
        v = Tensor(np.random.default_rng(1).normal(size=(1, 2, 3, 3)))
        out = transfer_features(v, np.full((1, 9), 5), patch_k=1)
        expected = np.broadcast_to(v.data[:, :, 1:2, 2:3], (1, 2, 3, 3))
        np.testing.assert_array_equal(out.data, expected)

    def test_matches_loop_oracle(self):
        rng = np.random.default_rng(2)
        v = rng.normal(size=(2, 2, 4, 5))
        t = rng.integers(0, 20, size=(2, 20))
        out = transfer_features(Tensor(v), t, patch_k=3)
        np.testing.assert_allclose(out.data, _transfer_ref(v, t, 3), rtol=1e-5, atol=1e-5)


# ─── Task transformer ────────────────────────────────────────────────


class TestTaskTransformer:

    @pytest.fixture
    def features(self):
        rng = np.random.default_rng(0)
        return Tensor(rng.normal(size=(1, 2, 4, 4))), Tensor(rng.normal(size=(1, 2, 4, 4)))

    def test_zero_output_conv_returns_query(self, features):
        f_sr, f_rec = features
        params = T2NetParams.init(_small_config(channels=2, n_stages=1, zero_init_outputs=True))
        out, _ = task_transformer_forward(f_sr, f_rec, params, 1)
        np.testing.assert_array_equal(out.data, ops.add(f_sr, f_rec).data)

    def test_zero_rec_features_return_query(self, features):
        f_sr, _ = features
        params = T2NetParams.init(_small_config(channels=2, n_stages=1))
        out, att = task_transformer_forward(f_sr, Tensor(np.zeros((1, 2, 4, 4))), params, 1)
        assert not att.soft_map.data.any()
        np.testing.assert_array_equal(out.data, f_sr.data)

    @pytest.mark.parametrize("mode", [QueryMode.SUM, QueryMode.SR])
    def test_matches_composition(self, features, mode):
        f_sr, f_rec = features
        cfg = _small_config(channels=2, n_stages=1, query_mode=mode)
        params = T2NetParams.init(cfg, seed=3)
        out, att = task_transformer_forward(f_sr, f_rec, params, 1)

        q = f_sr.data + f_rec.data if mode == QueryMode.SUM else f_sr.data
        t, s = relevance_embedding(Tensor(q), f_rec, 3)
        c = _transfer_ref(resample_value(f_rec, 2).data, t, 3)
        conv_z, conv_out = params.conv("tt.1.conv_z"), params.conv("tt.1.conv_out")
        z = _conv_ref(np.concatenate([c, q], axis=1), conv_z.weight.data, conv_z.bias.data)
        expected = q + _conv_ref(z, conv_out.weight.data, conv_out.bias.data) * s.data
        np.testing.assert_array_equal(att.transfer_index, t)
        np.testing.assert_allclose(out.data, expected, rtol=1e-4, atol=1e-5)

    def test_frozen_attention_replays(self, features):
        f_sr, f_rec = features
        params = T2NetParams.init(_small_config(channels=2, n_stages=1))
        out, att = task_transformer_forward(f_sr, f_rec, params, 1)
        again, _ = task_transformer_forward(f_sr, f_rec, params, 1, frozen=att)
        np.testing.assert_array_equal(again.data, out.data)

    def test_value_resampling_keeps_shape(self, features):
        _, f_rec = features
        assert resample_value(f_rec, 4).shape == f_rec.shape
        assert resample_value(f_rec, 1) is f_rec


# ─── Forward pass ────────────────────────────────────────────────────


class TestForward:

    def test_zero_init_outputs_are_zero(self):
        params = T2NetParams.init(_small_config(zero_init_outputs=True))
        x_sr, x_rec = t2net_forward(_lr_input(), params)
        assert not x_sr.data.any()
        assert not x_rec.data.any()

    @pytest.mark.parametrize("scale", [1, 2, 4])
    def test_shape_law(self, scale):
        params = T2NetParams.init(_small_config(scale=scale, n_stages=1))
        x_sr, x_rec = t2net_forward(_lr_input(batch=2), params)
        assert x_sr.shape == (2, 1, 8 * scale, 8 * scale)
        assert x_rec.shape == (2, 1, 8, 8)

    def test_deterministic(self):
        cfg = _small_config(channels=8)
        first, _ = t2net_forward(_lr_input(1), T2NetParams.init(cfg, seed=9))
        second, _ = t2net_forward(_lr_input(1), T2NetParams.init(cfg, seed=9))
        assert first.data.tobytes() == second.data.tobytes()

    def test_attention_per_stage(self):
        result = run_network(_lr_input(), T2NetParams.init(_small_config(n_stages=3)))
        assert len(result.attention) == 3
        assert all(a.transfer_index.shape == (1, 64) for a in result.attention)

    def test_rejects_multichannel_input(self):
        params = T2NetParams.init(_small_config())
        with pytest.raises(DimensionError, match="B×1×h×w"):
            t2net_forward(Tensor(np.zeros((1, 2, 8, 8))), params)

    def test_frozen_attention_count(self):
        params = T2NetParams.init(_small_config())
        attention = run_network(_lr_input(), params).attention
        with pytest.raises(ParameterError):
            run_network(_lr_input(), params, frozen_attention=attention[:1])


# ─── Ablation variants ───────────────────────────────────────────────


class TestAblation:

    def test_no_rec_shares_sr_weights(self):
        full = T2NetParams.init(_small_config(), seed=4)
        no_rec = T2NetParams.init(_small_config(variant=Variant.NO_REC), seed=4)
        assert not any(n.startswith(("rec_", "tt.")) for n in no_rec.tensors)
        for name, tensor in no_rec:
            np.testing.assert_array_equal(tensor.data, full.tensors[name].data)
        _, x_rec = t2net_forward(_lr_input(), no_rec)
        assert x_rec is None

    def test_additive_fusion_with_zero_rec_features(self):
        params = T2NetParams.init(_small_config(), seed=5)
        for name, tensor in params:
            if name.startswith(("rec_shallow", "rec_blocks")):
                tensor.data[...] = 0.0
        x = _lr_input(2)
        no_tt, _ = ablation_forward(Variant.NO_TT, x, params)
        no_rec, _ = ablation_forward("no_rec", x, params)
        np.testing.assert_array_equal(no_tt.data, no_rec.data)

    def test_zero_init_full_equals_additive_fusion(self):
        params = T2NetParams.init(_small_config(zero_init_outputs=True), seed=6)
        params.tensors["final_conv.weight"].data[...] = 0.1
        x = _lr_input(3)
        full, _ = ablation_forward(Variant.FULL, x, params)
        no_tt, _ = ablation_forward(Variant.NO_TT, x, params)
        np.testing.assert_array_equal(full.data, no_tt.data)

    def test_task_transformer_changes_output(self):
        params = T2NetParams.init(_small_config(), seed=7)
        x = _lr_input(4)
        full, _ = ablation_forward(Variant.FULL, x, params)
        no_tt, _ = ablation_forward(Variant.NO_TT, x, params)
        assert not np.allclose(full.data, no_tt.data)

    def test_missing_layers(self):
        params = T2NetParams.init(_small_config(variant=Variant.NO_REC))
        with pytest.raises(ParameterError, match="lack layers"):
            ablation_forward(Variant.FULL, _lr_input(), params)


# ─── Parameters and checkpoints ──────────────────────────────────────


class TestParams:

    def test_layout_size(self):
        assert len(conv_layout(_small_config())) == 2 + 2 * 6 + 3
        assert len(conv_layout(_small_config(variant=Variant.NO_TT))) == 2 + 2 * 4 + 3
        assert len(conv_layout(_small_config(variant=Variant.NO_REC))) == 1 + 2 * 2 + 2

    def test_zero_init_layers(self):
        params = T2NetParams.init(_small_config(zero_init_outputs=True))
        for name in ("final_conv", "rec_out", "tt.1.conv_out", "tt.2.conv_out"):
            assert not params.tensors[f"{name}.weight"].data.any()
        assert params.tensors["upsampler.weight"].data.any()

    def test_seeded(self):
        a = T2NetParams.init(_small_config(), seed=1)
        b = T2NetParams.init(_small_config(), seed=1)
        c = T2NetParams.init(_small_config(), seed=2)
        w = "sr_blocks.1.conv1.weight"
        np.testing.assert_array_equal(a.tensors[w].data, b.tensors[w].data)
        assert not np.array_equal(a.tensors[w].data, c.tensors[w].data)

    def test_groups(self):
        groups = T2NetParams.init(_small_config()).groups()
        assert {"sr_shallow", "rec_shallow", "sr_blocks", "rec_blocks", "tt.1.conv_z"} <= set(
            groups
        )
        assert len(groups["sr_blocks"]) == 2 * 2 * 2

    def test_checkpoint_round_trip(self, tmp_path):
        params = T2NetParams.init(_small_config(query_mode=QueryMode.SR), seed=3)
        path = save_params(tmp_path / "model.ckpt", params)
        loaded = load_params(path)
        assert loaded.config == params.config
        for name, tensor in params:
            assert loaded.tensors[name].data.tobytes() == tensor.data.tobytes()

    def test_checkpoint_shape_mismatch(self, tmp_path):
        path = save_params(tmp_path / "model.ckpt", T2NetParams.init(_small_config()))
        with pytest.raises(ArtifactFormatError, match="shape"):
            load_params(path, config=_small_config(channels=8))

    def test_checkpoint_variant_mismatch(self, tmp_path):
        params = T2NetParams.init(_small_config(variant=Variant.NO_REC))
        path = save_params(tmp_path / "model.ckpt", params)
        with pytest.raises(ArtifactFormatError, match="missing"):
            load_params(path, config=_small_config())


# ─── End-to-end gradient check ───────────────────────────────────────


class TestEndToEndGradients:

    def test_network_gradients_match_finite_differences(self):
        with precision("float64"):
            cfg = _small_config(n_stages=1, channels=4)
            params = T2NetParams.init(cfg, seed=11)
            rng = np.random.default_rng(12)
            x = Tensor(rng.uniform(size=(1, 1, 8, 8)))
            target_sr = Tensor(rng.uniform(size=(1, 1, 16, 16)))
            target_rec = Tensor(rng.uniform(size=(1, 1, 8, 8)))
            frozen = run_network(x, params).attention

            def loss():
                result = run_network(x, params, frozen_attention=frozen)
                return multitask_loss(result.x_sr, target_sr, result.x_rec, target_rec)

            report = check_gradients(
                loss, [t for _, t in params], max_entries=20, skip_kinks=True
            )
        assert report.passed, [t.model_dump() for t in report.tensors if t.max_error > 1e-4]
        assert report.skipped_fraction <= 0.1
        assert len(report.tensors) == len(params.tensors)
