"""Tests for the tape, backward pass, finite-difference checks, Adam and the container format."""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from fractions import Fraction

import numpy as np
import pytest

from t2net.engine import ops
from t2net.engine.checkpoint import (
    MAGIC,
    decode_arrays,
    encode_arrays,
    load_arrays,
    save_arrays,
)
from t2net.engine.gradcheck import check_gradients
from t2net.engine.optim import Adam, AdamState, adam_step
from t2net.engine.tensor import Tape, Tensor, active_tape, default_dtype, precision
from t2net.errors import ArtifactFormatError, ContractError


def _weighted_sum(out: Tensor, weights: Tensor) -> Tensor:
    return ops.sum_all(ops.mul(out, weights))


def _away_from_zero(rng, shape, low=0.1):
    return rng.uniform(low, 1.0, size=shape) * rng.choice([-1.0, 1.0], size=shape)


# ─── Tape / backward ─────────────────────────────────────────────────


class TestBackward:

    def test_sum_gives_ones(self):
        x = Tensor(np.random.default_rng(0).normal(size=(2, 3)), requires_grad=True)
        with Tape() as tape:
            loss = ops.sum_all(x)
        tape.backward(loss)
        np.testing.assert_array_equal(x.grad, np.ones((2, 3)))

    def test_sum_of_squares(self):
        x = Tensor(np.random.default_rng(1).normal(size=(4,)), requires_grad=True)
        with Tape() as tape:
            loss = ops.sum_all(ops.mul(x, x))
        tape.backward(loss)
        np.testing.assert_allclose(x.grad, 2 * x.data, rtol=1e-6)

    def test_reuse_accumulates(self):
        a = Tensor(np.random.default_rng(2).normal(size=(1, 1, 2, 2)), requires_grad=True)
        b = Tensor(a.data, requires_grad=True)
        with Tape() as tape:
            twice = ops.sum_all(ops.add(a, a))
        tape.backward(twice)
        with Tape() as tape:
            once = ops.sum_all(b)
        tape.backward(once)
        np.testing.assert_array_equal(a.grad, 2 * b.grad)

    def test_non_scalar_loss_rejected(self):
        x = Tensor(np.ones(3), requires_grad=True)
        with Tape() as tape:
            y = ops.add(x, 1.0)
        with pytest.raises(ContractError, match="scalar"):
            tape.backward(y)

    def test_loss_from_other_tape_rejected(self):
        x = Tensor(np.ones(3), requires_grad=True)
        with Tape():
            loss = ops.sum_all(x)
        with Tape() as other:
            ops.sum_all(x)
        with pytest.raises(ContractError):
            other.backward(loss)

    def test_tape_is_per_thread(self):
        x = Tensor(np.ones(3), requires_grad=True)

        def worker() -> tuple[object, int]:
            with Tape() as inner:
                ops.sum_all(x)
            return active_tape(), len(inner)

        with Tape() as tape:
            with ThreadPoolExecutor(max_workers=2) as pool:
                results = [pool.submit(worker).result() for _ in range(4)]
            assert active_tape() is tape
        assert results == [(None, 1)] * 4
        assert len(tape) == 0

    def test_precision_is_per_thread(self):
        with precision("float64"):
            with ThreadPoolExecutor(max_workers=1) as pool:
                assert pool.submit(default_dtype).result() is np.float32
            assert default_dtype() is np.float64
        assert default_dtype() is np.float32

    def test_nothing_recorded_outside_tape(self):
        x = Tensor(np.ones(3), requires_grad=True)
        y = ops.sum_all(x)
        assert not y.requires_grad

    def test_relu_subgradient_zero_at_zero(self):
        x = Tensor([-1.0, 0.0, 2.0], requires_grad=True)
        with Tape() as tape:
            loss = ops.sum_all(ops.relu(x))
        tape.backward(loss)
        np.testing.assert_array_equal(x.grad, [0.0, 0.0, 1.0])

    def test_l1_gradient_sign_over_count(self):
        pred = Tensor([1.0, 2.0, 3.0, 4.0], requires_grad=True)
        target = Tensor([0.0, 2.0, 5.0, 4.0])
        with Tape() as tape:
            loss = ops.l1_loss(pred, target)
        tape.backward(loss)
        np.testing.assert_allclose(pred.grad, [0.25, 0.0, -0.25, 0.0])

    def test_index_gradient_scatter_adds(self):
        p = Tensor(np.zeros((1, 1, 3)), requires_grad=True)
        with Tape() as tape:
            loss = ops.sum_all(ops.index_select_columns(p, np.array([[2, 2, 0]])))
        tape.backward(loss)
        np.testing.assert_array_equal(p.grad[0, 0], [1.0, 0.0, 2.0])


# ─── Finite-difference checks, one per op ────────────────────────────


class TestGradientChecks:

    @pytest.fixture(autouse=True)
    def _float64(self):
        with precision("float64"):
            yield

    def _assert_passes(self, fn, inputs):
        report = check_gradients(fn, inputs)
        assert report.passed, report.model_dump()
        assert report.max_error < 1e-4

    def test_conv2d(self):
        rng = np.random.default_rng(0)
        x = Tensor(rng.normal(size=(2, 2, 5, 5)), name="x")
        w = Tensor(rng.normal(size=(3, 2, 3, 3)), name="w")
        b = Tensor(rng.normal(size=3), name="b")
        r = Tensor(rng.normal(size=(2, 3, 3, 3)))
        self._assert_passes(lambda: _weighted_sum(ops.conv2d(x, w, b, 2, 1), r), [x, w, b])

    def test_pixel_shuffle(self):
        rng = np.random.default_rng(1)
        x = Tensor(rng.normal(size=(1, 8, 2, 3)))
        r = Tensor(rng.normal(size=(1, 2, 4, 6)))
        self._assert_passes(lambda: _weighted_sum(ops.pixel_shuffle(x, 2), r), [x])

    def test_unfold_and_fold(self):
        rng = np.random.default_rng(2)
        x = Tensor(rng.normal(size=(1, 2, 4, 4)))
        r = Tensor(rng.normal(size=(1, 2, 4, 4)))
        self._assert_passes(
            lambda: _weighted_sum(ops.fold(ops.unfold(x, 3, 1, 1), (4, 4), 3, 1, 1), r), [x]
        )

    def test_index_select_columns(self):
        rng = np.random.default_rng(3)
        p = Tensor(rng.normal(size=(2, 3, 6)))
        idx = rng.integers(0, 6, size=(2, 6))
        r = Tensor(rng.normal(size=(2, 3, 6)))
        self._assert_passes(lambda: _weighted_sum(ops.index_select_columns(p, idx), r), [p])

    @pytest.mark.parametrize("mode", ["nearest", "bilinear"])
    def test_resample(self, mode):
        rng = np.random.default_rng(4)
        x = Tensor(rng.normal(size=(1, 2, 4, 4)))
        r = Tensor(rng.normal(size=(1, 2, 4, 4)))
        self._assert_passes(
            lambda: _weighted_sum(ops.resample(ops.resample(x, 2, mode), Fraction(1, 2), mode), r),
            [x],
        )

    def test_add_sub_mul_broadcast(self):
        rng = np.random.default_rng(5)
        a = Tensor(rng.normal(size=(1, 3, 3, 3)))
        b = Tensor(rng.normal(size=(1, 3, 3, 3)))
        s = Tensor(rng.normal(size=(1, 1, 3, 3)))
        r = Tensor(rng.normal(size=(1, 3, 3, 3)))
        self._assert_passes(
            lambda: _weighted_sum(ops.mul(ops.sub(ops.add(a, b), ops.mul(a, b)), s), r),
            [a, b, s],
        )

    def test_relu_and_concat(self):
        rng = np.random.default_rng(6)
        a = Tensor(_away_from_zero(rng, (1, 2, 3, 3)))
        b = Tensor(rng.normal(size=(1, 1, 3, 3)))
        r = Tensor(rng.normal(size=(1, 3, 3, 3)))
        self._assert_passes(lambda: _weighted_sum(ops.concat_channels(ops.relu(a), b), r), [a, b])

    def test_l1_loss(self):
        rng = np.random.default_rng(7)
        target = rng.normal(size=(1, 1, 4, 4))
        pred = Tensor(target + _away_from_zero(rng, (1, 1, 4, 4)))
        self._assert_passes(lambda: ops.l1_loss(pred, Tensor(target)), [pred])


# ─── Adam ────────────────────────────────────────────────────────────


class TestAdam:

    def test_zero_gradient_leaves_param(self):
        p = Tensor([1.0, -2.0], requires_grad=True)
        state = AdamState.for_param(p)
        for _ in range(5):
            p.grad = np.zeros(2, dtype=p.dtype)
            adam_step(p, state, lr=0.1)
        np.testing.assert_array_equal(p.data, [1.0, -2.0])
        assert state.step == 5

    def test_first_step_moves_by_lr(self):
        p = Tensor([0.0, 0.0], requires_grad=True)
        p.grad = np.array([3.0, -0.5], dtype=p.dtype)
        state = AdamState.for_param(p)
        adam_step(p, state, lr=0.01)
        np.testing.assert_allclose(p.data, [-0.01, 0.01], rtol=1e-4)
        assert state.step == 1

    def test_quadratic_descent(self):
        with precision("float64"):
            w = Tensor([0.0], requires_grad=True)
        state = AdamState.for_param(w)
        for _ in range(100):
            w.grad = 2 * (w.data - 3.0)
            adam_step(w, state, lr=0.1)
        assert abs(w.item() - 3.0) < 0.2

    def test_missing_gradient(self):
        p = Tensor([1.0], requires_grad=True)
        with pytest.raises(ContractError, match="gradient"):
            adam_step(p, AdamState.for_param(p), lr=0.1)

    def test_optimizer_skips_params_without_grad(self):
        a = Tensor([1.0], requires_grad=True)
        b = Tensor([1.0], requires_grad=True)
        a.grad = np.array([1.0], dtype=a.dtype)
        opt = Adam({"a": a, "b": b}, lr=0.5)
        opt.step()
        assert a.item() == pytest.approx(0.5, rel=1e-5)
        assert b.item() == 1.0
        assert opt.states["b"].step == 0


# ─── Container format ────────────────────────────────────────────────


class TestContainer:

    def test_layout(self):
        blob = encode_arrays({"ab": np.array([[1.0, 2.0]], dtype=np.float32)})
        assert blob[:4] == MAGIC
        assert blob[4:8] == (1).to_bytes(4, "little")
        assert blob[8:12] == (2).to_bytes(4, "little")
        assert blob[12:14] == b"ab"
        assert blob[14:18] == (2).to_bytes(4, "little")
        assert blob[18:26] == (1).to_bytes(8, "little")
        assert blob[26:34] == (2).to_bytes(8, "little")
        assert blob[34:] == np.array([1.0, 2.0], dtype="<f4").tobytes()

    def test_round_trip_is_bit_exact(self, tmp_path):
        rng = np.random.default_rng(0)
        arrays = {
            "conv.weight": rng.normal(size=(4, 2, 3, 3)).astype(np.float32),
            "scalar": np.array(1.5, dtype=np.float32),
        }
        path = save_arrays(tmp_path / "a.bin", arrays)
        loaded = load_arrays(path)
        assert list(loaded) == list(arrays)
        for name, arr in arrays.items():
            assert loaded[name].shape == arr.shape
            assert loaded[name].tobytes() == arr.tobytes()
        assert encode_arrays(loaded) == path.read_bytes()

    def test_bad_magic(self):
        blob = b"XXXX" + encode_arrays({})[4:]
        with pytest.raises(ArtifactFormatError, match="magic"):
            decode_arrays(blob)

    def test_bad_version(self):
        blob = MAGIC + (7).to_bytes(4, "little")
        with pytest.raises(ArtifactFormatError, match="version"):
            decode_arrays(blob)

    def test_truncated(self):
        blob = encode_arrays({"w": np.ones((4, 4), dtype=np.float32)})
        with pytest.raises(ArtifactFormatError):
            decode_arrays(blob[:-3])

    def test_missing_file(self, tmp_path):
        with pytest.raises(FileNotFoundError):
            load_arrays(tmp_path / "nope.bin")
