import numpy as np
import pytest

from contoursel.errors import ContractError, DataError, ParseError, TrainingError
from contoursel.neural import (
    Dataset,
    Model,
    ModelSpec,
    TrainConfig,
    conv2d_backward,
    conv2d_forward,
    dense_forward,
    global_avg_pool_backward,
    global_avg_pool_forward,
    grad_check,
    load_model,
    maxpool2x2_forward,
    mse_loss,
    relu_forward,
    run_grad_check,
    save_model,
    train,
    transform_targets,
)


def conv2d_reference(x, w, b):
    """Direct six-loop convolution (3x3, stride 1, zero pad 1, channel-last)."""
    n, h, wd, c = x.shape
    o = w.shape[0]
    xp = np.pad(x, ((0, 0), (1, 1), (1, 1), (0, 0)))
    y = np.zeros((n, h, wd, o))
    for ni in range(n):
        for oi in range(o):
            for i in range(h):
                for j in range(wd):
                    acc = 0.0
                    for ci in range(c):
                        for u in range(3):
                            for v in range(3):
                                acc += xp[ni, i + u, j + v, ci] * w[oi, ci, u, v]
                    y[ni, i, j, oi] = acc + b[oi]
    return y


class TestConv:
    def test_identity_kernel(self):
        x = np.random.default_rng(0).random((1, 5, 5, 1))
        w = np.zeros((1, 1, 3, 3))
        w[0, 0, 1, 1] = 1.0
        y, _ = conv2d_forward(x, w, np.zeros(1))
        np.testing.assert_allclose(y, x)

    def test_zero_input_gives_bias(self):
        x = np.zeros((2, 4, 4, 3))
        w = np.random.default_rng(1).random((5, 3, 3, 3))
        b = np.arange(5.0)
        y, _ = conv2d_forward(x, w, b)
        for oi in range(5):
            np.testing.assert_allclose(y[..., oi], b[oi])

    def test_against_loop_reference(self):
        rng = np.random.default_rng(2)
        x = rng.normal(size=(1, 4, 4, 1))
        w = rng.normal(size=(2, 1, 3, 3))
        b = rng.normal(size=2)
        y, _ = conv2d_forward(x, w, b)
        np.testing.assert_allclose(y, conv2d_reference(x, w, b), atol=1e-12)

    def test_against_loop_reference_multichannel(self):
        rng = np.random.default_rng(3)
        x = rng.normal(size=(2, 5, 6, 3))
        w = rng.normal(size=(4, 3, 3, 3))
        b = rng.normal(size=4)
        y, _ = conv2d_forward(x, w, b)
        np.testing.assert_allclose(y, conv2d_reference(x, w, b), atol=1e-12)

    def test_channel_mismatch(self):
        with pytest.raises(ContractError):
            conv2d_forward(np.zeros((1, 4, 4, 2)), np.zeros((1, 3, 3, 3)), np.zeros(1))

    def test_backward_input_gradient_matches_fd(self):
        rng = np.random.default_rng(4)
        x = rng.normal(size=(1, 4, 4, 2))
        w = rng.normal(size=(3, 2, 3, 3))
        b = rng.normal(size=3)
        y, cache = conv2d_forward(x, w, b)
        g = rng.normal(size=y.shape)
        dx, dw, db = conv2d_backward(g, cache)
        h = 1e-6
        for idx in [(0, 0, 0, 0), (0, 2, 3, 1), (0, 3, 1, 0)]:
            xp = x.copy()
            xp[idx] += h
            xm = x.copy()
            xm[idx] -= h
            fd = (np.sum(conv2d_forward(xp, w, b)[0] * g) - np.sum(conv2d_forward(xm, w, b)[0] * g)) / (2 * h)
            assert dx[idx] == pytest.approx(fd, rel=1e-5)

    def test_backward_weight_gradient_matches_fd(self):
        rng = np.random.default_rng(5)
        x = rng.normal(size=(2, 4, 4, 2))
        w = rng.normal(size=(3, 2, 3, 3))
        b = rng.normal(size=3)
        y, cache = conv2d_forward(x, w, b)
        g = rng.normal(size=y.shape)
        _, dw, db = conv2d_backward(g, cache)
        h = 1e-6
        for idx in [(0, 0, 0, 0), (2, 1, 2, 2), (1, 0, 1, 1)]:
            wp = w.copy()
            wp[idx] += h
            wm = w.copy()
            wm[idx] -= h
            fd = (np.sum(conv2d_forward(x, wp, b)[0] * g) - np.sum(conv2d_forward(x, wm, b)[0] * g)) / (2 * h)
            assert dw[idx] == pytest.approx(fd, rel=1e-5)


class TestSmallLayers:
    def test_relu(self):
        y, _ = relu_forward(np.array([-1.0, 2.0]))
        np.testing.assert_array_equal(y, [0.0, 2.0])

    def test_maxpool_single_window(self):
        x = np.array([[1.0, 2.0], [3.0, 4.0]]).reshape(1, 2, 2, 1)
        y, _ = maxpool2x2_forward(x)
        assert y.reshape(()) == 4.0

    def test_maxpool_drops_odd_edge(self):
        x = np.arange(25.0).reshape(1, 5, 5, 1)
        y, _ = maxpool2x2_forward(x)
        assert y.shape == (1, 2, 2, 1)
        assert y[0, 1, 1, 0] == 18.0  # max of rows 2:4, cols 2:4

    def test_maxpool_backward_routes_to_max(self):
        x = np.array([[1.0, 4.0], [2.0, 3.0]]).reshape(1, 2, 2, 1)
        y, cache = maxpool2x2_forward(x)
        from contoursel.neural import maxpool2x2_backward

        dx = maxpool2x2_backward(np.ones_like(y), cache)
        np.testing.assert_array_equal(dx.reshape(2, 2), [[0.0, 1.0], [0.0, 0.0]])

    def test_gap(self):
        x = np.arange(8.0).reshape(1, 2, 2, 2)
        y, cache = global_avg_pool_forward(x)
        np.testing.assert_allclose(y, [[3.0, 4.0]])
        dx = global_avg_pool_backward(np.ones((1, 2)), cache)
        np.testing.assert_allclose(dx, 0.25)

    def test_dense_identity(self):
        x = np.random.default_rng(0).random((3, 4))
        y, _ = dense_forward(x, np.eye(4), np.zeros(4))
        np.testing.assert_allclose(y, x)

    def test_mse(self):
        loss, grad = mse_loss(np.array([[1.0, 2.0]]), np.array([[1.0, 2.0]]))
        assert loss == 0.0
        loss, grad = mse_loss(np.array([[2.0, 3.0]]), np.array([[1.0, 2.0]]))
        assert loss == 1.0
        np.testing.assert_allclose(grad, [[1.0, 1.0]])


class TestModelShapes:
    def test_combined_uses_five_input_channels(self):
        spec = ModelSpec(variant="combined", input_resolution=16, output_count=3)
        model = Model(spec, seed=0)
        first_conv = model.encoder.blocks[0][0]
        assert first_conv.value.shape == (16, 5, 3, 3)

    def test_separate_head_width(self):
        spec = ModelSpec(variant="separate", input_resolution=16, output_count=3)
        model = Model(spec, seed=0)
        # 5 views x 64 embedding dims + 1 dimension feature
        assert model.head[0][0].value.shape[1] == 5 * 64 + 1

    def test_separate_encoder_params_independent_of_view_count(self):
        base = ModelSpec(variant="separate", input_resolution=16, output_count=3, view_count=5)
        more = ModelSpec(variant="separate", input_resolution=16, output_count=3, view_count=7)
        n_base = sum(p.value.size for p in Model(base, 0).encoder.params())
        n_more = sum(p.value.size for p in Model(more, 0).encoder.params())
        assert n_base == n_more

    def test_head_is_resolution_independent(self):
        spec = ModelSpec(variant="combined", input_resolution=16, output_count=4)
        model = Model(spec, seed=1)
        rng = np.random.default_rng(0)
        out16 = model.forward_batch([rng.random((2, 5, 16, 16))], np.array([2.0, 3.0]))[0]
        out32 = model.forward_batch([rng.random((2, 5, 32, 32))], np.array([2.0, 3.0]))[0]
        assert out16.shape == out32.shape == (2, 4)

    def test_forward_deterministic(self):
        spec = ModelSpec(variant="separate", input_resolution=8, output_count=2,
                         encoder_channels=(4, 8))
        model = Model(spec, seed=3)
        x = [np.random.default_rng(5).random((1, 5, 8, 8))]
        a = model.forward_batch(x, np.array([2.0]))[0]
        b = model.forward_batch(x, np.array([2.0]))[0]
        np.testing.assert_array_equal(a, b)

    def test_moo_two_stack_model(self):
        spec = ModelSpec(variant="separate", input_resolution=8, output_count=3,
                         stack_count=2, encoder_channels=(2, 3))
        model = Model(spec, seed=0)
        rng = np.random.default_rng(1)
        pred = model.predict([rng.random((5, 8, 8)), rng.random((5, 8, 8))], 2.0)
        assert pred.shape == (3,)

    def test_wrong_stack_count_rejected(self):
        spec = ModelSpec(variant="combined", input_resolution=8, output_count=2,
                         encoder_channels=(2, 3))
        model = Model(spec, seed=0)
        with pytest.raises(ContractError):
            model.forward_batch([np.zeros((1, 5, 8, 8)), np.zeros((1, 5, 8, 8))], np.array([2.0]))

    def test_resolution_too_small_for_pools(self):
        with pytest.raises(ContractError):
            ModelSpec(variant="combined", input_resolution=4, output_count=2)


class TestGradCheck:
    @pytest.mark.parametrize("variant", ["combined", "separate"])
    def test_both_variants(self, variant):
        assert run_grad_check(variant, seed=0) < 1e-4

    def test_two_stack_variant(self):
        assert run_grad_check("separate", seed=1, stack_count=2) < 1e-4

    def test_residual_encoder(self):
        assert run_grad_check("combined", seed=2, residual_blocks=1) < 1e-4

    def test_zero_input_bias_gradients(self):
        from contoursel.neural import reduced_gradcheck_spec

        spec = reduced_gradcheck_spec("combined")
        model = Model(spec, seed=4)
        stacks = [np.zeros((1, 5, 8, 8))]
        targets = np.random.default_rng(0).normal(size=(1, 3))
        err = grad_check(model, stacks, np.array([2.0]), targets)
        assert err < 1e-4
        # conv bias gradients are nonzero even for a zero input
        bias_grads = [p.grad for p in model.params() if p.name == "encoder.conv0.b"]
        assert np.any(bias_grads[0] != 0.0)


def tiny_dataset(n=3, m=2, seed=0, stack_count=1):
    rng = np.random.default_rng(seed)
    return Dataset(
        stacks=[rng.random((n, 5, 8, 8)) for _ in range(stack_count)],
        dims=rng.integers(2, 11, size=n).astype(float),
        targets=rng.normal(size=(n, m)),
        tags=[f"s{i}" for i in range(n)],
    )


def tiny_spec(variant="combined", m=2, stack_count=1):
    return ModelSpec(
        variant=variant,
        input_resolution=8,
        output_count=m,
        stack_count=stack_count,
        encoder_channels=(2, 3),
        head_widths=(4,),
    )


class TestTraining:
    def test_single_sample_memorization(self):
        ds = tiny_dataset(n=1)
        model = Model(tiny_spec(), seed=0)
        losses = train(model, ds, TrainConfig(epochs=500, batch_size=1, seed=0, augment=False))
        assert losses[-1] < 1e-4

    def test_seeded_determinism(self):
        ds = tiny_dataset(n=4)
        cfg = TrainConfig(epochs=10, seed=11)
        m1 = Model(tiny_spec(), seed=7)
        m2 = Model(tiny_spec(), seed=7)
        l1 = train(m1, ds, cfg)
        l2 = train(m2, ds, cfg)
        assert l1 == l2
        for p1, p2 in zip(m1.params(), m2.params()):
            np.testing.assert_array_equal(p1.value, p2.value)

    def test_augmentation_changes_curve(self):
        ds = tiny_dataset(n=4)
        on = train(Model(tiny_spec(), 0), ds, TrainConfig(epochs=5, seed=1, augment=True))
        off = train(Model(tiny_spec(), 0), ds, TrainConfig(epochs=5, seed=1, augment=False))
        assert on != off

    def test_nonfinite_target_rejected(self):
        ds = tiny_dataset(n=2)
        ds.targets[0, 0] = np.nan
        with pytest.raises(DataError):
            train(Model(tiny_spec(), 0), ds, TrainConfig(epochs=1))

    def test_divergence_reports_epoch(self):
        ds = tiny_dataset(n=2)
        ds.targets *= 1e150  # overflow the loss within a few steps
        with np.errstate(all="ignore"), pytest.raises(TrainingError, match="epoch"):
            train(Model(tiny_spec(), 0), ds,
                  TrainConfig(epochs=5, optimizer="sgd", learning_rate=1e100, seed=0))

    def test_sgd_optimizer_runs(self):
        ds = tiny_dataset(n=2)
        losses = train(Model(tiny_spec(), 0), ds,
                       TrainConfig(epochs=3, optimizer="sgd", learning_rate=1e-3, seed=0))
        assert len(losses) == 3

    def test_dataset_subset_keeps_tags(self):
        ds = tiny_dataset(n=4)
        sub = ds.subset([2, 0])
        assert sub.tags == ["s2", "s0"]
        assert len(sub) == 2


class TestTransforms:
    def test_log10_relert(self):
        out = transform_targets("log10_relert", [1.0, 100.0, 1e6], clip_max=1e4)
        np.testing.assert_allclose(out, [0.0, 2.0, 4.0])

    def test_relhv_clip(self):
        out = transform_targets("relhv_clip", [-10.0, 0.5, 10.0])
        np.testing.assert_allclose(out, [-2.0, 0.5, 2.0])

    def test_argmin_preserved_by_log(self):
        rng = np.random.default_rng(0)
        for _ in range(20):
            vals = rng.uniform(1.0, 1e4, size=5)
            assert np.argmin(vals) == np.argmin(transform_targets("log10_relert", vals))


class TestPersistence:
    def test_round_trip_bit_exact(self, tmp_path):
        model = Model(tiny_spec("separate"), seed=9)
        path = tmp_path / "model.json"
        save_model(model, path)
        loaded = load_model(path)
        for p, q in zip(model.params(), loaded.params()):
            assert p.name == q.name
            np.testing.assert_array_equal(p.value, q.value)
        x = [np.random.default_rng(0).random((1, 5, 8, 8))]
        np.testing.assert_array_equal(
            model.forward_batch(x, np.array([2.0]))[0],
            loaded.forward_batch(x, np.array([2.0]))[0],
        )

    def test_spec_mismatch_rejected(self, tmp_path):
        model = Model(tiny_spec("combined"), seed=0)
        path = tmp_path / "model.json"
        save_model(model, path)
        with pytest.raises(DataError):
            load_model(path, expect_spec=tiny_spec("separate"))

    def test_truncated_file_rejected(self, tmp_path):
        model = Model(tiny_spec(), seed=0)
        path = tmp_path / "model.json"
        save_model(model, path)
        data = path.read_text()
        path.write_text(data[: len(data) // 2])
        with pytest.raises(ParseError):
            load_model(path)
