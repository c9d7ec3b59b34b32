import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from lsai import model_core as mc
from lsai.model_core import LayerShape, MlpModel, ParamVector, SgdConfig


def small_net(rng, dims=(3, 4, 2), out_act=mc.SIGMOID):
    shapes = tuple(LayerShape(a, b) for a, b in zip(dims[:-1], dims[1:]))
    return MlpModel(mc.random_init(shapes, rng), out_act)


def finite_diff(model, x, t, h=1e-5):
    fd = np.zeros_like(model.params.values)
    for i in range(fd.size):
        for s, sign in ((h, 1.0), (-h, -1.0)):
            q = model.params.copy()
            q.values[i] += s
            y = mc.forward(MlpModel(q, model.out_activation), x)
            fd[i] += sign * 0.5 * np.sum((y - t) ** 2)
    return fd / (2 * h)


class TestForward:
    def test_zero_params_sigmoid_gives_half(self):
        shapes = mc.mlp_shapes(3, 2, hidden=4, n_hidden=2)
        model = MlpModel(mc.zeros(shapes), mc.SIGMOID)
        out = mc.forward(model, np.array([0.3, -1.0, 2.0]))
        assert np.all(out == 0.5)

    def test_single_weight_chain(self):
        # 1->1->1, w=1 b=0 both layers, sigmoid hidden, identity output
        shapes = (LayerShape(1, 1), LayerShape(1, 1))
        p = ParamVector(np.array([1.0, 0.0, 1.0, 0.0]), shapes)
        out = mc.forward(MlpModel(p, mc.IDENTITY), np.array([0.0]))
        assert out[0] == pytest.approx(0.5)

    def test_dot_product(self):
        p = ParamVector(np.array([3.0, 4.0, 0.0]), (LayerShape(2, 1),))
        out = mc.forward(MlpModel(p, mc.IDENTITY), np.array([1.0, 1.0]))
        assert out[0] == 7.0

    def test_dimension_mismatch_rejected(self):
        rng = np.random.default_rng(0)
        model = small_net(rng)
        with pytest.raises(ValueError, match="input dim"):
            mc.forward(model, np.zeros(5))

    def test_deterministic(self):
        rng = np.random.default_rng(1)
        model = small_net(rng)
        x = rng.normal(size=3)
        a = mc.forward(model, x)
        b = mc.forward(model, x)
        assert np.array_equal(a, b)

    def test_sigmoid_strictly_inside_unit_interval(self):
        x = np.array([-1e6, -50.0, 0.0, 50.0, 1e6])
        s = mc.sigmoid(x)
        assert np.all(s > 0.0) and np.all(s < 1.0)


class TestBackprop:
    def test_zero_residual_zero_gradient(self):
        rng = np.random.default_rng(2)
        model = small_net(rng)
        x = rng.normal(size=3)
        t = mc.forward(model, x)
        g = mc.backprop(model, x, t)
        assert np.all(g.values == 0.0)

    def test_hand_linear(self):
        # y = w*x, w=2, x=3, t=0: dL/dw = (y-t)*x = 18, dL/db = 6
        p = ParamVector(np.array([2.0, 0.0]), (LayerShape(1, 1),))
        g = mc.backprop(MlpModel(p, mc.IDENTITY), np.array([3.0]), np.array([0.0]))
        assert g.values[0] == pytest.approx(18.0)
        assert g.values[1] == pytest.approx(6.0)

    @pytest.mark.parametrize("seed", range(5))
    def test_matches_finite_differences(self, seed):
        rng = np.random.default_rng(seed)
        dims = tuple(int(d) for d in rng.integers(1, 9, size=4))
        model = small_net(rng, dims, mc.SIGMOID if seed % 2 else mc.IDENTITY)
        x = rng.normal(size=dims[0])
        t = rng.normal(size=dims[-1])
        g = mc.backprop(model, x, t)
        fd = finite_diff(model, x, t)
        rel = np.abs(fd - g.values) / np.maximum(np.abs(fd), 1e-6)
        assert rel.max() < 1e-4

    def test_target_shape_mismatch(self):
        rng = np.random.default_rng(3)
        model = small_net(rng)
        with pytest.raises(ValueError, match="target"):
            mc.backprop(model, np.zeros(3), np.zeros(5))

    def test_nonfinite_names_layer(self):
        p = ParamVector(np.array([1e300, 0.0]), (LayerShape(1, 1),))
        with pytest.raises(ValueError, match="layer 0"):
            mc.backprop(MlpModel(p, mc.IDENTITY), np.array([1e300]), np.array([0.0]))


class TestSgd:
    def test_zero_grad_fixed_point(self):
        rng = np.random.default_rng(4)
        model = small_net(rng)
        g = ParamVector(np.zeros_like(model.params.values), model.params.shapes)
        out = mc.sgd_step(model.params, g, SgdConfig(0.1, 1))
        assert out == model.params

    def test_arithmetic(self):
        shapes = (LayerShape(1, 1),)
        p = ParamVector(np.array([1.0, 0.0]), shapes)
        g = ParamVector(np.array([2.0, 0.0]), shapes)
        out = mc.sgd_step(p, g, SgdConfig(0.1, 1))
        assert out.values[0] == pytest.approx(0.8)

    def test_linearity(self):
        rng = np.random.default_rng(5)
        shapes = mc.mlp_shapes(2, 2, hidden=3, n_hidden=1)
        p = mc.random_init(shapes, rng)
        g1 = mc.random_init(shapes, rng)
        g2 = mc.random_init(shapes, rng)
        cfg = SgdConfig(0.05, 1)
        two = mc.sgd_step(mc.sgd_step(p, g1, cfg), g2, cfg)
        summed = ParamVector(g1.values + g2.values, shapes)
        one = mc.sgd_step(p, summed, cfg)
        assert np.allclose(two.values, one.values, atol=1e-15)

    def test_shape_mismatch(self):
        p = ParamVector(np.array([1.0, 0.0]), (LayerShape(1, 1),))
        g = ParamVector(np.zeros(6), (LayerShape(2, 2),))
        with pytest.raises(ValueError):
            mc.sgd_step(p, g, SgdConfig())

    def test_config_validation(self):
        with pytest.raises(ValueError):
            SgdConfig(learning_rate=0.0)
        with pytest.raises(ValueError):
            SgdConfig(batch_size=0)


class TestSerialization:
    def test_empty_layer_list_roundtrips(self):
        p = ParamVector(np.zeros(0), ())
        assert mc.deserialize(mc.serialize(p)) == p

    def test_default_topology_byte_length(self):
        shapes = mc.mlp_shapes(12, 2)
        n = sum(s.input_dim * s.output_dim + s.output_dim for s in shapes)
        data = mc.serialize(mc.zeros(shapes))
        header = 8 + 8 * len(shapes)  # magic+u16 x2, then u32 pairs
        assert len(data) == header + 8 * n
        assert len(data) == mc.serialized_size(shapes)

    @given(st.integers(0, 2**31))
    @settings(max_examples=200, deadline=None)
    def test_roundtrip_random(self, seed):
        rng = np.random.default_rng(seed)
        n_layers = int(rng.integers(1, 4))
        dims = [int(d) for d in rng.integers(1, 6, size=n_layers + 1)]
        shapes = tuple(LayerShape(a, b) for a, b in zip(dims[:-1], dims[1:]))
        p = mc.random_init(shapes, rng)
        assert mc.deserialize(mc.serialize(p)) == p

    def test_truncated_rejected(self):
        data = mc.serialize(mc.zeros(mc.mlp_shapes(2, 1, hidden=3, n_hidden=1)))
        for cut in (0, 4, 10, len(data) - 1):
            with pytest.raises(ValueError):
                mc.deserialize(data[:cut])

    def test_bad_magic_rejected(self):
        data = mc.serialize(mc.zeros((LayerShape(1, 1),)))
        with pytest.raises(ValueError, match="magic"):
            mc.deserialize(b"XXXX" + data[4:])


class TestParamVector:
    def test_length_checked(self):
        with pytest.raises(ValueError):
            ParamVector(np.zeros(3), (LayerShape(1, 1),))

    def test_nonfinite_rejected(self):
        with pytest.raises(ValueError):
            ParamVector(np.array([np.nan, 0.0]), (LayerShape(1, 1),))

    def test_layer_views_share_memory(self):
        p = mc.zeros((LayerShape(2, 2),))
        w, b = p.layer_views()[0]
        w[0, 0] = 5.0
        assert p.values[0] == 5.0
