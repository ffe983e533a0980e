import numpy as np
import pytest

from afigan.autonet import (
    Adam,
    MlpNet,
    adam_step,
    finite_difference_grads,
    flatten_grads,
)
from afigan.errors import InvalidInputError, StateError
from afigan.randsrc import Rng

ACTS = ["leaky_relu", "tanh", "identity"]


def random_net(seed, dims, acts):
    return MlpNet(dims, acts, rng=Rng(seed))


def mse(target):
    def loss(out):
        r = out - target
        return 0.5 * float(np.sum(r * r)) / len(out)

    return loss


def mse_grad(out, target):
    return (out - target) / len(out)


def assert_grads_close(analytic, numeric):
    # 1e-4 relative; the 1e-9 floor absorbs finite-difference round-off on
    # gradients that are themselves ~0
    err = np.abs(analytic - numeric)
    assert np.all(err <= 1e-4 * np.maximum(np.abs(analytic), np.abs(numeric)) + 1e-9), err.max()


class TestForward:
    def test_zero_net(self):
        net = MlpNet.zeros([3, 4, 2], ["identity", "identity"])
        assert np.array_equal(net(np.ones((5, 3))), np.zeros((5, 2)))

    def test_identity_layer(self, nprng):
        net = MlpNet([4, 4], ["identity"], [np.eye(4)], [np.zeros(4)])
        x = nprng.normal(size=(6, 4))
        assert np.array_equal(net(x), x)

    def test_straight_line_reimplementation(self, nprng):
        net = random_net(1, [5, 7, 3], ["tanh", "leaky_relu"])
        x = nprng.normal(size=(4, 5))
        w0, b0, w1, b1 = net.params()
        expected = np.zeros((4, 3))
        for r in range(4):
            h = [np.tanh(sum(x[r, i] * w0[i, j] for i in range(5)) + b0[j]) for j in range(7)]
            for c in range(3):
                z = sum(h[j] * w1[j, c] for j in range(7)) + b1[c]
                expected[r, c] = z if z > 0 else 0.2 * z
        np.testing.assert_allclose(net(x), expected, rtol=0, atol=1e-12)

    def test_batch_order_equivariant(self, nprng):
        net = random_net(2, [3, 8, 2], ["leaky_relu", "identity"])
        x = nprng.normal(size=(9, 3))
        perm = nprng.permutation(9)
        np.testing.assert_allclose(net(x[perm]), net(x)[perm], rtol=0, atol=1e-15)

    def test_wrong_input_dim(self):
        with pytest.raises(InvalidInputError):
            random_net(0, [3, 2], ["identity"])(np.zeros((1, 4)))


class TestBackward:
    def test_constant_loss_zero_grads(self, nprng):
        net = random_net(3, [3, 5, 2], ["tanh", "identity"])
        out, tape = net.forward(nprng.normal(size=(4, 3)))
        grads, gx = net.backward(tape, np.zeros_like(out))
        assert all(np.all(g == 0.0) for g in grads) and np.all(gx == 0.0)

    def test_linear_least_squares_closed_form(self, nprng):
        net = random_net(4, [3, 1], ["identity"])
        x = nprng.normal(size=(6, 3))
        t = nprng.normal(size=(6, 1))
        out, tape = net.forward(x)
        grads, _ = net.backward(tape, out - t)  # L = 0.5 * sum (xw + b - t)^2
        resid = x @ net.weights[0] + net.biases[0] - t
        np.testing.assert_allclose(grads[0], x.T @ resid, atol=1e-13)
        np.testing.assert_allclose(grads[1], resid.sum(axis=0), atol=1e-13)

    def test_without_forward(self):
        net = random_net(0, [2, 2], ["identity"])
        with pytest.raises(StateError):
            net.backward(None, np.zeros((1, 2)))

    @pytest.mark.parametrize("seed", range(6))
    def test_three_layer_finite_differences(self, seed):
        gen = np.random.default_rng(seed)
        acts = [ACTS[i] for i in gen.integers(0, 3, size=3)]
        net = random_net(seed, [4, 6, 5, 3], acts)
        for b in net.biases:
            b[...] = 0.1 * gen.normal(size=b.shape)
        x = gen.normal(size=(5, 4))
        t = gen.normal(size=(5, 3))
        out, tape = net.forward(x)
        grads, _ = net.backward(tape, mse_grad(out, t))
        assert_grads_close(flatten_grads(grads), finite_difference_grads(net, mse(t), x))

    def test_input_gradient(self, nprng):
        net = random_net(9, [3, 4, 2], ["tanh", "tanh"])
        x = nprng.normal(size=(1, 3))
        t = nprng.normal(size=(1, 2))
        out, tape = net.forward(x)
        _, gx = net.backward(tape, mse_grad(out, t))
        h = 1e-6
        num = np.zeros(3)
        for i in range(3):
            e = np.zeros((1, 3))
            e[0, i] = h
            num[i] = (mse(t)(net(x + e)) - mse(t)(net(x - e))) / (2 * h)
        np.testing.assert_allclose(gx[0], num, rtol=1e-6, atol=1e-10)

    def test_batch_grad_is_mean_of_sample_grads(self, nprng):
        net = random_net(5, [3, 6, 2], ["leaky_relu", "tanh"])
        x = nprng.normal(size=(7, 3))
        t = nprng.normal(size=(7, 2))
        out, tape = net.forward(x)
        batch = flatten_grads(net.backward(tape, mse_grad(out, t))[0])
        per = []
        for i in range(7):
            o, tp = net.forward(x[i : i + 1])
            per.append(flatten_grads(net.backward(tp, mse_grad(o, t[i : i + 1]))[0]))
        np.testing.assert_allclose(batch, np.mean(per, axis=0), rtol=0, atol=1e-10)


class TestAdam:
    def test_zero_gradient_no_move(self):
        net = random_net(1, [3, 2], ["identity"])
        before = net.get_flat()
        opt = Adam(net, lr=0.1)
        adam_step(net, [np.zeros_like(p) for p in net.params()], opt)
        assert np.array_equal(net.get_flat(), before)

    def test_first_step_is_lr_times_sign(self, nprng):
        net = random_net(1, [3, 2], ["identity"])
        before = net.get_flat()
        grads = [nprng.normal(size=p.shape) for p in net.params()]
        opt = Adam(net, lr=1e-3, eps=1e-8)
        adam_step(net, grads, opt)
        g = flatten_grads(grads)
        expected = before - 1e-3 * g / (np.abs(g) + 1e-8)
        np.testing.assert_allclose(net.get_flat(), expected, rtol=0, atol=1e-15)

    def test_constant_gradient_monotone(self):
        net = MlpNet([1, 1], ["identity"], [np.array([[1.0]])], [np.array([0.0])])
        opt = Adam(net, lr=0.01)
        vals = []
        for _ in range(50):
            adam_step(net, [np.array([[1.0]]), np.array([0.0])], opt)
            vals.append(net.weights[0][0, 0])
        assert np.all(np.diff(vals) < 0.0)


class TestCheckpoint:
    def test_round_trip(self, tmp_path):
        net = random_net(7, [3, 5, 2], ["leaky_relu", "tanh"])
        path = tmp_path / "net.bin"
        net.save(path)
        back = MlpNet.load(path)
        assert back.layer_dims == net.layer_dims and back.activations == net.activations
        assert np.array_equal(back.get_flat(), net.get_flat())
        assert back.to_bytes() == net.to_bytes()

    def test_layout(self):
        net = MlpNet([1, 1], ["tanh"], [np.array([[2.0]])], [np.array([-1.0])])
        data = net.to_bytes()
        assert data[:4] == b"AFIN"
        assert data[-16:] == np.array([2.0, -1.0], dtype="<f8").tobytes()

    def test_optimizer_state(self, tmp_path, nprng):
        net = random_net(7, [3, 2], ["identity"])
        opt = Adam(net, lr=0.01)
        adam_step(net, [nprng.normal(size=p.shape) for p in net.params()], opt)
        net.save(tmp_path / "n.bin", opt)
        back, opt2 = MlpNet.load(tmp_path / "n.bin", with_optimizer=True)
        assert opt2.t == 1 and opt2.lr == 0.01
        for a, b in zip(opt.m + opt.v, opt2.m + opt2.v):
            assert np.array_equal(a, b)

    def test_bad_magic(self):
        with pytest.raises(InvalidInputError):
            MlpNet.from_bytes(b"NOPE" + bytes(20))
