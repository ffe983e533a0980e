"""Small dense networks with hand-written reverse mode and Adam.

Everything is float64. ``MlpNet.forward`` returns the output together with
a ``GradTape`` holding the activations that ``MlpNet.backward`` needs, so a
network can be run on several batches before any gradient is taken.
"""
import struct

import numpy as np

from .errors import InvalidInputError, StateError

LEAKY_SLOPE = 0.2
ACTIVATION_TAGS = {"identity": 0, "leaky_relu": 1, "tanh": 2}
_TAG_NAMES = {v: k for k, v in ACTIVATION_TAGS.items()}

MAGIC = b"AFIN"
FORMAT_VERSION = 1


def _activate(name, z):
    if name == "leaky_relu":
        return np.where(z > 0.0, z, LEAKY_SLOPE * z)
    if name == "tanh":
        return np.tanh(z)
    return z


def _activation_grad(name, z, a, g):
    if name == "leaky_relu":
        return np.where(z > 0.0, g, LEAKY_SLOPE * g)
    if name == "tanh":
        return g * (1.0 - a * a)
    return g


class GradTape:
    """Per-layer inputs and pre-activations cached by one forward pass."""

    def __init__(self):
        self.inputs = []
        self.pre = []
        self.post = []

    @property
    def output(self):
        return self.post[-1]


class MlpNet:
    """Feed-forward stack of affine layers, one activation per layer.

    ``weights[l]`` has shape ``(dims[l], dims[l+1])`` so a batch ``x`` of
    shape ``(b, dims[0])`` maps as ``x @ W + b``.
    """

    def __init__(self, layer_dims, activations, weights=None, biases=None, rng=None):
        self.layer_dims = [int(d) for d in layer_dims]
        if len(self.layer_dims) < 2 or min(self.layer_dims) < 1:
            raise InvalidInputError(f"bad layer dims {layer_dims}")
        if len(activations) != len(self.layer_dims) - 1:
            raise InvalidInputError("need one activation per layer")
        for a in activations:
            if a not in ACTIVATION_TAGS:
                raise InvalidInputError(f"unknown activation {a!r}")
        self.activations = list(activations)
        if weights is None:
            weights, biases = self._glorot(rng)
        self.weights = [np.array(w, dtype=np.float64) for w in weights]
        self.biases = [np.array(b, dtype=np.float64) for b in biases]
        for l, (w, b) in enumerate(zip(self.weights, self.biases)):
            shape = (self.layer_dims[l], self.layer_dims[l + 1])
            if w.shape != shape or b.shape != shape[1:]:
                raise InvalidInputError(f"layer {l} parameters do not match dims {shape}")

    def _glorot(self, rng):
        if rng is None:
            raise InvalidInputError("need an Rng (or explicit parameters) to initialise")
        ws, bs = [], []
        for fan_in, fan_out in zip(self.layer_dims[:-1], self.layer_dims[1:]):
            lim = np.sqrt(6.0 / (fan_in + fan_out))
            ws.append((2.0 * rng.uniform((fan_in, fan_out)) - 1.0) * lim)
            bs.append(np.zeros(fan_out))
        return ws, bs

    @classmethod
    def zeros(cls, layer_dims, activations):
        dims = list(layer_dims)
        return cls(
            dims,
            activations,
            [np.zeros((i, o)) for i, o in zip(dims[:-1], dims[1:])],
            [np.zeros(o) for o in dims[1:]],
        )

    @property
    def n_in(self):
        return self.layer_dims[0]

    @property
    def n_out(self):
        return self.layer_dims[-1]

    def params(self):
        """Parameter arrays in serialisation order: W0, b0, W1, b1, ..."""
        out = []
        for w, b in zip(self.weights, self.biases):
            out.extend((w, b))
        return out

    def n_params(self):
        return sum(p.size for p in self.params())

    def get_flat(self):
        return np.concatenate([p.ravel() for p in self.params()])

    def set_flat(self, vec):
        vec = np.asarray(vec, dtype=np.float64)
        pos = 0
        for p in self.params():
            p[...] = vec[pos : pos + p.size].reshape(p.shape)
            pos += p.size

    def copy(self):
        return MlpNet(
            self.layer_dims,
            self.activations,
            [w.copy() for w in self.weights],
            [b.copy() for b in self.biases],
        )

    def all_finite(self):
        return all(np.all(np.isfinite(p)) for p in self.params())

    def forward(self, x):
        x = np.asarray(x, dtype=np.float64)
        if x.ndim != 2 or x.shape[1] != self.n_in:
            raise InvalidInputError(f"expected input of shape (b, {self.n_in}), got {x.shape}")
        if not np.all(np.isfinite(x)):
            raise InvalidInputError("non-finite network input")
        tape = GradTape()
        h = x
        for w, b, act in zip(self.weights, self.biases, self.activations):
            tape.inputs.append(h)
            z = h @ w + b
            h = _activate(act, z)
            tape.pre.append(z)
            tape.post.append(h)
        return h, tape

    def __call__(self, x):
        return self.forward(x)[0]

    def backward(self, tape, output_grad):
        """Gradients of a scalar loss given ``dloss/doutput``.

        Returns ``(grads, input_grad)`` where ``grads`` follows ``params()``.
        """
        if tape is None or not tape.post:
            raise StateError("backward called without a forward pass")
        g = np.asarray(output_grad, dtype=np.float64)
        if g.shape != tape.output.shape:
            raise InvalidInputError(
                f"output grad shape {g.shape} != output shape {tape.output.shape}"
            )
        grads = [None] * (2 * len(self.weights))
        for l in reversed(range(len(self.weights))):
            g = _activation_grad(self.activations[l], tape.pre[l], tape.post[l], g)
            grads[2 * l] = tape.inputs[l].T @ g
            grads[2 * l + 1] = g.sum(axis=0)
            g = g @ self.weights[l].T
        return grads, g

    def to_bytes(self, optimizer=None):
        n = len(self.weights)
        head = MAGIC + struct.pack("<III", FORMAT_VERSION, n, 1 if optimizer else 0)
        head += struct.pack(f"<{n + 1}I", *self.layer_dims)
        head += bytes(ACTIVATION_TAGS[a] for a in self.activations)
        body = b"".join(p.astype("<f8").tobytes() for p in self.params())
        if optimizer is not None:
            body += optimizer.to_bytes()
        return head + body

    @classmethod
    def from_bytes(cls, data, with_optimizer=False):
        if data[:4] != MAGIC:
            raise InvalidInputError("not a network checkpoint (bad magic)")
        version, n, has_opt = struct.unpack_from("<III", data, 4)
        if version != FORMAT_VERSION:
            raise InvalidInputError(f"unsupported checkpoint version {version}")
        pos = 16
        dims = list(struct.unpack_from(f"<{n + 1}I", data, pos))
        pos += 4 * (n + 1)
        acts = [_TAG_NAMES[t] for t in data[pos : pos + n]]
        pos += n
        net = cls.zeros(dims, acts)
        for p in net.params():
            p[...] = np.frombuffer(data, dtype="<f8", count=p.size, offset=pos).reshape(p.shape)
            pos += 8 * p.size
        opt = None
        if has_opt:
            opt, pos = Adam.from_bytes(data, pos, net)
        if pos != len(data):
            raise InvalidInputError("trailing bytes in checkpoint")
        return (net, opt) if with_optimizer else net

    def save(self, path, optimizer=None):
        with open(path, "wb") as fh:
            fh.write(self.to_bytes(optimizer))

    @classmethod
    def load(cls, path, with_optimizer=False):
        with open(path, "rb") as fh:
            return cls.from_bytes(fh.read(), with_optimizer)


class Adam:
    """Adam with bias correction; moment buffers start at zero."""

    def __init__(self, net, lr=2e-4, beta1=0.5, beta2=0.999, eps=1e-8):
        self.lr, self.beta1, self.beta2, self.eps = lr, beta1, beta2, eps
        self.t = 0
        self.m = [np.zeros_like(p) for p in net.params()]
        self.v = [np.zeros_like(p) for p in net.params()]

    def step(self, net, grads):
        self.t += 1
        c1 = 1.0 - self.beta1**self.t
        c2 = 1.0 - self.beta2**self.t
        for p, g, m, v in zip(net.params(), grads, self.m, self.v):
            m *= self.beta1
            m += (1.0 - self.beta1) * g
            v *= self.beta2
            v += (1.0 - self.beta2) * g * g
            p -= self.lr * (m / c1) / (np.sqrt(v / c2) + self.eps)
        return net

    def to_bytes(self):
        head = struct.pack("<Q4d", self.t, self.lr, self.beta1, self.beta2, self.eps)
        return head + b"".join(a.astype("<f8").tobytes() for a in self.m + self.v)

    @classmethod
    def from_bytes(cls, data, pos, net):
        t, lr, b1, b2, eps = struct.unpack_from("<Q4d", data, pos)
        pos += struct.calcsize("<Q4d")
        opt = cls(net, lr, b1, b2, eps)
        opt.t = t
        for a in opt.m + opt.v:
            a[...] = np.frombuffer(data, dtype="<f8", count=a.size, offset=pos).reshape(a.shape)
            pos += 8 * a.size
        return opt, pos


def adam_step(net, grads, opt):
    """Apply one Adam update in place and return the net."""
    return opt.step(net, grads)


def finite_difference_grads(net, loss_of_output, x, step=1e-5):
    """Central differences of ``loss_of_output(net(x))`` for every parameter."""
    base = net.get_flat()
    out = np.empty_like(base)
    probe = net.copy()
    for i in range(base.size):
        v = base.copy()
        v[i] += step
        probe.set_flat(v)
        up = loss_of_output(probe(x))
        v[i] -= 2.0 * step
        probe.set_flat(v)
        down = loss_of_output(probe(x))
        out[i] = (up - down) / (2.0 * step)
    return out


def flatten_grads(grads):
    return np.concatenate([g.ravel() for g in grads])
