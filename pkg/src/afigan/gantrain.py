"""Hinge-loss GAN on toy data with feature interpolation in the critic.

The discriminator has an n-dimensional output; the hinge is applied per
output coordinate and averaged. Interpolation happens inside the
differentiable graph: an interpolated feature sends its gradient back to
every neighbour in proportion to its Dirichlet weight.
"""
import io
import json
import math
import os
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy.optimize import nnls

from . import afi, linalg
from .afi import AfiConfig
from .autonet import Adam, MlpNet, flatten_grads
from .errors import InvalidInputError, InvalidParameterError, TrainingDivergence
from .randsrc import Rng

AFI_TARGETS = ("real", "fake", "both", "off")

# independent PCG streams derived from one seed
STREAM_MAIN = 54
STREAM_AFI = 55
STREAM_INIT = 56
STREAM_EVAL = 57


@dataclass
class TrainConfig:
    b: int = 16
    latent_dim: int = 8
    n: int = 8
    m: int = 2
    hidden: int = 64
    iterations: int = 5000
    lr: float = 2e-4
    beta1: float = 0.5
    beta2: float = 0.999
    afi: AfiConfig = field(default_factory=AfiConfig)
    afi_on: str = "both"
    trace_every: int = 100
    seed: int = 0
    mmd_samples: int = 0

    def __post_init__(self):
        if isinstance(self.afi, dict):
            self.afi = AfiConfig.from_dict(self.afi)
        if self.b < 2 or self.n < 1 or self.iterations < 1 or self.m < 1:
            raise InvalidParameterError("need b >= 2, n >= 1, m >= 1, iterations >= 1")
        if self.afi_on not in AFI_TARGETS:
            raise InvalidParameterError(f"afi_on must be one of {AFI_TARGETS}")
        if self.trace_every < 1:
            raise InvalidParameterError("trace_every must be >= 1")

    def to_dict(self):
        d = asdict(self)
        d["afi"] = self.afi.to_dict()
        return d


@dataclass
class TraceRecord:
    iteration: int
    eigenvalues: np.ndarray
    k: int
    p: float
    d_loss: float
    g_loss: float
    mmd: float = None

    def csv_row(self):
        cells = [str(self.iteration)]
        cells += [repr(float(v)) for v in self.eigenvalues]
        cells += [str(self.k), repr(float(self.p)), repr(float(self.d_loss)), repr(float(self.g_loss))]
        cells.append("" if self.mmd is None else repr(float(self.mmd)))
        return ",".join(cells)


def trace_header(b):
    return ",".join(["iteration"] + [f"lambda_{i + 1}" for i in range(b)] + ["k", "p", "d_loss", "g_loss", "mmd"])


def _check_pair(real, fake):
    real = linalg.as_batch(real, "real features")
    fake = linalg.as_batch(fake, "fake features")
    if real.shape[1] != fake.shape[1]:
        raise InvalidInputError(f"feature dims differ: {real.shape[1]} vs {fake.shape[1]}")
    return real, fake


def hinge_d_loss(real_feats, fake_feats):
    """Mean of max(0, 1 - y) over real plus mean of max(0, 1 + y) over fake."""
    real, fake = _check_pair(real_feats, fake_feats)
    return float(np.mean(np.maximum(0.0, 1.0 - real)) + np.mean(np.maximum(0.0, 1.0 + fake)))


def hinge_d_grads(real_feats, fake_feats):
    real, fake = _check_pair(real_feats, fake_feats)
    g_real = np.where(1.0 - real > 0.0, -1.0, 0.0) / real.size
    g_fake = np.where(1.0 + fake > 0.0, 1.0, 0.0) / fake.size
    return g_real, g_fake


def hinge_g_loss(fake_feats):
    fake = linalg.as_batch(fake_feats, "fake features")
    return float(-np.mean(fake))


def hinge_g_grad(fake_feats):
    fake = np.asarray(fake_feats, dtype=np.float64)
    return np.full(fake.shape, -1.0 / fake.size)


@dataclass
class GanState:
    gen: MlpNet
    disc: MlpNet
    opt_g: Adam
    opt_d: Adam
    rng: Rng
    afi_rng: Rng
    data: np.ndarray
    iteration: int = 0


@dataclass
class StepResult:
    d_loss: float
    g_loss: float
    k: int
    p: float
    spectrum: linalg.MdsSpectrum
    real_decision: afi.AfiDecision = None
    fake_decision: afi.AfiDecision = None


def build_networks(cfg, rng):
    h = cfg.hidden
    gen = MlpNet([cfg.latent_dim, h, h, cfg.m], ["leaky_relu", "leaky_relu", "tanh"], rng=rng)
    disc = MlpNet([cfg.m, h, h, cfg.n], ["leaky_relu", "leaky_relu", "identity"], rng=rng)
    return gen, disc


def init_state(cfg, data):
    data = linalg.as_batch(data, "training data")
    if data.shape[1] != cfg.m:
        raise InvalidInputError(f"data dim {data.shape[1]} != m={cfg.m}")
    gen, disc = build_networks(cfg, Rng(cfg.seed, STREAM_INIT))
    return GanState(
        gen=gen,
        disc=disc,
        opt_g=Adam(gen, cfg.lr, cfg.beta1, cfg.beta2),
        opt_d=Adam(disc, cfg.lr, cfg.beta1, cfg.beta2),
        rng=Rng(cfg.seed, STREAM_MAIN),
        afi_rng=Rng(cfg.seed, STREAM_AFI),
        data=data,
    )


def _add_grads(a, b):
    return [x + y for x, y in zip(a, b)]


@np.errstate(over="ignore", invalid="ignore")
def train_step(state, cfg):
    """One critic update then one generator update; mutates ``state``.

    k and p are resolved from the real-feature batch and reused for the
    fake batch of the same step. Neighbourhoods never mix real and fake.
    """
    it = state.iteration + 1
    b = cfg.b
    x_real = state.data[state.rng.sample_indices(len(state.data), b)]
    x_fake = state.gen(state.rng.normal((b, cfg.latent_dim)))

    f_real, tape_r = state.disc.forward(x_real)
    f_fake, tape_f = state.disc.forward(x_fake)
    if not (np.all(np.isfinite(f_real)) and np.all(np.isfinite(f_fake))):
        state.iteration = it
        raise TrainingDivergence(it, "non-finite critic features")

    dist_r, spectrum, k, p = afi.resolve_parameters(f_real, cfg.afi)
    dec_r = dec_f = None
    y_real, y_fake = f_real, f_fake
    if cfg.afi_on in ("real", "both"):
        y_real, dec_r = afi.augment_with(f_real, dist_r, k, p, cfg.afi, state.afi_rng, spectrum)
    if cfg.afi_on in ("fake", "both"):
        dist_f = linalg.normalize_distance_matrix(linalg.pairwise_distance_matrix(f_fake))
        y_fake, dec_f = afi.augment_with(f_fake, dist_f, k, p, cfg.afi, state.afi_rng)

    d_loss = hinge_d_loss(y_real, y_fake)
    g_real, g_fake = hinge_d_grads(y_real, y_fake)
    if dec_r is not None:
        g_real = dec_r.backprop(g_real)
    if dec_f is not None:
        g_fake = dec_f.backprop(g_fake)
    grads_r, _ = state.disc.backward(tape_r, g_real)
    grads_f, _ = state.disc.backward(tape_f, g_fake)
    state.opt_d.step(state.disc, _add_grads(grads_r, grads_f))

    z = state.rng.normal((b, cfg.latent_dim))
    x_gen, tape_g = state.gen.forward(z)
    f_gen, tape_d = state.disc.forward(x_gen)
    if not np.all(np.isfinite(f_gen)):
        state.iteration = it
        raise TrainingDivergence(it, "non-finite critic features")
    g_loss = hinge_g_loss(f_gen)
    _, dx = state.disc.backward(tape_d, hinge_g_grad(f_gen))
    grads_g, _ = state.gen.backward(tape_g, dx)
    state.opt_g.step(state.gen, grads_g)

    state.iteration = it
    if not (math.isfinite(d_loss) and math.isfinite(g_loss)):
        raise TrainingDivergence(it, "non-finite loss")
    if not (state.disc.all_finite() and state.gen.all_finite()):
        raise TrainingDivergence(it, "non-finite parameters")
    return StepResult(d_loss, g_loss, k, p, spectrum, dec_r, dec_f)


@dataclass
class TrainResult:
    state: GanState
    records: list
    k_history: list
    p_history: list
    d_losses: list
    g_losses: list


def train(cfg, data, state=None, iterations=None, on_step=None):
    """Run ``iterations`` steps (default ``cfg.iterations``) and trace them.

    ``on_step(state, step_result)`` is called after every step. On
    divergence the raised ``TrainingDivergence`` carries the last record.
    """
    state = init_state(cfg, data) if state is None else state
    total = cfg.iterations if iterations is None else iterations
    records, ks, ps, dls, gls = [], [], [], [], []
    for _ in range(total):
        try:
            res = train_step(state, cfg)
        except TrainingDivergence as exc:
            exc.last_record = records[-1] if records else None
            raise
        ks.append(res.k)
        ps.append(res.p)
        dls.append(res.d_loss)
        gls.append(res.g_loss)
        if state.iteration % cfg.trace_every == 0:
            mmd = None
            if cfg.mmd_samples > 0:
                mmd = generator_mmd(state.gen, state.data, cfg)
            records.append(
                TraceRecord(state.iteration, res.spectrum.eigenvalues, res.k, res.p,
                            res.d_loss, res.g_loss, mmd)
            )
        if on_step is not None:
            on_step(state, res)
    return TrainResult(state, records, ks, ps, dls, gls)


def flattening_trace(disc, data, sample_size, seed=0):
    """MDS spectrum of ``sample_size`` real points under the critic's metric."""
    data = linalg.as_batch(data, "data")
    if len(data) < sample_size:
        raise InvalidParameterError(f"need at least {sample_size} points, have {len(data)}")
    idx = Rng(seed, STREAM_EVAL).sample_indices(len(data), sample_size)
    return linalg.batch_spectrum(disc(data[idx]))


def generator_mmd(gen, data, cfg):
    rng = Rng(cfg.seed, STREAM_EVAL)
    samples = gen(rng.normal((cfg.mmd_samples, cfg.latent_dim)))
    return mmd_rbf(samples, data)


def median_bandwidth(x, y):
    pooled = np.vstack([x, y])
    d = linalg.pairwise_distance_matrix(pooled)
    med = float(np.median(d[np.triu_indices(len(pooled), 1)]))
    return med if med > 0.0 else 1.0


def mmd_rbf(x, y, bandwidth=None, unbiased=True):
    """Squared MMD with kernel ``exp(-|a-b|^2 / (2 s^2))``.

    ``s`` defaults to the median pairwise distance of the pooled samples.
    The unbiased form drops the diagonal of the within-set kernel sums.
    """
    x = linalg.as_batch(x, "x")
    y = linalg.as_batch(y, "y")
    if x.shape[1] != y.shape[1]:
        raise InvalidInputError("sample sets differ in dimension")
    s = median_bandwidth(x, y) if bandwidth is None else float(bandwidth)

    def gram(a, c):
        sq = np.sum(a * a, 1)[:, None] + np.sum(c * c, 1)[None, :] - 2.0 * a @ c.T
        return np.exp(-np.maximum(sq, 0.0) / (2.0 * s * s))

    kxx, kyy, kxy = gram(x, x), gram(y, y), gram(x, y)
    nx, ny = len(x), len(y)
    if unbiased:
        if nx < 2 or ny < 2:
            raise InvalidParameterError("unbiased MMD needs at least 2 samples per set")
        xx = (kxx.sum() - np.trace(kxx)) / (nx * (nx - 1))
        yy = (kyy.sum() - np.trace(kyy)) / (ny * (ny - 1))
    else:
        xx = kxx.mean()
        yy = kyy.mean()
    return float(xx + yy - 2.0 * kxy.mean())


class QuadraticLoss:
    """``L(y) = 0.5 * |y - target|^2``."""

    def __init__(self, target):
        self.target = np.asarray(target, dtype=np.float64)

    def __call__(self, y):
        r = np.asarray(y) - self.target
        return 0.5 * float(r @ r), r


def param_grad(net, loss_fn, x):
    """Flattened gradient of ``loss_fn(net(x))`` for a single input."""
    out, tape = net.forward(np.asarray(x, dtype=np.float64)[None, :])
    _, gy = loss_fn(out[0])
    grads, _ = net.backward(tape, gy[None, :])
    return flatten_grads(grads)


def simplex_weights(points, target):
    """Weights on the simplex minimising ``|sum_i w_i points_i - target|``.

    Falls back to uniform weights when the fit is no better than uniform
    (target effectively outside the hull).
    """
    pts = np.asarray(points, dtype=np.float64)
    k = len(pts)
    uniform = np.full(k, 1.0 / k)
    scale = max(1.0, float(np.max(np.abs(pts))))
    # the sum-to-one constraint as a heavily weighted extra row
    big = 1e4 * scale
    a = np.vstack([pts.T, np.full((1, k), big)])
    rhs = np.concatenate([target, [big]])
    try:
        w, _ = nnls(a, rhs, maxiter=50 * k)
    except RuntimeError:
        return uniform
    if not np.all(np.isfinite(w)) or w.sum() <= 0.0:
        return uniform
    w = w / w.sum()
    fit = np.linalg.norm(w @ pts - target)
    if fit > np.linalg.norm(uniform @ pts - target):
        return uniform
    return w


def _directions(rng, k, dim, antithetic):
    if antithetic:
        if k % 2:
            raise InvalidParameterError("antithetic directions need an even k")
        half = rng.normal((k // 2, dim))
        half /= np.linalg.norm(half, axis=1, keepdims=True)
        return np.repeat(half, 2, axis=0) * np.tile([1.0, -1.0], k // 2)[:, None]
    u = rng.normal((k, dim))
    return u / np.linalg.norm(u, axis=1, keepdims=True)


def lemma1_error(net, loss_fn, x, radius, k, rng, antithetic=True, weights=None):
    """Gap between the true gradient at ``x`` and the weighted average of
    gradients at ``k`` nearby inputs.

    Inputs are ``x + radius * u_i`` with random unit ``u_i`` (in +/- pairs
    when ``antithetic``), weights are fitted so the features of the nearby
    inputs average to ``net(x)``. Returns ``(error, max_dev)`` where
    ``max_dev = max_i |net(x) - net(x_i)|``.
    """
    if radius < 0.0:
        raise InvalidParameterError("radius must be >= 0")
    if k < 2:
        raise InvalidParameterError("need k >= 2 nearby points")
    x = np.asarray(x, dtype=np.float64)
    xs = x[None, :] + radius * _directions(rng, k, x.size, antithetic)
    y = net(x[None, :])[0]
    ys = net(xs)
    pi = simplex_weights(ys, y) if weights is None else np.asarray(weights, dtype=np.float64)
    g = param_grad(net, loss_fn, x)
    gap = np.zeros_like(g)
    for w, xi in zip(pi, xs):
        gap += w * (g - param_grad(net, loss_fn, xi))
    max_dev = float(np.max(np.linalg.norm(ys - y[None, :], axis=1)))
    return float(np.linalg.norm(gap)), max_dev


def loglog_slope(xs, ys):
    xs, ys = np.asarray(xs, dtype=np.float64), np.asarray(ys, dtype=np.float64)
    ok = (xs > 0.0) & (ys > 0.0)
    if ok.sum() < 2:
        return float("nan")
    return float(np.polyfit(np.log(xs[ok]), np.log(ys[ok]), 1)[0])


def lemma_net(m=16, hidden=32, n=8, seed=0):
    """Two-layer tanh network used by the gradient-averaging check."""
    return MlpNet([m, hidden, n], ["tanh", "tanh"], rng=Rng(seed, STREAM_INIT))


def lemma_sweep(radii, m=16, hidden=32, n=8, k=8, seed=0, antithetic=True):
    """Rows ``(radius, max_dev, error)`` plus the fitted log-log slope."""
    net = lemma_net(m, hidden, n, seed)
    setup = Rng(seed, STREAM_EVAL)
    x = setup.normal(m)
    loss = QuadraticLoss(setup.normal(n))
    rows = []
    for r in radii:
        err, dev = lemma1_error(net, loss, x, float(r), k, Rng(seed, STREAM_MAIN), antithetic)
        rows.append((float(r), dev, err))
    slope = loglog_slope([row[1] for row in rows], [row[2] for row in rows])
    return rows, slope


def save_training_checkpoint(state, cfg, directory):
    """Generator/critic (with Adam moments) plus a JSON sidecar for the rest."""
    os.makedirs(directory, exist_ok=True)
    state.gen.save(os.path.join(directory, "generator.bin"), state.opt_g)
    state.disc.save(os.path.join(directory, "discriminator.bin"), state.opt_d)
    meta = {
        "iteration": state.iteration,
        "rng": state.rng.getstate(),
        "afi_rng": state.afi_rng.getstate(),
        "config": cfg.to_dict(),
    }
    with open(os.path.join(directory, "state.json"), "w") as fh:
        json.dump(meta, fh, indent=2, sort_keys=True)
    buf = io.StringIO()
    np.savetxt(buf, state.data, delimiter=",", fmt="%.17g")
    with open(os.path.join(directory, "data.csv"), "w") as fh:
        fh.write(buf.getvalue())


def load_training_checkpoint(directory):
    gen, opt_g = MlpNet.load(os.path.join(directory, "generator.bin"), with_optimizer=True)
    disc, opt_d = MlpNet.load(os.path.join(directory, "discriminator.bin"), with_optimizer=True)
    with open(os.path.join(directory, "state.json")) as fh:
        meta = json.load(fh)
    data = np.loadtxt(os.path.join(directory, "data.csv"), delimiter=",", ndmin=2)
    rng = Rng.__new__(Rng)
    rng.setstate(meta["rng"])
    afi_rng = Rng.__new__(Rng)
    afi_rng.setstate(meta["afi_rng"])
    cfg = TrainConfig(**meta["config"])
    state = GanState(gen, disc, opt_g, opt_d, rng, afi_rng, data, meta["iteration"])
    return state, cfg
