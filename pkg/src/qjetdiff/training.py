"""Training loop, sampling, FID and prominence post-processing.

Training pairs are (noised channels -> clean channels): a batch of images is
split into four channels, encoded, scrambled with one Haar unitary per channel
(quantum forward) or pushed through the closed-form Gaussian forward process
(classical forward), decoded back to pixels and fed to the denoiser, which is
fit to the clean channels under MSE with Adam.
"""
from __future__ import annotations

import csv
import io
import logging
from dataclasses import dataclass, field

import numpy as np

from . import diffusion, encoding
from .denoiser import init_model, model_backward, model_forward
from .qlinalg import sqrtm_psd

log = logging.getLogger(__name__)

COV_EPS = 1e-6


class TrainingError(ValueError):
    pass


def mse_loss(pred, target):
    pred = np.asarray(pred, dtype=np.float64)
    target = np.asarray(target, dtype=np.float64)
    if pred.shape != target.shape:
        raise TrainingError(f"shape mismatch: {pred.shape} vs {target.shape}")
    return float(np.mean((pred - target) ** 2))


@dataclass
class AdamState:
    m: list
    v: list
    step: int = 0
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8

    @classmethod
    def zeros_like(cls, params):
        return cls([np.zeros_like(p) for p in params], [np.zeros_like(p) for p in params])


def adam_step(params, grads, state, lr, names=None):
    """Bias-corrected Adam update of ``params`` in place.

    Raises :class:`TrainingError` naming the offending block when a gradient
    is non-finite; nothing is updated in that case.
    """
    if len(params) != len(grads) or len(params) != len(state.m):
        raise TrainingError("params, grads and optimiser state have different lengths")
    for i, (p, g) in enumerate(zip(params, grads)):
        if p.shape != np.shape(g):
            raise TrainingError(f"gradient shape {np.shape(g)} != parameter shape {p.shape}")
        if not np.all(np.isfinite(g)):
            name = names[i] if names else f"block {i}"
            raise TrainingError(f"non-finite gradient in parameter {name}")
    state.step += 1
    bc1 = 1.0 - state.beta1 ** state.step
    bc2 = 1.0 - state.beta2 ** state.step
    for p, g, m, v in zip(params, grads, state.m, state.v):
        m *= state.beta1
        m += (1.0 - state.beta1) * g
        v *= state.beta2
        v += (1.0 - state.beta2) * (g * g)
        p -= lr * (m / bc1) / (np.sqrt(v / bc2) + state.eps)
    return params, state


@dataclass
class TrainConfig:
    epochs: int = 50
    batch_size: int = 32
    learning_rate: float = 0.02
    seed: int = 0
    model: str = "quantum"
    layers: int = 2
    forward: str = "quantum"
    scramble: str = "single"
    T: int = 1000
    beta_start: float = 1e-4
    beta_end: float = 0.02
    holdout: float = 0.2
    refine: int = 1
    eval_samples: int | None = None
    data: str | None = None

    def __post_init__(self):
        if self.epochs < 1:
            raise TrainingError("epochs must be >= 1")
        if self.batch_size < 1:
            raise TrainingError("batch_size must be >= 1")
        if not self.learning_rate > 0:
            raise TrainingError("learning_rate must be positive")
        if self.layers < 1:
            raise TrainingError("layers must be >= 1")
        if self.refine < 1:
            raise TrainingError("refine must be >= 1")
        if self.model not in ("classical", "hybrid", "quantum"):
            raise TrainingError(f"unknown model kind {self.model!r}")
        if self.forward not in ("quantum", "classical"):
            raise TrainingError(f"unknown forward process {self.forward!r}")
        if self.scramble not in ("single", "fractional"):
            raise TrainingError(f"unknown scramble mode {self.scramble!r}")
        if not 0.0 < self.holdout < 1.0:
            raise TrainingError("holdout must lie strictly between 0 and 1")


@dataclass(frozen=True)
class MetricsRecord:
    epoch: int
    loss: float
    fid: float


def child_streams(seed, n):
    return [np.random.Generator(np.random.PCG64(s)) for s in np.random.SeedSequence(seed).spawn(n)]


def split_dataset(images, holdout, rng):
    """Shuffle once and split into (train, held_out)."""
    images = np.asarray(images)
    if len(images) < 4:
        raise TrainingError("need at least 4 images to split into train and held-out sets")
    order = rng.permutation(len(images))
    n_hold = min(len(images) - 2, max(2, int(round(holdout * len(images)))))
    return images[order[n_hold:]], images[order[:n_hold]]


def prepare_images(images):
    """float64 copy in [0, 1]; data with pixels above 1 is scaled by its maximum."""
    images = np.asarray(images, dtype=np.float64)
    top = float(images.max(initial=0.0))
    if top > 1.0:
        images = encoding.normalize(images, top)
    return np.clip(images, 0.0, 1.0)


def scramble_pixels(channels, rng, mode="single"):
    """Quantum forward: encode, apply a fresh Haar unitary per channel, decode.

    channels: (B, 4, h, w) in [0, 1]. One unitary per channel is shared by
    every group and sample of the batch.
    """
    h, w = channels.shape[-2:]
    encoded = encoding.encode_channel(channels)  # (B, 4, G, 16)
    scrambler = diffusion.ChannelScrambler.sample(rng)
    if mode == "fractional":
        noisy = scrambler.fractional(encoded, rng.uniform(0.0, 1.0))
    else:
        noisy = scrambler.scramble(encoded)
    return encoding.decode_channel(noisy, (h, w))


def gaussian_noise_pixels(channels, rng, sched):
    """Classical forward to the last step of ``sched``, clipped to [0, 1]."""
    noise = rng.standard_normal(channels.shape)
    return np.clip(diffusion.classical_forward(channels, sched.T, noise, sched), 0.0, 1.0)


def noise_batch(channels, cfg, rng, sched=None):
    if cfg.forward == "classical":
        sched = sched or diffusion.make_schedule(cfg.T, cfg.beta_start, cfg.beta_end)
        return gaussian_noise_pixels(channels, rng, sched)
    return scramble_pixels(channels, rng, cfg.scramble)


def loss_and_grad(model, noisy, clean):
    pred = model_forward(model, noisy)
    upstream = 2.0 * (pred - clean) / pred.size
    return mse_loss(pred, clean), model_backward(model, noisy, upstream)


def train_epoch(model, opt, channels, cfg, rng, sched=None):
    """One pass over ``channels`` (N, 4, h, w); returns the sample-weighted
    mean batch loss. Parameters and ``opt`` are updated in place."""
    if len(channels) == 0:
        raise TrainingError("empty training set")
    order = rng.permutation(len(channels))
    total = 0.0
    names = model.param_names()
    for start in range(0, len(order), cfg.batch_size):
        clean = channels[order[start:start + cfg.batch_size]]
        noisy = noise_batch(clean, cfg, rng, sched)
        loss, grads = loss_and_grad(model, noisy, clean)
        adam_step(model.params(), grads, opt, cfg.learning_rate, names)
        total += loss * len(clean)
    return total / len(channels)


def noise_prior(n, shape, rng, forward="quantum"):
    """Starting pixels for generation, (n, 4, h, w)."""
    h, w = shape[0] // 2, shape[1] // 2
    if forward == "classical":
        return np.clip(rng.standard_normal((n, 4, h, w)), 0.0, 1.0)
    groups = (h * w) // encoding.GROUP
    states = diffusion.noise_prior_channel(rng, n * 4 * groups).reshape(n, 4, groups, -1)
    return encoding.decode_channel(states, (h, w))


def generate(model, n, rng, shape=(16, 16), refine=1, forward="quantum"):
    """Sample ``n`` images: noise prior -> denoiser (``refine`` times) -> image."""
    x = noise_prior(n, shape, rng, forward)
    for _ in range(refine):
        x = model_forward(model, x)
    return encoding.depth_to_space(x)


def _stats(images):
    feats = np.asarray(images, dtype=np.float64).reshape(len(images), -1)
    if len(feats) < 2:
        raise TrainingError("FID needs at least 2 samples per set")
    mu = feats.mean(axis=0)
    cov = np.atleast_2d(np.cov(feats, rowvar=False, ddof=1)) + COV_EPS * np.eye(feats.shape[1])
    return mu, cov


class FidReference:
    """Cached statistics of a reference set, for repeated FID evaluations."""

    def __init__(self, images):
        self.mu, self.cov = _stats(images)
        self.cov_sqrt = sqrtm_psd(self.cov)

    def __call__(self, images):
        mu, cov = _stats(images)
        if mu.shape != self.mu.shape:
            raise TrainingError(f"feature sizes differ: {self.mu.shape} vs {mu.shape}")
        inner = self.cov_sqrt @ cov @ self.cov_sqrt
        cross = np.trace(sqrtm_psd(0.5 * (inner + inner.T))).real
        value = float(np.sum((self.mu - mu) ** 2) + np.trace(self.cov) + np.trace(cov) - 2.0 * cross)
        if value < -1e-6:
            raise TrainingError(f"FID evaluated to {value:.3e}; covariance square root is inaccurate")
        return max(value, 0.0)


def fid(real_set, gen_set):
    """Frechet distance between the flattened-pixel statistics of two sets."""
    return FidReference(real_set)(gen_set)


def prominence_filter(img, k):
    """Keep the ``k`` largest pixels (lower raster index wins ties), zero the rest."""
    if k < 0:
        raise ValueError("k must be >= 0")
    img = np.asarray(img)
    flat = img.reshape(-1)
    keep = np.argsort(-flat, kind="stable")[:k]
    out = np.zeros_like(flat)
    out[keep] = flat[keep]
    return out.reshape(img.shape)


@dataclass
class TrainResult:
    model: object
    metrics: list
    initial_fid: float
    held_out: np.ndarray = field(repr=False)


def train(cfg, images, on_epoch=None):
    """Full run: split, initialise, train ``cfg.epochs`` epochs and score each
    epoch by FID of generated samples against the held-out split."""
    images = prepare_images(images)
    if images.ndim != 3:
        raise TrainingError(f"expected (count, h, w) images, got shape {images.shape}")
    seqs = np.random.SeedSequence(cfg.seed).spawn(4)
    split_rng, init_rng, train_rng = (np.random.Generator(np.random.PCG64(s)) for s in seqs[:3])
    train_imgs, held_out = split_dataset(images, cfg.holdout, split_rng)
    channels = encoding.space_to_depth(train_imgs)
    model = init_model(cfg.model, init_rng, cfg.layers)
    opt = AdamState.zeros_like(model.params())
    sched = diffusion.make_schedule(cfg.T, cfg.beta_start, cfg.beta_end) if cfg.forward == "classical" else None
    n_eval = cfg.eval_samples or len(held_out)
    reference = FidReference(held_out)

    def score():
        # same noise every epoch so the FID curve tracks the model only
        eval_rng = np.random.Generator(np.random.PCG64(seqs[3]))
        samples = generate(model, n_eval, eval_rng, images.shape[1:], cfg.refine, cfg.forward)
        return reference(samples)

    initial = score()
    log.info("%s model, %d parameters, initial FID %.6f", cfg.model, sum(p.size for p in model.params()), initial)
    metrics = []
    for epoch in range(1, cfg.epochs + 1):
        loss = train_epoch(model, opt, channels, cfg, train_rng, sched)
        rec = MetricsRecord(epoch, loss, score())
        metrics.append(rec)
        log.info("epoch %d loss %.6f fid %.6f", rec.epoch, rec.loss, rec.fid)
        if on_epoch is not None:
            on_epoch(rec)
    return TrainResult(model, metrics, initial, held_out)


def metrics_csv(records):
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["epoch", "loss", "fid"])
    for r in records:
        writer.writerow([r.epoch, repr(float(r.loss)), repr(float(r.fid))])
    return buf.getvalue()


def write_metrics_csv(path, records):
    with open(path, "w", newline="", encoding="ascii") as fh:
        fh.write(metrics_csv(records))


def read_metrics_csv(path):
    with open(path, newline="", encoding="ascii") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames != ["epoch", "loss", "fid"]:
            raise TrainingError(f"{path}: expected header epoch,loss,fid")
        try:
            return [MetricsRecord(int(row["epoch"]), float(row["loss"]), float(row["fid"])) for row in reader]
        except (TypeError, ValueError) as exc:
            raise TrainingError(f"{path}: malformed metrics row ({exc})") from exc
