"""Feedforward sequence VAE with a property-prediction head.

The encoder flattens an embedded, padded token sequence and maps it to a
diagonal Gaussian posterior; the decoder maps a latent vector to independent
per-position token logits; a two-layer head predicts the property vector
from the latent. Training minimizes

    reconstruction NLL + beta * KL(posterior || N(0, I)) + alpha * property MSE,

each term averaged over the batch. Gradients are computed analytically in
numpy (no autograd framework) so they can be verified against finite
differences.
"""

from __future__ import annotations

import math
import struct
from dataclasses import dataclass, field

import numpy as np

HIDDEN = 64  # encoder/decoder hidden width; fixed by the checkpoint format
PROP_HIDDEN = 64  # property-head hidden width, two layers

CHECKPOINT_MAGIC = b"DELV1"

# Serialization order of the parameter matrices in a checkpoint.
PARAM_ORDER = (
    "emb",
    "enc_w1", "enc_b1", "enc_wmu", "enc_bmu", "enc_wlv", "enc_blv",
    "dec_w1", "dec_b1", "dec_w2", "dec_b2",
    "prop_w1", "prop_b1", "prop_w2", "prop_b2", "prop_w3", "prop_b3",
)


@dataclass(frozen=True)
class BetaSchedule:
    """Clamped-exponential epoch schedule for a loss weight.

    value(t) = min(max(a * exp(k * (1 - T/t)), l_lo), u_hi) for epoch
    t in [1, T]: an exponential ramp of amplitude a and speed k, clipped
    to [l_lo, u_hi]. Monotone non-decreasing in t for positive a and k.
    """

    a: float
    k: float
    l_lo: float
    u_hi: float
    T: int

    def __post_init__(self):
        if self.a <= 0 or self.k <= 0:
            raise ValueError("amplitude a and speed k must be positive")
        if not 0 <= self.l_lo <= self.u_hi:
            raise ValueError("bounds must satisfy 0 <= l_lo <= u_hi")
        if self.T < 1:
            raise ValueError("T must be >= 1")

    @classmethod
    def constant(cls, value: float, epochs: int) -> "BetaSchedule":
        """A schedule pinned to `value` at every epoch."""
        if value < 0:
            raise ValueError("constant schedule value must be >= 0")
        return cls(a=1.0, k=1.0, l_lo=value, u_hi=value, T=epochs)

    @classmethod
    def ramp(cls, target: float, epochs: int, speed: float = 5.0,
             floor: float = 0.0) -> "BetaSchedule":
        """A ramp reaching `target` at the final epoch."""
        if target <= 0:
            return cls.constant(max(target, 0.0), epochs)
        return cls(a=target, k=speed, l_lo=min(floor, target), u_hi=target, T=epochs)


def beta_at(sched: BetaSchedule, t: int) -> float:
    """Evaluate the schedule at epoch t (1-based, inclusive of T)."""
    if not isinstance(t, (int, np.integer)):
        raise ValueError(f"epoch index must be an integer, got {t!r}")
    if not 1 <= t <= sched.T:
        raise ValueError(f"epoch {t} outside [1, {sched.T}]")
    raw = sched.a * math.exp(sched.k * (1.0 - sched.T / t))
    return min(max(raw, sched.l_lo), sched.u_hi)


def _weight_at(weight, t: int) -> float:
    """A loss weight given either as a constant or as a BetaSchedule."""
    if isinstance(weight, BetaSchedule):
        return beta_at(weight, t)
    return float(weight)


@dataclass(frozen=True)
class LossBreakdown:
    """Per-batch mean loss terms; total = recon + beta*kl + alpha*prop_mse."""

    recon: float
    kl: float
    prop_mse: float
    total: float


@dataclass(frozen=True)
class OptimizerConfig:
    """SGD-with-momentum settings, with step-decay learning rate."""

    learning_rate: float = 5e-4
    momentum: float = 0.9
    clip_norm: float = 5.0
    lr_decay: float = 0.8
    lr_step: int = 4
    batch_size: int = 128


@dataclass
class TrainingState:
    steps: int = 0
    epochs: int = 0
    learning_rate: float = 0.0


def pad_sequences(seqs, max_len: int) -> tuple[np.ndarray, np.ndarray]:
    """Pack variable-length sequences into (ids, mask) arrays of width max_len.

    Each row is body tokens, then EOS if room remains, then PAD. The mask is
    1 over body and EOS positions and 0 over PAD, so padding never
    contributes to the reconstruction loss.
    """
    from .domain import EOS, PAD

    ids = np.full((len(seqs), max_len), PAD, dtype=np.int64)
    mask = np.zeros((len(seqs), max_len), dtype=float)
    for r, seq in enumerate(seqs):
        body = list(seq)[:max_len]
        ids[r, : len(body)] = body
        mask[r, : len(body)] = 1.0
        if len(body) < max_len:
            ids[r, len(body)] = EOS
            mask[r, len(body)] = 1.0
    return ids, mask


def _softmax(x: np.ndarray) -> np.ndarray:
    shifted = x - x.max(axis=-1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=-1, keepdims=True)


class SequenceVae:
    """Token-sequence VAE over a fixed vocabulary with K property outputs."""

    def __init__(self, vocab_size: int, embed_size: int, latent_size: int,
                 max_len: int, n_properties: int, rng):
        self.vocab_size = vocab_size
        self.embed_size = embed_size
        self.latent_size = latent_size
        self.max_len = max_len
        self.n_properties = n_properties
        self.state = TrainingState()
        ne = max_len * embed_size

        def init(fan_in, *shape):
            return rng.normal(0.0, 1.0 / math.sqrt(fan_in), size=shape)

        self.params: dict[str, np.ndarray] = {
            "emb": init(embed_size, vocab_size, embed_size),
            "enc_w1": init(ne, ne, HIDDEN),
            "enc_b1": np.zeros(HIDDEN),
            "enc_wmu": init(HIDDEN, HIDDEN, latent_size),
            "enc_bmu": np.zeros(latent_size),
            "enc_wlv": init(HIDDEN, HIDDEN, latent_size),
            "enc_blv": np.zeros(latent_size),
            "dec_w1": init(latent_size, latent_size, HIDDEN),
            "dec_b1": np.zeros(HIDDEN),
            "dec_w2": init(HIDDEN, HIDDEN, max_len * vocab_size),
            "dec_b2": np.zeros(max_len * vocab_size),
            "prop_w1": init(latent_size, latent_size, PROP_HIDDEN),
            "prop_b1": np.zeros(PROP_HIDDEN),
            "prop_w2": init(PROP_HIDDEN, PROP_HIDDEN, PROP_HIDDEN),
            "prop_b2": np.zeros(PROP_HIDDEN),
            "prop_w3": init(PROP_HIDDEN, PROP_HIDDEN, n_properties),
            "prop_b3": np.zeros(n_properties),
        }

    # ---------------- forward passes ----------------

    def _check_ids(self, ids: np.ndarray) -> np.ndarray:
        ids = np.asarray(ids)
        if ids.ndim != 2 or ids.shape[1] != self.max_len:
            raise ValueError(f"token batch must be (B, {self.max_len})")
        if ids.min() < 0 or ids.max() >= self.vocab_size:
            raise ValueError("unknown token id in batch")
        return ids.astype(np.int64)

    def encode(self, ids) -> tuple[np.ndarray, np.ndarray]:
        """Posterior means and log-variances of a padded token batch.

        Deterministic, and each row depends only on its own tokens, so a
        sample encodes identically alone or inside any batch.
        """
        ids = self._check_ids(ids)
        p = self.params
        x = p["emb"][ids].reshape(ids.shape[0], -1)
        h = np.tanh(x @ p["enc_w1"] + p["enc_b1"])
        return h @ p["enc_wmu"] + p["enc_bmu"], h @ p["enc_wlv"] + p["enc_blv"]

    def encode_sequences(self, seqs) -> tuple[np.ndarray, np.ndarray]:
        ids, _ = pad_sequences(seqs, self.max_len)
        return self.encode(ids)

    def reparameterize(self, mean, logvar, rng) -> tuple[np.ndarray, np.ndarray]:
        """z = mean + exp(logvar/2) * eps with eps ~ N(0, I); returns (z, eps)."""
        mean = np.asarray(mean, dtype=float)
        logvar = np.asarray(logvar, dtype=float)
        eps = rng.standard_normal(mean.shape)
        return mean + np.exp(0.5 * logvar) * eps, eps

    def decoder_logits(self, z: np.ndarray) -> np.ndarray:
        """Per-position token logits, shape (B, max_len, vocab)."""
        p = self.params
        h = np.tanh(z @ p["dec_w1"] + p["dec_b1"])
        return (h @ p["dec_w2"] + p["dec_b2"]).reshape(z.shape[0], self.max_len,
                                                       self.vocab_size)

    def decode_batch(self, z, rng, greedy: bool = False) -> list[tuple[int, ...]]:
        """Decode a batch of latents into token sequences.

        Greedy mode takes the argmax at every position; otherwise each
        position is sampled from its softmax. Positions are independent;
        the emitted sequence is everything before the first end-of-sequence
        token (or the full window when none appears).
        """
        from .domain import EOS

        z = np.atleast_2d(np.asarray(z, dtype=float))
        if z.shape[1] != self.latent_size:
            raise ValueError(f"latent length must be {self.latent_size}")
        logits = self.decoder_logits(z)
        if greedy:
            toks = logits.argmax(axis=2)
        else:
            probs = _softmax(logits)
            u = rng.random((z.shape[0], self.max_len, 1))
            toks = (u > probs.cumsum(axis=2)).sum(axis=2)
        out = []
        for row in toks:
            eos = np.flatnonzero(row == EOS)
            end = int(eos[0]) if eos.size else self.max_len
            out.append(tuple(int(t) for t in row[:end]))
        return out

    def decode(self, z, rng, greedy: bool = False) -> tuple[int, ...]:
        return self.decode_batch(np.asarray(z, dtype=float)[None, :], rng, greedy)[0]

    def predict_properties(self, z) -> np.ndarray:
        """Deterministic K-vector of property predictions for one latent."""
        z = np.asarray(z, dtype=float)
        single = z.ndim == 1
        z = np.atleast_2d(z)
        p = self.params
        h1 = np.tanh(z @ p["prop_w1"] + p["prop_b1"])
        h2 = np.tanh(h1 @ p["prop_w2"] + p["prop_b2"])
        out = h2 @ p["prop_w3"] + p["prop_b3"]
        return out[0] if single else out

    # ---------------- loss and gradients ----------------

    def loss(self, ids, mask, props, alpha: float, beta: float, rng,
             eps: np.ndarray | None = None) -> LossBreakdown:
        breakdown, _ = self._forward_backward(ids, mask, props, alpha, beta,
                                              rng, eps, want_grads=False)
        return breakdown

    def loss_and_grads(self, ids, mask, props, alpha: float, beta: float, rng,
                       eps: np.ndarray | None = None):
        return self._forward_backward(ids, mask, props, alpha, beta, rng, eps,
                                      want_grads=True)

    def _forward_backward(self, ids, mask, props, alpha, beta, rng, eps,
                          want_grads):
        ids = self._check_ids(ids)
        mask = np.asarray(mask, dtype=float)
        props = np.asarray(props, dtype=float)
        if props.ndim != 2 or props.shape != (ids.shape[0], self.n_properties):
            raise ValueError(
                f"properties must be (B, {self.n_properties}), got {props.shape}")
        if mask.shape != ids.shape:
            raise ValueError("mask must match the token batch shape")
        p = self.params
        b = ids.shape[0]

        x3 = p["emb"][ids]                                   # (B, N, E)
        x = x3.reshape(b, -1)
        h_e = np.tanh(x @ p["enc_w1"] + p["enc_b1"])
        mu = h_e @ p["enc_wmu"] + p["enc_bmu"]
        lv = h_e @ p["enc_wlv"] + p["enc_blv"]
        if eps is None:
            eps = rng.standard_normal(mu.shape)
        std = np.exp(0.5 * lv)
        z = mu + std * eps

        h_d = np.tanh(z @ p["dec_w1"] + p["dec_b1"])
        logits = (h_d @ p["dec_w2"] + p["dec_b2"]).reshape(b, self.max_len,
                                                           self.vocab_size)
        probs = _softmax(logits)
        rows = np.arange(b)[:, None]
        cols = np.arange(self.max_len)[None, :]
        logp = np.log(probs[rows, cols, ids])
        recon = float(-(logp * mask).sum() / b)

        kl_per = -0.5 * (1.0 + lv - mu**2 - np.exp(lv)).sum(axis=1)
        kl = float(kl_per.mean())

        h1 = np.tanh(z @ p["prop_w1"] + p["prop_b1"])
        h2 = np.tanh(h1 @ p["prop_w2"] + p["prop_b2"])
        pred = h2 @ p["prop_w3"] + p["prop_b3"]
        err = pred - props
        prop_mse = float((err**2).mean(axis=1).mean())

        breakdown = LossBreakdown(recon=recon, kl=kl, prop_mse=prop_mse,
                                  total=recon + beta * kl + alpha * prop_mse)
        if not want_grads:
            return breakdown, None

        # reconstruction path
        d_logits = probs.copy()
        d_logits[rows, cols, ids] -= 1.0
        d_logits *= mask[:, :, None] / b
        d_flat = d_logits.reshape(b, -1)
        g = {}
        g["dec_w2"] = h_d.T @ d_flat
        g["dec_b2"] = d_flat.sum(axis=0)
        d_hd = d_flat @ p["dec_w2"].T
        d_pre_d = d_hd * (1.0 - h_d**2)
        g["dec_w1"] = z.T @ d_pre_d
        g["dec_b1"] = d_pre_d.sum(axis=0)
        d_z = d_pre_d @ p["dec_w1"].T

        # property path
        d_pred = alpha * 2.0 * err / (self.n_properties * b)
        g["prop_w3"] = h2.T @ d_pred
        g["prop_b3"] = d_pred.sum(axis=0)
        d_h2 = d_pred @ p["prop_w3"].T
        d_pre2 = d_h2 * (1.0 - h2**2)
        g["prop_w2"] = h1.T @ d_pre2
        g["prop_b2"] = d_pre2.sum(axis=0)
        d_h1 = d_pre2 @ p["prop_w2"].T
        d_pre1 = d_h1 * (1.0 - h1**2)
        g["prop_w1"] = z.T @ d_pre1
        g["prop_b1"] = d_pre1.sum(axis=0)
        d_z += d_pre1 @ p["prop_w1"].T

        # through the reparameterization, plus the KL term
        d_mu = d_z + beta * mu / b
        d_lv = d_z * eps * 0.5 * std + beta * 0.5 * (np.exp(lv) - 1.0) / b

        g["enc_wmu"] = h_e.T @ d_mu
        g["enc_bmu"] = d_mu.sum(axis=0)
        g["enc_wlv"] = h_e.T @ d_lv
        g["enc_blv"] = d_lv.sum(axis=0)
        d_he = d_mu @ p["enc_wmu"].T + d_lv @ p["enc_wlv"].T
        d_pre_e = d_he * (1.0 - h_e**2)
        g["enc_w1"] = x.T @ d_pre_e
        g["enc_b1"] = d_pre_e.sum(axis=0)
        d_x3 = (d_pre_e @ p["enc_w1"].T).reshape(x3.shape)
        g_emb = np.zeros_like(p["emb"])
        np.add.at(g_emb, ids.reshape(-1), d_x3.reshape(-1, self.embed_size))
        g["emb"] = g_emb
        return breakdown, g

    # ---------------- training ----------------

    def train(self, seqs, props, epochs: int, alpha, beta_schedule, opt, rng,
              velocity: dict | None = None) -> list[LossBreakdown]:
        """Minibatch SGD with momentum; returns the per-epoch mean breakdown.

        alpha may be a constant or a BetaSchedule; beta comes from
        beta_schedule at each epoch. Gradients are clipped to a global norm
        of opt.clip_norm, and the learning rate decays by opt.lr_decay every
        opt.lr_step epochs. A zero-epoch call is a no-op.
        """
        if len(seqs) == 0:
            raise ValueError("training dataset must be non-empty")
        props = np.asarray(props, dtype=float)
        if props.shape != (len(seqs), self.n_properties):
            raise ValueError("properties must be (len(seqs), K)")
        if epochs < 0:
            raise ValueError("epochs must be >= 0")
        ids, mask = pad_sequences(seqs, self.max_len)
        if velocity is None:
            velocity = {k: np.zeros_like(v) for k, v in self.params.items()}
        history = []
        n = len(seqs)
        for epoch in range(1, epochs + 1):
            beta = beta_at(beta_schedule, epoch)
            a = _weight_at(alpha, epoch)
            lr = opt.learning_rate * opt.lr_decay ** ((epoch - 1) // opt.lr_step)
            perm = rng.permutation(n)
            sums = np.zeros(4)
            n_batches = 0
            for start in range(0, n, opt.batch_size):
                idx = perm[start : start + opt.batch_size]
                breakdown, grads = self.loss_and_grads(
                    ids[idx], mask[idx], props[idx], a, beta, rng)
                norm = math.sqrt(sum(float((g**2).sum()) for g in grads.values()))
                if norm > opt.clip_norm:
                    scale = opt.clip_norm / norm
                    for g in grads.values():
                        g *= scale
                for name, g in grads.items():
                    velocity[name] = opt.momentum * velocity[name] - lr * g
                    self.params[name] += velocity[name]
                sums += (breakdown.recon, breakdown.kl, breakdown.prop_mse,
                         breakdown.total)
                n_batches += 1
                self.state.steps += 1
            self.state.epochs += 1
            self.state.learning_rate = lr
            history.append(LossBreakdown(*(sums / n_batches)))
        return history

    # ---------------- checkpoints ----------------

    def save(self, path) -> None:
        """Write a flat binary checkpoint.

        Layout: magic "DELV1"; then vocab, embed, latent, max_len and
        property counts as little-endian int32; then every parameter matrix
        in PARAM_ORDER as row-major little-endian float64. Hidden widths are
        fixed constants of the format and are not stored.
        """
        with open(path, "wb") as fh:
            fh.write(CHECKPOINT_MAGIC)
            fh.write(struct.pack("<5i", self.vocab_size, self.embed_size,
                                 self.latent_size, self.max_len,
                                 self.n_properties))
            for name in PARAM_ORDER:
                fh.write(np.ascontiguousarray(self.params[name],
                                              dtype="<f8").tobytes())

    @classmethod
    def load(cls, path) -> "SequenceVae":
        with open(path, "rb") as fh:
            blob = fh.read()
        if blob[: len(CHECKPOINT_MAGIC)] != CHECKPOINT_MAGIC:
            raise ValueError(f"not a model checkpoint: {path}")
        off = len(CHECKPOINT_MAGIC)
        vocab, embed, latent, max_len, k = struct.unpack_from("<5i", blob, off)
        off += 20
        model = cls(vocab, embed, latent, max_len, k,
                    rng=np.random.default_rng(0))
        for name in PARAM_ORDER:
            shape = model.params[name].shape
            count = int(np.prod(shape))
            arr = np.frombuffer(blob, dtype="<f8", count=count, offset=off)
            model.params[name] = arr.reshape(shape).copy()
            off += count * 8
        if off != len(blob):
            raise ValueError(f"checkpoint has trailing bytes: {path}")
        return model
