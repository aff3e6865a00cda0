"""Training loop: balanced batches, cross-entropy losses, AdamW, early stopping.

Defaults follow the training recipe this harness reproduces: 100 epochs,
patience 10, batch size 64, learning rate 1e-4, AdamW, class-balanced
batches. Runs are deterministic given the seed.
"""

from __future__ import annotations

import csv
import time
from dataclasses import dataclass, field

import numpy as np

from . import head as head_mod
from . import metrics as metrics_mod
from .data import DatasetManifest, Utterance
from .head import HeadModel


class TrainError(Exception):
    pass


@dataclass
class TrainConfig:
    max_epochs: int = 100
    patience: int = 10
    batch_size: int = 64
    learning_rate: float = 1e-4
    seed: int = 0
    betas: tuple[float, float] = (0.9, 0.999)
    eps: float = 1e-8
    weight_decay: float = 0.01


@dataclass
class EpochRecord:
    epoch: int
    train_loss: float
    dev_loss: float
    dev_eer: float
    seconds: float


@dataclass
class TrainLog:
    records: list[EpochRecord] = field(default_factory=list)
    best_epoch: int = -1

    def write_csv(self, path) -> None:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow(["epoch", "train_loss", "dev_loss", "dev_eer", "seconds"])
            for r in self.records:
                writer.writerow([r.epoch, repr(r.train_loss), repr(r.dev_loss), repr(r.dev_eer), f"{r.seconds:.3f}"])


def _cycle_cover(items: list, slots: int, rng: np.random.Generator) -> list:
    """Deterministically fill `slots` positions by cycling reshuffled passes.

    Every item appears floor(slots/len) or ceil(slots/len) times, so each
    full pass over the pool is covered before any extra repetition.
    """
    out = []
    while len(out) < slots:
        order = rng.permutation(len(items))
        out.extend(items[i] for i in order)
    return out[:slots]


def balanced_batches(
    manifest: DatasetManifest, batch_size: int, seed: int, epoch: int = 0
) -> list[list[Utterance]]:
    """Class-balanced mini-batches: exactly half real, half fake each.

    The epoch covers every majority-class sample at least once; the
    minority class is oversampled by cycling. Batch order is a pure
    function of (seed, epoch).
    """
    if batch_size % 2 != 0:
        raise TrainError(f"batch size must be even, got {batch_size}")
    reals = manifest.by_label(0)
    fakes = manifest.by_label(1)
    if not reals or not fakes:
        raise TrainError(
            f"balanced batching needs both classes, got real={len(reals)} fake={len(fakes)}"
        )
    half = batch_size // 2
    n_batches = -(-max(len(reals), len(fakes)) // half)
    slots = n_batches * half
    rng = np.random.default_rng((seed, epoch))
    real_seq = _cycle_cover(reals, slots, rng)
    fake_seq = _cycle_cover(fakes, slots, rng)
    return [
        real_seq[b * half : (b + 1) * half] + fake_seq[b * half : (b + 1) * half]
        for b in range(n_batches)
    ]


def softmax_ce_loss(logits: np.ndarray, label: int) -> tuple[float, np.ndarray]:
    """Two-class cross entropy from logits; stable log-space evaluation."""
    z = np.asarray(logits, dtype=np.float64)
    zmax = z.max()
    log_probs = z - zmax - np.log(np.exp(z - zmax).sum())
    grad = np.exp(log_probs)
    grad[label] -= 1.0
    return -float(log_probs[label]), grad


def sigmoid_bce_loss(logits: np.ndarray, label: int) -> tuple[float, np.ndarray]:
    """Binary cross entropy from the single pre-sigmoid logit."""
    z = float(np.asarray(logits).reshape(()) if np.asarray(logits).size == 1 else logits[0])
    # softplus(z) - y*z, evaluated stably on both signs
    loss = max(z, 0.0) - label * z + np.log1p(np.exp(-abs(z)))
    p = 1.0 / (1.0 + np.exp(-z))
    return float(loss), np.array([p - label])


def loss_for(model: HeadModel, pred, label: int) -> tuple[float, np.ndarray]:
    if model.loss_kind == "softmax-ce":
        return softmax_ce_loss(pred.logits, label)
    return sigmoid_bce_loss(pred.logits, label)


class AdamW:
    """Decoupled-weight-decay Adam; decay applied before the moment update."""

    def __init__(self, shapes, betas=(0.9, 0.999), eps=1e-8, weight_decay=0.01):
        self.m = [np.zeros(s) for s in shapes]
        self.v = [np.zeros(s) for s in shapes]
        self.step_count = 0
        self.beta1, self.beta2 = betas
        self.eps = eps
        self.weight_decay = weight_decay

    def step(self, params: list[np.ndarray], grads: list[np.ndarray], lr: float) -> list[np.ndarray]:
        if len(params) != len(self.m) or len(grads) != len(params):
            raise TrainError("optimizer state / parameter count mismatch")
        self.step_count += 1
        t = self.step_count
        out = []
        for i, (p, g) in enumerate(zip(params, grads)):
            if p.shape != self.m[i].shape or g.shape != p.shape:
                raise TrainError(f"shape mismatch on tensor {i}: param {p.shape}, grad {g.shape}")
            if not np.all(np.isfinite(g)):
                raise TrainError(f"non-finite gradient on tensor {i}")
            p = p * (1.0 - lr * self.weight_decay)
            self.m[i] = self.beta1 * self.m[i] + (1.0 - self.beta1) * g
            self.v[i] = self.beta2 * self.v[i] + (1.0 - self.beta2) * g * g
            m_hat = self.m[i] / (1.0 - self.beta1**t)
            v_hat = self.v[i] / (1.0 - self.beta2**t)
            out.append(p - lr * m_hat / (np.sqrt(v_hat) + self.eps))
        return out


class EarlyStopping:
    """Stop after `patience` consecutive epochs without dev-loss improvement."""

    def __init__(self, patience: int):
        self.patience = patience
        self.best_loss = np.inf
        self.best_epoch = -1
        self.stale = 0

    def update(self, epoch: int, dev_loss: float) -> bool:
        """Record one epoch; returns True when training should stop."""
        if dev_loss < self.best_loss:
            self.best_loss = dev_loss
            self.best_epoch = epoch
            self.stale = 0
        else:
            self.stale += 1
        return self.stale >= self.patience


def _batch_step(model: HeadModel, provider, batch, optimizer: AdamW, lr: float) -> float:
    params = [p.copy() for p in model.parameters()]
    grad_sum = [np.zeros_like(p) for p in params]
    total = 0.0
    for u in batch:
        try:
            emb = provider.provide(u)
        except Exception as exc:
            raise TrainError(f"provider failed on utterance {u.id!r}: {exc}") from exc
        pred = head_mod.forward(model, emb)
        value, grad_logits = loss_for(model, pred, u.label)
        total += value
        for acc, g in zip(grad_sum, head_mod.backward(model, pred, grad_logits)):
            acc += g
    n = len(batch)
    grads = [g / n for g in grad_sum]
    model.set_parameters(optimizer.step(params, grads, lr))
    return total / n


def evaluate_loss(model: HeadModel, provider, manifest: DatasetManifest) -> tuple[float, list]:
    """Mean per-utterance loss and score records over a manifest."""
    total = 0.0
    records = []
    for u in manifest.entries:
        try:
            emb = provider.provide(u)
        except Exception as exc:
            raise TrainError(f"provider failed on utterance {u.id!r}: {exc}") from exc
        pred = head_mod.forward(model, emb)
        value, _ = loss_for(model, pred, u.label)
        total += value
        records.append(metrics_mod.ScoreRecord(u.id, pred.score, u.label, u.dataset))
    return total / len(manifest), records


def fit(
    model: HeadModel,
    provider,
    train_manifest: DatasetManifest,
    dev_manifest: DatasetManifest,
    cfg: TrainConfig,
) -> tuple[HeadModel, TrainLog]:
    """Train the head; returns the best-dev-loss checkpoint and the log."""
    if len(train_manifest) == 0 or len(dev_manifest) == 0:
        raise TrainError("train and dev manifests must be non-empty")

    optimizer = AdamW(
        [p.shape for p in model.parameters()],
        betas=cfg.betas, eps=cfg.eps, weight_decay=cfg.weight_decay,
    )
    stopper = EarlyStopping(cfg.patience)
    log = TrainLog()
    best = model.clone()

    for epoch in range(1, cfg.max_epochs + 1):
        start = time.monotonic()
        batches = balanced_batches(train_manifest, cfg.batch_size, cfg.seed, epoch)
        train_loss = float(np.mean([
            _batch_step(model, provider, batch, optimizer, cfg.learning_rate)
            for batch in batches
        ]))
        dev_loss, dev_records = evaluate_loss(model, provider, dev_manifest)
        dev_eer, _ = metrics_mod.eer(dev_records)
        log.records.append(EpochRecord(epoch, train_loss, dev_loss, dev_eer, time.monotonic() - start))
        improved = dev_loss < stopper.best_loss
        stop = stopper.update(epoch, dev_loss)
        if improved:
            best = model.clone()
        if stop:
            break

    log.best_epoch = stopper.best_epoch
    return best, log
