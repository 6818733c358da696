"""Semantic-equivalence classifier over frozen embeddings.

A pair (u, v) of vectors (target-in-context vs. gloss definition, or two
contexts) is mapped to comparison features [u, v, |u-v|, u*v] and scored by a
2-class softmax, p = softmax(W f + b).  Encoders stay frozen; only W and b
train, by mini-batch AdamW on mean cross-entropy.  Zero initialization plus a
seeded batch order makes training bit-reproducible.
"""

from __future__ import annotations

import json
import logging
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import __version__
from .embedding import EmbeddingStore, EmbeddingVector, example_key, gloss_key
from .errors import DataError, SenseAlignError
from .pairgen import PairInstance, PairKind, PairLabel
from .util import named_rng

log = logging.getLogger("sense_align.head")

_ADAM_BETA1 = 0.9
_ADAM_BETA2 = 0.999
_ADAM_EPS = 1e-8

MODEL_FILE_VERSION = 1


@dataclass(frozen=True)
class TrainConfig:
    learning_rate: float = 1e-5
    batch_size: int = 64
    epochs: int = 10
    weight_decay: float = 0.01
    dropout: float = 0.0
    seed: int = 17

    def __post_init__(self) -> None:
        if self.learning_rate <= 0:
            raise DataError(f"learning_rate must be positive, got {self.learning_rate}")
        if self.batch_size < 1:
            raise DataError(f"batch_size must be at least 1, got {self.batch_size}")
        if self.epochs < 0:
            raise DataError(f"epochs must be non-negative, got {self.epochs}")
        if self.weight_decay < 0:
            raise DataError(f"weight_decay must be non-negative, got {self.weight_decay}")
        if not 0.0 <= self.dropout < 1.0:
            raise DataError(f"dropout must lie in [0, 1), got {self.dropout}")


def train_config_from_json(obj: dict, default_seed: int = 17) -> TrainConfig:
    """Config file parser; unknown keys are rejected, seed may be omitted."""
    if not isinstance(obj, dict):
        raise DataError("training config must be a JSON object")
    known = {"learning_rate", "batch_size", "epochs", "weight_decay", "dropout", "seed"}
    unknown = set(obj) - known
    if unknown:
        raise DataError(f"unknown training config keys: {sorted(unknown)}")
    merged = {"seed": default_seed, **obj}
    try:
        return TrainConfig(**merged)
    except TypeError as exc:
        raise DataError(f"invalid training config: {exc}") from None


@dataclass(frozen=True, eq=False)
class HeadModel:
    """W: (2, 4n) float64, bias: (2,) float64; class 1 means equivalent."""

    W: np.ndarray
    bias: np.ndarray
    n: int
    meta: dict = field(default_factory=dict)

    def __post_init__(self) -> None:
        W = np.asarray(self.W, dtype=np.float64)
        bias = np.asarray(self.bias, dtype=np.float64)
        if W.shape != (2, 4 * self.n) or bias.shape != (2,):
            raise DataError(
                f"model shape mismatch: W {W.shape}, bias {bias.shape}, n={self.n}"
            )
        if not (np.all(np.isfinite(W)) and np.all(np.isfinite(bias))):
            raise DataError("model parameters must be finite")
        W = W.copy()
        bias = bias.copy()
        W.setflags(write=False)
        bias.setflags(write=False)
        object.__setattr__(self, "W", W)
        object.__setattr__(self, "bias", bias)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, HeadModel):
            return NotImplemented
        return (
            self.n == other.n
            and self.W.tobytes() == other.W.tobytes()
            and self.bias.tobytes() == other.bias.tobytes()
            and self.meta == other.meta
        )


def zero_model(n: int, meta: dict | None = None) -> HeadModel:
    return HeadModel(np.zeros((2, 4 * n)), np.zeros(2), n, meta or {})


def build_features(u: EmbeddingVector, v: EmbeddingVector) -> np.ndarray:
    """[u | v | |u-v| | u*v] as float64, length exactly 4n."""
    if u.dim != v.dim:
        raise DataError(f"feature dim mismatch: {u.dim} vs {v.dim}")
    a = u.values.astype(np.float64)
    b = v.values.astype(np.float64)
    return np.concatenate([a, b, np.abs(a - b), a * b])


def class_probabilities(model: HeadModel, u: EmbeddingVector, v: EmbeddingVector) -> np.ndarray:
    """Softmax over the two logits, max-subtracted for stability."""
    if u.dim != model.n or v.dim != model.n:
        raise DataError(f"input dim {u.dim}/{v.dim} does not match model n={model.n}")
    f = build_features(u, v)
    z = model.W @ f + model.bias
    z = z - z.max()
    e = np.exp(z)
    return e / e.sum()


def predict(model: HeadModel, u: EmbeddingVector, v: EmbeddingVector) -> float:
    """Probability that u and v are semantically equivalent."""
    return float(class_probabilities(model, u, v)[1])


def _loss_grad_arrays(
    W: np.ndarray, bias: np.ndarray, F: np.ndarray, y: np.ndarray
) -> tuple[float, np.ndarray, np.ndarray]:
    batch = F.shape[0]
    Z = F @ W.T + bias
    Z = Z - Z.max(axis=1, keepdims=True)
    E = np.exp(Z)
    P = E / E.sum(axis=1, keepdims=True)
    eps_floor = np.finfo(np.float64).tiny
    loss = float(-np.mean(np.log(np.maximum(P[np.arange(batch), y], eps_floor))))
    dZ = P.copy()
    dZ[np.arange(batch), y] -= 1.0
    dZ /= batch
    return loss, dZ.T @ F, dZ.sum(axis=0)


def loss_and_grad(
    model: HeadModel, batch: Sequence[tuple[EmbeddingVector, EmbeddingVector, int]]
) -> tuple[float, np.ndarray, np.ndarray]:
    """Mean cross-entropy and its analytic gradient w.r.t. W and bias."""
    if not batch:
        raise DataError("loss_and_grad requires a non-empty batch")
    F = np.stack([build_features(u, v) for u, v, _y in batch])
    y = np.array([1 if label else 0 for _u, _v, label in batch], dtype=np.int64)
    return _loss_grad_arrays(model.W, model.bias, F, y)


def pair_store_keys(p: PairInstance) -> tuple[str, str]:
    """(u key, v key): context vector first, gloss or second context second."""
    ukey = example_key(p.context.gloss_id, p.context.example_index)
    if p.kind is PairKind.GLOSS_CONTEXT:
        return ukey, gloss_key(p.gloss[0])
    return ukey, example_key(p.context2.gloss_id, p.context2.example_index)


def train(
    pairs: Sequence[PairInstance],
    store: EmbeddingStore,
    cfg: TrainConfig,
    init: HeadModel | None = None,
) -> HeadModel:
    """Mini-batch AdamW over the pair list; deterministic for a given seed.

    Decoupled weight decay is applied to W only (bias excluded).  Passing a
    previously trained model as init continues from its parameters, which is
    how a general model is specialized on task-specific pairs.
    """
    if not pairs:
        raise DataError("no training pairs given")
    n = store.dim
    if init is not None and init.n != n:
        raise DataError(f"init model n={init.n} does not match store dim {n}")

    F_all = np.empty((len(pairs), 4 * n), dtype=np.float64)
    y_all = np.empty(len(pairs), dtype=np.int64)
    for i, p in enumerate(pairs):
        ukey, vkey = pair_store_keys(p)
        F_all[i] = build_features(store.get(ukey), store.get(vkey))
        y_all[i] = 1 if p.label is PairLabel.POSITIVE else 0

    W = (init.W if init is not None else np.zeros((2, 4 * n))).copy()
    bias = (init.bias if init is not None else np.zeros(2)).copy()
    mW = np.zeros_like(W)
    vW = np.zeros_like(W)
    mb = np.zeros_like(bias)
    vb = np.zeros_like(bias)
    order_rng = named_rng(cfg.seed, "head.train.order")
    drop_rng = named_rng(cfg.seed, "head.train.dropout")
    step = 0
    epoch_losses: list[float] = []
    for epoch in range(cfg.epochs):
        order = order_rng.permutation(len(pairs))
        epoch_loss_sum = 0.0
        for lo in range(0, len(order), cfg.batch_size):
            idx = order[lo : lo + cfg.batch_size]
            F = F_all[idx]
            if cfg.dropout > 0.0:
                keep = drop_rng.random(F.shape) >= cfg.dropout
                F = F * keep / (1.0 - cfg.dropout)
            loss, gW, gb = _loss_grad_arrays(W, bias, F, y_all[idx])
            if not math.isfinite(loss):
                raise SenseAlignError(
                    f"training diverged: non-finite loss at epoch {epoch}, batch {lo // cfg.batch_size}"
                )
            epoch_loss_sum += loss * len(idx)
            step += 1
            mW = _ADAM_BETA1 * mW + (1 - _ADAM_BETA1) * gW
            vW = _ADAM_BETA2 * vW + (1 - _ADAM_BETA2) * gW * gW
            mb = _ADAM_BETA1 * mb + (1 - _ADAM_BETA1) * gb
            vb = _ADAM_BETA2 * vb + (1 - _ADAM_BETA2) * gb * gb
            bc1 = 1 - _ADAM_BETA1**step
            bc2 = 1 - _ADAM_BETA2**step
            W -= cfg.learning_rate * ((mW / bc1) / (np.sqrt(vW / bc2) + _ADAM_EPS) + cfg.weight_decay * W)
            bias -= cfg.learning_rate * (mb / bc1) / (np.sqrt(vb / bc2) + _ADAM_EPS)
        epoch_losses.append(epoch_loss_sum / len(pairs))
    if epoch_losses:
        log.info("trained %d epochs, final mean loss %.6f", cfg.epochs, epoch_losses[-1])
    meta = {
        "seed": cfg.seed,
        "epochs": cfg.epochs,
        "learning_rate": cfg.learning_rate,
        "batch_size": cfg.batch_size,
        "weight_decay": cfg.weight_decay,
        "dropout": cfg.dropout,
        "pair_count": len(pairs),
        "continued": init is not None,
        "epoch_losses": epoch_losses,
    }
    return HeadModel(W, bias, n, meta)


def training_accuracy(model: HeadModel, batch) -> float:
    correct = sum(
        1 for u, v, label in batch if (predict(model, u, v) >= 0.5) == bool(label)
    )
    return correct / len(batch)


def save_model(model: HeadModel, path: str) -> None:
    """JSON with hexadecimal floats for parameters, so round-trips are exact."""
    obj = {
        "version": MODEL_FILE_VERSION,
        "n": model.n,
        "W": [x.hex() for x in model.W.ravel(order="C")],
        "bias": [x.hex() for x in model.bias],
        "config": model.meta,
        "provenance": {"tool": f"sense-align {__version__}"},
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(obj, fh, indent=1)
        fh.write("\n")


def load_model(path: str, store: EmbeddingStore | None = None) -> HeadModel:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            obj = json.load(fh)
    except OSError as exc:
        raise DataError(f"cannot read model file {path}: {exc}") from None
    except json.JSONDecodeError as exc:
        raise DataError(f"{path}: invalid model file: {exc}") from None
    if not isinstance(obj, dict) or obj.get("version") != MODEL_FILE_VERSION:
        raise DataError(
            f"{path}: unsupported model file version {obj.get('version')!r}"
        )
    try:
        n = int(obj["n"])
        W = np.array([float.fromhex(x) for x in obj["W"]], dtype=np.float64).reshape(2, 4 * n)
        bias = np.array([float.fromhex(x) for x in obj["bias"]], dtype=np.float64)
        meta = obj.get("config", {})
    except (KeyError, TypeError, ValueError) as exc:
        raise DataError(f"{path}: malformed model file: {exc}") from None
    model = HeadModel(W, bias, n, meta)
    if store is not None and model.n != store.dim:
        raise DataError(
            f"{path}: model n={model.n} does not match embedding store dim {store.dim}"
        )
    return model
