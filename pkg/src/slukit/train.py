"""Joint training of the intent and slot objectives with Adam.

The loss is L_I + L_S per sample (slot term summed over tokens), averaged
over the batch. Runs are fully determined by (seed, config, dataset):
shuffling uses a seeded Mersenne generator, dropout masks a seeded PCG64
stream, and model selection takes the best validation overall accuracy with
ties going to the earlier epoch.
"""

from __future__ import annotations

import json
import random
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from . import ops
from .checkpoint import save_checkpoint
from .data import Sample, Vocabularies
from .errors import ConfigError, DomainError, NumericError
from .metrics import MetricsReport, evaluate_model
from .model import ModelConfig, ModelOutput, SluModel
from .params import ParameterStore
from .tape import Tensor, backward, recording


@dataclass(frozen=True)
class TrainConfig:
    epochs: int = 30
    batch_size: int = 16
    learning_rate: float = 1e-3
    adam_beta1: float = 0.9
    adam_beta2: float = 0.999
    adam_eps: float = 1e-8
    l2_lambda: float = 1e-6
    dropout_rate: float = 0.4
    seed: int = 13
    patience: int = 8
    # teacher forcing feeds gold previous slots; off, the decoder consumes its
    # own greedy emissions during training as well
    teacher_forcing: bool = True

    def __post_init__(self):
        if self.epochs < 1 or self.batch_size < 1 or self.patience < 1:
            raise ConfigError("epochs, batch_size and patience must be positive")
        if self.learning_rate < 0 or self.l2_lambda < 0 or self.adam_eps <= 0:
            raise ConfigError("learning_rate/l2_lambda must be >= 0 and adam_eps > 0")
        if not 0 <= self.dropout_rate < 1:
            raise ConfigError(f"dropout_rate must lie in [0, 1), got {self.dropout_rate}")
        if not (0 <= self.adam_beta1 < 1 and 0 <= self.adam_beta2 < 1):
            raise ConfigError("adam betas must lie in [0, 1)")


class AdamState:
    """First/second moment estimates plus the step counter."""

    def __init__(self, store: ParameterStore):
        self.m = {name: np.zeros_like(t.data) for name, t in store.items()}
        self.v = {name: np.zeros_like(t.data) for name, t in store.items()}
        self.step = 0


def adam_step(store: ParameterStore, grads: dict, state: AdamState, cfg: TrainConfig) -> None:
    """One bias-corrected Adam update with decoupled L2 decay.

    Parameters without a gradient entry are treated as having zero gradient
    (their moments decay and weight decay still applies).
    """
    state.step += 1
    bc1 = 1.0 - cfg.adam_beta1 ** state.step
    bc2 = 1.0 - cfg.adam_beta2 ** state.step
    lr = cfg.learning_rate
    for name, tensor in store.items():
        g = grads.get(name)
        if g is not None and not np.all(np.isfinite(g)):
            raise NumericError(f"non-finite gradient for parameter {name!r}")
        m = state.m[name]
        v = state.v[name]
        if g is None:
            m *= cfg.adam_beta1
            v *= cfg.adam_beta2
        else:
            m *= cfg.adam_beta1
            m += (1.0 - cfg.adam_beta1) * g
            v *= cfg.adam_beta2
            v += (1.0 - cfg.adam_beta2) * g * g
        update = lr * (m / bc1) / (np.sqrt(v / bc2) + cfg.adam_eps)
        tensor.data = tensor.data - update - lr * cfg.l2_lambda * tensor.data


def joint_loss(output: ModelOutput, sample: Sample, vocabs: Vocabularies) -> Tensor:
    """L_I + L_S for one teacher-forced forward pass."""
    if sample.intent not in vocabs.intents:
        raise IndexError(f"gold intent {sample.intent!r} outside the vocabulary")
    for label in sample.slot_labels:
        if label not in vocabs.slots:
            raise IndexError(f"gold slot label {label!r} outside the vocabulary")
    l_i = ops.cross_entropy(output.intent_probs, vocabs.intents.encode(sample.intent))
    l_s = ops.sequence_cross_entropy(
        output.slot_probs, [vocabs.slots.encode(l) for l in sample.slot_labels]
    )
    return ops.add(l_i, l_s)


@dataclass
class EpochRecord:
    epoch: int
    train_loss: float
    val_report: MetricsReport

    def log_line(self) -> str:
        r = self.val_report
        return (
            f"epoch={self.epoch} train_loss={self.train_loss!r} "
            f"val_slot_f1={r.slot_f1!r} val_intent_acc={r.intent_accuracy!r} "
            f"val_overall_acc={r.overall_accuracy!r}"
        )


def parse_log_line(line: str) -> dict:
    fields = dict(part.split("=", 1) for part in line.split())
    return {
        "epoch": int(fields["epoch"]),
        "train_loss": float(fields["train_loss"]),
        "val_slot_f1": float(fields["val_slot_f1"]),
        "val_intent_acc": float(fields["val_intent_acc"]),
        "val_overall_acc": float(fields["val_overall_acc"]),
    }


@dataclass
class TrainResult:
    model: SluModel  # parameters as of the final epoch
    best_values: dict
    best_epoch: int
    history: list = field(default_factory=list)

    def log_lines(self) -> list[str]:
        return [rec.log_line() for rec in self.history]

    def best_model(self) -> SluModel:
        model = SluModel.create(self.model.config, self.model.vocabs, zero_init=True)
        model.params.store.load_values(self.best_values)
        return model


def train(model_config: ModelConfig, train_config: TrainConfig,
          train_samples: list[Sample], valid_samples: list[Sample],
          vocabs: Vocabularies, out_dir=None, initial: SluModel | None = None) -> TrainResult:
    """Optimize on the train split, select on validation overall accuracy."""
    if not train_samples:
        raise DomainError("training set is empty")
    model = initial if initial is not None else SluModel.create(
        model_config, vocabs, seed=train_config.seed)
    store = model.params.store
    state = AdamState(store)
    shuffle_rng = random.Random(train_config.seed)
    mask_rng = np.random.default_rng(train_config.seed)
    dropout = (train_config.dropout_rate, mask_rng) if train_config.dropout_rate > 0 else None

    history: list[EpochRecord] = []
    best_values = store.copy_values()
    best_overall = -1.0
    best_epoch = 0
    n = len(train_samples)
    decode_mode = "teacher" if train_config.teacher_forcing else "greedy"
    for epoch in range(1, train_config.epochs + 1):
        order = list(range(n))
        shuffle_rng.shuffle(order)
        loss_sum = 0.0
        for step, start in enumerate(range(0, n, train_config.batch_size)):
            batch = [train_samples[i] for i in order[start:start + train_config.batch_size]]
            with recording() as rec:
                losses = [
                    joint_loss(model.forward(s, mode=decode_mode, dropout=dropout), s, vocabs)
                    for s in batch
                ]
                batch_loss = ops.scale(ops.add_n(losses), 1.0 / len(losses))
            value = batch_loss.item()
            if not np.isfinite(value):
                raise NumericError(f"loss diverged at epoch {epoch} step {step}")
            backward(batch_loss)
            adam_step(store, store.gradients(rec), state, train_config)
            loss_sum += value * len(batch)
        val_report = evaluate_model(model, valid_samples)
        history.append(EpochRecord(epoch, loss_sum / n, val_report))
        if val_report.overall_accuracy > best_overall:
            best_overall = val_report.overall_accuracy
            best_values = store.copy_values()
            best_epoch = epoch
        elif epoch - best_epoch >= train_config.patience:
            break

    result = TrainResult(model=model, best_values=best_values,
                         best_epoch=best_epoch, history=history)
    if out_dir is not None:
        write_run_dir(out_dir, result, model_config, train_config)
    return result


def write_run_dir(out_dir, result: TrainResult, model_config: ModelConfig,
                  train_config: TrainConfig) -> None:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    snapshot = {
        "model": {
            **asdict(model_config.dims),
            "fusion_mode": model_config.fusion_mode,
            **asdict(model_config.flags),
            "up_length": model_config.up_length,
            "ca_length": model_config.ca_length,
        },
        "train": asdict(train_config),
    }
    (out / "config.json").write_text(json.dumps(snapshot, indent=2) + "\n", encoding="utf-8")
    (out / "train_log.txt").write_text("\n".join(result.log_lines()) + "\n", encoding="utf-8")
    save_checkpoint(result.best_model(), out / "best.ckpt")
    save_checkpoint(result.model, out / "final.ckpt")
