"""Span-level slot F1, intent accuracy and overall accuracy.

Slot F1 is micro-averaged over exact (start, end, label) span matches.
Predicted label sequences get standard CoNLL repair before span extraction
(an I-X that does not continue an X span acts as B-X); overall accuracy
compares the raw label sequences, unrepaired.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

from .data import Sample, Span, bio_spans
from .errors import ValidationError


@dataclass
class MetricsReport:
    slot_precision: float
    slot_recall: float
    slot_f1: float
    intent_accuracy: float
    overall_accuracy: float
    n_samples: int
    confusion: dict = field(default_factory=dict)  # gold intent -> pred intent -> count

    def to_dict(self) -> dict:
        return {
            "slot_precision": self.slot_precision,
            "slot_recall": self.slot_recall,
            "slot_f1": self.slot_f1,
            "intent_accuracy": self.intent_accuracy,
            "overall_accuracy": self.overall_accuracy,
            "n_samples": self.n_samples,
            "confusion": self.confusion,
        }

    def to_json_line(self) -> str:
        return json.dumps(self.to_dict(), separators=(",", ":"))

    def format_table(self) -> str:
        lines = [
            f"{'Slot (F1)':>12} {'Intent (Acc)':>14} {'Overall (Acc)':>14}",
            f"{self.slot_f1:>12.4f} {self.intent_accuracy:>14.4f} {self.overall_accuracy:>14.4f}",
            "",
            f"slot precision {self.slot_precision:.4f}  slot recall {self.slot_recall:.4f}  "
            f"samples {self.n_samples}",
        ]
        wrong = {
            gold: {p: c for p, c in preds.items() if p != gold}
            for gold, preds in self.confusion.items()
        }
        wrong = {g: p for g, p in wrong.items() if p}
        if wrong:
            lines.append("intent confusion (gold -> pred: count):")
            for gold in sorted(wrong):
                for pred in sorted(wrong[gold]):
                    lines.append(f"  {gold} -> {pred}: {wrong[gold][pred]}")
        return "\n".join(lines) + "\n"


def repaired_spans(labels) -> set[Span]:
    """Span extraction with CoNLL repair for model output (gold stays strict)."""
    fixed = []
    prev_body = None
    for label in labels:
        if label == "O" or len(label) < 3 or label[1] != "-" or label[0] not in "BI":
            fixed.append("O")
            prev_body = None
            continue
        prefix, body = label[0], label[2:]
        if prefix == "I" and body != prev_body:
            fixed.append(f"B-{body}")
        else:
            fixed.append(label)
        prev_body = body
    return bio_spans(fixed)


def _check_lengths(pairs) -> None:
    for index, (pred, gold) in enumerate(pairs):
        if len(pred) != len(gold):
            raise ValidationError(
                f"sample {index}: {len(pred)} predicted labels for {len(gold)} gold labels"
            )


def slot_prf(pairs) -> tuple[float, float, float]:
    """Micro P/R/F1 over (pred_labels, gold_labels) pairs."""
    _check_lengths(pairs)
    tp = fp = fn = 0
    for pred, gold in pairs:
        pred_spans = repaired_spans(pred)
        gold_spans = bio_spans(gold)
        tp += len(pred_spans & gold_spans)
        fp += len(pred_spans - gold_spans)
        fn += len(gold_spans - pred_spans)
    precision = tp / (tp + fp) if tp + fp else 0.0
    recall = tp / (tp + fn) if tp + fn else 0.0
    f1 = 2 * precision * recall / (precision + recall) if precision + recall else 0.0
    return precision, recall, f1


def intent_accuracy(pred_intents, gold_intents) -> float:
    if len(pred_intents) != len(gold_intents):
        raise ValidationError("prediction/gold intent lists differ in length")
    if not gold_intents:
        return 0.0
    return sum(p == g for p, g in zip(pred_intents, gold_intents)) / len(gold_intents)


def overall_accuracy(pred_intents, gold_intents, label_pairs) -> float:
    """Fraction of utterances with the intent and the entire slot sequence correct."""
    _check_lengths(label_pairs)
    if not gold_intents:
        return 0.0
    hits = sum(
        pi == gi and list(pred) == list(gold)
        for pi, gi, (pred, gold) in zip(pred_intents, gold_intents, label_pairs)
    )
    return hits / len(gold_intents)


def compute_report(pred_intents, gold_intents, label_pairs) -> MetricsReport:
    precision, recall, f1 = slot_prf(label_pairs)
    confusion: dict = {}
    for pred, gold in zip(pred_intents, gold_intents):
        confusion.setdefault(gold, {}).setdefault(pred, 0)
        confusion[gold][pred] += 1
    return MetricsReport(
        slot_precision=precision,
        slot_recall=recall,
        slot_f1=f1,
        intent_accuracy=intent_accuracy(pred_intents, gold_intents),
        overall_accuracy=overall_accuracy(pred_intents, gold_intents, label_pairs),
        n_samples=len(gold_intents),
        confusion=confusion,
    )


def evaluate_model(model, samples: list[Sample]) -> MetricsReport:
    """Greedy decoding, dropout off; deterministic for a fixed checkpoint."""
    pred_intents, gold_intents, label_pairs = [], [], []
    for sample in samples:
        output = model.forward(sample, mode="greedy")
        pred_intents.append(output.intent_label)
        gold_intents.append(sample.intent)
        label_pairs.append((output.slot_labels, list(sample.slot_labels)))
    return compute_report(pred_intents, gold_intents, label_pairs)
