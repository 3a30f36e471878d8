"""Metric implementations against brute-force recount oracles."""

import random

import pytest

from slukit.data import Span, bio_spans
from slukit.errors import ValidationError
from slukit.metrics import (compute_report, intent_accuracy, overall_accuracy,
                            repaired_spans, slot_prf)

# ---------------------------------------------------------------------------
# examples


def test_perfect_predictions():
    pairs = [(["O", "B-X", "I-X"], ["O", "B-X", "I-X"]),
             (["B-Y"], ["B-Y"])]
    assert slot_prf(pairs) == (1.0, 1.0, 1.0)


def test_half_precision_full_recall():
    gold = ["O", "B-X", "I-X", "O", "O"]
    pred = ["O", "B-X", "I-X", "O", "B-Y"]
    p, r, f1 = slot_prf([(pred, gold)])
    assert (p, r) == (0.5, 1.0)
    assert f1 == pytest.approx(2 / 3)


def test_all_outside_predictions_score_zero():
    gold = ["B-X", "I-X", "O"]
    assert slot_prf([(["O", "O", "O"], gold)]) == (0.0, 0.0, 0.0)


def test_intent_and_overall_two_sample_example():
    preds = ["A", "B"]
    golds = ["A", "B"]
    pairs = [(["B-A.x"], ["B-A.x"]), (["O"], ["B-B.y"])]
    assert intent_accuracy(preds, golds) == 1.0
    assert overall_accuracy(preds, golds, pairs) == 0.5


def test_length_mismatch_names_sample_index():
    with pytest.raises(ValidationError) as err:
        slot_prf([(["O"], ["O"]), (["O", "O"], ["O"])])
    assert "sample 1" in str(err.value)


def test_repair_treats_leading_inside_as_begin():
    assert repaired_spans(["I-X", "I-X", "O"]) == {Span(0, 1, "X")}
    assert repaired_spans(["B-X", "I-Y"]) == {Span(0, 0, "X"), Span(1, 1, "Y")}
    # raw overall comparison stays strict: repaired labels only feed F1


# ---------------------------------------------------------------------------
# randomized recount oracles


def _random_label_seq(rng, bodies=("X", "Y"), max_len=8):
    length = rng.randint(1, max_len)
    labels = []
    prev = None
    for _ in range(length):
        choice = rng.random()
        if choice < 0.45 or prev is None:
            label = rng.choice(["O"] + [f"B-{b}" for b in bodies])
        elif choice < 0.75:
            label = f"I-{prev}" if prev else "O"
        else:
            label = "O"
        labels.append(label)
        prev = label[2:] if label != "O" else None
    return labels


def _brute_force_metrics(preds, golds, pairs):
    """Independent recount: explicit tuple lists, no set algebra on spans."""
    tp = fp = fn = 0
    for pred, gold in pairs:
        pred_spans = sorted((s.start, s.end, s.label) for s in repaired_spans(pred))
        gold_spans = sorted((s.start, s.end, s.label) for s in bio_spans(gold))
        remaining = list(gold_spans)
        for span in pred_spans:
            if span in remaining:
                remaining.remove(span)
                tp += 1
            else:
                fp += 1
        fn += len(remaining)
    precision = tp / (tp + fp) if tp + fp else 0.0
    recall = tp / (tp + fn) if tp + fn else 0.0
    f1 = 2 * precision * recall / (precision + recall) if precision + recall else 0.0
    intent_hits = sum(1 for p, g in zip(preds, golds) if p == g)
    overall_hits = sum(
        1 for p, g, (pl, gl) in zip(preds, golds, pairs) if p == g and pl == gl
    )
    n = len(golds)
    return precision, recall, f1, intent_hits / n, overall_hits / n


def test_metrics_match_brute_force_recount_on_random_sets():
    rng = random.Random(99)
    intents = ["A", "B", "C"]
    for _ in range(1000):
        n = rng.randint(1, 6)
        preds, golds, pairs = [], [], []
        for _ in range(n):
            gold = _random_label_seq(rng)
            while True:
                try:
                    bio_spans(gold)
                    break
                except ValidationError:
                    gold = _random_label_seq(rng)
            pred = [rng.choice(["O", "B-X", "I-X", "B-Y", "I-Y"]) for _ in gold]
            preds.append(rng.choice(intents))
            golds.append(rng.choice(intents))
            pairs.append((pred, gold))
        report = compute_report(preds, golds, pairs)
        bp, br, bf1, bint, bover = _brute_force_metrics(preds, golds, pairs)
        assert report.slot_precision == bp
        assert report.slot_recall == br
        assert report.slot_f1 == bf1
        assert report.intent_accuracy == bint
        assert report.overall_accuracy == bover
        assert report.overall_accuracy <= report.intent_accuracy


def test_f1_invariant_under_dataset_permutation():
    rng = random.Random(3)
    pairs = []
    for _ in range(20):
        gold = ["O", "B-X", "I-X", "B-Y"]
        pred = [rng.choice(["O", "B-X", "I-X", "B-Y"]) for _ in gold]
        pairs.append((pred, gold))
    base = slot_prf(pairs)
    shuffled = pairs[::-1]
    assert slot_prf(shuffled) == base


def test_confusion_counts_sum_to_n():
    preds = ["A", "B", "A", "A"]
    golds = ["A", "A", "B", "A"]
    pairs = [(["O"], ["O"])] * 4
    report = compute_report(preds, golds, pairs)
    assert sum(c for row in report.confusion.values() for c in row.values()) == 4
    assert report.confusion["A"]["A"] == 2


def test_report_json_round_trip():
    import json

    report = compute_report(["A"], ["A"], [(["B-A.x"], ["B-A.x"])])
    payload = json.loads(report.to_json_line())
    assert payload["overall_accuracy"] == 1.0
    assert payload["n_samples"] == 1
