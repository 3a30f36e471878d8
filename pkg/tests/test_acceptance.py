"""Acceptance criteria, one test per criterion.

The heavy fixtures are session-scoped: the desk-scale dataset (3000 samples,
default config) is generated once through the CLI, and the six-cell ablation
grid is trained once and shared by criteria 5-7. Each test prints a PASS line
when its criterion holds.
"""

import json
import random
import time
from pathlib import Path

import numpy as np
import pytest

from conftest import make_tiny_model
from test_metrics import _brute_force_metrics, _random_label_seq

from slukit.checkpoint import checkpoint_bytes, load_checkpoint
from slukit.cli import (EXIT_OK, cmd_generate, cmd_gradcheck, load_config,
                        run_ablation)
from slukit.data import (Sample, bio_spans, build_vocabularies, load_dataset,
                         parse_sample, serialize_sample)
from slukit.errors import ValidationError
from slukit.generator import gold_intent_oracle, text_only_ceiling
from slukit.metrics import compute_report, evaluate_model
from slukit.model import AblationFlags, knowledge_adapter
from slukit.tape import Tensor

CEILING = 5.0 / 14.0


def _pass(number: int, text: str) -> None:
    print(f"[criterion {number:02d}] PASS {text}")


@pytest.fixture(scope="session")
def desk_config():
    return load_config(None)  # pure defaults; all seeds pinned by the schema


@pytest.fixture(scope="session")
def desk_dir(tmp_path_factory, desk_config):
    out = tmp_path_factory.mktemp("desk") / "data"
    assert cmd_generate(desk_config, str(out)) == EXIT_OK
    return out


@pytest.fixture(scope="session")
def desk_splits(desk_dir):
    splits, schema, desc = load_dataset(desk_dir)
    return splits, schema, desc


@pytest.fixture(scope="session")
def ablation(tmp_path_factory, desk_config, desk_dir):
    out = tmp_path_factory.mktemp("ablate")
    table = run_ablation(desk_config, str(desk_dir), str(out))
    return {cell["name"]: cell for cell in table["cells"]}, out


# ---------------------------------------------------------------------------
# 1. gradient fidelity


def test_criterion_01_gradient_fidelity(desk_config):
    started = time.perf_counter()
    code = cmd_gradcheck(desk_config)
    elapsed = time.perf_counter() - started
    assert code == EXIT_OK  # enforces max relative error < 1e-4
    assert elapsed < 60.0, f"gradcheck took {elapsed:.1f}s"
    _pass(1, f"full-model gradient check < 1e-4 in {elapsed:.1f}s")


# ---------------------------------------------------------------------------
# 2. normalization suite


def test_criterion_02_softmax_families_normalize(tiny_pack, catalog):
    samples, vocabs = tiny_pack
    checked = 0
    for seed in range(10):
        model = make_tiny_model(vocabs, catalog, seed=100 + seed)
        for sample in samples[:10]:
            out = model.forward(sample)
            assert np.max(np.abs(out.attention.sum(axis=1) - 1.0)) <= 1e-9
            assert abs(out.summary_alpha.sum() - 1.0) <= 1e-9
            assert abs(out.sentence_alpha.sum() - 1.0) <= 1e-9
            assert np.max(np.abs(out.word_alpha.sum(axis=1) - 1.0)) <= 1e-9
            assert abs(out.intent_probs.data.sum() - 1.0) <= 1e-9
            assert np.max(np.abs(out.slot_probs.data.sum(axis=1) - 1.0)) <= 1e-9
            checked += 1
    assert checked == 100
    _pass(2, "all five softmax families sum to 1 +- 1e-9 over 100 forwards")


# ---------------------------------------------------------------------------
# 3. adapter identities


def test_criterion_03_adapter_identities():
    rng = np.random.default_rng(17)
    # equal info vectors pass through
    for _ in range(100):
        v = rng.normal(size=4)
        h = Tensor(np.tile(v, (3, 1)))
        out, _ = knowledge_adapter(Tensor(rng.normal(size=5)), h,
                                   Tensor(rng.normal(size=(5, 4))))
        assert np.max(np.abs(out.data - v)) <= 1e-9
    # zero bilinear form gives exact thirds
    for _ in range(100):
        h = Tensor(rng.normal(size=(3, 4)))
        _, alpha = knowledge_adapter(Tensor(rng.normal(size=5)), h,
                                     Tensor(np.zeros((5, 4))))
        assert np.max(np.abs(alpha.data - 1.0 / 3.0)) <= 1e-12
    # convex hull bound
    for _ in range(1000):
        h = rng.normal(size=(3, int(rng.integers(1, 6))))
        out, _ = knowledge_adapter(Tensor(rng.normal(size=4)), Tensor(h),
                                   Tensor(rng.normal(size=(4, h.shape[1]))))
        assert np.all(out.data >= h.min(axis=0) - 1e-9)
        assert np.all(out.data <= h.max(axis=0) + 1e-9)
    _pass(3, "pass-through, uniform-alpha and convex-hull identities hold")


# ---------------------------------------------------------------------------
# 4. profile blindness


def test_criterion_04_profile_blindness(tiny_pack, catalog):
    samples, vocabs = tiny_pack
    model = make_tiny_model(vocabs, catalog, seed=41,
                            flags=AblationFlags(use_profile=False))
    rng = random.Random(4)
    cases = 0
    while cases < 100:
        sample = samples[cases % len(samples)]
        donor = samples[rng.randrange(len(samples))]
        mutated = Sample(sample.tokens, sample.slot_labels, sample.intent,
                         donor.kg, donor.up, donor.ca, sample.case_kind)
        base = model.forward(sample)
        other = model.forward(mutated)
        assert np.array_equal(base.intent_probs.data, other.intent_probs.data)
        assert np.array_equal(base.slot_probs.data, other.slot_probs.data)
        assert base.slot_ids == other.slot_ids
        cases += 1
    _pass(4, "no-profile forward is bitwise invariant to KG/UP/CA on 100 cases")


# ---------------------------------------------------------------------------
# 5-7. desk-scale training analogues (shared ablation grid)


def test_criterion_05_text_only_ceiling(ablation, catalog):
    cells, _ = ablation
    cell = cells["no_profile"]
    low, high = CEILING - 0.05, CEILING + 0.05
    assert low <= cell["intent_accuracy"] <= high, cell
    assert cell["train_seconds"] <= 600.0
    assert text_only_ceiling(catalog) == pytest.approx(CEILING)
    _pass(5, f"no-profile intent accuracy {cell['intent_accuracy']:.4f} within "
             f"[{low:.4f}, {high:.4f}], trained in {cell['train_seconds']:.0f}s")


def test_criterion_06_profile_benefit(ablation):
    cells, _ = ablation
    full = cells["full"]
    blind = cells["no_profile"]
    assert full["overall_accuracy"] >= 0.90, full
    margin = full["overall_accuracy"] - blind["overall_accuracy"]
    assert margin >= 0.40, (full, blind)
    _pass(6, f"full model overall {full['overall_accuracy']:.4f} >= 0.90, "
             f"margin over no-profile {margin:+.4f} >= 0.40")


def test_criterion_07_adapter_ablations(ablation):
    cells, _ = ablation
    no_sentence = cells["no_sentence_adapter"]
    no_word = cells["no_word_adapter"]
    full = cells["full"]
    blind = cells["no_profile"]
    assert no_sentence["intent_accuracy"] <= CEILING + 0.10, no_sentence
    assert no_word["slot_f1"] < full["slot_f1"], (no_word, full)
    assert CEILING - 0.05 <= blind["intent_accuracy"] <= CEILING + 0.05
    _pass(7, f"w/o sentence adapter intent {no_sentence['intent_accuracy']:.4f} "
             f"<= {CEILING + 0.10:.4f}; w/o word adapter slot F1 "
             f"{no_word['slot_f1']:.4f} < full {full['slot_f1']:.4f}")


# ---------------------------------------------------------------------------
# 8. metric oracles


def test_criterion_08_metric_oracles():
    rng = random.Random(808)
    intents = ["A", "B", "C", "D"]
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
        assert (report.slot_precision, report.slot_recall, report.slot_f1) == (bp, br, bf1)
        assert report.intent_accuracy == bint
        assert report.overall_accuracy == bover
        assert report.overall_accuracy <= report.intent_accuracy
    _pass(8, "metrics match brute-force recounts exactly on 1000 random sets")


# ---------------------------------------------------------------------------
# 9. generator contract


def test_criterion_09_generator_contract(desk_config, desk_dir, desk_splits,
                                          catalog, tables, tmp_path_factory):
    splits, _, _ = desk_splits
    samples = splits["train"] + splits["valid"] + splits["test"]
    assert len(samples) == 3000
    for sample in samples:
        members = catalog.group_members(catalog.intents[sample.intent].group)
        assert gold_intent_oracle(members, sample.kg, sample.up, sample.ca,
                                  tables) == sample.intent
    kinds = [s.case_kind for s in samples]
    assert kinds.count("mention") == 2000 and kinds.count("description") == 1000
    second = tmp_path_factory.mktemp("desk-again") / "data"
    assert cmd_generate(desk_config, str(second)) == EXIT_OK
    for name in ("train.jsonl", "valid.jsonl", "test.jsonl", "schema.json",
                 "stats.json", "stats.txt"):
        assert (desk_dir / name).read_bytes() == (second / name).read_bytes()
    _pass(9, "oracle replay 3000/3000, mention:description exactly 2000:1000, "
             "regeneration byte-identical")


def test_criterion_09b_vocabulary_covers_generator_inventory(desk_splits, catalog):
    from slukit.generator import slot_label_inventory

    splits, _, desc = desk_splits
    vocabs = build_vocabularies(splits["train"])
    assert sorted(vocabs.slots.items()) == slot_label_inventory(catalog)
    assert sorted(desc["slot_labels"]) == slot_label_inventory(catalog)


# ---------------------------------------------------------------------------
# 10. round trips


def test_criterion_10_round_trips(desk_splits, ablation):
    splits, _, _ = desk_splits
    for sample in splits["train"][:1000]:
        line = serialize_sample(sample)
        assert parse_sample(line) == sample
        assert serialize_sample(parse_sample(line)) == line
    cells, out_dir = ablation
    ckpt_path = Path(out_dir) / "cells" / "full" / "best.ckpt"
    loaded = load_checkpoint(ckpt_path)
    assert checkpoint_bytes(loaded) == ckpt_path.read_bytes()
    first = evaluate_model(loaded, splits["test"][:50]).to_json_line()
    second = evaluate_model(load_checkpoint(ckpt_path), splits["test"][:50]).to_json_line()
    assert first == second
    _pass(10, "1000-sample serialize/parse identity; checkpoint resave and "
              "re-evaluation byte-identical")


# ---------------------------------------------------------------------------
# 11. training determinism


def test_criterion_11_training_determinism(desk_splits, tmp_path_factory):
    splits, schema, _ = desk_splits
    from slukit.model import ModelConfig
    from slukit.train import TrainConfig, train

    vocabs = build_vocabularies(splits["train"][:240])
    mc = ModelConfig(up_length=schema.up_length, ca_length=schema.ca_length)
    tc = TrainConfig(epochs=4, seed=13)

    outputs = []
    for run in range(2):
        out = tmp_path_factory.mktemp(f"det{run}") / "run"
        result = train(mc, tc, splits["train"][:240], splits["valid"][:60], vocabs,
                       out_dir=out)
        outputs.append((
            (out / "best.ckpt").read_bytes(),
            (out / "train_log.txt").read_bytes(),
            checkpoint_bytes(result.model),
        ))
    assert outputs[0] == outputs[1]
    _pass(11, "two identical runs produce bit-identical checkpoints and logs")
