"""Batch command-line interface: generate / train / eval / gradcheck / ablate.

All randomness flows from config seeds; no timestamps or environment state
enter any output, so identical invocations produce identical files.

Exit codes: 0 success, 2 config error, 3 data error, 4 numeric error
(divergence, failed gradient check, non-determinism), 5 generation error,
6 checkpoint error.
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from dataclasses import replace
from pathlib import Path

from .checkpoint import load_checkpoint
from .data import build_vocabularies, load_dataset, write_dataset
from .errors import (CheckpointError, ConfigError, DeterminismError, DomainError,
                     GenerationError, NumericError, ParseError, SlukitError,
                     ValidationError)
from .generator import (GeneratorConfig, dataset_statistics, default_catalog,
                        default_tables, format_statistics, generate_dataset,
                        slot_label_inventory)
from .gradcheck import finite_diff_check
from .metrics import evaluate_model
from .model import FUSION_MODES, AblationFlags, ModelConfig, ModelDims, SluModel
from .train import TrainConfig, joint_loss, train

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_DATA = 3
EXIT_NUMERIC = 4
EXIT_GENERATION = 5
EXIT_CHECKPOINT = 6

GRADCHECK_TOLERANCE = 1e-4

# key -> (type, default, help)
CONFIG_SCHEMA = {
    "n_samples": (int, 3000, "number of samples to generate"),
    "seed": (int, 7, "generator seed"),
    "mention_ratio": (float, 2.0 / 3.0, "fraction of mention-ambiguity cases"),
    "resolvability_margin": (float, 0.1, "required oracle margin factor minus 1"),
    "max_rejections": (int, 100, "profile redraw budget per sample"),
    "train_fraction": (float, 0.8, "train split fraction"),
    "valid_fraction": (float, 0.1, "validation split fraction"),
    "test_fraction": (float, 0.1, "test split fraction"),
    "d_emb": (int, 32, "token embedding dimension"),
    "d_r": (int, 64, "utterance BiLSTM output width (both directions)"),
    "d_a": (int, 32, "self-attention width"),
    "d_i": (int, 32, "information embedding dimension"),
    "d_int": (int, 16, "intent embedding dimension"),
    "d_slot": (int, 16, "slot embedding dimension"),
    "h_s": (int, 64, "slot decoder hidden size"),
    "fusion_mode": (str, "hierarchical", "hierarchical | concat | mlp"),
    "use_profile": (bool, True, "inject supporting information at all"),
    "use_sentence_adapter": (bool, True, "sentence-level injection"),
    "use_word_adapter": (bool, True, "word-level injection"),
    "epochs": (int, 30, "maximum training epochs"),
    "batch_size": (int, 16, "samples per optimizer step"),
    "learning_rate": (float, 1e-3, "Adam step size"),
    "adam_beta1": (float, 0.9, "Adam first-moment decay"),
    "adam_beta2": (float, 0.999, "Adam second-moment decay"),
    "adam_eps": (float, 1e-8, "Adam denominator epsilon"),
    "l2_lambda": (float, 1e-6, "decoupled L2 decay"),
    "dropout_rate": (float, 0.4, "inverted dropout rate (training only)"),
    "train_seed": (int, 13, "training seed (init, shuffle, dropout)"),
    "patience": (int, 8, "early-stopping patience in epochs"),
    "teacher_forcing": (bool, True, "feed gold previous slots while training"),
    "gradcheck_eps": (float, 1e-3, "central-difference step"),
    "gradcheck_batch": (int, 4, "samples in the gradient-check batch"),
    "gradcheck_d_emb": (int, 8, "gradcheck model: token embedding dim"),
    "gradcheck_d_r": (int, 12, "gradcheck model: BiLSTM width"),
    "gradcheck_d_a": (int, 8, "gradcheck model: attention width"),
    "gradcheck_d_i": (int, 8, "gradcheck model: information dim"),
    "gradcheck_d_int": (int, 4, "gradcheck model: intent embedding dim"),
    "gradcheck_d_slot": (int, 4, "gradcheck model: slot embedding dim"),
    "gradcheck_h_s": (int, 10, "gradcheck model: decoder hidden size"),
}


def validate_config(raw: dict) -> dict:
    cfg = {key: default for key, (_, default, _) in CONFIG_SCHEMA.items()}
    for key, value in raw.items():
        if key not in CONFIG_SCHEMA:
            raise ConfigError(f"unknown configuration key {key!r}")
        expected = CONFIG_SCHEMA[key][0]
        if expected is bool:
            if not isinstance(value, bool):
                raise ConfigError(f"{key} must be a boolean, got {value!r}")
        elif expected is int:
            if isinstance(value, bool) or not isinstance(value, int):
                raise ConfigError(f"{key} must be an integer, got {value!r}")
        elif expected is float:
            if isinstance(value, bool) or not isinstance(value, (int, float)):
                raise ConfigError(f"{key} must be a number, got {value!r}")
            value = float(value)
        elif not isinstance(value, str):
            raise ConfigError(f"{key} must be a string, got {value!r}")
        cfg[key] = value
    if cfg["fusion_mode"] not in FUSION_MODES:
        raise ConfigError(f"fusion_mode must be one of {FUSION_MODES}")
    return cfg


def load_config(path: str | None, seed: int | None = None) -> dict:
    raw = {}
    if path is not None:
        try:
            raw = json.loads(Path(path).read_text(encoding="utf-8"))
        except OSError as exc:
            raise ConfigError(f"cannot read config file {path}: {exc}") from exc
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config file {path} is not valid JSON: {exc}") from exc
        if not isinstance(raw, dict):
            raise ConfigError("config file must hold a JSON object")
    cfg = validate_config(raw)
    if seed is not None:
        cfg["seed"] = seed
        cfg["train_seed"] = seed
    return cfg


def generator_config(cfg: dict) -> GeneratorConfig:
    return GeneratorConfig(
        n_samples=cfg["n_samples"], seed=cfg["seed"],
        mention_ratio=cfg["mention_ratio"],
        resolvability_margin=cfg["resolvability_margin"],
        max_rejections=cfg["max_rejections"],
        train_fraction=cfg["train_fraction"], valid_fraction=cfg["valid_fraction"],
        test_fraction=cfg["test_fraction"],
    )


def model_config(cfg: dict, up_length: int, ca_length: int) -> ModelConfig:
    return ModelConfig(
        dims=ModelDims(cfg["d_emb"], cfg["d_r"], cfg["d_a"], cfg["d_i"],
                       cfg["d_int"], cfg["d_slot"], cfg["h_s"]),
        fusion_mode=cfg["fusion_mode"],
        flags=AblationFlags(cfg["use_profile"], cfg["use_sentence_adapter"],
                            cfg["use_word_adapter"]),
        up_length=up_length, ca_length=ca_length,
    )


def train_config(cfg: dict) -> TrainConfig:
    return TrainConfig(
        epochs=cfg["epochs"], batch_size=cfg["batch_size"],
        learning_rate=cfg["learning_rate"], adam_beta1=cfg["adam_beta1"],
        adam_beta2=cfg["adam_beta2"], adam_eps=cfg["adam_eps"],
        l2_lambda=cfg["l2_lambda"], dropout_rate=cfg["dropout_rate"],
        seed=cfg["train_seed"], patience=cfg["patience"],
        teacher_forcing=cfg["teacher_forcing"],
    )


# ---------------------------------------------------------------------------
# Commands


def cmd_generate(cfg: dict, out_dir: str) -> int:
    catalog = default_catalog()
    tables = default_tables()
    splits = generate_dataset(generator_config(cfg), catalog, tables)
    stats = dataset_statistics(splits, catalog)
    write_dataset(out_dir, splits.as_dict(), catalog.schema,
                  catalog.intent_order(), slot_label_inventory(catalog))
    out = Path(out_dir)
    (out / "stats.json").write_text(
        json.dumps(stats, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    (out / "stats.txt").write_text(format_statistics(stats), encoding="utf-8")
    print(f"wrote {stats['n_utterances']} samples to {out_dir}")
    return EXIT_OK


def _prepare_training(cfg: dict, data_dir: str):
    splits, schema, _ = load_dataset(data_dir)
    vocabs = build_vocabularies(splits["train"])
    return splits, vocabs, model_config(cfg, schema.up_length, schema.ca_length)


def cmd_train(cfg: dict, data_dir: str, out_dir: str) -> int:
    splits, vocabs, mc = _prepare_training(cfg, data_dir)
    result = train(mc, train_config(cfg), splits["train"], splits["valid"], vocabs,
                   out_dir=out_dir)
    best = result.best_model()
    report = evaluate_model(best, splits["test"])
    out = Path(out_dir)
    (out / "report.json").write_text(report.to_json_line() + "\n", encoding="utf-8")
    (out / "report.txt").write_text(report.format_table(), encoding="utf-8")
    print(f"best epoch {result.best_epoch}; test metrics:")
    print(report.format_table(), end="")
    return EXIT_OK


def cmd_eval(checkpoint_path: str, data_dir: str, split: str,
             out_dir: str | None = None, use_profile: bool | None = None,
             use_sentence_adapter: bool | None = None,
             use_word_adapter: bool | None = None) -> int:
    model = load_checkpoint(checkpoint_path)
    flags = model.config.flags
    if use_profile is not None:
        flags = replace(flags, use_profile=use_profile)
    if use_sentence_adapter is not None:
        flags = replace(flags, use_sentence_adapter=use_sentence_adapter)
    if use_word_adapter is not None:
        flags = replace(flags, use_word_adapter=use_word_adapter)
    model = model.with_flags(flags)
    splits, _, _ = load_dataset(data_dir)
    if split not in splits:
        raise ConfigError(f"unknown split {split!r}")
    report = evaluate_model(model, splits[split])
    print(report.format_table(), end="")
    if out_dir is not None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        (out / "report.json").write_text(report.to_json_line() + "\n", encoding="utf-8")
        (out / "report.txt").write_text(report.format_table(), encoding="utf-8")
    return EXIT_OK


def cmd_gradcheck(cfg: dict) -> int:
    catalog = default_catalog()
    tables = default_tables()
    gen_cfg = GeneratorConfig(n_samples=cfg["gradcheck_batch"], seed=cfg["seed"],
                              resolvability_margin=cfg["resolvability_margin"],
                              max_rejections=cfg["max_rejections"])
    batch = generate_dataset(gen_cfg, catalog, tables).all_samples()
    vocabs = build_vocabularies(batch)
    mc = ModelConfig(
        dims=ModelDims(cfg["gradcheck_d_emb"], cfg["gradcheck_d_r"], cfg["gradcheck_d_a"],
                       cfg["gradcheck_d_i"], cfg["gradcheck_d_int"], cfg["gradcheck_d_slot"],
                       cfg["gradcheck_h_s"]),
        fusion_mode=cfg["fusion_mode"],
        flags=AblationFlags(cfg["use_profile"], cfg["use_sentence_adapter"],
                            cfg["use_word_adapter"]),
        up_length=catalog.schema.up_length, ca_length=catalog.schema.ca_length,
    )
    model = SluModel.create(mc, vocabs, seed=cfg["train_seed"])

    from . import ops

    def loss_fn(_store):
        losses = [joint_loss(model.forward(s, mode="teacher"), s, vocabs) for s in batch]
        return ops.scale(ops.add_n(losses), 1.0 / len(losses))

    report = finite_diff_check(loss_fn, model.params.store, eps=cfg["gradcheck_eps"])
    for line in report.format_lines():
        print(line)
    if report.max_relative_error >= GRADCHECK_TOLERANCE:
        print(f"FAIL: max relative error {report.max_relative_error:.3e} "
              f">= {GRADCHECK_TOLERANCE:.0e}", file=sys.stderr)
        return EXIT_NUMERIC
    return EXIT_OK


ABLATION_CELLS = (
    ("full", "hierarchical", AblationFlags()),
    ("no_sentence_adapter", "hierarchical", AblationFlags(use_sentence_adapter=False)),
    ("no_word_adapter", "hierarchical", AblationFlags(use_word_adapter=False)),
    ("no_profile", "hierarchical", AblationFlags(use_profile=False)),
    ("concat", "concat", AblationFlags()),
    ("mlp", "mlp", AblationFlags()),
)


def run_ablation(cfg: dict, data_dir: str, out_dir: str) -> dict:
    """Train and evaluate the fixed ablation grid; returns the combined table."""
    splits, schema, _ = load_dataset(data_dir)
    vocabs = build_vocabularies(splits["train"])
    tc = train_config(cfg)
    out = Path(out_dir)
    cells = []
    for name, fusion, flags in ABLATION_CELLS:
        mc = ModelConfig(
            dims=ModelDims(cfg["d_emb"], cfg["d_r"], cfg["d_a"], cfg["d_i"],
                           cfg["d_int"], cfg["d_slot"], cfg["h_s"]),
            fusion_mode=fusion, flags=flags,
            up_length=schema.up_length, ca_length=schema.ca_length,
        )
        started = time.perf_counter()
        result = train(mc, tc, splits["train"], splits["valid"], vocabs,
                       out_dir=out / "cells" / name)
        seconds = time.perf_counter() - started
        report = evaluate_model(result.best_model(), splits["test"])
        cells.append({
            "name": name,
            "fusion_mode": fusion,
            "use_profile": flags.use_profile,
            "use_sentence_adapter": flags.use_sentence_adapter,
            "use_word_adapter": flags.use_word_adapter,
            "best_epoch": result.best_epoch,
            "train_seconds": seconds,
            "slot_f1": report.slot_f1,
            "intent_accuracy": report.intent_accuracy,
            "overall_accuracy": report.overall_accuracy,
        })
    # wall times stay out of the written files so identical invocations
    # produce identical directories; they are printed and returned instead
    file_cells = [{k: v for k, v in cell.items() if k != "train_seconds"}
                  for cell in cells]
    out.mkdir(parents=True, exist_ok=True)
    (out / "ablation.json").write_text(
        json.dumps({"cells": file_cells}, indent=2) + "\n", encoding="utf-8")
    (out / "ablation.txt").write_text(format_ablation_table(file_cells), encoding="utf-8")
    return {"cells": cells}


def format_ablation_table(cells) -> str:
    timed = all("train_seconds" in cell for cell in cells)
    header = f"{'cell':<22} {'Slot (F1)':>10} {'Intent (Acc)':>13} {'Overall (Acc)':>14}"
    if timed:
        header += f" {'sec':>7}"
    lines = [header, "-" * len(header)]
    for cell in cells:
        row = (f"{cell['name']:<22} {cell['slot_f1']:>10.4f} "
               f"{cell['intent_accuracy']:>13.4f} {cell['overall_accuracy']:>14.4f}")
        if timed:
            row += f" {cell['train_seconds']:>7.1f}"
        lines.append(row)
    return "\n".join(lines) + "\n"


def cmd_ablate(cfg: dict, data_dir: str, out_dir: str) -> int:
    table = run_ablation(cfg, data_dir, out_dir)
    print(format_ablation_table(table["cells"]), end="")
    return EXIT_OK


# ---------------------------------------------------------------------------
# Argument parsing


def _schema_help() -> str:
    lines = ["configuration keys (JSON object in the config file):"]
    for key, (typ, default, text) in CONFIG_SCHEMA.items():
        lines.append(f"  {key:<22} {typ.__name__:<6} default={default!r:<22} {text}")
    lines.append("")
    lines.append("exit codes: 0 success, 2 config error, 3 data error, "
                 "4 numeric error, 5 generation error, 6 checkpoint error")
    return "\n".join(lines)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="slukit",
        description="Profile-aware spoken language understanding experiments.",
        epilog=_schema_help(),
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_config_args(p):
        p.add_argument("config_positional", nargs="?", metavar="CONFIG",
                       help="config file path (JSON)")
        p.add_argument("--config", help="config file path (JSON)")
        p.add_argument("--seed", type=int, help="override generator and training seeds")

    p = sub.add_parser("generate", help="write a synthetic dataset directory")
    add_config_args(p)
    p.add_argument("--out", required=True, help="output dataset directory")

    p = sub.add_parser("train", help="train a model on a dataset directory")
    add_config_args(p)
    p.add_argument("--data", required=True, help="dataset directory")
    p.add_argument("--out", required=True, help="run directory")
    p.add_argument("--gradcheck", action="store_true",
                   help="run the finite-difference check first; abort on failure")

    p = sub.add_parser("eval", help="evaluate a checkpoint")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--data", required=True, help="dataset directory")
    p.add_argument("--split", default="test", choices=("train", "valid", "test"))
    p.add_argument("--out", help="directory for report files")
    p.add_argument("--use-profile", action=argparse.BooleanOptionalAction, default=None)
    p.add_argument("--use-sentence-adapter", action=argparse.BooleanOptionalAction, default=None)
    p.add_argument("--use-word-adapter", action=argparse.BooleanOptionalAction, default=None)

    p = sub.add_parser("gradcheck", help="finite-difference check of the full model")
    add_config_args(p)

    p = sub.add_parser("ablate", help="run the fixed ablation grid")
    add_config_args(p)
    p.add_argument("--data", required=True, help="dataset directory")
    p.add_argument("--out", required=True, help="output directory")
    return parser


def _config_path(args) -> str | None:
    if args.config_positional and args.config:
        raise ConfigError("config given both positionally and via --config")
    return args.config_positional or args.config


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "generate":
            return cmd_generate(load_config(_config_path(args), args.seed), args.out)
        if args.command == "train":
            cfg = load_config(_config_path(args), args.seed)
            if args.gradcheck:
                code = cmd_gradcheck(cfg)
                if code != EXIT_OK:
                    return code
            return cmd_train(cfg, args.data, args.out)
        if args.command == "eval":
            return cmd_eval(args.checkpoint, args.data, args.split, args.out,
                            args.use_profile, args.use_sentence_adapter,
                            args.use_word_adapter)
        if args.command == "gradcheck":
            return cmd_gradcheck(load_config(_config_path(args), args.seed))
        if args.command == "ablate":
            return cmd_ablate(load_config(_config_path(args), args.seed), args.data, args.out)
        raise ConfigError(f"unknown command {args.command!r}")
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except CheckpointError as exc:
        print(f"checkpoint error: {exc}", file=sys.stderr)
        return EXIT_CHECKPOINT
    except GenerationError as exc:
        print(f"generation error: {exc}", file=sys.stderr)
        return EXIT_GENERATION
    except (NumericError, DeterminismError) as exc:
        print(f"numeric error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (ParseError, ValidationError, DomainError, IndexError) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except SlukitError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
