"""Single-file model checkpoints.

JSON with a fixed key order and shortest round-trip float rendering, so a
load -> save cycle is byte-identical.
"""

from __future__ import annotations

import json
from pathlib import Path

from .data import Vocab, Vocabularies
from .errors import CheckpointError, DimensionError
from .model import AblationFlags, ModelConfig, ModelDims, ModelParams, SluModel

FORMAT_TAG = "slukit-checkpoint"
FORMAT_VERSION = 1


def checkpoint_payload(model: SluModel) -> dict:
    cfg = model.config
    dims = cfg.dims
    return {
        "format": FORMAT_TAG,
        "version": FORMAT_VERSION,
        "config": {
            "d_emb": dims.d_emb, "d_r": dims.d_r, "d_a": dims.d_a, "d_i": dims.d_i,
            "d_int": dims.d_int, "d_slot": dims.d_slot, "h_s": dims.h_s,
            "fusion_mode": cfg.fusion_mode,
            "use_profile": cfg.flags.use_profile,
            "use_sentence_adapter": cfg.flags.use_sentence_adapter,
            "use_word_adapter": cfg.flags.use_word_adapter,
            "up_length": cfg.up_length, "ca_length": cfg.ca_length,
        },
        "vocabularies": {
            "tokens": model.vocabs.tokens.items(),
            "intents": model.vocabs.intents.items(),
            "slots": model.vocabs.slots.items(),
            "kg_tokens": model.vocabs.kg_tokens.items(),
        },
        "parameters": {
            name: {"shape": list(t.data.shape), "values": t.data.reshape(-1).tolist()}
            for name, t in model.params.store.items()
        },
    }


def checkpoint_bytes(model: SluModel) -> bytes:
    return (json.dumps(checkpoint_payload(model), separators=(",", ":")) + "\n").encode("utf-8")


def save_checkpoint(model: SluModel, path) -> None:
    Path(path).write_bytes(checkpoint_bytes(model))


def load_checkpoint(path) -> SluModel:
    try:
        payload = json.loads(Path(path).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise CheckpointError(f"cannot read checkpoint {path}: {exc}") from exc
    return model_from_payload(payload)


def model_from_payload(payload: dict) -> SluModel:
    import numpy as np

    if not isinstance(payload, dict) or payload.get("format") != FORMAT_TAG:
        raise CheckpointError("not a slukit checkpoint")
    if payload.get("version") != FORMAT_VERSION:
        raise CheckpointError(
            f"unsupported checkpoint version {payload.get('version')!r} "
            f"(expected {FORMAT_VERSION})"
        )
    try:
        c = payload["config"]
        config = ModelConfig(
            dims=ModelDims(c["d_emb"], c["d_r"], c["d_a"], c["d_i"],
                           c["d_int"], c["d_slot"], c["h_s"]),
            fusion_mode=c["fusion_mode"],
            flags=AblationFlags(c["use_profile"], c["use_sentence_adapter"],
                                c["use_word_adapter"]),
            up_length=c["up_length"],
            ca_length=c["ca_length"],
        )
        v = payload["vocabularies"]
        vocabs = Vocabularies(
            tokens=Vocab(v["tokens"]),
            intents=Vocab(v["intents"]),
            slots=Vocab(v["slots"]),
            kg_tokens=Vocab(v["kg_tokens"]),
        )
        params = ModelParams(config, vocabs, zero_init=True)
        values = {
            name: np.asarray(entry["values"], dtype=np.float64).reshape(entry["shape"])
            for name, entry in payload["parameters"].items()
        }
        missing = [n for n in params.store.names() if n not in values]
        if missing:
            raise CheckpointError(f"checkpoint is missing parameters {missing}")
        params.store.load_values(values)
    except CheckpointError:
        raise
    except (KeyError, TypeError, ValueError, DimensionError) as exc:
        raise CheckpointError(f"malformed checkpoint: {exc}") from exc
    return SluModel(params, vocabs, config)
