"""Fixed-size encodings of the three supporting-information sources.

Knowledge-graph entities are linearized to token sequences (key token, then
value tokens, pairs in stored order), run through a BiLSTM, and the final
states of the two directions are concatenated; multiple entities are mean
pooled. User-profile and context vectors are plain linear projections.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import ops
from .data import Vocab
from .errors import ValidationError
from .params import LstmParams
from .tape import Tensor

KG_TOKEN_CAP = 64


@dataclass
class ProfileEncoderParams:
    kg_token_emb: Tensor  # (V_kg, d_emb)
    kg_fwd: LstmParams  # hidden d_i / 2
    kg_bwd: LstmParams
    w_up: Tensor  # (u, d_i)
    w_ca: Tensor  # (c, d_i)

    @property
    def info_dim(self) -> int:
        return 2 * self.kg_fwd.hidden_size


def encode_entity(entity, params: ProfileEncoderParams, vocab: Vocab,
                  cap: int = KG_TOKEN_CAP) -> Tensor:
    tokens = entity.token_sequence(cap)
    if not tokens:
        raise ValidationError("entity linearizes to an empty token sequence")
    ids = [vocab.encode(t) for t in tokens]
    emb = ops.embedding_rows(params.kg_token_emb, ids)
    h_f = ops.lstm_sequence(params.kg_fwd, emb)
    h_b = ops.lstm_sequence(params.kg_bwd, emb, reverse=True)
    return ops.concat([ops.row(h_f, len(ids) - 1), ops.row(h_b, 0)])


def encode_kg(entities, params: ProfileEncoderParams, vocab: Vocab,
              cap: int = KG_TOKEN_CAP) -> Tensor:
    """Mean of per-entity final BiLSTM states; zero vector when no entities."""
    if not entities:
        return Tensor(np.zeros(params.info_dim))
    states = [encode_entity(e, params, vocab, cap) for e in entities]
    if len(states) == 1:
        return states[0]
    return ops.mean_rows(ops.stack_rows(states))


def project_up(x_up: Tensor, params: ProfileEncoderParams) -> Tensor:
    return ops.vecmat(x_up, params.w_up)


def project_ca(x_ca: Tensor, params: ProfileEncoderParams) -> Tensor:
    return ops.vecmat(x_ca, params.w_ca)
