"""Joint intent-detection / slot-filling model with multi-level knowledge fusion.

Forward path: shared encoder (embeddings, BiLSTM, scaled dot-product
self-attention over the BiLSTM states, concatenated), sentence
self-attention summary for the intent head, and an intent-guided LSTM slot
decoder. Supporting information enters through a knowledge adapter at the
sentence level (query: the summary vector) and at the word level (query:
each encoder state); concat and mlp fusion variants produce one shared
fused vector instead.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from . import encoders, ops
from .data import Sample, Vocabularies
from .errors import DimensionError, ValidationError
from .params import LstmParams, ParameterStore, glorot, glorot_vector, init_lstm
from .tape import Tensor

FUSION_MODES = ("hierarchical", "concat", "mlp")


@dataclass(frozen=True)
class ModelDims:
    d_emb: int = 32
    d_r: int = 64  # BiLSTM output (half per direction)
    d_a: int = 32  # attention head width
    d_i: int = 32  # information embedding dimension
    d_int: int = 16
    d_slot: int = 16
    h_s: int = 64  # slot decoder hidden size

    def __post_init__(self):
        if self.d_r % 2 or self.d_i % 2:
            raise DimensionError("d_r and d_i must be even (two BiLSTM directions)")

    @property
    def d(self) -> int:
        return self.d_r + self.d_a


@dataclass(frozen=True)
class AblationFlags:
    use_profile: bool = True
    use_sentence_adapter: bool = True
    use_word_adapter: bool = True


@dataclass(frozen=True)
class ModelConfig:
    dims: ModelDims = field(default_factory=ModelDims)
    fusion_mode: str = "hierarchical"
    flags: AblationFlags = field(default_factory=AblationFlags)
    up_length: int = 11
    ca_length: int = 15

    def __post_init__(self):
        if self.fusion_mode not in FUSION_MODES:
            raise ValidationError(f"unknown fusion mode {self.fusion_mode!r}")


class ModelParams:
    """All named parameter tensors; only the active fusion mode's tensors exist."""

    def __init__(self, config: ModelConfig, vocabs: Vocabularies, seed: int = 0,
                 zero_init: bool = False):
        dims = config.dims
        rng = np.random.default_rng(seed)

        def mat(rows, cols):
            return np.zeros((rows, cols)) if zero_init else glorot(rng, rows, cols)

        def vec(n):
            return np.zeros(n) if zero_init else glorot_vector(rng, n)

        store = ParameterStore()
        self.store = store
        self.token_emb = store.add("encoder.token_emb", mat(len(vocabs.tokens), dims.d_emb))
        half = dims.d_r // 2
        self.enc_fwd = self._lstm(store, "encoder.lstm_fwd", dims.d_emb, half, rng, zero_init)
        self.enc_bwd = self._lstm(store, "encoder.lstm_bwd", dims.d_emb, half, rng, zero_init)
        self.wq = store.add("encoder.wq", mat(dims.d_r, dims.d_a))
        self.wk = store.add("encoder.wk", mat(dims.d_r, dims.d_a))
        self.wv = store.add("encoder.wv", mat(dims.d_r, dims.d_a))

        kg_half = dims.d_i // 2
        self.profile = encoders.ProfileEncoderParams(
            kg_token_emb=store.add("kg.token_emb", mat(len(vocabs.kg_tokens), dims.d_emb)),
            kg_fwd=self._lstm(store, "kg.lstm_fwd", dims.d_emb, kg_half, rng, zero_init),
            kg_bwd=self._lstm(store, "kg.lstm_bwd", dims.d_emb, kg_half, rng, zero_init),
            w_up=store.add("profile.w_up", mat(config.up_length, dims.d_i)),
            w_ca=store.add("profile.w_ca", mat(config.ca_length, dims.d_i)),
        )

        if config.fusion_mode == "hierarchical":
            self.w_sent = store.add("adapter.w_sent", mat(dims.d, dims.d_i))
            self.w_word = store.add("adapter.w_word", mat(dims.d, dims.d_i))
        elif config.fusion_mode == "concat":
            self.concat_proj = store.add("adapter.concat_proj", mat(3 * dims.d_i, dims.d_i))
        else:
            self.mlp_w1 = store.add("adapter.mlp_w1", mat(3 * dims.d_i, dims.d_i))
            self.mlp_b1 = store.add("adapter.mlp_b1", np.zeros(dims.d_i))
            self.mlp_w2 = store.add("adapter.mlp_w2", mat(dims.d_i, dims.d_i))

        n_intents = len(vocabs.intents)
        n_slots = len(vocabs.slots)
        self.w_g = store.add("head.w_g", vec(dims.d))
        self.w_intent = store.add("head.w_intent", mat(n_intents, dims.d + dims.d_i))
        self.intent_emb = store.add("head.intent_emb", mat(n_intents, dims.d_int))
        # one extra embedding row: the decoder's start-of-sequence "previous slot"
        self.slot_emb = store.add("head.slot_emb", mat(n_slots + 1, dims.d_slot))
        dec_in = dims.d + dims.d_int + dims.d_slot + dims.d_i
        self.dec = self._lstm(store, "decoder.lstm", dec_in, dims.h_s, rng, zero_init)
        self.w_slot = store.add("decoder.w_slot", mat(n_slots, dims.h_s))

    @staticmethod
    def _lstm(store, prefix, input_dim, hidden, rng, zero_init) -> LstmParams:
        if zero_init:
            w = store.add(f"{prefix}.w", np.zeros((4 * hidden, input_dim)))
            r = store.add(f"{prefix}.r", np.zeros((4 * hidden, hidden)))
            b = store.add(f"{prefix}.b", np.zeros(4 * hidden))
            return LstmParams(w, r, b, hidden)
        return init_lstm(store, prefix, input_dim, hidden, rng)


@dataclass
class ModelOutput:
    """Distributions and predictions for one utterance, plus the attention
    weights used along the way (for inspection and normalization checks)."""

    intent_probs: Tensor  # (n_I,)
    intent_id: int
    intent_label: str
    slot_probs: Tensor  # (T, n_S)
    slot_ids: list
    slot_labels: list
    summary_alpha: np.ndarray  # (T,)
    attention: np.ndarray  # (T, T)
    sentence_alpha: np.ndarray | None  # (3,) adapter weights, hierarchical only
    word_alpha: np.ndarray | None  # (T, 3)

    def slot_prob_rows(self) -> list[np.ndarray]:
        return [self.slot_probs.data[t] for t in range(self.slot_probs.data.shape[0])]


def _argmax(values: np.ndarray) -> int:
    return int(np.argmax(values))  # first maximum: lowest-index tie-break


# ---------------------------------------------------------------------------
# Components


def encode_utterance(token_ids, params: ModelParams, d_a: int):
    """Shared encoding E = [BiLSTM_t ; SelfAttention_t]; returns (E, attention)."""
    if not token_ids:
        raise DimensionError("cannot encode an empty utterance")
    emb = ops.embedding_rows(params.token_emb, token_ids)
    h_f = ops.lstm_sequence(params.enc_fwd, emb)
    h_b = ops.lstm_sequence(params.enc_bwd, emb, reverse=True)
    base = ops.concat([h_f, h_b], axis=1)
    q = ops.matmul(base, params.wq)
    k = ops.matmul(base, params.wk)
    v = ops.matmul(base, params.wv)
    attn = ops.softmax(ops.scale(ops.matmul(q, ops.transpose(k)), 1.0 / math.sqrt(d_a)))
    context = ops.matmul(attn, v)
    e = ops.concat([base, context], axis=1)
    return e, attn


def sentence_summary(e: Tensor, w_g: Tensor):
    """Self-attentive sentence vector g = sum_i alpha_i e_i; returns (g, alpha)."""
    alpha = ops.softmax(ops.matvec(e, w_g))
    return ops.vecmat(alpha, e), alpha


def knowledge_adapter(q: Tensor, h_info: Tensor, w: Tensor):
    """Bilinear attention over the three info vectors; returns (q', alpha)."""
    if h_info.data.ndim != 2:
        raise DimensionError(f"h_info must be (k, d_i), got {h_info.data.shape}")
    scores = ops.matvec(h_info, ops.vecmat(q, w))
    alpha = ops.softmax(scores)
    return ops.vecmat(alpha, h_info), alpha


def word_knowledge_adapter(e: Tensor, h_info: Tensor, w: Tensor):
    """Per-token adapter with each encoder state as query; returns (S_info, alphas)."""
    scores = ops.matmul(ops.matmul(e, w), ops.transpose(h_info))
    alpha = ops.softmax(scores)
    return ops.matmul(alpha, h_info), alpha


def fuse_concat(h_kg: Tensor, h_up: Tensor, h_ca: Tensor, proj: Tensor) -> Tensor:
    return ops.vecmat(ops.concat([h_kg, h_up, h_ca]), proj)


def fuse_mlp(h_kg: Tensor, h_up: Tensor, h_ca: Tensor, w1: Tensor, b1: Tensor,
             w2: Tensor) -> Tensor:
    hidden = ops.tanh(ops.add(ops.vecmat(ops.concat([h_kg, h_up, h_ca]), w1), b1))
    return ops.vecmat(hidden, w2)


def predict_intent(g: Tensor, s_info: Tensor, w_intent: Tensor):
    probs = ops.softmax(ops.matvec(w_intent, ops.concat([g, s_info])))
    return probs, _argmax(probs.data)


def _decoder_input_row(e_t, intent_vec, prev_emb, info_t):
    return ops.concat([e_t, intent_vec, prev_emb, info_t])


def decode_slots_teacher_forced(e: Tensor, intent_id: int, s_info_mat: Tensor,
                                params: ModelParams, gold_ids, dropout=None):
    t_len = e.data.shape[0]
    gold_ids = list(gold_ids)
    if len(gold_ids) != t_len:
        raise DimensionError(
            f"teacher forcing needs {t_len} gold labels, got {len(gold_ids)}"
        )
    start = params.slot_emb.data.shape[0] - 1
    prev_emb = ops.embedding_rows(params.slot_emb, [start] + gold_ids[:-1])
    intent_mat = ops.repeat_row(ops.embedding_lookup(params.intent_emb, intent_id), t_len)
    dec_in = ops.concat([e, intent_mat, prev_emb, s_info_mat], axis=1)
    if dropout is not None:
        dec_in = ops.mul_const(dec_in, _dropout_mask(dropout, dec_in.data.shape))
    h_s = ops.lstm_sequence(params.dec, dec_in)
    probs = ops.softmax(ops.matmul(h_s, ops.transpose(params.w_slot)))
    slot_ids = [_argmax(probs.data[t]) for t in range(t_len)]
    return probs, slot_ids


def decode_slots_greedy(e: Tensor, intent_id: int, s_info_mat: Tensor,
                        params: ModelParams, dropout=None):
    t_len = e.data.shape[0]
    start = params.slot_emb.data.shape[0] - 1
    intent_vec = ops.embedding_lookup(params.intent_emb, intent_id)
    hidden = params.dec.hidden_size
    h = Tensor(np.zeros(hidden))
    c = Tensor(np.zeros(hidden))
    w_slot_t = ops.transpose(params.w_slot)
    prev = start
    prob_rows = []
    slot_ids = []
    for t in range(t_len):
        row_in = _decoder_input_row(
            ops.row(e, t), intent_vec,
            ops.embedding_lookup(params.slot_emb, prev),
            ops.row(s_info_mat, t),
        )
        if dropout is not None:
            row_in = ops.mul_const(row_in, _dropout_mask(dropout, row_in.data.shape))
        h, c = ops.lstm_step(params.dec, row_in, (h, c))
        y_t = ops.softmax(ops.vecmat(h, w_slot_t))
        prob_rows.append(y_t)
        prev = _argmax(y_t.data)
        slot_ids.append(prev)
    return ops.stack_rows(prob_rows), slot_ids


def _dropout_mask(dropout, shape) -> np.ndarray:
    rate, rng = dropout
    if rate <= 0.0:
        return np.ones(shape)
    keep = rng.random(shape) >= rate
    return keep.astype(np.float64) / (1.0 - rate)  # inverted dropout


# ---------------------------------------------------------------------------
# Full model


class SluModel:
    def __init__(self, params: ModelParams, vocabs: Vocabularies, config: ModelConfig):
        self.params = params
        self.vocabs = vocabs
        self.config = config

    @classmethod
    def create(cls, config: ModelConfig, vocabs: Vocabularies, seed: int = 0,
               zero_init: bool = False) -> "SluModel":
        return cls(ModelParams(config, vocabs, seed, zero_init), vocabs, config)

    def with_flags(self, flags: AblationFlags) -> "SluModel":
        return SluModel(self.params, self.vocabs, replace(self.config, flags=flags))

    def _info_vectors(self, sample: Sample):
        h_kg = encoders.encode_kg(sample.kg, self.params.profile, self.vocabs.kg_tokens)
        h_up = encoders.project_up(Tensor(np.array(sample.up)), self.params.profile)
        h_ca = encoders.project_ca(Tensor(np.array(sample.ca)), self.params.profile)
        return h_kg, h_up, h_ca

    def forward(self, sample: Sample, mode: str = "greedy", dropout=None) -> ModelOutput:
        """Run the model on one sample.

        ``mode`` is "greedy" or "teacher" (teacher-forced previous slot labels,
        used for training); ``dropout`` is None or (rate, numpy Generator).
        """
        cfg = self.config
        flags = cfg.flags
        dims = cfg.dims
        token_ids = [self.vocabs.tokens.encode(t) for t in sample.tokens]
        e, attn = encode_utterance(token_ids, self.params, dims.d_a)
        if dropout is not None:
            e = ops.mul_const(e, _dropout_mask(dropout, e.data.shape))
        g, summary_alpha = sentence_summary(e, self.params.w_g)

        t_len = len(token_ids)
        sent_alpha = word_alpha = None
        if flags.use_profile:
            h_kg, h_up, h_ca = self._info_vectors(sample)
            if cfg.fusion_mode == "hierarchical":
                h_info = ops.stack_rows([h_kg, h_up, h_ca])
                if flags.use_sentence_adapter:
                    s_info, alpha = knowledge_adapter(g, h_info, self.params.w_sent)
                    sent_alpha = alpha.data.copy()
                else:
                    s_info = ops.zeros(dims.d_i)
                if flags.use_word_adapter:
                    s_info_mat, alphas = word_knowledge_adapter(e, h_info, self.params.w_word)
                    word_alpha = alphas.data.copy()
                else:
                    s_info_mat = ops.zeros((t_len, dims.d_i))
            else:
                if cfg.fusion_mode == "concat":
                    fused = fuse_concat(h_kg, h_up, h_ca, self.params.concat_proj)
                else:
                    fused = fuse_mlp(h_kg, h_up, h_ca, self.params.mlp_w1,
                                     self.params.mlp_b1, self.params.mlp_w2)
                s_info = fused if flags.use_sentence_adapter else ops.zeros(dims.d_i)
                s_info_mat = (ops.repeat_row(fused, t_len) if flags.use_word_adapter
                              else ops.zeros((t_len, dims.d_i)))
        else:
            s_info = ops.zeros(dims.d_i)
            s_info_mat = ops.zeros((t_len, dims.d_i))

        intent_probs, intent_id = predict_intent(g, s_info, self.params.w_intent)

        if mode == "teacher":
            gold_ids = [self.vocabs.slots.encode(l) for l in sample.slot_labels]
            slot_probs, slot_ids = decode_slots_teacher_forced(
                e, intent_id, s_info_mat, self.params, gold_ids, dropout)
        elif mode == "greedy":
            slot_probs, slot_ids = decode_slots_greedy(
                e, intent_id, s_info_mat, self.params, dropout)
        else:
            raise ValidationError(f"unknown decode mode {mode!r}")

        return ModelOutput(
            intent_probs=intent_probs,
            intent_id=intent_id,
            intent_label=self.vocabs.intents.decode(intent_id),
            slot_probs=slot_probs,
            slot_ids=slot_ids,
            slot_labels=[self.vocabs.slots.decode(i) for i in slot_ids],
            summary_alpha=summary_alpha.data.copy(),
            attention=attn.data.copy(),
            sentence_alpha=sent_alpha,
            word_alpha=word_alpha,
        )
