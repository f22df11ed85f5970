"""Shared differentiable building blocks: embeddings, transformer encoder
layers, attention pooling, the matching head, and the cross-entropy loss.

Encoder layers use the pre-norm arrangement with multi-head self-attention
and a 4x GELU feed-forward; key-side masking sets attention logits to -inf
so padded positions receive exactly zero weight.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import instrument
from . import tensor as T
from .tensor import Tensor

NEG_INF = -np.inf


def key_mask_bias(attention_mask):
    """(B, L) {0,1} mask -> (B, 1, 1, L) additive bias for attention logits."""
    m = np.asarray(attention_mask, dtype=np.float64)
    bias = np.where(m > 0.0, 0.0, NEG_INF)
    return bias[:, None, None, :]


def _normal(rng, shape, std):
    return Tensor(rng.normal(0.0, std, size=shape), requires_grad=True)


def _zeros(shape):
    return Tensor(np.zeros(shape), requires_grad=True)


def _ones(shape):
    return Tensor(np.ones(shape), requires_grad=True)


@dataclass
class TransformerLayerParams:
    """One encoder layer; all matrices sized by the hidden width d_h."""

    wq: Tensor
    bq: Tensor
    wk: Tensor
    bk: Tensor
    wv: Tensor
    bv: Tensor
    wo: Tensor
    bo: Tensor
    ln1_g: Tensor
    ln1_b: Tensor
    w1: Tensor
    b1: Tensor
    w2: Tensor
    b2: Tensor
    ln2_g: Tensor
    ln2_b: Tensor
    n_heads: int

    @classmethod
    def init(cls, d_h, n_heads, rng, std=0.02):
        if d_h % n_heads != 0:
            raise ValueError(f"head count {n_heads} must divide d_h {d_h}")
        f = 4 * d_h
        return cls(
            wq=_normal(rng, (d_h, d_h), std),
            bq=_zeros(d_h),
            wk=_normal(rng, (d_h, d_h), std),
            bk=_zeros(d_h),
            wv=_normal(rng, (d_h, d_h), std),
            bv=_zeros(d_h),
            wo=_normal(rng, (d_h, d_h), std),
            bo=_zeros(d_h),
            ln1_g=_ones(d_h),
            ln1_b=_zeros(d_h),
            w1=_normal(rng, (d_h, f), std),
            b1=_zeros(f),
            w2=_normal(rng, (f, d_h), std),
            b2=_zeros(d_h),
            ln2_g=_ones(d_h),
            ln2_b=_zeros(d_h),
            n_heads=n_heads,
        )

    def named_tensors(self, prefix):
        for name in ("wq", "bq", "wk", "bk", "wv", "bv", "wo", "bo",
                     "ln1_g", "ln1_b", "w1", "b1", "w2", "b2", "ln2_g", "ln2_b"):
            yield f"{prefix}/{name}", getattr(self, name)


def _split_heads(x, n_heads):
    # (B, L, D) -> (B, H, L, D/H)
    b, l, d = x.shape
    x = T.reshape(x, (b, l, n_heads, d // n_heads))
    return T.transpose(x, (0, 2, 1, 3))


def _merge_heads(x):
    # (B, H, L, D/H) -> (B, L, D)
    b, h, l, dh = x.shape
    x = T.transpose(x, (0, 2, 1, 3))
    return T.reshape(x, (b, l, h * dh))


def transformer_layer(x, attention_mask, p):
    """Pre-norm encoder layer on (B, L, D); mask (B, L) excludes key slots."""
    b, l, d = x.shape
    bias = key_mask_bias(attention_mask)

    a = T.layer_norm(x, p.ln1_g, p.ln1_b)
    q = _split_heads(T.matmul(a, p.wq) + p.bq, p.n_heads)
    k = _split_heads(T.matmul(a, p.wk) + p.bk, p.n_heads)
    v = _split_heads(T.matmul(a, p.wv) + p.bv, p.n_heads)
    scale = 1.0 / math.sqrt(d // p.n_heads)
    scores = T.matmul(q, T.transpose(k, (0, 1, 3, 2))) * scale
    instrument.record("text_attn", b * l * l)
    w = T.masked_softmax(scores, bias)
    o = _merge_heads(T.matmul(w, v))
    x = x + T.matmul(o, p.wo) + p.bo

    a2 = T.layer_norm(x, p.ln2_g, p.ln2_b)
    f = T.gelu(T.matmul(a2, p.w1) + p.b1)
    return x + T.matmul(f, p.w2) + p.b2


@dataclass
class EncoderParams:
    """Token/position tables, a transformer stack, final norm, pool vector."""

    token_table: Tensor
    position_table: Tensor
    layers: list
    lnf_g: Tensor
    lnf_b: Tensor
    pool_w: Tensor

    @classmethod
    def init(cls, vocab_size, max_positions, d_h, n_layers, n_heads, rng):
        return cls(
            token_table=_normal(rng, (vocab_size, d_h), 0.02),
            position_table=_normal(rng, (max_positions, d_h), 0.02),
            layers=[TransformerLayerParams.init(d_h, n_heads, rng) for _ in range(n_layers)],
            lnf_g=_ones(d_h),
            lnf_b=_zeros(d_h),
            pool_w=_normal(rng, (d_h, 1), 0.1),
        )

    def named_tensors(self, prefix):
        yield f"{prefix}/emb/token", self.token_table
        yield f"{prefix}/emb/pos", self.position_table
        for i, layer in enumerate(self.layers):
            yield from layer.named_tensors(f"{prefix}/layer{i}")
        yield f"{prefix}/lnf_g", self.lnf_g
        yield f"{prefix}/lnf_b", self.lnf_b
        yield f"{prefix}/pool_w", self.pool_w


def embed_ids(ids, token_table, position_table):
    """(B, L) int ids -> (B, L, D) token + position embeddings."""
    ids = np.asarray(ids)
    length = ids.shape[-1]
    if length > position_table.shape[0]:
        raise ValueError(
            f"sequence length {length} exceeds position table {position_table.shape[0]}"
        )
    tok = T.embedding(token_table, ids)
    pos = T.narrow(position_table, 0, 0, length)
    return tok + pos


def embed_sequence(seq, token_table, position_table):
    """Single-sequence embedding: rows are token + position vectors (L, D)."""
    ids = np.asarray(seq.ids)[None, :]
    out = embed_ids(ids, token_table, position_table)
    return T.reshape(out, (ids.shape[1], token_table.shape[1]))


def encode_tokens(ids, attention_mask, enc):
    """(B, L) ids through the full stack; returns (B, L, D) after final norm."""
    x = embed_ids(ids, enc.token_table, enc.position_table)
    for layer in enc.layers:
        x = transformer_layer(x, attention_mask, layer)
    return T.layer_norm(x, enc.lnf_g, enc.lnf_b)


def weighted_avg_pool(hidden, attention_mask, score_weights):
    """Attention pooling: learned scalar score per position, masked softmax,
    convex combination of rows.  All-masked input is an error."""
    b, l, d = hidden.shape
    if not np.any(np.asarray(attention_mask), axis=-1).all():
        raise ValueError("weighted_avg_pool requires at least one unmasked position")
    scores = T.reshape(T.matmul(hidden, score_weights), (b, l))
    m = np.asarray(attention_mask, dtype=np.float64)
    bias = np.where(m > 0.0, 0.0, NEG_INF)
    w = T.masked_softmax(scores, bias)
    out = T.matmul(T.reshape(w, (b, 1, l)), hidden)
    return T.reshape(out, (b, d))


def encode_pooled(ids, attention_mask, enc):
    """Encoder stack followed by attention pooling: (B, L) ids -> (B, D)."""
    return weighted_avg_pool(encode_tokens(ids, attention_mask, enc), attention_mask, enc.pool_w)


@dataclass
class MatchParams:
    """One-hidden-layer MLP producing relevance logits (.., 2)."""

    w1: Tensor
    b1: Tensor
    w2: Tensor
    b2: Tensor

    @classmethod
    def init(cls, in_dim, hidden, rng, std=0.02):
        return cls(
            w1=_normal(rng, (in_dim, hidden), std),
            b1=_zeros(hidden),
            w2=_normal(rng, (hidden, 2), std),
            b2=_zeros(2),
        )

    def named_tensors(self, prefix):
        for name in ("w1", "b1", "w2", "b2"):
            yield f"{prefix}/{name}", getattr(self, name)


def mlp_match(z, p):
    """(B, in_dim) joint feature -> (B, 2) logits."""
    if z.shape[-1] != p.w1.shape[0]:
        raise ValueError(f"match input width {z.shape[-1]} != {p.w1.shape[0]}")
    h = T.gelu(T.matmul(z, p.w1) + p.b1)
    return T.matmul(h, p.w2) + p.b2


def cross_entropy(y_onehot, y_prob, eps=1e-12):
    """Mean over rows of -sum_i y_i log(max(p_i, eps)).

    y_onehot is a constant (.., 2) one-hot array; y_prob holds post-softmax
    probabilities.  Clamping absorbs degenerate probabilities.
    """
    y = np.asarray(y_onehot, dtype=np.float64)
    p = T.as_tensor(y_prob)
    if y.shape != p.shape:
        raise ValueError(f"label shape {y.shape} != probability shape {p.shape}")
    rows = max(1, int(np.prod(y.shape[:-1])))
    picked = T.mul(T.log(T.clamp_min(p, eps)), Tensor(-y))
    return T.mul(T.sum_all(picked), 1.0 / rows)
