"""Edge-level aggregation model (one-tower).

The input pair plus its first/second-order context edges are each encoded
as [CLS] text [SEP] text sequences, one encoder per edge type.  Edges of a
type are fused by a tanh-scored attention; the three type vectors are then
fused by a center-vs-all attention (input edge as center) and the result,
concatenated with the input-edge vector, feeds the matching head.
"""

from __future__ import annotations

from collections import OrderedDict
from dataclasses import dataclass

import numpy as np

from ..graph import AD_SIDE, QUERY_SIDE, sample_neighbors
from ..nn import tensor as T
from ..nn.layers import (
    NEG_INF,
    EncoderParams,
    MatchParams,
    encode_pooled,
    mlp_match,
    _normal,
    _zeros,
)
from .config import ModelConfig


@dataclass(frozen=True)
class EdgeSet:
    """Texts of the input edge and its context edges, with slot masks."""

    input_edge: tuple
    first_order: tuple   # ((text_a, text_b), ...) length 2k
    first_mask: tuple
    second_order: tuple
    second_mask: tuple


def enumerate_context_edges(q, a, graph, k):
    """Build the edge set for a pair: first-order edges join each center to
    its own top-k neighbors, second-order edges join it to the other
    center's neighbors.  Padded neighbor slots yield masked edges."""
    if k < 0:
        raise ValueError("k must be non-negative")
    qn = sample_neighbors(graph, q, QUERY_SIDE, k)
    an = sample_neighbors(graph, a, AD_SIDE, k)
    first = [(q, n) for n in qn.neighbors] + [(a, n) for n in an.neighbors]
    first_mask = qn.mask + an.mask
    second = [(q, n) for n in an.neighbors] + [(a, n) for n in qn.neighbors]
    second_mask = an.mask + qn.mask
    return EdgeSet(
        input_edge=(q, a),
        first_order=tuple(first),
        first_mask=first_mask,
        second_order=tuple(second),
        second_mask=second_mask,
    )


@dataclass
class OrderAttentionParams:
    """tanh(w . h + b) scoring for edges of one type."""

    w: T.Tensor
    b: T.Tensor

    @classmethod
    def init(cls, d_h, rng):
        return cls(w=_normal(rng, (d_h, 1), 0.1), b=_zeros(1))

    def named_tensors(self, prefix):
        yield f"{prefix}/w", self.w
        yield f"{prefix}/b", self.b


def order_attention(h_edges, mask, params):
    """Masked attention over same-type edge encodings (B, N, D) -> (B, D).

    Fully masked groups aggregate to the zero vector.
    """
    b, n, d = h_edges.shape
    if params.w.shape[0] != d:
        raise ValueError("order attention width mismatch")
    scores = T.tanh(T.reshape(T.matmul(h_edges, params.w), (b, n)) + params.b)
    m = np.asarray(mask, dtype=np.float64)
    bias = np.where(m > 0.0, 0.0, NEG_INF)
    alpha = T.masked_softmax(scores, bias, zero_empty=True)
    mixed = T.matmul(T.reshape(alpha, (b, 1, n)), h_edges)
    return T.reshape(mixed, (b, d))


def edge_type_aggregate(s_in, type_vectors, a_type):
    """Fuse per-type vectors with the input edge as attention center.

    logit_i = LeakyReLU(0.2)(a_type . [s_in || s_i]) over the active types
    (the center attends to itself as well); output is [s_in || sum_i a_i s_i].
    """
    b, d = s_in.shape
    if a_type.shape[0] != 2 * d:
        raise ValueError("type attention width mismatch")
    a_c = T.narrow(a_type, 0, 0, d)
    a_s = T.narrow(a_type, 0, d, d)
    logit_c = T.matmul(s_in, a_c)  # (B, 1)
    logits = [T.leaky_relu(logit_c + T.matmul(s, a_s), 0.2) for s in type_vectors]
    alpha = T.softmax(T.concat(logits, axis=1))  # (B, n_types)
    stacked = T.concat([T.reshape(s, (b, 1, d)) for s in type_vectors], axis=1)
    mixed = T.matmul(T.reshape(alpha, (b, 1, len(type_vectors))), stacked)
    return T.concat([s_in, T.reshape(mixed, (b, d))], axis=1)


class EdgeModel:
    FAMILY = "e"

    def __init__(self, config: ModelConfig, rng):
        self.config = config
        d = config.d_h
        kw = dict(
            vocab_size=config.vocab_size,
            max_positions=config.max_positions,
            d_h=d,
            n_layers=config.n_layers,
            n_heads=config.n_heads,
        )
        self.enc_in = EncoderParams.init(rng=rng, **kw)
        self.enc_1st = EncoderParams.init(rng=rng, **kw)
        self.enc_2nd = EncoderParams.init(rng=rng, **kw)
        self.att_1st = OrderAttentionParams.init(d, rng)
        self.att_2nd = OrderAttentionParams.init(d, rng)
        self.att_type = _normal(rng, (2 * d, 1), 0.1)
        self.match = MatchParams.init(2 * d, d, rng)

    def parameters(self):
        out = OrderedDict(self.enc_in.named_tensors("e/enc_in"))
        out.update(self.enc_1st.named_tensors("e/enc_1st"))
        out.update(self.enc_2nd.named_tensors("e/enc_2nd"))
        out.update(self.att_1st.named_tensors("e/att_1st"))
        out.update(self.att_2nd.named_tensors("e/att_2nd"))
        out["e/att_type/a"] = self.att_type
        out.update(self.match.named_tensors("e/match"))
        return out

    def forward_batch(self, batch):
        """batch carries pair-encoded sequences per edge type -> (B, 2)."""
        cfg = self.config
        b = batch["in_ids"].shape[0]
        d = cfg.d_h
        s_in = encode_pooled(batch["in_ids"], batch["in_mask"], self.enc_in)
        type_vectors = [s_in]

        def group(prefix, enc, att):
            ids, mask, slots = batch[f"{prefix}_ids"], batch[f"{prefix}_mask"], batch[f"{prefix}_slots"]
            n = ids.shape[1]
            if n == 0 or not slots.any():
                return T.Tensor(np.zeros((b, d)))
            h = encode_pooled(ids.reshape(b * n, -1), mask.reshape(b * n, -1), enc)
            return order_attention(T.reshape(h, (b, n, d)), slots, att)

        if cfg.use_first:
            type_vectors.append(group("first", self.enc_1st, self.att_1st))
        if cfg.use_second:
            type_vectors.append(group("second", self.enc_2nd, self.att_2nd))
        z = edge_type_aggregate(s_in, type_vectors, self.att_type)
        return T.softmax(mlp_match(z, self.match))


def forward_e(q, a, graph, model, vocab, encode_pair_fn, max_len):
    """Single-pair forward from raw texts; returns (1, 2) probabilities."""
    from ..training import edge_batch_arrays

    batch = edge_batch_arrays([(q, a)], graph, vocab, model.config, encode_pair_fn, max_len)
    return model.forward_batch(batch)
