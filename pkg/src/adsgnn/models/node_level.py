"""Node-level aggregation model (two-tower).

Each tower encodes its center text and its sampled click-graph neighbors
with separate encoders, scores neighbors against the center with a GAT-style
attention vector, aggregates them, and concatenates the aggregate onto the
center embedding (residual style).  The matching head consumes both tower
outputs.  With k = 0 the aggregate is the zero vector and the model reduces
to the text-only twin-tower baseline.
"""

from __future__ import annotations

from collections import OrderedDict
from dataclasses import dataclass

import numpy as np

from ..nn import tensor as T
from ..nn.layers import (
    NEG_INF,
    EncoderParams,
    MatchParams,
    encode_pooled,
    mlp_match,
    _normal,
)
from ..nn.tensor import Tensor
from .config import ModelConfig


@dataclass
class NodeAggregatorParams:
    """Attention vector over [center || neighbor] concatenations (2*d_h)."""

    a: Tensor

    @classmethod
    def init(cls, d_h, rng):
        return cls(a=_normal(rng, (2 * d_h, 1), 0.1))

    def named_tensors(self, prefix):
        yield f"{prefix}/a", self.a


def attend_and_aggregate(h_center, h_neighbors, neighbor_mask, params):
    """Score neighbors against the center, softmax-combine, ELU.

    h_center (B, D), h_neighbors (B, N, D), neighbor_mask (B, N).
    Fully masked rows aggregate to the zero vector, so absent neighborhoods
    need no special casing by callers.
    """
    b, n, d = h_neighbors.shape
    if h_center.shape != (b, d) or params.a.shape[0] != 2 * d:
        raise ValueError("attention vector / embedding dimensions disagree")
    a_center = T.narrow(params.a, 0, 0, d)  # (D, 1)
    a_nbr = T.narrow(params.a, 0, d, d)
    logits_c = T.matmul(h_center, a_center)  # (B, 1)
    logits_n = T.reshape(T.matmul(h_neighbors, a_nbr), (b, n))
    logits = T.leaky_relu(logits_c + logits_n, 0.2)
    m = np.asarray(neighbor_mask, dtype=np.float64)
    bias = np.where(m > 0.0, 0.0, NEG_INF)
    alpha = T.masked_softmax(logits, bias, zero_empty=True)
    mixed = T.matmul(T.reshape(alpha, (b, 1, n)), h_neighbors)
    out = T.elu(T.reshape(mixed, (b, d)))
    # ELU(0) = 0, so empty rows stay exactly zero
    return out


def residual_concat(h, z_n):
    """[h || z_n]: center embedding followed by its neighborhood aggregate."""
    if h.shape[-1] != z_n.shape[-1]:
        raise ValueError("residual_concat requires equal widths")
    return T.concat([h, z_n], axis=-1)


class NodeModel:
    FAMILY = "n"

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
        self.qc = EncoderParams.init(rng=rng, **kw)
        self.ac = EncoderParams.init(rng=rng, **kw)
        if config.share_center_neighbor:
            self.qn, self.an = self.qc, self.ac
        else:
            self.qn = EncoderParams.init(rng=rng, **kw)
            self.an = EncoderParams.init(rng=rng, **kw)
        self.agg_q = NodeAggregatorParams.init(d, rng)
        self.agg_a = NodeAggregatorParams.init(d, rng)
        self.match = MatchParams.init(4 * d, d, rng)

    def parameters(self):
        out = OrderedDict(self.qc.named_tensors("n/qc"))
        out.update(self.ac.named_tensors("n/ac"))
        if not self.config.share_center_neighbor:
            out.update(self.qn.named_tensors("n/qn"))
            out.update(self.an.named_tensors("n/an"))
        out.update(self.agg_q.named_tensors("n/agg_q"))
        out.update(self.agg_a.named_tensors("n/agg_a"))
        out.update(self.match.named_tensors("n/match"))
        return out

    def tower(self, ids, mask, nbr_ids, nbr_mask, nbr_slots, center_enc, nbr_enc, agg):
        """One side: center + neighbor encoders -> [h || aggregate] (B, 2D)."""
        b = ids.shape[0]
        d = self.config.d_h
        h = encode_pooled(ids, mask, center_enc)
        k = nbr_ids.shape[1] if nbr_ids is not None else 0
        if k == 0:
            z_n = Tensor(np.zeros((b, d)))
        else:
            flat_ids = nbr_ids.reshape(b * k, -1)
            flat_mask = nbr_mask.reshape(b * k, -1)
            h_n = encode_pooled(flat_ids, flat_mask, nbr_enc)
            h_n = T.reshape(h_n, (b, k, d))
            z_n = attend_and_aggregate(h, h_n, nbr_slots, agg)
        return residual_concat(h, z_n)

    def forward_batch(self, batch):
        """batch dict -> probability pairs (B, 2)."""
        z_q = self.tower(batch["q_ids"], batch["q_mask"], batch.get("qn_ids"),
                         batch.get("qn_mask"), batch.get("qn_slots"),
                         self.qc, self.qn, self.agg_q)
        z_a = self.tower(batch["a_ids"], batch["a_mask"], batch.get("an_ids"),
                         batch.get("an_mask"), batch.get("an_slots"),
                         self.ac, self.an, self.agg_a)
        logits = mlp_match(T.concat([z_q, z_a], axis=1), self.match)
        return T.softmax(logits)

    def query_embedding(self, ids, mask, nbr_ids, nbr_mask, nbr_slots):
        """Query-side topology-augmented representation z_q (B, 2D)."""
        return self.tower(ids, mask, nbr_ids, nbr_mask, nbr_slots,
                          self.qc, self.qn, self.agg_q)

    def ad_embedding(self, ids, mask, nbr_ids, nbr_mask, nbr_slots):
        return self.tower(ids, mask, nbr_ids, nbr_mask, nbr_slots,
                          self.ac, self.an, self.agg_a)

    def match_embeddings(self, z_q, z_a):
        """Probabilities from precomputed tower outputs."""
        return T.softmax(mlp_match(T.concat([z_q, z_a], axis=1), self.match))


def pack_neighbors(seqs):
    """Stack neighbor TokenSequences into (1, k, L) arrays plus slot mask.

    A padded slot is the encoding of the empty text ([CLS] then padding),
    recognized by an attention mask that is zero past position 0.
    """
    if not seqs:
        return None, None, None
    ids = np.array([s.ids for s in seqs])[None, :, :]
    mask = np.array([s.attention_mask for s in seqs])[None, :, :]
    slots = np.array([[1 if any(s.attention_mask[1:]) else 0 for s in seqs]])
    return ids, mask, slots


def forward_n(q_seq, q_neighbors, a_seq, a_neighbors, model):
    """Single-pair forward over TokenSequence inputs; returns (1, 2) probs."""
    qn_ids, qn_mask, qn_slots = pack_neighbors(q_neighbors)
    an_ids, an_mask, an_slots = pack_neighbors(a_neighbors)
    batch = {
        "q_ids": np.array([q_seq.ids]),
        "q_mask": np.array([q_seq.attention_mask]),
        "a_ids": np.array([a_seq.ids]),
        "a_mask": np.array([a_seq.attention_mask]),
    }
    if qn_ids is not None:
        batch.update(qn_ids=qn_ids, qn_mask=qn_mask, qn_slots=qn_slots)
    if an_ids is not None:
        batch.update(an_ids=an_ids, an_mask=an_mask, an_slots=an_slots)
    return model.forward_batch(batch)
