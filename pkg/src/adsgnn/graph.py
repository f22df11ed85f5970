"""Immutable bipartite click graph with neighbor sampling and long-tail
selection.

Entities are identified by normalized text (same normalization as the
corpus module), so graph lookups and tokenization agree.  Neighbor
sampling is top-k by click count with lexicographic tie-breaks, which keeps
every downstream computation deterministic under input reordering.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .corpus import LineFormatError, normalize

QUERY_SIDE = "query"
AD_SIDE = "ad"


@dataclass(frozen=True)
class NeighborSample:
    """k neighbor texts; padded slots hold the empty string with mask 0."""

    neighbors: tuple
    mask: tuple


class BehaviorGraph:
    """Queries and ads joined by click-count edges; read-only after load."""

    def __init__(self, edges):
        # edges: dict (query, ad) -> count
        self.edges = dict(edges)
        self.queries = set()
        self.ads = set()
        self._q_adj = {}
        self._a_adj = {}
        for (q, a), count in self.edges.items():
            if count < 1:
                raise ValueError(f"edge ({q!r}, {a!r}) has non-positive count")
            self.queries.add(q)
            self.ads.add(a)
            self._q_adj.setdefault(q, {})[a] = count
            self._a_adj.setdefault(a, {})[q] = count

    def _adjacency(self, side):
        if side == QUERY_SIDE:
            return self._q_adj, self.queries, self.ads
        if side == AD_SIDE:
            return self._a_adj, self.ads, self.queries
        raise ValueError(f"side must be 'query' or 'ad', got {side!r}")

    def neighbors_of(self, entity, side):
        """Neighbor -> click count map for an entity on the given side."""
        adj, members, other = self._adjacency(side)
        entity = normalize(entity)
        if entity not in members and entity in other:
            raise ValueError(f"{entity!r} is not a {side}-side entity")
        return adj.get(entity, {})


def load_edges(stream):
    """Parse `query<TAB>ad<TAB>count` lines; duplicate pairs merge by sum."""
    edges = {}
    for line_no, line in enumerate(stream, start=1):
        line = line.rstrip("\n")
        if not line:
            continue
        fields = line.split("\t")
        if len(fields) != 3:
            raise LineFormatError(line_no, f"expected 3 tab-separated fields, got {len(fields)}")
        query, ad, raw = fields
        try:
            count = int(raw)
        except ValueError:
            raise LineFormatError(line_no, f"count must be an integer, got {raw!r}") from None
        if count <= 0:
            raise LineFormatError(line_no, f"count must be positive, got {count}")
        query, ad = normalize(query), normalize(ad)
        if not query or not ad:
            raise LineFormatError(line_no, "empty query or ad text")
        key = (query, ad)
        edges[key] = edges.get(key, 0) + count
    return BehaviorGraph(edges)


def load_edges_file(path):
    with open(path, encoding="utf-8") as f:
        return load_edges(f)


def sample_neighbors(graph, entity, side, k):
    """Top-k neighbors by click count (ties lexicographic); short lists pad."""
    if k < 0:
        raise ValueError("k must be non-negative")
    counts = graph.neighbors_of(entity, side)
    ranked = sorted(counts, key=lambda n: (-counts[n], n))[:k]
    pad = k - len(ranked)
    return NeighborSample(
        neighbors=tuple(ranked) + ("",) * pad,
        mask=(1,) * len(ranked) + (0,) * pad,
    )


def degree(graph, entity, side):
    """Number of distinct neighbors; 0 for entities absent from that side."""
    adj, _, _ = graph._adjacency(side)
    return len(adj.get(normalize(entity), {}))


def long_tail_subset(graph, max_degree, side, rng_seed, sample_size):
    """Seeded uniform sample (without replacement) of low-degree entities."""
    if max_degree < 1:
        raise ValueError("max_degree must be at least 1")
    _, members, _ = graph._adjacency(side)
    eligible = sorted(e for e in members if degree(graph, e, side) <= max_degree)
    if len(eligible) <= sample_size:
        return eligible
    rng = np.random.default_rng(rng_seed)
    picks = rng.choice(len(eligible), size=sample_size, replace=False)
    return [eligible[i] for i in picks]
