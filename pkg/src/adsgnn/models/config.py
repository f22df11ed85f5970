"""Shared model hyperparameter bundle."""

from __future__ import annotations

from dataclasses import dataclass


@dataclass
class ModelConfig:
    vocab_size: int
    d_h: int = 64
    n_layers: int = 3
    n_heads: int = 4
    k: int = 3
    max_len: int = 16
    max_len_pair: int = 32
    max_positions: int = 48
    # node model: tie each side's neighbor encoder to its center encoder
    share_center_neighbor: bool = False
    # edge model ablations: drop first/second-order context edges
    use_first: bool = True
    use_second: bool = True
    # token model: optional residual connection around the graph transformer
    graph_residual: bool = False

    def __post_init__(self):
        for name in ("vocab_size", "d_h", "n_layers", "n_heads", "max_len",
                     "max_len_pair", "max_positions"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")
        if self.k < 0:
            raise ValueError("k must be non-negative")
        if self.max_positions < max(self.max_len, self.max_len_pair):
            raise ValueError("max_positions must cover the longest sequence")
