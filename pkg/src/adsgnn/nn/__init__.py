"""Differentiable core: tensors with a gradient tape, encoder layers,
losses, the Adam optimizer, and the checkpoint format."""

from . import instrument, kernels
from .checkpoint import checkpoint_family, load_checkpoint, save_checkpoint
from .layers import (
    EncoderParams,
    MatchParams,
    TransformerLayerParams,
    cross_entropy,
    embed_ids,
    embed_sequence,
    encode_pooled,
    encode_tokens,
    key_mask_bias,
    mlp_match,
    transformer_layer,
    weighted_avg_pool,
)
from .optim import AdamState, adam_step
from .tensor import Tensor, no_grad, softmax

__all__ = [
    "AdamState",
    "EncoderParams",
    "MatchParams",
    "Tensor",
    "TransformerLayerParams",
    "adam_step",
    "checkpoint_family",
    "cross_entropy",
    "embed_ids",
    "embed_sequence",
    "encode_pooled",
    "encode_tokens",
    "instrument",
    "kernels",
    "key_mask_bias",
    "load_checkpoint",
    "mlp_match",
    "no_grad",
    "save_checkpoint",
    "softmax",
    "transformer_layer",
    "weighted_avg_pool",
]
