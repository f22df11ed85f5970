"""Adam optimizer over named parameter collections."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import kernels


@dataclass
class AdamState:
    """First/second moment estimates per parameter plus the shared step count."""

    m: dict = field(default_factory=dict)
    v: dict = field(default_factory=dict)
    t: int = 0


def adam_step(params, grads, state, lr, beta1=0.9, beta2=0.999, eps=1e-8):
    """One bias-corrected Adam update, in place on the parameter tensors.

    params maps name -> Tensor; grads maps name -> ndarray (missing or None
    entries are treated as zero gradients).  The step counter increments
    once per call.
    """
    state.t += 1
    for name, p in params.items():
        g = grads.get(name)
        if g is None:
            g = np.zeros_like(p.data)
        if g.shape != p.data.shape:
            raise ValueError(f"gradient shape {g.shape} != param shape {p.data.shape} for {name}")
        if name not in state.m:
            state.m[name] = np.zeros_like(p.data)
            state.v[name] = np.zeros_like(p.data)
        kernels.adam_update(
            p.data.reshape(-1),
            np.ascontiguousarray(g.reshape(-1)),
            state.m[name].reshape(-1),
            state.v[name].reshape(-1),
            state.t,
            lr,
            beta1,
            beta2,
            eps,
        )
    return params, state
