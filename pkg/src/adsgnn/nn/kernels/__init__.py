"""Hot numeric kernels with a compiled fast path and a numpy fallback.

The compiled extension is preferred when importable.  Set
ADSGNN_KERNELS=python (or =cython) to force a backend; forcing cython
raises if the extension was not built.
"""

import os

from . import _pykernels

_forced = os.environ.get("ADSGNN_KERNELS", "").strip().lower()

if _forced == "python":
    _impl = _pykernels
    BACKEND = "python"
else:
    try:
        from . import _ckernels as _impl

        BACKEND = "cython"
    except ImportError:
        if _forced == "cython":
            raise
        _impl = _pykernels
        BACKEND = "python"

softmax_fwd = _impl.softmax_fwd
softmax_bwd = _impl.softmax_bwd
layernorm_fwd = _impl.layernorm_fwd
layernorm_bwd = _impl.layernorm_bwd
gelu_fwd = _impl.gelu_fwd
gelu_bwd = _impl.gelu_bwd
adam_update = _impl.adam_update

__all__ = [
    "BACKEND",
    "softmax_fwd",
    "softmax_bwd",
    "layernorm_fwd",
    "layernorm_bwd",
    "gelu_fwd",
    "gelu_bwd",
    "adam_update",
]
