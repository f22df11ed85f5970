"""Checkpoint file format.

Layout: the magic line ``ADSGNN1\\n``, one manifest line per tensor
(``name<TAB>dims-comma-separated``), a blank line, then raw little-endian
float32 payloads in manifest order.  Tensors are stored in single
precision; loads return float64 working copies.  save(load(path)) is
byte-identical to the original file.
"""

from __future__ import annotations

from collections import OrderedDict

import numpy as np

MAGIC = b"ADSGNN1\n"


def save_checkpoint(path, tensors):
    """Write name -> array pairs (insertion order is the payload order)."""
    header = [MAGIC]
    payloads = []
    for name, arr in tensors.items():
        if "\t" in name or "\n" in name:
            raise ValueError(f"invalid tensor name {name!r}")
        arr = np.asarray(arr)
        dims = ",".join(str(d) for d in arr.shape)
        header.append(f"{name}\t{dims}\n".encode("utf-8"))
        payloads.append(np.ascontiguousarray(arr, dtype="<f4").tobytes())
    header.append(b"\n")
    with open(path, "wb") as f:
        f.write(b"".join(header))
        for blob in payloads:
            f.write(blob)


def load_checkpoint(path):
    """Read a checkpoint; returns OrderedDict of float64 arrays."""
    with open(path, "rb") as f:
        blob = f.read()
    if not blob.startswith(MAGIC):
        raise ValueError(f"{path}: not a checkpoint (bad magic)")
    head_end = blob.index(b"\n\n", len(MAGIC) - 1)
    header = blob[len(MAGIC):head_end].decode("utf-8")
    offset = head_end + 2
    out = OrderedDict()
    for line in header.splitlines():
        name, _, dims = line.partition("\t")
        if not dims:
            raise ValueError(f"{path}: malformed manifest line {line!r}")
        shape = tuple(int(d) for d in dims.split(","))
        count = int(np.prod(shape)) if shape else 1
        nbytes = 4 * count
        if offset + nbytes > len(blob):
            raise ValueError(f"{path}: truncated payload for {name}")
        raw = np.frombuffer(blob, dtype="<f4", count=count, offset=offset)
        if name in out:
            raise ValueError(f"{path}: duplicate tensor {name}")
        out[name] = raw.reshape(shape).astype(np.float64)
        offset += nbytes
    if offset != len(blob):
        raise ValueError(f"{path}: {len(blob) - offset} trailing bytes")
    return out


def checkpoint_family(tensors):
    """Model family implied by the tensor namespaces (first path segment)."""
    prefixes = {name.split("/", 1)[0] for name in tensors}
    if len(prefixes) != 1:
        raise ValueError(f"checkpoint mixes namespaces {sorted(prefixes)}")
    return prefixes.pop()
