"""Flat binary parameter container with bit-exact round-trips.

Layout: the magic string, then per parameter: uint32 name length, UTF-8
name, uint32 rank, uint32 dims, raw little-endian float64 data. All
integers little-endian.
"""

import struct

import numpy as np

MAGIC = b"ERRNETCKPT1"


class CheckpointError(Exception):
    pass


def save_checkpoint(path, params):
    """Write an ordered {name: Tensor-or-ndarray} mapping."""
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        for name, value in params.items():
            arr = np.ascontiguousarray(getattr(value, "data", value), dtype="<f8")
            encoded = name.encode("utf-8")
            fh.write(struct.pack("<I", len(encoded)))
            fh.write(encoded)
            fh.write(struct.pack("<I", arr.ndim))
            fh.write(struct.pack(f"<{arr.ndim}I", *arr.shape))
            fh.write(arr.tobytes(order="C"))


def load_checkpoint(path):
    """Read back a {name: float64 ndarray} dict in file order."""
    with open(path, "rb") as fh:
        blob = fh.read()
    if blob[:len(MAGIC)] != MAGIC:
        raise CheckpointError(f"bad magic at offset 0: expected {MAGIC!r}")
    params = {}
    at = len(MAGIC)

    def take(count, what):
        nonlocal at
        if at + count > len(blob):
            raise CheckpointError(f"truncated checkpoint: needed {count} bytes for {what} at offset {at}")
        chunk = blob[at:at + count]
        at += count
        return chunk

    while at < len(blob):
        (name_len,) = struct.unpack("<I", take(4, "name length"))
        name = take(name_len, "name").decode("utf-8")
        (rank,) = struct.unpack("<I", take(4, "rank"))
        dims = struct.unpack(f"<{rank}I", take(4 * rank, "dims"))
        count = int(np.prod(dims)) if rank else 1
        raw = take(8 * count, f"data of {name!r}")
        params[name] = np.frombuffer(raw, dtype="<f8").reshape(dims).astype(np.float64)
    return params


def load_into(path, params):
    """Copy checkpoint arrays into existing named Tensors, shape-checked."""
    stored = load_checkpoint(path)
    for name, tensor in params.items():
        if name not in stored:
            raise CheckpointError(f"checkpoint is missing parameter {name!r}")
        arr = stored[name]
        if tuple(arr.shape) != tuple(tensor.shape):
            raise CheckpointError(
                f"shape mismatch for parameter {name!r}: checkpoint {arr.shape} vs model {tensor.shape}")
        tensor.data = np.ascontiguousarray(arr, dtype=tensor.data.dtype)
    extra = set(stored) - set(params)
    if extra:
        raise CheckpointError(f"checkpoint has unknown parameters: {sorted(extra)}")
