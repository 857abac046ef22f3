"""Binary PGM (P5) / PPM (P6) image I/O, bit-exact for 8-bit data.

Single-channel maps round-trip as P5, 3-channel as P6, maxval fixed at
255. Quantization is round-half-up on v*255, so 0.5 stores as byte 128
and binary masks survive exactly.
"""

import numpy as np


class NetpbmError(Exception):
    pass


def write_map(path, arr):
    """Write a (H,W), (1,H,W), or (3,H,W) float map with values in [0,1]."""
    arr = np.asarray(arr, dtype=np.float64)
    if arr.ndim == 3 and arr.shape[0] == 1:
        arr = arr[0]
    if arr.min() < 0.0 or arr.max() > 1.0:
        raise ValueError("write_map: values must lie in [0, 1]")
    quantized = np.floor(arr * 255.0 + 0.5).astype(np.uint8)
    if arr.ndim == 2:
        magic, h, w = b"P5", arr.shape[0], arr.shape[1]
        raster = quantized.tobytes()
    elif arr.ndim == 3 and arr.shape[0] == 3:
        magic, h, w = b"P6", arr.shape[1], arr.shape[2]
        raster = quantized.transpose(1, 2, 0).tobytes()
    else:
        raise ValueError(f"write_map: unsupported shape {arr.shape}")
    with open(path, "wb") as fh:
        fh.write(magic + b"\n%d %d\n255\n" % (w, h))
        fh.write(raster)


def _next_token(blob, at):
    n = len(blob)
    while at < n:
        c = blob[at]
        if c in b"#":
            while at < n and blob[at] not in b"\r\n":
                at += 1
        elif c in b" \t\r\n":
            at += 1
        else:
            break
    if at >= n:
        raise NetpbmError(f"unexpected end of header at byte offset {at}")
    start = at
    while at < n and blob[at] not in b" \t\r\n":
        at += 1
    return blob[start:at], at


def read_map(path):
    """Read a P5 map to (H,W) or a P6 image to (3,H,W), values in [0,1]."""
    with open(path, "rb") as fh:
        blob = fh.read()
    magic = blob[:2]
    if magic not in (b"P5", b"P6"):
        raise NetpbmError(f'bad magic {magic!r} at byte offset 0: expected "P5" or "P6"')
    at = 2
    fields = []
    for what in ("width", "height", "maxval"):
        token, at = _next_token(blob, at)
        try:
            fields.append(int(token))
        except ValueError:
            raise NetpbmError(f"malformed {what} {token!r} at byte offset {at - len(token)}")
    w, h, maxval = fields
    if w < 1 or h < 1:
        raise NetpbmError(f"invalid dimensions {w}x{h} in header")
    if maxval != 255:
        raise NetpbmError(f"unsupported maxval {maxval} (only 255)")
    at += 1  # single whitespace byte separating header from raster
    channels = 1 if magic == b"P5" else 3
    need = w * h * channels
    raster = blob[at:at + need]
    if len(raster) != need:
        raise NetpbmError(
            f"truncated raster at byte offset {at}: expected {need} bytes, got {len(raster)}")
    data = np.frombuffer(raster, dtype=np.uint8).astype(np.float64) / 255.0
    if channels == 1:
        return data.reshape(h, w)
    return data.reshape(h, w, 3).transpose(2, 0, 1)
