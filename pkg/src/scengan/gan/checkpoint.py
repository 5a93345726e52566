"""Binary checkpoint container: magic "SCGN", little-endian, CRC32 trailer.

Layout:
    magic     4 bytes  b"SCGN"
    version   u16
    block     length-prefixed UTF-8 string ("gan" or "copula")
    records   u32 count, then length-prefixed UTF-8 records (JSON descriptors)
    arrays    u32 count, then per array:
                  name (length-prefixed), dtype code u8 (0=f32, 1=f64),
                  ndim u8, dims u32 each, raw little-endian values
    crc32     u32 over every preceding byte

GAN parameters are stored as float32; copula blocks use float64 so model
round-trips stay bit-identical.
"""

from __future__ import annotations

import json
import struct
import zlib
from pathlib import Path

import numpy as np

from ..errors import FormatError
from .model import GanModel, Network
from ..autodiff.layers import LayerSpec

MAGIC = b"SCGN"
VERSION = 1

_DTYPE_CODES = {0: np.dtype("<f4"), 1: np.dtype("<f8")}
_CODE_FOR_KIND = {"f4": 0, "f8": 1}


def _pack_str(s: str) -> bytes:
    raw = s.encode("utf-8")
    return struct.pack("<I", len(raw)) + raw


class _Reader:
    def __init__(self, buf: bytes):
        self.buf = buf
        self.pos = 0

    def take(self, n: int) -> bytes:
        if self.pos + n > len(self.buf):
            raise FormatError("truncated checkpoint file")
        out = self.buf[self.pos:self.pos + n]
        self.pos += n
        return out

    def u8(self):
        return struct.unpack("<B", self.take(1))[0]

    def u16(self):
        return struct.unpack("<H", self.take(2))[0]

    def u32(self):
        return struct.unpack("<I", self.take(4))[0]

    def string(self):
        return self.take(self.u32()).decode("utf-8")


def write_container(path, block_type: str, records, arrays):
    """Serialize records and named arrays into the container format."""
    parts = [MAGIC, struct.pack("<H", VERSION), _pack_str(block_type)]
    parts.append(struct.pack("<I", len(records)))
    for rec in records:
        parts.append(_pack_str(rec))
    arrays = list(arrays)
    parts.append(struct.pack("<I", len(arrays)))
    for name, arr in arrays:
        arr = np.ascontiguousarray(arr)
        kind = arr.dtype.str.lstrip("<>|=")
        if kind not in _CODE_FOR_KIND:
            raise FormatError(f"array {name!r} has unsupported dtype {arr.dtype}")
        parts.append(_pack_str(name))
        parts.append(struct.pack("<BB", _CODE_FOR_KIND[kind], arr.ndim))
        parts.append(struct.pack(f"<{arr.ndim}I", *arr.shape))
        parts.append(arr.astype(arr.dtype.newbyteorder("<"), copy=False).tobytes())
    payload = b"".join(parts)
    payload += struct.pack("<I", zlib.crc32(payload) & 0xFFFFFFFF)
    Path(path).write_bytes(payload)


def read_container(path):
    """Parse a container; returns (block_type, records, {name: array})."""
    buf = Path(path).read_bytes()
    if len(buf) < 10:
        raise FormatError("checkpoint file too short")
    body, (crc,) = buf[:-4], struct.unpack("<I", buf[-4:])
    if zlib.crc32(body) & 0xFFFFFFFF != crc:
        raise FormatError("checkpoint CRC mismatch (corrupt or truncated file)")
    r = _Reader(body)
    if r.take(4) != MAGIC:
        raise FormatError("bad magic bytes; not a checkpoint file")
    version = r.u16()
    if version != VERSION:
        raise FormatError(f"unsupported checkpoint version {version}")
    block_type = r.string()
    records = [r.string() for _ in range(r.u32())]
    arrays = {}
    for _ in range(r.u32()):
        name = r.string()
        code = r.u8()
        if code not in _DTYPE_CODES:
            raise FormatError(f"unknown dtype code {code}")
        ndim = r.u8()
        dims = struct.unpack(f"<{ndim}I", r.take(4 * ndim))
        dtype = _DTYPE_CODES[code]
        count = int(np.prod(dims)) if ndim else 1
        arr = np.frombuffer(r.take(count * dtype.itemsize), dtype=dtype).reshape(dims)
        arrays[name] = arr
    if r.pos != len(body):
        raise FormatError("trailing bytes after checkpoint payload")
    return block_type, records, arrays


# -- GAN model (de)serialization --------------------------------------------


def _spec_record(net: str, spec: LayerSpec) -> str:
    return json.dumps({
        "net": net,
        "kind": spec.kind,
        "dimensions": list(spec.dimensions),
        "activation": spec.activation,
        "leaky_slope": spec.leaky_slope,
        "has_batch_norm": spec.has_batch_norm,
    }, sort_keys=True)


def save_checkpoint(model: GanModel, path):
    meta = {
        "noise_dim": model.noise_dim,
        "sample_shape": list(model.sample_shape),
        "label_dim": model.label_dim,
        "critic_output": model.critic_output,
        "arch": model.arch,
        "data_meta": model.data_meta,
    }
    records = [json.dumps(meta, sort_keys=True)]
    records += [_spec_record("g", s) for s in model.generator.specs]
    records += [_spec_record("d", s) for s in model.discriminator.specs]
    arrays = list(model.generator.named_arrays()) + list(model.discriminator.named_arrays())
    for name, arr in arrays:
        if arr.dtype != np.float32:
            raise FormatError(f"GAN checkpoint arrays must be float32; {name!r} is {arr.dtype}")
    write_container(path, "gan", records, arrays)


def load_checkpoint(path) -> GanModel:
    block_type, records, arrays = read_container(path)
    if block_type != "gan":
        raise FormatError(f"expected a gan checkpoint, found block type {block_type!r}")
    if not records:
        raise FormatError("gan checkpoint is missing its descriptor record")
    try:
        meta = json.loads(records[0])
        specs = {"g": [], "d": []}
        for rec in records[1:]:
            d = json.loads(rec)
            specs[d["net"]].append(LayerSpec(
                kind=d["kind"],
                dimensions=tuple(d["dimensions"]),
                activation=d["activation"],
                leaky_slope=d["leaky_slope"],
                has_batch_norm=d["has_batch_norm"],
            ))
    except (KeyError, ValueError, TypeError) as err:
        raise FormatError(f"malformed gan checkpoint descriptor: {err}") from err
    generator = Network("g", specs["g"])
    discriminator = Network("d", specs["d"])
    try:
        generator.load_arrays(arrays)
        discriminator.load_arrays(arrays)
    except KeyError as err:
        raise FormatError(f"gan checkpoint is missing array {err}") from err
    return GanModel(
        generator=generator,
        discriminator=discriminator,
        noise_dim=int(meta["noise_dim"]),
        sample_shape=tuple(meta["sample_shape"]),
        label_dim=int(meta["label_dim"]),
        critic_output=meta["critic_output"],
        arch=meta.get("arch", {}),
        data_meta=meta.get("data_meta", {}),
    )
