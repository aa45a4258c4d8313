"""On-disk formats.

Frame stack (``.wfs``)::

    bytes 0-7    magic  b"WCEL0FS\\x00"
    bytes 8-11   format version, uint32 little-endian
    bytes 12-15  length n of the metadata block, uint32 little-endian
    bytes 16-    n bytes of UTF-8 JSON metadata (grid, frame count, seed, RNG, ...)
    then         frames as little-endian uint32 counts, row-major, frame after frame

Reconstructions are ``.npy`` arrays of shape ``(frames, N, N)``.
"""
from __future__ import annotations

import json
import struct

import numpy as np

from .errors import ParseError
from .localizations import LocalizationSet
from .operator import GridSpec
from .simulate import FrameStack

MAGIC = b"WCEL0FS\x00"
VERSION = 1
HEADER = struct.Struct("<8sII")


def dumps_json(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


def write_json(path, obj):
    with open(path, "w") as fh:
        fh.write(dumps_json(obj))


def encode_frame_stack(stack: FrameStack) -> bytes:
    meta = dict(stack.meta)
    meta.update(grid=stack.grid.to_dict(), n_frames=len(stack), dtype="<u4")
    blob = json.dumps(meta, sort_keys=True).encode("utf-8")
    frames = np.ascontiguousarray(stack.frames, dtype="<u4")
    return HEADER.pack(MAGIC, VERSION, len(blob)) + blob + frames.tobytes()


def decode_frame_stack(data: bytes) -> FrameStack:
    if len(data) < HEADER.size:
        raise ParseError("truncated header", offset=len(data))
    magic, version, n = HEADER.unpack_from(data, 0)
    if magic != MAGIC:
        raise ParseError("bad magic number", offset=0)
    if version != VERSION:
        raise ParseError(f"unsupported version {version}", offset=8)
    start = HEADER.size
    if len(data) < start + n:
        raise ParseError("truncated metadata block", offset=len(data))
    try:
        meta = json.loads(data[start:start + n].decode("utf-8"))
        grid = GridSpec(**meta.pop("grid"))
        n_frames = int(meta.pop("n_frames"))
        meta.pop("dtype", None)
    except (ValueError, KeyError, TypeError) as exc:
        raise ParseError(f"invalid metadata: {exc}", offset=start) from None
    body = start + n
    expected = n_frames * grid.M * grid.M * 4
    if len(data) - body != expected:
        raise ParseError(f"expected {expected} bytes of frame data, found {len(data) - body}",
                         offset=body + min(expected, len(data) - body))
    frames = np.frombuffer(data, dtype="<u4", offset=body).reshape(n_frames, grid.M * grid.M)
    return FrameStack(grid, frames.astype(np.uint32), None, meta)


def write_frame_stack(path, stack: FrameStack):
    with open(path, "wb") as fh:
        fh.write(encode_frame_stack(stack))


def read_frame_stack(path) -> FrameStack:
    with open(path, "rb") as fh:
        return decode_frame_stack(fh.read())


def write_reconstructions(path, images):
    np.save(path, np.ascontiguousarray(images, dtype="<f8"), allow_pickle=False)


def read_image(path):
    return np.load(path, allow_pickle=False)


def read_localizations(path) -> LocalizationSet:
    return LocalizationSet.read_csv(path)
