#!/usr/bin/env python
# encoding: utf-8

"""Model file

    b"HYPL" | uint32 LE header length | header json | little-endian float32 blob

The header holds the format version, the architecture, the tensor index
(name, shape, offset, count) and free-form meta data (e.g. training time).
"""

import json
import struct
from typing import Any

import numpy as np
import torch

from .. import logging
from ..file_utils import read_bytes, write_bytes
from .network import LearnerException, NavPPO, NetworkArch

logger = logging.get_logger(__name__, logging.DEBUG)

MAGIC = b"HYPL"
FORMAT_VERSION = 1


class ModelFileException(LearnerException):
    """ModelFileException"""


class VersionMismatchException(ModelFileException):
    """Unsupported format version, or unexpected architecture"""


class CorruptFileException(ModelFileException):
    """Truncated or otherwise unreadable model file"""


def encode_params(net: NavPPO, meta: None | dict[str, Any] = None) -> bytes:
    """Serialize the parameters (and buffers) of the network"""

    index = []
    blobs = []
    offset = 0
    for name, tensor in net.state_dict().items():
        data = tensor.detach().cpu().numpy().astype("<f4")
        index.append({"name": name, "shape": list(data.shape), "offset": offset, "count": int(data.size)})
        blobs.append(data.tobytes())
        offset += data.size

    header = {
        "format": FORMAT_VERSION,
        "arch": net.arch.model_dump(mode="json"),
        "tensors": index,
        "meta": meta or {},
    }
    head = json.dumps(header, sort_keys=True).encode("utf-8")
    return MAGIC + struct.pack("<I", len(head)) + head + b"".join(blobs)


def decode_params(
    data: bytes, expected_arch: None | NetworkArch = None
) -> tuple[NavPPO, dict[str, Any]]:
    """Inverse of encode_params()"""

    if len(data) < 8 or data[:4] != MAGIC:
        raise CorruptFileException("Not a model file (bad magic)")

    (size,) = struct.unpack("<I", data[4:8])
    if len(data) < 8 + size:
        raise CorruptFileException("Truncated model file header")

    try:
        header = json.loads(data[8 : 8 + size].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise CorruptFileException("Invalid model file header") from exc

    if header.get("format") != FORMAT_VERSION:
        raise VersionMismatchException(
            f"Unsupported model file format: {header.get('format')} (expected {FORMAT_VERSION})"
        )

    try:
        arch = NetworkArch.model_validate(header["arch"])
    except Exception as exc:
        raise CorruptFileException("Invalid architecture in model file header") from exc

    if expected_arch is not None and arch != expected_arch:
        raise VersionMismatchException(f"Architecture mismatch: {arch} != {expected_arch}")

    rest = len(data) - 8 - size
    if rest % 4:
        raise CorruptFileException("Truncated model file data")
    blob = np.frombuffer(data, dtype="<f4", offset=8 + size) if rest else np.empty(0, "<f4")

    net = NavPPO(arch)
    state = net.state_dict()
    tensors = {}
    for entry in header.get("tensors", []):
        start, count = entry["offset"], entry["count"]
        if start + count > len(blob):
            raise CorruptFileException(f"Truncated model file: tensor '{entry['name']}'")
        values = blob[start : start + count].reshape(entry["shape"])
        tensors[entry["name"]] = torch.from_numpy(values.astype(np.float32))

    if set(tensors) != set(state):
        raise CorruptFileException(
            f"Tensor index does not match the architecture: {sorted(set(tensors) ^ set(state))}"
        )

    try:
        net.load_state_dict(tensors)
    except RuntimeError as exc:
        raise CorruptFileException("Tensor shapes don't match the architecture") from exc

    return net, header.get("meta", {})


def save_params(net: NavPPO, *paths, meta: None | dict[str, Any] = None):
    """Write the model file"""
    file = write_bytes(encode_params(net, meta), *paths)
    logger.info("Saved model: %s", file)
    return file


def load_params(*paths, expected_arch: None | NetworkArch = None) -> tuple[NavPPO, dict[str, Any]]:
    """Read the model file. Returns the network and the header meta data."""
    try:
        data = read_bytes(*paths)
    except FileNotFoundError as exc:
        raise ModelFileException(f"Model file not found: {paths}") from exc

    net, meta = decode_params(data, expected_arch)
    logger.info("Loaded model: %s", paths)
    return net, meta
