"""
Self-describing network checkpoint:

    ELASTIC-CKPT-1
    layers <n>
    <fan_in> <fan_out> <activation>     (n lines)
    weights <count>
    <count little-endian float64 values>
"""

from pathlib import Path
from typing import List, Tuple

import numpy as np

from moseac.core.config import CHECKPOINT_MAGIC
from moseac.core.errors import CheckpointFormatError, ContractViolation
from moseac.gradnet.dense import DenseNet

_DTYPE = np.dtype("<f8")


def dumps_net(net: DenseNet) -> bytes:
    lines = [CHECKPOINT_MAGIC, f"layers {len(net.layer_shapes)}"]
    lines += [f"{i} {o} {tag}" for (i, o), tag in zip(net.layer_shapes, net.activations)]
    lines.append(f"weights {net.n_params}")
    header = ("\n".join(lines) + "\n").encode("ascii")
    return header + net.weights.astype(_DTYPE).tobytes()


def loads_net(blob: bytes, source: str = "<bytes>") -> DenseNet:
    def fail(reason: str) -> CheckpointFormatError:
        return CheckpointFormatError(f"{source}: {reason} (expected magic '{CHECKPOINT_MAGIC}')")

    cursor = 0

    def read_line() -> str:
        nonlocal cursor
        end = blob.find(b"\n", cursor)
        if end < 0:
            raise fail("truncated header")
        try:
            line = blob[cursor:end].decode("ascii")
        except UnicodeDecodeError:
            raise fail("header is not ASCII")
        cursor = end + 1
        return line

    magic = read_line()
    if magic != CHECKPOINT_MAGIC:
        raise fail(f"bad magic '{magic[:32]}'")

    try:
        keyword, n_layers = read_line().split()
        if keyword != "layers":
            raise ValueError(keyword)
        shapes: List[Tuple[int, int]] = []
        activations: List[str] = []
        for _ in range(int(n_layers)):
            fan_in, fan_out, tag = read_line().split()
            shapes.append((int(fan_in), int(fan_out)))
            activations.append(tag)
        keyword, count = read_line().split()
        if keyword != "weights":
            raise ValueError(keyword)
        count = int(count)
    except ValueError as exc:
        raise fail(f"malformed header ({exc})")

    payload = blob[cursor:]
    if len(payload) != count * _DTYPE.itemsize:
        raise fail(f"payload holds {len(payload)} bytes, header announces {count} weights")
    weights = np.frombuffer(payload, dtype=_DTYPE).astype(np.float64)
    try:
        return DenseNet(shapes, activations, weights)
    except ContractViolation as exc:
        raise fail(str(exc))


def save_net(net: DenseNet, path: Path) -> None:
    Path(path).write_bytes(dumps_net(net))


def load_net(path: Path) -> DenseNet:
    path = Path(path)
    try:
        blob = path.read_bytes()
    except OSError as exc:
        raise CheckpointFormatError(f"{path}: cannot read checkpoint ({exc})")
    return loads_net(blob, source=str(path))
