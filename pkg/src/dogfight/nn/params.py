"""Named parameter storage, Adam updates, and the checkpoint file format.

Checkpoint layout (all integers little-endian):
    bytes 0..3   magic b"DFCK"
    bytes 4..7   format version (uint32)
    bytes 8..11  JSON header length in bytes (uint32)
    header       UTF-8 JSON: {"config": {...}, "arrays": [{name, shape, dtype}]}
    payload      raw array data in header order, little-endian, C-contiguous
"""

from __future__ import annotations

import hashlib
import json
import struct
from pathlib import Path

import numpy as np

from .autodiff import Tensor

CHECKPOINT_MAGIC = b"DFCK"
CHECKPOINT_VERSION = 1

ADAM_BETA1 = 0.9
ADAM_BETA2 = 0.999
ADAM_EPS = 1e-8


class ParamStore:
    """Named parameter tensors with paired gradients and Adam moments."""

    def __init__(self, dtype=np.float32, seed: int = 0):
        self.dtype = np.dtype(dtype)
        self.params: dict[str, Tensor] = {}
        self.moment1: dict[str, np.ndarray] = {}
        self.moment2: dict[str, np.ndarray] = {}
        self.step_count = 0
        self.init_rng = np.random.default_rng(seed)

    def add(self, name: str, data: np.ndarray) -> Tensor:
        if name in self.params:
            raise ValueError(f"duplicate parameter name {name!r}")
        tensor = Tensor(np.ascontiguousarray(data, dtype=self.dtype),
                        requires_grad=True)
        self.params[name] = tensor
        self.moment1[name] = np.zeros_like(tensor.data)
        self.moment2[name] = np.zeros_like(tensor.data)
        return tensor

    def get_or_create(self, name: str, factory) -> Tensor:
        if name not in self.params:
            self.add(name, factory(self.init_rng))
        return self.params[name]

    def __getitem__(self, name: str) -> Tensor:
        return self.params[name]

    def __contains__(self, name: str) -> bool:
        return name in self.params

    def zero_grad(self):
        for t in self.params.values():
            t.grad = None

    def grad_norm(self) -> float:
        total = 0.0
        for t in self.params.values():
            if t.grad is not None:
                total += float((t.grad.astype(np.float64) ** 2).sum())
        return float(np.sqrt(total))

    def clip_grad_norm(self, max_norm: float) -> float:
        norm = self.grad_norm()
        if norm > max_norm > 0:
            scale = max_norm / norm
            for t in self.params.values():
                if t.grad is not None:
                    t.grad *= scale
        return norm

    def state_arrays(self) -> dict[str, np.ndarray]:
        return {name: t.data for name, t in self.params.items()}

    def load_arrays(self, arrays: dict[str, np.ndarray], strict: bool = True):
        if strict and set(arrays) != set(self.params):
            missing = set(self.params) - set(arrays)
            extra = set(arrays) - set(self.params)
            raise ValueError(f"array mismatch: missing={sorted(missing)} "
                             f"extra={sorted(extra)}")
        for name, data in arrays.items():
            tensor = self.params[name]
            if tensor.data.shape != data.shape:
                raise ValueError(f"shape mismatch for {name}: "
                                 f"{tensor.data.shape} vs {data.shape}")
            tensor.data = np.ascontiguousarray(data, dtype=self.dtype)

    def checksum(self) -> str:
        digest = hashlib.sha256()
        for name in sorted(self.params):
            digest.update(name.encode())
            digest.update(np.ascontiguousarray(
                self.params[name].data, dtype="<f8").tobytes())
        return digest.hexdigest()

    def clone(self) -> "ParamStore":
        other = ParamStore(dtype=self.dtype)
        for name, t in self.params.items():
            other.add(name, t.data.copy())
        return other


def adam_step(store: ParamStore, lr: float,
              beta1: float = ADAM_BETA1, beta2: float = ADAM_BETA2,
              eps: float = ADAM_EPS):
    """One Adam update over every parameter whose gradient is populated.

    Parameters with no gradient this step keep their moments untouched.
    """
    store.step_count += 1
    t = store.step_count
    bias1 = 1.0 - beta1 ** t
    bias2 = 1.0 - beta2 ** t
    for name, tensor in store.params.items():
        grad = tensor.grad
        if grad is None:
            continue
        m = store.moment1[name]
        v = store.moment2[name]
        m *= beta1
        m += (1.0 - beta1) * grad
        v *= beta2
        v += (1.0 - beta2) * grad * grad
        m_hat = m / bias1
        v_hat = v / bias2
        tensor.data = tensor.data - (lr * m_hat / (np.sqrt(v_hat) + eps)).astype(
            tensor.data.dtype)


def orthogonal_init(rng: np.random.Generator, shape: tuple[int, ...],
                    gain: float = 1.0) -> np.ndarray:
    """Orthogonal weight matrix (rows or columns orthonormal)."""
    a = rng.standard_normal(shape)
    u, _, vt = np.linalg.svd(a, full_matrices=False)
    q = u if u.shape == shape else vt
    return gain * q


def save_checkpoint(path: str | Path, store: ParamStore, config: dict):
    """Serialize parameters plus an arbitrary JSON-safe config blob."""
    names = sorted(store.params)
    header = {
        "config": config,
        "arrays": [
            {
                "name": name,
                "shape": list(store.params[name].data.shape),
                "dtype": str(store.params[name].data.dtype),
            }
            for name in names
        ],
    }
    header_bytes = json.dumps(header, sort_keys=True).encode("utf-8")
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "wb") as fh:
        fh.write(CHECKPOINT_MAGIC)
        fh.write(struct.pack("<I", CHECKPOINT_VERSION))
        fh.write(struct.pack("<I", len(header_bytes)))
        fh.write(header_bytes)
        for name in names:
            data = store.params[name].data
            fh.write(np.ascontiguousarray(
                data, dtype=data.dtype.newbyteorder("<")).tobytes())


def load_checkpoint(path: str | Path) -> tuple[dict[str, np.ndarray], dict]:
    """Read a checkpoint back into named arrays and its config blob."""
    with open(path, "rb") as fh:
        magic = fh.read(4)
        if magic != CHECKPOINT_MAGIC:
            raise ValueError(f"not a checkpoint file: bad magic {magic!r}")
        (version,) = struct.unpack("<I", fh.read(4))
        if version != CHECKPOINT_VERSION:
            raise ValueError(f"unsupported checkpoint version {version}")
        (header_len,) = struct.unpack("<I", fh.read(4))
        header = json.loads(fh.read(header_len).decode("utf-8"))
        arrays = {}
        for meta in header["arrays"]:
            dtype = np.dtype(meta["dtype"]).newbyteorder("<")
            count = int(np.prod(meta["shape"])) if meta["shape"] else 1
            buffer = fh.read(count * dtype.itemsize)
            arrays[meta["name"]] = np.frombuffer(
                buffer, dtype=dtype).reshape(meta["shape"]).astype(meta["dtype"])
    return arrays, header["config"]


def file_sha256(path: str | Path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()
