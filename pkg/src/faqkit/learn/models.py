"""Linear and one-hidden-layer scoring heads with explicit backprop, plus the model file format."""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from faqkit.exceptions import DataError

MODEL_MAGIC = b"FQKM"
MODEL_VERSION = 1
ARCHITECTURES = ("linear", "mlp")


@dataclass
class RankModel:
    """``linear``: ``y = X W^t + b``; ``mlp``: ``y = tanh(X W1^t + b1) W2^t + b2``.

    Weight matrices are stored (out x in) so each layer is a matrix-vector
    product ``W x``.
    """

    arch: str
    n_in: int
    n_out: int
    hidden: int = 0
    params: dict = field(default_factory=dict)
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.arch not in ARCHITECTURES:
            raise ValueError(f"unknown architecture {self.arch!r}")
        if self.arch == "mlp" and self.hidden < 1:
            raise ValueError("mlp architecture needs hidden >= 1")

    @classmethod
    def init(cls, arch: str, n_in: int, n_out: int, hidden: int = 0, seed: int = 0,
             meta: dict | None = None) -> "RankModel":
        """Uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)) initialization."""
        model = cls(arch, n_in, n_out, hidden if arch == "mlp" else 0, meta=dict(meta or {}))
        rng = np.random.default_rng(seed)
        for name, shape in model.shapes().items():
            fan_in = shape[-1] if len(shape) == 2 else model._fan_in(name)
            bound = 1.0 / np.sqrt(fan_in)
            model.params[name] = rng.uniform(-bound, bound, size=shape)
        return model

    def _fan_in(self, bias_name: str) -> int:
        return {"b": self.n_in, "b1": self.n_in, "b2": self.hidden}[bias_name]

    def shapes(self) -> dict[str, tuple[int, ...]]:
        if self.arch == "linear":
            return {"W": (self.n_out, self.n_in), "b": (self.n_out,)}
        return {"W1": (self.hidden, self.n_in), "b1": (self.hidden,),
                "W2": (self.n_out, self.hidden), "b2": (self.n_out,)}

    def check(self) -> None:
        for name, shape in self.shapes().items():
            p = self.params.get(name)
            if p is None or p.shape != shape:
                raise ValueError(f"parameter {name} missing or not shaped {shape}")
            if not np.isfinite(p).all():
                raise ValueError(f"parameter {name} has non-finite entries")

    def forward(self, X: np.ndarray):
        """Return ``(outputs, cache)`` for a batch ``X`` of shape (n, n_in)."""
        X = np.atleast_2d(np.asarray(X, dtype=float))
        if X.shape[1] != self.n_in:
            raise ValueError(f"expected {self.n_in} features, got {X.shape[1]}")
        p = self.params
        if self.arch == "linear":
            return X @ p["W"].T + p["b"], (X,)
        h = np.tanh(X @ p["W1"].T + p["b1"])
        return h @ p["W2"].T + p["b2"], (X, h)

    def predict(self, X: np.ndarray) -> np.ndarray:
        return self.forward(X)[0]

    def backward(self, cache, dout: np.ndarray) -> dict[str, np.ndarray]:
        """Parameter gradients given ``d loss / d outputs``."""
        dout = np.atleast_2d(dout)
        if dout.shape[1] != self.n_out:
            raise ValueError(f"upstream gradient has {dout.shape[1]} columns, expected {self.n_out}")
        if self.arch == "linear":
            (X,) = cache
            return {"W": dout.T @ X, "b": dout.sum(axis=0)}
        X, h = cache
        dh = (dout @ self.params["W2"]) * (1.0 - h * h)
        return {"W1": dh.T @ X, "b1": dh.sum(axis=0),
                "W2": dout.T @ h, "b2": dout.sum(axis=0)}

    def copy(self) -> "RankModel":
        return RankModel(self.arch, self.n_in, self.n_out, self.hidden,
                         {k: v.copy() for k, v in self.params.items()}, json.loads(json.dumps(self.meta)))

    def header(self) -> dict:
        return {"arch": self.arch, "n_in": self.n_in, "n_out": self.n_out, "hidden": self.hidden,
                "tensors": list(self.shapes()), "meta": self.meta}


def _write_header(fh, magic: bytes, header: dict) -> None:
    raw = json.dumps(header, sort_keys=True).encode("utf-8")
    fh.write(magic)
    fh.write(struct.pack("<IQ", MODEL_VERSION, len(raw)))
    fh.write(raw)


def _read_header(fh, magic: bytes, path) -> dict:
    if fh.read(4) != magic:
        raise DataError(f"{path}: bad magic, not a {magic.decode()} file")
    version, n = struct.unpack("<IQ", fh.read(12))
    if version != MODEL_VERSION:
        raise DataError(f"{path}: unsupported version {version}")
    return json.loads(fh.read(n).decode("utf-8"))


def save_model(model: RankModel, path: str | Path, dtype: str = "float64") -> int:
    """Write header then row-major parameter arrays; returns bytes written."""
    if dtype not in ("float64", "float32"):
        raise ValueError("dtype must be float64 or float32")
    header = model.header() | {"dtype": dtype}
    with open(path, "wb") as fh:
        _write_header(fh, MODEL_MAGIC, header)
        for name in header["tensors"]:
            arr = np.ascontiguousarray(model.params[name], dtype="<f8" if dtype == "float64" else "<f4")
            fh.write(struct.pack("<I", arr.ndim))
            fh.write(struct.pack(f"<{arr.ndim}Q", *arr.shape))
            fh.write(arr.tobytes())
        return fh.tell()


def load_model(path: str | Path) -> RankModel:
    with open(path, "rb") as fh:
        header = _read_header(fh, MODEL_MAGIC, path)
        np_dtype = "<f8" if header.get("dtype", "float64") == "float64" else "<f4"
        params = {}
        for name in header["tensors"]:
            (ndim,) = struct.unpack("<I", fh.read(4))
            shape = struct.unpack(f"<{ndim}Q", fh.read(8 * ndim))
            count = int(np.prod(shape)) if ndim else 1
            size = np.dtype(np_dtype).itemsize * count
            params[name] = np.frombuffer(fh.read(size), dtype=np_dtype).astype(float).reshape(shape)
    model = RankModel(header["arch"], header["n_in"], header["n_out"], header["hidden"],
                      params, header.get("meta", {}))
    model.check()
    return model
