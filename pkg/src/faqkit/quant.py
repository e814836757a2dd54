"""Per-tensor affine INT8 quantization, integer matvec kernels, size and latency reports."""

from __future__ import annotations

import struct
import tempfile
import time
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path
from typing import Callable

import numba
import numpy as np

from faqkit.exceptions import DataError
from faqkit.learn.models import RankModel, _read_header, _write_header, save_model

QUANT_MAGIC = b"FQKQ"
QMIN, QMAX = -128, 127
# int8*int8 products fit in 2**14; int32 accumulation stays exact below this width
_INT32_SAFE_WIDTH = (2**31 - 1) // 2**14


@dataclass(frozen=True)
class QuantizedTensor:
    """``w ~ (data - zero_point) * scale`` with ``data`` int8."""

    data: np.ndarray
    scale: float
    zero_point: int

    def __post_init__(self):
        if self.data.dtype != np.int8:
            raise ValueError("quantized data must be int8")
        if not self.scale > 0:
            raise ValueError("scale must be positive")
        if not QMIN <= self.zero_point <= QMAX:
            raise ValueError("zero_point outside the int8 range")

    @property
    def shape(self) -> tuple[int, ...]:
        return self.data.shape

    @cached_property
    def matrix(self) -> "QuantizedMatrix":
        """Kernel-ready view, built once per tensor."""
        return QuantizedMatrix.from_tensor(self)


def quant_params(lo: float, hi: float) -> tuple[float, int]:
    """Scale and zero point mapping ``[lo, hi]`` onto the 256 int8 levels.

    The range is widened to contain 0 so the zero point always fits in int8
    and no value is clipped.
    """
    lo, hi = min(lo, 0.0), max(hi, 0.0)
    scale = (hi - lo) / 255.0 if hi > lo else 1.0
    zero_point = int(np.clip(np.round(QMIN - lo / scale), QMIN, QMAX))
    return scale, zero_point


def quantize(W) -> QuantizedTensor:
    W = np.asarray(W, dtype=np.float64)
    if not np.isfinite(W).all():
        raise ValueError("cannot quantize non-finite values")
    if W.size == 0:
        return QuantizedTensor(np.zeros(W.shape, dtype=np.int8), 1.0, 0)
    scale, zp = quant_params(float(W.min()), float(W.max()))
    q = np.clip(np.round(W / scale + zp), QMIN, QMAX).astype(np.int8)
    return QuantizedTensor(q, scale, zp)


def dequantize(q: QuantizedTensor) -> np.ndarray:
    return (q.data.astype(np.float64) - q.zero_point) * q.scale


@numba.njit(cache=True)
def _matvec_float(q, zw, sw, x, out):
    m, n = q.shape
    sx = 0.0
    for j in range(n):
        sx += x[j]
    for i in range(m):
        acc = 0.0
        for j in range(n):
            acc += q[i, j] * x[j]
        out[i] = sw * (acc - zw * sx)


@numba.njit(cache=True)
def _int_dot_rows(q, x16, acc):
    m, n = q.shape
    for i in range(m):
        a = np.int32(0)
        for j in range(n):
            # |int8 * int8| <= 2**14 fits int16 exactly
            a += np.int32(np.int16(q[i, j]) * x16[j])
        acc[i] = a


@numba.njit(cache=True)
def _matvec_dynamic(q, rowsum, zw, sw, x, out):
    """Quantize ``x`` with the same affine rule as the weights, then integer matvec."""
    m, n = q.shape
    lo, hi = x[0], x[0]
    for j in range(n):
        if not np.isfinite(x[j]):
            return False
        lo = min(lo, x[j])
        hi = max(hi, x[j])
    lo = min(lo, 0.0)
    hi = max(hi, 0.0)
    sx = (hi - lo) / 255.0 if hi > lo else 1.0
    zx = np.int64(min(max(np.rint(-128.0 - lo / sx), -128.0), 127.0))
    x16 = np.empty(n, dtype=np.int16)
    sum_qx = np.int64(0)
    for j in range(n):
        v = min(max(np.rint(x[j] / sx + zx), -128.0), 127.0)
        x16[j] = np.int16(v)
        sum_qx += x16[j]
    acc = np.empty(m, dtype=np.int32)
    _int_dot_rows(q, x16, acc)
    for i in range(m):
        exact = np.int64(acc[i]) - zx * rowsum[i] - np.int64(zw) * sum_qx + np.int64(n) * zw * zx
        out[i] = sw * sx * exact
    return True


@dataclass(frozen=True)
class QuantizedMatrix:
    """Int8 weight matrix with cached row sums for the integer kernel."""

    tensor: QuantizedTensor
    rowsum: np.ndarray = field(repr=False)

    @classmethod
    def from_tensor(cls, qt: QuantizedTensor) -> "QuantizedMatrix":
        if qt.data.ndim != 2:
            raise ValueError("matvec needs a 2-d quantized tensor")
        return cls(qt, qt.data.astype(np.int64).sum(axis=1))


def _as_matrix(qW) -> QuantizedMatrix:
    return qW if isinstance(qW, QuantizedMatrix) else qW.matrix


def quantized_matvec(qW, x, activations: str = "dynamic") -> np.ndarray:
    """``W x`` from int8 weights.

    ``activations="dynamic"`` quantizes ``x`` to int8 on the fly and
    accumulates integer products exactly before a single rescale.
    ``activations="float"`` keeps ``x`` in double precision; the error
    against the unquantized product is then at most ``||x||_1 * scale / 2``.
    """
    qm = _as_matrix(qW)
    q = qm.tensor
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 1 or x.shape[0] != q.shape[1]:
        raise ValueError(f"vector of length {x.shape} does not match matrix {q.shape}")
    out = np.empty(q.shape[0])
    if activations == "float":
        _matvec_float(q.data, float(q.zero_point), q.scale, x, out)
        return out
    if activations != "dynamic":
        raise ValueError("activations must be 'dynamic' or 'float'")
    if q.shape[1] > _INT32_SAFE_WIDTH:
        qx = quantize(x)
        xs = qx.data.astype(np.int64)
        n = q.shape[1]
        exact = (q.data.astype(np.int64) @ xs - qx.zero_point * qm.rowsum
                 - q.zero_point * xs.sum() + n * q.zero_point * qx.zero_point)
        return q.scale * qx.scale * exact
    if not _matvec_dynamic(q.data, qm.rowsum, q.zero_point, q.scale, x, out):
        raise ValueError("cannot quantize non-finite values")
    return out


def quantized_matmul(qW, X, activations: str = "dynamic") -> np.ndarray:
    """Row-wise ``X W^t``; each input row is quantized independently."""
    qm = _as_matrix(qW)
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    return np.vstack([quantized_matvec(qm, row, activations) for row in X])


class QuantizedModel:
    """A :class:`RankModel` with every parameter tensor stored as int8.

    Matrices run through :func:`quantized_matvec`; biases are dequantized
    and added in floating point.
    """

    def __init__(self, model: RankModel, tensors: dict[str, QuantizedTensor],
                 activations: str = "dynamic"):
        self.arch, self.n_in, self.n_out, self.hidden = model.arch, model.n_in, model.n_out, model.hidden
        self.meta = model.meta
        self.tensors = tensors
        self.activations = activations
        self._mats = {k: QuantizedMatrix.from_tensor(t) for k, t in tensors.items() if t.data.ndim == 2}
        self._bias = {k: dequantize(t) for k, t in tensors.items() if t.data.ndim == 1}

    @classmethod
    def from_model(cls, model: RankModel, activations: str = "dynamic") -> "QuantizedModel":
        model.check()
        return cls(model, {k: quantize(model.params[k]) for k in model.shapes()}, activations)

    def _layer(self, w: str, b: str, X: np.ndarray) -> np.ndarray:
        return quantized_matmul(self._mats[w], X, self.activations) + self._bias[b]

    def predict(self, X) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=np.float64))
        if X.shape[1] != self.n_in:
            raise ValueError(f"expected {self.n_in} features, got {X.shape[1]}")
        if self.arch == "linear":
            return self._layer("W", "b", X)
        return self._layer("W2", "b2", np.tanh(self._layer("W1", "b1", X)))

    def dequantized(self) -> RankModel:
        return RankModel(self.arch, self.n_in, self.n_out, self.hidden,
                         {k: dequantize(t) for k, t in self.tensors.items()}, dict(self.meta))

    def header(self) -> dict:
        return {"arch": self.arch, "n_in": self.n_in, "n_out": self.n_out, "hidden": self.hidden,
                "tensors": list(self.tensors), "meta": self.meta, "activations": self.activations}


def save_quantized(qmodel: QuantizedModel, path: str | Path) -> int:
    """Header, then per tensor: ndim, shape, f64 scale, i32 zero point, int8 payload."""
    with open(path, "wb") as fh:
        _write_header(fh, QUANT_MAGIC, qmodel.header())
        for name in qmodel.tensors:
            t = qmodel.tensors[name]
            fh.write(struct.pack("<I", t.data.ndim))
            fh.write(struct.pack(f"<{t.data.ndim}Q", *t.shape))
            fh.write(struct.pack("<di", t.scale, t.zero_point))
            fh.write(np.ascontiguousarray(t.data).tobytes())
        return fh.tell()


def load_quantized(path: str | Path) -> QuantizedModel:
    with open(path, "rb") as fh:
        header = _read_header(fh, QUANT_MAGIC, path)
        tensors = {}
        for name in header["tensors"]:
            (ndim,) = struct.unpack("<I", fh.read(4))
            shape = struct.unpack(f"<{ndim}Q", fh.read(8 * ndim))
            scale, zp = struct.unpack("<di", fh.read(12))
            count = int(np.prod(shape))
            raw = fh.read(count)
            if len(raw) != count:
                raise DataError(f"{path}: truncated tensor {name}")
            tensors[name] = QuantizedTensor(np.frombuffer(raw, dtype=np.int8).reshape(shape).copy(),
                                            scale, zp)
    shell = RankModel(header["arch"], header["n_in"], header["n_out"], header["hidden"],
                      meta=header.get("meta", {}))
    return QuantizedModel(shell, tensors, header.get("activations", "dynamic"))


def size_report(model: RankModel, full_dtype: str = "float32") -> tuple[int, int, float]:
    """On-disk bytes of the full-precision and int8 files, and their ratio."""
    with tempfile.TemporaryDirectory() as tmp:
        full = save_model(model, Path(tmp) / "full.bin", dtype=full_dtype)
        quant = save_quantized(QuantizedModel.from_model(model), Path(tmp) / "model.q8")
    return full, quant, quant / full


def bench_inference(predict: Callable[[np.ndarray], np.ndarray], samples, reps: int = 10) -> dict:
    """Per-sample latency in seconds; the first 10% of repetitions are warm-up."""
    if reps < 1:
        raise ValueError("reps must be >= 1")
    samples = np.atleast_2d(np.asarray(samples, dtype=np.float64))
    if len(samples) == 0:
        raise DataError("no samples to benchmark")
    times = []
    for r in range(reps):
        for x in samples:
            t0 = time.perf_counter()
            predict(x[None, :])
            times.append((r, time.perf_counter() - t0))
    warm = int(0.1 * reps)
    kept = np.array([t for r, t in times if r >= warm])
    return {"mean": float(kept.mean()), "p50": float(np.percentile(kept, 50)),
            "p95": float(np.percentile(kept, 95)), "n": int(len(kept))}


def bench_compare(model: RankModel, samples, reps: int = 10) -> dict:
    """CPU full-precision vs CPU int8 latency and prediction agreement."""
    qmodel = QuantizedModel.from_model(model)
    samples = np.atleast_2d(np.asarray(samples, dtype=np.float64))
    qmodel.predict(samples[:1])  # compile kernels outside the timed region
    full = bench_inference(model.predict, samples, reps)
    quant = bench_inference(qmodel.predict, samples, reps)
    agree = float(np.mean(model.predict(samples).argmax(axis=1) == qmodel.predict(samples).argmax(axis=1)))
    return {"cpu_full": full, "cpu_quantized": quant, "gpu_full": "n/a", "gpu_quantized": "n/a",
            "argmax_agreement": agree, "reps": reps, "n_samples": int(len(samples))}
