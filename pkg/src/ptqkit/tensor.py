"""Minimal dense tensor container and the statistics used by calibration.

Values are stored flat in row-major order as float32; statistics are
accumulated in float64. Everything here is a pure function over immutable
inputs and safe to call concurrently.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence, Union

import numpy as np

from .errors import EmptyInput, InvalidArgument

MAX_RANK = 4

TensorLike = Union["Tensor", np.ndarray, Sequence, float, int]


@dataclass(frozen=True)
class Tensor:
    """Immutable float32 tensor with flat row-major storage.

    Constructors reject non-finite values, zero-sized dimensions and ranks
    above MAX_RANK.
    """

    shape: tuple[int, ...]
    data: np.ndarray

    def __post_init__(self) -> None:
        shape = tuple(int(d) for d in self.shape)
        if len(shape) > MAX_RANK:
            raise InvalidArgument(f"rank {len(shape)} exceeds supported maximum {MAX_RANK}")
        if any(d == 0 for d in shape):
            raise EmptyInput(f"tensor has no elements, shape {shape}")
        if any(d < 0 for d in shape):
            raise InvalidArgument(f"dimensions must be positive, got {shape}")
        data = np.array(self.data, dtype=np.float32, copy=True).reshape(-1)
        if data.size == 0:
            raise EmptyInput("tensor has no elements")
        if data.size != math.prod(shape):
            raise InvalidArgument(
                f"shape {shape} implies {math.prod(shape)} elements, got {data.size}"
            )
        if not np.all(np.isfinite(data)):
            raise InvalidArgument("tensor contains NaN or Inf")
        data.flags.writeable = False
        object.__setattr__(self, "shape", shape)
        object.__setattr__(self, "data", data)

    @classmethod
    def from_array(cls, values: TensorLike) -> "Tensor":
        arr = np.asarray(values, dtype=np.float32)
        return cls(arr.shape, arr.reshape(-1))

    @property
    def size(self) -> int:
        return int(self.data.size)

    @property
    def rank(self) -> int:
        return len(self.shape)

    @property
    def array(self) -> np.ndarray:
        """Read-only view with the tensor's shape."""
        return self.data.reshape(self.shape)


def as_tensor(values: TensorLike) -> Tensor:
    if isinstance(values, Tensor):
        return values
    return Tensor.from_array(values)


def _as_f64(values: TensorLike) -> np.ndarray:
    if isinstance(values, Tensor):
        return values.array.astype(np.float64)
    arr = np.asarray(values, dtype=np.float64)
    if arr.size == 0:
        raise EmptyInput("input has no elements")
    if not np.all(np.isfinite(arr)):
        raise InvalidArgument("input contains NaN or Inf")
    return arr


@dataclass(frozen=True)
class SummaryStats:
    """Population-form summary (std uses the divide-by-N denominator)."""

    mean: float
    std: float
    min: float
    max: float
    absmax: float


def summary_stats(t: TensorLike) -> SummaryStats:
    """Exact population mean/std plus extrema of all elements."""
    arr = _as_f64(t).reshape(-1)
    mean = float(arr.mean())
    std = float(np.sqrt(np.mean((arr - mean) ** 2)))
    lo = float(arr.min())
    hi = float(arr.max())
    return SummaryStats(mean=mean, std=std, min=lo, max=hi, absmax=max(abs(lo), abs(hi)))


def percentile(t: TensorLike, p: float) -> float:
    """p-th percentile with linear interpolation between closest ranks."""
    if not 0.0 <= p <= 100.0:
        raise InvalidArgument(f"percentile must be in [0, 100], got {p}")
    arr = _as_f64(t).reshape(-1)
    return float(np.percentile(arr, p, method="linear"))


def channel_minmax(t: TensorLike, axis: int) -> list[tuple[float, float]]:
    """Per-slice (min, max) along `axis`; one entry per slice."""
    arr = _as_f64(t)
    if not 0 <= axis < arr.ndim:
        raise InvalidArgument(f"axis {axis} out of range for rank {arr.ndim}")
    moved = np.moveaxis(arr, axis, 0).reshape(arr.shape[axis], -1)
    return [(float(row.min()), float(row.max())) for row in moved]
