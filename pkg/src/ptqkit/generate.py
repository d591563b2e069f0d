"""Seeded synthetic activation distributions for calibration experiments."""

from __future__ import annotations

import math

import numpy as np
from scipy.special import erf

from .errors import InvalidArgument
from .tensor import Tensor

KINDS = ("softmax", "gelu", "outlier")


def _gelu(x: np.ndarray) -> np.ndarray:
    return 0.5 * x * (1.0 + erf(x / math.sqrt(2.0)))


def synth(
    kind: str,
    shape: tuple[int, ...],
    seed: int,
    temperature: float = 0.25,
    gelu_std: float = 1.5,
    outlier_fraction: float = 0.005,
    outlier_range: tuple[float, float] = (20.0, 50.0),
) -> Tensor:
    """Generate one seeded tensor of the requested activation shape.

    softmax: rows (last axis) are the softmax of Gaussian logits sharpened
    by `temperature`, so mass clusters near 0 with a few entries near 1.
    gelu: GeLU applied to N(0, gelu_std^2) draws, bounded below by the GeLU
    minimum (~ -0.17). outlier: standard normal with a small fraction of
    entries scaled into the 20-50x range.
    """
    if kind not in KINDS:
        raise InvalidArgument(f"kind must be one of {KINDS}")
    shape = tuple(int(d) for d in shape)
    if not shape or any(d <= 0 for d in shape):
        raise InvalidArgument(f"shape must have positive dimensions, got {shape}")
    rng = np.random.default_rng(seed)
    if kind == "softmax":
        logits = rng.standard_normal(shape) / temperature
        shifted = logits - logits.max(axis=-1, keepdims=True)
        e = np.exp(shifted)
        return Tensor.from_array(e / e.sum(axis=-1, keepdims=True))
    if kind == "gelu":
        return Tensor.from_array(_gelu(rng.normal(0.0, gelu_std, shape)))
    values = rng.standard_normal(shape)
    flat = values.reshape(-1)
    count = max(1, round(outlier_fraction * flat.size))
    idx = rng.choice(flat.size, size=count, replace=False)
    flat[idx] *= rng.uniform(*outlier_range, size=count)
    return Tensor.from_array(values)
