"""
Integer-only nonlinear kernels, host side.

Each function computes exactly what the matching DCE program in
``darth_pum.apps.kernels`` leaves in its registers, so the two can be
compared bit for bit. Values are fixed-point codes in ``int64`` arrays.

  - softmax: shifted base-2 exponent with a quadratic fraction term, one
    reciprocal per row
  - layernorm: integer mean, bitwise square root, one reciprocal
  - GELU: clipped quadratic stand-in for erf
"""

import math

import numpy as np

from ..errors import ShapeError

ACT_FRAC = 8
"""Fraction bits of every activation."""
WEIGHT_FRAC = 6

EXP_IN_FRAC = 10
EXP_FRAC = 14
EXP_ONE = 1 << EXP_FRAC
EXP_MAX_SHIFT = 15
# 2^-f ~ 1 + b f + c f^2 on [0, 1), exact at 0, 1/2 and 1
EXP_B = -11003
EXP_C = 2811

PROB_FRAC = 12
RECIP_NUMERATOR_BITS = 28
RECIP_QUOTIENT_BITS = 15

LN_RECIP_BITS = 24
LN_QUOTIENT_BITS = 23
LN_EPS_CODE = 16
"""Added to the summed squared deviations; ``16 / (channels << 16)`` in real units."""
LN_ROOT_BITS = 16

GELU_ISQRT2 = 2896
GELU_CLIP = 453
GELU_A = -1183


def quantize(values, frac: int, bits: int = 16) -> np.ndarray:
    """Round to ``frac`` fraction bits, saturating to a signed ``bits`` range."""
    lo, hi = -(1 << (bits - 1)), (1 << (bits - 1)) - 1
    return np.clip(np.round(np.asarray(values, dtype=float) * (1 << frac)), lo, hi).astype(np.int64)


def dequantize(codes, frac: int) -> np.ndarray:
    return np.asarray(codes, dtype=np.int64) / float(1 << frac)


def signed_bits(values) -> int:
    """Smallest two's-complement width holding every value."""
    values = np.asarray(values, dtype=np.int64)
    if values.size == 0:
        return 1
    top = max(int(values.max()), -int(values.min()) - 1, 0)
    return top.bit_length() + 1


def softmax_scale(head_dim: int) -> int:
    """``log2(e) / sqrt(head_dim)`` with 12 fraction bits."""
    return round(math.log2(math.e) / math.sqrt(head_dim) * 4096)


def isqrt(values) -> np.ndarray:
    values = np.asarray(values, dtype=np.int64)
    return np.array([math.isqrt(int(v)) for v in values.ravel()], dtype=np.int64).reshape(values.shape)


def exp2_neg(w) -> np.ndarray:
    """``2 ** -(w / 2**EXP_IN_FRAC)`` with ``EXP_FRAC`` fraction bits, ``w >= 0``."""
    w = np.asarray(w, dtype=np.int64)
    n = np.minimum(w >> EXP_IN_FRAC, EXP_MAX_SHIFT)
    f = w & ((1 << EXP_IN_FRAC) - 1)
    t = (f * EXP_C) >> EXP_IN_FRAC
    t = ((t + EXP_B) * f) >> EXP_IN_FRAC
    return (EXP_ONE + t) >> n


def softmax(scores, scale: int, axis: int = -1) -> np.ndarray:
    """
    Row softmax of ``ACT_FRAC`` scores; ``scale`` (12 fraction bits) folds in
    ``log2(e)`` and any temperature. Returns ``PROB_FRAC`` probabilities.
    """
    scores = np.asarray(scores, dtype=np.int64)
    top = scores.max(axis=axis, keepdims=True)
    w = ((top - scores) * scale) >> (ACT_FRAC + 12 - EXP_IN_FRAC)
    e = exp2_neg(w)
    total = e.sum(axis=axis, keepdims=True)
    recip = (1 << RECIP_NUMERATOR_BITS) // total
    return (e * recip) >> (RECIP_NUMERATOR_BITS - PROB_FRAC)


def channel_log2(channels: int) -> int:
    log = channels.bit_length() - 1
    if channels != 1 << log or log % 2:
        raise ShapeError(f"Layer norm needs a power-of-four channel count, got {channels}")
    return log


def layernorm(x, axis: int = -1) -> np.ndarray:
    """Normalise ``ACT_FRAC`` codes along ``axis`` to zero mean, unit variance."""
    x = np.asarray(x, dtype=np.int64)
    log = channel_log2(x.shape[axis])
    mean = x.sum(axis=axis, keepdims=True) >> log
    d = x - mean
    var = (d * d).sum(axis=axis, keepdims=True) + LN_EPS_CODE
    inv = (1 << LN_RECIP_BITS) // isqrt(var)
    return (d * inv) >> (LN_RECIP_BITS - ACT_FRAC - log // 2)


def gelu(u) -> np.ndarray:
    u = np.asarray(u, dtype=np.int64)
    v = np.minimum((np.abs(u) * GELU_ISQRT2) >> 12, GELU_CLIP)
    t = v - GELU_CLIP
    l = (((t * t) >> ACT_FRAC) * GELU_A >> 12) + (1 << ACT_FRAC)
    erf = np.where(u >= 0, l, -l)
    return (u * ((1 << ACT_FRAC) + erf)) >> (ACT_FRAC + 1)


def relu(u) -> np.ndarray:
    return np.maximum(np.asarray(u, dtype=np.int64), 0)
