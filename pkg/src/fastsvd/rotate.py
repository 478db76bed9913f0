"""Bit-accurate application of fast rotations.

A fast rotation with tangent t = 2**-l is applied as a double rotation whose
coefficients are rational: c = (1 - t^2)/(1 + t^2), s = 2 S t/(1 + t^2). The shift-add
datapath forms the numerators with the multiply circuit and then applies the common
factor 1/(1 + t^2) with the staged scaling circuit.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from fractions import Fraction

import numpy as np

from .angles import FastRotation, RotationArrays, RotationPair
from .fixedpoint import (
    FixedFormat,
    FixedMatrix,
    FixedWord,
    OverflowLog,
    rshift_array,
    saturate_array,
)

GUARD_BITS = 2


class MultiplyMode(Enum):
    SIN = "sin"
    COS = "cos"


class Side(Enum):
    LEFT = "left"
    RIGHT = "right"


@dataclass(frozen=True)
class ScaleConfig:
    stages: int = 4
    bypass: bool = False

    def __post_init__(self):
        if self.stages not in (1, 2, 3, 4):
            raise ValueError(f"scale stages must be 1..4, got {self.stages}")


@dataclass(frozen=True)
class RationalCoeffs:
    c: Fraction
    s: Fraction


def coefficients(rot: FastRotation) -> RationalCoeffs:
    if rot.zero_tangent:
        return RationalCoeffs(Fraction(1), Fraction(0))
    t = Fraction(1, 1 << rot.l)
    den = 1 + t * t
    return RationalCoeffs((1 - t * t) / den, 2 * rot.s * t / den)


def scale_cutoff(word_bits: int) -> int:
    """Smallest l whose scale factor rounds to one at this word width (16 at 32 bits)."""
    return word_bits // 2


# -- array kernels -----------------------------------------------------------------


def scale_array(y: np.ndarray, l: np.ndarray, cfg: ScaleConfig, word_bits: int) -> np.ndarray:
    """Multiply by 1/(1 + 2^-2l) with the accumulate-shift rows of the scaling table."""
    if cfg.bypass:
        return y
    l = np.broadcast_to(l, y.shape) if np.ndim(l) else np.full(y.shape, l, dtype=np.int64)
    lc = np.maximum(l, 1)
    first = y - rshift_array(y, 2 * lc)
    z = first
    if cfg.stages >= 2:
        # l = 1, 2 accumulate on the running value, l = 3..7 on the first stage;
        # at this stage both read the same value
        z = np.where(l <= 7, z + rshift_array(z, 4 * lc), z)
    if cfg.stages >= 3:
        z = np.where(l == 1, z + rshift_array(z, 8), z)
        z = np.where(l == 2, z + rshift_array(z, 16), z)
        z = np.where(l == 3, z + rshift_array(first, 24), z)
    if cfg.stages >= 4:
        z = np.where(l == 1, z + rshift_array(z, 16), z)
    cutoff = scale_cutoff(word_bits)
    out = np.where(l >= cutoff, y, z)
    # quarter turn: 1/(1 + 1) is a single shift
    return np.where(l == 0, rshift_array(y, 1), out)


def _numerators(x: np.ndarray, l: np.ndarray):
    """(1 - t^2) x and 2 t x for the multiply circuit; l = 0 is the quarter turn."""
    lc = np.maximum(l, 1)
    cos_part = np.where(l == 0, 0, x - rshift_array(x, 2 * lc))
    sin_part = np.where(l == 0, np.left_shift(x, 1), rshift_array(x, lc - 1))
    return cos_part, sin_part


def transform_pair_fixed(
    xp: np.ndarray,
    xq: np.ndarray,
    rot: RotationArrays,
    cfg: ScaleConfig,
    fmt: FixedFormat,
    guard: int = GUARD_BITS,
    per_batch: bool = False,
):
    """Map vectors (xp, xq) through G = R(c, s) (optionally @ P) as G.T acting on rows.

    Unswapped output is (c xp - s xq, s xp + c xq); a swapped rotation exchanges the
    two outputs. Rotation fields broadcast against the vectors. Returns the two new
    vectors and the number of saturated entries, or with ``per_batch`` an array of
    counts along the leading axis.
    """
    X = np.left_shift(xp, guard)
    Y = np.left_shift(xq, guard)
    cX, sX = _numerators(X, rot.l)
    cY, sY = _numerators(Y, rot.l)
    s = rot.s
    # sign applied by complement and increment, i.e. exact negation
    y1 = cX - s * sY
    y2 = s * sX + cY
    y1 = rshift_array(scale_array(y1, rot.l, cfg, fmt.word_bits), guard)
    y2 = rshift_array(scale_array(y2, rot.l, cfg, fmt.word_bits), guard)
    zero = rot.zero
    y1 = np.where(zero, xp, y1)
    y2 = np.where(zero, xq, y2)
    out_p = np.where(rot.swap, y2, y1)
    out_q = np.where(rot.swap, y1, y2)
    if per_batch:
        lead = out_p.shape[0]
        over_p = (out_p > fmt.max_raw) | (out_p < fmt.min_raw)
        over_q = (out_q > fmt.max_raw) | (out_q < fmt.min_raw)
        counts = over_p.reshape(lead, -1).sum(axis=1) + over_q.reshape(lead, -1).sum(axis=1)
        if counts.any():
            out_p = np.clip(out_p, fmt.min_raw, fmt.max_raw)
            out_q = np.clip(out_q, fmt.min_raw, fmt.max_raw)
        return out_p, out_q, counts
    out_p, n1 = saturate_array(out_p, fmt)
    out_q, n2 = saturate_array(out_q, fmt)
    return out_p, out_q, n1 + n2


def float_coefficients(rot: RotationArrays) -> tuple[np.ndarray, np.ndarray]:
    t = np.ldexp(1.0, -rot.l.astype(np.int64))
    den = 1.0 + t * t
    c = np.where(rot.zero, 1.0, (1.0 - t * t) / den)
    s = np.where(rot.zero, 0.0, 2.0 * rot.s * t / den)
    return c, s


def transform_pair_float(xp, xq, c, s, swap):
    """Float counterpart of :func:`transform_pair_fixed` with explicit coefficients."""
    y1 = c * xp - s * xq
    y2 = s * xp + c * xq
    return np.where(swap, y2, y1), np.where(swap, y1, y2)


# -- scalar operations ---------------------------------------------------------------


def multiply(
    x: FixedWord, rot: FastRotation, mode: MultiplyMode | str, log: OverflowLog | None = None
) -> FixedWord:
    """Numerator of the cos or sin coefficient times x, without the 1/(1+t^2) factor."""
    mode = MultiplyMode(mode)
    if rot.zero_tangent:
        # the sin path adds A to -A
        return FixedWord(0 if mode is MultiplyMode.SIN else x.raw, x.format)
    l = rot.l
    if mode is MultiplyMode.COS:
        raw = 0 if l == 0 else x.raw - (x.raw >> (2 * l))
    else:
        mag = x.raw << 1 if l == 0 else x.raw >> (l - 1)
        raw = mag if rot.s > 0 else -mag
    return FixedWord.saturating(raw, x.format, log)


def scale(x: FixedWord, l: int, cfg: ScaleConfig) -> FixedWord:
    if l < 0:
        raise ValueError("shift exponent must be non-negative")
    out = scale_array(np.array([x.raw], np.int64), np.array([l], np.int64), cfg, x.format.word_bits)
    return FixedWord(int(out[0]), x.format)


def _as_arrays(rot: FastRotation, flip_sign: bool) -> RotationArrays:
    s = -rot.s if (flip_sign and not rot.swap) else rot.s
    return RotationArrays(
        np.array(rot.l, np.int64), np.array(s, np.int64), np.array(rot.zero_tangent), np.array(rot.swap)
    )


def _check_2x2(M: FixedMatrix):
    if M.shape != (2, 2):
        raise ValueError(f"expected a 2x2 matrix, got {M.shape}")


def apply_single_rotation(
    M: FixedMatrix,
    rot: FastRotation,
    side: Side | str,
    cfg: ScaleConfig = ScaleConfig(),
    log: OverflowLog | None = None,
) -> FixedMatrix:
    """R @ M (left) or M @ R.T (right), R the rotation's matrix including the swap form."""
    _check_2x2(M)
    side = Side(side)
    # R @ M is G.T acting on rows with G = R.T; the swapped form is symmetric
    arr = _as_arrays(rot, flip_sign=True)
    raw = M.raw if side is Side.LEFT else M.raw.T
    p, q, n = transform_pair_fixed(raw[0], raw[1], arr, cfg, M.format)
    if log is not None:
        log.record(n)
    out = np.stack([p, q])
    return FixedMatrix(out if side is Side.LEFT else out.T, M.format)


def apply_double_rotation(
    M: FixedMatrix,
    pair: RotationPair,
    cfg: ScaleConfig = ScaleConfig(),
    log: OverflowLog | None = None,
) -> FixedMatrix:
    """R_theta.T @ M @ R_Theta as two chained single applications."""
    _check_2x2(M)
    th = _as_arrays(pair.theta, flip_sign=False)
    big = _as_arrays(pair.big_theta, flip_sign=False)
    p, q, n1 = transform_pair_fixed(M.raw[0], M.raw[1], th, cfg, M.format)
    cols = np.stack([p, q]).T
    p, q, n2 = transform_pair_fixed(cols[0], cols[1], big, cfg, M.format)
    if log is not None:
        log.record(n1 + n2)
    return FixedMatrix(np.stack([p, q]).T, M.format)
