"""Two's-complement word primitives: sign, priority encoder, absolute value, barrel shift.

Scalar operations work on :class:`FixedWord`. The ``*_array`` helpers apply the same
semantics elementwise to ``int64`` numpy arrays of raw values and are what the
batched engine uses; both paths are pure integer arithmetic.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np


class FixedPointError(ValueError):
    """Contract violation on a fixed-point primitive (bad shift amount, bad format)."""


@dataclass(frozen=True)
class FixedFormat:
    word_bits: int
    frac_bits: int

    def __post_init__(self):
        if not 2 <= self.word_bits <= 64:
            raise FixedPointError(f"word_bits must be in [2, 64], got {self.word_bits}")
        if not 0 <= self.frac_bits < self.word_bits:
            raise FixedPointError(
                f"frac_bits must be in [0, {self.word_bits}), got {self.frac_bits}"
            )

    @property
    def min_raw(self) -> int:
        return -(1 << (self.word_bits - 1))

    @property
    def max_raw(self) -> int:
        return (1 << (self.word_bits - 1)) - 1

    @property
    def lam(self) -> int:
        """Width of a shift-amount field, ceil(log2(word_bits))."""
        return (self.word_bits - 1).bit_length()

    def quantize(self, value: float) -> int:
        """Truncate a real value onto the grid (floor), saturating at the range ends."""
        raw = int(np.floor(np.ldexp(float(value), self.frac_bits)))
        return min(max(raw, self.min_raw), self.max_raw)

    def to_float(self, raw) -> float:
        return float(np.ldexp(float(raw), -self.frac_bits))


@dataclass
class OverflowLog:
    """Counts saturation events. Shared by every primitive in one computation."""

    events: int = 0
    strict: bool = False

    def record(self, n: int = 1, what: str = "overflow") -> None:
        if n <= 0:
            return
        if self.strict:
            raise OverflowError(what)
        self.events += int(n)


@dataclass(frozen=True)
class FixedWord:
    raw: int
    format: FixedFormat

    def __post_init__(self):
        if not self.format.min_raw <= self.raw <= self.format.max_raw:
            raise FixedPointError(f"raw {self.raw} outside {self.format}")

    @classmethod
    def saturating(cls, raw: int, fmt: FixedFormat, log: OverflowLog | None = None) -> "FixedWord":
        if raw > fmt.max_raw or raw < fmt.min_raw:
            if log is not None:
                log.record(1, f"value {raw} outside {fmt}")
            raw = min(max(raw, fmt.min_raw), fmt.max_raw)
        return cls(int(raw), fmt)

    @classmethod
    def from_float(cls, value: float, fmt: FixedFormat) -> "FixedWord":
        return cls(fmt.quantize(value), fmt)

    def __float__(self) -> float:
        return self.format.to_float(self.raw)


class ShiftDirection(Enum):
    LEFT = "left"
    RIGHT = "right"


def sign(x: FixedWord) -> int:
    # MSB test: zero counts as positive
    return -1 if (x.raw >> (x.format.word_bits - 1)) & 1 else 1


def exp2(x: FixedWord) -> tuple[int, int]:
    """Priority encoder: (floor(log2|raw|), 1), or (0, 0) for zero."""
    if x.raw == 0:
        return 0, 0
    return abs(x.raw).bit_length() - 1, 1


def abs_val(x: FixedWord, log: OverflowLog | None = None) -> FixedWord:
    if x.raw >= 0:
        return x
    # complement and increment; the most negative word has no positive twin
    return FixedWord.saturating(-x.raw, x.format, log)


def shift(
    x: FixedWord,
    k: int,
    direction: ShiftDirection | str,
    log: OverflowLog | None = None,
) -> FixedWord:
    direction = ShiftDirection(direction)
    if not 0 <= k < x.format.word_bits:
        raise FixedPointError(f"shift amount {k} outside [0, {x.format.word_bits})")
    if direction is ShiftDirection.RIGHT:
        return FixedWord(x.raw >> k, x.format)
    return FixedWord.saturating(x.raw << k, x.format, log)


# -- array forms -----------------------------------------------------------------

_MAX_SHIFT = 63


def saturate_array(raw: np.ndarray, fmt: FixedFormat) -> tuple[np.ndarray, int]:
    """Clamp int64 raw values to ``fmt``; returns (clamped, number of clamped entries)."""
    over = (raw > fmt.max_raw) | (raw < fmt.min_raw)
    n = int(np.count_nonzero(over))
    if n:
        raw = np.clip(raw, fmt.min_raw, fmt.max_raw)
    return raw, n


def sign_array(raw: np.ndarray) -> np.ndarray:
    return np.where(raw >= 0, 1, -1).astype(np.int64)


def exp2_array(raw: np.ndarray) -> np.ndarray:
    """Elementwise floor(log2|raw|), 0 where raw is 0."""
    mag = np.abs(raw)
    _, e = np.frexp(mag.astype(np.float64))
    e = e.astype(np.int64) - 1
    # past 2**53 the float conversion can round up to the next power of two
    e = np.where(np.right_shift(mag, np.clip(e, 0, 63)) == 0, e - 1, e)
    return np.where(mag == 0, 0, e)


def rshift_array(raw: np.ndarray, k) -> np.ndarray:
    """Arithmetic right shift with per-element amounts; amounts past 63 act like 63."""
    return np.right_shift(raw, np.minimum(k, _MAX_SHIFT))


def lshift_array(raw: np.ndarray, k) -> np.ndarray:
    return np.left_shift(raw, k)


@dataclass(frozen=True, eq=False)
class FixedMatrix:
    """Dense matrix of raw words sharing one format."""

    raw: np.ndarray
    format: FixedFormat

    def __post_init__(self):
        raw = np.asarray(self.raw)
        if raw.ndim != 2:
            raise FixedPointError(f"FixedMatrix needs a 2-D array, got shape {raw.shape}")
        if raw.dtype.kind not in "iu":
            raise FixedPointError("FixedMatrix raw values must be integers")
        raw = raw.astype(np.int64)
        if raw.size and (raw.min() < self.format.min_raw or raw.max() > self.format.max_raw):
            raise FixedPointError(f"matrix entries outside {self.format}")
        raw.setflags(write=False)
        object.__setattr__(self, "raw", raw)

    @classmethod
    def from_float(cls, values, fmt: FixedFormat, log: OverflowLog | None = None) -> "FixedMatrix":
        scaled = np.floor(np.ldexp(np.asarray(values, dtype=np.float64), fmt.frac_bits))
        over = (scaled > fmt.max_raw) | (scaled < fmt.min_raw)
        if log is not None:
            log.record(int(np.count_nonzero(over)), "input quantization")
        return cls(np.clip(scaled, fmt.min_raw, fmt.max_raw).astype(np.int64), fmt)

    @classmethod
    def identity(cls, n: int, fmt: FixedFormat) -> "FixedMatrix":
        return cls(np.eye(n, dtype=np.int64) << fmt.frac_bits, fmt)

    @property
    def shape(self) -> tuple[int, int]:
        return self.raw.shape

    def to_float(self) -> np.ndarray:
        return np.ldexp(self.raw.astype(np.float64), -self.format.frac_bits)

    def word(self, i: int, j: int) -> FixedWord:
        return FixedWord(int(self.raw[i, j]), self.format)

    def __eq__(self, other):
        if not isinstance(other, FixedMatrix):
            return NotImplemented
        return self.format == other.format and np.array_equal(self.raw, other.raw)
