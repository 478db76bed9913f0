"""Fast-rotation angle estimation.

Three estimators produce shift exponents ``l`` (tangent 2**-l) and signs from the
entries of a 2x2 block ``[[a, b], [c, d]]``:

* symmetrizing: one left rotation making the block symmetric,
* diagonalizing: a two-sided rotation for a symmetric block,
* direct: the (theta, Theta) pair for a non-symmetric block in one step.

Every estimator has an array core (``*_arrays``) that accepts equally shaped arrays
of block entries, either ``int64`` raw words (bit-exact, integer comparisons only) or
``float64`` values (the unquantized model). The scalar functions wrap the cores.

Rotation matrices follow ``R(c, s) = [[c, s], [-s, c]]``; a swapped rotation is
``R(c, s) @ [[0, 1], [1, 0]] = [[s, c], [c, -s]]``. A two-sided step maps
``Sigma -> G_theta.T @ Sigma @ G_Theta``.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from .fixedpoint import FixedFormat, FixedMatrix, FixedWord, exp2, exp2_array, sign

# stands in for the exponent of a channel whose numerator is zero
_ABSENT = 1 << 20


class BoundaryMode(Enum):
    FULL = "full"
    RELAXED = "relaxed"


class DirectVariant(Enum):
    ERFHSVD = "erfhsvd"
    ERFHSVD2 = "erfhsvd2"


class AngleError(ValueError):
    pass


@dataclass(frozen=True)
class FastRotation:
    """A rotation with tangent ``2**-l``.

    ``l = 0`` without ``zero_tangent`` is the quarter turn (tangent 1 for the double
    rotation, so ``c = 0`` and ``s = +-1``); it only comes out of the symmetrizing
    estimator when ``d + a = 0``.
    """

    l: int
    s: int = 1
    zero_tangent: bool = False
    swap: bool = False

    def __post_init__(self):
        if self.l < 0:
            raise AngleError(f"shift exponent must be non-negative, got {self.l}")
        if self.s not in (1, -1):
            raise AngleError(f"sign must be +1 or -1, got {self.s}")
        if self.zero_tangent and self.s != 1:
            raise AngleError("zero-tangent rotations carry s = +1")

    @classmethod
    def identity(cls, swap: bool = False) -> "FastRotation":
        return cls(0, 1, True, swap)

    @property
    def is_identity(self) -> bool:
        return self.zero_tangent and not self.swap


@dataclass(frozen=True)
class RotationPair:
    theta: FastRotation
    big_theta: FastRotation


@dataclass(frozen=True)
class AngleInputs:
    S_N: int
    S_D: int
    N: FixedWord
    D: FixedWord

    def __post_init__(self):
        if self.N.raw < 0 or self.D.raw < 0:
            raise AngleError("N and D are magnitudes")

    @property
    def n_zero(self) -> bool:
        return self.N.raw == 0

    @property
    def d_zero(self) -> bool:
        return self.D.raw == 0

    @property
    def K(self) -> int:
        return exp2(self.D)[0] - exp2(self.N)[0]

    @classmethod
    def from_terms(cls, num: int, den: int, fmt: FixedFormat, den_factor: int = 1) -> "AngleInputs":
        """Signs and magnitudes of a numerator/denominator pair; ``den_factor`` of 2 doubles D."""
        wide = FixedFormat(64, fmt.frac_bits)
        n, d = FixedWord(num, wide), FixedWord(den, wide)
        return cls(sign(n), sign(d), FixedWord(abs(num), wide), FixedWord(abs(den) * den_factor, wide))


@dataclass
class RotationArrays:
    """Array form of FastRotation fields."""

    l: np.ndarray
    s: np.ndarray
    zero: np.ndarray
    swap: np.ndarray

    def item(self, idx=()) -> FastRotation:
        zero = bool(self.zero[idx])
        return FastRotation(
            0 if zero else int(self.l[idx]), 1 if zero else int(self.s[idx]), zero, bool(self.swap[idx])
        )


# -- boundary classification -------------------------------------------------------


def _sign_scaled(terms):
    """Exact sign of sum(x * 2**e) over integer arrays, aligning to the smallest exponent."""
    m = terms[0][1]
    for _, e in terms[1:]:
        m = np.minimum(m, e)
    total = 0
    for x, e in terms:
        total = total + np.left_shift(x, e - m)
    return np.sign(total)


def _classify_int(N, D, mode):
    K = exp2_array(D) - exp2_array(N)
    D3 = 3 * D
    zero = np.zeros_like(K)
    if mode is BoundaryMode.RELAXED:
        # 1.5 D > 2^(K+1) N  and  1.5 D < 2^K N
        up = _sign_scaled([(D3, zero), (-N, K + 2)]) > 0
        down = _sign_scaled([(D3, zero), (-N, K + 1)]) < 0
    else:
        # 1.5 D > (2^(K+1) - 2^-K) N ; the 2^-K N term is split into floor and remainder
        Kc = np.clip(K, 0, 62)
        q = np.right_shift(2 * N, Kc)
        rem = (2 * N) & (np.left_shift(np.ones_like(Kc), Kc) - 1)
        z = D3 + q - np.left_shift(N, np.clip(K + 2, 0, 62))
        up = np.where(K < 0, True, (z > 0) | ((z == 0) & (rem > 0)))
        # 1.5 D < (2^K - 2^(1-K)) N, never true for K <= 0
        q2 = np.right_shift(4 * N, Kc)
        w = np.left_shift(N, np.clip(K + 1, 0, 62)) - q2 - D3
        down = np.where(K <= 0, False, w >= 1)
    third = _sign_scaled([(2 * D, zero), (-N, K + 1)]) < 0
    return K, up, down, third


def _classify_float(N, D, mode):
    with np.errstate(divide="ignore", invalid="ignore"):
        _, eD = np.frexp(D)
        _, eN = np.frexp(N)
    K = (eD - eN).astype(np.int64)
    if mode is BoundaryMode.RELAXED:
        up = 1.5 * D > np.ldexp(N, K + 1)
        down = 1.5 * D < np.ldexp(N, K)
    else:
        up = 1.5 * D > np.ldexp(N, K + 1) - np.ldexp(N, -K)
        down = 1.5 * D < np.ldexp(N, K) - np.ldexp(N, 1 - K)
    third = D < np.ldexp(N, K)
    return K, up, down, third


def classify_arrays(N: np.ndarray, D: np.ndarray, mode: BoundaryMode):
    """Vector form of :func:`classify_exponent`: returns (l_temp, B) arrays.

    Entries where N or D is zero produce meaningless values; callers mask them.
    """
    if N.dtype.kind == "f":
        K, up, down, third = _classify_float(N, D, mode)
    else:
        K, up, down, third = _classify_int(N, D, mode)
    l_temp = np.where(up, K + 1, np.where(down, K - 1, K))
    B = np.where(up, 1, np.where(down, 0, third.astype(np.int64)))
    return l_temp, B


def classify_exponent(inp: AngleInputs, mode: BoundaryMode | str) -> tuple[int, int]:
    """Pick l_temp in {K+1, K, K-1} from the boundary tests; B flags an underestimated angle."""
    mode = BoundaryMode(mode)
    if inp.n_zero or inp.d_zero:
        raise AngleError("classification needs N > 0 and D > 0")
    l_temp, B = classify_arrays(np.array([inp.N.raw], np.int64), np.array([inp.D.raw], np.int64), mode)
    return int(l_temp[0]), int(B[0])


# -- estimators ----------------------------------------------------------------------


def _sgn(x):
    return np.where(x >= 0, 1, -1).astype(np.int64)


def symmetrizing_arrays(a, b, c, d, mode: BoundaryMode, floor: int | None = None) -> RotationArrays:
    """Left rotation R(c, s) with R @ A symmetric (up to the fast-angle error)."""
    if floor is None:
        floor = 1 if mode is BoundaryMode.FULL else 2
    num, den = b - c, d + a
    N, D = np.abs(num), np.abs(den)
    nz, dz = N == 0, D == 0
    safe_N = np.where(nz, 1, N)
    safe_D = np.where(dz, 1, D)
    l_temp, _ = classify_arrays(safe_N, safe_D, mode)
    l = np.maximum(l_temp + 1, floor)
    # R @ A shrinks b - c only when s carries Sign(c - b) * Sign(d + a)
    s = -_sgn(num) * _sgn(den)
    l = np.where(dz, 0, l)
    s = np.where(dz, 1, s)
    zero = nz
    l = np.where(zero, 0, l)
    s = np.where(zero, 1, s)
    return RotationArrays(l.astype(np.int64), s, zero, np.zeros_like(zero))


def diagonalizing_arrays(a, b, c, d, mode: BoundaryMode, pair_swap: bool = True) -> RotationArrays:
    """Two-sided rotation G with G.T @ B @ G diagonal (up to the fast-angle error)."""
    num, den = b + c, d - a
    N, D = np.abs(num), np.abs(den)
    nz, dz = N == 0, D == 0
    l_temp, _ = classify_arrays(np.where(nz, 1, N), np.where(dz, 1, D), mode)
    # clamp the classified value at zero; D = 0 lands on the same l = 2
    l_temp = np.where(dz, 0, np.maximum(l_temp, 0))
    l = np.maximum(l_temp + 2, 1)
    s = _sgn(num) * _sgn(den)
    swap = (_sgn(num) >= 0) & ~nz if pair_swap else np.zeros_like(nz)
    l = np.where(nz, 0, l)
    s = np.where(nz, 1, s)
    return RotationArrays(l.astype(np.int64), s, nz, swap)


def direct_arrays(a, b, c, d, variant: DirectVariant, pair_swap: bool = True):
    """Theta (left) and Theta-big (right) rotations for a non-symmetric block."""
    use_flags = variant is DirectVariant.ERFHSVD
    # alpha channel from c + b over d - a, beta channel from c - b over d + a;
    # the doubled denominator turns the tangent into the half-angle tangent
    n1, d1 = c + b, d - a
    n2, d2 = c - b, d + a
    N1, D1 = np.abs(n1), 2 * np.abs(d1)
    N2, D2 = np.abs(n2), 2 * np.abs(d2)
    SN1, SD1, SN2, SD2 = _sgn(n1), _sgn(d1), _sgn(n2), _sgn(d2)
    z1, z2 = N1 == 0, N2 == 0

    def channel(N, D):
        dz = D == 0
        l_temp, B = classify_arrays(np.where(N == 0, 1, N), np.where(dz, 1, D), BoundaryMode.RELAXED)
        # D = 0 is a right angle; the smallest allowed shift is the closest fast angle
        l = np.where(dz, 2, np.maximum(l_temp + 1, 2))
        B = np.where(dz, 0, B)
        return l.astype(np.int64), B

    la, B1 = channel(N1, D1)
    lb, B2 = channel(N2, D2)
    la = np.where(z1, _ABSENT, la)
    lb = np.where(z2, _ABSENT, lb)
    Bb = (B1 & B2) if use_flags else np.zeros_like(B1)
    diff = lb - la
    lmin = np.minimum(la, lb)
    conds = [z2, z1, diff == -1, diff == 1, diff == 0]
    big = np.select(conds, [la, lb, lb - Bb, la - Bb, lb - 1], lmin)
    small = np.select(conds, [la, lb, la, lb, 0], lmin)

    sa, sb = SD1 * SN1, SD2 * SN2
    exchange = (sa != sb) & ~z1 & ~z2
    big, small = np.where(exchange, small, big), np.where(exchange, big, small)

    S = np.where(z2 | (~z1 & (diff >= 0)), sa, sb)
    S_big = S
    S_small = np.where(z2, S, np.where(z1, -S, S * np.where(diff >= 0, 1, -1)))

    both = z1 & z2
    if pair_swap:
        # an already diagonal block only swaps to put the larger entry first
        swap = np.where(both, d > a, SD1 >= 0)
    else:
        swap = np.zeros_like(z1)

    def pack(l, s):
        zero = both | (l == 0)
        return RotationArrays(
            np.where(zero, 0, l).astype(np.int64), np.where(zero, 1, s).astype(np.int64), zero, swap.copy()
        )

    return pack(small, S_small), pack(big, S_big)


# -- scalar wrappers -------------------------------------------------------------------


def _entries(A: FixedMatrix):
    if A.shape != (2, 2):
        raise AngleError(f"expected a 2x2 block, got {A.shape}")
    return tuple(np.array([A.raw[i, j]], dtype=np.int64) for i, j in ((0, 0), (0, 1), (1, 0), (1, 1)))


def symmetrizing_rotation(A: FixedMatrix, mode: BoundaryMode | str, floor: int | None = None) -> FastRotation:
    return symmetrizing_arrays(*_entries(A), BoundaryMode(mode), floor).item(0)


def diagonalizing_rotation(B: FixedMatrix, mode: BoundaryMode | str, pair_swap: bool = True) -> FastRotation:
    a, b, c, d = _entries(B)
    if abs(int(b[0]) - int(c[0])) > 1:
        raise AngleError("diagonalizing rotation needs a symmetric block (|b - c| <= 1 ulp)")
    return diagonalizing_arrays(a, b, c, d, BoundaryMode(mode), pair_swap).item(0)


def direct_rotations(A: FixedMatrix, variant: DirectVariant | str, pair_swap: bool = True) -> RotationPair:
    theta, big = direct_arrays(*_entries(A), DirectVariant(variant), pair_swap)
    return RotationPair(theta.item(0), big.item(0))
