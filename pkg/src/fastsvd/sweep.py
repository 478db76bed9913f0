"""Two-sided Jacobi sweeps driven by fast (or exact) 2x2 rotations.

The engine works on a batch of equally sized matrices at once. Every pair in a round
is disjoint from the others, so all row rotations of a round are applied together,
followed by all column rotations; this is the order a row of diagonal processors
produces and it is the bit-exact contract of this module.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from enum import Enum
from fractions import Fraction

import numpy as np

from .angles import (
    BoundaryMode,
    DirectVariant,
    RotationArrays,
    diagonalizing_arrays,
    direct_arrays,
    symmetrizing_arrays,
)
from .fixedpoint import FixedFormat, FixedMatrix
from . import _kernels
from .rotate import (
    GUARD_BITS,
    ScaleConfig,
    float_coefficients,
    scale_cutoff,
    transform_pair_fixed,
    transform_pair_float,
)


class AlgorithmVariant(Enum):
    NSVD_EXACT = "nsvd"
    FRNSVD = "frnsvd"
    ERNSVD = "ernsvd"
    ERFHSVD = "erfhsvd"
    ERFHSVD2 = "erfhsvd2"


class Arithmetic(Enum):
    FIXED = "fixed"
    FLOAT = "float"


@dataclass(frozen=True)
class SvdConfig:
    """Engine settings.

    ``internal_frac_bits=None`` left-aligns each input into the internal word with
    headroom for its Frobenius norm. ``arithmetic=FLOAT`` runs the same angle logic
    with exact rational coefficients in double precision (the unquantized model);
    the exact variant always runs in float. ``sign_fix`` keeps the diagonal of Sigma
    non-negative after every round; ``None`` enables it for the two-step variants,
    whose symmetrizing step misbehaves on blocks with a close to -d.
    """

    input_format: FixedFormat = FixedFormat(16, 12)
    internal_bits: int = 32
    internal_frac_bits: int | None = None
    scale: ScaleConfig = ScaleConfig()
    sweeps: int = 16
    tol: float = 2.0**-16
    arithmetic: Arithmetic = Arithmetic.FIXED
    pair_swap: bool | None = None
    sign_fix: bool | None = None

    def __post_init__(self):
        if self.sweeps < 0:
            raise ValueError("sweeps must be non-negative")
        if not self.tol >= 0:
            raise ValueError("tol must be non-negative")
        if not 8 <= self.internal_bits <= 62 - GUARD_BITS:
            raise ValueError(f"internal_bits must be in [8, {62 - GUARD_BITS}]")
        if self.internal_frac_bits is not None:
            FixedFormat(self.internal_bits, self.internal_frac_bits)


@dataclass
class SvdResult:
    U: FixedMatrix
    Sigma: FixedMatrix
    V: FixedMatrix
    sweeps_used: int
    trace: list[float]
    overflow_events: int
    converged: bool
    rotations: int = 0

    def sigma_values(self) -> np.ndarray:
        return np.diag(self.Sigma.to_float()).copy()

    def reconstruct(self) -> np.ndarray:
        return self.U.to_float() @ self.Sigma.to_float() @ self.V.to_float().T


@dataclass(frozen=True)
class SweepSchedule:
    rounds: tuple[tuple[tuple[int, int], ...], ...]

    @property
    def n_pairs(self) -> int:
        return sum(len(r) for r in self.rounds)

    def one_based(self) -> list[list[tuple[int, int]]]:
        return [[(p + 1, q + 1) for p, q in r] for r in self.rounds]


def schedule(n: int) -> SweepSchedule:
    """Round-robin tournament over 0-based indices; round 0 pairs (0,1), (2,3), ..."""
    if n < 2 or n % 2:
        raise ValueError(f"schedule needs an even size >= 2, got {n}")
    top = list(range(0, n, 2))
    bot = list(range(1, n, 2))
    rounds = []
    for _ in range(n - 1):
        rounds.append(tuple(zip(top, bot)))
        # index 0 stays put, everything else rotates one seat
        top, bot = [top[0], bot[0]] + top[1:-1], bot[1:] + [top[-1]]
    return SweepSchedule(tuple(rounds))


# -- helpers -----------------------------------------------------------------------


def _sum_squares(x: np.ndarray, word_bits: int) -> list[int]:
    """Exact per-row sum of squares of an int64 (T, m) array."""
    if word_bits > 32:
        return [sum(int(v) * int(v) for v in row) for row in x]
    h = x >> 16
    lo = x & 0xFFFF
    H = (h * h).sum(axis=1)
    M = (h * lo).sum(axis=1)
    L = (lo * lo).sum(axis=1)
    return [(int(a) << 32) + (int(b) << 17) + int(c) for a, b, c in zip(H, M, L)]


def _offdiag(S: np.ndarray) -> np.ndarray:
    T, n, _ = S.shape
    out = S.copy()
    out[:, np.arange(n), np.arange(n)] = 0
    return out.reshape(T, n * n)


def _frob_bits(sumsq: int) -> int:
    """Smallest m with sqrt(sumsq) <= 2**m (0 for a zero matrix)."""
    if sumsq <= 1:
        return 0
    return ((sumsq - 1).bit_length() + 1) // 2


def internal_frac_for(raw_in: np.ndarray, cfg: SvdConfig) -> int:
    """Fraction bits leaving headroom for the Frobenius norm plus one guard bit."""
    if cfg.internal_frac_bits is not None:
        return cfg.internal_frac_bits
    sumsq = _sum_squares(raw_in.reshape(1, -1), cfg.input_format.word_bits)[0]
    norm_bits = _frob_bits(sumsq) - cfg.input_format.frac_bits
    headroom = max(norm_bits, 1) + 1
    return cfg.internal_bits - 1 - headroom


def factor_format(cfg: SvdConfig) -> FixedFormat:
    """Word format of U and V: sign bit, one integer bit, the rest fraction."""
    return FixedFormat(cfg.internal_bits, cfg.internal_bits - 2)


def _exact_pair(a, b, c, d):
    """Exact two-sided angles as (cos, sin) arrays via square roots only."""

    def unit(num, den):
        r = np.sqrt(num * num + den * den)
        safe = np.where(r == 0, 1.0, r)
        sd = np.where(den >= 0, 1.0, -1.0)
        cos = np.where(r == 0, 1.0, np.abs(den) / safe)
        sin = np.where(r == 0, 0.0, sd * num / safe)
        return cos, sin

    ca, sa = unit(c + b, d - a)
    cb, sb = unit(c - b, d + a)

    def half(cx, sx):
        # half of an angle in (-pi, pi], cancellation-free on both sides of pi/2
        cx = np.clip(cx, -1.0, 1.0)
        ch_pos = np.sqrt((1.0 + cx) / 2.0)
        sh_neg = np.where(sx >= 0, 1.0, -1.0) * np.sqrt((1.0 - cx) / 2.0)
        pos = cx >= 0
        ch = np.where(pos, ch_pos, sx / np.where(sh_neg == 0, 1.0, 2.0 * sh_neg))
        sh = np.where(pos, sx / np.where(ch_pos == 0, 1.0, 2.0 * ch_pos), sh_neg)
        return ch, sh

    # Theta = (alpha + beta)/2, theta = (alpha - beta)/2
    big = half(ca * cb - sa * sb, sa * cb + ca * sb)
    small = half(ca * cb + sa * sb, sa * cb - ca * sb)
    return small, big


# -- the engine ----------------------------------------------------------------------


@dataclass
class BatchOutcome:
    S: np.ndarray
    U: np.ndarray
    V: np.ndarray
    fracs: list[int]
    trace_sq: list[list[Fraction]]  # [sweep][trial], squared off-diagonal norms
    sweeps_used: np.ndarray
    converged: np.ndarray
    overflow: np.ndarray
    rotations: np.ndarray
    internal_format: list[FixedFormat] = field(default_factory=list)
    factor_format: FixedFormat | None = None


class _Engine:
    def __init__(self, variant: AlgorithmVariant, cfg: SvdConfig, n: int, T: int):
        self.variant = variant
        self.cfg = cfg
        self.float = cfg.arithmetic is Arithmetic.FLOAT or variant is AlgorithmVariant.NSVD_EXACT
        self.pair_swap = cfg.pair_swap if cfg.pair_swap is not None else n == 2
        two_step = variant in (AlgorithmVariant.FRNSVD, AlgorithmVariant.ERNSVD)
        self.sign_fix = cfg.sign_fix if cfg.sign_fix is not None else two_step
        self.overflow = np.zeros(T, dtype=np.int64)
        self.rotations = np.zeros(T, dtype=np.int64)
        self.fmt = FixedFormat(cfg.internal_bits, 0)  # saturation bounds only
        self.T = T

    def _local(self, a, b, c, d, rot):
        """Rotate the rows of the gathered 2x2 blocks (no side effects on counters)."""
        xp, xq = np.stack([a, b], -1), np.stack([c, d], -1)
        if self.float:
            cc, ss = float_coefficients(rot)
            return transform_pair_float(xp, xq, cc[..., None], ss[..., None], rot.swap[..., None])
        r = RotationArrays(rot.l[..., None], rot.s[..., None], rot.zero[..., None], rot.swap[..., None])
        p, q, _ = transform_pair_fixed(xp, xq, r, self.cfg.scale, self.fmt)
        return p, q

    def rotations_for(self, a, b, c, d):
        """(left ops, right ops) for every pair; left ops act as G.T on rows."""
        v = self.variant
        if v is AlgorithmVariant.NSVD_EXACT:
            small, big = _exact_pair(a, b, c, d)
            return [small], [big]
        if v in (AlgorithmVariant.ERFHSVD, AlgorithmVariant.ERFHSVD2):
            dv = DirectVariant.ERFHSVD if v is AlgorithmVariant.ERFHSVD else DirectVariant.ERFHSVD2
            th, big = direct_arrays(a, b, c, d, dv, self.pair_swap)
            return [th], [big]
        mode = BoundaryMode.FULL if v is AlgorithmVariant.FRNSVD else BoundaryMode.RELAXED
        rho = symmetrizing_arrays(a, b, c, d, mode)
        # R @ A acts on rows as G.T with G = R(c, -s)
        rho = RotationArrays(rho.l, -rho.s, rho.zero, rho.swap)
        p0, q0 = self._local(a, b, c, d, rho)
        phi = diagonalizing_arrays(p0[..., 0], p0[..., 1], q0[..., 0], q0[..., 1], mode, self.pair_swap)
        return [rho, phi], [phi]

    def apply(self, M, p, q, rot, rows: bool):
        """Rotate rows (or columns) p, q of every matrix in the batch, in place."""
        T, P = self.T, p.shape[0]
        if self.float:
            if isinstance(rot, tuple):
                c, s = rot
                swap = np.zeros((T, P), dtype=np.bool_)
            else:
                c, s = float_coefficients(rot)
                swap = rot.swap
            _kernels.rotate_float(
                M, p, q,
                np.ascontiguousarray(np.broadcast_to(c, (T, P)), dtype=np.float64),
                np.ascontiguousarray(np.broadcast_to(s, (T, P)), dtype=np.float64),
                np.ascontiguousarray(np.broadcast_to(swap, (T, P)), dtype=np.bool_),
                rows,
            )
            return
        l, s, zero, swap = _kernels.as_params(rot, T, P)
        _kernels.rotate_fixed(
            M, p, q, l, s, zero, swap, rows,
            self.cfg.scale.stages, self.cfg.scale.bypass, scale_cutoff(self.cfg.internal_bits),
            GUARD_BITS, self.fmt.min_raw, self.fmt.max_raw, self.overflow,
        )


    def fix_signs(self, S, U, idx, done):
        """Negate rows of Sigma (and columns of U) whose diagonal entry went negative."""
        diag = S[:, idx, idx]
        neg = (diag < 0) & ~done[:, None]
        if not neg.any():
            return
        t, k = np.nonzero(neg)
        rows = idx[k]
        if self.float:
            S[t, rows, :] = -S[t, rows, :]
            U[t, :, rows] = -U[t, :, rows]
            return
        for M, sel in ((S, np.s_[t, rows, :]), (U, np.s_[t, :, rows])):
            vals = -M[sel]
            over = vals > self.fmt.max_raw
            if over.any():
                np.add.at(self.overflow, np.broadcast_to(t[:, None], over.shape)[over], 1)
                vals = np.minimum(vals, self.fmt.max_raw)
            M[sel] = vals


def _count(rot) -> np.ndarray:
    """Non-identity rotations per trial."""
    if isinstance(rot, tuple):
        c, s = rot
        return ((c != 1.0) | (s != 0.0)).sum(axis=1)
    return (~rot.zero | rot.swap).sum(axis=1)


def _mask(rot, done):
    """Turn the rotations of finished trials into identities."""
    if not done.any():
        return rot
    keep = done[:, None]
    if isinstance(rot, RotationArrays):
        return RotationArrays(rot.l, rot.s, rot.zero | keep, rot.swap & ~keep)
    c, s = rot
    return np.where(keep, 1.0, c), np.where(keep, 0.0, s)


def run_batch(raw_in: np.ndarray, variant: AlgorithmVariant, cfg: SvdConfig, stop_early: bool = True) -> BatchOutcome:
    """Decompose a (T, n, n) batch of input-format raw words; n must be even.

    With ``stop_early`` a trial stops rotating once its off-diagonal ratio meets
    ``cfg.tol``; otherwise every trial runs ``cfg.sweeps`` sweeps.
    """
    variant = AlgorithmVariant(variant)
    raw_in = np.asarray(raw_in, dtype=np.int64)
    T, n, m = raw_in.shape
    if n != m or n % 2:
        raise ValueError(f"run_batch needs square even-sized matrices, got {raw_in.shape[1:]}")
    eng = _Engine(variant, cfg, n, T)
    fin = cfg.input_format.frac_bits

    fracs = [internal_frac_for(raw_in[t], cfg) for t in range(T)]
    for f in fracs:
        FixedFormat(cfg.internal_bits, f)
    if eng.float:
        S = np.ldexp(raw_in.astype(np.float64), -fin)
        U = np.eye(n)[None].repeat(T, axis=0)
    else:
        S = np.empty_like(raw_in)
        for t, f in enumerate(fracs):
            S[t] = raw_in[t] << (f - fin) if f >= fin else raw_in[t] >> (fin - f)
        # orthogonal factors never exceed 1, so they keep all but two bits as fraction
        U = np.eye(n, dtype=np.int64)[None].repeat(T, axis=0) << factor_format(cfg).frac_bits
    V = U.copy()

    def squares(X) -> list[Fraction]:
        if eng.float:
            # fsum is correctly rounded, so the result does not depend on SIMD width
            return [Fraction(math.fsum(row)) for row in X * X]
        return [Fraction(v, 1 << (2 * f)) for v, f in zip(_sum_squares(X, cfg.internal_bits), fracs)]

    norm_sq = squares(S.reshape(T, -1))
    tol_sq = Fraction(cfg.tol) ** 2

    def is_done(osq):
        return np.array([o == 0 or o <= tol_sq * ns for o, ns in zip(osq, norm_sq)])

    trace = [squares(_offdiag(S))]
    done = is_done(trace[0]) if stop_early else np.zeros(T, dtype=bool)
    sweeps_used = np.zeros(T, dtype=np.int64)
    rounds = [
        (np.array([p for p, _ in r], dtype=np.int64), np.array([q for _, q in r], dtype=np.int64))
        for r in schedule(n).rounds
    ]
    tr = np.arange(T)[:, None]

    for _ in range(cfg.sweeps):
        if stop_early and done.all():
            break
        active = ~done
        for p, q in rounds:
            a, b, c, d = S[tr, p, p], S[tr, p, q], S[tr, q, p], S[tr, q, q]
            left, right = eng.rotations_for(a, b, c, d)
            for rot in left:
                rot = _mask(rot, done)
                eng.apply(S, p, q, rot, rows=True)
                eng.apply(U, p, q, rot, rows=False)
                eng.rotations += _count(rot)
            for rot in right:
                rot = _mask(rot, done)
                eng.apply(S, p, q, rot, rows=False)
                eng.apply(V, p, q, rot, rows=False)
                eng.rotations += _count(rot)
            if eng.sign_fix:
                eng.fix_signs(S, U, np.concatenate([p, q]), done)
        sweeps_used += active
        osq = squares(_offdiag(S))
        trace.append(osq)
        if stop_early:
            done = done | is_done(osq)

    converged = is_done(trace[-1])
    return BatchOutcome(
        S, U, V, fracs, trace, sweeps_used, converged, eng.overflow, eng.rotations,
        [FixedFormat(cfg.internal_bits, f) for f in fracs],
        factor_format(cfg),
    )


# -- public API ----------------------------------------------------------------------


def _normalize_arrays(S, U, V, hi=None):
    """Non-negative, descending diagonal; signs go into rows of Sigma and columns of U."""
    T, n, _ = S.shape
    ar = np.arange(n)
    diag = S[:, ar, ar]
    sgn = np.where(diag < 0, -1, 1).astype(S.dtype)
    S = S * sgn[:, :, None]
    U = U * sgn[:, None, :]
    if hi is not None:
        # negating the most negative word
        S = np.minimum(S, hi)
        U = np.minimum(U, hi)
    diag = S[:, ar, ar]
    perm = np.argsort(-diag, axis=1, kind="stable")
    t = np.arange(T)[:, None, None]
    S = S[t, perm[:, :, None], perm[:, None, :]]
    U = U[t, ar[None, :, None], perm[:, None, :]]
    V = V[t, ar[None, :, None], perm[:, None, :]]
    return S, U, V


def _to_fixed(X: np.ndarray, fmt: FixedFormat) -> FixedMatrix:
    if X.dtype.kind == "f":
        return FixedMatrix.from_float(X, fmt)
    return FixedMatrix(X, fmt)


def normalize(result: SvdResult) -> SvdResult:
    fmt, ffmt = result.Sigma.format, result.U.format
    S, U, V = _normalize_arrays(
        result.Sigma.raw[None].copy(), result.U.raw[None].copy(), result.V.raw[None].copy(), fmt.max_raw
    )
    return replace(
        result, U=FixedMatrix(U[0], ffmt), Sigma=FixedMatrix(S[0], fmt), V=FixedMatrix(V[0], result.V.format)
    )


def results_from_batch(out: BatchOutcome, n: int | None = None) -> list[SvdResult]:
    """Normalize a batch and split it into per-trial results, stripping padding to ``n``."""
    S, U, V = out.S, out.U, out.V
    hi = None if S.dtype.kind == "f" else out.internal_format[0].max_raw
    S, U, V = _normalize_arrays(S, U, V, hi)
    T, size, _ = S.shape
    n = size if n is None else n
    results = []
    for t in range(T):
        fmt = out.internal_format[t]
        ffmt = out.factor_format or fmt
        trace = [math.sqrt(float(sweep[t])) for sweep in out.trace_sq]
        results.append(
            SvdResult(
                U=_to_fixed(U[t, :n, :n], ffmt),
                Sigma=_to_fixed(S[t, :n, :n], fmt),
                V=_to_fixed(V[t, :n, :n], ffmt),
                sweeps_used=int(out.sweeps_used[t]),
                trace=trace,
                overflow_events=int(out.overflow[t]),
                converged=bool(out.converged[t]),
                rotations=int(out.rotations[t]),
            )
        )
    return results


def pad_even(raw: np.ndarray) -> np.ndarray:
    """Append a zero row and column to odd-sized (..., n, n) arrays."""
    n = raw.shape[-1]
    if n % 2 == 0:
        return raw
    widths = [(0, 0)] * (raw.ndim - 2) + [(0, 1), (0, 1)]
    return np.pad(raw, widths)


def decompose(A: FixedMatrix, variant: AlgorithmVariant | str, cfg: SvdConfig = SvdConfig()) -> SvdResult:
    """A = U Sigma V^T by sweeps of 2x2 rotations; Sigma comes back normalized."""
    variant = AlgorithmVariant(variant)
    n, m = A.shape
    if n != m or n == 0:
        raise ValueError(f"decompose needs a non-empty square matrix, got {A.shape}")
    if A.format != cfg.input_format:
        cfg = replace(cfg, input_format=A.format)
    out = run_batch(pad_even(A.raw)[None], variant, cfg)
    return results_from_batch(out, n)[0]


def decompose2x2(A: FixedMatrix, variant: AlgorithmVariant | str, cfg: SvdConfig = SvdConfig()) -> SvdResult:
    """The 2x2 kernel: one rotation pair per iteration, ``cfg.sweeps`` iterations at most."""
    if A.shape != (2, 2):
        raise ValueError(f"decompose2x2 needs a 2x2 matrix, got {A.shape}")
    return decompose(A, variant, cfg)
