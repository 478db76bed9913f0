"""Approximation error over shape grids and RMS off-diagonal convergence curves.

Norms are computed from exact integer (or exact binary-float) sums and rounded once,
so CSV output does not depend on summation order or platform.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Sequence

import numpy as np

from .fixedpoint import FixedFormat, FixedMatrix, OverflowLog
from .sweep import AlgorithmVariant, SvdConfig, pad_even, run_batch

GRID_FORMAT = FixedFormat(32, 24)


def _exact_values(M) -> list[Fraction]:
    if isinstance(M, FixedMatrix):
        den = 1 << M.format.frac_bits
        return [Fraction(int(v), den) for v in M.raw.ravel()]
    return [Fraction(float(v)) for v in np.asarray(M, dtype=np.float64).ravel()]


def _off_sq(M) -> Fraction:
    vals = _exact_values(M)
    n = int(math.isqrt(len(vals)))
    return sum((v * v for k, v in enumerate(vals) if k // n != k % n), Fraction(0))


def off_diag_norm(M) -> float:
    """Frobenius norm of the off-diagonal part of a square matrix."""
    shape = M.shape if isinstance(M, FixedMatrix) else np.shape(M)
    if len(shape) != 2 or shape[0] != shape[1]:
        raise ValueError(f"off_diag_norm needs a square matrix, got {shape}")
    return _sqrt(_off_sq(M))


def _sqrt(x: Fraction) -> float:
    return math.sqrt(float(x))


def approx_error(before, after) -> float:
    """||D||: off-diagonal norm after one rotation over the norm before it."""
    den = _off_sq(before)
    if den == 0:
        raise ValueError("approx_error needs a non-zero off-diagonal before the rotation")
    return _sqrt(_off_sq(after) / den)


@dataclass(frozen=True)
class TauPoint:
    """(tau1, 1/tau2); symmetric matrices have tau2_inv = 0."""

    tau1: float
    tau2_inv: float

    def __post_init__(self):
        if not (math.isfinite(self.tau1) and math.isfinite(self.tau2_inv)):
            raise ValueError("TauPoint fields must be finite")

    @property
    def tau2(self) -> float:
        return math.inf if self.tau2_inv == 0 else 1 / self.tau2_inv

    def matrix(self) -> np.ndarray:
        """A matrix with b + c = 2 and d + a = 2 realizing this point."""
        return np.array([[1 - self.tau1, 1 + self.tau2_inv], [1 - self.tau2_inv, 1 + self.tau1]])


def tau_of(A) -> TauPoint | None:
    """tau1 = (d - a)/(b + c), 1/tau2 = (b - c)/(d + a); None when either is unbounded."""
    a, b, c, d = _exact_values(A)
    if b + c == 0 or (d + a == 0 and b != c):
        return None
    inv = Fraction(0) if b == c else (b - c) / (d + a)
    return TauPoint(float((d - a) / (b + c)), float(inv))


def tau_range(lo: float, hi: float, step: float) -> list[float]:
    """Multiples of ``step`` inside [lo, hi]; 0 is hit exactly when in range."""
    if not step > 0:
        raise ValueError("grid step must be positive")
    first = math.ceil(lo / step - 1e-9)
    last = math.floor(hi / step + 1e-9)
    return [k * step for k in range(first, last + 1)]


@dataclass(frozen=True)
class GridRow:
    tau1: float
    tau2: float
    D: float | None  # None marks a combination this synthesis cannot reach


def grid_sweep(
    variant: AlgorithmVariant | str,
    tau1_values: Sequence[float],
    tau2_values: Sequence[float],
    cfg: SvdConfig | None = None,
) -> list[GridRow]:
    """One rotation step of ``variant`` at every (tau1, tau2) and the resulting ||D||.

    ``tau2 = inf`` gives the symmetric slice. tau2 = 0 would need d + a = 0 and is
    reported as an absent row.
    """
    variant = AlgorithmVariant(variant)
    cfg = cfg or SvdConfig(input_format=GRID_FORMAT)
    cfg = SvdConfig(**{**cfg.__dict__, "sweeps": 1})
    fmt = cfg.input_format
    keys = [(t1, t2) for t1 in tau1_values for t2 in tau2_values]
    if not keys:
        raise ValueError("empty grid")
    live = [k for k, (_, t2) in enumerate(keys) if t2 != 0]
    if live:
        mats = np.stack([TauPoint(keys[k][0], 0.0 if math.isinf(keys[k][1]) else 1 / keys[k][1]).matrix() for k in live])
        log = OverflowLog()
        raw = FixedMatrix.from_float(mats.reshape(-1, 2), fmt, log).raw.reshape(-1, 2, 2)
        if log.events:
            raise ValueError(f"grid values overflow the input format {fmt}")
        out = run_batch(raw, variant, cfg, stop_early=False)
        before, after = out.trace_sq[0], out.trace_sq[-1]
        values = {k: _sqrt(after[i] / before[i]) for i, k in enumerate(live)}
    else:
        values = {}
    return [GridRow(t1, t2, values.get(k)) for k, (t1, t2) in enumerate(keys)]


def _g(x: float) -> str:
    return format(x, ".17g")


def grid_csv(rows: Iterable[GridRow]) -> str:
    lines = ["tau1,tau2,D"]
    for r in rows:
        lines.append(f"{_g(r.tau1)},{_g(r.tau2)},{'' if r.D is None else _g(r.D)}")
    return "\n".join(lines) + "\n"


@dataclass(frozen=True)
class ConvergenceCurve:
    sweeps: list[int]
    rms_odn: list[float]

    def __post_init__(self):
        if len(self.sweeps) != len(self.rms_odn):
            raise ValueError("sweeps and rms_odn differ in length")
        if any(not v >= 0 for v in self.rms_odn):
            raise ValueError("rms_odn must be non-negative")

    def ratio(self) -> list[float]:
        first = self.rms_odn[0]
        return [v / first if first else 0.0 for v in self.rms_odn]

    def first_below(self, level: float) -> int | None:
        """First sweep whose RMS is at most ``level`` times the sweep-0 value."""
        for k, r in zip(self.sweeps, self.ratio()):
            if r <= level:
                return k
        return None

    def to_csv(self) -> str:
        lines = ["sweep,rms_odn"] + [f"{k},{_g(v)}" for k, v in zip(self.sweeps, self.rms_odn)]
        return "\n".join(lines) + "\n"


def random_inputs(n: int, trials: int, seed: int, fmt: FixedFormat) -> np.ndarray:
    """Standard-normal matrices from PCG64(seed), truncated onto ``fmt``."""
    rng = np.random.Generator(np.random.PCG64(seed))
    x = rng.standard_normal((trials, n, n))
    return FixedMatrix.from_float(x.reshape(trials * n, n), fmt).raw.reshape(trials, n, n)


def rms_odn_experiment(
    n: int,
    trials: int,
    sweeps: int,
    variant: AlgorithmVariant | str,
    seed: int,
    cfg: SvdConfig | None = None,
) -> ConvergenceCurve:
    """RMS across trials of the off-diagonal norm after each sweep (sweep 0 is the input).

    Every trial runs all ``sweeps`` sweeps so fixed-point floors stay visible.
    """
    if trials < 1:
        raise ValueError("trials must be at least 1")
    if n < 1:
        raise ValueError("n must be at least 1")
    variant = AlgorithmVariant(variant)
    cfg = cfg or SvdConfig()
    cfg = SvdConfig(**{**cfg.__dict__, "sweeps": sweeps})
    raw = pad_even(random_inputs(n, trials, seed, cfg.input_format))
    out = run_batch(raw, variant, cfg, stop_early=False)
    rms = [_sqrt(sum(per, Fraction(0)) / trials) for per in out.trace_sq]
    return ConvergenceCurve(list(range(len(rms))), rms)
