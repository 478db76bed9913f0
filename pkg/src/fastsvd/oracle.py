"""Reference rotations and a brute-force SVD in double precision.

Rotation matrices follow R(x) = [[cos x, sin x], [-sin x, cos x]] throughout, and a
two-sided step is Sigma = R(theta).T @ A @ R(Theta).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

HALF_PI = math.pi / 2


class OracleError(RuntimeError):
    pass


@dataclass(frozen=True)
class ExactRotation:
    angle: float

    def __post_init__(self):
        if not abs(self.angle) <= HALF_PI:
            raise ValueError(f"angle {self.angle} outside [-pi/2, pi/2]")

    @property
    def c(self) -> float:
        return math.cos(self.angle)

    @property
    def s(self) -> float:
        return math.sin(self.angle)

    def matrix(self) -> np.ndarray:
        return np.array([[self.c, self.s], [-self.s, self.c]])


def _atan_ratio(num: float, den: float) -> float:
    """arctan(num/den) in [-pi/2, pi/2]; den = 0 maps to sign(num) * pi/2, 0/0 to 0."""
    if den == 0:
        if num == 0:
            return 0.0
        return math.copysign(HALF_PI, num)
    return math.atan(num / den)


def _entries(A) -> tuple[float, float, float, float]:
    A = np.asarray(A, dtype=np.float64)
    if A.shape != (2, 2):
        raise ValueError(f"expected a 2x2 matrix, got {A.shape}")
    return float(A[0, 0]), float(A[0, 1]), float(A[1, 0]), float(A[1, 1])


def exact_symmetrize(A) -> ExactRotation:
    """rho with R(rho) @ A symmetric: tan rho = (c - b)/(d + a)."""
    a, b, c, d = _entries(A)
    return ExactRotation(_atan_ratio(c - b, d + a))


def exact_diagonalize(B) -> ExactRotation:
    """phi with R(phi).T @ B @ R(phi) diagonal for symmetric B: tan 2phi = 2q/(r - p)."""
    p, q, _, r = _entries(B)
    return ExactRotation(_atan_ratio(2 * q, r - p) / 2)


def _wrap(x: float) -> float:
    if x > HALF_PI:
        return x - math.pi
    if x < -HALF_PI:
        return x + math.pi
    return x


def exact_fhsvd(A) -> tuple[ExactRotation, ExactRotation]:
    """(theta, Theta) diagonalizing A, ordered so that |d1| >= |d2|."""
    a, b, c, d = _entries(A)
    alpha = _atan_ratio(c + b, d - a)
    beta = _atan_ratio(c - b, d + a)
    big = (alpha + beta) / 2
    small = (alpha - beta) / 2
    M = np.array([[a, b], [c, d]])
    S = ExactRotation(small).matrix().T @ M @ ExactRotation(big).matrix()
    if abs(S[0, 0]) < abs(S[1, 1]):
        # a quarter turn on both sides exchanges the diagonal entries
        small, big = _wrap(small + HALF_PI), _wrap(big + HALF_PI)
    return ExactRotation(small), ExactRotation(big)


def _rot(x: float) -> np.ndarray:
    c, s = math.cos(x), math.sin(x)
    return np.array([[c, s], [-s, c]])


def _pair_angles(a, b, c, d):
    alpha = _atan_ratio(c + b, d - a)
    beta = _atan_ratio(c - b, d + a)
    return (alpha - beta) / 2, (alpha + beta) / 2


def brute_svd(A, tol: float = 1e-14, max_sweeps: int = 100):
    """Cyclic two-sided Jacobi with exact rotations. Returns (U, sigma, V), sigma descending."""
    S = np.array(A, dtype=np.float64)
    if S.ndim != 2 or S.shape[0] != S.shape[1]:
        raise ValueError(f"brute_svd needs a square matrix, got {S.shape}")
    n = S.shape[0]
    if n > 8:
        raise ValueError("brute_svd is limited to n <= 8")
    U = np.eye(n)
    V = np.eye(n)
    norm = np.linalg.norm(S)

    def off():
        # summed directly: total minus diagonal cancels at about sqrt(eps) * norm
        return float(np.linalg.norm(S - np.diag(np.diag(S))))

    for _ in range(max_sweeps):
        if off() <= tol * norm:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                a, b, c, d = S[p, p], S[p, q], S[q, p], S[q, q]
                if b == 0 and c == 0:
                    continue
                th, Th = _pair_angles(a, b, c, d)
                L, Rr = _rot(th), _rot(Th)
                idx = [p, q]
                S[idx, :] = L.T @ S[idx, :]
                S[:, idx] = S[:, idx] @ Rr
                U[:, idx] = U[:, idx] @ L
                V[:, idx] = V[:, idx] @ Rr
    else:
        if off() > tol * norm:
            raise OracleError(f"no convergence after {max_sweeps} sweeps, off-diagonal {off():.3e}")
    sigma = np.diag(S).copy()
    sgn = np.where(sigma < 0, -1.0, 1.0)
    sigma *= sgn
    U = U * sgn
    order = np.argsort(-sigma, kind="stable")
    return U[:, order], sigma[order], V[:, order]


def singular_values_2x2(A) -> tuple[float, float]:
    """sqrt of the eigenvalues of A.T A from the characteristic polynomial."""
    a, b, c, d = _entries(A)
    tr = a * a + b * b + c * c + d * d
    det = abs(a * d - b * c)
    # s1 + s2 = sqrt(tr + 2 det), s1 - s2 = sqrt(tr - 2 det)
    plus = math.sqrt(tr + 2 * det)
    minus = math.sqrt(max(tr - 2 * det, 0.0))
    return (plus + minus) / 2, (plus - minus) / 2
