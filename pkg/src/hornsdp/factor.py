"""Rank-3 truncation of the Gram matrix and its quadratic matrix factor.

A solved Gram matrix is numerically rank 3; truncating and factoring it as
F*F with F built from scaled eigenvectors yields Q(y) = Q0 + Q1 y + Q2 y**2
with H(y) close to Q(y)* Q(y) along the real line. The objective sense of
the cone program steers det Q out of the open lower half plane, and
outgoing_check verifies that after the fact instead of assuming it.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from numpy.polynomial import polynomial as npoly

from .errors import DegenerateGram, InstanceError, RangeError, SingularFactor
from .gram import GramBlock

__all__ = [
    "MatrixPoly",
    "OutgoingReport",
    "factor_gram",
    "outgoing_check",
    "rank_truncate",
]


@dataclass(frozen=True)
class MatrixPoly:
    """Matrix polynomial sum_i coeffs[i] y^i; coefficient index = power of y."""

    coeffs: tuple

    def __post_init__(self):
        cs = tuple(np.array(c, dtype=complex) for c in self.coeffs)
        if not cs:
            raise InstanceError("a matrix polynomial needs at least one coefficient")
        shape = cs[0].shape
        if len(shape) != 2 or any(c.shape != shape for c in cs):
            raise InstanceError("coefficients must be equally sized matrices")
        for c in cs:
            c.flags.writeable = False
        object.__setattr__(self, "coeffs", cs)

    @property
    def n_rows(self) -> int:
        return self.coeffs[0].shape[0]

    @property
    def n_cols(self) -> int:
        return self.coeffs[0].shape[1]

    @property
    def degree(self) -> int:
        return len(self.coeffs) - 1

    def at(self, y) -> np.ndarray:
        acc = np.zeros(self.coeffs[0].shape, dtype=complex)
        for c in reversed(self.coeffs):
            acc = acc * y + c
        return acc


def rank_truncate(g, target_rank: int) -> np.ndarray:
    """Nearest positive-semidefinite matrix of rank at most target_rank.

    Keeps the target_rank largest eigenvalues of the Hermitianized input,
    clamped at zero, and drops the rest. The spectral-norm error is the
    larger of the first dropped magnitude and the most negative kept value;
    the caller judges whether that is acceptable.
    """
    G = g.G if isinstance(g, GramBlock) else np.asarray(g, dtype=complex)
    if G.ndim != 2 or G.shape[0] != G.shape[1]:
        raise InstanceError(f"expected a square matrix, got shape {G.shape}")
    if not 1 <= target_rank <= G.shape[0]:
        raise RangeError(f"target rank {target_rank} outside 1..{G.shape[0]}")
    w, V = np.linalg.eigh((G + G.conj().T) / 2)
    w, V = w[::-1], V[:, ::-1]
    sig = np.sort(np.abs(w))[::-1]
    if sig[0] == 0.0 or sig[target_rank - 1] < 1e-10 * sig[0]:
        raise DegenerateGram(
            f"eigenvalue {target_rank} is {sig[target_rank - 1]:.3e} against "
            f"top {sig[0]:.3e}; no stable rank-{target_rank} factor"
        )
    kept = np.clip(w[:target_rank], 0.0, None)
    Gh = (V[:, :target_rank] * kept) @ V[:, :target_rank].conj().T
    return (Gh + Gh.conj().T) / 2


def factor_gram(g_hat, n: int) -> MatrixPoly:
    """Factor a PSD matrix of rank <= n as F*F and split F into [Q0|Q1|...].

    F stacks sqrt(eigenvalue) times the conjugated leading eigenvectors, so
    F*F reproduces g_hat to rounding whenever the rank precondition holds;
    the n column blocks of F are the coefficients of Q(y), degree n-1.
    """
    G = np.asarray(g_hat, dtype=complex)
    if G.shape != (n * n, n * n):
        raise InstanceError(f"expected a {n * n}x{n * n} matrix, got {G.shape}")
    w, V = np.linalg.eigh((G + G.conj().T) / 2)
    w, V = w[::-1], V[:, ::-1]
    top = max(abs(w[0]), abs(w[-1]))
    if w[-1] < -1e-8 * top:
        raise InstanceError("matrix is not positive semidefinite")
    if w.size > n and abs(w[n]) > 1e-8 * top:
        raise InstanceError(f"rank exceeds {n}; truncate first")
    F = np.sqrt(np.clip(w[:n], 0.0, None))[:, None] * V[:, :n].conj().T
    return MatrixPoly(tuple(F[:, n * i : n * (i + 1)] for i in range(n)))


@dataclass(frozen=True)
class OutgoingReport:
    """Roots of det Q; outgoing means none in the open lower half plane."""

    outgoing: bool
    degree: int
    roots: np.ndarray
    worst: float


def outgoing_check(q: MatrixPoly) -> OutgoingReport:
    """Interpolate det Q(y), root-find, and test the half-plane condition.

    Samples at Chebyshev points on [-2, 2], fits the full interpolating
    polynomial, and zeroes coefficients below 1e-7 of the largest before
    reading off the degree and roots. A root offends when its imaginary
    part is below -1e-7 (1 + |root|); worst records the smallest such
    normalized imaginary part (inf when det Q has no roots at all).
    """
    if q.n_rows != q.n_cols:
        raise InstanceError("determinant check needs a square factor")
    m = max(q.degree * q.n_rows + 1, 7)
    ys = 2.0 * np.cos(np.pi * (2 * np.arange(m) + 1) / (2 * m))
    dets = np.array([np.linalg.det(q.at(y)) for y in ys])
    entry = max(np.abs(c).max() for c in q.coeffs)
    # Hadamard-style ceiling for |det| on the sample interval; samples all
    # below its rounding floor mean the determinant vanishes identically
    ceiling = math.factorial(q.n_rows) * (entry * 2.0 ** (q.degree + 1)) ** q.n_rows
    if np.abs(dets).max() <= 1e-12 * ceiling:
        raise SingularFactor("det Q vanishes at every sample point")
    c = npoly.polyfit(ys, dets, m - 1)
    c[np.abs(c) < 1e-7 * np.abs(c).max()] = 0.0
    c = np.trim_zeros(c, "b")
    roots = npoly.polyroots(c) if c.size > 1 else np.array([], dtype=complex)
    if roots.size:
        worst = float((roots.imag / (1.0 + np.abs(roots))).min())
    else:
        worst = math.inf
    return OutgoingReport(
        outgoing=worst >= -1e-7, degree=int(c.size) - 1, roots=roots, worst=worst
    )
