"""Newton-identity conversions and the Hankel / companion matrix pencils.

Polynomials in the pencil parameter y are dense real coefficient arrays in
ascending order. Degrees never exceed the antidiagonal index, so nothing is
truncated by the arithmetic here.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from numpy.polynomial import polynomial as npoly

from .errors import InstanceError, RangeError

__all__ = [
    "CompanionPencil",
    "HankelPencil",
    "PsdLineReport",
    "coeffs_from_power_sums",
    "companion_eval",
    "intertwining_residual",
    "newton_hankel_S",
    "pencil_eval",
    "power_sums_from_coeffs",
    "power_sums_from_roots",
    "psd_on_line",
]


def _poly(c) -> np.ndarray:
    a = np.atleast_1d(np.asarray(c, dtype=float))
    if a.ndim != 1:
        raise InstanceError("polynomial coefficients must be one-dimensional")
    return a


def power_sums_from_roots(z, count: int) -> np.ndarray:
    """Power sums (h_0, ..., h_{count-1}) of the root list z, h_0 = len(z)."""
    if count < 1:
        raise RangeError(f"count must be >= 1, got {count}")
    z = np.asarray(z, dtype=float)
    if z.ndim != 1 or z.size == 0:
        raise InstanceError("roots must form a nonempty vector")
    return np.array([(z**k).sum() for k in range(count)])


def coeffs_from_power_sums(h, n: int, upto: int) -> list[np.ndarray]:
    """Characteristic coefficients p_1..p_upto from power sums via Newton.

    h holds h_0..h_upto (scalars or coefficient arrays in y); h_0 must be the
    constant n. Uses p_j = -(h_j + sum_k h_k p_{j-k}) / j, which keeps
    deg p_j <= j whenever deg h_j <= j.
    """
    if upto < 1:
        raise RangeError(f"upto must be >= 1, got {upto}")
    hs = [_poly(hj) for hj in h]
    if len(hs) < upto + 1:
        raise InstanceError(f"need h_0..h_{upto}, got {len(hs)} entries")
    if abs(hs[0][0] - n) > 1e-9 * (1 + abs(n)) or np.abs(hs[0][1:]).max(initial=0) > 1e-12:
        raise InstanceError("h_0 must be the constant n")
    p: list[np.ndarray] = []
    for j in range(1, upto + 1):
        acc = hs[j]
        for k in range(1, j):
            acc = npoly.polyadd(acc, npoly.polymul(hs[k], p[j - k - 1]))
        p.append(-acc / j)
    return p


def power_sums_from_coeffs(p, n: int, upto: int) -> list[np.ndarray]:
    """Power sums (h_0, ..., h_{upto-1}) from characteristic coefficients.

    p holds p_1..p_m; coefficients beyond the list are treated as zero.
    h_0 = n and h_j = -j p_j - sum_k p_k h_{j-k}.
    """
    if upto < 1:
        raise RangeError(f"upto must be >= 1, got {upto}")
    ps = [_poly(pj) for pj in p]
    h: list[np.ndarray] = [np.array([float(n)])]
    for j in range(1, upto):
        acc = -j * ps[j - 1] if j <= len(ps) else np.zeros(1)
        for k in range(1, j):
            if k <= len(ps):
                acc = npoly.polyadd(acc, -npoly.polymul(ps[k - 1], h[j - k]))
        h.append(acc)
    return h


def newton_hankel_S(z) -> np.ndarray:
    """The n x n Hankel matrix of power sums of z: entry (i, j) is sum z_k^(i+j)."""
    z = np.asarray(z, dtype=float)
    n = z.size
    if n < 1:
        raise InstanceError("roots must form a nonempty vector")
    h = power_sums_from_roots(z, 2 * n - 1)
    i = np.arange(n)
    return h[i[:, None] + i[None, :]]


@dataclass(frozen=True)
class HankelPencil:
    """Matrix polynomial H(y) = sum_i H_i y^i of real symmetric Hankel matrices.

    coeffs has shape (2n-1, n, n); the antidiagonal j of H_i carries the
    coefficient of y^i in h_j(y), so deg h_j <= j and h_0 is the constant n.
    """

    n: int
    coeffs: np.ndarray

    @classmethod
    def from_antidiagonals(cls, h_polys) -> "HankelPencil":
        hs = [_poly(hj) for hj in h_polys]
        if len(hs) % 2 != 1:
            raise InstanceError("need 2n-1 antidiagonal polynomials")
        n = (len(hs) + 1) // 2
        big = 1 + max(np.abs(hj).max() for hj in hs)
        if abs(hs[0][0] - n) > 1e-9 * n or np.abs(hs[0][1:]).max(initial=0) > 1e-12 * big:
            raise InstanceError("h_0 must be the constant n")
        for j, hj in enumerate(hs):
            if np.abs(hj[j + 1 :]).max(initial=0) > 1e-12 * big:
                raise InstanceError(f"h_{j} exceeds degree {j}")
        coeffs = np.zeros((2 * n - 1, n, n))
        for j, hj in enumerate(hs):
            for i, c in enumerate(hj[: j + 1]):
                for r in range(max(0, j - n + 1), min(j, n - 1) + 1):
                    coeffs[i, r, j - r] = c
        coeffs.setflags(write=False)
        return cls(n, coeffs)

    @classmethod
    def from_pair(cls, P, R) -> "HankelPencil":
        """Pencil whose h_j(y) is the j-th power sum of the spectrum of P + yR."""
        P = np.asarray(P, dtype=complex)
        R = np.asarray(R, dtype=complex)
        n = P.shape[0]
        if P.shape != (n, n) or R.shape != (n, n):
            raise InstanceError("P and R must be square and of equal size")
        for M in (P, R):
            if np.abs(M - M.conj().T).max() > 1e-10 * (1 + np.abs(M).max()):
                raise InstanceError("P and R must be Hermitian")
        hs = [np.array([float(n)])]
        cur = [np.eye(n, dtype=complex)]
        for j in range(1, 2 * n - 1):
            # cur = (P + yR)^j as a list of coefficient matrices
            nxt = [np.zeros((n, n), dtype=complex) for _ in range(j + 1)]
            for i, Ci in enumerate(cur):
                nxt[i] += Ci @ P
                nxt[i + 1] += Ci @ R
            cur = nxt
            hs.append(np.array([np.trace(Ci).real for Ci in cur]))
        return cls.from_antidiagonals(hs)

    def antidiagonal(self, j: int) -> np.ndarray:
        if not 0 <= j <= 2 * self.n - 2:
            raise RangeError(f"antidiagonal index {j} out of range")
        r = min(j, self.n - 1)
        return self.coeffs[: j + 1, r, j - r].copy()


def pencil_eval(Hp: HankelPencil, y0: float) -> np.ndarray:
    pows = float(y0) ** np.arange(len(Hp.coeffs))
    return np.tensordot(pows, Hp.coeffs, axes=1)


@dataclass(frozen=True)
class PsdLineReport:
    ok: bool
    min_eig: float
    at_y: float


def psd_on_line(Hp: HankelPencil, samples: int = 257) -> PsdLineReport:
    """Screen H(y) >= 0 on the real line by Chebyshev sampling.

    Samples [-R, R] with R = 1 + max coefficient magnitude, adds the
    endpoints, and separately requires the leading coefficient matrix to be
    PSD since it controls y -> +-inf. Necessary conditions only; the
    certificate comes from the Gram representation.
    """
    if samples < 3:
        raise RangeError(f"samples must be >= 3, got {samples}")
    R = 1.0 + np.abs(Hp.coeffs).max()
    k = np.arange(samples)
    ys = np.concatenate([R * np.cos((2 * k + 1) * np.pi / (2 * samples)), [-R, R]])
    ok = True
    worst, at = math.inf, 0.0
    for y in ys:
        Hy = pencil_eval(Hp, y)
        w = float(np.linalg.eigvalsh(Hy)[0])
        if w < -1e-8 * (1 + np.abs(Hy).max()):
            ok = False
        if w < worst:
            worst, at = w, float(y)
    lead = Hp.coeffs[-1]
    wl = float(np.linalg.eigvalsh(lead)[0])
    if wl < -1e-8 * (1 + np.abs(lead).max()):
        ok = False
        if wl < worst:
            worst, at = wl, math.inf
    return PsdLineReport(ok, worst, at)


@dataclass(frozen=True)
class CompanionPencil:
    """Companion pencil C(y) of the monic family x^n + p_1(y) x^(n-1) + ... + p_n(y)."""

    n: int
    p: tuple

    @classmethod
    def from_pencil(cls, Hp: HankelPencil) -> "CompanionPencil":
        if Hp.n < 2:
            # a 1x1 pencil is the constant [[1]] and determines no p_1
            raise RangeError("companion from a pencil needs n >= 2")
        h = [Hp.antidiagonal(j) for j in range(Hp.n + 1)]
        return cls(Hp.n, tuple(coeffs_from_power_sums(h, Hp.n, Hp.n)))


def companion_eval(Cp: CompanionPencil, y0: float) -> np.ndarray:
    """C(y0): subdiagonal ones, last column (-p_n(y0), ..., -p_1(y0))."""
    n = Cp.n
    C = np.zeros((n, n))
    for i in range(n - 1):
        C[i + 1, i] = 1.0
    for i in range(n):
        C[i, n - 1] = -npoly.polyval(y0, Cp.p[n - 1 - i])
    return C


def intertwining_residual(Hp: HankelPencil, Cp: CompanionPencil, y0: float) -> float:
    """Max-entry norm of H(y0) C(y0) - C(y0)^T H(y0)."""
    if Hp.n != Cp.n:
        raise InstanceError(f"pencil sizes differ: {Hp.n} vs {Cp.n}")
    H = pencil_eval(Hp, y0)
    C = companion_eval(Cp, y0)
    return float(np.abs(H @ C - C.T @ H).max())
