"""Spectral triples and Hermitian pairs.

A triple (lambda, mu, nu) of non-increasing real vectors is the data of the
additive inverse eigenvalue problem: find Hermitian A, B with spectra lambda
and mu whose sum has spectrum nu.  Everything downstream assumes the triple is
*balanced*, i.e. sum(lambda) + sum(mu) = sum(nu), which is forced by taking
traces.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np

from .errors import InstanceError

__all__ = [
    "SpectralTriple",
    "HermitianPair",
    "normalize_triple",
    "random_triple",
    "eigvalsh_desc",
    "hermitian_part",
]


def eigvalsh_desc(M: np.ndarray) -> np.ndarray:
    """Eigenvalues of the Hermitian part of M, non-increasing."""
    M = np.asarray(M)
    return np.linalg.eigvalsh((M + M.conj().T) / 2)[::-1]


def hermitian_part(M: np.ndarray) -> np.ndarray:
    return (M + np.asarray(M).conj().T) / 2


@dataclass(frozen=True, eq=False)
class SpectralTriple:
    """Balanced-or-not triple of non-increasing spectra of common length n."""

    n: int
    lam: np.ndarray
    mu: np.ndarray
    nu: np.ndarray
    trace_gap: float

    @property
    def scale(self) -> float:
        """1 + max of the three l1 norms; the unit for every tolerance."""
        return 1.0 + max(
            np.abs(self.lam).sum(), np.abs(self.mu).sum(), np.abs(self.nu).sum()
        )

    @property
    def balanced(self) -> bool:
        tol = 1e-9 * (1.0 + np.abs(self.lam).sum() + np.abs(self.mu).sum())
        return abs(self.trace_gap) <= tol

    def __repr__(self) -> str:  # keep reprs short in test output
        fmt = lambda v: "(" + ", ".join(f"{x:.6g}" for x in v) + ")"
        return f"SpectralTriple(lam={fmt(self.lam)}, mu={fmt(self.mu)}, nu={fmt(self.nu)})"


def _clean_vector(v, name: str) -> np.ndarray:
    arr = np.asarray(v, dtype=float).ravel()
    if arr.size == 0:
        raise InstanceError(f"{name} is empty")
    if not np.all(np.isfinite(arr)):
        raise InstanceError(f"{name} contains NaN or infinity")
    out = np.sort(arr)[::-1].copy()
    out.setflags(write=False)
    return out


def normalize_triple(lam, mu, nu) -> SpectralTriple:
    """Sort each spectrum non-increasing and record the trace gap.

    Idempotent; raises InstanceError on length mismatch or non-finite input.
    """
    lam = _clean_vector(lam, "lambda")
    mu = _clean_vector(mu, "mu")
    nu = _clean_vector(nu, "nu")
    if not (lam.size == mu.size == nu.size):
        raise InstanceError(
            f"length mismatch: {lam.size}, {mu.size}, {nu.size}"
        )
    gap = float(lam.sum() + mu.sum() - nu.sum())
    return SpectralTriple(n=lam.size, lam=lam, mu=mu, nu=nu, trace_gap=gap)


@dataclass(frozen=True, eq=False)
class HermitianPair:
    """A solution pair with its spectral residuals (max abs deviation)."""

    A: np.ndarray
    B: np.ndarray
    residual_lambda: float
    residual_mu: float
    residual_nu: float
    diagnostics: dict = field(default_factory=dict)


def make_pair(A: np.ndarray, B: np.ndarray, t: SpectralTriple, diagnostics=None) -> HermitianPair:
    """Bundle (A, B) with residuals measured against t."""
    return HermitianPair(
        A=A,
        B=B,
        residual_lambda=float(np.abs(eigvalsh_desc(A) - t.lam).max()),
        residual_mu=float(np.abs(eigvalsh_desc(B) - t.mu).max()),
        residual_nu=float(np.abs(eigvalsh_desc(A + B) - t.nu).max()),
        diagnostics=diagnostics or {},
    )


def random_triple(n: int, seed: int, *, min_gap: float = 1e-8):
    """Seeded random realizable instance with its ground-truth witness.

    Draws real standard-normal matrices, symmetrizes, and reads off the
    spectra of A, B and A+B, so the triple is realizable by construction.
    Spectra with an eigenvalue gap below min_gap*scale (in lambda or mu) are
    regenerated with the incremented seed, keeping the draw deterministic.
    """
    if n < 1:
        raise InstanceError(f"n must be positive, got {n}")
    for attempt in itertools.count():
        rng = np.random.default_rng(seed + attempt)
        a = rng.standard_normal((n, n))
        b = rng.standard_normal((n, n))
        A = a + a.T
        B = b + b.T
        t = normalize_triple(
            np.linalg.eigvalsh(A), np.linalg.eigvalsh(B), np.linalg.eigvalsh(A + B)
        )
        if n == 1:
            break
        gap = min(np.diff(t.lam[::-1]).min(), np.diff(t.mu[::-1]).min())
        if gap > min_gap * t.scale:
            break
    return t, make_pair(A, B, t)
