"""Horn inequalities: admissible index sets and the feasibility oracle.

A balanced triple is realizable by Hermitian matrices iff for every order
r < n and every admissible triple (I, J, K) of r-element index sets the
complementary sums satisfy

    sum(nu[K^c]) >= sum(lam[I^c]) + sum(mu[J^c]).

The admissible sets are defined by the classical recursion: U collects the
triples whose index sums match, and T filters U through all lower-order
triples taken *inside* the r-element sets (positions 1..r).
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from itertools import combinations

import numpy as np

from .errors import InstanceError, RangeError
from .spectra import SpectralTriple

__all__ = [
    "IndexTriple",
    "HornReport",
    "enumerate_U",
    "enumerate_T",
    "horn_check",
    "perturb_infeasible",
]


@dataclass(frozen=True)
class IndexTriple:
    """(I, J, K), each a sorted tuple of r indices from {1..n}."""

    r: int
    I: tuple[int, ...]
    J: tuple[int, ...]
    K: tuple[int, ...]


@dataclass(frozen=True)
class HornReport:
    feasible: bool
    margin: float
    witness: IndexTriple | None


def _check_order(n: int, r: int) -> None:
    if not (isinstance(n, int) and isinstance(r, int)):
        raise RangeError(f"n and r must be integers, got {n!r}, {r!r}")
    if not 1 <= r < n:
        raise RangeError(f"order r must satisfy 1 <= r < n, got r={r}, n={n}")


@lru_cache(maxsize=None)
def enumerate_U(n: int, r: int) -> tuple[IndexTriple, ...]:
    """Triples of r-subsets of {1..n} with sum(I)+sum(J) = sum(K)+r(r+1)/2."""
    _check_order(n, r)
    subsets = list(combinations(range(1, n + 1), r))
    shift = r * (r + 1) // 2
    out = []
    for I in subsets:
        for J in subsets:
            target = sum(I) + sum(J) - shift
            for K in subsets:
                if sum(K) == target:
                    out.append(IndexTriple(r, I, J, K))
    return tuple(out)


@lru_cache(maxsize=None)
def enumerate_T(n: int, r: int) -> tuple[IndexTriple, ...]:
    """The recursively filtered subset of enumerate_U(n, r).

    A triple survives iff for every p < r and every (F, G, H) in T(r, p)
    the positions it selects satisfy
        sum(I[F]) + sum(J[G]) <= sum(K[H]) + p(p+1)/2.
    """
    _check_order(n, r)
    if r == 1:
        return enumerate_U(n, r)
    filters = [(p, enumerate_T(r, p)) for p in range(1, r)]
    out = []
    for trip in enumerate_U(n, r):
        I, J, K = trip.I, trip.J, trip.K
        ok = True
        for p, lower in filters:
            bound = p * (p + 1) // 2
            for f in lower:
                lhs = sum(I[i - 1] for i in f.I) + sum(J[j - 1] for j in f.J)
                if lhs > sum(K[k - 1] for k in f.K) + bound:
                    ok = False
                    break
            if not ok:
                break
        if ok:
            out.append(trip)
    return tuple(out)


def horn_check(t: SpectralTriple) -> HornReport:
    """Minimum slack of the complement-form Horn inequalities and its witness.

    Requires a balanced triple.  The direct form sum(nu[K]) <= sum(lam[I]) +
    sum(mu[J]) differs from the complement form exactly by the trace gap, so
    both verdicts agree on balanced input; this is asserted along the way.
    """
    if not t.balanced:
        raise InstanceError(
            f"triple is not balanced: trace gap {t.trace_gap:.3e}"
        )
    full = np.arange(1, t.n + 1)
    margin = math.inf
    witness: IndexTriple | None = None
    for r in range(1, t.n):
        for trip in enumerate_T(t.n, r):
            Ic = np.setdiff1d(full, trip.I) - 1
            Jc = np.setdiff1d(full, trip.J) - 1
            Kc = np.setdiff1d(full, trip.K) - 1
            slack = t.nu[Kc].sum() - t.lam[Ic].sum() - t.mu[Jc].sum()
            direct = (t.lam[np.array(trip.I) - 1].sum()
                      + t.mu[np.array(trip.J) - 1].sum()
                      - t.nu[np.array(trip.K) - 1].sum())
            if abs(slack - direct) > 1e-9 * t.scale:
                raise InstanceError(
                    "complement and direct Horn forms disagree; "
                    f"gap {slack - direct:.3e} on {trip}"
                )
            if slack < margin:
                margin = slack
                witness = trip
    feasible = margin >= -1e-10 * t.scale
    return HornReport(feasible=bool(feasible), margin=float(margin), witness=witness)


def perturb_infeasible(t: SpectralTriple, target_margin: float) -> SpectralTriple:
    """Push a triple outside the feasible cone by widening the nu spread.

    Moves mass from the smallest to the largest nu entry, which keeps the
    triple balanced and sorted, until the Horn margin drops to target_margin
    or below.  target_margin must be negative.
    """
    if target_margin >= 0:
        raise RangeError(f"target margin must be negative, got {target_margin}")
    from .spectra import normalize_triple

    delta = max(t.scale, 1.0) * 1e-3
    for _ in range(60):
        nu = t.nu.copy()
        nu[0] += delta
        nu[-1] -= delta
        cand = normalize_triple(t.lam, t.mu, nu)
        if horn_check(cand).margin <= target_margin:
            return cand
        delta *= 2.0
    raise InstanceError("could not reach the requested infeasibility margin")
