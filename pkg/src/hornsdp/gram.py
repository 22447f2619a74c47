"""Gram-matrix semidefinite step for size-3 triples, plus the closed 2x2 analysis.

The conic solve runs on a triple rescaled to unit spectral radius; results are
rescaled back, which is exact because every constraint is homogeneous under
(lam, mu, nu) -> c(lam, mu, nu) with G_ij -> D G_ij D, D = diag(1, c, c^2).
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import Optional

import cvxpy as cp
import numpy as np
from numpy.polynomial import polynomial as npoly

from .admissibility import IndexTriple, horn_check
from .errors import ConsistencyError, InstanceError, SolverStalled, UnsupportedSize
from .newton import HankelPencil, newton_hankel_S
from .spectra import SpectralTriple, normalize_triple

__all__ = [
    "GramBlock",
    "Infeasible",
    "LowOrderData",
    "N2Report",
    "SdpProblem",
    "assemble_certificate",
    "assemble_sdp",
    "gram_to_pencil",
    "n2_gram_analysis",
    "solve_sdp",
    "step1_low_order",
]

# rows/columns of the 9x9 Gram matrix that are identically zero for n=3;
# the cone variable keeps only the complementary 6x6 core
KEPT = (0, 1, 2, 4, 5, 8)
_KIDX = {g: k for k, g in enumerate(KEPT)}


@dataclass(frozen=True)
class LowOrderData:
    """The degree <= 2 data pinned by the three interpolation points.

    h1 and h2 are the unique polynomials in y of degree 1 and 2 whose values
    at y = 0, 1, -1 are the power sums of nu/2, lambda, mu; p1, p2 and the
    h3-independent part of p3 follow from the Newton identities.
    """

    h1: np.ndarray
    h2: np.ndarray
    p1: np.ndarray
    p2: np.ndarray
    p3_known_part: np.ndarray


def step1_low_order(t: SpectralTriple) -> LowOrderData:
    if t.n != 3:
        raise UnsupportedSize(f"low-order assembly requires n=3, got n={t.n}")
    if not t.balanced:
        raise InstanceError(f"trace mismatch {t.trace_gap:.3e}")
    s1l, s1m, s1n = t.lam.sum(), t.mu.sum(), t.nu.sum()
    s2l, s2m, s2n = (t.lam**2).sum(), (t.mu**2).sum(), (t.nu**2).sum()
    h1 = np.array([s1n / 2, s1l - s1n / 2])
    h2 = np.array([s2n / 4, (s2l - s2m) / 2, (s2l + s2m) / 2 - s2n / 4])
    p1 = -h1
    p2 = -npoly.polysub(h2, npoly.polymul(h1, h1)) / 2
    p3k = -npoly.polyadd(npoly.polymul(h1, p2), npoly.polymul(h2, p1)) / 3
    return LowOrderData(h1, h2, p1, p2, p3k)


@dataclass
class SdpProblem:
    kind: str  # "triple" or "certificate"
    problem: cp.Problem
    Gc: cp.Variable
    hv: dict
    sense: int
    unit: float
    t: Optional[SpectralTriple] = None
    pencil: Optional[HankelPencil] = None


@dataclass(frozen=True)
class GramBlock:
    """Solved 9x9 Hermitian Gram matrix, viewed as 3x3 blocks G_ij."""

    n: int
    G: np.ndarray
    objective_value: float
    solver_stats: dict
    triple: Optional[SpectralTriple]

    def block(self, i: int, j: int) -> np.ndarray:
        return self.G[3 * i : 3 * i + 3, 3 * j : 3 * j + 3]

    def hankel_sum(self, p: int) -> np.ndarray:
        acc = np.zeros((3, 3), dtype=complex)
        for i in range(max(0, p - 2), min(2, p) + 1):
            acc += self.block(i, p - i)
        return acc


@dataclass(frozen=True)
class Infeasible:
    """Solver infeasibility certificate, cross-checked against the inequality margin."""

    status: str
    horn_margin: Optional[float]
    witness: Optional[IndexTriple]


def _entry(Gc, a: int, b: int):
    if a in _KIDX and b in _KIDX:
        return Gc[_KIDX[a], _KIDX[b]]
    return None


def _hankel_entry(Gc, p: int, r: int, s: int):
    # entry (r, s) of sum_k G_{p-k,k}, or None if every term is a deleted zero
    terms = []
    for i in range(max(0, p - 2), min(2, p) + 1):
        e = _entry(Gc, 3 * i + r, 3 * (p - i) + s)
        if e is not None:
            terms.append(e)
    if not terms:
        return None
    acc = terms[0]
    for e in terms[1:]:
        acc = acc + e
    return acc


def _real_eq(expr, value):
    return [cp.real(expr) == value, cp.imag(expr) == 0]


def assemble_sdp(t: SpectralTriple, low: Optional[LowOrderData] = None, sense: int = 1) -> SdpProblem:
    """Conic feasibility problem over the 6x6 Hermitian core of G.

    Constraints: G >= 0; G_00 interpolates nu/2; block sums along each
    antidiagonal p form Hankel matrices whose antidiagonal values are scalar
    unknowns h^(p)_j, zero for j < p; row sums of the h^(p)_j match the
    power-sum gaps of lambda and mu at y = +-1; and the coefficient rows in y
    that force p4(y) to vanish identically. Objective: sense=+1 maximizes
    Im tr G_12 (sense=-1 minimizes), which steers the factorization toward a
    determinant with roots in one half plane; the direction is verified
    downstream, not assumed.
    """
    if t.n != 3:
        raise UnsupportedSize(f"semidefinite step requires n=3, got n={t.n}")
    if sense not in (1, -1):
        raise InstanceError(f"sense must be +1 or -1, got {sense}")
    if low is not None:
        ref = step1_low_order(t)
        for a, b in ((low.h1, ref.h1), (low.h2, ref.h2)):
            if np.abs(np.asarray(a, float) - b).max() > 1e-9 * t.scale**2:
                raise InstanceError("low-order data does not match the triple")
    unit = float(max(np.abs(t.lam).max(), np.abs(t.mu).max(), np.abs(t.nu).max()))
    if unit == 0.0:
        unit = 1.0
    tu = normalize_triple(t.lam / unit, t.mu / unit, t.nu / unit)
    lo = step1_low_order(tu)

    Gc = cp.Variable((6, 6), hermitian=True, name="Gcore")
    hv = {(p, j): cp.Variable(name=f"h{p}{j}") for p in range(1, 5) for j in range(p, 5)}
    cons = [Gc >> 0, Gc[0:3, 0:3] == newton_hankel_S(tu.nu / 2)]

    for p in range(1, 5):
        for r in range(3):
            for s in range(3):
                e = _hankel_entry(Gc, p, r, s)
                j = r + s
                if e is None:
                    continue
                if j < p:
                    cons += _real_eq(e, 0.0)
                else:
                    cons += _real_eq(e, hv[(p, j)])

    # power sums of nu/2 fill antidiagonal coefficients at y^0
    c_nu = [float(((tu.nu / 2) ** j).sum()) for j in range(5)]
    for j in range(1, 5):
        row = [hv[(p, j)] for p in range(1, min(j, 4) + 1)]
        alt = [(-1.0) ** p * hv[(p, j)] for p in range(1, min(j, 4) + 1)]
        cons.append(sum(row) == float((tu.lam**j).sum()) - c_nu[j])
        cons.append(sum(alt) == float((tu.mu**j).sum()) - c_nu[j])

    # coefficient rows of h4 - (4/3) h1 h3 + h1 p3_known + h2 p2 == 0 in y;
    # the y^0 row is parameter-only and must vanish identically
    K = np.zeros(5)
    K_raw = npoly.polyadd(
        npoly.polymul(lo.h1, lo.p3_known_part), npoly.polymul(lo.h2, lo.p2)
    )
    K[: len(K_raw)] = K_raw
    a0, a1 = lo.h1
    const_row = c_nu[4] - (4.0 / 3.0) * a0 * c_nu[3] + K[0]
    if abs(const_row) > 1e-9 * (1 + abs(c_nu[4])):
        raise ConsistencyError(f"constant row of the p4 identity is {const_row:.3e}")
    for w in range(1, 5):
        h3_w = hv[(w, 3)] if w <= 3 else 0.0
        h3_wm1 = hv[(w - 1, 3)] if w >= 2 else c_nu[3]
        row = hv[(w, 4)] - (4.0 / 3.0) * (a0 * h3_w + a1 * h3_wm1) + K[w]
        cons.append(row / (1 + abs(K[w])) == 0)

    objective = cp.Minimize(-sense * cp.imag(Gc[4, 5]))
    return SdpProblem("triple", cp.Problem(objective, cons), Gc, hv, sense, unit, t=t)


def assemble_certificate(pencil: HankelPencil, sense: int = 1) -> SdpProblem:
    """Gram feasibility problem with every Hankel value pinned by a pencil.

    Used when the full antidiagonal data h_j(y) is known (moment input) and
    only the existence of a matching G >= 0 is in question.
    """
    if pencil.n != 3:
        raise UnsupportedSize(f"certificate assembly requires n=3, got n={pencil.n}")
    if sense not in (1, -1):
        raise InstanceError(f"sense must be +1 or -1, got {sense}")
    Gc = cp.Variable((6, 6), hermitian=True, name="Gcore")
    cons = [Gc >> 0, Gc[0:3, 0:3] == pencil.coeffs[0]]
    for p in range(1, 5):
        table = {j: pencil.antidiagonal(j)[p] for j in range(p, 5)}
        for r in range(3):
            for s in range(3):
                e = _hankel_entry(Gc, p, r, s)
                j = r + s
                if e is None:
                    continue
                cons += _real_eq(e, 0.0 if j < p else float(table[j]))
    objective = cp.Minimize(-sense * cp.imag(Gc[4, 5]))
    return SdpProblem(
        "certificate", cp.Problem(objective, cons), Gc, {}, sense, 1.0, pencil=pencil
    )


def _gram_from_solution(prob: SdpProblem) -> GramBlock:
    Gv = np.asarray(prob.Gc.value, dtype=complex)
    Gv = (Gv + Gv.conj().T) / 2
    G9 = np.zeros((9, 9), dtype=complex)
    G9[np.ix_(KEPT, KEPT)] = Gv
    w = np.tile(prob.unit ** np.arange(3), 3)
    G = G9 * np.outer(w, w)
    G.setflags(write=False)
    st = prob.problem.solver_stats
    stats = {
        "status": prob.problem.status,
        "solver": getattr(st, "solver_name", None),
        "iterations": getattr(st, "num_iters", None),
        "solve_time_s": getattr(st, "solve_time", None),
        "sense": prob.sense,
    }
    obj = float(np.imag(G[3, 6] + G[4, 7] + G[5, 8]))
    return GramBlock(3, G, obj, stats, prob.t)


def _check_gram(g: GramBlock, prob: SdpProblem) -> Optional[str]:
    gnorm = float(np.abs(np.linalg.eigvalsh((g.G + g.G.conj().T) / 2)).max())
    if np.linalg.eigvalsh((g.G + g.G.conj().T) / 2)[0] < -1e-8 * gnorm:
        return "Gram matrix is not positive semidefinite within tolerance"
    for p in range(5):
        Hp = g.hankel_sum(p)
        if np.abs(Hp.imag).max() > 1e-8 * (1 + gnorm):
            return f"antidiagonal block sum {p} is not real"
        for j in range(5):
            vals = [Hp.real[r, j - r] for r in range(max(0, j - 2), min(j, 2) + 1)]
            if max(vals) - min(vals) > 1e-8 * (1 + gnorm):
                return f"block sum {p} is not Hankel on antidiagonal {j}"
    if prob.kind == "triple":
        t = prob.t
        tol = 1e-7 * t.scale
        checks = (
            (g.block(0, 0), newton_hankel_S(t.nu / 2)),
            (sum(g.block(i, j) for i in range(3) for j in range(3)), newton_hankel_S(t.lam)),
            (
                sum((-1.0) ** (i + j) * g.block(i, j) for i in range(3) for j in range(3)),
                newton_hankel_S(t.mu),
            ),
        )
        for got, want in checks:
            if np.abs(got - want).max() > tol:
                return f"interpolation residual {np.abs(got - want).max():.3e} exceeds {tol:.3e}"
    else:
        pencil = prob.pencil
        hnorm = 1 + float(np.abs(pencil.coeffs).max())
        for p in range(5):
            got = g.hankel_sum(p).real
            if np.abs(got - pencil.coeffs[p]).max() > 1e-7 * hnorm:
                return f"pinned antidiagonal data violated at order {p}"
    return None


def _solve_once(prob: SdpProblem, solver: str, tol: float) -> Optional[str]:
    kwargs = (
        {"eps": tol}
        if solver == "SCS"
        else {"tol_gap_abs": tol, "tol_gap_rel": tol, "tol_feas": tol}
    )
    try:
        with warnings.catch_warnings():
            warnings.filterwarnings("ignore", message="Solution may be inaccurate")
            prob.problem.solve(solver=getattr(cp, solver), **kwargs)
        return None
    except cp.error.SolverError as exc:
        return f"conic solver failed: {exc}"
    except BaseException as exc:
        # the solver backend raises rust panics that do not subclass Exception
        if type(exc).__name__ == "PanicException":
            return f"conic solver panicked: {exc}"
        raise


def solve_sdp(prob: SdpProblem, tol: float = 1e-11):
    """Run the conic solve; GramBlock, Infeasible, or SolverStalled.

    Walks a ladder of solver attempts, loosening tolerance and finally
    switching solvers, until one produces either a solution passing the
    residual checks or an infeasibility certificate.  Infeasibility is only
    reported when the certificate agrees with the inequality oracle; a hard
    certificate on an oracle-feasible triple raises ConsistencyError instead
    of being passed through.
    """
    attempts = (
        ("CLARABEL", tol),
        ("CLARABEL", tol * 100),
        ("SCS", max(tol, 1e-9)),
        ("SCS", max(tol * 100, 1e-7)),
    )
    why = "no solver attempt ran"
    for solver, tl in attempts:
        why = _solve_once(prob, solver, tl)
        if why is not None:
            continue
        status = prob.problem.status
        if status in (cp.OPTIMAL, cp.OPTIMAL_INACCURATE):
            g = _gram_from_solution(prob)
            why = _check_gram(g, prob)
            if why is None:
                return g
            why = f"solution rejected ({status}): {why}"
            continue
        if status in (cp.INFEASIBLE, cp.INFEASIBLE_INACCURATE):
            if prob.kind != "triple":
                return Infeasible(status, None, None)
            rep = horn_check(prob.t)
            if rep.margin > 1e-9 * prob.t.scale:
                if status == cp.INFEASIBLE:
                    raise ConsistencyError(
                        f"infeasibility certificate despite margin {rep.margin:.3e}"
                    )
                why = f"weak infeasibility certificate against margin {rep.margin:.3e}"
                continue
            return Infeasible(status, rep.margin, rep.witness)
        why = f"solver finished with status {status}"
    raise SolverStalled(why)


def gram_to_pencil(g: GramBlock) -> HankelPencil:
    """Read the Hankel pencil off a solved Gram matrix.

    Antidiagonals of each block sum are averaged to exact Hankel form; values
    below 1e-10 of the matrix magnitude are zeroed, and structurally-zero
    positions are required to be numerically small before being dropped.
    """
    gnorm = float(np.abs(g.G).max())
    table = np.zeros((5, 5))
    for p in range(5):
        Hp = g.hankel_sum(p)
        if np.abs(Hp.imag).max() > 1e-8 * (1 + gnorm):
            raise ConsistencyError(f"block sum {p} has imaginary part")
        for j in range(5):
            vals = [Hp.real[r, j - r] for r in range(max(0, j - 2), min(j, 2) + 1)]
            v = float(np.mean(vals))
            if max(vals) - min(vals) > 1e-8 * (1 + gnorm):
                raise ConsistencyError(f"block sum {p} deviates from Hankel at {j}")
            if abs(v) < 1e-10 * gnorm:
                v = 0.0
            if j < p:
                if abs(v) > 1e-8 * (1 + gnorm):
                    raise ConsistencyError(f"h^({p})_{j} = {v:.3e} should vanish")
                v = 0.0
            table[p, j] = v
    if abs(table[0, 0] - 3.0) > 1e-7 * (1 + gnorm):
        raise ConsistencyError(f"h_0 = {table[0, 0]} is not the size 3")
    table[0, 0] = 3.0
    pencil = HankelPencil.from_antidiagonals([table[: j + 1, j] for j in range(5)])
    if g.triple is not None:
        t = g.triple
        from .newton import pencil_eval

        targets = (
            (0.0, newton_hankel_S(t.nu / 2)),
            (1.0, newton_hankel_S(t.lam)),
            (-1.0, newton_hankel_S(t.mu)),
        )
        for y0, want in targets:
            err = np.abs(pencil_eval(pencil, y0) - want).max()
            if err > 1e-7 * t.scale:
                raise ConsistencyError(
                    f"pencil misses interpolation at y={y0:+.0f} by {err:.3e}"
                )
    return pencil


@dataclass(frozen=True)
class N2Report:
    """Closed-form 2x2 analysis: Schur complement PSD test and determinant."""

    shift: float
    G: np.ndarray
    schur: np.ndarray
    psd_ok: bool
    det_a: float
    det_factored: float


def n2_gram_analysis(t: SpectralTriple) -> N2Report:
    """The fully pinned 4x4 Gram matrix for n=2 and its feasibility test.

    Shifts lambda and nu down by lambda_2 first (recorded in the report), so
    the determinant identity below is evaluated in shifted coordinates:
    det A(x) = -16 (x-l1-m1)(x-l1-m2)(x-m1)(x-m2) at x = nu_1.
    """
    if t.n != 2:
        raise UnsupportedSize(f"closed-form analysis requires n=2, got n={t.n}")
    if not t.balanced:
        raise InstanceError(f"trace mismatch {t.trace_gap:.3e}")
    shift = float(t.lam[1])
    lam = t.lam - shift
    mu = t.mu.copy()
    nu = t.nu - shift
    s1l, s1m, s1n = lam.sum(), mu.sum(), nu.sum()
    s2l, s2m, s2n = (lam**2).sum(), (mu**2).sum(), (nu**2).sum()
    G = np.array(
        [
            [2.0, s1n / 2, 0.0, (s1l - s1m) / 2],
            [s1n / 2, s2n / 4, 0.0, (s2l - s2m) / 4],
            [0.0, 0.0, 0.0, 0.0],
            [(s1l - s1m) / 2, (s2l - s2m) / 4, 0.0, (2 * s2l + 2 * s2m - s2n) / 4],
        ]
    )
    M = G[np.ix_((0, 1, 3), (0, 1, 3))]
    schur = M[1:, 1:] - np.outer(M[1:, 0], M[0, 1:]) / M[0, 0]
    A = 8.0 * schur
    det_a = float(np.linalg.det(A))
    x = float(nu[0])
    det_factored = float(
        -16.0 * (x - lam[0] - mu[0]) * (x - lam[0] - mu[1]) * (x - mu[0]) * (x - mu[1])
    )
    psd_ok = bool(np.linalg.eigvalsh(A)[0] >= -1e-9 * (1 + np.abs(A).max()))
    G.setflags(write=False)
    schur.setflags(write=False)
    return N2Report(shift, G, schur, psd_ok, det_a, det_factored)
