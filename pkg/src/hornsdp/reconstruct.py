"""Companion-similarity reconstruction of the pair and the full solve driver.

The 3x3 path transports the companion matrices of the two target
characteristic polynomials through the spectral factor at y = 1 and y = -1
and Hermitianizes. Before that, the rank-3 factor and the free Hankel
coefficients are refined against the exact affine structure by a damped
Gauss-Newton pass; the cone solver alone leaves residuals near its
regularization floor, and the refinement removes them without changing the
certified object.
"""

from __future__ import annotations

import math
from typing import Optional

import numpy as np
from numpy.polynomial import polynomial as npoly
from scipy.optimize import least_squares

from .admissibility import horn_check
from .errors import (
    ConditioningError,
    ConsistencyError,
    InstanceError,
    MultiplicityError,
    NoSolution,
    ReconstructionError,
    SingularFactor,
    UnsupportedSize,
)
from .factor import MatrixPoly, factor_gram, outgoing_check, rank_truncate
from .gram import (
    KEPT,
    GramBlock,
    Infeasible,
    assemble_sdp,
    gram_to_pencil,
    solve_sdp,
    step1_low_order,
)
from .newton import (
    CompanionPencil,
    HankelPencil,
    companion_eval,
    intertwining_residual,
    newton_hankel_S,
)
from .spectra import HermitianPair, SpectralTriple, make_pair, normalize_triple

__all__ = [
    "companion_from_spectrum",
    "m_linearity_residual",
    "reconstruct_pair",
    "solve_horn",
    "solve_n2",
]

# free Hankel coefficients (p, j), p = y-power, j = antidiagonal index
_HFREE = tuple((p, j) for p in range(1, 5) for j in range(p, 5))


def companion_from_spectrum(s) -> np.ndarray:
    """Companion matrix of prod_i (x - s_i): subdiagonal ones, last column
    built from the elementary symmetric functions of s."""
    s = np.asarray(s, dtype=float).ravel()
    if s.size == 0 or not np.all(np.isfinite(s)):
        raise InstanceError("spectrum must be a nonempty finite vector")
    a = npoly.polyfromroots(s)
    n = s.size
    C = np.zeros((n, n))
    for i in range(n - 1):
        C[i + 1, i] = 1.0
    C[:, n - 1] = -a[:n]
    return C


def _inverted_sample(q: MatrixPoly, y0: float, cond_cap: float, err):
    Qy = q.at(y0)
    c = np.linalg.cond(Qy)
    if not np.isfinite(c) or c > cond_cap:
        raise err(f"Q({y0:g}) has condition number {c:.3e}")
    return Qy, np.linalg.inv(Qy)


def reconstruct_pair(q: MatrixPoly, t: SpectralTriple) -> HermitianPair:
    """A = herm(Q(1) C(1) Q(1)^-1), B the same at y = -1 with the mu companion.

    The similarity pins the spectra exactly; Hermitianizing moves them by at
    most the non-Hermitian part, which the residuals report.
    """
    if q.n_rows != q.n_cols or q.n_rows != t.n:
        raise InstanceError(f"factor is {q.n_rows}x{q.n_cols}, triple has n={t.n}")
    if t.n >= 2:
        gap = min(np.diff(t.lam[::-1]).min(), np.diff(t.mu[::-1]).min())
        if gap < 1e-8 * t.scale:
            raise MultiplicityError(
                "lambda or mu has a repeated eigenvalue; the companion "
                "similarity needs simple spectra (jitter the instance)"
            )
    mats = []
    for y0, spec in ((1.0, t.lam), (-1.0, t.mu)):
        Qy, Qinv = _inverted_sample(q, y0, 1e8, ConditioningError)
        M = Qy @ companion_from_spectrum(spec) @ Qinv
        mats.append((M + M.conj().T) / 2)
    return make_pair(mats[0], mats[1], t)


def m_linearity_residual(q: MatrixPoly, cp: CompanionPencil) -> float:
    """Max-entry gap of M(1) + M(-1) - 2 M(0) for M(y) = Q(y) C(y) Q(y)^-1.

    Zero exactly when the three samples fit a degree-one matrix polynomial.
    """
    if q.n_rows != q.n_cols or q.n_rows != cp.n:
        raise InstanceError(f"factor is {q.n_rows}x{q.n_cols}, pencil has n={cp.n}")
    samples = []
    for y0 in (1.0, -1.0, 0.0):
        Qy, Qinv = _inverted_sample(q, y0, 1e12, SingularFactor)
        samples.append(Qy @ companion_eval(cp, y0) @ Qinv)
    return float(np.abs(samples[0] + samples[1] - 2 * samples[2]).max())


def solve_n2(t: SpectralTriple) -> HermitianPair:
    """Closed-form 2x2 solve: A diagonal, B a plane rotation of diag(mu).

    The rotation angle matches tr (A+B)^2 to the target power sum, which
    together with the trace pins the spectrum of A+B.
    """
    if t.n != 2:
        raise UnsupportedSize(f"closed form is for n=2, got n={t.n}")
    if not t.balanced:
        raise InstanceError(f"unbalanced triple: trace gap {t.trace_gap:.3e}")
    rep = horn_check(t)
    if not rep.feasible:
        raise InstanceError(
            f"infeasible triple: margin {rep.margin:.6g} at {rep.witness}"
        )
    (l1, l2), (m1, m2) = t.lam, t.mu
    A = np.diag([l1, l2])
    dl, dm = l1 - l2, m1 - m2
    if min(dl, dm) <= 1e-12 * t.scale:
        # a degenerate spectrum forces nu = sorted(lam + mu); diagonals do it
        return make_pair(A, np.diag([m1, m2]), t, diagnostics={"cos2": 1.0})
    num = (t.nu**2).sum() - (t.lam**2).sum() - (t.mu**2).sum() - 2 * (l1 * m2 + l2 * m1)
    c2 = num / (2 * dl * dm)
    if not -1e-9 <= c2 <= 1 + 1e-9:
        raise ConsistencyError(
            f"cos^2 theta = {c2:.12g} outside [0, 1] on a feasible triple"
        )
    c2 = min(max(c2, 0.0), 1.0)
    th = math.acos(math.sqrt(c2))
    R = np.array([[math.cos(th), -math.sin(th)], [math.sin(th), math.cos(th)]])
    return make_pair(A, R @ np.diag([m1, m2]) @ R.T, t, diagnostics={"cos2": c2})


# ------------------------------------------------------- n = 3 refinement


def _pack(F: np.ndarray, hv: np.ndarray) -> np.ndarray:
    live = F[:, list(KEPT)]
    return np.concatenate([live.real.ravel(), live.imag.ravel(), hv])


def _unpack(x: np.ndarray):
    live = (x[:18] + 1j * x[18:36]).reshape(3, 6)
    F = np.zeros((3, 9), dtype=complex)
    F[:, list(KEPT)] = live
    return F, x[36:]


def _structure_residual(x, S0, tu, low) -> np.ndarray:
    """Exact affine structure the Gram factor must satisfy, as a flat vector.

    Rows: the pinned block G00 = S0, every Hankel-coefficient equality
    (including the zero rows above each antidiagonal), the interpolation
    rows at y = 1 and y = -1, and the four coefficient rows that keep the
    fourth characteristic coefficient identically zero.
    """
    F, hv = _unpack(x)
    G = F.conj().T @ F
    blk = lambda i, k: G[3 * i : 3 * i + 3, 3 * k : 3 * k + 3]
    Hp = {
        1: blk(0, 1) + blk(1, 0),
        2: blk(0, 2) + blk(1, 1) + blk(2, 0),
        3: blk(1, 2) + blk(2, 1),
        4: blk(2, 2),
    }
    hval = dict(zip(_HFREE, hv))
    d = blk(0, 0) - S0
    rows = [
        d[0, 0].real, d[1, 1].real, d[2, 2].real,
        d[0, 1].real, d[0, 1].imag, d[0, 2].real,
        d[0, 2].imag, d[1, 2].real, d[1, 2].imag,
    ]
    for p in range(1, 5):
        for r in range(3):
            for s in range(3):
                j = r + s
                e = Hp[p][r, s] - (hval[(p, j)] if j >= p else 0.0)
                rows += [e.real, e.imag]
    lam, mu, nu = tu.lam, tu.mu, tu.nu
    for j in range(1, 5):
        known = ((nu / 2) ** j).sum()
        tot = sum(hval[(p, j)] for p in range(1, j + 1))
        alt = sum((-1) ** p * hval[(p, j)] for p in range(1, j + 1))
        rows.append(tot + known - (lam**j).sum())
        rows.append(alt + known - (mu**j).sum())
    h3 = [((nu / 2) ** 3).sum(), hval[(1, 3)], hval[(2, 3)], hval[(3, 3)]]
    h4 = [((nu / 2) ** 4).sum(), hval[(1, 4)], hval[(2, 4)], hval[(3, 4)], hval[(4, 4)]]
    K = np.zeros(5)
    Kp = npoly.polyadd(
        npoly.polymul(low.h1, low.p3_known_part), npoly.polymul(low.h2, low.p2)
    )
    K[: Kp.size] = Kp
    for w in range(1, 5):
        conv = sum(low.h1[a] * h3[w - a] for a in range(2) if 0 <= w - a <= 3)
        rows.append(h4[w] - (4.0 / 3.0) * conv + K[w])
    return np.asarray(rows, dtype=float)


def _char_gap(M: np.ndarray, target: np.ndarray) -> float:
    got = npoly.polyfromroots(np.linalg.eigvalsh((M + M.conj().T) / 2))
    want = npoly.polyfromroots(np.asarray(target, dtype=float))
    return float(np.abs(got - want).max())


def _reconstruct_n3(g: GramBlock, t3: SpectralTriple, sense: int, diag: dict) -> HermitianPair:
    unit = float(max(np.abs(t3.lam).max(), np.abs(t3.mu).max(), np.abs(t3.nu).max()))
    if unit == 0.0:
        unit = 1.0
    tu = normalize_triple(t3.lam / unit, t3.mu / unit, t3.nu / unit)
    pencil0 = gram_to_pencil(g)

    # undo the output rescaling: the cone solver worked at unit spectral radius
    w = np.tile(unit ** np.arange(3.0), 3)
    Gu = g.G / np.outer(w, w)
    sig = np.sort(np.abs(np.linalg.eigvalsh((Gu + Gu.conj().T) / 2)))[::-1]
    q0 = factor_gram(rank_truncate(Gu, 3), 3)

    hv0 = np.array([pencil0.antidiagonal(j)[p] / unit**j for (p, j) in _HFREE])
    low = step1_low_order(tu)
    S0 = newton_hankel_S(tu.nu / 2)
    sol = least_squares(
        _structure_residual,
        _pack(np.hstack(q0.coeffs), hv0),
        args=(S0, tu, low),
        method="lm",
        ftol=1e-15,
        xtol=1e-15,
        gtol=1e-15,
        max_nfev=2000,
    )
    F1, hv1 = _unpack(sol.x)
    q_u = MatrixPoly((F1[:, 0:3], F1[:, 3:6], F1[:, 6:9]))
    rep_out = outgoing_check(q_u)

    # refined pencil and its companion, back at the original scale
    hval = dict(zip(_HFREE, hv1))
    ads = [np.array([3.0])]
    for j in range(1, 5):
        col = np.zeros(j + 1)
        col[0] = ((tu.nu / 2) ** j).sum()
        for p in range(1, j + 1):
            col[p] = hval[(p, j)]
        ads.append(col * unit**j)
    pencil = HankelPencil.from_antidiagonals(ads)
    comp = CompanionPencil.from_pencil(pencil)
    D = np.diag(unit ** np.arange(3.0))
    q = MatrixPoly(tuple(c @ D for c in q_u.coeffs))

    pair = reconstruct_pair(q, t3)
    P, R = (pair.A + pair.B) / 2, (pair.A - pair.B) / 2
    diag.update(
        {
            "sense": sense,
            "solver": dict(g.solver_stats),
            "gram_eigenvalues": np.linalg.eigvalsh(
                (g.G + g.G.conj().T) / 2
            ).tolist(),
            "sigma4_ratio": float(sig[3] / sig[0]),
            "outgoing": bool(rep_out.outgoing),
            "outgoing_worst": float(rep_out.worst),
            "det_degree": int(rep_out.degree),
            "refine_residual": float(np.abs(sol.fun).max()),
            "refine_nfev": int(sol.nfev),
            "intertwining": max(
                intertwining_residual(pencil, comp, y) for y in (-2.0, -1.0, 0.0, 1.0, 2.0)
            ),
            "m_linearity": m_linearity_residual(q, comp),
            "char_interpolation": max(
                _char_gap(P, t3.nu / 2), _char_gap(P + R, t3.lam), _char_gap(P - R, t3.mu)
            ),
        }
    )
    pair.diagnostics.update(diag)
    return pair


def _jitter_triple(t: SpectralTriple, eps: float) -> SpectralTriple:
    """Separate repeated eigenvalues deterministically.

    Adds distinct multiples (n, n-1, ..., 1) * eps to lambda and mu in sorted
    order, so every gap grows by eps; the trace change is spread evenly over
    nu to keep the triple balanced.
    """
    if eps <= 0:
        raise InstanceError(f"jitter must be positive, got {eps}")
    bump = eps * np.arange(t.n, 0, -1, dtype=float)
    jt = normalize_triple(t.lam + bump, t.mu + bump, t.nu + 2 * bump.sum() / t.n)
    if not horn_check(jt).feasible:
        raise InstanceError(
            "jitter pushed the triple outside the feasible cone; reduce it"
        )
    return jt


def solve_horn(
    t: SpectralTriple, *, tol: float = 1e-11, jitter: Optional[float] = None
) -> HermitianPair:
    """Construct Hermitian A, B with spectra lambda, mu and sigma(A+B) = nu.

    n = 1 is immediate, n = 2 uses the closed form, n = 3 runs the cone
    program / factorization / companion pipeline. When the factor is not
    outgoing the solve retries once with the objective sense flipped; if
    both factors fail the half-plane test, the pair is still returned
    (flagged) when its residuals pass, since the transport itself does not
    require outgoingness.
    """
    if not t.balanced:
        raise InstanceError(f"unbalanced triple: trace gap {t.trace_gap:.3e}")
    if t.n > 3:
        raise UnsupportedSize(f"constructive solve covers n <= 3, got n={t.n}")
    rep = horn_check(t)
    if not rep.feasible:
        raise NoSolution(
            f"inequality violated with margin {rep.margin:.6g}",
            witness=rep.witness,
            margin=rep.margin,
        )
    base: dict = {"margin": rep.margin}
    t_solve = t
    if t.n >= 2:
        gap = min(np.diff(t.lam[::-1]).min(), np.diff(t.mu[::-1]).min())
        if gap < 1e-8 * t.scale:
            if jitter is None:
                raise MultiplicityError(
                    "lambda or mu has a repeated eigenvalue; pass jitter=... "
                    "to solve a separated nearby problem"
                )
            t_solve = _jitter_triple(t, jitter)
            base["jitter"] = {
                "epsilon": jitter,
                "lambda": t_solve.lam.tolist(),
                "mu": t_solve.mu.tolist(),
                "nu": t_solve.nu.tolist(),
            }
    if t.n == 1:
        return make_pair(
            np.array([[t.lam[0]]]), np.array([[t.mu[0]]]), t, diagnostics=base
        )
    if t.n == 2:
        pair = solve_n2(t_solve)
        pair.diagnostics.update(base)
        return pair

    last: Optional[HermitianPair] = None
    for sense in (1, -1):
        out = solve_sdp(assemble_sdp(t_solve, sense=sense), tol=tol)
        if isinstance(out, Infeasible):
            margin = out.horn_margin if out.horn_margin is not None else rep.margin
            raise NoSolution(
                f"cone program reports {out.status} at the feasibility boundary",
                witness=out.witness or rep.witness,
                margin=margin,
            )
        pair = _reconstruct_n3(out, t_solve, sense, dict(base))
        if pair.diagnostics["outgoing"]:
            if sense == -1:
                pair.diagnostics["retried"] = True
            return pair
        last = pair
    assert last is not None
    if last.residual_nu <= 1e-6 * t_solve.scale and (
        max(last.residual_lambda, last.residual_mu) <= 1e-8 * t_solve.scale
    ):
        last.diagnostics["warning"] = "factor not outgoing under either sense"
        return last
    raise ReconstructionError(
        "no outgoing factor under either objective sense and residuals "
        "exceed tolerance"
    )
