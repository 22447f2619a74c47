import math

import numpy as np
import pytest
from numpy.polynomial import polynomial as npoly

from hornsdp.errors import InstanceError, RangeError
from hornsdp.newton import (
    CompanionPencil,
    HankelPencil,
    coeffs_from_power_sums,
    companion_eval,
    intertwining_residual,
    newton_hankel_S,
    pencil_eval,
    power_sums_from_coeffs,
    power_sums_from_roots,
    psd_on_line,
)


def oracle_power_sums(z, count):
    return [sum(zi**k for zi in z) for k in range(count)]


def random_hermitian(rng, n):
    M = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    return (M + M.conj().T) / 2


# ---------------------------------------------------------------- power sums


def test_power_sums_frozen():
    assert power_sums_from_roots([1, 2, 3], 5) == pytest.approx([3, 6, 14, 36, 98])
    assert power_sums_from_roots([0, 0, 0, 0], 3) == pytest.approx([4, 0, 0])
    c = 1.7
    assert power_sums_from_roots([c], 3) == pytest.approx([1, c, c * c])


def test_power_sums_match_direct_summation():
    rng = np.random.default_rng(0)
    for _ in range(25):
        z = rng.standard_normal(rng.integers(1, 7))
        count = int(rng.integers(1, 10))
        assert power_sums_from_roots(z, count) == pytest.approx(
            oracle_power_sums(z, count)
        )


def test_coeffs_from_power_sums_scalar():
    p = coeffs_from_power_sums([3, 6, 14, 36], 3, 3)
    # oracle: expand prod(x - z_i) for roots {1,2,3}
    mono = npoly.polyfromroots([1, 2, 3])
    expect = [mono[2], mono[1], mono[0]]
    assert [float(pj[0]) for pj in p] == pytest.approx(expect)
    assert expect == pytest.approx([-6, 11, -6])


def test_coeffs_all_roots_zero():
    p = coeffs_from_power_sums([4, 0, 0, 0, 0], 4, 4)
    for pj in p:
        assert np.abs(pj).max() == 0


def test_power_sums_from_coeffs_frozen():
    h = power_sums_from_coeffs([[-6], [11], [-6]], 3, 5)
    assert [float(hj[0]) for hj in h] == pytest.approx([3, 6, 14, 36, 98])


def test_power_sums_from_coeffs_zero():
    h = power_sums_from_coeffs([[0], [0]], 2, 4)
    assert [float(hj[0]) for hj in h] == pytest.approx([2, 0, 0, 0])


def test_round_trip_identity():
    # p -> h -> p on random coefficient polynomials of degree <= j
    rng = np.random.default_rng(11)
    for _ in range(1000):
        n = int(rng.integers(1, 7))
        p = [rng.standard_normal(j + 1) for j in range(1, n + 1)]
        h = power_sums_from_coeffs(p, n, n + 1)
        assert float(h[0][0]) == n
        p2 = coeffs_from_power_sums(h, n, n)
        for pj, pj2 in zip(p, p2):
            b = np.zeros(len(pj))
            b[: len(pj2)] = pj2
            assert np.allclose(pj, b, rtol=0, atol=1e-10 * (1 + np.abs(pj).max()))


def test_degree_caps_propagate():
    rng = np.random.default_rng(12)
    for _ in range(50):
        n = int(rng.integers(2, 6))
        p = [rng.standard_normal(j + 1) for j in range(1, n + 1)]
        h = power_sums_from_coeffs(p, n, 2 * n - 1)
        for j, hj in enumerate(h):
            assert len(hj) <= j + 1
        p2 = coeffs_from_power_sums(h, n, n)
        for j, pj in enumerate(p2, start=1):
            assert len(pj) <= j + 1


# ------------------------------------------------------------------- Hankels


def test_newton_hankel_frozen():
    assert np.allclose(newton_hankel_S([1, 2]), [[2, 3], [3, 5]])
    assert np.allclose(
        newton_hankel_S([1, 2, 3]), [[3, 6, 14], [6, 14, 36], [14, 36, 98]]
    )
    assert np.allclose(newton_hankel_S([0, 0]), [[2, 0], [0, 0]])


def test_newton_hankel_psd():
    rng = np.random.default_rng(3)
    for _ in range(30):
        z = rng.standard_normal(int(rng.integers(1, 6)))
        S = newton_hankel_S(z)
        assert np.allclose(S, S.T)
        assert np.linalg.eigvalsh(S).min() >= -1e-10 * np.trace(S)


def pair_pencil(rng, n):
    P = random_hermitian(rng, n)
    R = random_hermitian(rng, n)
    return P, R, HankelPencil.from_pair(P, R)


def test_pencil_eval_endpoints():
    rng = np.random.default_rng(4)
    P, R, Hp = pair_pencil(rng, 3)
    assert np.allclose(pencil_eval(Hp, 0.0), Hp.coeffs[0])
    assert np.allclose(pencil_eval(Hp, 1.0), Hp.coeffs.sum(axis=0))
    signs = (-1.0) ** np.arange(len(Hp.coeffs))
    assert np.allclose(pencil_eval(Hp, -1.0), (signs[:, None, None] * Hp.coeffs).sum(axis=0))


def test_pencil_from_pair_matches_eigendecomposition():
    rng = np.random.default_rng(5)
    for n in (1, 2, 3, 4):
        P, R, Hp = pair_pencil(rng, n)
        z = np.linalg.eigvalsh(P + 2.0 * R)
        assert np.allclose(pencil_eval(Hp, 2.0), newton_hankel_S(z), atol=1e-9)


def test_pencil_structural_invariants():
    rng = np.random.default_rng(6)
    P, R, Hp = pair_pencil(rng, 3)
    assert Hp.coeffs.shape == (5, 3, 3)
    h0 = Hp.antidiagonal(0)
    assert h0 == pytest.approx([3.0])
    for i, Hi in enumerate(Hp.coeffs):
        assert np.allclose(Hi, Hi.T)
        # entry (r, s) depends only on r + s, and vanishes below antidiagonal i
        for r in range(3):
            for s in range(3):
                if r + s < i:
                    assert abs(Hi[r, s]) <= 1e-12
                if r >= 1 and s <= 1:
                    assert Hi[r, s] == pytest.approx(Hi[r - 1, s + 1], abs=1e-12)
    for j in range(5):
        assert len(Hp.antidiagonal(j)) <= j + 1


def test_psd_on_line_pass_for_realizable():
    rng = np.random.default_rng(7)
    for n in (2, 3):
        P, R, Hp = pair_pencil(rng, n)
        rep = psd_on_line(Hp)
        assert rep.ok
        assert rep.min_eig >= -1e-8


def test_psd_on_line_fails_indefinite_h0():
    Hp = HankelPencil.from_antidiagonals([[2.0], [0.0], [-1.0]])
    rep = psd_on_line(Hp)
    assert not rep.ok
    assert rep.min_eig == pytest.approx(-1.0)


def test_psd_on_line_fails_outside_horn_region():
    # n=2 pencil pinned by the three low-order interpolation values of
    # lam=(2,0), mu=(1,0), nu=(3.2,-0.2); nu_1 exceeds lam_1+mu_1.
    lam, mu, nu = (2.0, 0.0), (1.0, 0.0), (3.2, -0.2)
    s1 = lambda v: v[0] + v[1]
    s2 = lambda v: v[0] ** 2 + v[1] ** 2
    h0 = [2.0]
    h1 = [s1(nu) / 2, (s1(lam) - s1(mu)) / 2]
    h2 = [
        s2(nu) / 4,
        (s2(lam) - s2(mu)) / 2,
        (s2(lam) + s2(mu)) / 2 - s2(nu) / 4,
    ]
    rep = psd_on_line(HankelPencil.from_antidiagonals([h0, h1, h2]))
    assert not rep.ok


def test_psd_on_line_rejects_tiny_sample_count():
    Hp = HankelPencil.from_antidiagonals([[1.0]])
    with pytest.raises(RangeError):
        psd_on_line(Hp, samples=2)


# ---------------------------------------------------------------- companions


def test_companion_frozen_123():
    Cp = CompanionPencil(3, (np.array([-6.0]), np.array([11.0]), np.array([-6.0])))
    expect = [[0, 0, 6], [1, 0, -11], [0, 1, 6]]
    for y0 in (-1.0, 0.0, 2.5):
        assert np.allclose(companion_eval(Cp, y0), expect)
    # oracle: characteristic polynomial of the companion recovers the roots
    w = np.sort(np.linalg.eigvals(companion_eval(Cp, 0.0)).real)
    assert w == pytest.approx([1, 2, 3])


def test_companion_last_column_symmetric_functions():
    rng = np.random.default_rng(8)
    P, R, Hp = pair_pencil(rng, 3)
    Cp = CompanionPencil.from_pencil(Hp)
    lam = np.linalg.eigvalsh(P + R)
    C1 = companion_eval(Cp, 1.0)
    e1 = lam.sum()
    e2 = lam[0] * lam[1] + lam[1] * lam[2] + lam[0] * lam[2]
    e3 = lam.prod()
    assert C1[:, 2] == pytest.approx([e3, -e2, e1])
    assert np.allclose(C1[1:, :2], np.eye(2), atol=1e-12)


def test_companion_n1():
    Cp = CompanionPencil(1, (np.array([2.0, -3.0]),))
    assert companion_eval(Cp, 2.0)[0, 0] == pytest.approx(-(2.0 - 6.0))


# -------------------------------------------------------------- intertwining


def test_intertwining_holds_for_consistent_pencils():
    rng = np.random.default_rng(9)
    for trial in range(10):
        n = (2, 3, 4)[trial % 3]
        P, R, Hp = pair_pencil(rng, n)
        Cp = CompanionPencil.from_pencil(Hp)
        for y0 in (-2.0, -1.0, 0.0, 1.0, 2.0):
            scale = 1 + np.abs(pencil_eval(Hp, y0)).max()
            assert intertwining_residual(Hp, Cp, y0) <= 1e-9 * scale


def test_intertwining_n1_exact():
    rng = np.random.default_rng(10)
    P, R, Hp = pair_pencil(rng, 1)
    Cp = CompanionPencil(1, (np.array([0.5, -1.0]),))
    assert intertwining_residual(Hp, Cp, 1.3) == 0.0
    with pytest.raises(RangeError):
        CompanionPencil.from_pencil(Hp)


def test_intertwining_broken_by_p4_injection():
    rng = np.random.default_rng(13)
    P, R, Hp = pair_pencil(rng, 3)
    Cp = CompanionPencil.from_pencil(Hp)
    p = list(Cp.p) + [np.array([0.1])]
    h = power_sums_from_coeffs(p, 3, 5)
    Hp_bad = HankelPencil.from_antidiagonals(h)
    assert intertwining_residual(Hp_bad, Cp, 1.7) > 1e-6


def test_pencil_size_mismatch_rejected():
    rng = np.random.default_rng(14)
    _, _, Hp = pair_pencil(rng, 3)
    Cp = CompanionPencil(2, (np.array([1.0]), np.array([1.0])))
    with pytest.raises(InstanceError):
        intertwining_residual(Hp, Cp, 0.0)
