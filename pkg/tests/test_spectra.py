from __future__ import annotations

import numpy as np
import pytest

from hornsdp.errors import InstanceError
from hornsdp.spectra import (
    eigvalsh_desc,
    hermitian_part,
    make_pair,
    normalize_triple,
    random_triple,
)


def test_normalize_sorts_and_balances():
    t = normalize_triple([0, 2, 1], [-1, 1, 0], [3, -1, 1])
    assert np.array_equal(t.lam, [2, 1, 0])
    assert np.array_equal(t.mu, [1, 0, -1])
    assert np.array_equal(t.nu, [3, 1, -1])
    assert t.n == 3
    assert t.trace_gap == 0.0
    assert t.balanced


def test_normalize_idempotent():
    t = normalize_triple([5.0, -2.0], [1.0, 1.0], [4.5, 0.5])
    t2 = normalize_triple(t.lam, t.mu, t.nu)
    assert np.array_equal(t.lam, t2.lam)
    assert np.array_equal(t.mu, t2.mu)
    assert np.array_equal(t.nu, t2.nu)
    assert t.trace_gap == t2.trace_gap


def test_unbalanced_detected():
    t = normalize_triple([2, 0], [1, 0], [4, 0])
    assert t.trace_gap == pytest.approx(-1.0)
    assert not t.balanced


@pytest.mark.parametrize(
    "bad",
    [
        ([1, 2], [1], [1, 2]),
        ([], [], []),
        ([np.nan, 0], [0, 0], [0, 0]),
        ([np.inf, 0], [0, 0], [0, 0]),
    ],
)
def test_invalid_inputs(bad):
    with pytest.raises(InstanceError):
        normalize_triple(*bad)


def test_scale_is_one_plus_max_l1():
    t = normalize_triple([2, -1], [0.5, 0.5], [1.5, 0.5])
    assert t.scale == pytest.approx(1.0 + 3.0)


def test_random_triple_deterministic():
    t1, p1 = random_triple(3, 42)
    t2, p2 = random_triple(3, 42)
    assert np.array_equal(t1.lam, t2.lam)
    assert np.array_equal(t1.mu, t2.mu)
    assert np.array_equal(t1.nu, t2.nu)
    assert np.array_equal(p1.A, p2.A)
    assert np.array_equal(p1.B, p2.B)


def test_random_triple_is_witnessed_and_balanced():
    for seed in range(20):
        n = 2 + seed % 3
        t, pair = random_triple(n, 500 + seed)
        assert abs(t.trace_gap) <= 1e-10 * (1 + np.abs(t.lam).sum() + np.abs(t.mu).sum())
        assert pair.residual_lambda == 0.0
        assert pair.residual_mu == 0.0
        assert pair.residual_nu == 0.0
        # distinct within lambda and mu by the regeneration rule
        assert np.diff(t.lam[::-1]).min() > 1e-8 * t.scale
        assert np.diff(t.mu[::-1]).min() > 1e-8 * t.scale


def test_random_triple_n1():
    t, pair = random_triple(1, 7)
    rng = np.random.default_rng(7)
    a = rng.standard_normal((1, 1))
    assert t.lam[0] == pytest.approx(2 * a[0, 0])


def test_eigvalsh_desc_hermitizes():
    M = np.array([[1.0, 2.0], [0.0, -1.0]])
    w = eigvalsh_desc(M)
    assert w[0] >= w[1]
    H = hermitian_part(M)
    assert np.allclose(H, H.conj().T)
    assert np.allclose(np.linalg.eigvalsh(H)[::-1], w)


def test_make_pair_measures_residuals():
    A = np.diag([3.0, 1.0])
    B = np.diag([2.0, 0.0])
    t = normalize_triple([3, 1], [2, 0], [5, 1])
    pair = make_pair(A, B, t)
    assert pair.residual_lambda == 0.0
    assert pair.residual_mu == 0.0
    assert pair.residual_nu == 0.0
    t_off = normalize_triple([3, 1], [2, 0], [5.5, 0.5])
    pair_off = make_pair(A, B, t_off)
    assert pair_off.residual_nu == pytest.approx(0.5)
