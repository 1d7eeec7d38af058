from math import comb

import numpy as np
import pytest

from corrlab import local


def test_twin_prime_constant_small():
    r = local.twin_prime_constant(3)
    assert r.value == 0.75
    assert r.tail_bound == 2.0 / 3


def test_twin_prime_constant_converges():
    vals = [local.twin_prime_constant(p).value for p in (10**3, 10**4, 10**5, 10**6)]
    assert all(a > b for a, b in zip(vals, vals[1:]))  # monotone decreasing
    # limit 0.66016181584...; truncation at 1e6 is already inside 1e-6
    assert vals[-1] == pytest.approx(0.6601618158, abs=5e-7)
    r5, r6 = local.twin_prime_constant(10**5), local.twin_prime_constant(10**6)
    assert abs(np.log(r5.value) - np.log(r6.value)) <= r5.tail_bound


def test_singular_series():
    assert local.singular_series(3, 10**5).value == 0.0
    assert local.singular_series(-7, 10**5).value == 0.0
    pi2 = local.twin_prime_constant(10**6).value
    s2 = local.singular_series(2, 10**6)
    assert s2.value == pytest.approx(2 * pi2, rel=1e-12)
    assert s2.value == pytest.approx(1.3203236, abs=1e-6)
    s6 = local.singular_series(6, 10**6)
    assert s6.value == pytest.approx(4 * pi2, rel=1e-12)
    for h in (2, 4, 6, 30, 100):
        assert local.singular_series(h, 10**5).value >= 2 * local.twin_prime_constant(10**5).value - 1e-12
    with pytest.raises(ValueError):
        local.singular_series(0)


def _mc_dkdl(k, l, p, h, n_samples, seed, vmax=20):
    """Monte Carlo oracle: n uniform mod p^vmax, valuations truncated at vmax."""
    rng = np.random.default_rng(seed)
    mod = p**vmax
    n = rng.integers(0, mod, size=n_samples, dtype=np.int64)

    def vp(arr):
        v = np.zeros(arr.shape, dtype=np.int64)
        a = arr % mod
        alive = a != 0
        for _ in range(vmax):
            div = alive & (a % p == 0)
            if not div.any():
                break
            v[div] += 1
            a[div] //= p
        v[arr % mod == 0] = vmax
        return v

    lut_k = np.array([comb(j + k - 1, k - 1) for j in range(vmax + 1)], float)
    lut_l = np.array([comb(j + l - 1, l - 1) for j in range(vmax + 1)], float)
    prod = lut_k[vp(n)] * lut_l[vp(n + h)]
    norm = (1 - 1 / p) ** (1 - k) * (1 - 1 / p) ** (1 - l)
    return prod.mean() / norm, 3 * prod.std() / np.sqrt(n_samples) / norm


def test_local_factor_dkdl_closed_forms():
    assert local.local_factor_dkdl(1, 5, 7, 3) == pytest.approx(1.0, abs=1e-12)
    assert local.local_factor_dkdl(1, 2, 13, 26) == pytest.approx(1.0, abs=1e-12)
    # frozen rationals, cross-checked by the Monte Carlo oracle below
    assert local.local_factor_dkdl(2, 2, 3, 1) == pytest.approx(8 / 9, rel=1e-12)
    assert local.local_factor_dkdl(2, 2, 2, 2) == pytest.approx(9 / 8, rel=1e-12)
    # symmetry in (k, l)
    for (k, l, p, h) in [(3, 2, 2, 4), (2, 4, 5, 25), (4, 3, 7, 14)]:
        assert local.local_factor_dkdl(k, l, p, h) == pytest.approx(
            local.local_factor_dkdl(l, k, p, h), rel=1e-14)
    with pytest.raises(ValueError):
        local.local_factor_dkdl(2, 2, 4, 1)
    with pytest.raises(ValueError):
        local.local_factor_dkdl(2, 2, 3, 0)


def test_local_factor_dkdl_monte_carlo_oracle():
    est, tol = _mc_dkdl(2, 2, 3, 1, 10**7, seed=101)
    assert abs(local.local_factor_dkdl(2, 2, 3, 1) - est) < tol
    est, tol = _mc_dkdl(2, 2, 2, 2, 10**7, seed=102)
    assert abs(local.local_factor_dkdl(2, 2, 2, 2) - est) < tol


def test_local_factor_depends_only_on_valuation():
    for (k, l, p) in [(2, 2, 3), (3, 2, 2), (2, 4, 5)]:
        base = local.local_factor_dkdl(k, l, p, p**2)
        for h in (p**2 * 5, -(p**2) * 7, p**2 * 11):
            if h % p**3 != 0:
                assert abs(local.local_factor_dkdl(k, l, p, h) - base) < 1e-12


def test_local_factor_dk_lambda():
    assert local.local_factor_dk_lambda(1, 7, 3) == pytest.approx(1.0, abs=1e-12)
    # p | h, k = 2: hand derivation gives 1 - 1/p
    for p in (2, 3, 5):
        assert local.local_factor_dk_lambda(2, p, 4 * p) == pytest.approx(1 - 1 / p, rel=1e-12)
    # Monte Carlo at p=2, h=1, k=2
    rng = np.random.default_rng(103)
    p, vmax = 2, 20
    mod = p**vmax
    n = rng.integers(0, mod, size=10**6, dtype=np.int64)
    d2p = np.ones(len(n))
    a = n.copy()
    v = np.zeros(len(n), dtype=np.int64)
    alive = a != 0
    for _ in range(vmax):
        div = alive & (a % p == 0)
        if not div.any():
            break
        v[div] += 1
        a[div] //= p
    d2p = v + 1.0
    lamp = (p / (p - 1)) * ((n + 1) % p != 0)
    est = (d2p * lamp).mean() / ((1 - 1 / p) ** (-1))
    tol = 3 * (d2p * lamp).std() / np.sqrt(len(n)) / ((1 - 1 / p) ** (-1))
    assert abs(local.local_factor_dk_lambda(2, 2, 1) - est) < tol


def test_leading_coeff_P_matches_ingham_form():
    # full-tolerance version is acceptance criterion 3; smoke at p_max = 1e5
    c = 6 / np.pi**2
    for h in (1, 2, 12):
        divs = [d for d in range(1, abs(h) + 1) if h % d == 0]
        target = c * sum(1.0 / d for d in divs)
        got = local.leading_coeff_P(2, 2, h, 10**5)
        assert got.value == pytest.approx(target, abs=3e-5)
        assert got.tail_bound < 1e-3


def test_leading_coeff_tail_reporting():
    r = local.leading_coeff_P(2, 2, 2, 10**4, keep_per_prime=True, tail_proxy=True)
    assert r.per_prime is not None and r.per_prime[2] > 0
    assert all(v > 0 for v in r.per_prime.values())
    assert r.tail_proxy is not None and 0 < r.tail_proxy < 1e-3
    r2 = local.leading_coeff_P(2, 2, 2, 10**5)
    assert r2.tail_bound < r.tail_bound


def test_leading_coeff_independent_of_large_prime_divisibility():
    # h whose odd part has all prime factors beyond p_max matches plain h=2
    p_max = 10**3
    big = 1048583  # prime, far above p_max
    x = local.leading_coeff_P(2, 2, 2 * big, p_max).value
    y = local.leading_coeff_P(2, 2, 2, p_max).value
    assert x == pytest.approx(y, rel=1e-12)


def test_ramanujan_sums():
    assert local.ramanujan_sum(1, 5) == 1.0
    for q in (2, 6, 12, 60):
        assert local.ramanujan_sum(q, 0) == float(local.euler_phi(q))
    # direct complex-sum oracle
    assert local.ramanujan_sum_direct(3, 1) == -1.0
    for q in range(1, 51):
        for h in (0, 1, 2, 6, 30):
            assert local.ramanujan_sum(q, h) == local.ramanujan_sum_direct(q, h)


def test_ramanujan_multiplicativity():
    for q1 in range(1, 15):
        for q2 in range(1, 15):
            if np.gcd(q1, q2) == 1 and q1 * q2 <= 200:
                for h in (1, 4, 9, 30):
                    assert local.ramanujan_sum(q1 * q2, h) == \
                        local.ramanujan_sum(q1, h) * local.ramanujan_sum(q2, h)


def test_singular_series_via_ramanujan():
    assert local.singular_series_via_ramanujan(5, 1) == 1.0
    for h in (2, 4, 30):
        assert local.singular_series_via_ramanujan(h, 2) == 2.0
    # convergence toward the Euler-product value
    target = local.singular_series(2, 10**6).value
    partial = local.singular_series_via_ramanujan(2, 10**4)
    assert abs(partial - target) < 1e-2


def test_singular_series_cross_identity():
    # Euler product of Lambda-Lambda local factors reproduces the closed form
    for h in (2, 4, 6, 30):
        a = local.singular_series(h, 10**5).value
        b = local.singular_series_local(h, 10**5).value
        assert a == pytest.approx(b, rel=1e-10)
