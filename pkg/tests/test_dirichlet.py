import math

import numpy as np
import pytest

from corrlab import dirichlet as dd
from corrlab import local, sieve
from corrlab.sieve import FnTable, Kind


def _mu(q):
    fac = local.factorize(q)
    if any(e > 1 for e in fac.values()):
        return 0
    return (-1) ** len(fac) if q > 1 else 1


def test_characters_counts_and_structure():
    assert len(dd.characters(1)) == 1
    for q1 in (2, 3, 4, 5, 8, 9, 12, 16, 24, 45, 100):
        chs = dd.characters(q1)
        assert len(chs) == local.euler_phi(q1)
        assert sum(ch.is_principal for ch in chs) == 1
        for ch in chs:
            # zero off units, chi(1) = 1
            for a in range(q1):
                if math.gcd(a, q1) != 1:
                    assert ch.values[a] == 0.0
            assert ch.values[1 % q1] == pytest.approx(1.0, abs=1e-12)


def test_characters_q4_nonprincipal():
    chs = dd.characters(4)
    assert len(chs) == 2
    nonp = [c for c in chs if not c.is_principal][0]
    assert nonp.values[3] == pytest.approx(-1.0, abs=1e-12)


def test_characters_orthogonality():
    for q1 in (3, 8, 12, 45):
        chs = dd.characters(q1)
        phi = local.euler_phi(q1)
        for c1 in chs:
            for c2 in chs:
                s = np.sum(c1.values * np.conj(c2.values))
                expect = phi if c1.exponents == c2.exponents else 0.0
                assert abs(s - expect) < 1e-9
            # nonprincipal rows sum to zero
            if not c1.is_principal:
                assert abs(c1.values.sum()) < 1e-9


def test_characters_complete_multiplicativity():
    rng = np.random.default_rng(9)
    for q1 in (5, 12, 16, 21):
        for ch in dd.characters(q1):
            for _ in range(30):
                a, b = rng.integers(0, 3 * q1, size=2)
                assert abs(ch.values[(a * b) % q1]
                           - ch.values[a % q1] * ch.values[b % q1]) < 1e-12


def test_primitivity_flags():
    # mod 3: the nonprincipal character is primitive
    assert any(c.is_primitive and not c.is_principal for c in dd.characters(3))
    # mod 6: phi(6)=2, both characters induced from mod 3 or mod 1
    assert all(not c.is_primitive for c in dd.characters(6))
    # principal character is primitive only for q1 = 1
    for q1 in (2, 3, 12):
        principal = [c for c in dd.characters(q1) if c.is_principal][0]
        assert not principal.is_primitive
    assert dd.characters(1)[0].is_primitive


def test_gauss_sums():
    assert dd.gauss_sum(dd.characters(1)[0]) == pytest.approx(1.0, abs=1e-12)
    for q1 in range(1, 21):
        for ch in dd.characters(q1):
            tau = dd.gauss_sum(ch)
            assert abs(tau) <= math.sqrt(q1) + 1e-9
            if ch.is_principal:
                assert tau == pytest.approx(_mu(q1), abs=1e-9)
            if ch.is_primitive:
                assert abs(tau) == pytest.approx(math.sqrt(q1), abs=1e-10)


def test_eval_D_basics():
    spike = FnTable(Kind.CUSTOM, 500, 500, np.array([2.5]))
    ctx = dd.DirichletEval(spike)
    assert dd.eval_D(ctx, 0.0) == pytest.approx(2.5 / math.sqrt(500), rel=1e-14)

    # dilation picks out f(2n): matches the plain evaluation of n -> f(2n)
    vals = np.zeros(40)
    vals[1::2] = np.arange(1.0, 21.0)   # support on evens 2,4,...,40
    f = FnTable(Kind.CUSTOM, 1, 40, vals)
    halves = FnTable(Kind.CUSTOM, 1, 20, np.arange(1.0, 21.0))
    for t in (0.0, 3.7):
        a = dd.eval_D(dd.DirichletEval(f, q0=2), t)
        b = dd.eval_D(dd.DirichletEval(halves), t)
        assert a == pytest.approx(b, rel=1e-12)


def test_eval_D_against_slow_oracle():
    f = sieve.ones_table(1001, 2000)
    ctx = dd.DirichletEval(f)
    t = 50.0
    slow = sum(n ** (-0.5) * np.exp(-1j * t * math.log(n)) for n in range(1001, 2001))
    assert abs(dd.eval_D(ctx, t) - slow) <= 1e-9 * abs(slow)
    # grid evaluation consistent with pointwise
    ts = np.array([0.0, 1.0, 50.0, 123.456])
    grid = dd.eval_D_grid(ctx, ts)
    for i, tt in enumerate(ts):
        assert abs(grid[i] - dd.eval_D(ctx, float(tt))) < 1e-12


def test_eval_D_critical_line_bound():
    f = sieve.sieve_dk(2, 100, 400)
    ctx = dd.DirichletEval(f)
    bound = ctx.abs_bound()
    for t in (0.0, 5.0, 300.0):
        assert abs(dd.eval_D(ctx, t)) <= bound * (1 + 1e-12)
    # twisted evaluation with the principal character mod 1 equals plain
    chi1 = dd.characters(1)[0]
    a = dd.eval_D(dd.DirichletEval(f, chi=chi1, q0=1), 17.0)
    b = dd.eval_D(dd.DirichletEval(f), 17.0)
    assert a == pytest.approx(b, abs=1e-12)


def test_edc_check():
    rng = np.random.default_rng(31)
    f = sieve.custom_table("f", 101, rng.random(200))
    lhs, rhs, ok = dd.edc_check(f, 1, 1, 3.0)
    assert ok and lhs == pytest.approx(rhs, rel=1e-12)  # q=1 is equality
    lhs, rhs, ok = dd.edc_check(f, 6, 5, 10.0)
    assert ok and lhs <= rhs
    # f supported on multiples of q: the q0=q term dominates
    vals = np.zeros(200)
    vals[np.arange(101, 301) % 5 == 0] = 1.0
    f5 = sieve.custom_table("f5", 101, vals)
    lhs, rhs, ok = dd.edc_check(f5, 5, 2, 4.0)
    assert ok


def test_twisted_untwisted_orthogonality():
    f = sieve.ones_table(50, 400)
    for q1, a in ((12, 5), (7, 3)):
        chs = dd.characters(q1)
        t = 7.0
        total = sum(np.conj(ch.values[a]) * dd.eval_D(dd.DirichletEval(f, chi=ch), t)
                    for ch in chs)
        ns = np.arange(50, 401)
        sel = ns % q1 == a
        direct = np.sum(ns[sel] ** (-0.5)
                        * np.exp(-1j * t * np.log(ns[sel].astype(float))))
        assert abs(total - local.euler_phi(q1) * direct) < 1e-10


def test_mvt_delta_exact():
    spike = FnTable(Kind.CUSTOM, 500, 500, np.array([2.0]))
    assert dd.mvt_closed_form(spike, 1.0, 10.0) == pytest.approx(10 * 4.0 / 500, rel=1e-14)


def test_mvt_two_point_support():
    f = FnTable(Kind.CUSTOM, 100, 150, np.zeros(51))
    f.values[0] = 1.0
    f.values[50] = 2.0
    cf = dd.mvt_closed_form(f, 2.0, 30.0)
    qd = dd.mvt_quadrature(f, 2.0, 30.0)
    assert cf == pytest.approx(qd, rel=1e-8)
    # one off-diagonal sinc term
    L = math.log(150 / 100)
    expected = 30 * (1 / 100 + 4 / 150) + 2 * (1 / math.sqrt(100 * 150)) * 2 * (
        math.sin(32.0 * L) - math.sin(2.0 * L)) / L
    assert cf == pytest.approx(expected, rel=1e-12)


def test_mvt_lambda_table():
    f = sieve.sieve_lambda(1001, 2000)
    cf = dd.mvt_closed_form(f, 0.0, 100.0)
    qd = dd.mvt_quadrature(f, 0.0, 100.0)
    assert cf == pytest.approx(qd, rel=1e-6)
    # report: compare with the (T + X) log-power mean value shape
    shape = (100.0 + 1000.0) * math.log(2000.0) ** 2
    assert cf < 20 * shape


def test_mvt_random_tables_cross_agreement():
    rng = np.random.default_rng(77)
    for _ in range(5):
        n = int(rng.integers(20, 500))
        lo = int(rng.integers(50, 2000))
        f = sieve.custom_table("r", lo, rng.normal(size=n))
        t0 = float(rng.uniform(0, 50))
        T = float(rng.uniform(5, 80))
        cf = dd.mvt_closed_form(f, t0, T)
        qd = dd.mvt_quadrature(f, t0, T)
        assert cf == pytest.approx(qd, rel=1e-6)


def test_mvt_support_cap():
    f = sieve.ones_table(1, 20000)
    with pytest.raises(ValueError):
        dd.mvt_closed_form(f, 0.0, 1.0)


def test_perron_error_shrinks_with_T():
    f = sieve.sieve_dk(2, 1000, 2000)
    errs = [dd.perron_truncated(f, 2500.0, T).err for T in (125.0, 250.0, 500.0, 1000.0)]
    assert errs[-1] < errs[0]
    for a, b in zip(errs, errs[1:]):
        assert b < a * 1.5  # monotone trend, modest local wiggle allowed


def test_perron_jump_capture():
    spike = FnTable(Kind.CUSTOM, 500, 500, np.array([2.0]))
    above = dd.perron_truncated(spike, 600.5, 300.0)
    below = dd.perron_truncated(spike, 400.5, 300.0)
    assert above.exact == 2.0 and below.exact == 0.0
    assert above.err <= above.bound_shape
    assert below.err <= below.bound_shape


def test_perron_d2_calibrated_constant():
    f = sieve.sieve_dk(2, 1000, 2000)
    r = dd.perron_truncated(f, 2500.0, 1000.0)
    # calibrated: |approx - exact| <= 10 ||f||_inf X log T / T
    bound = 10 * f.values.max() * 2000 * math.log(1000.0) / 1000.0
    assert r.err <= bound


def test_fourth_moment_and_jutila():
    rep = dd.fourth_moment_experiment(100, 1, 50.0)
    assert np.isfinite(rep["ratio"]) and rep["ratio"] > 0
    rep_l = dd.fourth_moment_experiment(100, 1, 50.0, L_weight=True)
    assert np.isfinite(rep_l["ratio"]) and rep_l["lhs"] > rep["lhs"]
    rep_q = dd.fourth_moment_experiment(50, 3, 40.0)
    assert np.isfinite(rep_q["ratio"])
    # reproducibility across runs
    again = dd.fourth_moment_experiment(100, 1, 50.0)
    assert again["lhs"] == rep["lhs"]

    jut = dd.jutila_experiment(1, 60.0, 12.0, [30.0, 45.0], X=80)
    assert np.isfinite(jut["ratio"])


def test_jutila_single_interval_equals_fourth_moment_integral():
    # with r=1 the Jutila left side is the plain fourth-moment integral
    X, q, T0, t1 = 80, 1, 12.0, 30.0
    jut = dd.jutila_experiment(q, 60.0, T0, [t1], X=X)
    f = dd.indicator_upto(X)
    ctx = dd.DirichletEval(f, chi=dd.characters(q)[0])
    direct = dd._fourth_integral(ctx, [(t1, t1 + T0)])
    assert jut["lhs"] == pytest.approx(direct, rel=1e-12)


def test_lix_identity():
    assert dd.lix_identity_check(100, [1.0, 2.5, 50.0, 99.0, 150.0]) < 1e-8


def test_good_cancellation_report():
    rows = dd.good_cancellation_report(("one", "mu", "log"), [200, 400, 800],
                                       q=3, a=1, t_list=[40.0])
    kinds = {r["kind"] for r in rows}
    assert kinds == {"one", "mu", "log"}
    fits = [r for r in rows if "fitted_exponent" in r]
    assert len(fits) == 3
    vals = [r for r in rows if "normalized" in r]
    assert all(np.isfinite(r["normalized"]) for r in vals)
