import math

import numpy as np
import pytest

from corrlab import decomp, sieve


def test_heath_brown_k1_is_moebius_inversion():
    hb = decomp.heath_brown_decompose(1, 1000)
    assert len(hb.pieces) == 1
    assert hb.pieces[0].coefficient == 1.0
    assert hb.max_reconstruction_error <= 1e-9


def test_heath_brown_k2_k3():
    for K in (2, 3):
        hb = decomp.heath_brown_decompose(K, 1000)
        assert hb.max_reconstruction_error <= 1e-9
        assert [p.j for p in hb.pieces] == list(range(1, K + 1))
        assert [p.coefficient for p in hb.pieces] == \
            [(-1) ** (j + 1) * math.comb(K, j) for j in range(1, K + 1)]
        assert hb.mu_cutoff ** K <= 2000 < (hb.mu_cutoff + 1) ** K


def test_heath_brown_bad_args():
    with pytest.raises(ValueError):
        decomp.heath_brown_decompose(0, 100)
    with pytest.raises(ValueError):
        decomp.heath_brown_decompose(6, 100)


def test_comb_d2_exact_and_dyadic():
    dec = decomp.comb_decompose("dk", m=3, eps=0.2, H0=1000**0.55, X=1000, k=2)
    assert dec.reconstruction_error == 0.0
    # d_2 = 1 * 1: every piece carries at most one big dyadic block per slot
    for p in dec.pieces:
        assert p.shape in ("type_d1", "type_d2", "type_ii")
        assert all(k in ("one", "log") for k in p.factor_kinds)
        # support of the restricted piece lies in the output window
        assert p.table.lo == dec.win_lo and p.table.hi == dec.win_hi


def test_comb_d3():
    dec = decomp.comb_decompose("dk", m=4, eps=0.2, H0=2000**0.5, X=2000, k=3)
    assert dec.reconstruction_error <= 1e-9


def test_comb_lambda_m5():
    dec = decomp.comb_decompose("lambda", m=5, eps=0.18, H0=(10**4) ** 0.45, X=10**4)
    assert dec.reconstruction_error <= 1e-9
    assert dec.fallback_terms == 0
    counts = dec.counts()
    assert counts.get("type_ii", 0) > 0
    assert sum(counts.values()) == len(dec.pieces)


def test_comb_lambda_dilated_prime_power_is_small():
    X = 10**4
    dec = decomp.comb_decompose("lambda", m=3, eps=0.2, H0=X**0.55, X=X, q0=8)
    assert dec.reconstruction_error <= 1e-12
    assert [p.shape for p in dec.pieces] == ["small"]
    # the paper-level bound for the dilated Lambda tail
    assert dec.pieces[0].l2sq <= math.log(X) ** 3


def test_comb_lambda_dilated_non_prime_power_vanishes():
    X = 10**4
    dec = decomp.comb_decompose("lambda", m=3, eps=0.2, H0=X**0.55, X=X, q0=6)
    assert dec.reconstruction_error == 0.0
    assert all(not np.any(p.table.values) for p in dec.pieces)


def test_comb_dk_dilated():
    X = 10**4
    dec = decomp.comb_decompose("dk", m=3, eps=0.25, H0=X**0.6, X=X, k=2, q0=6)
    assert dec.reconstruction_error <= 1e-9
    smalls = [p for p in dec.pieces if p.shape == "small"]
    assert smalls, "dilation tail should appear as a Small piece"
    for p in smalls:
        assert p.l2sq <= dec.small_l2_budget * 50  # reported against the shape


def test_comb_range_validation_messages():
    with pytest.raises(decomp.DecompositionError, match="H0"):
        decomp.comb_decompose("lambda", m=3, eps=0.2, H0=10.0, X=10**4)
    with pytest.raises(decomp.DecompositionError, match="eps"):
        decomp.comb_decompose("lambda", m=5, eps=0.5, H0=100.0, X=10**4)
    with pytest.raises(decomp.DecompositionError, match="q0"):
        decomp.comb_decompose("dk", m=3, eps=0.2, H0=200.0, X=10**4, q0=10**5)


def test_comb_reconstruction_window():
    X, q0 = 3000, 3
    dec = decomp.comb_decompose("dk", m=3, eps=0.25, H0=X**0.6, X=X, k=2, q0=q0)
    assert dec.win_lo == X // q0 + 1
    assert dec.win_hi == (2 * X) // q0
    recon = sum(p.table.values for p in dec.pieces)
    d2 = sieve.sieve_dk(2, q0 * dec.win_lo, q0 * dec.win_hi)
    target = d2.values[:: q0]
    assert np.abs(recon - target).max() <= 1e-9
