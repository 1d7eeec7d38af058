"""Heath-Brown identity and the combinatorial decomposition.

heath_brown_decompose() writes Lambda on (X, 2X] as a signed sum of
convolutions L * 1^{*(j-1)} * (mu 1_{[1,(2X)^{1/K}]})^{*j}.

comb_decompose() decomposes Lambda(q0 n) or d_k(q0 n) on (X/q0, 2X/q0]
into Type d_j, Type II and Small pieces.  Each elementary factor is a
dyadic block of 1, log, mu, or the multiplicative dilation factor g;
blocks inside one convolution slot group are enumerated as multisets
(convolution is commutative) with multinomial multiplicities, and the
small-factor content of every class is aggregated before the final
convolutions, which keeps the piece count polynomial in log X at desk
scale.  Reconstruction is verified pointwise on the output window.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import ceil, comb, isqrt, log
from typing import Dict, List, Literal, Optional, Sequence, Tuple

import numpy as np

from .sieve import FnTable, Kind, sieve_dk, sieve_lambda, sieve_moebius

FnKind = Literal["lambda", "dk"]


class DecompositionError(ValueError):
    """Range constraints unsatisfiable, or reconstruction failed."""


@dataclass(frozen=True)
class DecompositionPiece:
    """One component of the decomposition, with its window contribution.

    shape is "type_dj", "type_ii" or "small"; N is the dyadic scale of the
    aggregated small factor (0.5 for the unit atom), Ms the scales of the
    big factors (the beta chunk scale for Type II).  Coefficients are
    already folded into the table values; coefficient records the fold.
    """

    shape: str
    j: int
    N: float
    Ms: Tuple[float, ...]
    factor_kinds: Tuple[str, ...]
    coefficient: float
    table: FnTable
    l2sq: float
    label: str = ""


@dataclass
class Decomposition:
    pieces: List[DecompositionPiece]
    win_lo: int
    win_hi: int
    reconstruction_error: float
    small_l2_budget: float        # the X^{1 - eps/8} shape the small pieces report against
    fallback_terms: int = 0

    def counts(self) -> Dict[str, int]:
        out: Dict[str, int] = {}
        for p in self.pieces:
            out[p.shape] = out.get(p.shape, 0) + 1
        return out


# ---------------------------------------------------------------------------
# block machinery


@dataclass(frozen=True)
class _Block:
    func: str        # "one" | "log" | "mu" | "g1"
    lo: int
    hi: int
    scale: float     # dyadic label N, block within (N, 2N]; the unit atom gets 0.5


def _block_values(b: _Block, mu: Optional[np.ndarray],
                  g_vals: Optional[Dict[int, float]]) -> np.ndarray:
    ns = np.arange(b.lo, b.hi + 1, dtype=np.int64)
    if b.func == "one":
        return np.ones(len(ns))
    if b.func == "log":
        return np.log(ns.astype(np.float64))
    if b.func == "mu":
        return mu[b.lo - 1: b.hi].astype(np.float64)
    if b.func == "g1":
        return np.array([g_vals.get(int(n), 0.0) for n in ns])
    raise ValueError(b.func)


def _dyadic_blocks(func: str, cap: int,
                   g_support: Optional[Sequence[int]] = None) -> List[_Block]:
    """Dyadic blocks (2^i, 2^{i+1}] up to cap, plus the unit atom {1}.

    The log atom is omitted (log 1 = 0); g1 blocks are restricted to the
    dilation semigroup's dyadic ranges.
    """
    blocks: List[_Block] = []
    if func != "log":
        blocks.append(_Block(func, 1, 1, 0.5))
    i = 0
    while 2**i < cap:
        lo, hi = 2**i + 1, min(2 ** (i + 1), cap)
        if g_support is not None and not any(lo <= s <= hi for s in g_support):
            i += 1
            continue
        blocks.append(_Block(func, lo, hi, float(2**i)))
        i += 1
    return blocks


def _conv_block(u: np.ndarray, b: _Block, bvals: np.ndarray, n: int) -> np.ndarray:
    """out[x] = sum over m in the block, m | x, of u[x/m] * bvals[m - lo].

    Iterates the short side: block members when the block is short,
    quotients otherwise.
    """
    out = np.zeros(n + 1)
    b_hi = min(b.hi, n)
    if b_hi < b.lo:
        return out
    if b_hi - b.lo + 1 <= n // b.lo:
        for m in range(b.lo, b_hi + 1):
            v = bvals[m - b.lo]
            if v != 0.0:
                out[m:: m] += v * u[1: n // m + 1]
    else:
        for q in range(1, n // b.lo + 1):
            hi = min(b_hi, n // q)
            if hi < b.lo:
                break
            out[q * b.lo: q * hi + 1: q] += u[q] * bvals[: hi - b.lo + 1]
    return out


# ---------------------------------------------------------------------------
# Heath-Brown identity


@dataclass(frozen=True)
class HeathBrownPiece:
    j: int
    coefficient: float
    table: FnTable   # unscaled convolution restricted to (X, 2X]


@dataclass
class HeathBrownDecomposition:
    K: int
    X: int
    mu_cutoff: int
    pieces: List[HeathBrownPiece]
    max_reconstruction_error: float


def heath_brown_decompose(K: int, X: int,
                          lam: Optional[FnTable] = None) -> HeathBrownDecomposition:
    """Lambda = sum_{j=1}^K (-1)^{j+1} C(K,j) L * 1^{*(j-1)} * (mu 1_{<=cutoff})^{*j}
    on (X, 2X], with cutoff = floor((2X)^{1/K}); verified pointwise."""
    if not 1 <= K <= 5:
        raise ValueError("need 1 <= K <= 5")
    if X < 2:
        raise ValueError("X must be >= 2")
    n = 2 * X
    cutoff = int(round((2 * X) ** (1.0 / K)))
    while (cutoff + 1) ** K <= 2 * X:
        cutoff += 1
    while cutoff**K > 2 * X:
        cutoff -= 1
    mu_full = sieve_moebius(1, n).values
    mu_trunc = np.zeros(n + 1)
    mu_trunc[1: cutoff + 1] = mu_full[:cutoff]
    ones = np.ones(n + 1)
    ones[0] = 0.0
    logs = np.zeros(n + 1)
    logs[1:] = np.log(np.arange(1, n + 1, dtype=np.float64))

    def conv(u: np.ndarray, v: np.ndarray) -> np.ndarray:
        # v is one of the three base arrays; iterate its nonzero support
        out = np.zeros(n + 1)
        nz = np.nonzero(v)[0]
        if len(nz) <= 2 * isqrt(n):
            for m in nz:
                out[m:: m] += v[m] * u[1: n // m + 1]
        else:
            K0 = isqrt(n)
            for m in range(1, K0 + 1):
                if v[m] != 0.0:
                    out[m:: m] += v[m] * u[1: n // m + 1]
            for q in range(1, n // (K0 + 1) + 1):
                hi = n // q
                if hi <= K0:
                    break
                out[q * (K0 + 1):: q][: hi - K0] += u[q] * v[K0 + 1: hi + 1]
        return out

    pieces: List[HeathBrownPiece] = []
    recon = np.zeros(X)
    for j in range(1, K + 1):
        cur = logs.copy()
        for _ in range(j - 1):
            cur = conv(cur, ones)
        for _ in range(j):
            cur = conv(cur, mu_trunc)
        coeff = (-1) ** (j + 1) * comb(K, j)
        vals = cur[X + 1: 2 * X + 1].copy()
        pieces.append(HeathBrownPiece(
            j=j, coefficient=float(coeff),
            table=FnTable(Kind.CUSTOM, X + 1, 2 * X, vals, label=f"hb_j{j}")))
        recon += coeff * vals
    if lam is None:
        lam = sieve_lambda(X + 1, 2 * X)
    err = float(np.abs(recon - lam.window(X + 1, 2 * X)).max())
    return HeathBrownDecomposition(K=K, X=X, mu_cutoff=cutoff, pieces=pieces,
                                   max_reconstruction_error=err)


# ---------------------------------------------------------------------------
# combinatorial decomposition


def _dilation_g(k: int, q0: int, bound: int) -> Dict[int, float]:
    """Multiplicative g with d_k(q0 n) = d_k(q0) (d_k * g)(n), on the
    semigroup generated by the primes dividing q0, up to bound."""
    from .local import factorize

    fac = factorize(q0)

    def dk_pp(a: int) -> int:
        return comb(a + k - 1, k - 1)

    g_pp: Dict[int, Dict[int, float]] = {}
    for p, a in fac.items():
        vals: Dict[int, float] = {}
        e = 0
        while p**e <= bound:
            # g(p^e) = sum_i d_k(q0 p^i)/d_k(q0) * mu^{*k}(p^{e-i})
            s = 0.0
            for i in range(e + 1):
                s += (dk_pp(a + i) / dk_pp(a)) * ((-1) ** (e - i)) * comb(k, e - i)
            vals[e] = s
            e += 1
        g_pp[p] = vals

    out: Dict[int, float] = {}

    def rec(idx: int, n: int, val: float, primes: List[int]):
        if idx == len(primes):
            out[n] = val
            return
        p = primes[idx]
        e = 0
        while n * p**e <= bound:
            rec(idx + 1, n * p**e, val * g_pp[p][e], primes)
            e += 1

    rec(0, 1, 1.0, sorted(fac))
    return out


def _enumerate_terms(groups: List[Tuple[str, int, List[_Block]]],
                     win_lo: int, win_hi: int):
    """Yield (multiplicity, blocks) over multisets per slot group whose
    support product window can intersect (win_lo, win_hi]."""
    flat_slots: List[Tuple[str, List[_Block]]] = []
    for func, count, blocks in groups:
        for _ in range(count):
            flat_slots.append((func, blocks))
    n_slots = len(flat_slots)
    # suffix max products for pruning
    suffix_max = [1.0] * (n_slots + 1)
    for i in range(n_slots - 1, -1, -1):
        suffix_max[i] = suffix_max[i + 1] * max(b.hi for b in flat_slots[i][1])

    chosen: List[_Block] = []

    def rec(slot: int, min_idx: int, prod_lo: float, prod_hi: float):
        if prod_lo > win_hi:
            return
        if prod_hi * suffix_max[slot] <= win_lo:
            return
        if slot == n_slots:
            yield from _emit(chosen)
            return
        func, blocks = flat_slots[slot]
        same_group = slot > 0 and flat_slots[slot - 1][0] == func
        start = min_idx if same_group else 0
        for bi in range(start, len(blocks)):
            b = blocks[bi]
            chosen.append(b)
            yield from rec(slot + 1, bi, prod_lo * b.lo, prod_hi * b.hi)
            chosen.pop()

    def _emit(blocks: List[_Block]):
        # multinomial multiplicity per group of identical-function slots
        mult = 1
        i = 0
        while i < n_slots:
            func = flat_slots[i][0]
            jx = i
            while jx < n_slots and flat_slots[jx][0] == func:
                jx += 1
            cnt = jx - i
            reps: Dict[_Block, int] = {}
            for b in blocks[i:jx]:
                reps[b] = reps.get(b, 0) + 1
            f = 1
            for c in reps.values():
                for x in range(2, c + 1):
                    f *= x
            num = 1
            for x in range(2, cnt + 1):
                num *= x
            mult *= num // f
            i = jx
        yield mult, list(blocks)

    yield from rec(0, 0, 1.0, 1.0)


def comb_decompose(f_kind: FnKind, m: int, eps: float, H0: float, X: int,
                   q0: int = 1, k: int = 2, B_cap: float = 3.0,
                   verify_tol: float = 1e-9) -> Decomposition:
    """Decompose f(q0 .) on (X/q0, 2X/q0] into Type d_j / Type II / Small
    pieces and verify the pointwise reconstruction.

    f is Lambda 1_{(X,2X]} or d_k 1_{(X,2X]}.  Preconditions
    X^{1/m+eps} <= H0 <= X and q0 <= log(X)^B_cap are enforced; the
    violated inequality is named.
    """
    if m < 1:
        raise DecompositionError(f"need m >= 1, got m={m}")
    if not 0 < eps < 1.0 / m:
        raise DecompositionError(f"need 0 < eps < 1/m = {1.0/m:g}, got eps={eps}")
    lo_H, hi_H = X ** (1.0 / m + eps), float(X)
    if not lo_H <= H0 <= hi_H:
        raise DecompositionError(
            f"need X^(1/m+eps) = {lo_H:g} <= H0 <= X = {hi_H:g}, got H0={H0:g}")
    if q0 < 1 or q0 > max(log(X), 2.0) ** B_cap:
        raise DecompositionError(
            f"need 1 <= q0 <= log(X)^B_cap = {max(log(X), 2.0) ** B_cap:g}, got q0={q0}")

    win_lo = X // q0 + 1          # integers n with q0 n in (X, 2X]
    win_hi = (2 * X) // q0
    n_cap = win_hi
    x_eps = X**eps
    small_budget = X ** (1.0 - eps / 8.0)

    # Lambda with a genuine dilation is already a small sum
    if f_kind == "lambda" and q0 > 1:
        return _lambda_dilated_small(X, q0, win_lo, win_hi, small_budget)

    mu_vals: Optional[np.ndarray] = None
    g_vals: Optional[Dict[int, float]] = None
    groups: List[Tuple[str, int, List[_Block]]] = []
    g2_piece: Optional[DecompositionPiece] = None
    hb_terms: List[Tuple[float, List[Tuple[str, int, List[_Block]]]]] = []

    if f_kind == "lambda":
        K = int(ceil(1.0 / eps))
        cutoff = 1
        while (cutoff + 1) ** K <= 2 * X:
            cutoff += 1
        mu_vals = sieve_moebius(1, max(cutoff, 2)).values
        one_blocks = _dyadic_blocks("one", n_cap)
        log_blocks = _dyadic_blocks("log", n_cap)
        mu_blocks = _dyadic_blocks("mu", cutoff)
        for j in range(1, K + 1):
            coeff = float((-1) ** (j + 1) * comb(K, j))
            grp: List[Tuple[str, int, List[_Block]]] = [("log", 1, log_blocks)]
            if j > 1:
                grp.append(("one", j - 1, one_blocks))
            grp.append(("mu", j, mu_blocks))
            hb_terms.append((coeff, grp))
    else:
        if not 1 <= k <= 8:
            raise DecompositionError(f"need 1 <= k <= 8, got k={k}")
        one_blocks = _dyadic_blocks("one", n_cap)
        grp = [("one", k, one_blocks)]
        scale = 1.0
        if q0 > 1:
            g_bound = max(2, int(X ** (eps / 2.0)))
            g_all = _dilation_g(k, q0, win_hi)
            g_vals = {s: v for s, v in g_all.items() if s <= g_bound}
            g2 = {s: v for s, v in g_all.items() if s > g_bound}
            dkq0 = 1
            from .local import factorize
            for _, a in factorize(q0).items():
                dkq0 *= comb(a + k - 1, k - 1)
            scale = float(dkq0)
            g2_piece = _dk_g2_small(k, q0, g2, scale, win_lo, win_hi)
            g1_blocks = _dyadic_blocks("g1", g_bound, sorted(g_vals))
            grp = [("one", k, one_blocks), ("g1", 1, g1_blocks)]
        hb_terms.append((scale, grp))

    # enumerate, classify, aggregate small content per big-factor signature
    agg: Dict[Tuple, np.ndarray] = {}
    fallback_terms = 0
    fallback_vals = np.zeros(win_hi - win_lo + 1)

    for coeff, grp in hb_terms:
        for mult, blocks in _enumerate_terms(grp, win_lo, win_hi):
            total_coeff = coeff * mult
            order = sorted(range(len(blocks)), key=lambda i: blocks[i].scale)
            scales = [blocks[i].scale for i in order]
            s = 0
            prod = 1.0
            while s < len(blocks) and prod * scales[s] <= x_eps:
                prod *= scales[s]
                s += 1
            prod_next = prod * scales[s] if s < len(blocks) else prod
            if s == len(blocks) or prod_next <= 2.0 * H0:
                cls = "ii"
                n_alpha = min(s + 1, len(blocks))
            else:
                cls = "dj"
                n_alpha = s
            alpha_blocks = [blocks[i] for i in order[:n_alpha]]
            big_blocks = [blocks[i] for i in order[n_alpha:]]
            if cls == "dj" and (
                    any(b.func not in ("one", "log") for b in big_blocks)
                    or len(big_blocks) >= m):
                # mechanically unclassifiable leftover; keep it as Small
                fallback_terms += 1
                fallback_vals += total_coeff * _term_window_values(
                    blocks, win_lo, win_hi, mu_vals, g_vals)
                continue
            key = (cls, tuple((b.func, b.lo, b.hi, b.scale) for b in big_blocks))
            cap = 1
            for b in alpha_blocks:
                cap = min(cap * b.hi, n_cap)
            a_arr = _alpha_values(alpha_blocks, cap, mu_vals, g_vals)
            acc = agg.get(key)
            if acc is None or len(acc) < len(a_arr):
                grown = np.zeros(len(a_arr))
                if acc is not None:
                    grown[: len(acc)] = acc
                agg[key] = acc = grown
            acc[: len(a_arr)] += total_coeff * a_arr

    pieces: List[DecompositionPiece] = []
    for (cls, big_sig), alpha in agg.items():
        big_blocks = [_Block(func, lo, hi, scale) for func, lo, hi, scale in big_sig]
        pieces.extend(_pieces_from_group(cls, big_blocks, alpha, win_lo, win_hi,
                                         mu_vals, g_vals))
    if g2_piece is not None:
        pieces.append(g2_piece)
    if fallback_terms:
        tbl = FnTable(Kind.CUSTOM, win_lo, win_hi, fallback_vals, label="fallback")
        pieces.append(DecompositionPiece(
            shape="small", j=0, N=0.0, Ms=(), factor_kinds=(), coefficient=1.0,
            table=tbl, l2sq=float(np.dot(fallback_vals, fallback_vals)),
            label="unclassified-leftover"))

    recon = np.zeros(win_hi - win_lo + 1)
    for p in pieces:
        recon += p.table.values
    target = _target_values(f_kind, k, q0, win_lo, win_hi)
    err = float(np.abs(recon - target).max())
    dec = Decomposition(pieces=pieces, win_lo=win_lo, win_hi=win_hi,
                        reconstruction_error=err, small_l2_budget=small_budget,
                        fallback_terms=fallback_terms)
    if err > verify_tol:
        raise DecompositionError(
            f"reconstruction error {err:g} exceeds {verify_tol:g}")
    return dec


def _alpha_values(blocks: List[_Block], cap: int, mu_vals, g_vals) -> np.ndarray:
    out = np.zeros(cap + 1)
    out[1] = 1.0
    for b in blocks:
        out = _conv_block(out, b, _block_values(b, mu_vals, g_vals), cap)
    return out


def _term_window_values(blocks: List[_Block], win_lo: int, win_hi: int,
                        mu_vals, g_vals) -> np.ndarray:
    out = np.zeros(win_hi + 1)
    out[1] = 1.0
    for b in sorted(blocks, key=lambda b: b.scale):
        out = _conv_block(out, b, _block_values(b, mu_vals, g_vals), win_hi)
    return out[win_lo:]


def _pieces_from_group(cls: str, big_blocks: List[_Block], alpha: np.ndarray,
                       win_lo: int, win_hi: int, mu_vals, g_vals
                       ) -> List[DecompositionPiece]:
    """Split the aggregated alpha dyadically and convolve with the big part."""
    out: List[DecompositionPiece] = []
    nz = np.nonzero(alpha)[0]
    if len(nz) == 0:
        return out
    chunks: List[Tuple[float, int, int]] = []
    if alpha[1] != 0.0:
        chunks.append((0.5, 1, 1))
    i = 0
    while 2**i < nz.max():
        lo, hi = 2**i + 1, min(2 ** (i + 1), len(alpha) - 1)
        if np.any(alpha[lo: hi + 1] != 0.0):
            chunks.append((float(2**i), lo, hi))
        i += 1
    for scale, lo, hi in chunks:
        full = np.zeros(win_hi + 1)
        full[lo: hi + 1] = alpha[lo: hi + 1]
        for b in big_blocks:
            full = _conv_block(full, b, _block_values(b, mu_vals, g_vals), win_hi)
        vals = full[win_lo:]
        if not np.any(vals):
            continue
        tbl = FnTable(Kind.CUSTOM, win_lo, win_hi, vals.copy(),
                      label=f"{cls}_N{scale:g}")
        if cls == "dj":
            out.append(DecompositionPiece(
                shape=f"type_d{len(big_blocks)}", j=len(big_blocks), N=scale,
                Ms=tuple(b.scale for b in big_blocks),
                factor_kinds=tuple(b.func for b in big_blocks),
                coefficient=1.0, table=tbl,
                l2sq=float(np.dot(vals, vals))))
        else:
            out.append(DecompositionPiece(
                shape="type_ii", j=2, N=scale,
                Ms=tuple(b.scale for b in big_blocks),
                factor_kinds=tuple(b.func for b in big_blocks),
                coefficient=1.0, table=tbl,
                l2sq=float(np.dot(vals, vals))))
    return out


def _lambda_dilated_small(X: int, q0: int, win_lo: int, win_hi: int,
                          budget: float) -> Decomposition:
    """Lambda(q0 n) is supported on powers of the single prime of q0."""
    from .local import factorize

    vals = np.zeros(win_hi - win_lo + 1)
    fac = factorize(q0)
    if len(fac) == 1:
        (p, _), = fac.items()
        lp = log(p)
        pk = 1
        while pk <= win_hi:
            n = pk
            if win_lo <= n <= win_hi and _is_power_of(q0 * n, p):
                vals[n - win_lo] = lp
            pk *= p
    tbl = FnTable(Kind.CUSTOM, win_lo, win_hi, vals, label=f"lambda_q0{q0}")
    piece = DecompositionPiece(
        shape="small", j=0, N=0.0, Ms=(), factor_kinds=(), coefficient=1.0,
        table=tbl, l2sq=float(np.dot(vals, vals)), label="lambda-dilated")
    target = _target_values("lambda", 0, q0, win_lo, win_hi)
    err = float(np.abs(vals - target).max())
    return Decomposition(pieces=[piece], win_lo=win_lo, win_hi=win_hi,
                         reconstruction_error=err, small_l2_budget=budget)


def _is_power_of(n: int, p: int) -> bool:
    while n % p == 0:
        n //= p
    return n == 1


def _dk_g2_small(k: int, q0: int, g2: Dict[int, float], scale: float,
                 win_lo: int, win_hi: int) -> DecompositionPiece:
    """The d_k(q0) (d_k * g 1_{> X^{eps/2}}) tail, computed directly."""
    vals = np.zeros(win_hi - win_lo + 1)
    if g2:
        s_min = min(g2)
        dk = sieve_dk(k, 1, max(win_hi // s_min, 1)).values
        for s, gv in g2.items():
            if gv == 0.0 or s > win_hi:
                continue
            q_lo = (win_lo + s - 1) // s
            q_hi = win_hi // s
            if q_lo > q_hi:
                continue
            vals[s * q_lo - win_lo: s * q_hi - win_lo + 1: s] += \
                scale * gv * dk[q_lo - 1: q_hi]
    tbl = FnTable(Kind.CUSTOM, win_lo, win_hi, vals, label="dk-dilation-tail")
    return DecompositionPiece(
        shape="small", j=0, N=0.0, Ms=(), factor_kinds=(), coefficient=1.0,
        table=tbl, l2sq=float(np.dot(vals, vals)), label="dk-dilation-tail")


def _target_values(f_kind: FnKind, k: int, q0: int, win_lo: int, win_hi: int) -> np.ndarray:
    if f_kind == "lambda":
        full = sieve_lambda(q0 * win_lo, q0 * win_hi)
    else:
        full = sieve_dk(k, q0 * win_lo, q0 * win_hi)
    return full.values[:: q0].copy() if q0 > 1 else full.values
