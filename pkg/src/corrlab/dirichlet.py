"""Dirichlet characters and Dirichlet polynomials on the critical line.

Character enumeration by CRT over prime-power components, Gauss sums,
plain/twisted/dilated evaluation of D[f](1/2 + it), the expansion of an
additive twist into characters, exact bilinear mean-value cross-checks,
the truncated Perron formula, and the fourth-moment / Jutila / good-
cancellation report experiments.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from math import log, sqrt
from typing import List, Optional, Sequence, Tuple

import numpy as np

from .local import factorize
from .quad import integrate_oscillatory
from .sieve import FnTable, Kind, sieve_moebius

MAX_MODULUS = 10**4
MAX_CLOSED_FORM_SUPPORT = 10**4


# ---------------------------------------------------------------------------
# characters


@dataclass(frozen=True)
class Character:
    """Dirichlet character mod q1 as an explicit value table over residues."""

    modulus: int
    values: np.ndarray            # complex, length modulus, 0 off units
    is_principal: bool
    is_primitive: bool
    exponents: Tuple[int, ...] = ()

    def __call__(self, n: int) -> complex:
        return complex(self.values[n % self.modulus])

    def conj(self) -> "Character":
        return Character(self.modulus, np.conj(self.values), self.is_principal,
                         self.is_primitive, self.exponents)


def _odd_prime_power_generator(p: int, e: int) -> int:
    q = p**e
    phi = (p - 1) * p ** (e - 1)
    prime_factors = list(factorize(phi))
    for g in range(2, q):
        if g % p == 0:
            continue
        if all(pow(g, phi // r, q) != 1 for r in prime_factors):
            return g
    raise RuntimeError(f"no generator mod {q}")


def _unit_group_components(q: int) -> List[Tuple[int, int, int]]:
    """(prime-power modulus, generator, cyclic order) triples for (Z/q)^*."""
    comps: List[Tuple[int, int, int]] = []
    for p, e in sorted(factorize(q).items()):
        pe = p**e
        if p == 2:
            if e == 2:
                comps.append((pe, 3, 2))
            elif e >= 3:
                comps.append((pe, pe - 1, 2))       # the sign -1
                comps.append((pe, 3, 2 ** (e - 2)))
            # e == 1: trivial group
        else:
            comps.append((pe, _odd_prime_power_generator(p, e),
                          (p - 1) * p ** (e - 1)))
    return comps


def _component_dlogs(q1: int, units: np.ndarray) -> List[Tuple[int, np.ndarray]]:
    """(cyclic order, discrete log of each unit) per component of (Z/q1)^*."""
    comps: List[Tuple[int, np.ndarray]] = []
    for p, e in sorted(factorize(q1).items()):
        pe = p**e
        if p == 2:
            if e == 1:
                continue
            lut3 = {}
            x = 1
            for t in range(pe // 4 if e >= 3 else 2):
                lut3[x] = t
                x = (x * 3) % pe
            if e == 2:
                comps.append((2, np.array([lut3[int(u) % pe] for u in units])))
            else:
                # n = (-1)^s 3^t mod 2^e
                sign = np.zeros(len(units), dtype=np.int64)
                t3 = np.zeros(len(units), dtype=np.int64)
                for ui, u in enumerate(units):
                    r = int(u) % pe
                    if r in lut3:
                        t3[ui] = lut3[r]
                    else:
                        sign[ui] = 1
                        t3[ui] = lut3[(-r) % pe]
                comps.append((2, sign))
                comps.append((pe // 4, t3))
        else:
            order = (p - 1) * p ** (e - 1)
            g = _odd_prime_power_generator(p, e)
            lut = {}
            x = 1
            for t in range(order):
                lut[x] = t
                x = (x * g) % pe
            comps.append((order, np.array([lut[int(u) % pe] for u in units])))
    return comps


def characters(q1: int) -> List[Character]:
    """All phi(q1) Dirichlet characters mod q1 via CRT on the unit group."""
    if not 1 <= q1 <= MAX_MODULUS:
        raise ValueError(f"need 1 <= q1 <= {MAX_MODULUS}")
    if q1 == 1:
        return [Character(1, np.ones(1, dtype=complex), True, True, ())]
    units = np.array([n for n in range(q1) if np.gcd(n, q1) == 1])
    comps = _component_dlogs(q1, units)
    orders = [s for s, _ in comps]
    out: List[Character] = []
    for exps in itertools.product(*(range(s) for s in orders)):
        angle = np.zeros(len(units))
        for kk, (s, dlog) in zip(exps, comps):
            angle += kk * dlog / s
        vals = np.zeros(q1, dtype=complex)
        vals[units] = np.exp(2j * np.pi * angle)
        principal = all(k == 0 for k in exps)
        chi = Character(q1, vals, principal, False, tuple(exps))
        out.append(Character(q1, vals, principal, _is_primitive(chi), tuple(exps)))
    return out


def _is_primitive(chi: Character) -> bool:
    """chi mod q is primitive iff it is nontrivial on the units = 1 mod q/p
    for every prime p | q."""
    q = chi.modulus
    if q == 1:
        return True
    if q % 4 == 2:
        return False  # (Z/q)^* = (Z/(q/2))^*, every character is induced
    for p in factorize(q):
        d = q // p
        trivial = True
        for t in range(1, p + 1):
            u = (1 + t * d) % q
            if u and np.gcd(u, q) == 1:
                if abs(chi.values[u] - 1.0) > 1e-12:
                    trivial = False
                    break
        if trivial:
            return False
    return True


def gauss_sum(chi: Character) -> complex:
    """tau(conj(chi)) = sum_{l=1}^{q1} e(l/q1) conj(chi(l))."""
    q1 = chi.modulus
    ls = np.arange(1, q1 + 1)
    return complex(np.sum(np.exp(2j * np.pi * ls / q1) * np.conj(chi.values[ls % q1])))


# ---------------------------------------------------------------------------
# Dirichlet polynomial evaluation


@dataclass
class DirichletEval:
    """Evaluation context for D[f](1/2 + it, chi, q0) = sum f(q0 n) chi(n) n^{-1/2-it}."""

    f: FnTable
    q0: int = 1
    chi: Optional[Character] = None
    _ns: np.ndarray = field(init=False, repr=False)
    _base: np.ndarray = field(init=False, repr=False)
    _logn: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        if self.q0 < 1:
            raise ValueError("q0 must be >= 1")
        n_lo = (self.f.lo + self.q0 - 1) // self.q0
        n_hi = self.f.hi // self.q0
        ns = np.arange(max(n_lo, 1), n_hi + 1, dtype=np.int64)
        coeff = self.f.values[ns * self.q0 - self.f.lo].astype(complex)
        if self.chi is not None:
            coeff = coeff * self.chi.values[ns % self.chi.modulus]
        keep = coeff != 0
        self._ns = ns[keep]
        self._logn = np.log(self._ns.astype(np.float64))
        self._base = coeff[keep] / np.sqrt(self._ns.astype(np.float64))

    def support_size(self) -> int:
        return len(self._ns)

    def abs_bound(self) -> float:
        return float(np.abs(self._base).sum())


def eval_D(ctx: DirichletEval, t: float) -> complex:
    """D[f](1/2 + it, chi, q0)."""
    return complex(np.dot(ctx._base, np.exp(-1j * t * ctx._logn)))


def eval_D_grid(ctx: DirichletEval, ts: np.ndarray, chunk: int = 1 << 20) -> np.ndarray:
    """Evaluate at many t; log n is precomputed once, phases per chunk."""
    ts = np.asarray(ts, dtype=np.float64)
    out = np.zeros(len(ts), dtype=complex)
    n_terms = len(ctx._ns)
    t_chunk = max(1, min(len(ts), chunk // max(n_terms, 1) + 1))
    for s in range(0, len(ts), t_chunk):
        tt = ts[s: s + t_chunk]
        out[s: s + t_chunk] = np.exp(-1j * np.outer(tt, ctx._logn)) @ ctx._base
    return out


def eval_D_additive(f: FnTable, q: int, a: int, t: float) -> complex:
    """D[f e(a./q)](1/2 + it)."""
    ns = f.indices()
    coeff = f.values * np.exp(2j * np.pi * ((a * (ns % q)) % q) / q)
    base = coeff / np.sqrt(ns.astype(np.float64))
    return complex(np.dot(base, np.exp(-1j * t * np.log(ns.astype(np.float64)))))


def edc_check(f: FnTable, q: int, a: int, t: float) -> Tuple[float, float, bool]:
    """Verify |D[f e(a./q)]| <= (d_2(q)/sqrt(q)) sum_{q0 q1 = q} sum_chi |D[f](.,chi,q0)|."""
    if np.gcd(a, q) != 1:
        raise ValueError("need (a, q) = 1")
    lhs = abs(eval_D_additive(f, q, a, t))
    d2q = 1
    for _, e in factorize(q).items():
        d2q *= e + 1
    rhs = 0.0
    for q0 in sorted(d for d in range(1, q + 1) if q % d == 0):
        q1 = q // q0
        for chi in characters(q1):
            rhs += abs(eval_D(DirichletEval(f, q0=q0, chi=chi), t))
    rhs *= d2q / sqrt(q)
    return lhs, rhs, bool(lhs <= rhs * (1 + 1e-9) + 1e-12)


# ---------------------------------------------------------------------------
# mean value cross-checks


def mvt_closed_form(f: FnTable, T0: float, T: float, chunk: int = 512) -> float:
    """int_{T0}^{T0+T} |D[f](1/2+it)|^2 dt by exact bilinear expansion.

    Equals sum_{m,n} a_m a_n (sin((T0+T)L) - sin(T0 L))/L with
    a_n = f(n)/sqrt(n), L = log(n/m); the diagonal contributes T |a|^2.
    O(support^2) work, bounded to supports of at most 10^4.
    """
    ctx = DirichletEval(f)
    if ctx.support_size() > MAX_CLOSED_FORM_SUPPORT:
        raise ValueError(f"support {ctx.support_size()} exceeds "
                         f"{MAX_CLOSED_FORM_SUPPORT} for the closed form")
    a = ctx._base.real.astype(np.float64)
    if np.abs(ctx._base.imag).max(initial=0.0) > 0:
        raise ValueError("closed form expects real coefficients")
    logs = ctx._logn
    total = 0.0
    T1 = T0 + T
    for s in range(0, len(a), chunk):
        Lm = logs[s: s + chunk, None] - logs[None, :]
        K = np.empty_like(Lm)
        diag = Lm == 0.0
        with np.errstate(divide="ignore", invalid="ignore"):
            K = (np.sin(T1 * Lm) - np.sin(T0 * Lm)) / Lm
        K[diag] = T
        total += float(a[s: s + chunk] @ K @ a)
    return total


def mvt_quadrature(f: FnTable, T0: float, T: float, rel_tol: float = 1e-8) -> float:
    """Same integral by oscillation-aware Gauss-Legendre with node doubling."""
    ctx = DirichletEval(f)
    spread = float(ctx._logn.max() - ctx._logn.min()) if ctx.support_size() > 1 else 1.0

    def integrand(ts: np.ndarray) -> np.ndarray:
        vals = eval_D_grid(ctx, ts)
        return (vals * np.conj(vals)).astype(complex)

    out = integrate_oscillatory(integrand, T0, T0 + T, spread / (2 * np.pi),
                                rel_tol=rel_tol)
    return out.real


# ---------------------------------------------------------------------------
# truncated Perron formula


@dataclass(frozen=True)
class PerronResult:
    approx: float
    exact: float
    err: float
    bound_shape: float   # ||f||_inf * X * log(2+T) / T


def perron_truncated(f: FnTable, x: float, T: float,
                     rel_tol: float = 1e-8) -> PerronResult:
    """(1/2pi) int_{-T}^{T} D[f](1/2+it) x^{1/2+it}/(1/2+it) dt vs sum_{n<=x} f(n)."""
    ctx = DirichletEval(f)
    logx = log(x)

    def integrand(ts: np.ndarray) -> np.ndarray:
        vals = eval_D_grid(ctx, ts)
        return vals * np.exp((0.5 + 1j * ts) * logx) / (0.5 + 1j * ts)

    spread = float(np.abs(logx - ctx._logn).max())
    approx = integrate_oscillatory(integrand, -T, T, spread / (2 * np.pi),
                                   rel_tol=rel_tol) / (2 * np.pi)
    n_hi = min(f.hi, int(x))
    exact = float(f.values[: n_hi - f.lo + 1].sum()) if n_hi >= f.lo else 0.0
    sup = float(np.abs(f.values).max())
    shape = sup * f.hi * log(2.0 + T) / T
    return PerronResult(approx=approx.real, exact=exact,
                        err=abs(approx.real - exact), bound_shape=shape)


# ---------------------------------------------------------------------------
# moment experiments (report-only ratios)


def indicator_upto(X: int, L_weight: bool = False) -> FnTable:
    lo, hi = 1, int(X)
    vals = np.ones(hi)
    if L_weight:
        vals = np.log(np.arange(lo, hi + 1, dtype=np.float64))
    return FnTable(Kind.CUSTOM, lo, hi, vals,
                   label="L*1_[1,X]" if L_weight else "1_[1,X]")


def _fourth_integral(ctx: DirichletEval, intervals: Sequence[Tuple[float, float]],
                     rel_tol: float = 1e-7) -> float:
    spread = float(ctx._logn.max() - ctx._logn.min()) if ctx.support_size() > 1 else 1.0

    def integrand(ts: np.ndarray) -> np.ndarray:
        vals = eval_D_grid(ctx, ts)
        return (np.abs(vals) ** 4).astype(complex)

    total = 0.0
    for a, b in intervals:
        total += integrate_oscillatory(integrand, a, b, 2 * spread / (2 * np.pi),
                                       rel_tol=rel_tol).real
    return total


def fourth_moment_experiment(X: int, q1: int, T: float,
                             L_weight: bool = False) -> dict:
    """sum_chi int_{T/2<=|t|<=T} |D[1_[1,X]](1/2+it,chi)|^4 dt over the
    right-side shape q1 T (1 + q1^2/T^2 + X^2/T^4); report-only ratio."""
    f = indicator_upto(X, L_weight)
    lhs = 0.0
    for chi in characters(q1):
        ctx = DirichletEval(f, chi=chi)
        # |D(1/2-it,chi)| = |D(1/2+it,conj chi)| and chi -> conj chi is a
        # bijection of the character group, so both half-lines match
        lhs += 2.0 * _fourth_integral(ctx, [(T / 2, T)])
    shape = q1 * T * (1.0 + q1**2 / T**2 + X**2 / T**4)
    return {"experiment": "fourth-moment", "params": {"X": X, "q1": q1, "T": T,
            "L_weight": L_weight}, "lhs": lhs, "rhs_shape": shape,
            "ratio": lhs / shape}


def jutila_experiment(q: int, T: float, T0: float, t_list: Sequence[float],
                      X: Optional[int] = None) -> dict:
    """sum_chi sum_i int_{t_i}^{t_i+T0} |D[1_[1,X]](1/2+it,chi)|^4 dt against
    the shape q (r T0 + (r T)^{2/3}); report-only ratio."""
    if X is None:
        X = max(2, int(T))
    f = indicator_upto(X)
    r = len(t_list)
    lhs = 0.0
    for chi in characters(q):
        ctx = DirichletEval(f, chi=chi)
        lhs += _fourth_integral(ctx, [(float(t), float(t) + T0) for t in t_list])
    shape = q * (r * T0 + (r * T) ** (2 / 3))
    return {"experiment": "jutila", "params": {"q": q, "T": T, "T0": T0,
            "r": r, "X": X, "t_list": list(map(float, t_list))},
            "lhs": lhs, "rhs_shape": shape, "ratio": lhs / shape}


def lix_identity_check(X: int, y_values: Sequence[float]) -> float:
    """max over y of |log X 1_[1,X](y) - int_1^X 1_[1,X'](y) dX'/X' - L1_[1,X](y)|.

    The inner integral is int_y^X dX'/X' for y <= X, evaluated by quadrature.
    """
    worst = 0.0
    for y in y_values:
        if 1 <= y <= X:
            integral = integrate_oscillatory(
                lambda u: (1.0 / u).astype(complex), float(y), float(X), 0.0).real
            ident = log(X) - integral
            direct = log(y)
        else:
            ident = 0.0
            direct = 0.0
        worst = max(worst, abs(ident - direct))
    return worst


# ---------------------------------------------------------------------------
# good-cancellation report


def good_cancellation_report(kinds: Sequence[str], x_grid: Sequence[int],
                             q: int, a: int, t_list: Sequence[float]) -> List[dict]:
    """|sum_{n<=x, n=a(q)} alpha(n) n^{-1/2-it}| / sqrt(x) on an (x, t) grid.

    Emits the measured normalized sums and, per (kind, t), the fitted decay
    exponent of E(x) against log x (slope of log E on log log x).  This is
    a report: the bound has implicit constants and nothing is asserted.
    """
    rows: List[dict] = []
    for kind in kinds:
        for t in t_list:
            es = []
            for x in x_grid:
                ns = np.arange(1, int(x) + 1, dtype=np.int64)
                sel = ns % q == a % q
                ns = ns[sel]
                if kind == "one":
                    coeff = np.ones(len(ns))
                elif kind == "log":
                    coeff = np.log(ns.astype(np.float64))
                elif kind == "mu":
                    coeff = sieve_moebius(1, int(x)).values[ns - 1]
                else:
                    raise ValueError(f"unknown kind {kind}")
                base = coeff / np.sqrt(ns.astype(np.float64))
                val = abs(np.dot(base, np.exp(-1j * float(t) * np.log(ns.astype(np.float64)))))
                e = val / sqrt(x)
                es.append(e)
                rows.append({"kind": kind, "q": q, "a": a, "t": float(t),
                             "x": int(x), "normalized": float(e)})
            # decay exponent: log E ~ -A log log x
            lx = np.log(np.log(np.asarray(x_grid, dtype=np.float64)))
            le = np.log(np.maximum(np.asarray(es), 1e-300))
            if len(x_grid) >= 2 and np.ptp(lx) > 0:
                slope = float(np.polyfit(lx, le, 1)[0])
                rows.append({"kind": kind, "q": q, "a": a, "t": float(t),
                             "fitted_exponent": -slope})
    return rows
