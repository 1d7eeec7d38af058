"""Exponential sums and the circle-method arc machinery.

S_f(alpha) = sum_n f(n) e(alpha n) over a table, major/minor arc systems
on the unit circle, the major-arc main-term integral by oscillation-aware
Gauss-Legendre quadrature, exact Plancherel/circle identities through the
finite Fourier transform, and the end-to-end averaged-correlation
experiment.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import log
from typing import List, Literal, Optional, Sequence, Tuple

import numpy as np

from . import local
from .corr import CorrelationSeries, ErrorProfile, correlate, error_profile, goldbach_series
from .quad import QuadratureError, integrate_oscillatory
from .sieve import FnTable, sieve_dk, sieve_lambda


# ---------------------------------------------------------------------------
# exponential sums


def _phases(alpha: float, n: np.ndarray) -> np.ndarray:
    """Fractional parts of alpha*n, splitting alpha to keep the product exact.

    alpha = a_hi + a_lo with a_hi carrying 26 mantissa bits, so a_hi * n is
    exactly representable for n < 2**27 and the reduction mod 1 loses nothing.
    """
    a = float(alpha) % 1.0
    a_hi = np.float64(np.float32(a))
    a_lo = a - a_hi
    f = np.mod(a_hi * n, 1.0) + np.mod(a_lo * n, 1.0)
    return np.mod(f, 1.0)


@dataclass(frozen=True)
class ExpSumEval:
    """One evaluation of S_f; |value| <= sum |f(n)| always holds."""

    alpha: float
    value: complex
    n_terms: int


def exp_sum(f: FnTable, alpha: float) -> complex:
    """S_f(alpha) = sum_n f(n) e(alpha n)."""
    n = f.indices()
    ph = _phases(alpha, n)
    z = np.exp(2j * np.pi * ph)
    return complex(np.dot(f.values, z))


def exp_sum_eval(f: FnTable, alpha: float) -> ExpSumEval:
    return ExpSumEval(alpha=float(alpha) % 1.0, value=exp_sum(f, alpha),
                      n_terms=int(np.count_nonzero(f.values)))


def exp_sum_grid(f: FnTable, alphas: np.ndarray, chunk: int = 1 << 22) -> np.ndarray:
    """S_f at many alphas; chunked over the table to bound memory."""
    alphas = np.asarray(alphas, dtype=np.float64)
    out = np.zeros(len(alphas), dtype=np.complex128)
    n_all = f.indices()
    for s in range(0, len(n_all), chunk):
        n = n_all[s: s + chunk]
        v = f.values[s: s + chunk]
        for i, a in enumerate(alphas):
            ph = _phases(float(a), n)
            out[i] += np.dot(v, np.exp(2j * np.pi * ph))
    return out


# ---------------------------------------------------------------------------
# arc systems


@dataclass(frozen=True)
class Arc:
    q: int
    a: int
    center: float
    halfwidth: float


@dataclass(frozen=True)
class ArcSystem:
    """Major arcs M_{Q,delta}: intervals [a/q - delta, a/q + delta], q <= Q."""

    X: int
    B: float
    B_prime: float
    Q: float
    delta: float
    arcs: Tuple[Arc, ...]

    def measure(self) -> float:
        return sum(2 * a.halfwidth for a in self.arcs)

    def minor_intervals(self) -> List[Tuple[float, float]]:
        """Complement of the arcs in [0, 1), as sorted disjoint intervals."""
        covered: List[Tuple[float, float]] = []
        for a in self.arcs:
            lo, hi = a.center - a.halfwidth, a.center + a.halfwidth
            if lo < 0.0:  # the arc around 0/1 wraps
                covered.append((lo + 1.0, 1.0))
                lo = 0.0
            covered.append((lo, min(hi, 1.0)))
        covered.sort()
        merged: List[Tuple[float, float]] = []
        for lo, hi in covered:
            if merged and lo <= merged[-1][1]:
                merged[-1] = (merged[-1][0], max(hi, merged[-1][1]))
            else:
                merged.append((lo, hi))
        out = []
        cur = 0.0
        for lo, hi in merged:
            if lo > cur:
                out.append((cur, lo))
            cur = max(cur, hi)
        if cur < 1.0:
            out.append((cur, 1.0))
        return out


def build_arcs(X: int, B: float, B_prime: float) -> ArcSystem:
    """Arcs with Q = log^B X and delta = log^B' X / X; rejects overlap.

    Disjointness holds when 2 delta < 1/Q^2; the degenerate single-arc
    configuration Q < 2 only requires delta <= 1/2.
    """
    lx = log(X)
    Q = lx ** B
    delta = lx ** B_prime / X
    return arc_system(X, Q, delta, B=B, B_prime=B_prime)


def arc_system(X: int, Q: float, delta: float, B: float = 0.0,
               B_prime: float = 0.0) -> ArcSystem:
    if Q < 1:
        raise ValueError("Q must be >= 1")
    qmax = int(Q)
    if qmax >= 2:
        if 2 * delta >= 1.0 / (qmax * qmax):
            raise ValueError(
                f"arcs overlap: 2*delta = {2*delta:g} >= 1/Q^2 = {1.0/qmax**2:g}")
    elif delta > 0.5:
        raise ValueError("single-arc system needs delta <= 1/2")
    arcs = []
    for q in range(1, qmax + 1):
        for a in range(q):
            if np.gcd(a, q) == 1 or (q == 1 and a == 0):
                arcs.append(Arc(q=q, a=a, center=a / q, halfwidth=delta))
    return ArcSystem(X=X, B=B, B_prime=B_prime, Q=Q, delta=delta, arcs=tuple(arcs))


def full_circle(X: int) -> ArcSystem:
    """Degenerate Q=1 system whose single arc covers the whole circle."""
    return ArcSystem(X=X, B=0.0, B_prime=0.0, Q=1.0, delta=0.5,
                     arcs=(Arc(q=1, a=0, center=0.0, halfwidth=0.5),))


# ---------------------------------------------------------------------------
# quadrature over arcs


def major_arc_mt(f: FnTable, g: FnTable, arcs: ArcSystem, h: int,
                 rel_tol: float = 1e-8) -> float:
    """MT_{M,h} = sum over arcs of int S_f(a) conj(S_g(a)) e(a h) da.

    Gauss-Legendre per arc with the node count scaled to the fastest
    phase (2X + |h|) per unit alpha; imaginary part must vanish for real
    tables with a symmetric arc system.
    """
    max_freq = max(f.hi, g.hi) + abs(h)
    # per-arc contributions are pieces of an X-scale aggregate, so stabilize
    # each to an absolute X-scale floor as well as the relative target
    abs_tol = rel_tol * (f.hi - f.lo + 1) / max(len(arcs.arcs), 1)

    def integrand(alphas: np.ndarray) -> np.ndarray:
        sf = exp_sum_grid(f, alphas)
        sg = exp_sum_grid(g, alphas)
        return sf * np.conj(sg) * np.exp(2j * np.pi * alphas * h)

    total = 0j
    for arc in arcs.arcs:
        total += integrate_oscillatory(
            integrand, arc.center - arc.halfwidth, arc.center + arc.halfwidth,
            max_freq, rel_tol=rel_tol, abs_tol=abs_tol)
    if abs(total.imag) > 1e-6 * max(f.hi, 1):
        raise QuadratureError(f"main term has large imaginary part {total.imag:g}")
    return total.real


def minor_arc_l2(f: FnTable, beta: float, width: float,
                 rel_tol: float = 1e-8) -> float:
    """int_{|theta - beta| <= width} |S_f(theta)|^2 dtheta by GL doubling."""
    if width <= 0:
        raise ValueError("width must be > 0")
    max_freq = f.hi - f.lo + 1  # |S_f|^2 oscillates at the support span

    def integrand(alphas: np.ndarray) -> np.ndarray:
        sf = exp_sum_grid(f, alphas)
        return (sf * np.conj(sf)).real.astype(np.complex128)

    val = integrate_oscillatory(integrand, beta - width, beta + width,
                                max_freq, rel_tol=rel_tol)
    return val.real


# ---------------------------------------------------------------------------
# exact circle identities via the finite Fourier transform


def _padded_tables(f: FnTable, g: FnTable, h: int) -> Tuple[np.ndarray, np.ndarray, int]:
    """Tables planted at n mod L with L past both the pair-offset span and
    the trig-polynomial degree, so the wrapped classes are unambiguous."""
    span = max(f.hi - g.lo, g.hi - f.lo) + abs(h) + 2
    L = 1
    while L < max(span, len(f) + len(g) + 1):
        L <<= 1
    fa = np.zeros(L)
    ga = np.zeros(L)
    fa[f.indices() % L] += f.values
    ga[g.indices() % L] += g.values
    return fa, ga, L


def parseval_check(f: FnTable, g: FnTable, h: int) -> Tuple[float, float, float]:
    """lhs = sum_n f(n) g(n+h); rhs = circle integral as an exact DFT.

    The integral over the circle of the trig polynomial
    S_f(a) conj(S_g(a)) e(a h) equals its mean over an L-point uniform
    grid once L exceeds the polynomial degree, so the DFT path is exact
    up to rounding.
    """
    n_lo = max(f.lo, g.lo - h)
    n_hi = min(f.hi, g.hi - h)
    lhs = 0.0
    if n_lo <= n_hi:
        lhs = float(np.dot(f.values[n_lo - f.lo: n_hi - f.lo + 1],
                           g.values[n_lo + h - g.lo: n_hi + h - g.lo + 1]))
    fa, ga, L = _padded_tables(f, g, h)
    Ff = np.fft.fft(fa)          # Ff[j] = conj(S_f(j/L)) for real tables
    Fg = np.fft.fft(ga)
    js = np.arange(L)
    vals = np.conj(Ff) * Fg * np.exp(2j * np.pi * js * h / L)
    rhs = float(np.mean(vals).real)
    return lhs, rhs, abs(lhs - rhs)


def circle_integral(f: FnTable, g: FnTable, h: int,
                    intervals: Sequence[Tuple[float, float]]) -> float:
    """int over a union of intervals of S_f(a) conj(S_g(a)) e(a h) da, exactly.

    The integrand is the trig polynomial sum_m C_m e(a (h - m)) with
    C_m = sum_n f(n) g(n + m); one FFT cross-correlation recovers the C_m
    and each mode integrates in closed form.
    """
    fa, ga, L = _padded_tables(f, g, h)
    cc = np.fft.irfft(np.conj(np.fft.rfft(fa)) * np.fft.rfft(ga), L)
    # cc[s] aggregates pairs with (n' - n) == s mod L; the true offset is
    # the unique representative in [g.lo - f.hi, g.hi - f.lo]
    lo_off = g.lo - f.hi
    s = np.arange(L)
    offsets = lo_off + (s - lo_off) % L
    ms = h - offsets
    nz = cc != 0.0
    m = ms[nz]
    c = cc[nz]
    total = 0.0
    for lo, hi in intervals:
        safe = np.where(m == 0, 1, m)
        ints = np.where(
            m == 0, complex(hi - lo),
            (np.exp(2j * np.pi * m * hi) - np.exp(2j * np.pi * m * lo))
            / (2j * np.pi * safe))
        total += float(np.dot(c, ints).real)
    return total


# ---------------------------------------------------------------------------
# Proposition-style numeric checks


def _mu(q: int) -> int:
    m = 1
    for _, e in local.factorize(q).items():
        if e > 1:
            return 0
        m = -m
    return m if q > 1 else 1


def _box_integral(beta: float, lo: int, hi: int) -> complex:
    """int_lo^hi e(beta x) dx."""
    if beta == 0.0:
        return complex(hi - lo)
    return (np.exp(2j * np.pi * beta * hi) -
            np.exp(2j * np.pi * beta * lo)) / (2j * np.pi * beta)


def kog_deviation(lam: FnTable, q: int, a: int, beta: float) -> float:
    """|S_Lambda(a/q + beta) - (mu(q)/phi(q)) int_X^2X e(beta x) dx| / X."""
    X = lam.lo - 1
    s = exp_sum(lam, a / q + beta)
    predicted = _mu(q) / local.euler_phi(q) * _box_integral(beta, X, lam.hi)
    return abs(s - predicted) / X


def kog_check(X: int, q_max: int = 5, beta_scale: float = 100.0,
              n_beta: int = 11, lam: Optional[FnTable] = None) -> dict:
    """Sup of the major-arc deviation over q <= q_max, (a,q)=1, |beta| <= scale/X."""
    if lam is None:
        lam = sieve_lambda(X + 1, 2 * X)
    betas = np.linspace(-beta_scale / X, beta_scale / X, n_beta)
    n = lam.indices()
    worst = 0.0
    worst_at = None
    for q in range(1, q_max + 1):
        for a in range(q):
            if not (np.gcd(a, q) == 1 or (q == 1 and a == 0)):
                continue
            w = lam.values * np.exp(2j * np.pi * _phases(a / q, n))
            for beta in betas:
                s = complex(np.dot(w, np.exp(2j * np.pi * _phases(float(beta), n))))
                dev = abs(s - _mu(q) / local.euler_phi(q)
                          * _box_integral(float(beta), X, lam.hi)) / X
                if dev > worst:
                    worst, worst_at = dev, (q, a, float(beta))
    return {"X": X, "q_max": q_max, "beta_scale": beta_scale,
            "sup_deviation": worst, "argmax": worst_at}


# ---------------------------------------------------------------------------
# averaged-theorem experiment

ExperimentKind = Literal["lambda-lambda", "dk-dl", "lambda-dk", "goldbach"]


def _predictions(kind: ExperimentKind, shifts: np.ndarray, X: int,
                 k: int = 2, l: int = 2, p_max: int = 10**6) -> np.ndarray:
    lx = log(X)
    if kind == "lambda-lambda":
        pi2 = local.twin_prime_constant(max(p_max, 10**6)).value
        return np.array([local.singular_series(int(h), p_max, pi2=pi2).value
                         if h != 0 else 0.0 for h in shifts]) * X
    if kind == "goldbach":
        pi2 = local.twin_prime_constant(max(p_max, 10**6)).value
        return np.array([local.singular_series(int(N), p_max, pi2=pi2).value * N
                         for N in shifts])
    if kind == "dk-dl":
        return np.array([
            local.leading_coeff_P(k, l, int(h), p_max).value if h != 0 else 0.0
            for h in shifts]) * X * lx ** (k + l - 2)
    if kind == "lambda-dk":
        return np.array([
            local.leading_coeff_Q(k, int(h), p_max).value if h != 0 else 0.0
            for h in shifts]) * X * lx ** (k - 1)
    raise ValueError(f"unknown kind {kind}")


def estimate_cost(kind: ExperimentKind, X: int, H: int) -> dict:
    """Predicted memory/time before running; the CLI prints this."""
    n_fft = 1
    while n_fft < 3 * X + 4 * H + 8:
        n_fft <<= 1
    mem = 8.0 * (2 * X + 2 * H) + 16.0 * n_fft          # tables + spectrum
    seconds = 2e-8 * X + 6e-8 * n_fft * max(1, n_fft.bit_length()) / 25
    return {"kind": kind, "X": X, "H": H,
            "est_memory_bytes": mem, "est_seconds": seconds}


def averaged_theorem_experiment(
        kind: ExperimentKind, X: int, H: int, A: float,
        B: float = 0.0, B_prime: float = 0.0, h0: Optional[int] = None,
        k: int = 2, l: int = 2, p_max: int = 10**6,
        prediction: Literal["closed-form", "major-arc"] = "closed-form",
        even_only: bool = False) -> Tuple[CorrelationSeries, ErrorProfile]:
    """Correlation series, main-term prediction, and error profile at level A.

    The prediction defaults to the singular-series / leading-coefficient
    closed forms; prediction="major-arc" instead integrates over the arc
    system built from (B, B') at O(X) cost per quadrature node.
    """
    if kind == "goldbach":
        N_lo, N_hi = X, X + 2 * H
        series = goldbach_series(N_lo, N_hi)
        series.main_terms = _predictions("goldbach", series.shifts, X, p_max=p_max)
    else:
        if h0 is None:
            h0 = H + 1  # default window [1, 2H+1]
        if kind == "lambda-lambda":
            f = sieve_lambda(X + 1, 2 * X)
            g = sieve_lambda(min(X + 1 + h0 - H, X + 1), 2 * X + h0 + H)
        elif kind == "dk-dl":
            f = sieve_dk(k, X + 1, 2 * X)
            g = sieve_dk(l, min(X + 1 + h0 - H, X + 1), 2 * X + h0 + H)
        elif kind == "lambda-dk":
            f = sieve_lambda(X + 1, 2 * X)
            g = sieve_dk(k, min(X + 1 + h0 - H, X + 1), 2 * X + h0 + H)
        else:
            raise ValueError(f"unknown kind {kind}")
        series = correlate(f, g, h0=h0, H=H)
        if prediction == "major-arc":
            arcs = build_arcs(X, B, B_prime)
            series.main_terms = np.array(
                [major_arc_mt(f, g, arcs, int(h)) for h in series.shifts])
        else:
            series.main_terms = _predictions(kind, series.shifts, X, k=k, l=l,
                                             p_max=p_max)
    if even_only:
        series = series.restrict(series.shifts % 2 == 0)
    profile = error_profile(series, A)
    return series, profile
