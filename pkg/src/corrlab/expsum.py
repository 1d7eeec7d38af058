"""Maximal exponential sums, phase sums, and the van der Corput B-process.

The maximal sum |sum|* over subwindows is the diameter of the prefix-sum
point set, computed by convex hull; window sums are defined through prefix
differences so that recomputation is bitwise reproducible.  Phase objects
carry closed-form derivatives up to order 4, and the Legendre transform is
inverted by safeguarded Newton iteration.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import floor, log, pi, sqrt
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np

from .quad import integrate_oscillatory


@dataclass(frozen=True)
class MaximalSumResult:
    """value = sup over subwindows of |partial sum|; arg_window = (X1, X2)
    with the window being terms X1..X2, 1-based.

    Window magnitudes are defined as sqrt(dx*dx + dy*dy) over prefix-sum
    differences; every operation is correctly rounded, so recompute() and
    the brute-force oracle reproduce the value bit for bit.
    """

    value: float
    arg_window: Tuple[int, int]

    def recompute(self, terms: np.ndarray) -> float:
        prefix = np.concatenate([[0.0 + 0.0j], np.cumsum(np.asarray(terms))])
        i, j = self.arg_window
        d = prefix[j] - prefix[i - 1]
        return sqrt(float(d.real) * float(d.real) + float(d.imag) * float(d.imag))


def _hull(points: np.ndarray) -> np.ndarray:
    """Indices of the convex hull (monotone chain) of complex points."""
    order = np.lexsort((points.imag, points.real))

    def chain(idx):
        out: List[int] = []
        for i in idx:
            while len(out) >= 2:
                o, a = points[out[-2]], points[out[-1]]
                cross = ((a.real - o.real) * (points[i].imag - o.imag)
                         - (a.imag - o.imag) * (points[i].real - o.real))
                if cross <= 0:
                    out.pop()
                else:
                    break
            out.append(i)
        return out[:-1]

    lower = chain(order)
    upper = chain(order[::-1])
    hull = lower + upper
    return np.array(hull if hull else [order[0]], dtype=np.int64)


def _pairwise_dsq(pts: np.ndarray) -> np.ndarray:
    dx = pts.real[:, None] - pts.real[None, :]
    dy = pts.imag[:, None] - pts.imag[None, :]
    return dx * dx + dy * dy


def maximal_sum(terms: Sequence[complex]) -> MaximalSumResult:
    """Exact sup over subwindows of |sum of terms|, via the diameter of the
    prefix-sum point set (convex hull, then all antipodal hull pairs)."""
    terms = np.asarray(terms, dtype=complex)
    if len(terms) < 1:
        raise ValueError("need at least one term")
    prefix = np.concatenate([[0.0 + 0.0j], np.cumsum(terms)])
    hull = _hull(prefix)
    if len(hull) == 1:
        i = int(hull[0])
        return MaximalSumResult(value=0.0, arg_window=(max(i, 1), max(i, 1)))
    d = _pairwise_dsq(prefix[hull])
    flat = int(np.argmax(d))
    bi, bj = divmod(flat, len(hull))
    i, j = sorted((int(hull[bi]), int(hull[bj])))
    return MaximalSumResult(value=sqrt(float(d[bi, bj])), arg_window=(i + 1, j))


def maximal_sum_bruteforce(terms: Sequence[complex]) -> float:
    """O(M^2) oracle over all prefix pairs (same arithmetic as maximal_sum)."""
    terms = np.asarray(terms, dtype=complex)
    prefix = np.concatenate([[0.0 + 0.0j], np.cumsum(terms)])
    return sqrt(float(_pairwise_dsq(prefix).max()))


def e(x: np.ndarray) -> np.ndarray:
    return np.exp(2j * np.pi * np.asarray(x, dtype=np.float64))


# ---------------------------------------------------------------------------
# phase sums


def y_tilde(t: float, M1: int, H: float, Q: float, q1: int = 1,
            c: float = 1.0) -> float:
    """(H/M1) sum over 1 <= ell <= c Q^2 M1 / (H q1) of the maximal sum of
    e((t/2pi) log((m+ell)/(m-ell))) over M1 <= m <= 2 M1."""
    if M1 < 2 or H <= 0 or Q <= 0 or q1 < 1:
        raise ValueError("parameters must be positive, M1 >= 2")
    ell_max = floor(c * Q * Q * M1 / (H * q1))
    ell_max = min(ell_max, M1 - 1)
    if ell_max < 1:
        return 0.0
    m = np.arange(M1, 2 * M1 + 1, dtype=np.float64)
    total = 0.0
    for ell in range(1, ell_max + 1):
        phase = (t / (2 * pi)) * np.log((m + ell) / (m - ell))
        total += maximal_sum(e(phase)).value
    return (H / M1) * total


def f_alpha_beta(alpha: float, beta: float, M1: int) -> float:
    """Maximal sum of e((alpha/pi)(M1/m) + (beta/3pi)(M1^3/m^3)), M1<=m<=2M1."""
    if M1 < 2:
        raise ValueError("M1 must be >= 2")
    m = np.arange(M1, 2 * M1 + 1, dtype=np.float64)
    phase = (alpha / pi) * (M1 / m) + (beta / (3 * pi)) * (M1 / m) ** 3
    return maximal_sum(e(phase)).value


@dataclass(frozen=True)
class TaylorSplit:
    max_remainder: float
    shape: float         # t (ell/M1)^5
    ratio: float


def taylor_split_check(t: float, ell: int, M1: int) -> TaylorSplit:
    """Max over m in [M1, 2M1] of the gap between (t/2pi) log((m+ell)/(m-ell))
    and its balanced two-term Taylor form (t/pi)(ell/m) + (t/3pi)(ell^3/m^3)."""
    if not 0 <= ell < M1 / 2:
        raise ValueError("need 0 <= ell < M1/2")
    m = np.arange(M1, 2 * M1 + 1, dtype=np.float64)
    exact = (t / (2 * pi)) * np.log((m + ell) / (m - ell))
    main = (t / pi) * (ell / m) + (t / (3 * pi)) * (ell / m) ** 3
    rem = float(np.abs(exact - main).max()) if ell else 0.0
    shape = abs(t) * (ell / M1) ** 5
    return TaylorSplit(max_remainder=rem, shape=shape,
                       ratio=rem / shape if shape else 0.0)


# ---------------------------------------------------------------------------
# phases with closed-form derivatives


@dataclass
class Phase:
    """Real phase with closed-form derivatives up to order 4 on a domain."""

    kind: str
    eval: Callable[[float], float]
    deriv: Callable[[float, int], float]
    domain: Tuple[float, float]

    def check_derivatives(self, rng: Optional[np.random.Generator] = None,
                          n_points: int = 100, rel_tol: float = 1e-6) -> float:
        """Max relative gap between deriv(., 1) and centered differences."""
        rng = rng or np.random.default_rng(0)
        lo, hi = self.domain
        xs = lo + (hi - lo) * rng.random(n_points) * 0.9 + (hi - lo) * 0.05
        worst = 0.0
        for x in xs:
            h = max(abs(x), 1.0) * 1e-6
            fd = (self.eval(x + h) - self.eval(x - h)) / (2 * h)
            d = self.deriv(x, 1)
            worst = max(worst, abs(fd - d) / max(abs(d), 1e-12))
        return worst


def monomial_phase(theta: float, M: float, coeff: float = 1.0,
                   domain: Optional[Tuple[float, float]] = None) -> Phase:
    """phi(x) = coeff (x/M)^theta."""
    if domain is None:
        domain = (M, 2 * M)

    def ev(x: float) -> float:
        return coeff * (x / M) ** theta

    def dv(x: float, r: int) -> float:
        c = coeff
        for i in range(r):
            c *= (theta - i)
        return c * (x / M) ** (theta - r) / M**r

    return Phase("monomial", ev, dv, domain)


def log_phase(X: float, M: float) -> Phase:
    """phi(x) = X log(x/M) on [M, 2M]; |phi^(j)| = X (j-1)!/x^j, comparable
    to X/M^j on the domain."""

    def ev(x: float) -> float:
        return X * log(x / M)

    def dv(x: float, r: int) -> float:
        sign = (-1) ** (r - 1)
        fact = 1.0
        for i in range(1, r):
            fact *= i
        return X * sign * fact / x**r

    return Phase("log", ev, dv, (M, 2 * M))


def balanced_main_phase(alpha: float, beta: float, M1: float,
                        domain: Optional[Tuple[float, float]] = None) -> Phase:
    """phi(x) = (alpha/pi)(M1/x) + (beta/3pi)(M1^3/x^3)."""
    if domain is None:
        domain = (M1, 2 * M1)
    a = alpha / pi * M1
    b = beta / (3 * pi) * M1**3

    def ev(x: float) -> float:
        return a / x + b / x**3

    def dv(x: float, r: int) -> float:
        f1 = 1.0
        for i in range(1, r + 1):
            f1 *= i
        f3 = 1.0          # d^r/dx^r x^-3 carries 3*4*...*(r+2)
        for i in range(3, 3 + r):
            f3 *= i
        return ((-1) ** r) * (a * f1 / x ** (r + 1) + b * f3 / x ** (r + 3))

    return Phase("balanced_main", ev, dv, domain)


def log_ratio_phase(t: float, ell: int, M1: float) -> Phase:
    """phi(m) = (t/2pi) log((m+ell)/(m-ell)) on [M1, 2M1]."""
    c = t / (2 * pi)

    def ev(m: float) -> float:
        return c * log((m + ell) / (m - ell))

    def dv(m: float, r: int) -> float:
        sign = (-1) ** (r - 1)
        fact = 1.0
        for i in range(1, r):
            fact *= i
        return c * sign * fact * ((m + ell) ** (-r) - (m - ell) ** (-r))

    return Phase("log_ratio", ev, dv, (M1, 2 * M1))


def custom_phase(ev: Callable[[float], float], dv: Callable[[float, int], float],
                 domain: Tuple[float, float]) -> Phase:
    return Phase("custom", ev, dv, domain)


# ---------------------------------------------------------------------------
# Legendre transform and the B-process


class PhaseError(ValueError):
    pass


def _invert_derivative(phase: Phase, t: float, rel_tol: float = 1e-12,
                       max_iter: int = 200) -> float:
    """Solve phi'(u) = t by safeguarded Newton with a bisection bracket."""
    lo, hi = phase.domain
    flo, fhi = phase.deriv(lo, 1) - t, phase.deriv(hi, 1) - t
    if flo == 0.0:
        return lo
    if fhi == 0.0:
        return hi
    if flo * fhi > 0:
        raise PhaseError(f"t={t:g} outside phi'([{lo:g}, {hi:g}])")
    a, b = lo, hi
    x = 0.5 * (a + b)
    for _ in range(max_iter):
        fx = phase.deriv(x, 1) - t
        if fx == 0.0:
            return x
        if fx * flo < 0:
            b = x
        else:
            a, flo = x, fx
        d2 = phase.deriv(x, 2)
        step = fx / d2 if d2 != 0 else b - a
        x_new = x - step
        if not a < x_new < b:
            x_new = 0.5 * (a + b)
        if abs(x_new - x) <= rel_tol * max(abs(x_new), 1e-300):
            return x_new
        x = x_new
    raise PhaseError(f"Newton/bisection did not converge for t={t:g}")


def check_monotone_derivative(phase: Phase, n_samples: int = 257) -> int:
    """Sign of phi'' on the domain; raises if phi' is not strictly monotone."""
    lo, hi = phase.domain
    xs = np.linspace(lo, hi, n_samples)
    d1 = np.array([phase.deriv(float(x), 1) for x in xs])
    diffs = np.diff(d1)
    if np.all(diffs > 0):
        return 1
    if np.all(diffs < 0):
        return -1
    raise PhaseError("phi' is not strictly monotone on the domain")


def legendre_transform(phase: Phase,
                       t_range: Optional[Tuple[float, float]] = None) -> Phase:
    """phi*(t) = phi(u(t)) - t u(t) with u = (phi')^{-1}.

    Sign convention: the plain difference above (no global negation), so
    d(phi*)/dt = -u(t) by the envelope identity, which doubles as the
    self-check for the returned derivatives.
    """
    check_monotone_derivative(phase)
    lo, hi = phase.domain
    t_ends = sorted((phase.deriv(lo, 1), phase.deriv(hi, 1)))
    if t_range is not None:
        t_lo, t_hi = max(t_ends[0], min(t_range)), min(t_ends[1], max(t_range))
        if t_lo >= t_hi:
            raise PhaseError("t_range does not meet phi'(domain)")
        t_ends = [t_lo, t_hi]

    def u(t: float) -> float:
        return _invert_derivative(phase, t)

    def ev(t: float) -> float:
        ut = u(t)
        return phase.eval(ut) - t * ut

    def dv(t: float, r: int) -> float:
        ut = u(t)
        if r == 1:
            return -ut
        up = 1.0 / phase.deriv(ut, 2)
        if r == 2:
            return -up
        d3 = phase.deriv(ut, 3)
        if r == 3:
            return d3 * up**3
        d4 = phase.deriv(ut, 4)
        return d4 * up**4 - 3.0 * d3**2 * up**5

    return Phase("legendre", ev, dv, (t_ends[0], t_ends[1]))


def balanced_expansion(alpha: float, beta: float, M1: float, t: float
                       ) -> Tuple[float, float]:
    """Two-term expansion of the Legendre transform of the balanced phase:
    (2 alpha/pi) z^{-1} + (beta/3pi) z^{-3} with z = sqrt(alpha/(pi |t| M1));
    the remainder is second order, O((beta/alpha)^2 alpha z^{-5}).

    Returns (expansion, shape) with shape = (beta^2/alpha^2) * alpha.
    """
    z = sqrt(alpha / (pi * abs(t) * M1))
    value = (2 * alpha / pi) / z + (beta / (3 * pi)) / z**3
    shape = (beta / alpha) ** 2 * alpha
    return value, shape


@dataclass(frozen=True)
class BProcessResult:
    direct: float
    transformed: float
    residual: float
    sqrt_M: float
    ell_range: Tuple[int, int]


def b_process_compare(phase: Phase, M: int, X: float,
                      window_factor: float = 4.0) -> BProcessResult:
    """Compare |sum_{M<=m<=2M} e(phi(m))|* with (M/sqrt X) |sum_ell e(phi*(ell))|*.

    Requires M << X << M^2 and |phi^(j)| comparable to X/M^j (both with an
    explicit factor-100 slack); the ell window scans a factor-window_factor
    range around L = X/M intersected with phi'(domain).
    """
    if not (M / 100.0 <= X <= 100.0 * M * M):
        raise PhaseError(f"need M/100 <= X <= 100 M^2, got M={M} X={X:g}")
    xs = np.linspace(M, 2 * M, 33)
    for j in range(1, 5):
        vals = np.abs([phase.deriv(float(x), j) for x in xs]) * M**j / X
        if vals.max() > 100.0 or vals.min() < 1.0 / 100.0:
            raise PhaseError(
                f"|phi^({j})| M^{j}/X in [{vals.min():g}, {vals.max():g}] "
                "violates the factor-100 comparability window")
    sign = check_monotone_derivative(phase)
    del sign
    m = np.arange(M, 2 * M + 1, dtype=np.float64)
    direct = maximal_sum(e([phase.eval(float(x)) for x in m])).value

    t_lo, t_hi = sorted((phase.deriv(M, 1), phase.deriv(2 * M, 1)))
    eps_sign = 1 if t_lo > 0 else -1
    L = X / M
    lo_mag, hi_mag = L / window_factor * 2, L * window_factor / 2
    ells = [ell * eps_sign for ell in range(max(1, int(lo_mag)), int(hi_mag) + 1)]
    star = legendre_transform(phase)
    ells = [l for l in ells if t_lo < l < t_hi]
    if not ells:
        raise PhaseError("no integer ell in the transformed window")
    transformed = (M / sqrt(X)) * maximal_sum(e([star.eval(float(l)) for l in ells])).value
    return BProcessResult(direct=direct, transformed=transformed,
                          residual=abs(direct - transformed), sqrt_M=sqrt(M),
                          ell_range=(int(min(ells)), int(max(ells))))


# ---------------------------------------------------------------------------
# report experiments


def rs_fourth_moment_experiment(M: int, X: float, theta: float,
                                a_m: Optional[np.ndarray] = None,
                                rel_tol: float = 1e-6) -> dict:
    """int_0^X (|sum_m a_m e(t (m/M)^theta)|*)^4 dt over the shape M^4 + M^2 X."""
    m = np.arange(M, 2 * M + 1, dtype=np.float64)
    if a_m is None:
        a_m = np.ones(len(m))
    if len(a_m) != len(m):
        raise ValueError("a_m must have length M+1 over [M, 2M]")
    base = (m / M) ** theta

    def integrand(ts: np.ndarray) -> np.ndarray:
        out = np.empty(len(ts), dtype=complex)
        for i, t in enumerate(ts):
            out[i] = maximal_sum(a_m * e(t * base)).value ** 4
        return out

    lhs = integrate_oscillatory(integrand, 0.0, X, float(np.abs(base).max()),
                                rel_tol=rel_tol).real
    shape = float(M) ** 4 + float(M) ** 2 * X
    return {"experiment": "rs-fourth-moment",
            "params": {"M": M, "X": X, "theta": theta},
            "lhs": lhs, "rhs_shape": shape, "ratio": lhs / shape}


def exponent_pair_bound(t: float, ell: int, M1: int,
                        pair: Tuple[float, float] = (1.0 / 14, 2.0 / 7)) -> float:
    """van der Corput exponent-pair estimate (|t| ell / M1^2)^kappa M1^(lambda+1/2)
    for the log-ratio phase sum."""
    kappa, lam = pair
    return (abs(t) * ell / M1**2) ** kappa * M1 ** (lam + 0.5)


def y_tilde_vs_exponent_pair(t: float, M1: int, H: float, Q: float,
                             q1: int = 1, c: float = 1.0,
                             pair: Tuple[float, float] = (1.0 / 14, 2.0 / 7)) -> dict:
    """Measured y_tilde against the exponent-pair prediction; report only."""
    measured = y_tilde(t, M1, H, Q, q1=q1, c=c)
    ell_max = min(floor(c * Q * Q * M1 / (H * q1)), M1 - 1)
    predicted = (H / M1) * sum(exponent_pair_bound(t, ell, M1, pair)
                               for ell in range(1, ell_max + 1))
    return {"experiment": "ytilde-vs-exponent-pair",
            "params": {"t": t, "M1": M1, "H": H, "Q": Q, "q1": q1, "c": c,
                       "pair": list(pair)},
            "lhs": measured, "rhs_shape": predicted,
            "ratio": measured / predicted if predicted else float("nan")}
