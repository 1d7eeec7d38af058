"""Local densities and truncated Euler products.

Singular series, per-prime correlation factors for divisor and von
Mangoldt local components, Ramanujan sums, and the leading coefficients
of the correlation main-term polynomials.

Local expectations are evaluated in closed form from the geometric law
P(v_p(n) = j) = (1 - 1/p) p^{-j} of the p-adic valuation of a Haar-random
profinite integer; nothing here truncates an infinite series numerically.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import comb, factorial, isqrt, log
from typing import Dict, Optional, Tuple

import numpy as np

from .sieve import primes_up_to


@dataclass(frozen=True)
class LocalFactorResult:
    """Truncated Euler product with a rigorous tail bound.

    tail_bound bounds |log(full / truncated)|.  tail_proxy, when present,
    is the measured sum of |factor - 1| over primes in (p_max, 2 p_max],
    reported alongside the analytic bound per the build conventions.
    """

    value: float
    p_max: int
    tail_bound: float
    per_prime: Optional[Dict[int, float]] = None
    tail_proxy: Optional[float] = None


@dataclass(frozen=True)
class SingularSeriesValue:
    h: int
    value: float
    p_max: int


def _vp(h: int, p: int) -> int:
    h = abs(h)
    v = 0
    while h % p == 0:
        h //= p
        v += 1
    return v


def factorize(n: int) -> Dict[int, int]:
    """Prime factorization by trial division (desk-scale n)."""
    n = abs(n)
    out: Dict[int, int] = {}
    d = 2
    while d * d <= n:
        while n % d == 0:
            out[d] = out.get(d, 0) + 1
            n //= d
        d += 1 if d == 2 else 2
    if n > 1:
        out[n] = out.get(n, 0) + 1
    return out


def is_prime(p: int) -> bool:
    if p < 2:
        return False
    return all(p % d for d in range(2, isqrt(p) + 1))


def euler_phi(q: int) -> int:
    r = q
    for p in factorize(q):
        r -= r // p
    return r


def twin_prime_constant(p_max: int) -> LocalFactorResult:
    """prod_{2 < p <= p_max} (1 - 1/(p-1)^2) with analytic tail bound 2/p_max."""
    if p_max < 3:
        raise ValueError("p_max must be >= 3")
    odd = primes_up_to(p_max)
    odd = odd[odd > 2].astype(np.float64)
    value = float(np.prod(1.0 - 1.0 / (odd - 1.0) ** 2))
    return LocalFactorResult(value=value, p_max=p_max, tail_bound=2.0 / p_max)


def singular_series(h: int, p_max: int = 10**7,
                    pi2: Optional[float] = None) -> SingularSeriesValue:
    """Hardy-Littlewood singular series: 0 for odd h, else
    2 Pi_2 prod_{p | h, p > 2} (p-1)/(p-2) with Pi_2 truncated at p_max."""
    if h == 0:
        raise ValueError("h must be nonzero")
    if h % 2:
        return SingularSeriesValue(h=h, value=0.0, p_max=p_max)
    if pi2 is None:
        pi2 = twin_prime_constant(p_max).value
    value = 2.0 * pi2
    for p in factorize(h):
        if p > 2:
            value *= (p - 1) / (p - 2)
    return SingularSeriesValue(h=h, value=value, p_max=p_max)


# ---------------------------------------------------------------------------
# local correlation factors
#
# d_{k,p}(n) = C(v_p(n)+k-1, k-1),  E d_{k,p} = (1-1/p)^{1-k}
# Lambda_p(n) = p/(p-1) * 1_{p not| n},  E Lambda_p = 1


def _negbin_tail(k: int, v: int, x: float) -> float:
    """sum_{j > v} C(j+k-1, k-1) x^j = (1-x)^{-k} - partial sum."""
    return (1.0 - x) ** (-k) - sum(x**j * comb(j + k - 1, k - 1) for j in range(v + 1))


def local_factor_dkdl(k: int, l: int, p: int, h: int) -> float:
    """S_{k,l,p}(h) = E[d_{k,p}(n) d_{l,p}(n+h)] / (E d_{k,p} E d_{l,p}).

    Conditions on j = v_p(n) against v = v_p(h): for j < v both valuations
    equal j; for j > v the shifted valuation is v; at j = v the unit-shift
    law P(v_p(m + h') = i | m unit) = p^{-i} (i >= 1) applies.
    """
    if not is_prime(p):
        raise ValueError(f"p={p} is not prime")
    if h == 0:
        raise ValueError("h must be nonzero")
    if k < 1 or l < 1:
        raise ValueError("need k, l >= 1")
    v = _vp(h, p)
    x = 1.0 / p
    acc = sum(x**j * comb(j + k - 1, k - 1) * comb(j + l - 1, l - 1) for j in range(v))
    acc += comb(v + l - 1, l - 1) * _negbin_tail(k, v, x)
    acc += x**v * comb(v + k - 1, k - 1) * (
        (1.0 - 1.0 / (p - 1)) * comb(v + l - 1, l - 1) + p**v * _negbin_tail(l, v, x))
    expectation = (1.0 - x) * acc
    return expectation / ((1.0 - x) ** (1 - k) * (1.0 - x) ** (1 - l))


def local_factor_dk_lambda(k: int, p: int, h: int) -> float:
    """S_{k,p}(h) = E[d_{k,p}(n) Lambda_p(n+h)] / E d_{k,p}."""
    if not is_prime(p):
        raise ValueError(f"p={p} is not prime")
    if h == 0:
        raise ValueError("h must be nonzero")
    x = 1.0 / p
    if h % p == 0:
        return (1.0 - x) ** (k - 1)
    return (p / (p - 1)) * ((1.0 - x) ** (1 - k) - x) * (1.0 - x) ** (k - 1)


def local_factor_lambda_lambda(p: int, h: int) -> float:
    """E[Lambda_p(n) Lambda_p(n+h)]; the Euler factor of the singular series."""
    if not is_prime(p):
        raise ValueError(f"p={p} is not prime")
    if h % p == 0:
        return p / (p - 1)
    return 1.0 - 1.0 / (p - 1) ** 2


def _euler_product(factor, h: int, p_max: int, keep_per_prime: bool,
                   tail_proxy: bool) -> Tuple[float, float, Optional[Dict[int, float]], Optional[float]]:
    bound = 2 * p_max if tail_proxy else p_max
    primes = primes_up_to(bound)
    per: Optional[Dict[int, float]] = {} if keep_per_prime else None
    value = 1.0
    tail_c = 0.0
    proxy = 0.0 if tail_proxy else None
    n_tail_sample = 0
    for p in primes:
        p = int(p)
        f = factor(p, h)
        if p <= p_max:
            value *= f
            if per is not None:
                per[p] = f
            if p > p_max // 2 and abs(h) % p != 0:
                tail_c = max(tail_c, abs(f - 1.0) * p * p)
                n_tail_sample += 1
        elif proxy is not None:
            proxy += abs(f - 1.0)
    # |log(full/trunc)| <= sum_{p > p_max} |log(1 + (f-1))| <= 2 C sum p^{-2} <= 2C/p_max
    tail_bound = 2.0 * tail_c / p_max
    return value, tail_bound, per, proxy


def leading_coeff_P(k: int, l: int, h: int, p_max: int = 10**6,
                    keep_per_prime: bool = False,
                    tail_proxy: bool = False) -> LocalFactorResult:
    """Leading coefficient of the d_k d_l correlation polynomial:
    prod_{p <= p_max} S_{k,l,p}(h) / ((k-1)! (l-1)!)."""
    if h == 0:
        raise ValueError("h must be nonzero")
    value, tail_bound, per, proxy = _euler_product(
        lambda p, hh: local_factor_dkdl(k, l, p, hh), h, p_max, keep_per_prime, tail_proxy)
    value /= factorial(k - 1) * factorial(l - 1)
    return LocalFactorResult(value=value, p_max=p_max, tail_bound=tail_bound,
                             per_prime=per, tail_proxy=proxy)


def leading_coeff_Q(k: int, h: int, p_max: int = 10**6,
                    keep_per_prime: bool = False,
                    tail_proxy: bool = False) -> LocalFactorResult:
    """Leading coefficient of the Lambda d_k correlation polynomial:
    prod_{p <= p_max} S_{k,p}(h) / (k-1)!."""
    if h == 0:
        raise ValueError("h must be nonzero")
    value, tail_bound, per, proxy = _euler_product(
        lambda p, hh: local_factor_dk_lambda(k, p, hh), h, p_max, keep_per_prime, tail_proxy)
    value /= factorial(k - 1)
    return LocalFactorResult(value=value, p_max=p_max, tail_bound=tail_bound,
                             per_prime=per, tail_proxy=proxy)


def singular_series_local(h: int, p_max: int = 10**6) -> LocalFactorResult:
    """Singular series as the Euler product of Lambda-Lambda local factors."""
    if h == 0:
        raise ValueError("h must be nonzero")
    if h % 2:
        return LocalFactorResult(value=0.0, p_max=p_max, tail_bound=0.0)
    value, tail_bound, _, _ = _euler_product(
        local_factor_lambda_lambda, h, p_max, False, False)
    return LocalFactorResult(value=value, p_max=p_max, tail_bound=tail_bound)


# ---------------------------------------------------------------------------
# Ramanujan sums


def ramanujan_sum(q: int, h: int) -> float:
    """c_q(h) = sum_{(b,q)=1} e(bh/q), via multiplicativity in q.

    Prime-power factor: c_{p^a}(h) is p^{a-1}(p-1) if p^a | h,
    -p^{a-1} if p^{a-1} exactly divides gcd-part, 0 otherwise.
    The result is always an integer, returned as float.
    """
    if q < 1:
        raise ValueError("q must be >= 1")
    val = 1
    for p, a in factorize(q).items():
        v = _vp(h, p) if h != 0 else a
        if v >= a:
            val *= p ** (a - 1) * (p - 1)
        elif v == a - 1:
            val *= -(p ** (a - 1))
        else:
            return 0.0
    return float(val)


def ramanujan_sum_direct(q: int, h: int) -> float:
    """Direct definition sum_{(b,q)=1} e(bh/q); the rounding contract applies."""
    b = np.arange(1, q + 1)
    coprime = np.array([np.gcd(int(x), q) == 1 for x in b])
    val = np.sum(np.exp(2j * np.pi * b[coprime] * h / q)).real
    nearest = round(val)
    assert abs(val - nearest) < 1e-9, f"c_q({h}) not integral: {val}"
    return float(nearest)


def singular_series_via_ramanujan(h: int, q_max: int) -> float:
    """Partial sum over q <= q_max of mu^2(q) c_q(h) / phi(q)^2."""
    if h == 0:
        raise ValueError("h must be nonzero")
    if q_max < 1:
        raise ValueError("q_max must be >= 1")
    # smallest-prime-factor sieve for factoring every q <= q_max
    spf = np.arange(q_max + 1, dtype=np.int64)
    for i in range(2, isqrt(q_max) + 1):
        if spf[i] == i:
            sl = spf[i * i:: i]
            sl[sl == np.arange(i * i, q_max + 1, i)] = i
    total = 0.0
    for q in range(1, q_max + 1):
        m = q
        c = 1
        phi = 1
        squarefree = True
        while m > 1:
            p = int(spf[m])
            e = 0
            while m % p == 0:
                m //= p
                e += 1
            if e > 1:
                squarefree = False
                break
            phi *= p - 1
            if h % p == 0:
                c *= p - 1
            else:
                c = -c
        if squarefree and c != 0:
            total += c / (phi * phi)
    return total
