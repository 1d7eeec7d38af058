"""Exact tabulation of arithmetic functions on integer intervals.

Segmented sieves for the von Mangoldt function, the Moebius function,
the logarithm and the k-th divisor functions, plus exact Dirichlet
convolution of tabulated functions.

Values are stored as float64.  Integer-valued functions (mu, d_k,
indicators, convolutions of them) remain exact as long as every value
stays below 2**53; Lambda stores log p per prime power.
"""

from __future__ import annotations

import enum
import hashlib
import os
import struct
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from math import comb, isqrt
from pathlib import Path
from typing import Optional

import numpy as np

MAX_RANGE = 2**48
DEFAULT_SEGMENT = 1 << 20
CACHE_MAGIC = b"CORRLAB1"
CACHE_ENV = "CORRLAB_CACHE"
THREADS_ENV = "CORRLAB_THREADS"

# Largest hi for which the full-range convolution path is allowed to
# allocate two float64 arrays of length hi+1.
_FULL_RANGE_LIMIT = 2 * 10**8


class RangeError(ValueError):
    """Requested range violates 1 <= lo <= hi <= 2**48."""


class CoverageError(ValueError):
    """An input table does not cover a value that the operation needs."""

    def __init__(self, message: str, missing: int):
        super().__init__(message)
        self.missing = missing


class Kind(enum.IntEnum):
    CUSTOM = 0
    VON_MANGOLDT = 1
    MOEBIUS = 2
    DIVISOR = 3
    LOG = 4
    INDICATOR_DYADIC = 5


@dataclass(frozen=True)
class FnTable:
    """Tabulated arithmetic function on [lo, hi], values[i] = f(lo + i)."""

    kind: Kind
    lo: int
    hi: int
    values: np.ndarray
    k: int = 0
    label: str = ""

    def __post_init__(self):
        _check_range(self.lo, self.hi)
        if len(self.values) != self.hi - self.lo + 1:
            raise ValueError("values length does not match [lo, hi]")

    def __len__(self) -> int:
        return self.hi - self.lo + 1

    def covers(self, lo: int, hi: int) -> bool:
        return self.lo <= lo and hi <= self.hi

    def value(self, n: int) -> float:
        if not self.lo <= n <= self.hi:
            raise CoverageError(f"n={n} outside table range [{self.lo}, {self.hi}]", n)
        return float(self.values[n - self.lo])

    def window(self, lo: int, hi: int) -> np.ndarray:
        """View of the values on [lo, hi] (must be covered)."""
        if not self.covers(lo, hi):
            missing = lo if lo < self.lo else hi
            raise CoverageError(
                f"table [{self.lo}, {self.hi}] does not cover [{lo}, {hi}]", missing)
        return self.values[lo - self.lo: hi - self.lo + 1]

    def restrict(self, lo: int, hi: int) -> "FnTable":
        return replace(self, lo=lo, hi=hi, values=self.window(lo, hi).copy())

    def sum(self) -> float:
        return float(self.values.sum())

    def l2sq(self) -> float:
        return float(np.dot(self.values, self.values))

    def indices(self) -> np.ndarray:
        return np.arange(self.lo, self.hi + 1, dtype=np.int64)


@dataclass(frozen=True)
class DivisorBoundCertificate:
    """Witnessed constant C with |f(n)| <= C * d_2(n)**k * log(2+n)**k."""

    k: int
    witnessed_constant: float


def _check_range(lo: int, hi: int) -> None:
    if not (1 <= lo <= hi <= MAX_RANGE):
        raise RangeError(f"need 1 <= lo <= hi <= 2**48, got lo={lo} hi={hi}")


def _resolve_threads(threads: Optional[int]) -> int:
    if threads is not None:
        return max(1, int(threads))
    env = os.environ.get(THREADS_ENV)
    return max(1, int(env)) if env else 1


def _segments(lo: int, hi: int, segment: int):
    for s0 in range(lo, hi + 1, segment):
        yield s0, min(s0 + segment - 1, hi)


def _run_segments(work, lo, hi, segment, threads):
    segs = list(_segments(lo, hi, segment))
    if threads <= 1 or len(segs) <= 1:
        for s in segs:
            work(*s)
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            list(pool.map(lambda s: work(*s), segs))


def primes_up_to(n: int) -> np.ndarray:
    """All primes <= n as an int64 array (plain Eratosthenes)."""
    if n < 2:
        return np.zeros(0, dtype=np.int64)
    mask = np.ones(n + 1, dtype=bool)
    mask[:2] = False
    for i in range(2, isqrt(n) + 1):
        if mask[i]:
            mask[i * i:: i] = False
    return np.nonzero(mask)[0].astype(np.int64)


# ---------------------------------------------------------------------------
# sieves


def sieve_lambda(lo: int, hi: int, segment: int = DEFAULT_SEGMENT,
                 threads: Optional[int] = None) -> FnTable:
    """Von Mangoldt values on [lo, hi]: log p at prime powers p^j, else 0."""
    _check_range(lo, hi)
    base = primes_up_to(isqrt(hi))
    out = np.zeros(hi - lo + 1)

    def work(s0: int, s1: int):
        composite = np.zeros(s1 - s0 + 1, dtype=bool)
        if s0 <= 1 <= s1:
            composite[1 - s0] = True
        for p in base:
            start = max(p * p, ((s0 + p - 1) // p) * p)
            if start <= s1:
                composite[start - s0:: p] = True
        idx = np.nonzero(~composite)[0]
        ns = idx + s0
        keep = ns >= 2
        out[idx[keep] + (s0 - lo)] = np.log(ns[keep].astype(np.float64))

    _run_segments(work, lo, hi, segment, _resolve_threads(threads))
    # prime powers p^j, j >= 2 (the prime itself is handled above)
    for p in base:
        lp = np.log(float(p))
        pk = int(p) * int(p)
        while pk <= hi:
            if pk >= lo:
                out[pk - lo] = lp
            pk *= int(p)
    return FnTable(Kind.VON_MANGOLDT, lo, hi, out)


def sieve_moebius(lo: int, hi: int, segment: int = DEFAULT_SEGMENT,
                  threads: Optional[int] = None) -> FnTable:
    """Moebius values on [lo, hi], exact in {-1, 0, 1}."""
    _check_range(lo, hi)
    base = primes_up_to(isqrt(hi))
    out = np.zeros(hi - lo + 1)

    def work(s0: int, s1: int):
        m = s1 - s0 + 1
        mu = np.ones(m)
        sqfree_part = np.ones(m)  # product of the distinct primes <= sqrt(hi) dividing n
        for p in base:
            start = ((s0 + p - 1) // p) * p
            if start <= s1:
                mu[start - s0:: p] *= -1.0
                sqfree_part[start - s0:: p] *= float(p)
            p2 = int(p) * int(p)
            start2 = ((s0 + p2 - 1) // p2) * p2
            if start2 <= s1:
                mu[start2 - s0:: p2] = 0.0
        # one prime factor > sqrt(hi) may remain; it is never squared
        ns = np.arange(s0, s1 + 1, dtype=np.float64)
        flip = (mu != 0.0) & (sqfree_part != ns)
        mu[flip] *= -1.0
        out[s0 - lo: s1 - lo + 1] = mu

    _run_segments(work, lo, hi, segment, _resolve_threads(threads))
    return FnTable(Kind.MOEBIUS, lo, hi, out)


def sieve_log(lo: int, hi: int) -> FnTable:
    """log n on [lo, hi]."""
    _check_range(lo, hi)
    vals = np.log(np.arange(lo, hi + 1, dtype=np.float64))
    return FnTable(Kind.LOG, lo, hi, vals)


def ones_table(lo: int, hi: int) -> FnTable:
    _check_range(lo, hi)
    return FnTable(Kind.CUSTOM, lo, hi, np.ones(hi - lo + 1), label="one")


def indicator_dyadic(m: int, lo: int = 1, hi: Optional[int] = None) -> FnTable:
    """Indicator of the dyadic block (m, 2m] tabulated on [lo, hi]."""
    if hi is None:
        hi = 2 * m
    _check_range(lo, hi)
    vals = np.zeros(hi - lo + 1)
    a, b = max(lo, m + 1), min(hi, 2 * m)
    if a <= b:
        vals[a - lo: b - lo + 1] = 1.0
    return FnTable(Kind.INDICATOR_DYADIC, lo, hi, vals, k=0, label=f"1_({m},{2*m}]")


def custom_table(label: str, lo: int, values: np.ndarray) -> FnTable:
    values = np.asarray(values, dtype=np.float64)
    return FnTable(Kind.CUSTOM, lo, lo + len(values) - 1, values, label=label)


def _conv_by_table(u: np.ndarray, g: np.ndarray, n: int) -> np.ndarray:
    """out[m] = sum_{d | m} u[d] * g[m // d] for m in [1, n].

    u, g are full arrays indexed 0..n (index 0 ignored).  Splits the
    divisor loop at sqrt(n) and iterates quotients above it, so the
    Python-level loop count is O(sqrt(n)) instead of O(n).
    """
    out = np.zeros(n + 1)
    K = isqrt(n)
    for d in range(1, K + 1):
        if u[d] != 0.0:
            out[d:: d] += u[d] * g[1: n // d + 1]
    for q in range(1, n // (K + 1) + 1):
        hi = n // q
        if hi <= K:
            break
        out[q * (K + 1):: q][: hi - K] += g[q] * u[K + 1: hi + 1]
    return out


def _dk_full(k: int, hi: int) -> np.ndarray:
    """d_k on [0, hi] by k-1 convolutions of the constant-1 table."""
    ones = np.ones(hi + 1)
    ones[0] = 0.0
    cur = ones
    for _ in range(k - 1):
        cur = _conv_by_table(ones, cur, hi)
    return cur


def _dk_multiplicative(k: int, hi: int) -> np.ndarray:
    """d_k on [0, hi] by a multiplicative sieve over prime powers.

    Every entry stays an exact integer: each correction multiplies by
    C(e+k-1, k-1) and divides out C(e+k-2, k-1), and the running value
    always contains that divisor, so the float division is exact.
    """
    n = hi
    vals = np.ones(n + 1)
    vals[0] = 0.0
    base = primes_up_to(n)
    split = n // 64
    for p in base[base <= split]:
        vals[p:: p] *= float(k)
    large = base[base > split]
    js = n // large  # multiplier counts, all < 64
    for j in range(1, 64):
        sel = large[js >= j]
        if sel.size == 0:
            break
        vals[j * sel] *= float(k)
    # exponents e >= 2: promote C(e+k-2, k-1) to C(e+k-1, k-1)
    for p in base[base * base <= n]:
        pe = int(p) * int(p)
        e = 2
        while pe <= n:
            num = float(comb(e + k - 1, k - 1))
            den = float(comb(e + k - 2, k - 1))
            sl = vals[pe:: pe]
            sl *= num
            sl /= den
            pe *= int(p)
            e += 1
    return vals


def _dk_segment(k: int, lo: int, hi: int, segment: int, threads: Optional[int]) -> np.ndarray:
    """d_k on [lo, hi] by segmented divide-out factorization."""
    base = primes_up_to(isqrt(hi))
    out = np.empty(hi - lo + 1)
    # C(a + k - 1, k - 1) lookup; exponents of p <= sqrt(hi) are < 50
    lut = np.array([comb(a + k - 1, k - 1) for a in range(50)], dtype=np.float64)

    def work(s0: int, s1: int):
        m = s1 - s0 + 1
        vals = np.ones(m)
        rem = np.arange(s0, s1 + 1, dtype=np.int64)
        for p in base:
            start = ((s0 + p - 1) // p) * p
            if start > s1:
                continue
            idx = np.arange(start - s0, m, p)
            r = rem[idx]
            e = np.zeros(idx.size, dtype=np.int64)
            sub = np.arange(idx.size)
            while sub.size:
                r[sub] //= p
                e[sub] += 1
                sub = sub[r[sub] % p == 0]
            rem[idx] = r
            vals[idx] *= lut[e]
        vals[rem > 1] *= float(k)  # one prime factor > sqrt(hi) left
        if s0 <= 1 <= s1:
            vals[1 - s0] = 1.0
        out[s0 - lo: s1 - lo + 1] = vals

    _run_segments(work, lo, hi, segment, _resolve_threads(threads))
    return out


def sieve_dk(k: int, lo: int, hi: int, segment: int = DEFAULT_SEGMENT,
             threads: Optional[int] = None) -> FnTable:
    """k-th divisor function on [lo, hi], exact integers stored as float64.

    For a range starting near 1, k <= 3 uses the multiplicative sieve and
    k >= 4 uses k-1 exact Dirichlet convolutions of the constant-1 table
    (which bounds the memory of factor tables); a narrow window far from
    the origin uses segmented factorization.  All paths agree exactly.
    """
    _check_range(lo, hi)
    if not 1 <= k <= 8:
        raise ValueError(f"need 1 <= k <= 8, got k={k}")
    if k == 1:
        return FnTable(Kind.DIVISOR, lo, hi, np.ones(hi - lo + 1), k=1)
    if hi <= _FULL_RANGE_LIMIT and (lo == 1 or hi - lo + 1 >= hi // 4):
        vals = (_dk_multiplicative(k, hi) if k <= 3 else _dk_full(k, hi))[lo:]
    else:
        vals = _dk_segment(k, lo, hi, segment, threads)
    return FnTable(Kind.DIVISOR, lo, hi, np.ascontiguousarray(vals), k=k)


# ---------------------------------------------------------------------------
# Dirichlet convolution of tables


def _first_uncovered_divisor(t: FnTable, lo: int, hi: int) -> Optional[int]:
    """Smallest m that divides some n in [lo, hi] but is not covered by t."""
    for m in range(1, hi + 1):
        if (hi // m) * m >= lo and not (t.lo <= m <= t.hi):
            return m
    return None


def dirichlet_convolve(f: FnTable, g: FnTable, lo: int, hi: int) -> FnTable:
    """(f * g)(n) = sum_{d | n} f(d) g(n/d) exactly for n in [lo, hi].

    Both input tables must cover every divisor that appears; the first
    missing divisor is reported otherwise.
    """
    _check_range(lo, hi)
    for t, name in ((f, "f"), (g, "g")):
        miss = _first_uncovered_divisor(t, lo, hi)
        if miss is not None:
            raise CoverageError(
                f"{name} does not cover divisor {miss} needed on [{lo}, {hi}]", miss)
    out = np.zeros(hi - lo + 1)
    for d in range(1, hi + 1):
        fd = f.values[d - f.lo]
        if fd == 0.0:
            continue
        q0 = (lo + d - 1) // d
        q1 = hi // d
        if q0 > q1:
            continue
        out[d * q0 - lo: d * q1 - lo + 1: d] += fd * g.values[q0 - g.lo: q1 - g.lo + 1]
    return FnTable(Kind.CUSTOM, lo, hi, out, label="convolution")


def divisor_bound_check(f: FnTable, k: int) -> DivisorBoundCertificate:
    """Smallest C with |f(n)| <= C d_2(n)**k log(2+n)**k over the table."""
    if len(f) == 0:
        raise ValueError("empty table")
    if k < 0:
        raise ValueError("k must be >= 0")
    if k == 0:
        c = float(np.abs(f.values).max())
    else:
        d2 = sieve_dk(2, f.lo, f.hi).values
        denom = (d2 * np.log(2.0 + f.indices().astype(np.float64))) ** k
        c = float((np.abs(f.values) / denom).max())
    return DivisorBoundCertificate(k=k, witnessed_constant=c)


# ---------------------------------------------------------------------------
# binary cache

_KIND_TAG = {kind: int(kind) for kind in Kind}
_TAG_KIND = {int(kind): kind for kind in Kind}


def write_table(table: FnTable, path: os.PathLike | str) -> None:
    """Binary cache format: magic, u8 kind, u8 k, u64 lo, u64 hi, doubles (LE)."""
    path = Path(path)
    with open(path, "wb") as fh:
        fh.write(CACHE_MAGIC)
        fh.write(struct.pack("<BBQQ", _KIND_TAG[table.kind], table.k, table.lo, table.hi))
        fh.write(table.values.astype("<f8").tobytes())
    digest = hashlib.sha256(path.read_bytes()).hexdigest()
    path.with_suffix(path.suffix + ".sha256").write_text(digest + "\n")


def read_table(path: os.PathLike | str, verify_checksum: bool = True) -> FnTable:
    path = Path(path)
    raw = path.read_bytes()
    if verify_checksum:
        side = path.with_suffix(path.suffix + ".sha256")
        if side.exists():
            expect = side.read_text().strip()
            got = hashlib.sha256(raw).hexdigest()
            if got != expect:
                raise IOError(f"checksum mismatch for {path}")
    if raw[:8] != CACHE_MAGIC:
        raise IOError(f"{path} is not a CORRLAB1 cache file")
    tag, k, lo, hi = struct.unpack("<BBQQ", raw[8:26])
    n = hi - lo + 1
    vals = np.frombuffer(raw[26:26 + 8 * n], dtype="<f8").astype(np.float64)
    if len(vals) != n:
        raise IOError(f"{path} truncated")
    return FnTable(_TAG_KIND[tag], int(lo), int(hi), vals, k=int(k))


def cache_dir() -> Optional[Path]:
    env = os.environ.get(CACHE_ENV)
    return Path(env) if env else None


def _cache_name(kind: Kind, k: int, lo: int, hi: int) -> str:
    return f"{kind.name.lower()}_k{k}_{lo}_{hi}.tbl"


class _CacheLock:
    """Exclusive lock file; single-writer discipline for the cache dir."""

    def __init__(self, directory: Path):
        self.path = directory / "cache.lock"
        self.fd = None

    def __enter__(self):
        deadline = time.monotonic() + 60.0
        while True:
            try:
                self.fd = os.open(self.path, os.O_CREAT | os.O_EXCL | os.O_WRONLY)
                return self
            except FileExistsError:
                if time.monotonic() > deadline:
                    raise TimeoutError(f"stale cache lock {self.path}")
                time.sleep(0.05)

    def __exit__(self, *exc):
        if self.fd is not None:
            os.close(self.fd)
            self.path.unlink(missing_ok=True)


def load_or_sieve(kind: Kind, lo: int, hi: int, k: int = 0,
                  threads: Optional[int] = None) -> FnTable:
    """Fetch a table from the cache directory, sieving and caching on miss."""
    directory = cache_dir()
    if directory is not None:
        directory.mkdir(parents=True, exist_ok=True)
        path = directory / _cache_name(kind, k, lo, hi)
        if path.exists():
            try:
                return read_table(path)
            except IOError:
                path.unlink(missing_ok=True)
    table = _sieve_by_kind(kind, k, lo, hi, threads)
    if directory is not None:
        with _CacheLock(directory):
            write_table(table, directory / _cache_name(kind, k, lo, hi))
    return table


def _sieve_by_kind(kind: Kind, k: int, lo: int, hi: int, threads: Optional[int]) -> FnTable:
    if kind == Kind.VON_MANGOLDT:
        return sieve_lambda(lo, hi, threads=threads)
    if kind == Kind.MOEBIUS:
        return sieve_moebius(lo, hi, threads=threads)
    if kind == Kind.LOG:
        return sieve_log(lo, hi)
    if kind == Kind.DIVISOR:
        return sieve_dk(k, lo, hi, threads=threads)
    raise ValueError(f"cannot sieve kind {kind}")
