"""Exact arithmetic kernels: cusp divisor sums, Ramanujan-type brute-force
sums over units, and holomorphic newform coefficient tables.

Divisor sums follow the cusp-twisted convention used throughout the library:
for squarefree level N and a | N,

    sigma^a_x(n) = ( sum_{d|n, (d,N)=1} d^x )
                   * prod_{p|a, p^alpha || n} p^(x-1) (p - p^(alpha x + 1)
                                                       - 1 + p^((alpha+1) x))
                                              / (1 - p^x),

where the product runs over primes dividing a with alpha >= 0 the exact
p-adic valuation of n (alpha = 0 factors included).  Primes dividing N but
not a contribute nothing.
"""

from __future__ import annotations

import cmath
import csv
import math
import os
from dataclasses import dataclass, field
from typing import NamedTuple

import gmpy2
import numpy as np

from .errors import (CapacityError, ConvergenceError, DomainError,
                     PoleError, SchemaError, SingularFactorError)
from .specfun import zeta

__all__ = [
    "CuspContext",
    "HoloForm",
    "ValueWithTail",
    "delta_coefficients",
    "sigma_cusp",
    "sigma_N_limit",
    "ramanujan_rho_bruteforce",
    "rho_closed",
    "divisors",
    "prime_factors",
    "euler_phi",
    "is_squarefree",
]

_MAX_TABLE = 1 << 21


# ---------------------------------------------------------------------------
# small elementary number theory helpers
# ---------------------------------------------------------------------------

def prime_factors(n: int) -> list[int]:
    n = abs(int(n))
    out = []
    p = 2
    while p * p <= n:
        if n % p == 0:
            out.append(p)
            while n % p == 0:
                n //= p
        p += 1 if p == 2 else 2
    if n > 1:
        out.append(n)
    return out


def factorize(n: int) -> dict[int, int]:
    n = abs(int(n))
    out: dict[int, int] = {}
    p = 2
    while p * p <= n:
        while n % p == 0:
            out[p] = out.get(p, 0) + 1
            n //= p
        p += 1 if p == 2 else 2
    if n > 1:
        out[n] = out.get(n, 0) + 1
    return out


def divisors(n: int) -> list[int]:
    ds = [1]
    for p, e in factorize(n).items():
        ds = [d * p ** j for d in ds for j in range(e + 1)]
    return sorted(ds)


def euler_phi(n: int) -> int:
    n = int(n)
    out = n
    for p in prime_factors(n):
        out = out // p * (p - 1)
    return out


def is_squarefree(n: int) -> bool:
    return all(e == 1 for e in factorize(n).values())


def valuation(n: int, p: int) -> int:
    v = 0
    while n % p == 0:
        n //= p
        v += 1
    return v


# ---------------------------------------------------------------------------
# domain types
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class CuspContext:
    """The cusp 1/a of Gamma0(N) for squarefree N with a | N."""

    a: int
    N: int

    def __post_init__(self):
        if self.N < 1 or not is_squarefree(self.N):
            raise DomainError(f"level {self.N} must be a squarefree positive integer")
        if self.a < 1 or self.N % self.a != 0:
            raise DomainError(f"cusp denominator {self.a} must divide {self.N}")

    @property
    def width(self) -> int:
        return self.N // self.a


class ValueWithTail(NamedTuple):
    value: complex
    tail_bound: float


@dataclass
class HoloForm:
    """A holomorphic newform: even weight k >= 4, squarefree level N, and an
    exact coefficient table a(n) with A(n) = a(n) / n^((k-1)/2)."""

    weight: int
    level: int
    coeffs: list  # a(1..n_max); ints for built-in forms, floats for loaded data
    label: str = "f"
    _A: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        if self.weight < 4 or self.weight % 2 != 0:
            raise DomainError("weight must be an even integer >= 4")
        if not is_squarefree(self.level):
            raise DomainError("level must be squarefree")
        if len(self.coeffs) < 1 or self.coeffs[0] != 1:
            raise SchemaError("coefficient table must start with a(1) = 1")
        ns = np.arange(1, len(self.coeffs) + 1, dtype=float)
        self._A = np.asarray([float(c) for c in self.coeffs]) / ns ** ((self.weight - 1) / 2.0)
        self._check_multiplicativity()

    def _check_multiplicativity(self):
        nmax = len(self.coeffs)
        pairs = [(2, 3), (2, 5), (3, 5), (2, 9), (4, 3), (5, 7), (8, 9)]
        for m, n in pairs:
            if m * n <= nmax and math.gcd(m, n) == 1:
                lhs = float(self.coeffs[m * n - 1])
                rhs = float(self.coeffs[m - 1]) * float(self.coeffs[n - 1])
                if abs(lhs - rhs) > 1e-6 * max(1.0, abs(rhs)):
                    raise SchemaError(f"coefficients fail a({m}){m}*a({n}) = a({m*n})")

    @property
    def n_max(self) -> int:
        return len(self.coeffs)

    def a(self, n: int):
        if not 1 <= n <= self.n_max:
            raise CapacityError(f"a({n}) beyond table (n_max={self.n_max})")
        return self.coeffs[n - 1]

    def A(self, n: int) -> float:
        if not 1 <= n <= self.n_max:
            raise CapacityError(f"A({n}) beyond table (n_max={self.n_max})")
        return float(self._A[n - 1])

    @property
    def A_array(self) -> np.ndarray:
        return self._A

    @property
    def a_array(self) -> np.ndarray:
        return self._A * np.arange(1, self.n_max + 1, dtype=float) ** ((self.weight - 1) / 2.0)

    @classmethod
    def delta(cls, n_max: int = 4096) -> "HoloForm":
        return cls(weight=12, level=1, coeffs=delta_coefficients(n_max), label="delta")

    @classmethod
    def from_file(cls, path) -> "HoloForm":
        import json
        with open(path) as fh:
            rec = json.load(fh)
        for key in ("weight", "level", "coeffs"):
            if key not in rec:
                raise SchemaError(f"holomorphic form file missing '{key}'")
        return cls(weight=int(rec["weight"]), level=int(rec["level"]),
                   coeffs=list(rec["coeffs"]), label=str(rec.get("label", "f")))


# ---------------------------------------------------------------------------
# exact q-expansion of the discriminant form
# ---------------------------------------------------------------------------

def _pack_signed(coeffs, bits: int) -> tuple[int, int]:
    """Pack integer coefficients into (positive-part, negative-part) integers
    with `bits`-bit limbs, for Kronecker-substitution multiplication."""
    nbytes = bits // 8
    pos = bytearray(nbytes * len(coeffs))
    neg = bytearray(nbytes * len(coeffs))
    for i, c in enumerate(coeffs):
        if c > 0:
            pos[i * nbytes:(i + 1) * nbytes] = int(c).to_bytes(nbytes, "little")
        elif c < 0:
            neg[i * nbytes:(i + 1) * nbytes] = int(-c).to_bytes(nbytes, "little")
    return int.from_bytes(bytes(pos), "little"), int.from_bytes(bytes(neg), "little")


def _unpack(value: int, bits: int, length: int) -> list[int]:
    nbytes = bits // 8
    value = int(value) & ((1 << (bits * length)) - 1)
    raw = value.to_bytes(nbytes * length, "little")
    return [int.from_bytes(raw[i * nbytes:(i + 1) * nbytes], "little")
            for i in range(length)]


def _poly_sqr_trunc(coeffs: list[int], out_len: int) -> list[int]:
    """Exact truncated square of an integer polynomial via Kronecker
    substitution on gmpy2 big integers."""
    n = min(len(coeffs), out_len)
    coeffs = coeffs[:n]
    maxc = max(1, max(abs(c) for c in coeffs))
    bits = (2 * maxc.bit_length() + n.bit_length() + 3 + 7) // 8 * 8 + 8
    pos, neg = _pack_signed(coeffs, bits)
    p, q = gmpy2.mpz(pos), gmpy2.mpz(neg)
    plus = _unpack((p * p + q * q), bits, out_len)
    minus = _unpack(2 * p * q, bits, out_len)
    return [a - b for a, b in zip(plus, minus)]


def _eta_cube(n_max: int) -> list[int]:
    """q-expansion of prod (1-q^n)^3 = sum_j (-1)^j (2j+1) q^(j(j+1)/2)."""
    out = [0] * n_max
    j = 0
    while j * (j + 1) // 2 < n_max:
        out[j * (j + 1) // 2] = (2 * j + 1) * (-1 if j % 2 else 1)
        j += 1
    return out


def delta_coefficients(n_max: int) -> list[int]:
    """tau(1..n_max) for Delta = q prod (1-q^n)^24, by exact power-series
    squaring of prod(1-q^n)^3 (whose expansion is the sparse triangular-number
    series).  Uses the configured cache directory when MOMENTLAB_CACHE_DIR is
    set."""
    if n_max < 1:
        raise DomainError("n_max must be >= 1")
    if n_max > _MAX_TABLE:
        raise CapacityError(f"n_max={n_max} exceeds table bound {_MAX_TABLE}")
    cached = _load_tau_cache(n_max)
    if cached is not None:
        return cached
    e3 = _eta_cube(n_max)
    e6 = _poly_sqr_trunc(e3, n_max)
    e12 = _poly_sqr_trunc(e6, n_max)
    e24 = _poly_sqr_trunc(e12, n_max)
    tau = e24[:n_max]
    _store_tau_cache(tau)
    return tau


def _cache_path():
    root = os.environ.get("MOMENTLAB_CACHE_DIR")
    if not root:
        return None
    os.makedirs(root, exist_ok=True)
    return os.path.join(root, "tau_table.csv")


def _load_tau_cache(n_max: int):
    path = _cache_path()
    if not path or not os.path.exists(path):
        return None
    try:
        with open(path, newline="") as fh:
            reader = csv.reader(fh)
            header = next(reader)
            stored = int(header[1])
            if stored < n_max:
                return None
            out = []
            for row in reader:
                out.append(int(row[1]))
                if len(out) == n_max:
                    break
        return out if len(out) == n_max else None
    except (ValueError, IndexError, OSError):
        return None


def _store_tau_cache(tau: list[int]):
    path = _cache_path()
    if not path:
        return
    if os.path.exists(path):
        try:
            with open(path, newline="") as fh:
                if int(next(csv.reader(fh))[1]) >= len(tau):
                    return
        except (ValueError, IndexError, OSError):
            pass
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["n_max", len(tau)])
        for i, t in enumerate(tau, start=1):
            writer.writerow([i, t])


# ---------------------------------------------------------------------------
# twisted divisor sums
# ---------------------------------------------------------------------------

def _is_int_like(x: complex) -> bool:
    return abs(x.imag) < 1e-14 and abs(x.real - round(x.real)) < 1e-14


def sigma_cusp_exact(cusp: CuspContext, xi: int, n: int):
    """Exact rational sigma^a_x(n) for integer exponent x = xi."""
    from fractions import Fraction
    if n < 1:
        raise DomainError("n must be >= 1")
    a, N = cusp.a, cusp.N
    core = Fraction(0)
    for d in divisors(n):
        if math.gcd(d, N) == 1:
            core += Fraction(d) ** xi
    val = core
    for p in prime_factors(a):
        alpha = valuation(n, p)
        denom = 1 - Fraction(p) ** xi
        if denom == 0:
            raise SingularFactorError(f"1 - {p}^x vanishes; use the limit variant")
        num = p - Fraction(p) ** (alpha * xi + 1) - 1 + Fraction(p) ** ((alpha + 1) * xi)
        val *= Fraction(p) ** (xi - 1) * num / denom
    return val


def sigma_cusp(cusp: CuspContext, x: complex, n: int) -> complex:
    """sigma^a_x(n) for the cusp 1/a of Gamma0(N); exact rational arithmetic
    when x is an integer, complex double with compensated summation otherwise.
    """
    if n < 1:
        raise DomainError("n must be >= 1")
    x = complex(x)
    if _is_int_like(x):
        return complex(float(sigma_cusp_exact(cusp, int(round(x.real)), n)))
    return sigma_cusp_complex_safe(cusp, x, n)


def _sigma_level_factor(p: int, alpha: int, r: float) -> complex:
    """Local factor of sigma^N_{-2ir} at p | N, with the removable r -> 0
    limit built in (value (p*alpha - alpha - 1)/p at r = 0)."""
    x = -2j * r
    L = math.log(p)
    if abs(x * L) < 1e-6:
        # series of p^(x-1) (p - p^(alpha x+1) - 1 + p^((alpha+1)x)) / (1-p^x)
        a1 = alpha + 1 - p * alpha
        a2 = (alpha + 1) ** 2 - p * alpha ** 2
        a3 = (alpha + 1) ** 3 - p * alpha ** 3
        xL = x * L
        series = a1 + xL * a2 / 2.0 + xL * xL * a3 / 6.0
        corr = 1.0 + xL / 2.0 + xL * xL / 6.0
        return -(p ** (x - 1.0)) * series / corr
    num = p - p ** (alpha * x + 1.0) - 1.0 + p ** ((alpha + 1.0) * x)
    return p ** (x - 1.0) * num / (1.0 - p ** x)


def sigma_N_limit(r: float, n: int, N: int) -> complex:
    """sigma^N_{-2ir}(n) with the removable singularity at r = 0 resolved
    analytically in every local factor."""
    if n < 1:
        raise DomainError("n must be >= 1")
    if not is_squarefree(N):
        raise DomainError("level must be squarefree")
    x = -2j * r
    if abs(r) < 1e-300:
        core = complex(sum(1 for d in divisors(n) if math.gcd(d, N) == 1))
    else:
        core = complex(sum(d ** x for d in divisors(n) if math.gcd(d, N) == 1))
    for p in prime_factors(N):
        core *= _sigma_level_factor(p, valuation(n, p), r)
    return core


# ---------------------------------------------------------------------------
# Ramanujan-type brute-force cusp sums and their closed forms
# ---------------------------------------------------------------------------

def ramanujan_rho_bruteforce(cusp: CuspContext, s: complex, n: int,
                             gamma_max: int = 4000) -> ValueWithTail:
    """Direct evaluation of the unit-exponential double sum

        rho_{1/a}(s, n) = (1/(aN))^s sum_{gamma >= 1, (gamma, N/a) = 1}
                          gamma^(-2s) sum_{delta mod gamma a, (delta, gamma a)=1}
                          e(-n delta / (gamma a)),

    truncated at gamma <= gamma_max, with the tail bound
    (1/(aN))^sigma * a * gamma_max^(2-2 sigma) / (2 sigma - 2).
    """
    s = complex(s)
    if s.real <= 1.0:
        raise ConvergenceError("brute-force sum requires Re(s) > 1")
    if gamma_max < 1:
        raise DomainError("gamma_max must be >= 1")
    a, N = cusp.a, cusp.N
    m = cusp.width
    total = 0.0 + 0.0j
    for g in range(1, gamma_max + 1):
        if math.gcd(g, m) != 1:
            continue
        q = g * a
        delta = np.arange(q)
        mask = np.gcd(delta, q) == 1
        if n == 0:
            inner = float(np.count_nonzero(mask))
        else:
            inner = complex(np.sum(np.exp(-2j * np.pi * n * delta[mask] / q)))
        total += g ** (-2.0 * s) * inner
    sig = s.real
    tail = (a * N) ** (-sig) * a * gamma_max ** (2.0 - 2.0 * sig) / (2.0 * sig - 2.0)
    return ValueWithTail((a * N) ** (-s) * total, tail)


def rho_closed(cusp: CuspContext, s: complex, n: int) -> complex:
    """The closed form of rho_{1/a}(s, n): a twisted divisor sum over
    zeta(2s) * prod_{p|N}(1 - p^(-2s)) for n != 0, the phi(a)-weighted
    zeta(2s-1) ratio for n = 0."""
    s = complex(s)
    a, N = cusp.a, cusp.N
    denom = zeta(2 * s)
    for p in prime_factors(N):
        denom *= (1.0 - p ** (-2.0 * s))
    if abs(denom) < 1e-280:
        raise PoleError("denominator zeta factor vanishes on the evaluation path")
    if n != 0:
        sig = sigma_cusp_complex_safe(cusp, 1.0 - 2.0 * s, abs(n))
        return (N / a) ** (-s) * sig / denom
    num = zeta(2 * s - 1.0)
    for p in prime_factors(N // a):
        num *= (1.0 - p ** (1.0 - 2.0 * s))
    return num / denom * euler_phi(a) * (1.0 / (a * N)) ** s


def sigma_cusp_complex_safe(cusp: CuspContext, x: complex, n: int) -> complex:
    """sigma^a_x(n) forcing the complex-arithmetic path (keeps exact-integer
    evaluation out of oracle comparisons against complex closed forms)."""
    if n < 1:
        raise DomainError("n must be >= 1")
    x = complex(x)
    a, N = cusp.a, cusp.N
    terms = [d ** x for d in divisors(n) if math.gcd(d, N) == 1]
    val = complex(math.fsum(t.real for t in terms), math.fsum(t.imag for t in terms))
    for p in prime_factors(a):
        alpha = valuation(n, p)
        px = p ** x
        denom = 1.0 - px
        if abs(denom) < 1e-13:
            raise SingularFactorError(f"1 - {p}^x vanishes; use the limit variant")
        num = p - p ** (alpha * x + 1.0) - 1.0 + p ** ((alpha + 1.0) * x)
        val *= p ** (x - 1.0) * num / denom
    return val
