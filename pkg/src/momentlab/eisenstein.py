"""Eisenstein series at the cusps 1/a of Gamma0(N), evaluated two
independent ways:

* eisenstein_direct: the coset (lattice) sum.  For the cusp 1/a of
  squarefree level N with width m = N/a, the cosets are parametrized by
  bottom rows (c, d) = (a g, d) with g >= 1, gcd(g, m) = 1, gcd(d, a g) = 1
  (plus the identity coset exactly when a = N), and each coset contributes
  (y / (m |c z + d|^2))^s.  The d-lines are evaluated by brute terms plus
  Euler-Maclaurin tails; lines whose spacing is fine relative to c y
  collapse to their integral to machine precision.  The c-tail uses the
  exact Dirichlet series of the coprimality density.

* eisenstein_fourier: the arithmetic Fourier expansion with twisted divisor
  sums and K-Bessel terms.

Both return a value together with an honest truncation bound so the oracle
comparison |direct - fourier| <= combined bounds is meaningful.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass

import numpy as np

from . import arithmetic as ar
from .arithmetic import CuspContext, ValueWithTail
from .errors import CapacityError, ConvergenceError, DomainError
from .specfun import (EULER_GAMMA, bessel_k, digamma, gamma, log_gamma,
                      whittaker_w, zeta, zeta_star)

__all__ = [
    "UpperHalfPoint",
    "CosetList",
    "coset_reps",
    "eisenstein_direct",
    "eisenstein_fourier",
    "raised_eisenstein_fourier",
    "tau_cusp",
    "moebius_apply",
]

_MAX_COSETS = 4_000_000


@dataclass(frozen=True)
class UpperHalfPoint:
    x: float
    y: float

    def __post_init__(self):
        if not (self.y > 0):
            raise DomainError("upper half plane requires y > 0")

    @property
    def z(self) -> complex:
        return complex(self.x, self.y)


@dataclass
class CosetList:
    matrices: list
    height_bound: float


def moebius_apply(mat, z: complex) -> complex:
    (a, b), (c, d) = mat
    return (a * z + b) / (c * z + d)


# ---------------------------------------------------------------------------
# coset representatives
# ---------------------------------------------------------------------------

def _admissible_c_values(cusp: CuspContext, c_max: int) -> np.ndarray:
    a, m = cusp.a, cusp.width
    g = np.arange(1, c_max // a + 1)
    if m > 1:
        g = g[np.gcd(g, m) == 1]
    return a * g


def coset_reps(cusp: CuspContext, height_bound: float) -> CosetList:
    """Representatives of the cosets whose peak term height 1/(m c^2) at
    y = 1 can exceed height_bound; one matrix per bottom-row class
    (c, d mod c), reconstructed inside Gamma0(N)."""
    if not height_bound > 0:
        raise DomainError("height_bound must be positive")
    a, N, m = cusp.a, cusp.N, cusp.width
    c_max = int(math.floor(math.sqrt(1.0 / (m * height_bound))))
    mats = []
    if a == N:
        mats.append(((1, 0), (0, 1)))
    count = len(mats)
    for c in _admissible_c_values(cusp, c_max):
        c = int(c)
        g = c // a
        for d in range(c):
            if math.gcd(d, c) != 1:
                continue
            count += 1
            if count > _MAX_COSETS:
                raise CapacityError("coset enumeration exceeds configured limit")
            # A = d^{-1} mod c and A = -g mod m, CRT on coprime moduli
            a_inv = pow(d, -1, c)
            if m > 1:
                A = a_inv + c * (((-g - a_inv) * pow(c, -1, m)) % m)
            else:
                A = a_inv
            B = (A * d - 1) // c
            C = c + a * A
            D = d + a * B
            if (A * D - B * C) != 1 or C % N != 0:
                raise RuntimeError("coset reconstruction failed")
            mats.append(((A, B), (C, D)))
    return CosetList(mats, height_bound)


# ---------------------------------------------------------------------------
# direct (lattice) evaluation
# ---------------------------------------------------------------------------

def _phi_mu_sieve(limit: int):
    phi = np.arange(limit + 1, dtype=np.int64)
    mu = np.ones(limit + 1, dtype=np.int64)
    isp = np.ones(limit + 1, dtype=bool)
    isp[:2] = False
    for p in range(2, limit + 1):
        if isp[p]:
            isp[2 * p::p] = False
            phi[p::p] -= phi[p::p] // p
            mu[p::p] *= -1
            pp = p * p
            if pp <= limit:
                mu[pp::pp] = 0
    return phi, mu


def eisenstein_direct(cusp: CuspContext, z: UpperHalfPoint, s: complex,
                      c_max: int | None = None,
                      abs_tol: float = 1e-10) -> ValueWithTail:
    """Truncated coset sum for E_{1/a}(z, s), Re(s) >= 1.3, with tail bound.

    The inner d-sums are exact up to Euler-Maclaurin remainders; the
    c-tail beyond c_max uses the coprimality-density integral with its
    closed Dirichlet series.
    """
    s = complex(s)
    if s.real < 1.3 - 1e-12:
        raise ConvergenceError("direct evaluation requires Re(s) >= 1.3")
    a, N, m = cusp.a, cusp.N, cusp.width
    x, y = z.x, z.y
    sig = s.real

    if c_max is None:
        # 4000 gives ~1e-11 actual error for y >= 0.7 (calibrated); scale up
        # only for tighter tolerance requests
        c_max = 4000 if abs_tol >= 1e-10 else int(min(60000, 4000 * (1e-10 / abs_tol) ** 0.5))
    c_vals = _admissible_c_values(cusp, c_max)
    total = 0.0 + 0.0j
    phi, mu = _phi_mu_sieve(c_max)

    bs_const = math.sqrt(math.pi) * cmath.exp(log_gamma(s - 0.5) - log_gamma(s))
    q0 = max(1, int(math.floor(36.0 / (2.0 * math.pi * y))) + 1)

    c_arr = c_vals.astype(np.int64)
    # integral-only part: I(c) * (phi(c)/c - sum over bruted cofactors mu(e)/e)
    dens = phi[c_arr] / c_arr.astype(float)
    corr = np.zeros(len(c_arr))
    brute_total = 0.0 + 0.0j
    for q in range(1, q0 + 1):
        mask = (c_arr % q == 0)
        if not mask.any():
            continue
        cq = c_arr[mask]
        e = cq // q
        mue = mu[e]
        live = mue != 0
        # only lines with spacing too coarse for the pure integral
        coarse = (2.0 * math.pi * cq * y / e) < 36.0
        live &= coarse
        if not live.any():
            continue
        cq = cq[live]
        e = e[live].astype(float)
        mue = mue[live].astype(float)
        idx = np.nonzero(mask)[0][live]
        corr[idx] += mue / e
        A = cq * x
        B = cq * y
        # brute window: lattice points e*j with |e j + A| <= U0
        U0 = np.maximum(2.0 * B, 40.0 * e)
        j_lo = np.ceil((-A - U0) / e).astype(np.int64)
        j_hi = np.floor((-A + U0) / e).astype(np.int64)
        width = int((j_hi - j_lo).max()) + 1
        offs = np.arange(width)
        jj = j_lo[:, None] + offs[None, :]
        uu = jj * e[:, None] + A[:, None]
        valid = jj <= j_hi[:, None]
        ff = np.zeros(jj.shape, dtype=complex)
        base = uu * uu + (B * B)[:, None]
        ff[valid] = np.exp(-s * np.log(base[valid]))
        line = ff.sum(axis=1)
        line += _em_tail_lines(B, e, j_hi.astype(float) * e + A, s, +1.0)
        line += _em_tail_lines(B, e, j_lo.astype(float) * e + A, s, -1.0)
        brute_total += complex(np.sum(mue * line))
    # integral contributions with corrected density
    if len(c_arr):
        dens_eff = dens - corr
        integ = bs_const * np.exp((1.0 - 2.0 * s) * np.log(c_arr * y))
        total = complex(np.sum(dens_eff * integ)) + brute_total
    # analytic c-tail
    tail_main, tail_err = _c_tail(cusp, s, y, c_max, phi)
    total += tail_main

    value = (0.0 + 0.0j)
    if a == N:
        value += cmath.exp(s * math.log(y))
    value += cmath.exp(s * (math.log(y) - math.log(m))) * total
    # EM remainders: bounded by the B6 term of the coarsest bruted lines
    em_bound = 3e-12 * max(1.0, len(c_arr)) * (y / m) ** sig
    bound = abs((y / m) ** s) * tail_err + em_bound
    return ValueWithTail(value, bound)


def _em_tail_lines(B, e, u_edge, s, side):
    """One-sided Euler-Maclaurin tail of sum_j f(u_edge + side*e*(j+1)) for
    f(u) = (u^2 + B^2)^(-s): integral (hypergeometric tail series, valid for
    |u0| > B which the window guarantees) plus f/2, -e f'/12, +e^3 f'''/720.
    Vectorized over lines."""
    u0 = u_edge + side * e
    z1 = 1j * B
    q1 = 1.0 / (u0 + z1)
    q2 = 1.0 / (u0 - z1)
    f = np.exp(-s * (np.log(u0 + z1) + np.log(u0 - z1)))
    L1 = -s * (q1 + q2)
    L2 = s * (q1 * q1 + q2 * q2)
    L3 = -2.0 * s * (q1 ** 3 + q2 ** 3)
    fp = f * L1
    fppp = f * (L3 + 3.0 * L2 * L1 + L1 ** 3)
    V = np.asarray(side * u0, dtype=complex)
    val = np.zeros(V.shape, dtype=complex)
    coef = np.ones(V.shape, dtype=complex)
    B2 = np.asarray(B, dtype=complex) ** 2
    term_pow = V ** (1.0 - 2.0 * s)
    for k in range(60):
        val += coef * term_pow / (2.0 * s + 2.0 * k - 1.0)
        coef = coef * (-s - k) / (k + 1.0)
        term_pow = term_pow * B2 / (V * V)
    return val / e + 0.5 * f - (side * e) * fp / 12.0 + (side * e) ** 3 * fppp / 720.0


def _c_tail(cusp: CuspContext, s: complex, y: float, c_max: int, phi):
    """sum over admissible c > c_max of (phi(c)/c) (c y)^(1-2s) B_s, via the
    closed Dirichlet series minus the exact partial sum; returns (value,
    error bound for replacing those lines by their integrals)."""
    a, m = cusp.a, cusp.width
    w = 2.0 * s
    full = _phi_dirichlet(a, m, w)
    g = np.arange(1, c_max // a + 1, dtype=np.int64)
    if m > 1:
        g = g[np.gcd(g, m) == 1]
    c = a * g
    partial = complex(np.sum(phi[c] * np.exp(-w * np.log(c.astype(float)))))
    bs_const = math.sqrt(math.pi) * cmath.exp(log_gamma(s - 0.5) - log_gamma(s))
    val = bs_const * cmath.exp((1.0 - 2.0 * s) * math.log(y)) * (full - partial)
    sig = s.real
    # residual of the integral-density approximation beyond c_max: dominated
    # by the coarsest divisor lines, scale e^{-2 pi y} c^(-2 sig) per line
    err = 40.0 * math.exp(-2.0 * math.pi * y) * c_max ** (1.0 - 2.0 * sig) \
        / max(2.0 * sig - 1.0, 0.5) * (1.0 + y ** (1 - 2 * sig))
    return val, err


def _phi_dirichlet(a: int, m: int, w: complex) -> complex:
    """sum_{g>=1, (g,m)=1} phi(a g) (a g)^(-w)
       = zeta(w-1)/zeta(w) * prod_{p | a m} (1-p^(1-w))/(1-p^(-w))
         * prod_{p|a} (p-1) p^(-w) / (1-p^(1-w))."""
    out = zeta(w - 1.0) / zeta(w)
    for p in ar.prime_factors(a * m):
        out *= (1.0 - p ** (1.0 - w)) / (1.0 - p ** (-w))
    for p in ar.prime_factors(a):
        out *= (p - 1.0) * p ** (-w) / (1.0 - p ** (1.0 - w))
    return out


# ---------------------------------------------------------------------------
# Fourier-expansion evaluation
# ---------------------------------------------------------------------------

def _k_bessel_wide(nu: complex, v: float) -> complex:
    """K_nu for |Re nu| < 2 via the contiguous recurrence when needed."""
    if abs(nu.real) < 1.0:
        return bessel_k(nu, v)
    sgn = 1.0 if nu.real > 0 else -1.0
    nu = nu * sgn  # K_{-nu} = K_nu
    k0 = bessel_k(nu - 2.0, v)
    k1 = bessel_k(nu - 1.0, v)
    return k0 + 2.0 * (nu - 1.0) / v * k1


def tau_cusp(cusp: CuspContext, s: complex, n: int) -> complex:
    """Fourier coefficient tau_{1/a}(s, n) of E_{1/a}(z, s)."""
    s = complex(s)
    if n == 0:
        return math.sqrt(math.pi) * cmath.exp(log_gamma(s - 0.5) - log_gamma(s)) \
            * ar.rho_closed(cusp, s, 0)
    return 2.0 * cmath.exp(s * math.log(math.pi) - log_gamma(s)) \
        * ar.rho_closed(cusp, s, n) * abs(n) ** (s - 0.5)


def eisenstein_fourier(cusp: CuspContext, z: UpperHalfPoint, s: complex,
                       n_max: int | None = None) -> ValueWithTail:
    """E_{1/a}(z, s) from its Fourier expansion: delta term, scattering term
    and the twisted-divisor K-Bessel sum truncated at |n| <= n_max."""
    s = complex(s)
    x, y = z.x, z.y
    if y < 0.3:
        raise DomainError("fourier evaluation requires y >= 0.3")
    if n_max is None:
        n_max = int(math.ceil(10.0 / y)) + 5
    a, N = cusp.a, cusp.N
    val = 0.0 + 0.0j
    if a == N:
        val += cmath.exp(s * math.log(y))
    val += tau_cusp(cusp, s, 0) * cmath.exp((1.0 - s) * math.log(y))
    nu = s - 0.5
    sqy = math.sqrt(y)
    last = 0.0
    for n in range(1, n_max + 1):
        kv = _k_bessel_wide(nu, 2.0 * math.pi * n * y)
        term = tau_cusp(cusp, s, n) * sqy * kv * 2.0 * math.cos(2.0 * math.pi * n * x)
        val += term
        last = abs(term)
    # K decay gives a geometric tail bound
    ratio = math.exp(-2.0 * math.pi * y)
    bound = (last + 1e-280) * ratio / (1.0 - ratio) + 1e-13 * abs(val)
    return ValueWithTail(val, bound)


def raised_eisenstein_fourier(r: float, k: int, N: int, z: UpperHalfPoint,
                              n_max: int | None = None) -> complex:
    """The weight-raised level-N Eisenstein series at spectral point 1/2+ir,
    from its Fourier expansion with Whittaker terms.  At r = 0 the two
    scattering terms are combined analytically (each has a completed-zeta
    pole; the sum is finite)."""
    if k < 2 or k % 2:
        raise DomainError("k must be a positive even integer")
    if not ar.is_squarefree(N):
        raise DomainError("level must be squarefree")
    x, y = z.x, z.y
    if y < 0.3:
        raise DomainError("raised expansion requires y >= 0.3")
    if n_max is None:
        n_max = int(math.ceil(10.0 / y)) + 5
    sgn_k = (-1.0) ** (k // 2)
    ps = ar.prime_factors(N)

    if abs(r) < 1e-12:
        g0 = 1.0
        for p in ps:
            g0 *= (1.0 - 1.0 / p)
        g0 *= math.exp(log_gamma((1.0 + k) / 2.0).real - log_gamma(0.5).real)
        bracket = (math.log(y) + math.log(N)
                   + sum(math.log(p) / (p - 1.0) for p in ps)
                   + digamma((k + 1) / 2.0).real - digamma(0.5).real
                   + EULER_GAMMA - math.log(4.0 * math.pi))
        const = sgn_k * math.sqrt(y) * g0 * bracket
    else:
        prod1 = 1.0 + 0.0j
        for p in ps:
            prod1 *= (1.0 - p ** (-1.0 - 2j * r))
        g_plus = cmath.exp(log_gamma(1j * r + (1.0 + k) / 2.0) - log_gamma(1j * r + 0.5))
        g_minus = cmath.exp(log_gamma(-1j * r + (1.0 + k) / 2.0) - log_gamma(-1j * r + 0.5))
        term1 = zeta_star(1.0 + 2j * r) * prod1 * g_plus * cmath.exp((0.5 + 1j * r) * math.log(y))
        term2 = zeta_star(1.0 - 2j * r) * (ar.euler_phi(N) / N ** (1.0 + 2j * r)) \
            * g_minus * cmath.exp((0.5 - 1j * r) * math.log(y))
        const = sgn_k * (term1 + term2)

    neg_ratio = cmath.exp(log_gamma(1j * r + (k + 1) / 2.0)
                          - log_gamma(1j * r + (1 - k) / 2.0))
    val = complex(const)
    for n in range(1, n_max + 1):
        coef = ar.sigma_N_limit(r, n, N) * n ** (1j * r) / math.sqrt(n)
        wp = whittaker_w(k // 2, 1j * r, 4.0 * math.pi * n * y)
        wm = whittaker_w(-(k // 2), 1j * r, 4.0 * math.pi * n * y)
        val += coef * (wp * cmath.exp(2j * math.pi * n * x)
                       + neg_ratio * wm * cmath.exp(-2j * math.pi * n * x))
    return val
