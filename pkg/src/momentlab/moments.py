"""Assembly of the two-sided first-moment identity and the second-moment
main terms, with itemized truncation budgets.

Both sides of the first-moment identity at spectral shift r:

  LHS:  sum_j h(t_j)/cosh(pi t_j) rho_j(m) ScriptL(1/2+ir, f x u_j)
        + sum_{a|N} (1/4pi) int h(t)/cosh(pi t) tau_{1/a}(1/2-it, m)
            2 (N/a)^(-1/2-it) L(1/2+ir, f x E_{1/a}(*,1/2+it))
            / (zeta*(1+2it) prod_{p|N} (1-p^(-1-2it))) dt

  RHS:  M(m; r) + E1(m; r) + E2(m; r)

with M the zeta-weighted h-integrals (a digamma form at r = 0), E1 a finite
double contour and E2 a double contour against the additive-shift series.
The spectral weight is h(t) = (e^{-((t-T)/T^a)^2} + e^{-((t+T)/T^a)^2})
(t^2 + 1/4)/(t^2 + R).
"""

from __future__ import annotations

import cmath
import json
import math
from dataclasses import dataclass, field

import numpy as np

from . import arithmetic as ar
from .arithmetic import CuspContext, HoloForm
from .errors import (CoverageError, DomainError, LimitInstabilityError,
                     PoleError)
from .lfunctions import (L_holomorphic_many, L_rankin_maass, SmoothingSpec,
                         rankin_selberg_unfolded)
from .maassdata import SpectralCatalog
from .specfun import (EULER_GAMMA, _log_gamma_arr, digamma, log_gamma, zeta,
                      zeta_array)

__all__ = [
    "TestFunctionH",
    "HFamily",
    "h_weight",
    "H_family",
    "main_term_first",
    "error_E1_first",
    "error_E2_first",
    "spectral_side_first",
    "first_moment_report",
    "MomentReport",
    "second_moment_main",
    "pa_correction",
]


# ---------------------------------------------------------------------------
# the spectral weight
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class TestFunctionH:
    """h(t) = (e^{-((t-T)/T^alpha)^2} + e^{-((t+T)/T^alpha)^2})
              (t^2+1/4)/(t^2+R): even, holomorphic on |Im t| < 1/2+eps
    (poles only at t = +-i sqrt(R)), vanishing at t = +-i/2."""

    T: float
    alpha: float
    R: float

    def __post_init__(self):
        if not (self.T >= 2.0):
            raise DomainError("T must be >= 2")
        if not (1.0 / 3.0 - 1e-12 <= self.alpha <= 1.0):
            raise DomainError("alpha must lie in [1/3, 1]")
        if not (1.0 <= self.R < self.T ** 2):
            raise DomainError("R must lie in [1, T^2)")

    @property
    def width(self) -> float:
        return self.T ** self.alpha

    def __call__(self, t):
        if isinstance(t, np.ndarray):
            w = self.width
            gauss = np.exp(-((t - self.T) / w) ** 2) + np.exp(-((t + self.T) / w) ** 2)
            return gauss * (t * t + 0.25) / (t * t + self.R)
        t = complex(t)
        if abs(t * t + self.R) < 1e-12:
            raise PoleError("weight pole at t = +-i sqrt(R)")
        w = self.width
        gauss = cmath.exp(-((t - self.T) / w) ** 2) + cmath.exp(-((t + self.T) / w) ** 2)
        val = gauss * (t * t + 0.25) / (t * t + self.R)
        if abs(t.imag) < 1e-14:
            return val.real
        return val

    def support_cut(self, pad: float = 8.0) -> float:
        return self.T + pad * self.width


def h_weight(t, params: TestFunctionH):
    return params(t)


# ---------------------------------------------------------------------------
# the H-integral family
# ---------------------------------------------------------------------------

def _h_nodes(params: TestFunctionH, per_unit: float = 10.0):
    cut = params.support_cut(8.0) + 4.0
    npan = max(40, int(math.ceil(cut * per_unit / 8.0)))
    xg, wg = np.polynomial.legendre.leggauss(8)
    edges = np.linspace(0.0, cut, npan + 1)
    mid = 0.5 * (edges[:-1] + edges[1:])[:, None]
    half = 0.5 * (edges[1:] - edges[:-1])[:, None]
    ts = (mid + half * xg[None, :]).ravel()
    ws = (half * wg[None, :]).ravel()
    return ts, ws


def _psi_sums(k: int, ts: np.ndarray, order: int):
    """psi^(order)(k/2+it) + psi^(order)(k/2-it) on real nodes (real)."""
    return np.array([2.0 * digamma(k / 2.0 + 1j * t, order).real for t in ts])


@dataclass
class HFamily:
    """Values of the spectral-weight integrals (all real for real weight
    parameters) plus the gamma-ratio generalizations as callables."""

    k: int
    params: TestFunctionH
    H1: float
    H2: float
    H3: float
    H4: float
    H10: float
    H0: float
    H01: float
    _nodes: tuple = field(repr=False, default=None)

    def h1pm(self, y_shift: complex, nu1: complex) -> complex:
        """(1/pi^2) int h t tanh(pi t)
           G(k/2+y+it) G(k/2+y-it) / (G(k/2+nu1+it) G(k/2+nu1-it)) dt."""
        ts, base = self._nodes
        lg = (_log_gamma_arr(self.k / 2.0 + y_shift + 1j * ts)
              + _log_gamma_arr(self.k / 2.0 + y_shift - 1j * ts)
              - _log_gamma_arr(self.k / 2.0 + nu1 + 1j * ts)
              - _log_gamma_arr(self.k / 2.0 + nu1 - 1j * ts))
        return complex(np.sum(base * np.exp(lg)))

    def h1pm_dy(self, y_shift: complex, nu1: complex) -> complex:
        """d/dy of h1pm (differentiating the gamma ratio under the
        integral)."""
        ts, base = self._nodes
        lg = (_log_gamma_arr(self.k / 2.0 + y_shift + 1j * ts)
              + _log_gamma_arr(self.k / 2.0 + y_shift - 1j * ts)
              - _log_gamma_arr(self.k / 2.0 + nu1 + 1j * ts)
              - _log_gamma_arr(self.k / 2.0 + nu1 - 1j * ts))
        psi_sum = np.array([digamma(self.k / 2.0 + y_shift + 1j * t)
                            + digamma(self.k / 2.0 + y_shift - 1j * t) for t in ts])
        return complex(np.sum(base * np.exp(lg) * psi_sum))

    def H1plus(self, nu: complex) -> complex:
        return self.h1pm(nu, nu)

    def H1minus(self, nu: complex) -> complex:
        return self.h1pm(-nu, nu)


def H_family(k: int, params: TestFunctionH) -> HFamily:
    ts, ws = _h_nodes(params)
    hv = params(ts)
    base = 2.0 * ws * hv * ts * np.tanh(math.pi * ts) / (math.pi ** 2)
    S = _psi_sums(k, ts, 0)
    P = _psi_sums(k, ts, 1)
    Q = _psi_sums(k, ts, 2)
    return HFamily(
        k=k, params=params,
        H1=float(np.sum(base)),
        H2=float(np.sum(base * S)),
        H3=float(np.sum(base * S * S)),
        H4=float(np.sum(base * S ** 3)),
        H10=float(np.sum(base * S * P)),
        H0=float(np.sum(base * P)),
        H01=float(np.sum(base * Q)),
        _nodes=(ts, base),
    )


# ---------------------------------------------------------------------------
# the main term
# ---------------------------------------------------------------------------

def main_term_first(f: HoloForm, m: int, r: float, params: TestFunctionH,
                    hfam: HFamily | None = None) -> complex:
    """M(m; r): at r = 0 the digamma form

      a(m)/m^{k/2} [ H2 + (-2 log 2pi - sum_{p|N} log p/(p-1) - log m
                     + 2 gamma_0) H1 ],

    for r != 0 the two zeta-weighted h-integrals with the gamma-ratio
    twist."""
    if m < 1:
        raise DomainError("m must be >= 1")
    k, N = f.weight, f.level
    if hfam is None:
        hfam = H_family(k, params)
    am = float(f.a(m))
    if abs(r) < 1e-13:
        const = (-2.0 * math.log(2.0 * math.pi)
                 - sum(math.log(p) / (p - 1.0) for p in ar.prime_factors(N))
                 - math.log(m) + 2.0 * EULER_GAMMA)
        return am / m ** (k / 2.0) * (hfam.H2 + const * hfam.H1)
    zr = zeta(1.0 + 2j * r)
    t1 = zr * am * cmath.exp(-(k / 2.0 + 1j * r) * math.log(m)) * hfam.H1
    prod = 1.0 + 0.0j
    for p in ar.prime_factors(N):
        prod *= (1.0 - p ** (-1.0 - 2j * r))
    t2 = ((2.0 * math.pi) ** (4j * r) * ar.euler_phi(N) * zeta(1.0 - 2j * r)
          / (N ** (1.0 + 2j * r) * prod)
          * am * cmath.exp(-(k / 2.0 - 1j * r) * math.log(m))
          * hfam.h1pm(-1j * r, 1j * r))
    return t1 + t2


# ---------------------------------------------------------------------------
# contour error terms
# ---------------------------------------------------------------------------

def _u_line_nodes(params: TestFunctionH, sigma_u: float, symmetric: bool,
                  per_unit: float = 8.0):
    cut = params.support_cut(7.0) + 6.0
    lo = 0.0 if symmetric else -cut
    npan = max(30, int(math.ceil((cut - lo) * per_unit / 8.0)))
    xg, wg = np.polynomial.legendre.leggauss(8)
    edges = np.linspace(lo, cut, npan + 1)
    mid = 0.5 * (edges[:-1] + edges[1:])[:, None]
    half = 0.5 * (edges[1:] - edges[:-1])[:, None]
    g = (mid + half * xg[None, :]).ravel()
    w = (half * wg[None, :]).ravel()
    return sigma_u + 1j * g, w


def _w_line_nodes(sigma_w: float, w_cut: float, per_unit: float = 8.0):
    npan = max(16, int(math.ceil(2.0 * w_cut * per_unit / 8.0)))
    xg, wg = np.polynomial.legendre.leggauss(8)
    edges = np.linspace(-w_cut, w_cut, npan + 1)
    mid = 0.5 * (edges[:-1] + edges[1:])[:, None]
    half = 0.5 * (edges[1:] - edges[:-1])[:, None]
    g = (mid + half * xg[None, :]).ravel()
    w = (half * wg[None, :]).ravel()
    return sigma_w + 1j * g, w


def _sigma_shift_coeffs(r: float, n_values: np.ndarray, N: int) -> np.ndarray:
    """sigma^N_{-2ir}(n) n^{ir} for an integer array, sieve-factorized."""
    out = np.empty(len(n_values), dtype=complex)
    for i, n in enumerate(n_values):
        out[i] = ar.sigma_N_limit(r, int(n), N) * (int(n)) ** (1j * r)
    return out


def error_E1_first(f: HoloForm, m: int, r: float, params: TestFunctionH,
                   per_unit_u: float = 8.0, w_cut: float = 18.0) -> complex:
    """E1(m; r): the finite-sum double contour (zero for m = 1);
    u on Re u = 0.6, w on Re w = 1/2 - k/2 - 1/4."""
    if m < 1:
        raise DomainError("m must be >= 1")
    if m == 1:
        return 0.0 + 0.0j
    k, N = f.weight, f.level
    symmetric = abs(r) < 1e-13
    uu, wu = _u_line_nodes(params, 0.6, symmetric, per_unit_u)
    ww, wwt = _w_line_nodes(0.5 - k / 2.0 - 0.25, w_cut)
    hvals = np.array([complex(params(ui / 1j)) for ui in uu])
    outer = hvals * uu * np.tan(math.pi * uu) * np.exp(
        -_log_gamma_arr(k / 2.0 + 1j * r + uu) - _log_gamma_arr(k / 2.0 + 1j * r - uu))
    ns = np.arange(1, m)
    coeffs = np.array([float(f.a(m - n)) for n in ns]) * _sigma_shift_coeffs(r, ns, N)
    svals = np.array([np.sum(coeffs * np.exp(-(wj + k / 2.0) * np.log(ns)))
                      for wj in ww])
    inner_mat = (_log_gamma_arr(-ww[None, :] + uu[:, None])
                 + _log_gamma_arr(-ww[None, :] - uu[:, None])
                 + _log_gamma_arr(ww + k / 2.0 - 1j * r)[None, :]
                 + _log_gamma_arr(ww + k / 2.0 + 1j * r)[None, :])
    inner = np.exp(inner_mat + ww[None, :] * math.log(m)) @ (wwt * svals) / (2.0 * math.pi)
    total = np.sum(outer * inner * wu) / (2.0 * math.pi)
    if symmetric:
        total = 2.0 * total.real
    prod = 1.0 + 0.0j
    for p in ar.prime_factors(N):
        prod *= (1.0 - p ** (-1.0 - 2j * r))
    pref = -4.0 * (2.0 * math.pi) ** (2j * r) * cmath.cos(math.pi * 1j * r) \
        / (math.pi * prod)
    return pref * complex(total)


def error_E2_first(f: HoloForm, m: int, r: float, params: TestFunctionH,
                   n_cutoff: int = 60000, per_unit_u: float = 8.0,
                   j_max: int = 100):
    """E2(m; r): double contour against the additive-shift series, split as
    n <= m (direct w-quadrature on Re w = 3/4) plus n > m (the residue
    series from closing the w-line rightward).  Returns (value,
    series_tail_bound)."""
    if m < 1:
        raise DomainError("m must be >= 1")
    k, N = f.weight, f.level
    A, B = k / 2.0 + 1j * r, k / 2.0 - 1j * r
    symmetric = abs(r) < 1e-13
    uu, wu = _u_line_nodes(params, 0.6, symmetric, per_unit_u)
    hvals = np.array([complex(params(ui / 1j)) for ui in uu])
    outer = hvals * uu * np.exp(
        _log_gamma_arr(0.5 + uu) + _log_gamma_arr(0.5 - uu)
        - _log_gamma_arr(A + uu) - _log_gamma_arr(A - uu))
    n_cutoff = min(n_cutoff, f.n_max - m)
    ns_all = np.arange(1, n_cutoff + 1)
    coeffs = f.a_array[m:m + n_cutoff] * _sigma_shift_coeffs_fast(r, n_cutoff, N)

    J_inner = np.zeros(len(uu), dtype=complex)
    # small n <= m by w-quadrature
    if m >= 1:
        w_cut = params.support_cut(7.0) + 16.0
        ww, wwt = _w_line_nodes(0.75, w_cut, per_unit=6.0)
        lg_w = (_log_gamma_arr(ww + A) + _log_gamma_arr(ww + B))[None, :]
        small = np.arange(1, m + 1)
        s_small = np.zeros(len(ww), dtype=complex)
        for n in small:
            s_small += coeffs[n - 1] * np.exp((np.log(m / n)) * ww
                                              - (k / 2.0) * math.log(n))
        chunk = 128
        for lo in range(0, len(uu), chunk):
            ui = uu[lo:lo + chunk]
            mat = (_log_gamma_arr(-ww[None, :] + ui[:, None])
                   - _log_gamma_arr(1.0 + ww[None, :] + ui[:, None]) + lg_w)
            J_inner[lo:lo + chunk] += np.exp(mat) @ (wwt * s_small) / (2.0 * math.pi)
    # large n > m by the residue series in j
    ns_big = ns_all[m:]
    cb = coeffs[m:]
    lo_mask = ns_big <= 64
    tail_terms = np.zeros(len(uu), dtype=complex)
    logm = math.log(m)
    ln_big = np.log(ns_big.astype(float))
    chunk = 96
    for lo in range(0, len(uu), chunk):
        ui = uu[lo:lo + chunk]
        vbase = cb[None, :] * np.exp(-(ui[:, None] + k / 2.0) * ln_big[None, :])
        inv_n = 1.0 / ns_big.astype(float)
        acc = np.zeros((len(ui),), dtype=complex)
        powj = np.ones((len(ui), len(ns_big)))
        for j in range(j_max):
            Dj = (vbase * powj).sum(axis=1) if j <= 10 else \
                (vbase[:, lo_mask] * powj[:, lo_mask]).sum(axis=1)
            cj = np.exp(_log_gamma_arr(ui + j + A) + _log_gamma_arr(ui + j + B)
                        - _log_gamma_arr(1.0 + 2.0 * ui + j)
                        + (ui + j) * logm)
            sgn = -1.0 if j % 2 else 1.0
            acc += sgn / math.factorial(min(j, 170)) * cj * Dj if j < 170 else 0.0
            if j <= 10:
                powj = powj * inv_n[None, :]
            else:
                powj[:, lo_mask] = powj[:, lo_mask] * inv_n[None, lo_mask]
            if j > 8 and np.max(np.abs(cj * Dj)) < 1e-18 * max(np.max(np.abs(acc)), 1e-280):
                break
        tail_terms[lo:lo + chunk] = acc
    J_inner += tail_terms
    total = np.sum(outer * J_inner * wu) / (2.0 * math.pi)
    if symmetric:
        total = 2.0 * total.real
    prod = 1.0 + 0.0j
    for p in ar.prime_factors(N):
        prod *= (1.0 - p ** (-1.0 - 2j * r))
    ik = (1j) ** k
    pref = 4.0 * ik * (2.0 * math.pi) ** (2j * r) / (math.pi * prod)
    value = pref * complex(total)
    return value, _e2_tail_probe(outer, wu, cb, ns_big, uu, k, m, A, B, pref,
                                 symmetric)


def _e2_tail_probe(outer, wu, cb, ns_big, uu, k, m, A, B, pref, symmetric):
    """Tail estimate for the additive-shift series: the j = 0 layer carries
    the slow decay, so measure its signed change under halving the cutoff
    and extrapolate the geometric remainder."""
    half = len(ns_big) // 2
    if half < 16:
        return 0.0
    ln_big = np.log(ns_big.astype(float))
    contrib = np.zeros(len(uu), dtype=complex)
    logm = math.log(m)
    for lo in range(0, len(uu), 96):
        ui = uu[lo:lo + 96]
        v = cb[None, half:] * np.exp(-(ui[:, None] + k / 2.0) * ln_big[None, half:])
        cj = np.exp(_log_gamma_arr(ui + A) + _log_gamma_arr(ui + B)
                    - _log_gamma_arr(1.0 + 2.0 * ui) + ui * logm)
        contrib[lo:lo + 96] = v.sum(axis=1) * cj
    diff = np.sum(outer * contrib * wu) / (2.0 * math.pi)
    if symmetric:
        diff = 2.0 * diff.real
    # decay exponent ~0.1 per doubling: remainder <= diff / (1 - 2^-0.1)
    return abs(pref) * abs(complex(diff)) * (1.0 / (1.0 - 2.0 ** -0.1)) * 3.0


def _sigma_shift_coeffs_fast(r: float, n_max: int, N: int) -> np.ndarray:
    """Vectorized sigma^N_{-2ir}(n) n^{ir} for n = 1..n_max via a smallest-
    prime-factor sieve."""
    spf = np.zeros(n_max + 1, dtype=np.int64)
    for p in range(2, n_max + 1):
        if spf[p] == 0:
            spf[p::p] = np.where(spf[p::p] == 0, p, spf[p::p])
    x = -2j * r
    # multiplicative build over the smallest-prime factorization
    val = np.ones(n_max + 1, dtype=complex)
    for n in range(2, n_max + 1):
        p = int(spf[n])
        nn = n
        alpha = 0
        while nn % p == 0:
            nn //= p
            alpha += 1
        if N % p == 0:
            loc = ar._sigma_level_factor(p, alpha, r)
        else:
            if abs(r) < 1e-300:
                loc = alpha + 1.0
            else:
                loc = (1.0 - p ** (x * (alpha + 1))) / (1.0 - p ** x)
        val[n] = val[nn] * loc
    ns = np.arange(0, n_max + 1, dtype=float)
    ns[0] = 1.0
    return (val * np.exp(1j * r * np.log(ns)))[1:]


# ---------------------------------------------------------------------------
# spectral side
# ---------------------------------------------------------------------------

def spectral_side_first(f: HoloForm, m: int, r: float, params: TestFunctionH,
                        catalog: SpectralCatalog,
                        spec: SmoothingSpec = SmoothingSpec(),
                        per_unit_t: float = 8.0):
    """(discrete, continuous, budgets): the spectral expansion of the
    first-moment identity's left-hand side.

    The discrete sum runs over the catalog; the Gaussian tail beyond
    catalog.t_max is estimated from the last forms' term scale and the
    eigenvalue density, and surfaced in the budgets.  CoverageError when
    the catalog does not even reach T + 2 width."""
    N = f.level
    if catalog.level != N:
        raise CoverageError("catalog level does not match the form")
    if catalog.t_max < params.T + 2.0 * params.width:
        raise CoverageError(
            f"catalog t_max {catalog.t_max} < T + 2 T^alpha = "
            f"{params.T + 2 * params.width:.1f}")
    s_center = 0.5 + 1j * r
    discrete = 0.0 + 0.0j
    ratios = []
    for form in catalog.forms:
        hval = params(form.t)
        weight = hval / math.cosh(min(math.pi * form.t, 700.0))
        if abs(weight) * form.rho1 ** 2 < 1e-18:
            continue
        lval = L_rankin_maass(f, form, s_center, spec)
        term = weight * form.rho1 * form.lambda_n(m) * lval
        discrete += term
        if form.t > catalog.t_max - 6.0:
            ratios.append(abs(term) / max(hval, 1e-300))
    tail_scale = float(np.mean(ratios)) if ratios else 0.0
    tcut = params.support_cut(8.0)
    tt = np.linspace(catalog.t_max, max(tcut, catalog.t_max + 1.0), 400)
    from .maassdata import _p1_size
    dens = tt * _p1_size(N) / 6.0
    htail = params(tt)
    catalog_tail = tail_scale * float(np.trapezoid(htail * dens, tt)) if hasattr(np, 'trapezoid') else tail_scale * float(np.trapz(htail * dens, tt))

    continuous = 0.0 + 0.0j
    cont_budget = 0.0
    for a in ar.divisors(N):
        val, budget = _continuous_cusp_term(f, CuspContext(a, N), m, r, params,
                                            spec, per_unit_t)
        continuous += val
        cont_budget += budget
    budgets = {
        "catalog_tail": catalog_tail,
        "continuous_window": cont_budget,
    }
    return discrete, continuous, budgets


def _continuous_cusp_term(f: HoloForm, cusp: CuspContext, m: int, r: float,
                          params: TestFunctionH, spec: SmoothingSpec,
                          per_unit_t: float):
    from .eisenstein import tau_cusp
    N, k = f.level, f.weight
    a = cusp.a
    cut = params.support_cut(7.5)
    npan = max(30, int(math.ceil(cut * per_unit_t / 8.0)))
    xg, wg = np.polynomial.legendre.leggauss(8)
    edges = np.linspace(0.0, cut, npan + 1)
    mid = 0.5 * (edges[:-1] + edges[1:])[:, None]
    half = 0.5 * (edges[1:] - edges[:-1])[:, None]
    ts = (mid + half * xg[None, :]).ravel()
    tw = (half * wg[None, :]).ravel()

    # tau_{1/a}(1/2-it, m) vectorized through its closed form
    s_nodes = 0.5 - 1j * ts
    sig = np.array([ar.sigma_cusp_complex_safe(cusp, 1.0 - 2.0 * s, m)
                    for s in s_nodes])
    zs2 = zeta_array(1.0 - 2j * ts)
    lg_half = _log_gamma_arr(0.5 * (1.0 - 2j * ts))
    zstar = np.exp(-0.5 * (1.0 - 2j * ts) * math.log(math.pi) + lg_half) * zs2
    denom_tau = zstar.copy()
    denom_L = np.exp(-0.5 * (1.0 + 2j * ts) * math.log(math.pi)
                     + _log_gamma_arr(0.5 * (1.0 + 2j * ts))) * zeta_array(1.0 + 2j * ts)
    for p in ar.prime_factors(N):
        denom_tau *= (1.0 - p ** (-1.0 + 2j * ts))
        denom_L *= (1.0 - p ** (-1.0 - 2j * ts))
    tau_vals = (N / a) ** (-(0.5 - 1j * ts)) * 2.0 * sig \
        * np.exp(-1j * ts * math.log(m)) / denom_tau

    # L(1/2+ir, f x E_{1/a}(*,1/2+it)) via the newform factorization
    corr = np.ones(len(ts), dtype=complex)
    for p in ar.prime_factors(a):
        corr *= (f.A(p) * p ** (-1j * ts - (0.5 + 1j * r)) - p ** (-2j * ts - 1.0))
    for p in ar.prime_factors(N // a):
        corr *= (1.0 - f.A(p) * p ** (-1j * ts - (0.5 + 1j * r)))
    if abs(r) < 1e-13:
        Lplus = L_holomorphic_many(f, 0.5 + 1j * ts, spec)
        Lfact = Lplus * np.conj(Lplus)
    else:
        Lplus = L_holomorphic_many(f, 0.5 + 1j * (r + ts), spec)
        Lminus = L_holomorphic_many(f, 0.5 + 1j * (r - ts), spec)
        Lfact = Lplus * Lminus
    integrand = params(ts) / np.cosh(np.minimum(math.pi * ts, 700.0)) \
        * tau_vals * 2.0 * (N / a) ** (-0.5 - 1j * ts) * corr * Lfact / denom_L
    # the integrand at -t is the conjugate (real parameters), so the full
    # line integral is 2 Re of the half-line one
    val = complex(np.sum(integrand * tw))
    total = 2.0 * val.real / (4.0 * math.pi) if abs(r) < 1e-13 else \
        _full_line_continuous(f, cusp, m, r, params, spec, per_unit_t)
    tail = abs(integrand[-1]) * 2.0
    return (complex(total), tail)


def _full_line_continuous(f, cusp, m, r, params, spec, per_unit_t):
    """General-r continuous term over the full t-line (no symmetry)."""
    from .eisenstein import tau_cusp
    N = f.level
    a = cusp.a
    cut = params.support_cut(7.5)
    npan = max(60, int(math.ceil(2 * cut * per_unit_t / 8.0)))
    xg, wg = np.polynomial.legendre.leggauss(8)
    edges = np.linspace(-cut, cut, npan + 1)
    mid = 0.5 * (edges[:-1] + edges[1:])[:, None]
    half = 0.5 * (edges[1:] - edges[:-1])[:, None]
    ts = (mid + half * xg[None, :]).ravel()
    tw = (half * wg[None, :]).ravel()
    s_nodes = 0.5 - 1j * ts
    sig = np.array([ar.sigma_cusp_complex_safe(cusp, 1.0 - 2.0 * s, m)
                    for s in s_nodes])
    zstar = np.exp(-0.5 * (1.0 - 2j * ts) * math.log(math.pi)
                   + _log_gamma_arr(0.5 * (1.0 - 2j * ts))) * zeta_array(1.0 - 2j * ts)
    denom_L = np.exp(-0.5 * (1.0 + 2j * ts) * math.log(math.pi)
                     + _log_gamma_arr(0.5 * (1.0 + 2j * ts))) * zeta_array(1.0 + 2j * ts)
    denom_tau = zstar.copy()
    for p in ar.prime_factors(N):
        denom_tau *= (1.0 - p ** (-1.0 + 2j * ts))
        denom_L *= (1.0 - p ** (-1.0 - 2j * ts))
    tau_vals = (N / a) ** (-(0.5 - 1j * ts)) * 2.0 * sig \
        * np.exp(-1j * ts * math.log(m)) / denom_tau
    corr = np.ones(len(ts), dtype=complex)
    for p in ar.prime_factors(a):
        corr *= (f.A(p) * p ** (-1j * ts - (0.5 + 1j * r)) - p ** (-2j * ts - 1.0))
    for p in ar.prime_factors(N // a):
        corr *= (1.0 - f.A(p) * p ** (-1j * ts - (0.5 + 1j * r)))
    Lplus = L_holomorphic_many(f, 0.5 + 1j * (r + ts), spec)
    Lminus = L_holomorphic_many(f, 0.5 + 1j * (r - ts), spec)
    integrand = params(ts) / np.cosh(np.minimum(math.pi * np.abs(ts), 700.0)) \
        * tau_vals * 2.0 * (N / a) ** (-0.5 - 1j * ts) * corr * Lplus * Lminus / denom_L
    return complex(np.sum(integrand * tw)) / (4.0 * math.pi)


# ---------------------------------------------------------------------------
# the report
# ---------------------------------------------------------------------------

@dataclass
class MomentReport:
    spectral_discrete: complex
    spectral_continuous: complex
    main: complex
    e1: complex
    e2: complex
    truncation_budget: float
    discrepancy: float
    relative_discrepancy: float
    budgets: dict
    params: dict
    catalog_provenance: str

    @property
    def lhs(self) -> complex:
        return self.spectral_discrete + self.spectral_continuous

    @property
    def rhs(self) -> complex:
        return self.main + self.e1 + self.e2

    def to_dict(self) -> dict:
        def enc(z):
            z = complex(z)
            return [z.real, z.imag]
        return {
            "spectral_discrete": enc(self.spectral_discrete),
            "spectral_continuous": enc(self.spectral_continuous),
            "main": enc(self.main),
            "e1": enc(self.e1),
            "e2": enc(self.e2),
            "truncation_budget": self.truncation_budget,
            "discrepancy": self.discrepancy,
            "relative_discrepancy": self.relative_discrepancy,
            "budgets": self.budgets,
            "params": self.params,
            "catalog_provenance": self.catalog_provenance,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)


def first_moment_report(f: HoloForm, m: int, r: float, params: TestFunctionH,
                        catalog: SpectralCatalog,
                        spec: SmoothingSpec = SmoothingSpec(),
                        tighten: float = 1.0) -> MomentReport:
    """Populate both sides of the first-moment identity and their
    discrepancy.  `tighten` scales every truncation knob (2.0 doubles the
    resolutions and cutoffs)."""
    hfam = H_family(f.weight, params)
    per_u = 8.0 * tighten
    disc, cont, budgets = spectral_side_first(f, m, r, params, catalog, spec,
                                              per_unit_t=8.0 * tighten)
    main = main_term_first(f, m, r, params, hfam)
    e1 = error_E1_first(f, m, r, params, per_unit_u=per_u,
                        w_cut=18.0 * math.sqrt(tighten))
    e2, e2_tail = error_E2_first(f, m, r, params,
                                 n_cutoff=int(60000 * tighten), per_unit_u=per_u)
    lhs = disc + cont
    rhs = main + e1 + e2
    budgets = dict(budgets)
    budgets["e2_series_tail"] = e2_tail
    total_budget = float(sum(abs(v) for v in budgets.values()))
    disc_abs = abs(lhs - rhs)
    rel = disc_abs / max(abs(lhs), abs(rhs), 1e-300)
    return MomentReport(
        spectral_discrete=disc, spectral_continuous=cont, main=main,
        e1=e1, e2=e2, truncation_budget=total_budget, discrepancy=disc_abs,
        relative_discrepancy=rel, budgets=budgets,
        params={"T": params.T, "alpha": params.alpha, "R": params.R,
                "m": m, "r": r, "level": f.level, "weight": f.weight,
                "tighten": tighten},
        catalog_provenance=catalog.provenance,
    )


# ---------------------------------------------------------------------------
# second-moment main term
# ---------------------------------------------------------------------------

def _pa_local_factor(p: int, divides_a: bool, X: complex, x1: complex,
                     x2: complex) -> complex:
    """Per-prime factor of the cusp correction polynomial: the local shifted
    divisor sum times the four generic Euler factors over (1 - p^(x1+x2)
    X^2), with all pole-zero cancellations done in closed form."""
    q1 = p ** x1
    q2 = p ** x2
    q12 = p ** (x1 + x2)
    if divides_a:
        C = p ** (x1 + x2 - 2.0) / ((1.0 - q1) * (1.0 - q2))
        t1 = (p - 1.0) ** 2 * (1.0 - q1 * X) * (1.0 - q2 * X) * (1.0 - q12 * X)
        t2 = -(p - 1.0) * p * (1.0 - q2 / p) * (1.0 - X) * (1.0 - q1 * X) * (1.0 - q12 * X)
        t3 = -(p - 1.0) * p * (1.0 - q1 / p) * (1.0 - X) * (1.0 - q2 * X) * (1.0 - q12 * X)
        t4 = p * p * (1.0 - q1 / p) * (1.0 - q2 / p) * (1.0 - X) * (1.0 - q1 * X) * (1.0 - q2 * X)
        return C * (t1 + t2 + t3 + t4) / (1.0 - q12 * X * X)
    C = p ** (x2 - 1.0) / (1.0 - q2)
    t = (p - 1.0) * (1.0 - q2 * X) - p * (1.0 - q2 / p) * (1.0 - X)
    return C * t * (1.0 - q1 * X) * (1.0 - q12 * X) / (1.0 - q12 * X * X)


def pa_correction(cusp: CuspContext, s: complex, it_val: complex,
                  ir1_val: complex) -> complex:
    """P_a(s; it, ir1): the finite Euler correction relating the
    Eisenstein x raised-Eisenstein convolution to its four zeta factors.
    Equals 2 for level 1."""
    a, N = cusp.a, cusp.N
    x1 = 2.0 * it_val
    x2 = -2.0 * ir1_val
    out = 2.0 * (N / a) ** (-0.5 + it_val)
    for p in ar.prime_factors(N):
        X = p ** (-(s + it_val - ir1_val))
        loc = _pa_local_factor(p, a % p == 0, X, x1, x2)
        out *= loc / ((-(p ** (x2 - 1.0))) * (1.0 - p ** (-1.0 + 2.0 * it_val)))
    return out


def _second_moment_at(f: HoloForm, g: HoloForm, s: complex, r1: float,
                      hfam: HFamily, rs_cache: dict) -> complex:
    """The assembled second-moment main expression at generic (s, r1)."""
    N, k = f.level, f.weight

    def LRS(arg: complex) -> complex:
        key = (round(arg.real, 10), round(arg.imag, 10))
        if key not in rs_cache:
            rs_cache[key] = rankin_selberg_unfolded(f, g, arg)
        return rs_cache[key]

    ir1 = 1j * r1
    prod_r1 = 1.0 + 0.0j
    for p in ar.prime_factors(N):
        prod_r1 *= (1.0 - p ** (-1.0 - 2.0 * ir1))

    def absum(it_val):
        tot = 0.0 + 0.0j
        for a in ar.divisors(N):
            Na = N // a
            tot += Na * f.A(Na) * g.A(Na) \
                * pa_correction(CuspContext(a, N), s, it_val, ir1)
        return tot

    two_pi = 2.0 * math.pi
    T1 = (2.0 ** (-2.0 * ir1) * math.pi ** (-0.5) * cmath.exp(-2.0 * ir1 * math.log(math.pi))
          / 2.0 * prod_r1 * zeta(2.0 * s) * zeta(1.0 + 2.0 * ir1)
          / zeta(2.0 * s + 2.0 * ir1 + 1.0) * LRS(s + 0.5 + ir1)
          * hfam.h1pm(ir1, ir1))
    T3 = (2.0 ** (2.0 * ir1) * math.pi ** (-0.5) * cmath.exp(2.0 * ir1 * math.log(math.pi))
          / 2.0 * (ar.euler_phi(N) / N ** (1.0 + 2.0 * ir1))
          * zeta(2.0 * s) * zeta(1.0 - 2.0 * ir1) / zeta(2.0 * s - 2.0 * ir1 + 1.0)
          * LRS(s + 0.5 - ir1) * hfam.h1pm(-ir1, ir1))
    cosf = cmath.cos(math.pi * ir1)
    T2 = (2.0 ** (2.0 * ir1) * math.pi ** (-0.5) * cmath.exp(2.0 * ir1 * math.log(math.pi))
          * cmath.exp((-2.0 + 4.0 * s) * math.log(two_pi)) / 8.0
          * (cosf - cmath.cos(math.pi * (2.0 * s + ir1)))
          / (cmath.sin(math.pi * s) * cmath.sin(math.pi * (s + ir1)))
          * zeta(1.0 - 2.0 * ir1) * zeta(2.0 - 2.0 * s) / zeta(3.0 - 2.0 * s - 2.0 * ir1)
          * absum(-s + 1.0 - ir1) * LRS(1.5 - s - ir1)
          * hfam.h1pm(1.0 - 2.0 * s - ir1, ir1))
    T4 = (2.0 ** (-2.0 * ir1) * math.pi ** (-0.5) * cmath.exp(-2.0 * ir1 * math.log(math.pi))
          * cmath.exp((-2.0 + 4.0 * s) * math.log(two_pi)) / 8.0
          * (cosf - cmath.cos(math.pi * (2.0 * s - ir1)))
          / (cmath.sin(math.pi * s) * cmath.sin(math.pi * (s - ir1)))
          * zeta(1.0 + 2.0 * ir1) * zeta(2.0 - 2.0 * s) / zeta(3.0 - 2.0 * s + 2.0 * ir1)
          * absum(-s + 1.0 + ir1) * LRS(1.5 - s + ir1)
          * hfam.h1pm(1.0 - 2.0 * s + ir1, ir1))
    return T1 + T2 + T3 + T4


def second_moment_main(f: HoloForm, g: HoloForm, r: float,
                       params: TestFunctionH,
                       deltas=(0.02, 0.01, 0.005),
                       r_values=(0.04, 0.02, 0.01),
                       stability_tol: float = 0.08) -> complex:
    """The second-moment main term at spectral shift r, normalized by the
    inverse of (4 pi)^(-1/2) (2 pi)^(-2ir) prod_{p|N}(1-p^(-1-2ir)):

    evaluated from the assembled main expression at s = 1/2 - i r + delta
    with Richardson extrapolation of the coincident-parameter limits, and a
    second extrapolation r' -> 0 when r = 0.  LimitInstabilityError when the
    extrapolation table is inconsistent."""
    if f.level != g.level or f.weight != g.weight:
        raise DomainError("f and g must share weight and level")
    hfam = H_family(f.weight, params)
    rs_cache: dict = {}

    def M_at_r(rv: float) -> complex:
        vals = []
        for d in deltas:
            s = 0.5 - 1j * rv + d
            vals.append(_second_moment_at(f, g, s, rv, hfam, rs_cache))
        ex = _richardson(deltas, vals)
        spread = abs(vals[-1] - ex)
        if spread > stability_tol * max(abs(ex), 1e-12):
            raise LimitInstabilityError(
                f"delta-limit unstable at r={rv}: extrap {ex}, last {vals[-1]}")
        pref = cmath.exp(0.5 * math.log(4.0 * math.pi)
                         + 2j * rv * math.log(2.0 * math.pi))
        for p in ar.prime_factors(f.level):
            pref /= (1.0 - p ** (-1.0 - 2j * rv))
        return pref * ex

    if abs(r) >= 1e-13:
        return M_at_r(r)
    vals = [M_at_r(rv) for rv in r_values]
    ex = _richardson(r_values, vals)
    spread = abs(vals[-1] - ex)
    if spread > stability_tol * max(abs(ex), 1e-12):
        raise LimitInstabilityError("r -> 0 limit unstable")
    return ex


def _richardson(xs, ys):
    xs = list(xs)
    ys = [complex(y) for y in ys]
    n = len(xs)
    for level in range(1, n):
        for i in range(n - level):
            ys[i] = ((0.0 - xs[i + level]) * ys[i] - (0.0 - xs[i]) * ys[i + 1]) \
                / (xs[i] - xs[i + level])
    return ys[0]
