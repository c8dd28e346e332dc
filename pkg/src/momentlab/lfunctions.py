"""Smoothed Dirichlet-series evaluation of the L-objects on both sides of
the moment identities, the shifted/double series in their convergent
regions, and the Rankin-Selberg unfolding integral.

Completed-function evaluations use a theta-split: for a degree-2 form of
level N the completed function

    Lambda(s) = (sqrt(N)/2pi)^(s+kappa) Gamma(s+kappa) L(s),
    kappa = (k-1)/2,

equals sum_n a(n) [G(s,n,y0) + omega G(1-s,n,1/(N y0))] with
G(s,n,c) = int_c^inf exp(-2 pi n y) (sqrt(N) y)^(s+kappa) dy/y and the
Fricke-reflection sign omega; the split point y0 is tied to the smoothing
length X so that X-robustness genuinely tests the reflection.  The degree-4
convolution with a Maass form uses the same split with the K-Bessel kernel

    int_0^inf 2 K_{2it}(4 pi sqrt(y)) y^(s+kappa) dy/y
        = (2 pi)^(-2(s+kappa)) Gamma(s+kappa+it) Gamma(s+kappa-it).
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass

import numpy as np

from . import arithmetic as ar
from .arithmetic import CuspContext, HoloForm
from .errors import ConvergenceError, CoverageError, DomainError, PoleError
from .maassdata import MaassForm
from .specfun import (KBesselImagOrder, _log_gamma_arr, log_gamma,
                      zeta, zeta_star)

__all__ = [
    "SmoothingSpec",
    "ShiftPair",
    "HoloPhi",
    "EisensteinPhi",
    "L_holomorphic",
    "L_holomorphic_many",
    "L_rankin_maass",
    "L_f_times_eisenstein",
    "shifted_series_D",
    "finite_series_Dfin",
    "gamma_prefactor_G",
    "double_series_M",
    "rankin_selberg_unfolded",
    "rankin_selberg_residue",
]


@dataclass(frozen=True)
class SmoothingSpec:
    """Gaussian-taper smoothing with cut X; reflection toggles the completed
    functional equation path."""

    X: float | None = None
    taper: str = "gaussian"
    reflection: bool = True

    def __post_init__(self):
        if self.X is not None and not self.X > 0:
            raise DomainError("X must be positive")
        if self.taper != "gaussian":
            raise DomainError("only the gaussian taper is implemented")

    def cut(self, s: complex, k: int, N: int) -> float:
        if self.X is not None:
            return self.X
        return self.default_cut(s, k, N)

    @staticmethod
    def default_cut(s: complex, k: int, N: int) -> float:
        im = abs(complex(s).imag)
        return 3.0 * math.sqrt((1.0 + im) * (1.0 + im + k) * N) / (2.0 * math.pi)


@dataclass(frozen=True)
class ShiftPair:
    s: complex
    w: complex
    k: int

    @property
    def s_prime(self) -> complex:
        return self.s + self.w + self.k / 2.0 - 1.0


# ---------------------------------------------------------------------------
# coefficient-bearing phi objects for the shifted series
# ---------------------------------------------------------------------------

class HoloPhi:
    """phi(z) = g(z) y^{k/2} for holomorphic g: conjugated coefficients
    cbar(n) = a_g(n) (4 pi n)^(-k/2) for n >= 1, zero for n <= -1;
    type parameter nu_bar = (k-1)/2; no constant terms."""

    def __init__(self, g: HoloForm):
        self.g = g
        self.k = g.weight
        self.nu_bar = (g.weight - 1) / 2.0
        self.cbar_plus = 0.0
        self.cbar_minus = 0.0

    def cbar(self, n: int) -> complex:
        if n <= -1:
            return 0.0
        return self.g.a(n) * (4.0 * math.pi * n) ** (-self.k / 2.0)

    def cbar_array(self, n_max: int) -> np.ndarray:
        ns = np.arange(1, n_max + 1, dtype=float)
        return self.g.a_array[:n_max] * ns ** ((self.g.weight - 1) / 2.0) \
            * (4.0 * math.pi * ns) ** (-self.k / 2.0)


class EisensteinPhi:
    """The raised level-N weight-k Eisenstein series as a shifted-series
    input, with nu_bar = i r and the conjugated coefficients

      cbar(n)  = sigma^N_{-2ir}(n) n^{ir} / sqrt(n),              n >= 1,
      cbar(-n) = G(ir+(k+1)/2)/G(ir+(1-k)/2) * cbar(n),           n >= 1,

    and conjugated constant-term coefficients matching the raised
    expansion."""

    def __init__(self, r: float, k: int, N: int):
        if k % 2 or k < 4:
            raise DomainError("k must be even and >= 4")
        self.r = float(r)
        self.k = k
        self.N = N
        self.nu_bar = 1j * self.r
        self._neg_ratio = cmath.exp(log_gamma(1j * r + (k + 1) / 2.0)
                                    - log_gamma(1j * r + (1 - k) / 2.0))
        sgn = (-1.0) ** (k // 2)
        if abs(r) < 1e-14:
            # the two scattering coefficients are individually singular at
            # r = 0; their combined constant-term limit lives in the raised
            # Eisenstein evaluator, and the shifted series never needs them
            self.cbar_plus = None
            self.cbar_minus = None
        else:
            prod1 = 1.0 + 0.0j
            for p in ar.prime_factors(N):
                prod1 *= (1.0 - p ** (-1.0 - 2j * r))
            self.cbar_plus = sgn * zeta_star(1.0 + 2j * r) * prod1 \
                * cmath.exp(log_gamma(1j * r + (1 + k) / 2.0) - log_gamma(1j * r + 0.5))
            self.cbar_minus = sgn * zeta_star(1.0 - 2j * r) \
                * (ar.euler_phi(N) / N ** (1.0 + 2j * r)) \
                * cmath.exp(log_gamma(-1j * r + (1 + k) / 2.0) - log_gamma(-1j * r + 0.5))

    def cbar(self, n: int) -> complex:
        if n == 0:
            raise DomainError("n must be nonzero")
        val = ar.sigma_N_limit(self.r, abs(n), self.N) \
            * abs(n) ** (1j * self.r) / math.sqrt(abs(n))
        if n < 0:
            val *= self._neg_ratio
        return val

    def cbar_array(self, n_max: int) -> np.ndarray:
        return np.array([self.cbar(n) for n in range(1, n_max + 1)])


# ---------------------------------------------------------------------------
# degree-2 completed evaluation
# ---------------------------------------------------------------------------

def _theta_grid(y_lo: float, y_hi: float, im_max: float):
    """Gauss-Legendre panels on [y_lo, y_hi], resolving y^{i Im s} and the
    exponential variation of the theta kernel."""
    npan = max(30, int(math.ceil((im_max + 40.0) * math.log(y_hi / y_lo) / 4.0)))
    xg, wg = np.polynomial.legendre.leggauss(12)
    edges = np.geomspace(y_lo, y_hi, npan + 1)
    mid = 0.5 * (edges[:-1] + edges[1:])[:, None]
    half = 0.5 * (edges[1:] - edges[:-1])[:, None]
    ys = (mid + half * xg[None, :]).ravel()
    ws = (half * wg[None, :]).ravel()
    return ys, ws


def _fricke_sign(f: HoloForm) -> float:
    """omega with F(1/(N y)) = omega (sqrt(N) y)^k F(y) for the newform f:
    (-1)^(k/2) mu(N) A(N) sqrt(N) for squarefree level."""
    N = f.level
    if N == 1:
        return (-1.0) ** (f.weight // 2)
    mu = (-1.0) ** len(ar.prime_factors(N))
    return (-1.0) ** (f.weight // 2) * mu * f.A(N) * math.sqrt(N)


def _L2_theta(f: HoloForm, s_arr: np.ndarray, X: float | None) -> np.ndarray:
    """Completed theta-split evaluation; reliable for |Im s| <= ~12 where the
    oscillatory cancellation stays within double precision."""
    N, k = f.level, f.weight
    kappa = (k - 1) / 2.0
    im_max = float(np.max(np.abs(s_arr.imag)))
    X0 = SmoothingSpec.default_cut(complex(0.5, im_max), k, N)
    Xv = X if X is not None else X0
    y0 = (X0 / Xv) ** 2 / math.sqrt(N)
    y0d = 1.0 / (N * y0)
    omega = _fricke_sign(f)
    y_lo = min(y0, y0d)
    n_cut = int(math.ceil((44.0 + 2.0 * kappa) / (2.0 * math.pi * y_lo))) + 4
    if n_cut > f.n_max:
        raise CoverageError(f"need coefficients to {n_cut} (have {f.n_max})")
    y_hi = y_lo + (46.0 + 4.0 * kappa) / (2.0 * math.pi)
    ys, ws = _theta_grid(y_lo, y_hi, im_max)
    ns = np.arange(1, n_cut + 1, dtype=float)
    an = f.a_array[:n_cut]
    Fy = np.exp(-2.0 * math.pi * np.outer(ys, ns)) @ an
    lysn = np.log(math.sqrt(N) * ys)
    out = np.empty(len(s_arr), dtype=complex)
    mask_main = ys >= y0
    mask_dual = ys >= y0d
    for i, s in enumerate(s_arr):
        wmain = np.where(mask_main, ws * np.exp((s + kappa) * lysn) / ys, 0.0)
        wdual = np.where(mask_dual, ws * np.exp((1.0 - s + kappa) * lysn) / ys, 0.0)
        lam = np.sum(Fy * (wmain + omega * wdual))
        out[i] = lam * cmath.exp(-(s + kappa) * math.log(math.sqrt(N) / (2.0 * math.pi))
                                 - log_gamma(s + kappa))
    return out


def _chi_log(s_plus_u: np.ndarray, kappa: float, N: int) -> np.ndarray:
    """log of gamma-factor ratio gamma(1-s)/gamma(s) at s_plus_u."""
    return ((1.0 - 2.0 * s_plus_u) * math.log(math.sqrt(N) / (2.0 * math.pi))
            + _log_gamma_arr(1.0 - s_plus_u + kappa) - _log_gamma_arr(s_plus_u + kappa))


def _L2_smoothed_afe(f: HoloForm, s: complex, X: float | None,
                     B: float = 4.0) -> complex:
    """Gaussian-smoothed approximate functional equation (stable at any
    height in double precision):

      L(s) = sum_n A(n) n^(-s) erfc(sqrt(B) log(n/X)) / 2
             - omega * sum_n A(n) n^(s-1) K_n,
      K_n  = (1/2 pi i) int_(sigma_n) chi(s+u) e^(u^2/(4B)) (X n)^u du/u,

    with chi = gamma(1-s)/gamma(s) assembled in log space and the dual line
    sigma_n near the Gaussian saddle -2B log(X n / ntilde^2)."""
    N, k = f.level, f.weight
    kappa = (k - 1) / 2.0
    ntilde = abs(s + kappa) * math.sqrt(N) / (2.0 * math.pi)
    Xv = X if X is not None else max(ntilde, 1.3)
    omega = _fricke_sign(f)
    spread = math.exp(math.sqrt(40.0 / B))
    n1 = int(Xv * spread) + 8
    n2 = int(max(Xv, ntilde ** 2 / Xv) * spread) + 8
    if max(n1, n2) > f.n_max:
        raise CoverageError(f"need coefficients to {max(n1, n2)} (have {f.n_max})")
    ns1 = np.arange(1, n1 + 1, dtype=float)
    wts = 0.5 * np.array([math.erfc(v) for v in math.sqrt(B) * np.log(ns1 / Xv)])
    principal = complex(np.sum(f.A_array[:n1] * np.exp(-s * np.log(ns1)) * wts))

    # dual sum over log-binned n; the line and v-range track the Gaussian
    # saddle of e^{u^2/4B} (X n)^u chi(s+u)
    xg, wg = np.polynomial.legendre.leggauss(10)
    dual = 0.0 + 0.0j
    n = 1
    while n <= n2:
        hi = min(max(int(n * 1.4), n + 4), n2)
        mid = math.sqrt(n * hi)
        sigma = -2.0 * B * math.log(Xv * mid / max(ntilde ** 2, 1e-6))
        sigma = min(max(sigma, -34.0), -0.45)
        v_half = math.sqrt(sigma * sigma + 4.0 * B * 44.0)
        npan = max(24, int(math.ceil(2.0 * v_half / 0.5)))
        edges = np.linspace(-v_half, v_half, npan + 1)
        vmid = 0.5 * (edges[:-1] + edges[1:])[:, None]
        vhalf = 0.5 * (edges[1:] - edges[:-1])[:, None]
        vv = (vmid + vhalf * xg[None, :]).ravel()
        vw = (vhalf * wg[None, :]).ravel()
        uu = sigma + 1j * vv
        base = _chi_log(s + uu, kappa, N) + uu * uu / (4.0 * B) - np.log(uu)
        nvals = np.arange(n, hi + 1, dtype=float)
        lxn = np.log(Xv * nvals)
        kern = np.exp(base[None, :] + np.outer(lxn, uu))
        Kn = (kern @ vw) / (2.0 * math.pi)
        dual += np.sum(f.A_array[n - 1:hi] * np.exp((s - 1.0) * np.log(nvals)) * Kn)
        n = hi + 1
    return principal - omega * dual


def L_holomorphic_many(f: HoloForm, s_values, spec: SmoothingSpec = SmoothingSpec()):
    """L(s, f) = sum A(n) n^(-s) (analytic normalization, center 1/2) for an
    array of s values.  Reflection on: completed-equation evaluation (theta
    split at small height, Gaussian-smoothed approximate functional equation
    above); reflection off: tapered direct sum (absolute convergence)."""
    s_arr = np.atleast_1d(np.asarray(s_values, dtype=complex))
    N, k = f.level, f.weight
    if not spec.reflection:
        out = np.empty(len(s_arr), dtype=complex)
        for i, s in enumerate(s_arr):
            X = spec.X if spec.X is not None else max(40.0, SmoothingSpec.default_cut(s, k, N))
            n_cut = int(3.2 * X) + 8
            if n_cut > f.n_max:
                raise CoverageError(f"need coefficients to {n_cut}")
            ns = np.arange(1, n_cut + 1, dtype=float)
            out[i] = np.sum(f.A_array[:n_cut] * np.exp(-s * np.log(ns))
                            * np.exp(-(ns / X) ** 2))
        return out
    out = np.empty(len(s_arr), dtype=complex)
    low = np.abs(s_arr.imag) <= 11.0
    if low.any():
        out[low] = _L2_theta(f, s_arr[low], spec.X)
    for i in np.nonzero(~low)[0]:
        out[i] = _L2_smoothed_afe(f, complex(s_arr[i]), spec.X)
    return out


def L_holomorphic(f: HoloForm, s: complex,
                  spec: SmoothingSpec = SmoothingSpec()) -> complex:
    return complex(L_holomorphic_many(f, [s], spec)[0])


# ---------------------------------------------------------------------------
# degree-4: holomorphic x Maass convolution (level 1)
# ---------------------------------------------------------------------------

def _rs_coefficients(f: HoloForm, u: MaassForm, n_cut: int) -> np.ndarray:
    """Dirichlet coefficients of zeta(2s) sum A(n) lambda(n) n^(-s)."""
    if n_cut > min(f.n_max, u.n_max):
        raise CoverageError(f"need coefficients to {n_cut}")
    base = f.A_array[:n_cut] * u.lam[1:n_cut + 1]
    b = np.zeros(n_cut)
    for d2 in range(1, int(math.isqrt(n_cut)) + 1):
        step = d2 * d2
        b[step - 1::step] += base[:len(b[step - 1::step])]
    return b


def L_rankin_maass(f: HoloForm, u: MaassForm, s: complex,
                   spec: SmoothingSpec = SmoothingSpec()) -> complex:
    """Script-L(s, f x u_j) = rho1 zeta(2s) sum A(n) lambda(n) n^(-s),
    continued by the degree-4 completed theta-split for level 1."""
    s = complex(s)
    k = f.weight
    kappa = (k - 1) / 2.0
    t = u.t
    if not spec.reflection:
        if s.real <= 1.0:
            raise ConvergenceError("tapered direct sum needs Re(s) > 1")
        X = spec.cut(s, k, 1)
        n_cut = min(int(18 * X) + 64, min(f.n_max, u.n_max))
        ns = np.arange(1, n_cut + 1, dtype=float)
        val = np.sum(f.A_array[:n_cut] * u.lam[1:n_cut + 1]
                     * np.exp(-s * np.log(ns)) * np.exp(-(ns / (6 * X)) ** 2))
        return u.rho1 * zeta(2.0 * s) * complex(val)
    if f.level != 1:
        raise DomainError("completed convolution implemented for level 1")
    X0 = SmoothingSpec.default_cut(s, k, 1)
    X = spec.X if spec.X is not None else X0
    y0 = (X0 / X) ** 2
    kernel = KBesselImagOrder(2.0 * t)
    # n cut: kernel decays once 4 pi sqrt(n y) > 2t + margin
    n_cut_all = int(((2.0 * t + 36.0 + 2 * k) / (4.0 * math.pi)) ** 2 / min(y0, 1.0 / y0)) + 6
    b = _rs_coefficients(f, u, n_cut_all)
    lam_val = 0.0 + 0.0j
    for expo, c in ((s, y0), (1.0 - s, 1.0 / y0)):
        n_cut = int(((2.0 * t + 36.0 + 2 * k) / (4.0 * math.pi)) ** 2 / c) + 6
        v_lo = c
        v_hi = ((2.0 * t + 40.0 + 2 * k) / (4.0 * math.pi)) ** 2
        ys, ws = _theta_grid(v_lo, max(v_hi, 2.0 * v_lo), abs(s.imag) + 2 * t + 10)
        karg = 4.0 * math.pi * np.sqrt(np.outer(ys, np.arange(1, n_cut + 1)))
        kv = kernel(karg.ravel()).reshape(karg.shape)
        Phi = kv @ (b[:n_cut] * np.arange(1, n_cut + 1, dtype=float) ** kappa) * 2.0
        lam_val += np.sum(Phi * ws * np.exp((expo + kappa) * np.log(ys)) / ys)
    # divide the scaled gamma pair e^{pi t} (2 pi)^(-2(s+kappa)) G G
    lg = (log_gamma(s + kappa + 1j * t) + log_gamma(s + kappa - 1j * t)
          + math.pi * t - 2.0 * (s + kappa) * math.log(2.0 * math.pi))
    return u.rho1 * lam_val * cmath.exp(-lg)


def L_f_times_eisenstein(f: HoloForm, cusp: CuspContext, s: complex, t_real: float,
                         spec: SmoothingSpec = SmoothingSpec()) -> complex:
    """L(s, f x E_{1/a}(*, 1/2+it)): the product of shifted standard
    L-values with the local correction polynomial over p | a and p | N/a."""
    s = complex(s)
    if f.level != cusp.N:
        raise DomainError("form level must match the cusp level")
    corr = 1.0 + 0.0j
    for p in ar.prime_factors(cusp.a):
        corr *= (f.A(p) * p ** (-1j * t_real - s) - p ** (-2j * t_real - 1.0))
    for p in ar.prime_factors(cusp.N // cusp.a):
        corr *= (1.0 - f.A(p) * p ** (-1j * t_real - s))
    pair = L_holomorphic_many(f, [s + 1j * t_real, s - 1j * t_real], spec)
    return corr * complex(pair[0] * pair[1])


# ---------------------------------------------------------------------------
# shifted series and the double series
# ---------------------------------------------------------------------------

def shifted_series_D(f: HoloForm, phi, w: complex, m: int,
                     trunc: int = 200000):
    """D(w; m) = sum_{n>=1} a(n+m) cbar_phi(n) / n^(w+k/2-1), truncated at
    `trunc`, with a divisor-bound tail estimate.  Requires Re(w) > 1."""
    w = complex(w)
    if w.real <= 1.0:
        raise ConvergenceError("shifted series requires Re(w) > 1")
    if m < 0:
        raise DomainError("m must be >= 0")
    k = f.weight
    n_cut = min(trunc, f.n_max - m)
    if n_cut < 16:
        raise CoverageError("coefficient table too short for the shift")
    ns = np.arange(1, n_cut + 1, dtype=float)
    cb = phi.cbar_array(n_cut)
    terms = f.a_array[m:m + n_cut] * cb * np.exp(-(w + k / 2.0 - 1.0) * np.log(ns))
    val = complex(np.sum(terms))
    # tail: |a(n+m)| <= d(n+m) (n+m)^((k-1)/2), |cbar(n)| ~ n^{(k-1)/2 - k/2}
    sig = w.real
    tail = 16.0 * math.log(n_cut + m + 2.0) ** 2 * (1.0 + m / n_cut) ** ((k - 1) / 2.0) \
        * n_cut ** (1.0 - sig) / max(sig - 1.0, 1e-2) * abs(phi.cbar(n_cut)) \
        * n_cut ** (0.5 + (k - 1) / 2.0)
    return ar.ValueWithTail(val, tail)


def finite_series_Dfin(f: HoloForm, phi, w: complex, m: int) -> complex:
    """The finite lower-shift series with its gamma prefactor:

      G(w) G(1-w) / (G(1/2+k/2+nu_bar) G(1/2+k/2-nu_bar))
        * sum_{n=1}^{m-1} a(m-n) cbar_phi(-n) n^(-(w+k/2-1))."""
    w = complex(w)
    if m < 1:
        raise DomainError("m must be >= 1")
    if abs(w - round(w.real)) < 1e-12 and abs(w.imag) < 1e-12:
        raise PoleError("Gamma(w) Gamma(1-w) pole at integer w")
    k = f.weight
    nub = phi.nu_bar
    if m == 1:
        return 0.0 + 0.0j
    total = 0.0 + 0.0j
    for n in range(1, m):
        total += f.a(m - n) * phi.cbar(-n) * n ** (-(w + k / 2.0 - 1.0))
    pref = cmath.exp(log_gamma(w) + log_gamma(1.0 - w)
                     - log_gamma(0.5 + k / 2.0 + nub) - log_gamma(0.5 + k / 2.0 - nub))
    return pref * total


def gamma_prefactor_G(w: complex, k: int, nu: complex) -> complex:
    """G(w) = Gamma(w+k/2+nu_bar-1/2) Gamma(w+k/2-nu_bar-1/2)
              (4 pi)^(1-w-k/2) / Gamma(w)."""
    w = complex(w)
    nub = complex(nu).conjugate()
    for arg in (w + k / 2.0 + nub - 0.5, w + k / 2.0 - nub - 0.5):
        if abs(arg.imag) < 1e-12 and arg.real < 0.5 and abs(arg - round(arg.real)) < 1e-12:
            raise PoleError("gamma pole in prefactor")
    return cmath.exp(log_gamma(w + k / 2.0 + nub - 0.5)
                     + log_gamma(w + k / 2.0 - nub - 0.5) - log_gamma(w)
                     + (1.0 - w - k / 2.0) * math.log(4.0 * math.pi))


def double_series_M(f: HoloForm, phi1, phi2, s: complex, w: complex,
                    trunc: int = 4000) -> complex:
    """zeta(2s') * double shifted sum over (m, n) with s' = s+w+k/2-1;
    absolutely convergent for Re(s), Re(w) > 1 (and weight decay)."""
    s, w = complex(s), complex(w)
    if s.real <= 1.0 or w.real <= 1.0:
        raise ConvergenceError("double series requires Re(s), Re(w) > 1")
    k = f.weight
    n_cut = m_cut = min(trunc, f.n_max // 2 - 2)
    cb1 = phi1.cbar_array(n_cut)
    cb2 = phi2.cbar_array(m_cut)
    ns = np.arange(1, n_cut + 1, dtype=float)
    ms = np.arange(1, m_cut + 1, dtype=float)
    wn = cb1 * np.exp(-(w + k / 2.0 - 1.0) * np.log(ns))
    wm = cb2 * np.exp(-(s + k / 2.0 - 1.0) * np.log(ms))
    total = 0.0 + 0.0j
    a_arr = f.a_array
    for mi in range(1, m_cut + 1):
        total += wm[mi - 1] * np.sum(a_arr[mi:mi + n_cut] * wn)
    sp = s + w + k / 2.0 - 1.0
    return zeta(2.0 * sp) * total


# ---------------------------------------------------------------------------
# Rankin-Selberg by unfolding (holomorphic x holomorphic, level 1)
# ---------------------------------------------------------------------------

def rankin_selberg_unfolded(f: HoloForm, g: HoloForm, s: complex,
                            nx: int = 20, ny_panels: int = 22,
                            y_top: float = 9.0) -> complex:
    """L(s, f x conj(g)) = zeta(2s) sum A(n) B(n) n^(-s), evaluated through
    the level-1 fundamental-domain integral of y^k f conj(g) against the
    spectral Eisenstein series (valid in the continued region, poles of the
    Eisenstein constant term included automatically)."""
    from .eisenstein import eisenstein_fourier
    if f.level != 1 or g.level != 1 or f.weight != g.weight:
        raise DomainError("unfolding evaluator requires level 1, equal weights")
    s = complex(s)
    k = f.weight
    cusp = CuspContext(1, 1)
    xg, wg = np.polynomial.legendre.leggauss(nx)
    x_nodes = 0.5 * xg * 1.0
    x_w = 0.5 * wg
    yg, ywg = np.polynomial.legendre.leggauss(12)
    total = 0.0 + 0.0j
    from .eisenstein import UpperHalfPoint as UHP
    for xi, wx in zip(x_nodes, x_w):
        y_lo = math.sqrt(max(1.0 - xi * xi, 0.0))
        edges = np.geomspace(y_lo, y_top, ny_panels + 1)
        for lo, hi in zip(edges[:-1], edges[1:]):
            yy = 0.5 * (hi - lo) * yg + 0.5 * (hi + lo)
            wy = 0.5 * (hi - lo) * ywg
            for yj, wyj in zip(yy, wy):
                p = UHP(xi, yj)
                fz = _qexp(f, p)
                gz = _qexp(g, p)
                E = eisenstein_fourier(cusp, p, s).value
                total += wx * wyj * E * (yj ** k) * fz * np.conj(gz) / (yj * yj)
    pref = zeta(2.0 * s) * cmath.exp((s + k - 1.0) * math.log(4.0 * math.pi)
                                     - log_gamma(s + k - 1.0))
    return pref * total


def _qexp(f: HoloForm, p) -> complex:
    n_cut = min(f.n_max, int(math.ceil((2.0 * f.weight + 60.0) / (2.0 * math.pi * p.y))) + 4)
    ns = np.arange(1, n_cut + 1)
    q = np.exp(2j * math.pi * ns * complex(p.x, p.y))
    return complex(np.sum(f.a_array[:n_cut] * q))


def rankin_selberg_residue(f: HoloForm, eps_list=(0.02, 0.01, 0.005),
                           **quad_kwargs) -> float:
    """Res_{s=1} L(s, f x conj(f)) by Richardson extrapolation of
    eps * L(1 + eps)."""
    pts = []
    for eps in eps_list:
        val = rankin_selberg_unfolded(f, f, 1.0 + eps, **quad_kwargs)
        pts.append((eps, eps * val.real))
    # Neville extrapolation to eps = 0
    xs = [p[0] for p in pts]
    ys = [p[1] for p in pts]
    n = len(pts)
    for level in range(1, n):
        for i in range(n - level):
            ys[i] = ((0.0 - xs[i + level]) * ys[i] - (0.0 - xs[i]) * ys[i + 1]) \
                / (xs[i] - xs[i + level])
    return ys[0]
