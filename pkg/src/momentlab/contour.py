"""Vertical-line (Mellin-Barnes) quadrature with explicit pole bookkeeping,
plus the specific gamma-ratio identities shipped as verifiable
(numeric, closed) pairs.

Conventions: every integral here is (1/2 pi i) * int over Re(w) = sigma,
|Im w| <= t_cut.  Residue bookkeeping is explicit: nothing in this module
guesses residues; callers supply closures for each crossed pole.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from typing import Callable, NamedTuple, Sequence

import numpy as np

from .errors import DomainError, PathCollisionError, TailBoundError
from .specfun import _log_gamma_arr, log_gamma

__all__ = [
    "VerticalPath",
    "DecayProfile",
    "PoleCrossing",
    "vertical_integral",
    "shifted_line_value",
    "barnes_second_reduction",
    "h_double_transform",
    "vanishing_integral_check",
]


@dataclass(frozen=True)
class VerticalPath:
    sigma: float
    t_cut: float
    n_points: int = 512

    def __post_init__(self):
        if not (self.t_cut > 0 and self.n_points >= 8):
            raise DomainError("need t_cut > 0 and n_points >= 8")


@dataclass(frozen=True)
class DecayProfile:
    rate: float = 0.5        # exponential decay e^{-rate |Im w|}
    order: float = 0.0       # polynomial factor |Im w|^order

    def __post_init__(self):
        if self.rate < 0:
            raise DomainError("decay rate must be >= 0")


class PoleCrossing(NamedTuple):
    location: complex
    residue: Callable[[], complex]


def _eval_vec(f, w: np.ndarray) -> np.ndarray:
    try:
        out = np.asarray(f(w), dtype=complex)
        if out.shape == w.shape:
            return out
    except (TypeError, ValueError):
        pass
    return np.array([complex(f(complex(wi))) for wi in w])


def _panel_nodes(sigma: float, t_cut: float, n_points: int, panel_height: float = 0.5):
    npan = max(2, int(math.ceil(2.0 * t_cut / panel_height)))
    per = max(4, int(math.ceil(n_points / npan)))
    xg, wg = np.polynomial.legendre.leggauss(per)
    edges = np.linspace(-t_cut, t_cut, npan + 1)
    mid = 0.5 * (edges[:-1] + edges[1:])[:, None]
    half = 0.5 * (edges[1:] - edges[:-1])[:, None]
    ts = (mid + half * xg[None, :]).ravel()
    wts = (half * wg[None, :]).ravel()
    return sigma + 1j * ts, wts


class ContourResult(NamedTuple):
    value: complex
    quad_error: float
    tail_bound: float


def vertical_integral(integrand, path: VerticalPath,
                      profile: DecayProfile = DecayProfile()) -> ContourResult:
    """(1/2 pi i) int of `integrand` along Re w = sigma, |Im w| <= t_cut.

    The quadrature error is estimated from a half-resolution comparison; the
    tail bound comes from the decay profile applied to the endpoint samples.
    Sampled decay slower than half the declared rate raises TailBoundError.
    """
    sig, tc = path.sigma, path.t_cut
    w1, q1 = _panel_nodes(sig, tc, path.n_points)
    f1 = _eval_vec(integrand, w1)
    v1 = complex(np.sum(f1 * q1)) * 1j / (2j * math.pi)
    w2, q2 = _panel_nodes(sig, tc, path.n_points // 2, panel_height=1.0)
    f2 = _eval_vec(integrand, w2)
    v2 = complex(np.sum(f2 * q2)) * 1j / (2j * math.pi)
    quad_err = abs(v1 - v2)

    # decay audit near the upper/lower ends
    probe = np.array([sig + 1j * 0.8 * tc, sig + 1j * tc,
                      sig - 1j * 0.8 * tc, sig - 1j * tc])
    fp = np.abs(_eval_vec(integrand, probe))
    end = max(fp[1], fp[3]) + 1e-300
    inner = max(fp[0], fp[2]) + 1e-300
    if profile.rate > 0:
        observed = math.log(inner / end) / (0.2 * tc)
        scale = max(np.max(np.abs(f1)), 1e-300)
        if observed < 0.4 * profile.rate and end > 1e-11 * scale:
            raise TailBoundError(
                f"sampled decay rate {observed:.3g} contradicts profile {profile.rate:.3g}")
        tail = end * math.exp(profile.rate * 0.0) / profile.rate / (2.0 * math.pi)
        tail *= 2.0 * (1.0 + (tc ** max(profile.order, 0.0)) * 0.0 + 1.0)
    else:
        tail = end * tc * 10.0
    return ContourResult(v1, quad_err, tail)


def shifted_line_value(base_value: complex, crossings: Sequence[PoleCrossing],
                       direction: int) -> complex:
    """Value of the same (1/2 pi i)-normalized integral on a line shifted to
    the right (direction=+1) or left (-1), given the poles crossed.

    Shifting right DECREASES the value by each crossed residue (the pole
    leaves the region swept counterclockwise); shifting left increases it.
    """
    if direction not in (1, -1):
        raise DomainError("direction must be +1 or -1")
    out = complex(base_value)
    for crossing in crossings:
        out -= direction * complex(crossing.residue())
    return out


# ---------------------------------------------------------------------------
# the Barnes-type reduction and the spectral weight transform
# ---------------------------------------------------------------------------

def _barnes_integrand_factory(u: complex, t: float):
    def f(w: np.ndarray) -> np.ndarray:
        lg = (_log_gamma_arr(u - w) + _log_gamma_arr(0.5 - w)
              + _log_gamma_arr(0.5 + w) + _log_gamma_arr(w - 1j * t)
              + _log_gamma_arr(w + 1j * t) - _log_gamma_arr(1.0 + w + u))
        return np.exp(lg)
    return f


def barnes_second_reduction(u: complex, t: float,
                            n_points: int = 900) -> tuple[complex, complex]:
    """The contour reduction used to collapse the inner line of the spectral
    weight transform:

      (1/2 pi i) int_(eps) G(u-w) G(1/2-w) G(1/2+w) G(w-it) G(w+it)
                           / G(1+w+u) dw
        = G(1/2-it) G(1/2+it) / ((u+it)(u-it)).

    Returns (numeric, closed).  The path Re w = eps must separate the pole
    families; PathCollisionError when u or t forces a pole onto it.
    """
    u = complex(u)
    if u.real <= 0.02:
        raise PathCollisionError("need Re(u) > 0 to separate the pole families")
    if abs(u + 1j * t) < 1e-10 or abs(u - 1j * t) < 1e-10:
        raise PathCollisionError("closed form degenerates at u = -+ i t")
    eps = min(0.25, 0.5 * u.real)
    t_cut = abs(t) + abs(u.imag) + 40.0
    path = VerticalPath(eps, t_cut, n_points)
    res = vertical_integral(_barnes_integrand_factory(u, t), path,
                            DecayProfile(rate=math.pi, order=2.0))
    closed = cmath.exp(log_gamma(0.5 - 1j * t) + log_gamma(0.5 + 1j * t)) \
        / ((u + 1j * t) * (u - 1j * t))
    return res.value, closed


def _outer_u_nodes(h, t_cut_u: float, sigma_u: float, n_points: int):
    return _panel_nodes(sigma_u, t_cut_u, n_points)


def h_double_transform(h, t: float, k: int, nu: complex,
                       u_cut: float | None = None,
                       n_points_u: int = 700, n_points_w: int = 700) -> complex:
    """Numeric evaluation of the double contour transform of an even spectral
    weight h (holomorphic on |Im| < 1/2 + eps, h(+-i/2) = 0):

      1/(G(1/2-it) G(1/2+it)) (1/2 pi i) int_(sigma_u) h(u/i) u G(1/2+u)
         G(1/2-u) / (G(k/2+nu+u) G(k/2+nu-u))
         (1/2 pi i) int_(eps) [Barnes kernel](w; u, t) dw du.

    Its closed form (verified by the transform-identity tests) is
    h(t)/2 * G(1/2-it) G(1/2+it) / (G(k/2+nu+it) G(k/2+nu-it)).
    """
    if u_cut is None:
        u_cut = _default_u_cut(h)
    sigma_u = 0.6
    uu, qu = _panel_nodes(sigma_u, u_cut, n_points_u)
    # outer factor
    lg_outer = (_log_gamma_arr(0.5 + uu) + _log_gamma_arr(0.5 - uu)
                - _log_gamma_arr(k / 2.0 + nu + uu) - _log_gamma_arr(k / 2.0 + nu - uu))
    hvals = np.asarray([complex(h(ui / 1j)) for ui in uu])
    outer = hvals * uu * np.exp(lg_outer)

    eps = 0.25
    t_cut_w = abs(t) + u_cut + 30.0
    ww, qw = _panel_nodes(eps, t_cut_w, n_points_w)
    # inner integral for every u node: 2-D gamma array
    W = ww[None, :]
    U = uu[:, None]
    lg_inner = (_log_gamma_arr(U - W) + _log_gamma_arr(0.5 - W)
                + _log_gamma_arr(0.5 + W) + _log_gamma_arr(W - 1j * t)
                + _log_gamma_arr(W + 1j * t) - _log_gamma_arr(1.0 + W + U))
    inner = np.exp(lg_inner) @ qw / (2.0 * math.pi)
    total = complex(np.sum(outer * inner * qu)) / (2.0 * math.pi)
    pref = cmath.exp(-log_gamma(0.5 - 1j * t) - log_gamma(0.5 + 1j * t))
    return pref * total


def _default_u_cut(h) -> float:
    T = getattr(h, "T", None)
    alpha = getattr(h, "alpha", None)
    if T is not None and alpha is not None:
        return T + 8.0 * T ** alpha + 10.0
    return 60.0


def vanishing_integral_check(h, k: int, nu: complex, ell: int,
                             u_cut: float | None = None,
                             n_points: int = 900) -> complex:
    """Numeric value of the odd-kernel line integral

      (1/ell!) (1/2 pi i) int_(sigma_u) h(u/i) u G(1/2+ell+u) G(1/2+ell-u)
                                        / (G(k/2+nu+u) G(k/2+nu-u)) du,

    which vanishes for even h with h(+-i/2) = 0 (the integrand is odd and no
    crossed pole survives).  The returned value is the check residual."""
    if ell < 0:
        raise DomainError("ell must be >= 0")
    if u_cut is None:
        u_cut = _default_u_cut(h)
    sigma_u = 0.6
    uu, qu = _panel_nodes(sigma_u, u_cut, n_points)
    lg = (_log_gamma_arr(0.5 + ell + uu) + _log_gamma_arr(0.5 + ell - uu)
          - _log_gamma_arr(k / 2.0 + nu + uu) - _log_gamma_arr(k / 2.0 + nu - uu))
    hvals = np.asarray([complex(h(ui / 1j)) for ui in uu])
    total = complex(np.sum(hvals * uu * np.exp(lg) * qu)) / (2.0 * math.pi)
    total /= math.factorial(ell)
    return total
