"""Ingestion, validation and pointwise evaluation of discrete-spectrum data
(Maass forms), plus numeric Petersson inner products used as oracles.

Catalogs are ingested, never computed here: the loader enforces the Hecke
composition law

    lambda(m) lambda(n) = sum_{d | (m,n)} lambda(m n / d^2)

on the table, rejects exceptional-eigenvalue records, and exposes the forms
sorted by spectral parameter.  The file format is either a JSON object
{"level", "t_max", "n_max", "provenance", "forms": [{t, parity, rho1,
lambda: [lam(2)..lam(n_max)]}]} or a CSV with header
t,parity,rho1,lam2,...,lam{n_max} and a '# provenance=' comment line.
"""

from __future__ import annotations

import json
import math
import os
from dataclasses import dataclass, field

import numpy as np

from . import arithmetic as ar
from .arithmetic import HoloForm
from .errors import (ConvergenceError, CoverageError, DomainError,
                     HeckeViolationError, SchemaError)
from .eisenstein import UpperHalfPoint, raised_eisenstein_fourier
from .specfun import KBesselImagOrder

__all__ = [
    "MaassForm",
    "SpectralCatalog",
    "load_catalog",
    "bundled_catalog_path",
    "eval_maass",
    "u_product",
    "petersson_inner_numeric",
    "QuadratureSpec",
]

_HECKE_TOL = 1e-9


@dataclass
class MaassForm:
    """One discrete-spectrum datum: spectral parameter t (eigenvalue
    1/4 + t^2), parity, Hecke eigenvalues lambda(n) for n <= n_max, and the
    unit-norm first coefficient rho1."""

    t: float
    parity: int
    rho1: float
    lam: np.ndarray  # lam[n] = lambda(n), index 0 unused, lam[1] = 1
    _kernel: KBesselImagOrder | None = field(default=None, repr=False)

    @property
    def n_max(self) -> int:
        return len(self.lam) - 1

    def lambda_n(self, n: int) -> float:
        if not 1 <= n <= self.n_max:
            raise CoverageError(f"lambda({n}) beyond table (n_max={self.n_max})")
        return float(self.lam[n])

    def rho(self, n: int) -> float:
        """rho(n) = rho1 * lambda(|n|), with rho(-n) = (-1)^parity rho(n)."""
        sgn = 1.0 if n > 0 else (-1.0) ** self.parity
        return sgn * self.rho1 * self.lambda_n(abs(n))

    def kernel(self) -> KBesselImagOrder:
        if self._kernel is None:
            self._kernel = KBesselImagOrder(self.t)
        return self._kernel


@dataclass
class SpectralCatalog:
    level: int
    forms: list
    t_max: float
    provenance: str

    def __post_init__(self):
        self.forms = sorted(self.forms, key=lambda f: f.t)
        for f in self.forms:
            if f.t > self.t_max + 1e-9:
                raise SchemaError("form above declared t_max")

    def __len__(self):
        return len(self.forms)

    def require_t_max(self, needed: float):
        if self.t_max < needed:
            raise CoverageError(
                f"catalog covers t <= {self.t_max}, request needs t_max >= {needed:.2f}")


def _check_hecke(lam: np.ndarray, tol: float = _HECKE_TOL):
    n_max = len(lam) - 1
    bad = []
    scale = 1.0 + float(np.max(np.abs(lam[1:])))
    for m in range(2, n_max + 1):
        for n in range(m, n_max // m + 1):
            lhs = lam[m] * lam[n]
            rhs = 0.0
            g = math.gcd(m, n)
            for d in ar.divisors(g):
                rhs += lam[m * n // (d * d)]
            if abs(lhs - rhs) > tol * scale * scale:
                bad.append((m, n))
    if bad:
        raise HeckeViolationError(
            f"Hecke composition law violated at {bad[:8]}", pairs=bad)


def bundled_catalog_path() -> str:
    return os.path.join(os.path.dirname(__file__), "data", "maass_level1.json")


def load_catalog(path) -> SpectralCatalog:
    """Load and validate a spectral catalog (JSON or CSV; see module doc)."""
    path = str(path)
    if not os.path.exists(path):
        raise SchemaError(f"catalog file not found: {path}")
    if path.endswith(".json"):
        with open(path) as fh:
            rec = json.load(fh)
        if "forms" not in rec or "provenance" not in rec:
            raise SchemaError("catalog JSON must carry 'forms' and 'provenance'")
        forms = []
        for it in rec["forms"]:
            lam = np.concatenate([[0.0, 1.0], np.asarray(it["lambda"], dtype=float)])
            forms.append(MaassForm(t=float(it["t"]), parity=int(it["parity"]),
                                   rho1=float(it["rho1"]), lam=lam))
        level = int(rec.get("level", 1))
        t_max = float(rec.get("t_max", forms[-1].t if forms else 0.0))
        provenance = str(rec["provenance"])
    else:
        provenance = ""
        rows = []
        header = None
        with open(path) as fh:
            for line in fh:
                line = line.strip()
                if not line:
                    continue
                if line.startswith("#"):
                    if "provenance=" in line:
                        provenance = line.split("provenance=", 1)[1].strip()
                    continue
                if header is None:
                    header = line.split(",")
                    if header[:3] != ["t", "parity", "rho1"]:
                        raise SchemaError("CSV header must start t,parity,rho1")
                    continue
                rows.append([float(v) for v in line.split(",")])
        if not provenance:
            raise SchemaError("CSV catalog requires a '# provenance=' line")
        forms = []
        for row in rows:
            lam = np.concatenate([[0.0, 1.0], np.asarray(row[3:], dtype=float)])
            forms.append(MaassForm(t=row[0], parity=int(row[1]), rho1=row[2], lam=lam))
        level = 1
        t_max = forms[-1].t if forms else 0.0

    for f in forms:
        if f.parity not in (0, 1):
            raise SchemaError(f"parity must be 0 or 1, got {f.parity}")
        if not (f.t > 0):
            raise SchemaError(
                "exceptional spectral parameter (1/2 < s < 1 branch) rejected: "
                "no weighting convention is fixed for such records")
        _check_hecke(f.lam)
    return SpectralCatalog(level=level, forms=forms, t_max=t_max,
                           provenance=provenance)


# ---------------------------------------------------------------------------
# evaluation
# ---------------------------------------------------------------------------

def eval_maass(form: MaassForm, z: UpperHalfPoint, n_max: int | None = None) -> float:
    """u_j(z) from the truncated Fourier expansion (real output; cosine or
    sine series according to parity)."""
    if z.y < 0.3:
        raise DomainError("evaluation requires y >= 0.3")
    if n_max is None:
        n_max = min(form.n_max, int(math.ceil((form.t + 40.0) / (2.0 * math.pi * z.y))) + 4)
    if n_max > form.n_max:
        raise CoverageError(f"n_max={n_max} beyond table {form.n_max}")
    ns = np.arange(1, n_max + 1)
    kt = form.kernel()(2.0 * math.pi * ns * z.y)
    scaled_rho = form.rho1 * math.exp(-min(math.pi * form.t / 2.0, 700.0))
    if form.parity == 0:
        osc = 2.0 * np.cos(2.0 * math.pi * ns * z.x)
    else:
        osc = 2.0 * np.sin(2.0 * math.pi * ns * z.x)
    return float(scaled_rho * math.sqrt(z.y) * np.sum(form.lam[1:n_max + 1] * kt * osc))


def u_product(f: HoloForm, phi_kind, z: UpperHalfPoint) -> complex:
    """U(z) = y^{k/2} conj(f(z)) phi(z), where phi_kind is either
    ("holomorphic", g) for g(z) y^{k/2} or ("eisenstein", r) for the raised
    level-N weight-k Eisenstein series at spectral point 1/2 + i r."""
    k = f.weight
    fz = _eval_holomorphic(f, z)
    kind, payload = phi_kind
    if kind == "holomorphic":
        phiz = _eval_holomorphic(payload, z) * z.y ** (payload.weight / 2.0)
    elif kind == "eisenstein":
        phiz = raised_eisenstein_fourier(float(payload), k, f.level, z)
    else:
        raise DomainError("phi_kind must be ('holomorphic', g) or ('eisenstein', r)")
    return z.y ** (k / 2.0) * np.conj(fz) * phiz


def _eval_holomorphic(f: HoloForm, z: UpperHalfPoint) -> complex:
    n_cut = min(f.n_max, int(math.ceil((f.weight * 2.0 + 60.0) / (2.0 * math.pi * z.y))) + 4)
    ns = np.arange(1, n_cut + 1)
    q = np.exp(2j * math.pi * ns * complex(z.x, z.y))
    return complex(np.sum(f.a_array[:n_cut] * q))


@dataclass(frozen=True)
class QuadratureSpec:
    nx: int = 24
    ny_panels: int = 24
    y_top: float = 8.0


def _ext_gcd(a, b):
    if b == 0:
        return a, 1, 0
    g, x, y = _ext_gcd(b, a % b)
    return g, y, x - (a // b) * y


def _gamma0_cosets_scan(N: int):
    """Right-coset representatives of Gamma0(N) in SL2(Z): one matrix per
    class of the bottom row (c, d) in P^1(Z/N)."""
    reps = []
    seen = set()
    bound = 2 * N + 2
    for c in range(0, bound):
        for d in range(-bound, bound + 1):
            if math.gcd(c, d) != 1:
                continue
            key = _p1_key(c, d, N)
            if key in seen:
                continue
            seen.add(key)
            g, x, y = _ext_gcd(c, d)
            if g < 0:
                g, x, y = -g, -x, -y
            # a d - b c = 1  with (a, b) = (y, -x)
            a, b = y, -x
            assert a * d - b * c == 1
            reps.append(((a, b), (c, d)))
            if len(seen) == _p1_size(N):
                return reps
    return reps


def _p1_key(c, d, N):
    best = None
    for u in range(1, N + 1):
        if math.gcd(u, N) == 1:
            cand = ((u * c) % N, (u * d) % N)
            if best is None or cand < best:
                best = cand
    return best


def _p1_size(N: int) -> int:
    out = N
    for p in ar.prime_factors(N):
        out = out // p * (p + 1)
    return out


def petersson_inner_numeric(F, G, N: int = 1,
                            spec: QuadratureSpec = QuadratureSpec()):
    """2-D panel quadrature of int F(z) conj(G(z)) dmu over a fundamental
    domain of Gamma0(N): the standard domain |x| <= 1/2, |z| >= 1 for
    level 1, tiled by coset translates for N > 1.  F, G are callables of
    UpperHalfPoint.  Returns (value, error_estimate)."""
    xg, wg = np.polynomial.legendre.leggauss(spec.nx)
    x_nodes = 0.5 * xg
    x_w = 0.5 * wg
    reps = _gamma0_cosets_scan(N) if N > 1 else [((1, 0), (0, 1))]

    def tile_integral(nx_nodes, nx_w, ny_panels):
        total = 0.0 + 0.0j
        yg, ywg = np.polynomial.legendre.leggauss(10)
        for xi, wx in zip(nx_nodes, nx_w):
            y_lo = math.sqrt(max(1.0 - xi * xi, 0.0))
            edges = np.geomspace(y_lo, spec.y_top, ny_panels + 1)
            for lo, hi in zip(edges[:-1], edges[1:]):
                yy = 0.5 * (hi - lo) * yg + 0.5 * (hi + lo)
                wy = 0.5 * (hi - lo) * ywg
                for yj, wyj in zip(yy, wy):
                    base = complex(xi, yj)
                    val = 0.0 + 0.0j
                    for mat in reps:
                        w = moebius(mat, base)
                        p = UpperHalfPoint(w.real, w.imag)
                        val += F(p) * np.conj(G(p))
                    total += wx * wyj * val / (yj * yj)
        return total

    coarse = tile_integral(x_nodes[::2], 2.0 * x_w[::2], max(spec.ny_panels // 2, 4))
    fine = tile_integral(x_nodes, x_w, spec.ny_panels)
    err = abs(fine - coarse)
    decay_probe = abs(complex(F(UpperHalfPoint(0.1, spec.y_top)))
                      * np.conj(G(UpperHalfPoint(0.1, spec.y_top))))
    bulk = abs(fine) + 1e-300
    if decay_probe > 1e-4 * bulk:
        raise ConvergenceError("integrand does not decay at the truncation height")
    return fine, err + decay_probe


def moebius(mat, z: complex) -> complex:
    (a, b), (c, d) = mat
    return (a * z + b) / (c * z + d)
