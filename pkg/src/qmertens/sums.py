"""Exact left-hand sides of the Mertens and Mirsky asymptotics and their leading terms.

All sums are accumulated in integers (or exact rationals); floating point
only enters predictions and ratios.
"""

from __future__ import annotations

import csv
import decimal
import io
import json
import math
import platform
import time
from dataclasses import dataclass, field as dc_field
from fractions import Fraction
from typing import Optional

import numpy as np
from scipy import stats

from . import constants, kernels
from .fields import FieldDescriptor
from .ideals import IdealRep, as_ideal, c_m, norm_counts, phi_table, zeta_mp
from .ring import AlgebraicInt, _hnf
from .sector import MODE_PHI, MODE_PHI_SHIFT, Sector, binned_sum, collected_terms, parse_theta

try:
    import gmpy2

    _Q = gmpy2.mpq
except ImportError:  # exact sums still work, only slower
    _Q = Fraction


class GridTooSmall(ValueError):
    pass


class GridError(ValueError):
    pass


# ---------------------------------------------------------------------------
# ideal counts and norm sums

def _rows(field: FieldDescriptor, X: int):
    absD, B = field.abs_disc, field.B
    V = math.isqrt(4 * X // absD)
    for v in range(-V, V + 1):
        s = math.isqrt(4 * X - absD * v * v)
        yield v, -((s + B * v) // 2), (s - B * v) // 2


def count_ideals(field: FieldDescriptor, x) -> int:
    """Number of ideals of norm <= x (lattice points of norm <= x, minus 0, over w_K)."""
    X = math.floor(x)
    if X < 1:
        return 0
    total = sum(hi - lo + 1 for _, lo, hi in _rows(field, X)) - 1
    q, r = divmod(total, field.unit_count)
    assert r == 0
    return q


def _power_sum(lo: int, hi: int, k: int) -> int:
    """sum_{j=lo}^{hi} j^k for k <= 2; the Faulhaber polynomials satisfy S(n) - S(n-1) = n^k on all of Z."""
    S = (lambda n: n, lambda n: n * (n + 1) // 2, lambda n: n * (n + 1) * (2 * n + 1) // 6)[k]
    return S(hi) - S(lo - 1)


def sum_norms_ideals(field: FieldDescriptor, y) -> int:
    """Sum of N(a) over ideals with N(a) <= y, via closed-form row sums."""
    Y = math.floor(y)
    if Y < 1:
        return 0
    B, C = field.B, field.C
    total = 0
    for v, lo, hi in _rows(field, Y):
        total += _power_sum(lo, hi, 2) + B * v * _power_sum(lo, hi, 1) + C * v * v * _power_sum(lo, hi, 0)
    q, r = divmod(total, field.unit_count)
    assert r == 0
    return q


def ideal_count_grid(field: FieldDescriptor, xs) -> list[int]:
    X = int(max(xs))
    cum = np.cumsum(norm_counts(field, X))
    return [int(cum[int(math.floor(x))]) // field.unit_count for x in xs]


# ---------------------------------------------------------------------------
# Mertens sums

def _in_ideal_mask(u, v, m: IdealRep):
    n1, s, n2 = _hnf(m.generator)
    q, rv = np.divmod(v, n2)
    return (rv == 0) & ((u - q * s) % n1 == 0)


def _mertens_bins(m: IdealRep, X: int, backend=None) -> np.ndarray:
    """bins[n] = sum of phi_K over ideals of norm n that m divides (canonical generators)."""
    field = m.field
    tab = phi_table(field, max(X, 4), backend)
    H, W = tab.phi.shape
    v, u = np.divmod(np.arange(H * W, dtype=np.int64), W)
    v -= tab.V
    u -= tab.U
    n = u * u + field.B * u * v + field.C * v * v
    if field.unit_count == 2:
        canon = (v > 0) | ((v == 0) & (u > 0))
    else:
        canon = (u > 0) & (v >= 0)
    sel = canon & (n <= X) & _in_ideal_mask(u, v, m)
    bins = np.zeros(X + 1, dtype=np.int64)
    np.add.at(bins, n[sel], tab.phi.reshape(-1)[sel])
    return bins


def mertens_sum(m, x, backend=None) -> int:
    """Sum of phi_K(a) over ideals a with N(a) <= x and m | a."""
    m = as_ideal(m)
    X = math.floor(x)
    if X < m.norm:
        return 0
    return int(_mertens_bins(m, X, backend).sum())


def mertens_grid(m, xs, backend=None) -> list[int]:
    m = as_ideal(m)
    X = int(math.floor(max(xs)))
    cum = np.cumsum(_mertens_bins(m, max(X, 1), backend))
    return [int(cum[int(math.floor(x))]) if x >= 1 else 0 for x in xs]


def mertens_leading(m) -> float:
    """pi / (w_K sqrt|D| zeta_K(2) c_m), the coefficient of x^2."""
    m = as_ideal(m)
    f = m.field
    return float(f.rho_exact) / 2 / float(zeta_mp(f, 2)) / float(c_m(m))


def sectorial_mertens_sum(m, s: Sector, threads=None, backend=None) -> int:
    """Sum of phi_K(a) over elements a of m lying in s."""
    return binned_sum(s, MODE_PHI, m=m, threads=threads, backend=backend).total()


def sectorial_leading(m, theta) -> float:
    """theta / (2 sqrt|D| zeta_K(2) c_m), the coefficient of x^4."""
    m = as_ideal(m)
    f = m.field
    th = parse_theta(theta).radians
    return th / (2 * math.sqrt(f.abs_disc) * float(zeta_mp(f, 2)) * float(c_m(m)))


# ---------------------------------------------------------------------------
# Mirsky sums

@dataclass(frozen=True)
class MirskyValue:
    value: int
    shift_hit: bool  # some a in the sector has a + k = 0; that term counts 0


def mirsky_sum(z, theta, k: AlgebraicInt, m, x, threads=None, backend=None) -> MirskyValue:
    """Sum of phi_K(a) phi_K(a + k) over a in m inside C(z, theta, x)."""
    s = Sector(k.field, z, parse_theta(theta), x)
    b = binned_sum(s, MODE_PHI_SHIFT, m=m, k=k, threads=threads, backend=backend)
    return MirskyValue(b.total(), b.shift_hit)


def mirsky_leading(m, k, theta, c: Optional[float] = None) -> float:
    """theta c_{m,k} / (3 sqrt|D|), the coefficient of x^6."""
    m = as_ideal(m)
    if c is None:
        c = constants.product_route(m, k)[0]
    return parse_theta(theta).radians * c / (3 * math.sqrt(m.field.abs_disc))


def exact_sum(terms) -> Fraction:
    """Exact rational sum by pairwise (binary-splitting) addition."""
    xs = list(terms)
    if not xs:
        return Fraction(0)
    while len(xs) > 1:
        nxt = [xs[i] + xs[i + 1] for i in range(0, len(xs) - 1, 2)]
        if len(xs) % 2:
            nxt.append(xs[-1])
        xs = nxt
    r = xs[0]
    return Fraction(int(r.numerator), int(r.denominator))


def normalized_mirsky_sum(z, theta, k: AlgebraicInt, m, x, threads=None, backend=None):
    """Exact sum of (phi(a)/N(a)) (phi(a+k)/N(a+k)) over a in m inside C(z, theta, x).

    Returns ``(value, shift_hit)``; a term with a + k = 0 counts 0.
    """
    s = Sector(k.field, z, parse_theta(theta), x)
    na, pa, nb, pb, hit = collected_terms(s, m=m, k=k, threads=threads, backend=backend)
    ok = nb > 0
    terms = (_Q(a * b, c * d) for a, b, c, d in zip(pa[ok].tolist(), pb[ok].tolist(), na[ok].tolist(), nb[ok].tolist()))
    return exact_sum(terms), hit


def normalized_leading(m, k, theta, c: Optional[float] = None) -> float:
    """theta c_{m,k} / sqrt|D|, the coefficient of x^2."""
    m = as_ideal(m)
    if c is None:
        c = constants.product_route(m, k)[0]
    return parse_theta(theta).radians * c / math.sqrt(m.field.abs_disc)


# ---------------------------------------------------------------------------
# reports

def parse_grid(spec: str) -> list[float]:
    """``a:b:n:log`` or ``a:b:n:lin`` -> n increasing values from a to b."""
    parts = spec.split(":")
    if len(parts) not in (3, 4):
        raise GridError(f"grid must be a:b:n[:log|lin], got {spec!r}")
    try:
        a, b, n = float(parts[0]), float(parts[1]), int(parts[2])
    except ValueError:
        raise GridError(f"bad grid {spec!r}") from None
    kind = parts[3] if len(parts) == 4 else "log"
    if not (0 < a < b) or kind not in ("log", "lin"):
        raise GridError(f"bad grid {spec!r}")
    if n < 4:
        raise GridTooSmall(f"grid needs at least 4 points, got {n}")
    xs = np.geomspace(a, b, n) if kind == "log" else np.linspace(a, b, n)
    # round to 12 significant digits so reports do not depend on libm details
    return [float(f"{x:.12g}") for x in xs]


@dataclass
class ExponentFit:
    slope: float
    ci_low: float
    ci_high: float
    points: int


def fit_error_exponent(xs, exact, predicted, drop_last_if_degenerate: bool = True) -> ExponentFit:
    """Least-squares slope of log|exact - predicted| against log x (95% interval)."""
    pts = [(x, float(abs(Fraction(e) - Fraction(p)))) for x, e, p in zip(xs, exact, predicted)]
    good = [(math.log(x), math.log(d)) for x, d in pts if d > 0]
    if len(good) < 3:
        raise GridTooSmall("fewer than 3 usable points for the exponent fit")
    lx, ld = zip(*good)
    r = stats.linregress(lx, ld)
    t = stats.t.ppf(0.975, len(good) - 2)
    return ExponentFit(float(r.slope), float(r.slope - t * r.stderr), float(r.slope + t * r.stderr), len(good))


@dataclass
class SumReport:
    theorem: str
    field: int
    parameters: dict
    x_grid: list
    exact_sums: list
    predicted: list
    ratios: list
    abs_err: list
    fit: Optional[ExponentFit]
    runtimes: list
    metadata: dict = dc_field(default_factory=dict)

    @property
    def fitted_error_exponent(self) -> Optional[float]:
        return self.fit.slope if self.fit else None

    def rows(self, decimal_exact=False):
        # CSV stays plot-ready: non-integral exact sums are written as 20-digit decimals there
        fmt = _fmt_decimal if decimal_exact else _fmt_exact
        for i, x in enumerate(self.x_grid):
            yield {
                "x": x,
                "exact": fmt(self.exact_sums[i]),
                "predicted": repr(self.predicted[i]),
                "ratio": repr(self.ratios[i]),
                "abs_err": repr(self.abs_err[i]),
            }

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.DictWriter(buf, fieldnames=["x", "exact", "predicted", "ratio", "abs_err"], lineterminator="\n")
        w.writeheader()
        for r in self.rows(decimal_exact=True):
            w.writerow(r)
        return buf.getvalue()

    def to_json(self) -> str:
        body = {
            "theorem": self.theorem,
            "field": self.field,
            "parameters": self.parameters,
            "rows": list(self.rows()),
            "fitted_error_exponent": None
            if self.fit is None
            else {"slope": self.fit.slope, "ci95": [self.fit.ci_low, self.fit.ci_high], "points": self.fit.points},
        }
        meta = dict(self.metadata)
        meta["runtime_seconds"] = self.runtimes
        return json.dumps({"report": body, "metadata": meta}, indent=2, sort_keys=True)


def _fmt_exact(v) -> str:
    if isinstance(v, Fraction) and v.denominator != 1:
        return f"{v.numerator}/{v.denominator}"
    return str(int(v))


def _fmt_decimal(v) -> str:
    if isinstance(v, Fraction) and v.denominator != 1:
        with decimal.localcontext() as ctx:
            ctx.prec = 20
            return str(decimal.Decimal(v.numerator) / v.denominator)
    return str(int(v))


THEOREMS = ("ideals", "thm1.1", "thm1.2", "thm4.1", "lemma4.5")


def convergence_report(
    which: str,
    field: FieldDescriptor,
    xs,
    m=None,
    k: Optional[AlgebraicInt] = None,
    z=None,
    theta="2pi",
    threads=None,
    backend=None,
    constant: Optional[float] = None,
) -> SumReport:
    """Exact sums, predictions and fitted error exponent over a grid of x."""
    xs = [float(x) for x in xs]
    if len(xs) < 4:
        raise GridTooSmall(f"grid needs at least 4 points, got {len(xs)}")
    if any(b <= a for a, b in zip(xs, xs[1:])):
        raise GridError("grid must be strictly increasing")
    m = as_ideal(m if m is not None else AlgebraicInt(1, 0, field))
    z = z if z is not None else AlgebraicInt(1, 0, field)
    th = parse_theta(theta)
    params = {"m": str(m.generator), "theta": str(th)}
    meta = {"backend": kernels.get_backend(backend).NAME, "threads": kernels.thread_count(threads),
            "python": platform.python_version()}
    hits = False

    if which == "ideals":
        coeff = field.rho
        per_point = lambda x: count_ideals(field, x)
        predict = lambda x: coeff * x
        params = {}
    elif which == "thm1.1":
        coeff = mertens_leading(m)
        per_point = lambda x: mertens_sum(m, x, backend)
        predict = lambda x: coeff * x * x
    elif which == "thm1.2":
        coeff = sectorial_leading(m, th)
        params["z"] = _zstr(z)
        per_point = lambda x: sectorial_mertens_sum(m, Sector(field, z, th, x), threads, backend)
        predict = lambda x: coeff * x**4
    elif which in ("thm4.1", "lemma4.5"):
        if k is None:
            raise ValueError(f"{which} needs k")
        if constant is None:
            rep = constants.mirsky_constant(m, k, 1e-12, mode="product")
            constant = rep.value_product
            meta["constant_cutoff_product"] = rep.cutoff_product
            meta["constant_error_bound"] = rep.tail_bound_product
        params.update({"k": str(k), "z": _zstr(z), "c_mk": constant})
        if which == "thm4.1":
            coeff = mirsky_leading(m, k, th, constant)

            def per_point(x):
                r = mirsky_sum(z, th, k, m, x, threads, backend)
                nonlocal hits
                hits |= r.shift_hit
                return r.value

            predict = lambda x: coeff * x**6
        else:
            coeff = normalized_leading(m, k, th, constant)

            def per_point(x):
                v, h = normalized_mirsky_sum(z, th, k, m, x, threads, backend)
                nonlocal hits
                hits |= h
                return v

            predict = lambda x: coeff * x * x
    else:
        raise ValueError(f"unknown theorem {which!r}; expected one of {THEOREMS}")

    exact, pred, times = [], [], []
    for x in xs:
        t0 = time.perf_counter()
        exact.append(per_point(x))
        times.append(time.perf_counter() - t0)
        pred.append(predict(x))
    ratios = [float(e) / p if p else math.nan for e, p in zip(exact, pred)]
    errs = [float(abs(Fraction(e) - Fraction(p))) for e, p in zip(exact, pred)]
    try:
        fit = fit_error_exponent(xs, exact, pred)
    except GridTooSmall:
        fit = None
    params["leading_coefficient"] = coeff
    if which in ("thm4.1", "lemma4.5"):
        params["shift_hit"] = hits
    return SumReport(which, field.discriminant, params, xs, exact, pred, ratios, errs, fit, times, meta)


def _zstr(z) -> str:
    if isinstance(z, AlgebraicInt):
        return str(z)
    z = complex(z)
    return f"{z.real!r},{z.imag!r}"
