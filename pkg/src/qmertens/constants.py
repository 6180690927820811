"""The Mirsky constant c_{m,k} and the auxiliary functions behind its Euler product.

Two independent evaluations are provided:

* the double series over squarefree ideals (b, c) with
  (b, c) | h and (c (b, m), m (b, c)) | h b, summed by direct valuation
  arithmetic for every pair with N(b), N(c) <= X;
* the Euler product with local factors built from kappa and kappa',
  evaluated exactly over primes of norm <= P, the remaining primes being
  folded into powers of zeta_K(2) and zeta_K(3).

h = k O_K may be the zero ideal, which every ideal divides.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field as dc_field
from fractions import Fraction
from functools import lru_cache
from typing import Optional, Sequence

import mpmath
import numpy as np

from . import kernels, ring
from .fields import FieldDescriptor
from .ideals import IdealRep, as_ideal, divisors, norm_counts, prime_ideal, zeta_mp, _primes_upto
from .ring import AlgebraicInt, PrimeElement

ZERO_VALUATION = 1 << 40  # stands for v_p(0)


@dataclass(frozen=True)
class ShiftIdeal:
    """h = k O_K, possibly the zero ideal."""

    k: AlgebraicInt
    ideal: Optional[IdealRep] = dc_field(default=None, compare=False)

    def __post_init__(self):
        if self.k and self.ideal is None:
            object.__setattr__(self, "ideal", IdealRep.from_element(self.k))

    @classmethod
    def of(cls, k) -> "ShiftIdeal":
        if isinstance(k, ShiftIdeal):
            return k
        if isinstance(k, IdealRep):
            return cls(k.generator, k)
        return cls(k)

    @property
    def field(self) -> FieldDescriptor:
        return self.k.field

    @property
    def is_zero(self) -> bool:
        return not self.k

    def divisible_by(self, a: IdealRep) -> bool:
        return self.is_zero or a.divides(self.ideal)

    def valuation(self, p: PrimeElement) -> int:
        return ZERO_VALUATION if self.is_zero else self.ideal.valuation(p)

    def primes(self) -> list[PrimeElement]:
        return [] if self.is_zero else self.ideal.primes()

    def times(self, a: IdealRep) -> "ShiftIdeal":
        if self.is_zero:
            return self
        return ShiftIdeal.of(self.ideal * a)


# ---------------------------------------------------------------------------
# psi_b, chi_b, chi*_b

def psi_b(c: IdealRep, b: IdealRep, m: IdealRep) -> IdealRep:
    """(c, (m / (b, m)) (b, c))."""
    return c.gcd((m / b.gcd(m)) * b.gcd(c))


def chi_b(c: IdealRep, b: IdealRep, h) -> int:
    return int(ShiftIdeal.of(h).divisible_by(c.gcd(b)))


def chi_b_star(c: IdealRep, b: IdealRep, m: IdealRep, h) -> int:
    target = ShiftIdeal.of(h).times(b / b.gcd(m))
    return int(target.divisible_by(psi_b(c, b, m)))


# ---------------------------------------------------------------------------
# prime ideals and squarefree ideals by norm

@lru_cache(maxsize=32)
def _prime_ideals(field: FieldDescriptor, P: int) -> tuple[PrimeElement, ...]:
    out = []
    for p in _primes_upto(P).tolist():
        for pe in ring.primes_above(field, p):
            if pe.norm <= P:
                out.append(pe)
    out.sort(key=PrimeElement.sort_key)
    return tuple(out)


def prime_ideals_upto(field: FieldDescriptor, P: int) -> list[PrimeElement]:
    return list(_prime_ideals(field, int(P)))


@dataclass
class SquarefreeList:
    """Squarefree ideals of norm <= X in CSR form over prime ids.

    Ideal i has primes pid[off[i]:off[i+1]] (sorted ids), norm ``norms[i]``
    and Moebius value ``signs[i]``.
    """

    primes: list
    off: np.ndarray
    pid: np.ndarray
    norms: np.ndarray
    signs: np.ndarray

    def __len__(self):
        return len(self.norms)

    def ideal(self, field: FieldDescriptor, i: int) -> IdealRep:
        ps = self.pid[self.off[i] : self.off[i + 1]].tolist()
        return IdealRep.from_exponents(field, {self.primes[j]: 1 for j in ps})


@lru_cache(maxsize=16)
def squarefree_ideals(field: FieldDescriptor, X: int) -> SquarefreeList:
    primes = prime_ideals_upto(field, X)
    norms_p = [p.norm for p in primes]
    rows = []

    def extend(start, norm, ids):
        rows.append((norm, tuple(ids)))
        for j in range(start, len(primes)):
            n = norm * norms_p[j]
            if n > X:
                break
            ids.append(j)
            extend(j + 1, n, ids)
            ids.pop()

    extend(0, 1, [])
    rows.sort()
    lens = [len(r[1]) for r in rows]
    off = np.zeros(len(rows) + 1, dtype=np.int64)
    off[1:] = np.cumsum(lens)
    pid = np.array([j for r in rows for j in r[1]], dtype=np.int32)
    norms = np.array([r[0] for r in rows], dtype=np.float64)
    signs = np.array([-1 if n % 2 else 1 for n in lens], dtype=np.int8)
    return SquarefreeList(primes, off, pid, norms, signs)


# ---------------------------------------------------------------------------
# zeta helpers for Euler-product tails

def _partial_log(norms: Sequence[int], s: float) -> float:
    return math.fsum(math.log1p(-(n ** -s)) for n in norms)


def _zeta_remainder(field: FieldDescriptor, s, norms) -> mpmath.mpf:
    """prod over primes of norm > P of (1 - N^-s)^-1 = zeta_K(s) prod_{N <= P}(1 - N^-s)."""
    return zeta_mp(field, s) * mpmath.exp(_partial_log(norms, float(s)))


def _tail_factor(field: FieldDescriptor, norms, e2: int, e3: int):
    """prod_{N(p) > P} f(N(p)) for f(N) = (1 - N^-2)^e2 (1 - N^-3)^-e3 r(N), |r - 1| <= 4/N^4.

    Returns the value with r replaced by 1, and the relative error bound.
    """
    Z2 = _zeta_remainder(field, 2, norms)
    Z3 = _zeta_remainder(field, 3, norms)
    Z4 = _zeta_remainder(field, 4, norms)
    # sum_{N > P} N^-4 <= log Z4; |log r| <= 2 |r - 1| once |r - 1| <= 1/2
    rel = math.expm1(8 * float(mpmath.log(Z4)))
    return Z2 ** (-e2) * Z3 ** e3, rel


# ---------------------------------------------------------------------------
# local factors

def kappa(p: PrimeElement, m: IdealRep, h) -> Fraction:
    h = ShiftIdeal.of(h)
    n_pm = p.norm if m.valuation(p) else 1
    if m.valuation(p) == 0 or h.valuation(p) > 0:
        return 1 / (1 - Fraction(n_pm, p.norm**2))
    return Fraction(1)


def kappa_prime(p: PrimeElement, h) -> Fraction:
    h = ShiftIdeal.of(h)
    return 1 - Fraction(1, p.norm) if h.valuation(p) > 0 else Fraction(1)


def w_p(p: PrimeElement, m: IdealRep, h) -> Fraction:
    n_pm = p.norm if m.valuation(p) else 1
    return kappa(p, m, h) * kappa_prime(p, h) * Fraction(n_pm, p.norm**2)


def _local(Np: int, div_m: bool, div_h: bool) -> Fraction:
    n_pm = Np if div_m else 1
    q = Fraction(n_pm, Np * Np)
    if not div_m or div_h:  # (p, m) | h
        f1 = 1 - q
        kap = 1 / f1
    else:
        f1 = Fraction(1)
        kap = Fraction(1)
    kap2 = 1 - Fraction(1, Np) if div_h else 1
    return f1 * (1 - kap * kap2 * q)


def local_factor(p: PrimeElement, m: IdealRep, h) -> Fraction:
    """The factor of prime p in the Euler product for c_{m,k}."""
    h = ShiftIdeal.of(h)
    return _local(p.norm, m.valuation(p) > 0, h.valuation(p) > 0)


def _special_primes(m: IdealRep, h: ShiftIdeal) -> list[PrimeElement]:
    seen = {}
    for p in m.primes() + h.primes():
        seen[(p.generator.u, p.generator.v)] = p
    return sorted(seen.values(), key=PrimeElement.sort_key)


def _exact_product(factors) -> mpmath.mpf:
    nums = [f.numerator for f in factors]
    dens = [f.denominator for f in factors]
    return mpmath.mpf(math.prod(nums)) / mpmath.mpf(math.prod(dens))


def _product_value(m: IdealRep, h: ShiftIdeal, P: int, local, generic, e2: int, e3: int):
    field = m.field
    primes = prime_ideals_upto(field, P)
    norms = [p.norm for p in primes]
    special = _special_primes(m, h)
    keys = {(p.generator.u, p.generator.v) for p in special}
    factors = []
    for p in primes:
        if (p.generator.u, p.generator.v) in keys:
            continue
        factors.append(generic(p.norm))
    for p in special:
        factors.append(local(p))
    with mpmath.workdps(30):
        head = _exact_product(factors)
        tail, rel = _tail_factor(field, norms, e2, e3)
        big = [generic(p.norm) for p in special if p.norm > P]
        if big:
            tail = tail / _exact_product(big)
        value = head * tail
    return float(value), abs(float(value)) * rel + 1e-15


def _generic_factor(h: ShiftIdeal):
    if h.is_zero:
        return lambda N: 1 - Fraction(2, N * N) + Fraction(1, N**3)
    return lambda N: 1 - Fraction(2, N * N)


def product_route(m, k, P: int = 10**4):
    """c_{m,k} from the Euler product; returns (value, error bound)."""
    m = as_ideal(m)
    h = ShiftIdeal.of(k)
    value, err = _product_value(
        m, h, P, lambda p: local_factor(p, m, h), _generic_factor(h), 2, 1 if h.is_zero else 0
    )
    scale = 1 / m.norm
    return value * scale, err * scale


def closed_form_unit_modulus(k, P: int = 10**4):
    """c_{O_K,k} = prod_p (1 - 2/N^2) prod_{p | h} (1 + 1/(N (N^2 - 2))), in floating point."""
    h = ShiftIdeal.of(k)
    field = h.field
    primes = prime_ideals_upto(field, P)
    norms = [p.norm for p in primes]
    with mpmath.workdps(30):
        base = mpmath.exp(mpmath.fsum(mpmath.log(1 - mpmath.mpf(2) / (n * n)) for n in norms))
        tail, rel = _tail_factor(field, norms, 2, 0)
        value = base * tail
        if h.is_zero:
            extra = mpmath.exp(mpmath.fsum(mpmath.log(1 + 1 / (mpmath.mpf(n) * (n * n - 2))) for n in norms))
            # remaining primes: prod (1 + 1/(N^3 - 2N)) = Z3 * r', |r' - 1| <= 4/N^4
            extra *= _zeta_remainder(field, 3, norms)
            value *= extra
        else:
            for p in h.primes():
                n = mpmath.mpf(p.norm)
                value *= 1 + 1 / (n * (n * n - 2))
    return float(value), abs(float(value)) * (2 * rel if h.is_zero else rel) + 1e-15


# ---------------------------------------------------------------------------
# the double series

def _pair_inputs(m: IdealRep, h: ShiftIdeal, X: int):
    field = m.field
    sq = squarefree_ideals(field, X)
    vm = np.array([m.valuation(p) for p in sq.primes], dtype=np.int64)
    eta = np.array([h.valuation(p) for p in sq.primes], dtype=np.int64)
    pnorm = np.array([p.norm for p in sq.primes], dtype=np.float64)
    return sq, vm, eta, pnorm


def series_route(m, k, X: int = 10**4, backend=None) -> float:
    """Truncated double series: all squarefree b, c with N(b), N(c) <= X."""
    m = as_ideal(m)
    h = ShiftIdeal.of(k)
    sq, vm, eta, pnorm = _pair_inputs(m, h, X)
    impl = kernels.get_backend(backend)
    e = np.ones(len(sq.pid), dtype=np.int32)
    return impl.pair_sum(
        sq.off, sq.pid, e, sq.norms, sq.signs, sq.off, sq.pid, e, sq.norms, sq.signs,
        vm, eta, pnorm, float(m.norm), 0.0,
    )


@lru_cache(maxsize=64)
def _ideal_power_sums(field: FieldDescriptor, X: int):
    counts = norm_counts(field, X) // field.unit_count
    n = np.arange(X + 1, dtype=np.float64)
    n[0] = 1.0
    S2 = np.cumsum(counts / n**2)
    S3 = np.cumsum(counts / n**3)
    return counts, S2, S3


def series_tail_bound(m, k, X: int) -> float:
    """Bound on the terms of the series with N(b) > X or N(c) > X.

    Writing d = (b, c), b = d b', c = d c' and N(g) <= N(m) N(d), the tail is
    at most sum_d N(d)^-3 * 2 zeta_K(2) T2(X / N(d)) with
    T2(y) = sum_{N(a) > y} N(a)^-2, d running over divisors of h (or over
    all ideals when h = 0).
    """
    m = as_ideal(m)
    h = ShiftIdeal.of(k)
    field = m.field
    counts, S2, S3 = _ideal_power_sums(field, X)
    z2 = float(zeta_mp(field, 2))
    z3 = float(zeta_mp(field, 3))

    def T2(y):
        return max(z2 - S2[min(int(y), X)], 0.0) + 1e-14 if y >= 1 else z2

    if h.is_zero:
        terms = [counts[j] * j**-3.0 * T2(X / j) for j in range(1, X + 1) if counts[j]]
        total = math.fsum(terms) + (z3 - S3[X] + 1e-14) * z2
    else:
        total = math.fsum(d.norm**-3.0 * T2(X / d.norm) for d in divisors(h.ideal))
    return 2 * z2 * total + 1e-12


def crude_tail_bound(field: FieldDescriptor, X: float) -> float:
    """2 zeta_K(2) zeta_K(5/2) zeta_K(3/2) / sqrt(X)."""
    return 2 * _zeta_triple(field) / math.sqrt(X)


def _zeta_triple(field: FieldDescriptor) -> float:
    return float(zeta_mp(field, 2) * zeta_mp(field, mpmath.mpf(5) / 2) * zeta_mp(field, mpmath.mpf(3) / 2))


def tail_sum(m, k, x: float, X: int = 2000, backend=None):
    """Z_{m,h}(x) over squarefree b, c with x <= N(b) <= X, N(c) <= X, and the analytic bound."""
    if x < 1:
        raise ValueError("x must be >= 1")
    m = as_ideal(m)
    h = ShiftIdeal.of(k)
    sq, vm, eta, pnorm = _pair_inputs(m, h, X)
    impl = kernels.get_backend(backend)
    e = np.ones(len(sq.pid), dtype=np.int32)
    plus = np.ones(len(sq), dtype=np.int8)
    z = impl.pair_sum(
        sq.off, sq.pid, e, sq.norms, plus, sq.off, sq.pid, e, sq.norms, plus,
        vm, eta, pnorm, float(m.norm), float(x),
    )
    return z, _zeta_triple(m.field) / math.sqrt(x)


# ---------------------------------------------------------------------------
# C*(b)

def c_star(b, m, k, mode: str = "euler", X: int = 10**4):
    """C*(b) = sum over squarefree c of mu(c)/N(c)^2 chi_b(c) chi*_b(c) N(psi_b(c)).

    ``mode="series"`` sums c with N(c) <= X and returns (value, tail bound);
    ``mode="euler"`` multiplies the local factors at the primes dividing
    b m h and divides by zeta_K(2) for the rest (exact up to zeta precision).
    """
    b, m = as_ideal(b), as_ideal(m)
    h = ShiftIdeal.of(k)
    field = b.field
    if mode == "series":
        sq = squarefree_ideals(field, X)
        terms = []
        for i in range(len(sq)):
            c = sq.ideal(field, i)
            if chi_b(c, b, h) and chi_b_star(c, b, m, h):
                terms.append(int(sq.signs[i]) * psi_b(c, b, m).norm / sq.norms[i] ** 2)
        counts, S2, _ = _ideal_power_sums(field, X)
        # N(psi_b(c)) divides N((c, b m)) <= N(b m)
        tail = (b * m).norm * (float(zeta_mp(field, 2)) - S2[X] + 1e-14)
        return math.fsum(terms), tail
    if mode == "euler":
        special = {}
        for p in b.primes() + m.primes() + h.primes():
            special[(p.generator.u, p.generator.v)] = p
        factors = []
        for p in special.values():
            P = prime_ideal(p)
            if chi_b(P, b, h) and chi_b_star(P, b, m, h):
                f = 1 - Fraction(psi_b(P, b, m).norm, p.norm**2)
            else:
                f = Fraction(1)
            factors.append(f / (1 - Fraction(1, p.norm**2)))
        with mpmath.workdps(30):
            v = _exact_product(factors) / zeta_mp(field, 2)
        return float(v), 1e-15
    raise ValueError(f"unknown mode {mode!r}")


# ---------------------------------------------------------------------------
# reports

@dataclass
class ConstantReport:
    value_series: Optional[float]
    value_product: Optional[float]
    cutoff_series: Optional[int]
    cutoff_product: Optional[int]
    tail_bound_series: Optional[float]
    tail_bound_product: Optional[float]
    tail_bound_series_crude: Optional[float] = None
    value_closed_form: Optional[float] = None
    tolerance: Optional[float] = None

    @property
    def value(self) -> float:
        return self.value_product if self.value_product is not None else self.value_series

    @property
    def series_within_tolerance(self) -> Optional[bool]:
        if self.tail_bound_series is None or self.tolerance is None:
            return None
        return self.tail_bound_series < self.tolerance

    def consistent(self) -> bool:
        if self.value_series is None or self.value_product is None:
            return True
        return abs(self.value_series - self.value_product) <= self.tail_bound_series + self.tail_bound_product

    def as_dict(self) -> dict:
        d = {k: getattr(self, k) for k in self.__dataclass_fields__}
        d["series_within_tolerance"] = self.series_within_tolerance
        d["consistent"] = self.consistent()
        return d


def product_cutoff_for(field: FieldDescriptor, m, k, tolerance: float) -> int:
    P = 100
    while True:
        _, err = product_route(m, k, P)
        if err < tolerance / 2 or P >= 10**6:
            return P
        P *= 4


def mirsky_constant(
    m,
    k,
    tolerance: float = 1e-8,
    mode: str = "both",
    series_cutoff: int = 10**4,
    product_cutoff: Optional[int] = None,
    backend=None,
) -> ConstantReport:
    """c_{m,k} by the double series and/or the Euler product.

    The product cutoff grows until its certified error is below
    tolerance/2. The series cutoff is fixed (its tail decays only like 1/X),
    and the report states whether its bound meets the tolerance.
    """
    if tolerance <= 0:
        raise ValueError("tolerance must be positive")
    m = as_ideal(m)
    h = ShiftIdeal.of(k)
    field = m.field
    rep = ConstantReport(None, None, None, None, None, None, tolerance=tolerance)
    if mode in ("both", "product"):
        P = product_cutoff or product_cutoff_for(field, m, h, tolerance)
        rep.value_product, rep.tail_bound_product = product_route(m, h, P)
        rep.cutoff_product = P
        if m.is_unit():
            rep.value_closed_form = closed_form_unit_modulus(h, P)[0]
    if mode in ("both", "series"):
        X = series_cutoff
        rep.value_series = series_route(m, h, X, backend)
        rep.cutoff_series = X
        rep.tail_bound_series = series_tail_bound(m, h, X)
        rep.tail_bound_series_crude = crude_tail_bound(field, X)
    if mode not in ("both", "product", "series"):
        raise ValueError(f"unknown mode {mode!r}")
    return rep


def lower_bound_expression(m, k, P: int = 10**4) -> float:
    """(1/N(m)) prod_{(p,m)|h}(1 - N((p,m))/N^2) prod_{N >= 3}(1 - 2N((p,m))/N^2) prod_{N = 2}(1 - w_p)."""
    m = as_ideal(m)
    h = ShiftIdeal.of(k)

    def local(p):
        n_pm = p.norm if m.valuation(p) else 1
        f = Fraction(1)
        if not m.valuation(p) or h.valuation(p):
            f *= 1 - Fraction(n_pm, p.norm**2)
        if p.norm == 2:
            return f * (1 - w_p(p, m, h))
        return f * (1 - Fraction(2 * n_pm, p.norm**2))

    def generic(N):
        return (1 - Fraction(1, N * N)) * (1 - Fraction(2, N * N))

    # generic primes of norm 2 must use the w_p form too
    field = m.field
    head_fix = []
    for p in prime_ideals_upto(field, 2):
        if all(q != p for q in _special_primes(m, h)):
            head_fix.append(local(p) / generic(p.norm))
    value, _ = _product_value(m, h, P, local, generic, 3, 0)
    with mpmath.workdps(30):
        fix = float(_exact_product(head_fix)) if head_fix else 1.0
    return value * fix / m.norm


def c_prime_sampled(m, ks, P: int = 2000) -> dict:
    """min over a finite sample of k of c_{m,k} and of the explicit lower bound."""
    m = as_ideal(m)
    values = [product_route(m, k, P)[0] for k in ks]
    bounds = [lower_bound_expression(m, k, P) for k in ks]
    return {"min_c": min(values), "min_lower_bound": min(bounds), "sample_size": len(values)}
