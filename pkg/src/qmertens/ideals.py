"""Ideal-level arithmetic functions of O_K.

Since O_K is principal, a nonzero ideal is stored as its canonical generator
together with the generator's prime factorization. Divisibility, gcd and lcm
of ideals are computed on exponent vectors.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Union

import mpmath
import numpy as np

from . import ring
from .fields import FieldDescriptor
from .ring import AlgebraicInt, PrimeElement


class DomainError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class IdealRep:
    generator: AlgebraicInt
    factors: tuple[tuple[PrimeElement, int], ...]

    @classmethod
    def from_element(cls, x: AlgebraicInt) -> "IdealRep":
        f = ring.factor(x)
        return cls(ring.canonical(x), f.factors)

    @classmethod
    def unit_ideal(cls, field: FieldDescriptor) -> "IdealRep":
        return cls(AlgebraicInt(1, 0, field), ())

    @classmethod
    def from_exponents(cls, field: FieldDescriptor, exps: dict[PrimeElement, int]) -> "IdealRep":
        items = sorted(((p, e) for p, e in exps.items() if e > 0), key=lambda t: t[0].sort_key())
        g = AlgebraicInt(1, 0, field)
        for p, e in items:
            g = g * p.generator ** e
        return cls(ring.canonical(g), tuple(items))

    @property
    def field(self) -> FieldDescriptor:
        return self.generator.field

    @property
    def norm(self) -> int:
        return self.generator.norm()

    def exponents(self) -> dict[PrimeElement, int]:
        return dict(self.factors)

    def primes(self) -> list[PrimeElement]:
        return [p for p, _ in self.factors]

    def valuation(self, p: PrimeElement) -> int:
        for q, e in self.factors:
            if q == p:
                return e
        return 0

    def is_unit(self) -> bool:
        return not self.factors

    def __eq__(self, other):
        return isinstance(other, IdealRep) and self.generator == other.generator

    def __hash__(self):
        return hash((self.generator.u, self.generator.v, self.field.discriminant))

    def __repr__(self):
        return f"IdealRep({self.generator})"

    def __mul__(self, other: "IdealRep") -> "IdealRep":
        e = self.exponents()
        for p, k in other.factors:
            e[p] = e.get(p, 0) + k
        return IdealRep.from_exponents(self.field, e)

    def __pow__(self, n: int) -> "IdealRep":
        return IdealRep.from_exponents(self.field, {p: e * n for p, e in self.factors})

    def divides(self, other: "IdealRep") -> bool:
        """self | other, i.e. other is contained in self."""
        e = other.exponents()
        return all(e.get(p, 0) >= k for p, k in self.factors)

    def __truediv__(self, other: "IdealRep") -> "IdealRep":
        if not other.divides(self):
            raise ring.NotDivisible(f"{other} does not divide {self}")
        e = self.exponents()
        for p, k in other.factors:
            e[p] -= k
        return IdealRep.from_exponents(self.field, e)

    def gcd(self, other: "IdealRep") -> "IdealRep":
        e = other.exponents()
        return IdealRep.from_exponents(self.field, {p: min(k, e.get(p, 0)) for p, k in self.factors})

    def lcm(self, other: "IdealRep") -> "IdealRep":
        e = self.exponents()
        for p, k in other.factors:
            e[p] = max(e.get(p, 0), k)
        return IdealRep.from_exponents(self.field, e)

    def coprime(self, other: "IdealRep") -> bool:
        mine = set(self.primes())
        return not any(p in mine for p in other.primes())


IdealLike = Union[IdealRep, AlgebraicInt]


def as_ideal(a: IdealLike) -> IdealRep:
    if isinstance(a, IdealRep):
        return a
    return IdealRep.from_element(a)


def prime_ideal(p: PrimeElement) -> IdealRep:
    return IdealRep(p.generator, ((p, 1),))


def euler_phi(a: IdealLike) -> int:
    a = as_ideal(a)
    value = Fraction(a.norm)
    for p, _ in a.factors:
        value *= Fraction(p.norm - 1, p.norm)
    if value.denominator != 1:
        raise AssertionError(f"non-integral phi for {a}")  # pragma: no cover
    return value.numerator


def moebius(a: IdealLike) -> int:
    a = as_ideal(a)
    if any(e > 1 for _, e in a.factors):
        return 0
    return -1 if len(a.factors) % 2 else 1


def divisors(a: IdealLike) -> list[IdealRep]:
    a = as_ideal(a)
    primes = [p for p, _ in a.factors]
    ranges = [range(e + 1) for _, e in a.factors]
    out = [IdealRep.from_exponents(a.field, dict(zip(primes, es))) for es in itertools.product(*ranges)]
    out.sort(key=lambda d: (d.norm, d.generator.u, d.generator.v))
    return out


def c_m(m: IdealLike) -> Fraction:
    m = as_ideal(m)
    value = Fraction(m.norm)
    for p, _ in m.factors:
        value *= 1 + Fraction(1, p.norm)
    return value


def ideals_up_to(field: FieldDescriptor, X: int) -> list[IdealRep]:
    """All nonzero ideals of norm <= X, ordered by (norm, generator)."""
    out = []
    for u, v in lattice_points(field, X):
        x = AlgebraicInt(u, v, field)
        if ring.is_canonical(x):
            out.append(IdealRep.from_element(x))
    out.sort(key=lambda d: (d.norm, d.generator.u, d.generator.v))
    return out


def lattice_points(field: FieldDescriptor, X: int):
    """Row-major iteration over nonzero (u, v) with norm <= X."""
    absD, B = field.abs_disc, field.B
    V = math.isqrt(4 * X // absD) if X > 0 else -1
    for v in range(-V, V + 1):
        s = math.isqrt(4 * X - absD * v * v)
        for u in range(-((s + B * v) // 2), (s - B * v) // 2 + 1):
            if u or v:
                yield u, v


# ---------------------------------------------------------------------------
# Dedekind zeta

def _kronecker_character(field: FieldDescriptor) -> list[int]:
    q = field.abs_disc
    return [0] + [ring.kronecker(field.discriminant, a) for a in range(1, q + 1)]


def _zeta_hurwitz(field: FieldDescriptor, s, dps: int) -> mpmath.mpf:
    q = field.abs_disc
    chi = _kronecker_character(field)
    with mpmath.workdps(dps):
        s = mpmath.mpf(s)
        L = mpmath.fsum(chi[a] * mpmath.zeta(s, mpmath.mpf(a) / q) for a in range(1, q + 1) if chi[a])
        return +(mpmath.zeta(s) * L / mpmath.mpf(q) ** s)


@lru_cache(maxsize=256)
def zeta_mp(field: FieldDescriptor, s, dps: int = 40) -> mpmath.mpf:
    """High-precision zeta_K(s) = zeta(s) L(s, chi_D) via Hurwitz zeta values."""
    if s <= 1:
        raise DomainError("zeta_K(s) requires s > 1")
    return _zeta_hurwitz(field, s, dps)


def _primes_upto(n: int) -> np.ndarray:
    sieve = np.ones(n + 1, dtype=bool)
    sieve[:2] = False
    for p in range(2, math.isqrt(n) + 1):
        if sieve[p]:
            sieve[p * p :: p] = False
    return np.flatnonzero(sieve)


def _splitting_array(field: FieldDescriptor, primes: np.ndarray) -> np.ndarray:
    chi = np.array(_kronecker_character(field), dtype=np.int64)
    return chi[primes % field.abs_disc]


def zeta_euler_product(field: FieldDescriptor, s: float, tolerance: float, max_cutoff: int = 1 << 25):
    """Truncated Euler product over rational primes with a certified tail.

    Returns ``(value, cutoff, tail_bound)``. The tail of log zeta_K over
    primes p > P is at most 2 P^(1-s) / ((s-1)(1-P^-s)).
    """
    if s <= 1:
        raise DomainError("zeta_K(s) requires s > 1")
    P = 1000
    while True:
        ps = _primes_upto(P)
        chi = _splitting_array(field, ps)
        pf = ps.astype(float)
        t = pf ** (-s)
        logs = np.where(chi == 1, -2 * np.log1p(-t), np.where(chi == 0, -np.log1p(-t), -np.log1p(-t * t)))
        value = math.exp(math.fsum(logs.tolist()))
        bound = 2 * P ** (1 - s) / ((s - 1) * (1 - P ** (-s)))
        tail = value * math.expm1(bound)
        if tail < tolerance / 2:
            return value, P, tail
        if P >= max_cutoff:
            raise DomainError(f"tolerance {tolerance} unreachable with prime cutoff {max_cutoff}")
        # tail ~ P^(1-s): jump straight to the needed size
        need = (4 * value / ((s - 1) * tolerance)) ** (1 / (s - 1))
        P = int(min(max_cutoff, max(2 * P, need * 1.1)))


def zeta_ideal_sum(field: FieldDescriptor, s: float, X: int) -> float:
    """Partial sum of N(a)^-s over ideals with N(a) <= X (lattice-point count / w_K)."""
    counts = norm_counts(field, X)
    n = np.arange(1, X + 1, dtype=float)
    return math.fsum((counts[1:] * n ** (-s)).tolist()) / field.unit_count


def norm_counts(field: FieldDescriptor, X: int) -> np.ndarray:
    """counts[n] = number of elements of norm n, for 0 <= n <= X."""
    absD, B, C = field.abs_disc, field.B, field.C
    V = math.isqrt(4 * X // absD)
    counts = np.zeros(X + 1, dtype=np.int64)
    for v in range(-V, V + 1):
        s = math.isqrt(4 * X - absD * v * v)
        u = np.arange(-((s + B * v) // 2), (s - B * v) // 2 + 1, dtype=np.int64)
        np.add.at(counts, u * u + B * u * v + C * v * v, 1)
    counts[0] = 0
    return counts


def dedekind_zeta(field: FieldDescriptor, s: float, tolerance: float = 1e-12, method: str = "hurwitz") -> float:
    """zeta_K(s) for real s > 1.

    ``method="hurwitz"`` evaluates zeta(s) L(s, chi_D) with L written through
    Hurwitz zeta values; ``method="euler"`` multiplies local factors over
    rational primes until the certified tail drops below tolerance/2.
    """
    if s <= 1:
        raise DomainError("zeta_K(s) requires s > 1")
    if tolerance <= 0:
        raise ValueError("tolerance must be positive")
    if method == "hurwitz":
        dps = max(30, int(-math.log10(tolerance)) + 15)
        return float(_zeta_hurwitz(field, s, dps))
    if method == "euler":
        return zeta_euler_product(field, s, tolerance)[0]
    raise ValueError(f"unknown method {method!r}")


# ---------------------------------------------------------------------------
# phi tables for large sums

class PhiTable:
    """phi_K(a) for every element a with N(a) <= X, indexed by coordinates.

    ``phi[v + V, u + U]`` holds phi_K(u + v*w); cells outside the norm disk
    hold 0. Built by a two-dimensional Eratosthenes sieve in the selected
    kernel backend.
    """

    def __init__(self, field: FieldDescriptor, X: int, backend=None):
        from . import kernels

        impl = kernels.get_backend(backend)
        self.field = field
        self.X = int(X)
        self.phi, self.V, self.U, primes = impl.phi_sieve(field.B, field.C, self.X)
        self.prime_coords = primes
        self.backend = impl.NAME

    def __contains__(self, x: AlgebraicInt) -> bool:
        return 0 < x.norm() <= self.X

    def __call__(self, x: AlgebraicInt) -> int:
        if x.norm() <= self.X:
            return int(self.phi[x.v + self.V, x.u + self.U])
        return euler_phi(x)

    def prime_elements(self) -> list[AlgebraicInt]:
        return [AlgebraicInt(int(u), int(v), self.field) for u, v in self.prime_coords]


_TABLES: dict = {}


def phi_table(field: FieldDescriptor, X: int, backend=None) -> PhiTable:
    """Cached PhiTable covering at least norm X."""
    from . import kernels

    name = kernels.get_backend(backend).NAME
    key = (field.discriminant, name)
    t = _TABLES.get(key)
    if t is None or t.X < X:
        # grow geometrically so that grids of increasing x reuse one table
        size = X if t is None else max(X, int(t.X * 1.5))
        t = PhiTable(field, size, backend)
        _TABLES[key] = t
    return t


def clear_tables():
    _TABLES.clear()
