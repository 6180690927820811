"""Exact arithmetic in the ring of integers O_K = Z[w].

Elements are integer pairs (u, v) standing for u + v*w. Since w satisfies
w^2 = B*w - C, products stay integral without any floating point.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from functools import lru_cache
from typing import Optional

from sympy import factorint, isprime
from sympy.ntheory import sqrt_mod

from .fields import FieldDescriptor


class FieldMismatch(ValueError):
    pass


class NotDivisible(ArithmeticError):
    pass


class ZeroInput(ValueError):
    pass


class BothZero(ValueError):
    pass


class ZeroModulus(ValueError):
    pass


class NotPrime(ValueError):
    pass


@dataclass(frozen=True, slots=True)
class AlgebraicInt:
    u: int
    v: int
    field: FieldDescriptor

    def _coerce(self, other) -> "AlgebraicInt":
        if isinstance(other, AlgebraicInt):
            if other.field is not self.field:
                raise FieldMismatch(f"{self.field} vs {other.field}")
            return other
        if isinstance(other, int):
            return AlgebraicInt(other, 0, self.field)
        return NotImplemented

    def __add__(self, other):
        o = self._coerce(other)
        if o is NotImplemented:
            return o
        return AlgebraicInt(self.u + o.u, self.v + o.v, self.field)

    __radd__ = __add__

    def __sub__(self, other):
        o = self._coerce(other)
        if o is NotImplemented:
            return o
        return AlgebraicInt(self.u - o.u, self.v - o.v, self.field)

    def __rsub__(self, other):
        o = self._coerce(other)
        if o is NotImplemented:
            return o
        return o - self

    def __neg__(self):
        return AlgebraicInt(-self.u, -self.v, self.field)

    def __mul__(self, other):
        o = self._coerce(other)
        if o is NotImplemented:
            return o
        B, C = self.field.B, self.field.C
        a, b, c, d = self.u, self.v, o.u, o.v
        bd = b * d
        return AlgebraicInt(a * c - C * bd, a * d + b * c + B * bd, self.field)

    __rmul__ = __mul__

    def __pow__(self, n: int):
        if n < 0:
            raise ValueError("negative exponent")
        result = self.one()
        base = self
        while n:
            if n & 1:
                result = result * base
            base = base * base
            n >>= 1
        return result

    def __bool__(self):
        return self.u != 0 or self.v != 0

    def __complex__(self):
        return complex(self.u + self.v * self.field.B / 2, self.v * math.sqrt(self.field.abs_disc) / 2)

    def __str__(self):
        return format_element(self)

    def __repr__(self):
        return f"AlgebraicInt({format_element(self)}, D={self.field.discriminant})"

    def one(self) -> "AlgebraicInt":
        return AlgebraicInt(1, 0, self.field)

    def conjugate(self) -> "AlgebraicInt":
        # conj(w) = B - w
        return AlgebraicInt(self.u + self.field.B * self.v, -self.v, self.field)

    def norm(self) -> int:
        return self.field.norm(self.u, self.v)

    def divisible_by(self, other) -> bool:
        o = self._coerce(other)
        n = o.norm()
        if n == 0:
            return not self
        t = self * o.conjugate()
        return t.u % n == 0 and t.v % n == 0

    def exact_div(self, other) -> "AlgebraicInt":
        o = self._coerce(other)
        n = o.norm()
        if n == 0:
            raise NotDivisible("division by zero")
        t = self * o.conjugate()
        qu, ru = divmod(t.u, n)
        qv, rv = divmod(t.v, n)
        if ru or rv:
            raise NotDivisible(f"{o} does not divide {self}")
        return AlgebraicInt(qu, qv, self.field)

    def key(self) -> tuple[int, int]:
        return (self.u, self.v)


def element(field: FieldDescriptor, u: int, v: int = 0) -> AlgebraicInt:
    return AlgebraicInt(int(u), int(v), field)


def norm(x: AlgebraicInt) -> int:
    return x.norm()


# ---------------------------------------------------------------------------
# parsing / printing: "u+v*w"

_TERM = re.compile(r"([+-]?)\s*(\d*)\s*(\*?\s*w)?")


def parse_element(text: str, field: FieldDescriptor) -> AlgebraicInt:
    """Parse strings such as ``3+2*w``, ``-w``, ``1-1*w`` or ``5``."""
    s = text.replace(" ", "")
    if not s:
        raise ValueError("empty element")
    u = v = 0
    pos = 0
    while pos < len(s):
        m = _TERM.match(s, pos)
        if not m or m.end() == pos:
            raise ValueError(f"cannot parse element {text!r}")
        sign, digits, w = m.groups()
        if not digits and not w:
            raise ValueError(f"cannot parse element {text!r}")
        if pos > 0 and not sign:
            raise ValueError(f"cannot parse element {text!r}")
        coeff = int(digits) if digits else 1
        if sign == "-":
            coeff = -coeff
        if w:
            v += coeff
        else:
            u += coeff
        pos = m.end()
    return AlgebraicInt(u, v, field)


def format_element(x: AlgebraicInt) -> str:
    if x.v == 0:
        return str(x.u)
    if x.u == 0:
        return f"{x.v}*w"
    sign = "+" if x.v > 0 else "-"
    return f"{x.u}{sign}{abs(x.v)}*w"


# ---------------------------------------------------------------------------
# units and associates

@lru_cache(maxsize=None)
def _units(field: FieldDescriptor) -> tuple[AlgebraicInt, ...]:
    out = []
    vmax = math.isqrt(4 // field.abs_disc) if field.abs_disc <= 4 else 0
    for v in range(-vmax, vmax + 1):
        for u in range(-2, 3):
            if field.norm(u, v) == 1:
                out.append(AlgebraicInt(u, v, field))
    out.sort(key=lambda e: (e.u != 1 or e.v != 0, -e.u, -e.v))
    return tuple(out)


def units(field: FieldDescriptor) -> list[AlgebraicInt]:
    return list(_units(field))


def _in_window(x: AlgebraicInt) -> bool:
    # argument in [0, 2*pi/w_K); for w = i and w = exp(i*pi/3) the window is
    # exactly the cone spanned by 1 (included) and w (excluded)
    if x.field.unit_count == 2:
        return x.v > 0 or (x.v == 0 and x.u > 0)
    return x.u > 0 and x.v >= 0


def canonical_associate(x: AlgebraicInt) -> tuple[AlgebraicInt, AlgebraicInt]:
    """Return ``(unit, canonical)`` with ``x == unit * canonical``."""
    if not x:
        raise ZeroInput("zero has no canonical associate")
    for e in _units(x.field):
        y = x * e.conjugate()
        if _in_window(y):
            return e, y
    raise AssertionError("no associate in the fundamental window")  # pragma: no cover


def canonical(x: AlgebraicInt) -> AlgebraicInt:
    return canonical_associate(x)[1]


def is_canonical(x: AlgebraicInt) -> bool:
    return bool(x) and _in_window(x)


# ---------------------------------------------------------------------------
# splitting of rational primes

def kronecker(D: int, n: int) -> int:
    """Kronecker symbol (D/n) for n >= 1; D a fundamental discriminant."""
    if n < 1:
        raise ValueError("n must be positive")
    result = 1
    for p, e in ({n: 1} if isprime(n) else factorint(n)).items():
        if p == 2:
            if D % 2 == 0:
                return 0
            s = 1 if D % 8 in (1, 7) else -1
        else:
            r = D % p
            if r == 0:
                return 0
            s = 1 if pow(r, (p - 1) // 2, p) == 1 else -1
        if e % 2:
            result *= s
    return result


@dataclass(frozen=True)
class PrimeElement:
    generator: AlgebraicInt
    p: int
    splitting: str
    norm: int

    def sort_key(self):
        return (self.norm, self.generator.u, self.generator.v)

    def __str__(self):
        return format_element(self.generator)


def _represent_by_search(field: FieldDescriptor, p: int) -> Optional[tuple[int, int]]:
    # (2u + Bv)^2 + |D| v^2 = 4p
    absD = field.abs_disc
    for v in range(0, math.isqrt(4 * p // absD) + 1):
        rest = 4 * p - absD * v * v
        s = math.isqrt(rest)
        if s * s == rest and (s - field.B * v) % 2 == 0:
            return ((s - field.B * v) // 2, v)
    return None


def _represent_by_reduction(field: FieldDescriptor, p: int) -> tuple[int, int]:
    # the prime ideal (p, w - c) is principal; its shortest vector generates it
    B, C = field.B, field.C
    r = sqrt_mod(field.discriminant, p)
    c = (B + r) * pow(2, -1, p) % p
    assert (c * c - B * c + C) % p == 0

    def q(x):
        return field.norm(*x)

    def dot2(x, y):
        return 2 * x[0] * y[0] + B * (x[0] * y[1] + x[1] * y[0]) + 2 * C * x[1] * y[1]

    b1, b2 = (p, 0), (-c, 1)
    if q(b1) > q(b2):
        b1, b2 = b2, b1
    while True:
        n1 = q(b1)
        mu = (dot2(b1, b2) + n1) // (2 * n1)
        b2 = (b2[0] - mu * b1[0], b2[1] - mu * b1[1])
        if q(b2) >= n1:
            break
        b1, b2 = b2, b1
    if q(b1) != p:
        raise AssertionError(f"reduction failed for p={p}")  # pragma: no cover
    return b1


SEARCH_LIMIT = 10**6


def represent_prime(field: FieldDescriptor, p: int) -> Optional[tuple[int, int]]:
    """A solution of u^2 + Buv + Cv^2 = p, or None when p is inert."""
    if kronecker(field.discriminant, p) == -1:
        return None
    if p <= SEARCH_LIMIT:
        return _represent_by_search(field, p)
    return _represent_by_reduction(field, p)


@lru_cache(maxsize=1 << 16)
def _primes_above(field: FieldDescriptor, p: int) -> tuple[PrimeElement, ...]:
    if not isprime(p):
        raise NotPrime(f"{p} is not prime")
    chi = kronecker(field.discriminant, p)
    if chi == -1:
        g = AlgebraicInt(p, 0, field)
        return (PrimeElement(g, p, "inert", p * p),)
    u, v = _represent_by_search(field, p) if p <= SEARCH_LIMIT else _represent_by_reduction(field, p)
    pi = canonical(AlgebraicInt(u, v, field))
    if chi == 0:
        return (PrimeElement(pi, p, "ramified", p),)
    pj = canonical(pi.conjugate())
    pair = sorted([PrimeElement(pi, p, "split", p), PrimeElement(pj, p, "split", p)], key=PrimeElement.sort_key)
    return tuple(pair)


def primes_above(field: FieldDescriptor, p: int) -> list[PrimeElement]:
    return list(_primes_above(field, p))


# ---------------------------------------------------------------------------
# factorization, gcd, congruences

@dataclass(frozen=True)
class Factorization:
    unit: AlgebraicInt
    factors: tuple[tuple[PrimeElement, int], ...]

    def expand(self) -> AlgebraicInt:
        x = self.unit
        for pe, e in self.factors:
            x = x * pe.generator ** e
        return x

    def exponents(self) -> dict[tuple[int, int], int]:
        return {pe.generator.key(): e for pe, e in self.factors}


def factor(x: AlgebraicInt) -> Factorization:
    if not x:
        raise ZeroInput("cannot factor zero")
    rest = x
    found = []
    for p, e in sorted(factorint(x.norm()).items()):
        for pe in _primes_above(x.field, p):
            k = 0
            g = pe.generator
            while e and rest.divisible_by(g):
                rest = rest.exact_div(g)
                k += 1
                e -= 2 if pe.splitting == "inert" else 1
            if k:
                found.append((pe, k))
        if e:
            raise AssertionError(f"incomplete factorization of {x} at p={p}")  # pragma: no cover
    found.sort(key=lambda t: t[0].sort_key())
    assert rest.norm() == 1
    return Factorization(rest, tuple(found))


def _from_exponents(field, table: dict, exps: dict) -> AlgebraicInt:
    x = AlgebraicInt(1, 0, field)
    for key, e in exps.items():
        if e:
            x = x * table[key].generator ** e
    return x


def gcd(a: AlgebraicInt, b: AlgebraicInt) -> AlgebraicInt:
    if a.field is not b.field:
        raise FieldMismatch(f"{a.field} vs {b.field}")
    if not a and not b:
        raise BothZero("gcd(0, 0) is undefined")
    if not a:
        return canonical(b)
    if not b:
        return canonical(a)
    fa, fb = factor(a), factor(b)
    primes = {pe.generator.key(): pe for pe, _ in fa.factors + fb.factors}
    ea, eb = fa.exponents(), fb.exponents()
    exps = {k: min(ea.get(k, 0), eb.get(k, 0)) for k in primes}
    return canonical(_from_exponents(a.field, primes, exps))


def lcm(a: AlgebraicInt, b: AlgebraicInt) -> AlgebraicInt:
    if not a or not b:
        return AlgebraicInt(0, 0, a.field)
    fa, fb = factor(a), factor(b)
    primes = {pe.generator.key(): pe for pe, _ in fa.factors + fb.factors}
    ea, eb = fa.exponents(), fb.exponents()
    exps = {k: max(ea.get(k, 0), eb.get(k, 0)) for k in primes}
    return canonical(_from_exponents(a.field, primes, exps))


def _hnf(m: AlgebraicInt) -> tuple[int, int, int]:
    """Lattice m*O_K in triangular form: spanned by (n1, 0) and (s, n2)."""
    w = AlgebraicInt(0, 1, m.field)
    x1, y1 = m.u, m.v
    mw = m * w
    x2, y2 = mw.u, mw.v
    g, s, t = _xgcd(y1, y2)
    n2 = abs(g)
    if g < 0:
        s, t = -s, -t
    su = s * x1 + t * x2
    n1 = m.norm() // n2
    return n1, su % n1, n2


def _xgcd(a: int, b: int) -> tuple[int, int, int]:
    x0, x1, y0, y1 = 1, 0, 0, 1
    while b:
        q, a, b = a // b, b, a % b
        x0, x1 = x1, x0 - q * x1
        y0, y1 = y1, y0 - q * y1
    return a, x0, y0


def reduce_mod(x: AlgebraicInt, m: AlgebraicInt) -> AlgebraicInt:
    """Canonical representative of x modulo m*O_K: 0 <= u < n1, 0 <= v < n2."""
    if not m:
        raise ZeroModulus("modulus is zero")
    n1, s, n2 = _hnf(m)
    q = x.v // n2
    u = (x.u - q * s) % n1
    return AlgebraicInt(u, x.v - q * n2, x.field)


def residues(m: AlgebraicInt):
    """Iterate over a complete residue system of O_K / m*O_K."""
    n1, _, n2 = _hnf(m)
    for v in range(n2):
        for u in range(n1):
            yield AlgebraicInt(u, v, m.field)


RESIDUE_SCAN_LIMIT = 10**4


def inverse_mod(a: AlgebraicInt, m: AlgebraicInt) -> AlgebraicInt:
    """Inverse of a modulo m; raises NotDivisible when a, m are not coprime."""
    if not m:
        raise ZeroModulus("modulus is zero")
    if m.norm() == 1:
        return AlgebraicInt(0, 0, a.field)
    if m.norm() <= RESIDUE_SCAN_LIMIT:
        for r in residues(m):
            if (a * r - 1).divisible_by(m):
                return r
        raise NotDivisible(f"{a} is not invertible modulo {m}")
    from .ideals import IdealRep, euler_phi

    if gcd(a, m).norm() != 1:
        raise NotDivisible(f"{a} is not invertible modulo {m}")
    # Euler: a^phi(m) = 1 mod m
    e = euler_phi(IdealRep.from_element(m)) - 1
    result = AlgebraicInt(1, 0, a.field)
    base = reduce_mod(a, m)
    while e:
        if e & 1:
            result = reduce_mod(result * base, m)
        base = reduce_mod(base * base, m)
        e >>= 1
    return result


@dataclass(frozen=True)
class CongruenceSolution:
    base: AlgebraicInt
    modulus_lattice: AlgebraicInt

    def contains(self, n: AlgebraicInt) -> bool:
        return (n - self.base).divisible_by(self.modulus_lattice)


def crt_solve(alpha0: AlgebraicInt, alpha: AlgebraicInt, beta0: AlgebraicInt, beta: AlgebraicInt) -> Optional[CongruenceSolution]:
    """Solve n = alpha0 (mod alpha), n = beta0 (mod beta); None if unsolvable."""
    if not alpha or not beta:
        raise ZeroModulus("moduli must be nonzero")
    g = gcd(alpha, beta)
    diff = beta0 - alpha0
    if not diff.divisible_by(g):
        return None
    a1 = alpha.exact_div(g)
    b1 = beta.exact_div(g)
    # alpha * t = beta0 - alpha0 (mod beta)  <=>  a1 * t = diff/g (mod b1)
    t = reduce_mod(inverse_mod(a1, b1) * diff.exact_div(g), b1)
    modulus = canonical(a1 * beta)
    base = reduce_mod(alpha0 + alpha * t, modulus)
    return CongruenceSolution(base, modulus)
