"""Registry of the nine imaginary quadratic fields with class number one.

Each field K = Q(sqrt(d)) is described by its integral basis {1, w} with
w = sqrt(d) when d = 2, 3 mod 4 and w = (1 + sqrt(d))/2 when d = 1 mod 4.
The norm form is then N(u + v*w) = u^2 + B*u*v + C*v^2 with B = trace(w)
and C = norm(w), and B^2 - 4C = D_K.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction


class NotPrincipalImaginaryQuadratic(ValueError):
    """Raised for a discriminant outside the nine class-number-one fields."""


@dataclass(frozen=True)
class PiSqrtConstant:
    """An exact real of the form coeff * pi**pi_power * sqrt(radicand)**sqrt_power."""

    coeff: Fraction
    pi_power: int
    sqrt_power: int
    radicand: int

    def __post_init__(self):
        # fold even powers of the square root into the rational coefficient
        sp = self.sqrt_power
        if sp >= 2 or sp <= -2:
            q, r = divmod(sp, 2)
            object.__setattr__(self, "coeff", Fraction(self.coeff) * Fraction(self.radicand) ** q)
            object.__setattr__(self, "sqrt_power", r)
        else:
            object.__setattr__(self, "coeff", Fraction(self.coeff))

    def __mul__(self, other):
        if isinstance(other, (int, Fraction)):
            return PiSqrtConstant(self.coeff * other, self.pi_power, self.sqrt_power, self.radicand)
        if not isinstance(other, PiSqrtConstant):
            return NotImplemented
        if self.radicand != other.radicand:
            raise ValueError("radicands differ")
        return PiSqrtConstant(
            self.coeff * other.coeff,
            self.pi_power + other.pi_power,
            self.sqrt_power + other.sqrt_power,
            self.radicand,
        )

    __rmul__ = __mul__

    def __float__(self):
        return float(self.coeff) * math.pi ** self.pi_power * math.sqrt(self.radicand) ** self.sqrt_power

    def is_rational(self) -> bool:
        return self.pi_power == 0 and self.sqrt_power == 0


@dataclass(frozen=True, eq=False, repr=False)
class FieldDescriptor:
    d: int
    discriminant: int
    unit_count: int
    B: int
    C: int

    # fixed for every imaginary quadratic field with h_K = 1
    r1 = 0
    r2 = 1
    degree = 2
    regulator = 1
    class_number = 1

    def __repr__(self):
        return f"FieldDescriptor(D={self.discriminant})"

    @property
    def A(self) -> int:
        return 1

    @property
    def abs_disc(self) -> int:
        return -self.discriminant

    @property
    def norm_form(self) -> tuple[int, int, int]:
        return (1, self.B, self.C)

    @property
    def covolume_exact(self) -> PiSqrtConstant:
        return PiSqrtConstant(Fraction(1, 2), 0, 1, self.abs_disc)

    @property
    def covolume(self) -> float:
        return float(self.covolume_exact)

    @property
    def rho_exact(self) -> PiSqrtConstant:
        # 2^r1 (2 pi)^r2 R_K h_K / (w_K sqrt|D_K|)
        return PiSqrtConstant(Fraction(2, self.unit_count), 1, -1, self.abs_disc)

    @property
    def rho(self) -> float:
        return float(self.rho_exact)

    @property
    def omega_complex(self) -> complex:
        return complex(self.B / 2, math.sqrt(self.abs_disc) / 2)

    def norm(self, u: int, v: int) -> int:
        return u * u + self.B * u * v + self.C * v * v


def _make(d: int) -> FieldDescriptor:
    if d % 4 == 1:
        D, B, C = d, 1, (1 - d) // 4
    else:
        D, B, C = 4 * d, 0, -d
    units = {-4: 4, -3: 6}.get(D, 2)
    return FieldDescriptor(d=d, discriminant=D, unit_count=units, B=B, C=C)


_REGISTRY = {f.discriminant: f for f in map(_make, (-1, -2, -3, -7, -11, -19, -43, -67, -163))}

DISCRIMINANTS = tuple(sorted(_REGISTRY, reverse=True))


def lookup_field(discriminant: int) -> FieldDescriptor:
    try:
        return _REGISTRY[int(discriminant)]
    except (KeyError, TypeError, ValueError):
        raise NotPrincipalImaginaryQuadratic(
            f"{discriminant!r} is not the discriminant of an imaginary quadratic "
            f"field with class number 1 (expected one of {DISCRIMINANTS})"
        ) from None


def all_fields() -> list[FieldDescriptor]:
    return [_REGISTRY[D] for D in DISCRIMINANTS]
