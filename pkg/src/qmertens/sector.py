"""Truncated angular sectors C(z, theta, R) and lattice points inside them.

A point a lies in C(z, theta, R) when a != 0, |a| <= R and the principal
angle t of a/z satisfies -theta/2 < t <= theta/2. Enumeration over an ideal
m = g*O_K runs over d with N(d) <= R^2 / N(g) and tests a = g*d, so a single
enumerator serves every ideal.

Angles are computed in double precision. Points within 1e-12 of either
boundary are decided again with mpmath; a point that sits on a boundary to
within 1e-40 is treated as an exact tie (kept at +theta/2, dropped at
-theta/2).
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional, Union

import mpmath
import numpy as np

from . import kernels
from .fields import FieldDescriptor
from .ideals import as_ideal, phi_table
from .ring import AlgebraicInt

MP_DPS = 50
TIE = mpmath.mpf("1e-40")


class InvalidAngle(ValueError):
    pass


class OverflowRisk(OverflowError):
    pass


@dataclass(frozen=True)
class Angle:
    """An opening angle in ]0, 2pi], kept as a rational multiple of pi when possible."""

    radians: float
    pi_multiple: Optional[Fraction] = None

    def __post_init__(self):
        if self.pi_multiple is not None:
            q = Fraction(self.pi_multiple)
            object.__setattr__(self, "pi_multiple", q)
            object.__setattr__(self, "radians", float(q) * math.pi)
        r = self.radians
        if not (r > 0) or (self.pi_multiple is None and r > 2 * math.pi) or (
            self.pi_multiple is not None and self.pi_multiple > 2
        ):
            raise InvalidAngle(f"theta must lie in ]0, 2pi], got {self}")

    @classmethod
    def of_pi(cls, q) -> "Angle":
        return cls(0.0, Fraction(q))

    @property
    def is_full(self) -> bool:
        return self.pi_multiple == 2

    def mp(self):
        if self.pi_multiple is not None:
            q = self.pi_multiple
            return mpmath.pi * q.numerator / q.denominator
        return mpmath.mpf(self.radians)

    def __str__(self):
        q = self.pi_multiple
        if q is None:
            return repr(self.radians)
        num = "" if q.numerator == 1 else str(q.numerator)
        return f"{num}pi" + ("" if q.denominator == 1 else f"/{q.denominator}")


_SYMBOLIC = re.compile(r"^\s*(\d*)\s*\*?\s*pi\s*(?:/\s*(\d+))?\s*$")


def parse_theta(text: Union[str, float, Angle]) -> Angle:
    """Parse ``2pi``, ``pi/3``, ``3pi/4``, ``3*pi/4`` or a decimal number of radians."""
    if isinstance(text, Angle):
        return text
    if isinstance(text, (int, float)):
        return Angle(float(text))
    m = _SYMBOLIC.match(str(text).lower())
    if m:
        num = int(m.group(1)) if m.group(1) else 1
        den = int(m.group(2)) if m.group(2) else 1
        if den == 0:
            raise InvalidAngle(f"bad angle {text!r}")
        return Angle.of_pi(Fraction(num, den))
    try:
        value = float(text)
    except ValueError:
        raise InvalidAngle(f"cannot parse angle {text!r}") from None
    return Angle(value)


FULL_CIRCLE = Angle.of_pi(2)


def _exact_square_floor(R) -> int:
    if isinstance(R, (int, Fraction)):
        q = Fraction(R) ** 2
    else:
        q = Fraction(float(R)) ** 2
    return q.numerator // q.denominator


@dataclass(frozen=True)
class Sector:
    """C(z, theta, R) in the field's complex embedding.

    ``z`` is either an element of O_K (exact direction) or a complex number.
    """

    field: FieldDescriptor
    z: Union[AlgebraicInt, complex]
    theta: Angle
    R: Union[int, float, Fraction]

    def __post_init__(self):
        object.__setattr__(self, "theta", parse_theta(self.theta))
        if isinstance(self.z, AlgebraicInt):
            if not self.z:
                raise ValueError("sector direction z must be nonzero")
        else:
            z = complex(self.z)
            if z == 0:
                raise ValueError("sector direction z must be nonzero")
            object.__setattr__(self, "z", z)
        if self.R < 0:
            raise ValueError("radius must be >= 0")

    @property
    def R2(self) -> int:
        """Largest integer norm allowed: floor(R^2)."""
        return _exact_square_floor(self.R)

    def arg_z(self) -> float:
        return math.atan2(*reversed(_complex_parts(self.field, self.z)))

    def arg_z_mp(self):
        with mpmath.workdps(MP_DPS):
            re_, im_ = _mp_parts(self.field, self.z)
            return mpmath.atan2(im_, re_)

    def rotated(self, unit: AlgebraicInt) -> "Sector":
        z = self.z * unit if isinstance(self.z, AlgebraicInt) else self.z * complex(unit)
        return Sector(self.field, z, self.theta, self.R)

    def with_radius(self, R) -> "Sector":
        return Sector(self.field, self.z, self.theta, R)


def _complex_parts(field, z):
    if isinstance(z, AlgebraicInt):
        c = complex(z)
        return c.real, c.imag
    return z.real, z.imag


def _mp_parts(field, z):
    if isinstance(z, AlgebraicInt):
        return z.u + mpmath.mpf(z.v) * field.B / 2, mpmath.mpf(z.v) * mpmath.sqrt(field.abs_disc) / 2
    return mpmath.mpf(z.real), mpmath.mpf(z.imag)


def _resolve(field: FieldDescriptor, sector: Sector, pts) -> list[bool]:
    """High-precision half-open angle test for points close to a boundary."""
    out = []
    with mpmath.workdps(MP_DPS):
        arg_z = sector.arg_z_mp()
        half = sector.theta.mp() / 2
        h = mpmath.sqrt(field.abs_disc) / 2
        for u, v in pts:
            t = mpmath.atan2(v * h, u + mpmath.mpf(v) * field.B / 2) - arg_z
            if t > mpmath.pi:
                t -= 2 * mpmath.pi
            elif t <= -mpmath.pi:
                t += 2 * mpmath.pi
            if abs(t - half) < TIE:
                out.append(True)
            elif abs(t + half) < TIE:
                out.append(False)
            else:
                out.append(-half < t <= half)
    return out


def contains(s: Sector, a: AlgebraicInt) -> bool:
    if not a or a.norm() > s.R2:
        return False
    if s.theta.is_full:
        return True
    c = complex(a)
    t = math.atan2(c.imag, c.real) - s.arg_z()
    if t > math.pi:
        t -= 2 * math.pi
    elif t <= -math.pi:
        t += 2 * math.pi
    half = s.theta.radians / 2
    if abs(t - half) < kernels._pykernels.AMBIGUITY or abs(t + half) < kernels._pykernels.AMBIGUITY:
        return _resolve(s.field, s, [(a.u, a.v)])[0]
    return -half < t <= half


def _generator(field: FieldDescriptor, m) -> AlgebraicInt:
    if m is None:
        return AlgebraicInt(1, 0, field)
    return as_ideal(m).generator


def enumerate_points(m, s: Sector) -> list[AlgebraicInt]:
    """All a in m with a in s, ordered row-major by (v, u)."""
    field = s.field
    g = _generator(field, m)
    B, C = field.B, field.C
    half = s.theta.radians / 2
    au, av, amb = kernels._pykernels._select(
        B, C, s.R2, g.u, g.v, s.arg_z(), half, s.theta.is_full, -(1 << 62), 1 << 62
    )
    pts = list(zip(au.tolist(), av.tolist()))
    keep = _resolve(field, s, amb.tolist()) if len(amb) else []
    pts += [tuple(p) for p, ok in zip(amb.tolist(), keep) if ok]
    pts.sort(key=lambda t: (t[1], t[0]))
    return [AlgebraicInt(u, v, field) for u, v in pts]


# ---------------------------------------------------------------------------
# weighted sums through the kernels

MODE_COUNT, MODE_NORM, MODE_PHI, MODE_PHI_SHIFT = 0, 1, 2, 3


@dataclass
class Binned:
    """Per-norm totals: bins[n] = sum of weights over points of norm n."""

    bins: np.ndarray
    shift_hit: bool
    boundary_points: int

    def cumulative(self) -> np.ndarray:
        return np.cumsum(self.bins)

    def total(self, R2: Optional[int] = None) -> int:
        b = self.bins if R2 is None else self.bins[: R2 + 1]
        return int(b.sum())


def _weight_bound(mode: int, R2: int, kmax2: int) -> int:
    if mode == MODE_COUNT:
        return 1
    if mode in (MODE_NORM, MODE_PHI):
        return R2
    return R2 * (math.isqrt(R2) + 1 + kmax2) ** 2


def binned_sum(
    s: Sector,
    mode: int,
    m=None,
    k: Optional[AlgebraicInt] = None,
    threads=None,
    backend=None,
) -> Binned:
    """Sum a weight over a in m inside s, binned by N(a).

    Weights: 1, N(a), phi_K(a), phi_K(a) phi_K(a + k). A term with a + k = 0
    contributes 0 and sets ``shift_hit``.
    """
    field = s.field
    impl = kernels.get_backend(backend)
    g = _generator(field, m)
    B, C = field.B, field.C
    R2 = s.R2
    Ng = g.norm()
    ku, kv = (k.u, k.v) if k is not None else (0, 0)
    kabs = math.isqrt(k.norm()) + 1 if k is not None else 0
    Rd = R2 // Ng
    Vd = math.isqrt(4 * Rd // field.abs_disc)
    npts = (2 * Vd + 1) * (math.isqrt(4 * Rd) + 2)
    if _weight_bound(mode, R2, kabs) * npts >= 1 << 63:
        raise OverflowRisk("sum could exceed 64-bit accumulators; reduce the radius")

    if mode >= MODE_PHI:
        need = R2 if mode == MODE_PHI else (math.isqrt(R2) + 1 + kabs) ** 2
        tab = phi_table(field, max(need, 4), impl)
        phi, V, U = tab.phi, tab.V, tab.U
    else:
        tab = None
        phi, V, U = np.zeros((1, 1), dtype=np.int64), 0, 0

    arg_z, half, full = s.arg_z(), s.theta.radians / 2, s.theta.is_full
    chunks = kernels.row_chunks(-Vd, Vd, kernels.thread_count(threads))

    def work(ch):
        return impl.sector_bins(B, C, phi, V, U, R2, g.u, g.v, ku, kv, arg_z, half, full, mode, ch[0], ch[1])

    bins = np.zeros(R2 + 1, dtype=np.int64)
    hit = False
    amb = []
    for b, a, h in kernels.run_chunks(work, chunks, threads):
        bins += b
        hit |= h
        amb.extend(a.tolist())

    if amb:
        for (u, v), ok in zip(amb, _resolve(field, s, amb)):
            if not ok:
                continue
            x = AlgebraicInt(u, v, field)
            n = x.norm()
            if mode == MODE_COUNT:
                w = 1
            elif mode == MODE_NORM:
                w = n
            elif mode == MODE_PHI:
                w = tab(x)
            else:
                y = x + AlgebraicInt(ku, kv, field)
                if not y:
                    hit = True
                w = tab(x) * tab(y) if y else 0
            bins[n] += w
    return Binned(bins, hit, len(amb))


def collected_terms(s: Sector, m=None, k: Optional[AlgebraicInt] = None, threads=None, backend=None):
    """Arrays (N(a), phi(a), N(a+k), phi(a+k)) for a in m inside s, plus the a = -k flag."""
    field = s.field
    impl = kernels.get_backend(backend)
    g = _generator(field, m)
    B, C = field.B, field.C
    R2 = s.R2
    if k is None:
        k = AlgebraicInt(0, 0, field)
    kabs = math.isqrt(k.norm()) + 1
    tab = phi_table(field, max((math.isqrt(R2) + 1 + kabs) ** 2, 4), impl)
    Rd = R2 // g.norm()
    Vd = math.isqrt(4 * Rd // field.abs_disc)
    arg_z, half, full = s.arg_z(), s.theta.radians / 2, s.theta.is_full
    chunks = kernels.row_chunks(-Vd, Vd, kernels.thread_count(threads))

    def work(ch):
        return impl.sector_collect(B, C, tab.phi, tab.V, tab.U, R2, g.u, g.v, k.u, k.v, arg_z, half, full, ch[0], ch[1])

    parts = kernels.run_chunks(work, chunks, threads)
    cols = [np.concatenate([p[i] for p in parts]) if parts else np.zeros(0, dtype=np.int64) for i in range(4)]
    hit = any(p[5] for p in parts)
    amb = [pt for p in parts for pt in p[4].tolist()]
    if amb:
        extra = [[], [], [], []]
        for (u, v), ok in zip(amb, _resolve(field, s, amb)):
            if ok:
                x = AlgebraicInt(u, v, field)
                y = x + k
                hit |= not y
                for lst, val in zip(extra, (x.norm(), tab(x), y.norm(), tab(y) if y else 0)):
                    lst.append(val)
        cols = [np.concatenate([c, np.array(e, dtype=np.int64)]) for c, e in zip(cols, extra)]
    return cols[0], cols[1], cols[2], cols[3], hit


# ---------------------------------------------------------------------------
# the three sector quantities over O_K

def count_points(s: Sector, threads=None, backend=None) -> int:
    return binned_sum(s, MODE_COUNT, threads=threads, backend=backend).total()


def gauss_estimate(s: Sector) -> float:
    """theta * R^2 / sqrt|D|: area of the sector divided by the covolume."""
    return s.theta.radians * float(s.R) ** 2 / math.sqrt(s.field.abs_disc)


def sum_norms_sector(s: Sector, threads=None, backend=None) -> int:
    return binned_sum(s, MODE_NORM, threads=threads, backend=backend).total()


def sum_norms_estimate(s: Sector) -> float:
    return s.theta.radians / (2 * math.sqrt(s.field.abs_disc)) * float(s.R) ** 4


def covol_diam(m) -> tuple[float, float]:
    """Covolume N(m) sqrt|D|/2 and the diameter of the parallelogram g*{0, 1, w, 1+w}."""
    m = as_ideal(m)
    g = m.generator
    covol = m.norm * math.sqrt(m.field.abs_disc) / 2
    w = AlgebraicInt(0, 1, m.field)
    d1 = abs(complex(g * (1 + w)))
    d2 = abs(complex(g * (w - 1)))
    return covol, max(d1, d2)
