import math
import random
from fractions import Fraction

import pytest

from qmertens import constants, ring
from qmertens.constants import ShiftIdeal, chi_b, chi_b_star, kappa, kappa_prime, psi_b
from qmertens.fields import all_fields, lookup_field
from qmertens.ideals import IdealRep, as_ideal, dedekind_zeta, prime_ideal
from qmertens.ring import AlgebraicInt

FIELDS = all_fields()
G = lookup_field(-4)

# Euler products over rational primes <= 10^8 (numpy sieve, separate code path) with tail correction
C_GAUSS_UNIT_1 = 0.3900959475
C_GAUSS_UNIT_0 = 0.4975972136


def gi(u, v=0):
    return AlgebraicInt(u, v, G)


ONE = IdealRep.unit_ideal(G)


# ---------------------------------------------------------------- shift ideal

def test_shift_ideal_zero_convention():
    h = ShiftIdeal.of(gi(0))
    assert h.is_zero
    assert h.divisible_by(as_ideal(gi(7, 3)))
    assert h.valuation(ring.primes_above(G, 5)[0]) >= 1 << 40
    b, m = as_ideal(gi(3)), as_ideal(gi(2))
    for c in (ONE, as_ideal(gi(1, 1)), as_ideal(gi(3)), as_ideal(gi(2, 1) * gi(1, 1))):
        assert chi_b(c, b, h) == 1 and chi_b_star(c, b, m, h) == 1


def test_psi_chi_at_unit_ideal():
    for b in (ONE, as_ideal(gi(3)), as_ideal(gi(1, 1))):
        m = as_ideal(gi(2, 1))
        assert psi_b(ONE, b, m) == ONE
        assert chi_b(ONE, b, gi(5)) == 1 and chi_b_star(ONE, b, m, gi(5)) == 1


# ---------------------------------------------------------------- prime-value table

def _definition_psi(c, b, m):
    # straight from the definition, with gcd computed on generators
    mb = ring.gcd(b.generator, m.generator)
    cb = ring.gcd(b.generator, c.generator)
    target = m.generator.exact_div(mb) * cb
    return as_ideal(ring.gcd(c.generator, target))


@pytest.mark.parametrize("f", FIELDS, ids=lambda f: str(f.discriminant))
def test_prime_table_against_definitions(f):
    rng = random.Random(f.discriminant)
    pool = constants.prime_ideals_upto(f, 200)
    for _ in range(4):
        b = IdealRep.from_exponents(f, {p: 1 for p in rng.sample(pool[:10], rng.randint(0, 3))})
        m = as_ideal(AlgebraicInt(rng.randint(-12, 12), rng.randint(1, 6), f))
        k = AlgebraicInt(rng.randint(-40, 40), rng.randint(-10, 10), f)
        h = ShiftIdeal.of(k)
        for p in pool:
            P = prime_ideal(p)
            psi = psi_b(P, b, m)
            assert psi == _definition_psi(P, b, m)
            assert psi == (P if b.valuation(p) else P.gcd(m))
            chi = (k.divisible_by(ring.gcd(P.generator, b.generator))) if k else True
            bm = b.generator.exact_div(ring.gcd(b.generator, m.generator))
            chis = (k * bm).divisible_by(psi.generator) if k else True
            assert chi_b(P, b, h) == int(chi)
            assert chi_b_star(P, b, m, h) == int(chis)


# ---------------------------------------------------------------- kappa, w_p

@pytest.mark.parametrize("f", [G, lookup_field(-3), lookup_field(-163)], ids=lambda f: str(f.discriminant))
def test_kappa_bounds(f):
    pool = constants.prime_ideals_upto(f, 10**4)
    ms = [ONE if f is G else IdealRep.unit_ideal(f), as_ideal(pool[0].generator * pool[1].generator)]
    hs = [AlgebraicInt(1, 0, f), pool[0].generator, AlgebraicInt(0, 0, f)]
    for m in ms:
        for h in hs:
            for p in pool:
                k1, k2 = kappa(p, m, h), kappa_prime(p, h)
                assert 1 <= k1 <= 2
                assert Fraction(1, 2) <= k2 <= 1
                assert 0 <= constants.local_factor(p, m, h) <= 1


def test_w_p_cases():
    p2 = ring.primes_above(G, 2)[0]
    P2 = as_ideal(p2.generator)
    assert constants.w_p(p2, P2, gi(1, 1)) == Fraction(1, 2)
    assert constants.w_p(p2, ONE, gi(1, 1)) == Fraction(1, 6)
    assert constants.w_p(p2, P2, gi(1)) == Fraction(1, 2)
    assert constants.w_p(p2, ONE, gi(1)) == Fraction(1, 3)
    # the zero shift is divisible by every prime
    assert constants.w_p(p2, ONE, gi(0)) == Fraction(1, 6)


def test_w_p_other_fields():
    # 2 splits only in Q(sqrt(-7)) among the nine fields
    f = lookup_field(-7)
    one = IdealRep.unit_ideal(f)
    ps = ring.primes_above(f, 2)
    assert [p.norm for p in ps] == [2, 2]
    for p in ps:
        assert constants.w_p(p, one, AlgebraicInt(1, 0, f)) == Fraction(1, 3)
        assert constants.w_p(p, as_ideal(p.generator), p.generator) == Fraction(1, 2)


# ---------------------------------------------------------------- values

def test_unit_modulus_values():
    c1, e1 = constants.product_route(ONE, gi(1), P=10**5)
    assert abs(c1 - C_GAUSS_UNIT_1) < 2e-9 and e1 < 1e-9
    c0, e0 = constants.product_route(ONE, gi(0), P=10**5)
    assert abs(c0 - C_GAUSS_UNIT_0) < 2e-9
    assert abs(constants.closed_form_unit_modulus(gi(1), P=10**5)[0] - C_GAUSS_UNIT_1) < 2e-9
    assert abs(constants.closed_form_unit_modulus(gi(0), P=10**5)[0] - C_GAUSS_UNIT_0) < 2e-9


def test_series_matches_frozen_values():
    for k, ref in ((gi(1), C_GAUSS_UNIT_1), (gi(0), C_GAUSS_UNIT_0)):
        s = constants.series_route(ONE, k, X=5000)
        assert abs(s - ref) <= constants.series_tail_bound(ONE, k, 5000)


@pytest.mark.parametrize("f", FIELDS, ids=lambda f: str(f.discriminant))
def test_closed_form_matches_product(f):
    rng = random.Random(f.discriminant * 7)
    one = IdealRep.unit_ideal(f)
    for _ in range(3):
        k = AlgebraicInt(rng.randint(-30, 30), rng.randint(-10, 10), f)
        a, _ = constants.product_route(one, k, P=3 * 10**4)
        b, _ = constants.closed_form_unit_modulus(k, P=3 * 10**4)
        assert abs(a - b) <= 1e-9


def test_mirsky_constant_report():
    rep = constants.mirsky_constant(gi(1, 1), gi(1), tolerance=1e-8)
    assert rep.consistent()
    assert rep.tail_bound_product < 1e-8
    assert rep.series_within_tolerance is False  # series cutoff 10^4 cannot reach 1e-8
    assert rep.tail_bound_series_crude > rep.tail_bound_series
    assert 0 < rep.value <= 1 / 2
    d = rep.as_dict()
    assert d["consistent"] is True and d["value_product"] == rep.value_product
    only = constants.mirsky_constant(gi(1), gi(1), tolerance=1e-6, mode="product")
    assert only.value_series is None and abs(only.value - C_GAUSS_UNIT_1) < 1e-6
    with pytest.raises(ValueError):
        constants.mirsky_constant(gi(1), gi(1), tolerance=0)


def test_lower_bound_and_sample():
    m = as_ideal(gi(1, 1))
    ks = [gi(u, v) for u in range(-4, 5) for v in range(-4, 5)]
    sample = constants.c_prime_sampled(m, ks)
    assert sample["sample_size"] == len(ks)
    for k in ks[::7]:
        lb = constants.lower_bound_expression(m, k, 2000)
        assert 0 < lb <= constants.product_route(m, k, 2000)[0]
    assert 0 < sample["min_lower_bound"] <= sample["min_c"] <= 1 / m.norm


# ---------------------------------------------------------------- C*

def test_c_star_examples():
    v, _ = constants.c_star(ONE, ONE, gi(1), mode="euler")
    assert math.isclose(v, 1 / dedekind_zeta(G, 2), rel_tol=1e-13)
    s, tail = constants.c_star(ONE, ONE, gi(1), mode="series", X=10**4)
    assert abs(s - v) <= tail


def test_c_star_modes_agree():
    rng = random.Random(5)
    for _ in range(6):
        f = rng.choice(FIELDS)
        pool = constants.prime_ideals_upto(f, 30)
        b = IdealRep.from_exponents(f, {p: 1 for p in rng.sample(pool, min(2, len(pool)))})
        m = AlgebraicInt(rng.randint(-5, 5), rng.randint(1, 3), f)
        k = AlgebraicInt(rng.randint(-5, 5), rng.randint(-3, 3), f)
        e, _ = constants.c_star(b, m, k, mode="euler")
        s, tail = constants.c_star(b, m, k, mode="series", X=10**4)
        assert abs(s - e) <= min(tail, 1e-3)


def test_c_star_factor_at_shared_prime():
    # p | (b, h): the local factor is 1 - N(p)/N(p)^2 = 1 - 1/N(p)
    p = ring.primes_above(G, 5)[0]
    b = prime_ideal(p)
    with_p, _ = constants.c_star(b, ONE, p.generator, mode="euler")
    base, _ = constants.c_star(ONE, ONE, p.generator, mode="euler")
    # C*(O) at this prime contributes (1 - 1/25); C*(b) contributes (1 - 1/5)
    assert math.isclose(with_p / base, (1 - 1 / 5) / (1 - 1 / 25), rel_tol=1e-12)


# ---------------------------------------------------------------- tail

def test_tail_sum_properties():
    m, k = gi(1, 1), gi(3)
    vals = [constants.tail_sum(m, k, x, X=1500)[0] for x in (1, 2, 5, 10, 100, 1000)]
    absvals = [constants.tail_sum(m, k, x, X=1500)[0] for x in (1, 10, 100)]
    assert all(abs(a) <= constants.tail_sum(m, k, x)[1] for a, x in zip(absvals, (1, 10, 100)))
    # x = 1 is the whole truncated double sum of the absolute terms
    assert vals[0] >= vals[-1]
    assert all(a >= b - 1e-15 for a, b in zip(vals, vals[1:]))
    with pytest.raises(ValueError):
        constants.tail_sum(m, k, 0.5)
