"""Command-line front end: ``python -m qmertens <subcommand> ...``.

Exit codes: 0 success, 1 a checked assertion failed, 2 bad configuration.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import asdict, dataclass
from fractions import Fraction
from pathlib import Path
from typing import Optional

from . import constants, ideals, kernels, ring, sums
from .fields import NotPrincipalImaginaryQuadratic, lookup_field
from .ring import AlgebraicInt, format_element, parse_element
from .sector import InvalidAngle, Sector, count_points, gauss_estimate, parse_theta

EXIT_OK, EXIT_ASSERT, EXIT_CONFIG = 0, 1, 2

# default acceptance for ``verify``: (max |ratio - 1| at the largest x, max fitted exponent)
VERIFY_DEFAULTS = {
    "ideals": (0.005, 0.6),
    "thm1.1": (0.02, 1.7),
    "thm1.2": (0.02, 3.3),
    "thm4.1": (0.03, 5.3),
    "lemma4.5": (0.05, None),
}


class ConfigError(ValueError):
    pass


@dataclass
class RunConfig:
    subcommand: str
    field: int
    m: Optional[str] = None
    k: Optional[str] = None
    z: Optional[str] = None
    theta: Optional[str] = None
    grid: Optional[str] = None
    tolerance: Optional[float] = None
    out: Optional[str] = None
    format: str = "csv"
    threads: int = 1
    seed: int = 0

    def to_json(self) -> str:
        return json.dumps(asdict(self), sort_keys=True)


def _field(D):
    try:
        return lookup_field(D)
    except NotPrincipalImaginaryQuadratic as e:
        raise ConfigError(f"NotPrincipalImaginaryQuadratic: {e}") from None


def _elem(text, field, name="element"):
    try:
        return parse_element(text, field)
    except ValueError as e:
        raise ConfigError(f"bad {name} {text!r}: {e}") from None


def _nonzero(text, field, name):
    x = _elem(text, field, name)
    if not x:
        raise ConfigError(f"{name} must be nonzero")
    return x


def _direction(text, field):
    if text is None:
        return AlgebraicInt(1, 0, field)
    if "," in text:
        try:
            re_, im_ = (float(t) for t in text.split(","))
        except ValueError:
            raise ConfigError(f"bad direction {text!r}; expected 're,im'") from None
        if re_ == 0 and im_ == 0:
            raise ConfigError("direction z must be nonzero")
        return complex(re_, im_)
    return _nonzero(text, field, "z")


def _theta(text):
    try:
        return parse_theta(text if text is not None else "2pi")
    except InvalidAngle as e:
        raise ConfigError(f"theta must lie in ]0, 2pi]: {e}") from None


def _emit(obj):
    print(json.dumps(obj, sort_keys=True, indent=2, default=str))


def _q(x: Fraction) -> str:
    return str(x.numerator) if x.denominator == 1 else f"{x.numerator}/{x.denominator}"


# ---------------------------------------------------------------------------
# subcommands

def cmd_field(a):
    f = _field(a.field)
    _emit({
        "discriminant": f.discriminant,
        "d": f.d,
        "unit_count": f.unit_count,
        "norm_form": list(f.norm_form),
        "covolume": f.covolume,
        "rho": f.rho,
        "rho_exact": f"{_q(f.rho_exact.coeff)}*pi/sqrt({f.abs_disc})",
    })
    return EXIT_OK


def cmd_factor(a):
    f = _field(a.field)
    x = _nonzero(a.element, f, "element")
    fa = ring.factor(x)
    _emit({
        "element": format_element(x),
        "unit": format_element(fa.unit),
        "factors": [{"prime": format_element(p.generator), "norm": p.norm, "splitting": p.splitting, "exponent": e}
                    for p, e in fa.factors],
    })
    return EXIT_OK


def cmd_gcd(a):
    f = _field(a.field)
    x, y = _elem(a.a, f), _elem(a.b, f)
    try:
        g = ring.gcd(x, y)
    except ring.BothZero as e:
        raise ConfigError(str(e)) from None
    _emit({"gcd": format_element(g), "lcm": format_element(ring.lcm(x, y)) if x and y else "0"})
    return EXIT_OK


def cmd_phi(a):
    f = _field(a.field)
    _emit({"phi": ideals.euler_phi(_nonzero(a.element, f, "element"))})
    return EXIT_OK


def cmd_mu(a):
    f = _field(a.field)
    _emit({"mu": ideals.moebius(_nonzero(a.element, f, "element"))})
    return EXIT_OK


def cmd_divisors(a):
    f = _field(a.field)
    ds = ideals.divisors(_nonzero(a.element, f, "element"))
    _emit({"divisors": [format_element(d.generator) for d in ds], "count": len(ds)})
    return EXIT_OK


def cmd_cm(a):
    f = _field(a.field)
    _emit({"c_m": _q(ideals.c_m(_nonzero(a.element, f, "element")))})
    return EXIT_OK


def cmd_zeta(a):
    f = _field(a.field)
    if a.s <= 1:
        raise ConfigError("s must be > 1")
    if a.tol <= 0:
        raise ConfigError("tolerance must be positive")
    _emit({"s": a.s, "tolerance": a.tol, "method": a.method,
           "zeta": ideals.dedekind_zeta(f, a.s, a.tol, a.method)})
    return EXIT_OK


def cmd_constant(a):
    f = _field(a.field)
    m = _nonzero(a.m, f, "m")
    k = _elem(a.k, f, "k")
    if a.tol <= 0:
        raise ConfigError("tolerance must be positive")
    rep = constants.mirsky_constant(m, k, a.tol, mode=a.mode, series_cutoff=a.series_cutoff)
    out = rep.as_dict()
    out.update({"field": f.discriminant, "m": format_element(m), "k": format_element(k)})
    _emit(out)
    if not rep.consistent():
        print("FAIL series/product disagreement exceeds combined tails", file=sys.stderr)
        return EXIT_ASSERT
    return EXIT_OK


def cmd_sector_count(a):
    f = _field(a.field)
    if a.radius < 0:
        raise ConfigError("radius must be >= 0")
    s = Sector(f, _direction(a.z, f), _theta(a.theta), a.radius)
    n = count_points(s, threads=a.threads)
    est = gauss_estimate(s)
    _emit({"count": n, "gauss_estimate": est, "ratio": n / est if est else None})
    return EXIT_OK


def cmd_verify(a):
    f = _field(a.field)
    which = a.which
    m = _nonzero(a.m, f, "m") if a.m else None
    k = _elem(a.k, f, "k") if a.k is not None else None
    if which in ("thm4.1", "lemma4.5") and k is None:
        raise ConfigError(f"{which} requires --k")
    z = _direction(a.z, f)
    th = _theta(a.theta)
    try:
        xs = sums.parse_grid(a.grid)
    except (sums.GridError, sums.GridTooSmall) as e:
        raise ConfigError(str(e)) from None
    config = RunConfig("verify " + which, f.discriminant, a.m, a.k, a.z, str(th), a.grid, None, a.out,
                       a.format, a.threads, a.seed)
    rep = sums.convergence_report(which, f, xs, m=m, k=k, z=z, theta=th, threads=a.threads)
    rep.parameters["config"] = {k_: v for k_, v in asdict(config).items() if k_ not in ("threads", "out")}
    ratio_tol, exp_max = VERIFY_DEFAULTS[which]
    if a.ratio_tol is not None:
        ratio_tol = a.ratio_tol
    if a.max_exponent is not None:
        exp_max = a.max_exponent

    if a.out:
        out = Path(a.out)
        try:
            out.parent.mkdir(parents=True, exist_ok=True)
            if a.format == "json":
                out.write_text(rep.to_json())
            else:
                out.write_text(rep.to_csv())
                out.with_suffix(".json").write_text(rep.to_json())
        except OSError as e:
            print(f"IoError: {e}", file=sys.stderr)
            return EXIT_CONFIG
    else:
        sys.stdout.write(rep.to_csv() if a.format == "csv" else rep.to_json() + "\n")

    checks = []
    r = rep.ratios[-1]
    checks.append(("ratio", abs(r - 1) <= ratio_tol, f"ratio {r:.6f} at x={rep.x_grid[-1]} within 1 +/- {ratio_tol}"))
    if exp_max is not None:
        e = rep.fitted_error_exponent
        checks.append(("exponent", e is not None and e <= exp_max, f"fitted error exponent {e} <= {exp_max}"))
    failed = []
    for name, ok, text in checks:
        print(f"{'PASS' if ok else 'FAIL'} {which} {text}", file=sys.stderr)
        if not ok:
            failed.append({"assertion": name, "theorem": which, "detail": text})
    if failed:
        print(json.dumps({"failures": failed}, sort_keys=True), file=sys.stderr)
        return EXIT_ASSERT
    return EXIT_OK


def cmd_selftest(a):
    """Quick exact checks across all nine fields."""
    from .fields import all_fields
    from .ideals import IdealRep, divisors, euler_phi, ideals_up_to, moebius

    results = []
    for f in all_fields():
        ok = True
        for I in ideals_up_to(f, 200):
            ds = divisors(I)
            ok &= sum(euler_phi(d) for d in ds) == I.norm
            ok &= Fraction(euler_phi(I), I.norm) == sum(Fraction(moebius(d), d.norm) for d in ds)
        results.append((f"divisor-sum and Moebius identities D={f.discriminant}", ok))
    f = lookup_field(-4)
    p = ring.primes_above(f, 2)[0]
    O = IdealRep.unit_ideal(f)
    P = ideals.prime_ideal(p)
    two = AlgebraicInt(2, 0, f)
    one = AlgebraicInt(1, 0, f)
    table = [constants.w_p(p, P, two), constants.w_p(p, O, two), constants.w_p(p, P, one), constants.w_p(p, O, one)]
    results.append(("w_p table at N(p)=2", table == [Fraction(1, 2), Fraction(1, 6), Fraction(1, 2), Fraction(1, 3)]))
    rep = constants.mirsky_constant(one, one, 1e-10, series_cutoff=2000)
    results.append(("series/product agreement c_{O,1}", rep.consistent()))
    bad = 0
    for name, ok in results:
        print(f"{'PASS' if ok else 'FAIL'} {name}")
        bad += not ok
    return EXIT_ASSERT if bad else EXIT_OK


# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="qmertens", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="subcommand", required=True)

    def add(name, fn, help_):
        sp = sub.add_parser(name, help=help_)
        sp.add_argument("--field", type=int, required=True, help="discriminant D_K, e.g. -4")
        sp.set_defaults(fn=fn)
        return sp

    add("field", cmd_field, "describe a field")
    for name, fn, h in [("factor", cmd_factor, "factor an element"), ("phi", cmd_phi, "Euler function"),
                        ("mu", cmd_mu, "Moebius function"), ("divisors", cmd_divisors, "divisor ideals"),
                        ("cm", cmd_cm, "c_m = N(m) prod (1 + 1/N(p))")]:
        add(name, fn, h).add_argument("element", help="element as u+v*w")
    sp = add("gcd", cmd_gcd, "gcd and lcm of two elements")
    sp.add_argument("a")
    sp.add_argument("b")
    sp = add("zeta", cmd_zeta, "Dedekind zeta value")
    sp.add_argument("--s", type=float, default=2.0)
    sp.add_argument("--tol", type=float, default=1e-12)
    sp.add_argument("--method", choices=["hurwitz", "euler"], default="hurwitz")
    sp = add("constant", cmd_constant, "Mirsky constant c_{m,k}")
    sp.add_argument("--m", default="1")
    sp.add_argument("--k", default="1")
    sp.add_argument("--tol", type=float, default=1e-8)
    sp.add_argument("--mode", choices=["both", "series", "product"], default="both")
    sp.add_argument("--series-cutoff", type=int, default=10**4)
    sp = add("sector-count", cmd_sector_count, "lattice points in a truncated sector")
    sp.add_argument("--z", default="1,0")
    sp.add_argument("--theta", default="2pi")
    sp.add_argument("--radius", type=float, required=True)
    sp.add_argument("--threads", type=int, default=None)
    sp = add("verify", cmd_verify, "compare exact sums with leading terms over a grid")
    sp.add_argument("which", choices=list(VERIFY_DEFAULTS))
    sp.add_argument("--m", default=None)
    sp.add_argument("--k", default=None)
    sp.add_argument("--z", default="1,0")
    sp.add_argument("--theta", default="2pi")
    sp.add_argument("--grid", required=True, help="a:b:n:log or a:b:n:lin")
    sp.add_argument("--out", default=None)
    sp.add_argument("--format", choices=["csv", "json"], default="csv")
    sp.add_argument("--threads", type=int, default=None)
    sp.add_argument("--ratio-tol", type=float, default=None)
    sp.add_argument("--max-exponent", type=float, default=None)
    sp.add_argument("--seed", type=int, default=0)
    sp = add("selftest", cmd_selftest, "quick exact self-checks")
    return p


def main(argv=None) -> int:
    parser = build_parser()
    argv = list(sys.argv[1:] if argv is None else argv)
    # selftest does not need a field
    if argv[:1] == ["selftest"] and "--field" not in argv:
        argv += ["--field", "-4"]
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return EXIT_CONFIG if e.code else EXIT_OK
    try:
        if hasattr(args, "threads"):
            try:
                args.threads = kernels.thread_count(args.threads)
            except ValueError as e:
                raise ConfigError(f"{e} (QM_THREADS or --threads)") from None
        return args.fn(args)
    except ConfigError as e:
        print(f"ConfigError: {e}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
