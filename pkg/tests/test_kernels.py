import os
import subprocess
import sys

import numpy as np
import pytest

from qmertens import constants, kernels
from qmertens.fields import all_fields, lookup_field
from qmertens.ring import AlgebraicInt
from qmertens.sector import (
    MODE_COUNT, MODE_NORM, MODE_PHI, MODE_PHI_SHIFT, OverflowRisk, Sector, binned_sum, collected_terms,
)

FIELDS = all_fields()
HAVE_C = "cython" in kernels.available()
needs_c = pytest.mark.skipif(not HAVE_C, reason="compiled extension not built")


def test_python_backend_always_present():
    assert "python" in kernels.available()
    assert kernels.get_backend("python").NAME == "python"
    with pytest.raises(kernels.BackendUnavailable):
        kernels.get_backend("fortran")


@needs_c
@pytest.mark.parametrize("f", FIELDS, ids=lambda f: str(f.discriminant))
def test_phi_sieve_backends_equal(f):
    a = kernels.get_backend("cython").phi_sieve(f.B, f.C, 20000)
    b = kernels.get_backend("python").phi_sieve(f.B, f.C, 20000)
    assert a[1:3] == b[1:3]
    assert np.array_equal(np.asarray(a[0]), np.asarray(b[0]))
    assert np.array_equal(np.asarray(a[3]), np.asarray(b[3]))


@needs_c
@pytest.mark.parametrize("f", [lookup_field(D) for D in (-3, -4, -7, -43)], ids=lambda f: str(f.discriminant))
@pytest.mark.parametrize("theta", ["2pi", "pi/3", 1.234])
def test_sector_backends_equal(f, theta):
    m = AlgebraicInt(1, 1, f)
    k = AlgebraicInt(2, -1, f)
    s = Sector(f, AlgebraicInt(1, 2, f), theta, 90)
    for mode in (MODE_COUNT, MODE_NORM, MODE_PHI, MODE_PHI_SHIFT):
        a = binned_sum(s, mode, m=m, k=k, backend="cython")
        b = binned_sum(s, mode, m=m, k=k, backend="python")
        assert np.array_equal(a.bins, b.bins) and a.shift_hit == b.shift_hit
    ca = collected_terms(s, m=None, k=k, backend="cython")
    cb = collected_terms(s, m=None, k=k, backend="python")
    # chunk order may differ between kernels; compare the term multisets
    assert sorted(zip(*[c.tolist() for c in ca[:4]])) == sorted(zip(*[c.tolist() for c in cb[:4]]))
    assert ca[4] == cb[4]


@needs_c
def test_pair_sum_backends_equal():
    m = AlgebraicInt(1, 1, lookup_field(-4))
    for k in (AlgebraicInt(3, 0, m.field), AlgebraicInt(0, 0, m.field)):
        a = constants.series_route(m, k, X=1500, backend="cython")
        b = constants.series_route(m, k, X=1500, backend="python")
        assert abs(a - b) <= 1e-13
        za, _ = constants.tail_sum(m, k, 10, X=800, backend="cython")
        zb, _ = constants.tail_sum(m, k, 10, X=800, backend="python")
        assert abs(za - zb) <= 1e-13


def test_threads_do_not_change_results():
    f = lookup_field(-4)
    s = Sector(f, AlgebraicInt(3, 1, f), "2pi/3", 120)
    k = AlgebraicInt(1, 1, f)
    ref = binned_sum(s, MODE_PHI_SHIFT, k=k, threads=1)
    for t in (2, 3, 8):
        other = binned_sum(s, MODE_PHI_SHIFT, k=k, threads=t)
        assert np.array_equal(ref.bins, other.bins)


def test_row_chunks_cover_range():
    for lo, hi, n in [(-10, 10, 3), (0, 0, 4), (-5, 4, 10), (3, 2, 2), (-100, 100, 7)]:
        ch = kernels.row_chunks(lo, hi, n)
        rows = [r for a, b in ch for r in range(a, b + 1)]
        assert rows == list(range(lo, hi + 1))


def test_thread_count(monkeypatch):
    monkeypatch.delenv("QM_THREADS", raising=False)
    assert kernels.thread_count() == 1
    monkeypatch.setenv("QM_THREADS", "3")
    assert kernels.thread_count() == 3
    assert kernels.thread_count(2) == 2
    with pytest.raises(ValueError):
        kernels.thread_count(0)


def test_overflow_guard():
    f = lookup_field(-4)
    with pytest.raises(OverflowRisk):
        binned_sum(Sector(f, AlgebraicInt(1, 0, f), "2pi", 10**5), MODE_PHI_SHIFT, k=AlgebraicInt(1, 0, f))


def _run(env_extra, code):
    env = dict(os.environ, **env_extra)
    return subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True)


def test_qm_backend_env():
    r = _run({"QM_BACKEND": "python"}, "from qmertens import kernels; print(kernels.BACKEND)")
    assert r.returncode == 0 and r.stdout.strip() == "python"
    r = _run({"QM_BACKEND": "nonsense"}, "from qmertens import kernels")
    assert r.returncode != 0 and "BackendUnavailable" in r.stderr
    if HAVE_C:
        r = _run({"QM_BACKEND": ""}, "from qmertens import kernels; print(kernels.BACKEND)")
        assert r.stdout.strip() == "cython"


def test_benchmark_script_runs():
    script = os.path.join(os.path.dirname(__file__), "..", "benchmarks", "bench_kernels.py")
    r = subprocess.run([sys.executable, script, "--scale", "0.01", "--repeat", "1"], capture_output=True, text=True)
    assert r.returncode == 0, r.stderr
    assert "phi_sieve" in r.stdout and "pair_sum" in r.stdout and "MISMATCH" not in r.stdout
