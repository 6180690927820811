"""Backend selection for the hot kernels.

The compiled extension is preferred. ``QM_BACKEND=python`` forces the numpy
fallback; ``QM_THREADS`` sets how many row chunks run concurrently.
"""

import os
from concurrent.futures import ThreadPoolExecutor

from . import _pykernels

try:
    from . import _ckernels
except ImportError:  # extension not built
    _ckernels = None

_BACKENDS = {"python": _pykernels}
if _ckernels is not None:
    _BACKENDS["cython"] = _ckernels


class BackendUnavailable(RuntimeError):
    pass


def available() -> list[str]:
    return sorted(_BACKENDS)


def default_name() -> str:
    forced = os.environ.get("QM_BACKEND", "").strip().lower()
    if forced:
        if forced not in _BACKENDS:
            raise BackendUnavailable(f"QM_BACKEND={forced!r} not available (have {available()})")
        return forced
    return "cython" if _ckernels is not None else "python"


def get_backend(name=None):
    if name is None:
        name = default_name()
    if hasattr(name, "NAME"):
        return name
    try:
        return _BACKENDS[name]
    except KeyError:
        raise BackendUnavailable(f"backend {name!r} not available (have {available()})") from None


BACKEND = default_name()


def thread_count(threads=None) -> int:
    if threads is None:
        threads = os.environ.get("QM_THREADS") or 1
    n = int(threads)
    if n < 1:
        raise ValueError("thread count must be >= 1")
    return n


def row_chunks(lo: int, hi: int, pieces: int) -> list[tuple[int, int]]:
    """Split the inclusive row range [lo, hi] into contiguous chunks."""
    if hi < lo:
        return []
    pieces = max(1, min(pieces, hi - lo + 1))
    step = -(-(hi - lo + 1) // pieces)
    return [(a, min(a + step - 1, hi)) for a in range(lo, hi + 1, step)]


def run_chunks(fn, chunks, threads=None) -> list:
    """Apply fn to each chunk; results come back in chunk order."""
    n = thread_count(threads)
    if n == 1 or len(chunks) <= 1:
        return [fn(c) for c in chunks]
    with ThreadPoolExecutor(max_workers=n) as pool:
        return list(pool.map(fn, chunks))
