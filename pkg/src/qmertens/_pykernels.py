"""Numpy implementation of the hot kernels.

Used when the compiled extension is unavailable or when QM_BACKEND=python.
Signatures and results match ``_ckernels`` exactly (bit-for-bit on integer
outputs; floating sums agree to rounding).
"""

import math

import numpy as np

NAME = "python"

AMBIGUITY = 1e-12
TWO_PI = 2 * math.pi


def box(B, C, X):
    absD = 4 * C - B * B
    V = math.isqrt(4 * X // absD)
    U = (math.isqrt(4 * X) + B * V) // 2 + 1
    return V, U


def _isqrt(n):
    r = np.floor(np.sqrt(n.astype(np.float64))).astype(np.int64)
    r = np.where(r * r > n, r - 1, r)
    r = np.where((r + 1) * (r + 1) <= n, r + 1, r)
    return r


def disk_points(B, C, X, dv_lo=None, dv_hi=None):
    """Coordinates (u, v) of all points with norm <= X, row-major."""
    if X < 0:
        e = np.zeros(0, dtype=np.int64)
        return e, e
    absD = 4 * C - B * B
    V = math.isqrt(4 * X // absD)
    lo = -V if dv_lo is None else max(-V, dv_lo)
    hi = V if dv_hi is None else min(V, dv_hi)
    if lo > hi:
        e = np.zeros(0, dtype=np.int64)
        return e, e
    v = np.arange(lo, hi + 1, dtype=np.int64)
    s = _isqrt(4 * X - absD * v * v)
    ulo = -((s + B * v) // 2)
    uhi = (s - B * v) // 2
    n = uhi - ulo + 1
    vv = np.repeat(v, n)
    start = np.repeat(ulo, n)
    offs = np.arange(n.sum(), dtype=np.int64) - np.repeat(np.cumsum(n) - n, n)
    return start + offs, vv


def _mul(B, C, au, av, bu, bv):
    bd = av * bv
    return au * bu - C * bd, au * bv + av * bu + B * bd


def phi_sieve(B, C, X):
    X = int(X)
    V, U = box(B, C, X)
    W = 2 * U + 1
    u, v = disk_points(B, C, X)
    norms = u * u + B * u * v + C * v * v
    phi = np.zeros((2 * V + 1, W), dtype=np.int64)
    flat = phi.reshape(-1)
    flat[(v + V) * W + (u + U)] = norms

    # prime elements: degree-one primes have prime norm; inert primes are rational
    isprime = np.ones(X + 1, dtype=bool)
    isprime[:2] = False
    for p in range(2, math.isqrt(X) + 1):
        if isprime[p]:
            isprime[p * p :: p] = False
    omega = {4: 4, 3: 6}.get(4 * C - B * B, 2)
    if omega == 2:
        window = (v > 0) | ((v == 0) & (u > 0))
    else:
        window = (u > 0) & (v >= 0)
    deg1 = window & isprime[norms]
    pu, pv, pn = u[deg1], v[deg1], norms[deg1]
    rat = np.flatnonzero(isprime[: math.isqrt(X) + 1])
    inert = np.array([p for p in rat.tolist() if not _splits(B, C, p)], dtype=np.int64)
    pu = np.concatenate([pu, inert])
    pv = np.concatenate([pv, np.zeros(len(inert), dtype=np.int64)])
    pn = np.concatenate([pn, inert * inert])
    order = np.lexsort((pv, pu, pn))
    pu, pv, pn = pu[order], pv[order], pn[order]

    # d-points sorted by norm, prefixes give the multiples of each prime
    du, dv = disk_points(B, C, X // 2)
    dn = du * du + B * du * dv + C * dv * dv
    o = np.argsort(dn, kind="stable")
    du, dv, dn = du[o], dv[o], dn[o]
    for a, b, n in zip(pu.tolist(), pv.tolist(), pn.tolist()):
        k = np.searchsorted(dn, X // n, side="right")
        mu, mv = _mul(B, C, a, b, du[:k], dv[:k])
        idx = (mv + V) * W + (mu + U)
        flat[idx] -= flat[idx] // n
    primes = np.stack([pu, pv], axis=1) if len(pu) else np.zeros((0, 2), dtype=np.int64)
    return phi, V, U, primes


def _splits(B, C, p):
    # p is not inert iff w's minimal polynomial has a root mod p
    return any((c * c - B * c + C) % p == 0 for c in range(p))


def _angles(B, absD, au, av, arg_z):
    re = au + av * (B / 2.0)
    im = av * (math.sqrt(absD) / 2.0)
    t = np.arctan2(im, re) - arg_z
    t = np.where(t > math.pi, t - TWO_PI, t)
    t = np.where(t <= -math.pi, t + TWO_PI, t)
    return t


def _select(B, C, R2, gu, gv, arg_z, half, full, dv_lo, dv_hi):
    absD = 4 * C - B * B
    Ng = gu * gu + B * gu * gv + C * gv * gv
    du, dv = disk_points(B, C, R2 // Ng, dv_lo, dv_hi)
    nz = (du != 0) | (dv != 0)
    du, dv = du[nz], dv[nz]
    au, av = _mul(B, C, gu, gv, du, dv)
    if full:
        return au, av, np.zeros((0, 2), dtype=np.int64)
    t = _angles(B, absD, au, av, arg_z)
    amb = (np.abs(t - half) < AMBIGUITY) | (np.abs(t + half) < AMBIGUITY)
    inside = (t > -half) & (t <= half) & ~amb
    return au[inside], av[inside], np.stack([au[amb], av[amb]], axis=1)


def _lookup(phi, V, U, au, av):
    H, W = phi.shape
    iv, iu = av + V, au + U
    if len(iv) and (iv.min() < 0 or iv.max() >= H or iu.min() < 0 or iu.max() >= W):
        raise IndexError("point outside phi table")
    return phi[iv, iu]


def sector_bins(B, C, phi, V, U, R2, gu, gv, ku, kv, arg_z, half, full, mode, dv_lo, dv_hi):
    au, av, amb = _select(B, C, R2, gu, gv, arg_z, half, full, dv_lo, dv_hi)
    na = au * au + B * au * av + C * av * av
    hit = bool(((au == -ku) & (av == -kv)).any()) if mode == 3 else False
    if mode == 0:
        w = np.ones_like(na)
    elif mode == 1:
        w = na
    elif mode == 2:
        w = _lookup(phi, V, U, au, av)
    elif mode == 3:
        w = _lookup(phi, V, U, au, av) * _lookup(phi, V, U, au + ku, av + kv)
    else:
        raise ValueError(f"unknown mode {mode}")
    bins = np.zeros(R2 + 1, dtype=np.int64)
    np.add.at(bins, na, w)
    return bins, amb, hit


def sector_collect(B, C, phi, V, U, R2, gu, gv, ku, kv, arg_z, half, full, dv_lo, dv_hi):
    au, av, amb = _select(B, C, R2, gu, gv, arg_z, half, full, dv_lo, dv_hi)
    na = au * au + B * au * av + C * av * av
    bu, bv = au + ku, av + kv
    nb = bu * bu + B * bu * bv + C * bv * bv
    hit = bool(((bu == 0) & (bv == 0)).any())
    return na, _lookup(phi, V, U, au, av), nb, _lookup(phi, V, U, bu, bv), amb, hit


def pair_sum(b_off, b_pid, b_exp, b_norm, b_sign, c_off, c_pid, c_exp, c_norm, c_sign, vm, eta, pnorm, Nm, b_min):
    """Sum of sign_b sign_c N(g) / (N(b)^2 N(c)^2 N(m)) over admissible pairs.

    g = (c (b, m), m (b, c)); a pair is admissible when (b, c) | h and g | h b.
    All ideals are given as exponent vectors over prime ids.
    """
    P = len(pnorm)
    nb, nc = len(b_norm), len(c_norm)
    L = int(np.max(np.diff(c_off))) if nc else 0
    cp = np.full((nc, max(L, 1)), P, dtype=np.int64)
    ce = np.zeros((nc, max(L, 1)), dtype=np.int64)
    lens = np.diff(c_off)
    rows = np.repeat(np.arange(nc), lens)
    cols = np.arange(len(c_pid)) - np.repeat(c_off[:-1], lens)
    cp[rows, cols] = c_pid
    ce[rows, cols] = c_exp
    vm_ = np.append(vm, 0)
    eta_ = np.append(eta, 0)
    pn_ = np.append(pnorm, 1.0)
    mu_c, eta_c, pn_c = vm_[cp], eta_[cp], pn_[cp]
    cw = c_sign / (c_norm * c_norm)
    beta_of = np.zeros(P + 1, dtype=np.int64)
    total = []
    for i in range(nb):
        if b_norm[i] < b_min:
            continue
        s, e = b_off[i], b_off[i + 1]
        pids, exps = b_pid[s:e], b_exp[s:e]
        beta_of[pids] = exps
        gb = 1.0
        for p, beta in zip(pids.tolist(), exps.tolist()):
            gb *= pnorm[p] ** min(beta, int(vm[p]))
        beta = beta_of[cp]
        gamma = ce
        mbg = np.minimum(beta, gamma)
        vg = np.minimum(gamma + np.minimum(beta, mu_c), mu_c + mbg)
        ok = ((mbg <= eta_c) & (vg <= eta_c + beta)).all(axis=1)
        # b-only contribution was counted in gb; replace it for primes shared with c
        vb = np.where(beta > 0, np.minimum(beta, mu_c), 0)
        g = gb * np.prod(pn_c ** (vg - vb), axis=1)
        terms = (b_sign[i] / (b_norm[i] * b_norm[i] * Nm)) * cw[ok] * g[ok]
        total.append(math.fsum(terms.tolist()))
        beta_of[pids] = 0
    return math.fsum(total)
