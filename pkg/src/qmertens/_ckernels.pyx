# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled hot kernels: phi sieve, sector accumulation, pair series.

Mirrors ``_pykernels`` function for function. The loops release the GIL so
callers may run row chunks on several threads.
"""

import math

import numpy as np
cimport numpy as cnp
from libc.math cimport atan2, sqrt, fabs, pow as cpow
from libc.stdint cimport int64_t, int32_t, int8_t

from ._pykernels import box, disk_points

cnp.import_array()

NAME = "cython"

cdef double AMBIGUITY = 1e-12
cdef double PI = math.pi
cdef double TWO_PI = 2 * math.pi


cdef inline int64_t isqrt64(int64_t n) noexcept nogil:
    if n <= 0:
        return 0
    cdef int64_t r = <int64_t>sqrt(<double>n)
    while r * r > n:
        r -= 1
    while (r + 1) * (r + 1) <= n:
        r += 1
    return r


cdef inline int64_t floordiv(int64_t a, int64_t b) noexcept nogil:
    cdef int64_t q = a / b
    if (a % b != 0) and ((a < 0) != (b < 0)):
        q -= 1
    return q


def phi_sieve(int B, int C, X):
    cdef int64_t Xc = X
    V, U = box(B, C, Xc)
    cdef int64_t Vc = V, Uc = U, W = 2 * U + 1
    cdef int64_t absD = 4 * C - B * B
    u, v = disk_points(B, C, Xc)
    norms = u * u + B * u * v + C * v * v
    phi = np.zeros((2 * V + 1, W), dtype=np.int64)
    flat_np = phi.reshape(-1)
    cells = (v + V) * W + (u + U)
    flat_np[cells] = norms
    order = np.argsort(norms, kind="stable")
    cdef int64_t[::1] flat = flat_np
    cdef int64_t[::1] ocells = np.ascontiguousarray(cells[order])
    cdef int64_t[::1] onorms = np.ascontiguousarray(norms[order])
    cdef int64_t ncell = ocells.shape[0]
    found_np = np.zeros((ncell, 2), dtype=np.int64)
    cdef int64_t[:, ::1] found = found_np
    cdef int64_t nfound = 0
    cdef int64_t i, cell, n, pu, pv, Xd, Vd, dv, s, du, du_lo, du_hi, au, av, j
    with nogil:
        for i in range(ncell):
            n = onorms[i]
            if n < 2:
                continue
            cell = ocells[i]
            if flat[cell] != n:
                continue
            # untouched cell of norm > 1: a prime element
            pv = cell / W - Vc
            pu = cell % W - Uc
            found[nfound, 0] = pu
            found[nfound, 1] = pv
            nfound += 1
            Xd = Xc / n
            Vd = isqrt64(4 * Xd / absD)
            for dv in range(-Vd, Vd + 1):
                s = isqrt64(4 * Xd - absD * dv * dv)
                du_lo = -floordiv(s + B * dv, 2)
                du_hi = floordiv(s - B * dv, 2)
                for du in range(du_lo, du_hi + 1):
                    au = pu * du - C * pv * dv
                    av = pu * dv + pv * du + B * pv * dv
                    j = (av + Vc) * W + (au + Uc)
                    flat[j] -= flat[j] / n
    primes = found_np[:nfound].copy()
    # report the canonical associate of each prime, ordered like the fallback
    primes = _canonicalize(B, C, primes)
    return phi, V, U, primes


def _canonicalize(B, C, primes):
    from .fields import lookup_field
    from .ring import units
    from ._pykernels import _mul

    us = [(x.u, x.v) for x in units(lookup_field(B * B - 4 * C))]
    pu, pv = primes[:, 0], primes[:, 1]
    cu, cv = pu.copy(), pv.copy()
    omega = len(us)
    for a, b in us:
        xu, xv = _mul(B, C, a, b, pu, pv)
        if omega == 2:
            ok = (xv > 0) | ((xv == 0) & (xu > 0))
        else:
            ok = (xu > 0) & (xv >= 0)
        cu = np.where(ok, xu, cu)
        cv = np.where(ok, xv, cv)
    n = cu * cu + B * cu * cv + C * cv * cv
    order = np.lexsort((cv, cu, n))
    return np.stack([cu[order], cv[order]], axis=1).astype(np.int64).reshape(-1, 2)


cdef inline double rel_angle(double re, double im, double arg_z) noexcept nogil:
    cdef double t = atan2(im, re) - arg_z
    if t > PI:
        t -= TWO_PI
    elif t <= -PI:
        t += TWO_PI
    return t


def sector_bins(int B, int C, phi, V, U, R2, gu, gv, ku, kv, double arg_z, double half, bint full, int mode, dv_lo, dv_hi):
    cdef int64_t[:, ::1] tab = phi
    cdef int64_t H = tab.shape[0], Wd = tab.shape[1]
    cdef int64_t Vc = V, Uc = U, R2c = R2
    cdef int64_t gu_ = gu, gv_ = gv, ku_ = ku, kv_ = kv
    cdef int64_t absD = 4 * C - B * B
    cdef int64_t Ng = gu_ * gu_ + B * gu_ * gv_ + C * gv_ * gv_
    cdef int64_t Rd = R2c / Ng
    cdef int64_t Vd = isqrt64(4 * Rd / absD)
    cdef int64_t lo = max(-Vd, <int64_t>dv_lo), hi = min(Vd, <int64_t>dv_hi)
    bins_np = np.zeros(R2c + 1, dtype=np.int64)
    cdef int64_t[::1] bins = bins_np
    cdef int64_t cap = 4 * (isqrt64(R2c) + 2) + 64
    amb_np = np.zeros((cap, 2), dtype=np.int64)
    cdef int64_t[:, ::1] amb = amb_np
    cdef int64_t namb = 0
    cdef double hB = B / 2.0, hs = sqrt(<double>absD) / 2.0
    cdef int64_t dv, du, s, du_lo, du_hi, au, av, na, w, iu, iv, bu, bv
    cdef double t
    cdef int hit = 0, bad = 0, overflow = 0
    with nogil:
        for dv in range(lo, hi + 1):
            s = isqrt64(4 * Rd - absD * dv * dv)
            du_lo = -floordiv(s + B * dv, 2)
            du_hi = floordiv(s - B * dv, 2)
            for du in range(du_lo, du_hi + 1):
                if du == 0 and dv == 0:
                    continue
                au = gu_ * du - C * gv_ * dv
                av = gu_ * dv + gv_ * du + B * gv_ * dv
                if not full:
                    t = rel_angle(au + av * hB, av * hs, arg_z)
                    if fabs(t - half) < AMBIGUITY or fabs(t + half) < AMBIGUITY:
                        if namb < cap:
                            amb[namb, 0] = au
                            amb[namb, 1] = av
                        else:
                            overflow = 1
                        namb += 1
                        continue
                    if not (t > -half and t <= half):
                        continue
                na = au * au + B * au * av + C * av * av
                if mode == 0:
                    w = 1
                elif mode == 1:
                    w = na
                else:
                    iv = av + Vc
                    iu = au + Uc
                    if iv < 0 or iv >= H or iu < 0 or iu >= Wd:
                        bad = 1
                        break
                    w = tab[iv, iu]
                    if mode == 3:
                        bu = au + ku_
                        bv = av + kv_
                        if bu == 0 and bv == 0:
                            hit = 1
                        iv = bv + Vc
                        iu = bu + Uc
                        if iv < 0 or iv >= H or iu < 0 or iu >= Wd:
                            bad = 1
                            break
                        w = w * tab[iv, iu]
                bins[na] += w
            if bad:
                break
    if bad:
        raise IndexError("point outside phi table")
    if overflow:
        raise RuntimeError(f"{namb} boundary points exceed buffer")
    if mode not in (0, 1, 2, 3):
        raise ValueError(f"unknown mode {mode}")
    return bins_np, amb_np[:namb].copy(), bool(hit)


def sector_collect(int B, int C, phi, V, U, R2, gu, gv, ku, kv, double arg_z, double half, bint full, dv_lo, dv_hi):
    cdef int64_t[:, ::1] tab = phi
    cdef int64_t H = tab.shape[0], Wd = tab.shape[1]
    cdef int64_t Vc = V, Uc = U, R2c = R2
    cdef int64_t gu_ = gu, gv_ = gv, ku_ = ku, kv_ = kv
    cdef int64_t absD = 4 * C - B * B
    cdef int64_t Ng = gu_ * gu_ + B * gu_ * gv_ + C * gv_ * gv_
    cdef int64_t Rd = R2c / Ng
    cdef int64_t Vd = isqrt64(4 * Rd / absD)
    cdef int64_t lo = max(-Vd, <int64_t>dv_lo), hi = min(Vd, <int64_t>dv_hi)
    # exact upper bound on the number of points
    cdef int64_t total = 0, dv, s
    for dv in range(lo, hi + 1):
        s = isqrt64(4 * Rd - absD * dv * dv)
        total += floordiv(s - B * dv, 2) + floordiv(s + B * dv, 2) + 1
    out_np = np.zeros((4, max(total, 1)), dtype=np.int64)
    cdef int64_t[:, ::1] out = out_np
    cdef int64_t cap = 4 * (isqrt64(R2c) + 2) + 64
    amb_np = np.zeros((cap, 2), dtype=np.int64)
    cdef int64_t[:, ::1] amb = amb_np
    cdef int64_t namb = 0, k = 0
    cdef double hB = B / 2.0, hs = sqrt(<double>absD) / 2.0
    cdef int64_t du, du_lo, du_hi, au, av, iu, iv, bu, bv
    cdef double t
    cdef int hit = 0, bad = 0, overflow = 0
    with nogil:
        for dv in range(lo, hi + 1):
            s = isqrt64(4 * Rd - absD * dv * dv)
            du_lo = -floordiv(s + B * dv, 2)
            du_hi = floordiv(s - B * dv, 2)
            for du in range(du_lo, du_hi + 1):
                if du == 0 and dv == 0:
                    continue
                au = gu_ * du - C * gv_ * dv
                av = gu_ * dv + gv_ * du + B * gv_ * dv
                if not full:
                    t = rel_angle(au + av * hB, av * hs, arg_z)
                    if fabs(t - half) < AMBIGUITY or fabs(t + half) < AMBIGUITY:
                        if namb < cap:
                            amb[namb, 0] = au
                            amb[namb, 1] = av
                        else:
                            overflow = 1
                        namb += 1
                        continue
                    if not (t > -half and t <= half):
                        continue
                bu = au + ku_
                bv = av + kv_
                if bu == 0 and bv == 0:
                    hit = 1
                iv = av + Vc
                iu = au + Uc
                if iv < 0 or iv >= H or iu < 0 or iu >= Wd:
                    bad = 1
                    break
                out[0, k] = au * au + B * au * av + C * av * av
                out[1, k] = tab[iv, iu]
                iv = bv + Vc
                iu = bu + Uc
                if iv < 0 or iv >= H or iu < 0 or iu >= Wd:
                    bad = 1
                    break
                out[2, k] = bu * bu + B * bu * bv + C * bv * bv
                out[3, k] = tab[iv, iu]
                k += 1
            if bad:
                break
    if bad:
        raise IndexError("point outside phi table")
    if overflow:
        raise RuntimeError(f"{namb} boundary points exceed buffer")
    r = out_np[:, :k]
    return r[0].copy(), r[1].copy(), r[2].copy(), r[3].copy(), amb_np[:namb].copy(), bool(hit)


def pair_sum(b_off, b_pid, b_exp, b_norm, b_sign, c_off, c_pid, c_exp, c_norm, c_sign, vm, eta, pnorm, double Nm, double b_min):
    """Sum of sign_b sign_c N(g) / (N(b)^2 N(c)^2 N(m)) over admissible pairs.

    Direct evaluation per pair: the sorted prime lists of b and c are merged
    and at each prime the valuations of g = (c (b, m), m (b, c)), (b, c), h
    and h b are compared.
    """
    cdef int64_t[::1] bo = np.ascontiguousarray(b_off, dtype=np.int64)
    cdef int32_t[::1] bp = np.ascontiguousarray(b_pid, dtype=np.int32)
    cdef int32_t[::1] be = np.ascontiguousarray(b_exp, dtype=np.int32)
    cdef double[::1] bn = np.ascontiguousarray(b_norm, dtype=np.float64)
    cdef int8_t[::1] bs = np.ascontiguousarray(b_sign, dtype=np.int8)
    cdef int64_t[::1] co = np.ascontiguousarray(c_off, dtype=np.int64)
    cdef int32_t[::1] cp = np.ascontiguousarray(c_pid, dtype=np.int32)
    cdef int32_t[::1] ce = np.ascontiguousarray(c_exp, dtype=np.int32)
    cdef double[::1] cn = np.ascontiguousarray(c_norm, dtype=np.float64)
    cdef int8_t[::1] cs = np.ascontiguousarray(c_sign, dtype=np.int8)
    cdef int64_t[::1] vmv = np.ascontiguousarray(vm, dtype=np.int64)
    cdef int64_t[::1] etv = np.ascontiguousarray(eta, dtype=np.int64)
    cdef double[::1] pn = np.ascontiguousarray(pnorm, dtype=np.float64)
    cdef int64_t nb = bn.shape[0], nc = cn.shape[0]
    cdef int64_t i, j, x, y, xe, ye, p
    cdef int64_t beta, gamma, mu, et, mbg, vg, t1, t2
    cdef double g, term, total = 0.0, comp = 0.0, tmp, row, rcomp, wb
    cdef int ok
    with nogil:
        for i in range(nb):
            if bn[i] < b_min or bs[i] == 0:
                continue
            wb = bs[i] / (bn[i] * bn[i] * Nm)
            row = 0.0
            rcomp = 0.0
            for j in range(nc):
                if cs[j] == 0:
                    continue
                x = bo[i]
                xe = bo[i + 1]
                y = co[j]
                ye = co[j + 1]
                g = 1.0
                ok = 1
                while x < xe or y < ye:
                    if y >= ye or (x < xe and bp[x] < cp[y]):
                        p = bp[x]
                        beta = be[x]
                        gamma = 0
                        x += 1
                    elif x >= xe or cp[y] < bp[x]:
                        p = cp[y]
                        beta = 0
                        gamma = ce[y]
                        y += 1
                    else:
                        p = bp[x]
                        beta = be[x]
                        gamma = ce[y]
                        x += 1
                        y += 1
                    mu = vmv[p]
                    et = etv[p]
                    mbg = beta if beta < gamma else gamma
                    if mbg > et:
                        ok = 0
                        break
                    t1 = gamma + (beta if beta < mu else mu)
                    t2 = mu + mbg
                    vg = t1 if t1 < t2 else t2
                    if vg > et + beta:
                        ok = 0
                        break
                    if vg > 0:
                        g *= cpow(pn[p], <double>vg)
                if not ok:
                    continue
                term = cs[j] * g / (cn[j] * cn[j])
                # Neumaier summation
                tmp = row + term
                if fabs(row) >= fabs(term):
                    rcomp += (row - tmp) + term
                else:
                    rcomp += (term - tmp) + row
                row = tmp
            term = wb * (row + rcomp)
            tmp = total + term
            if fabs(total) >= fabs(term):
                comp += (total - tmp) + term
            else:
                comp += (term - tmp) + total
            total = tmp
    return total + comp
