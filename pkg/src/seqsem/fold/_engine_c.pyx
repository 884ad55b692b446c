# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled fold kernels.

Mirrors _engine_py cell for cell: same recursions, same integer energies,
same traceback scan order, so both backends return identical results.
"""

import numpy as np

from libc.math cimport INFINITY, exp, log1p

BACKEND_NAME = "compiled"

cdef long long INF = (<long long>1) << 60
cdef double NEG_INF = -INFINITY


cdef inline double logadd(double a, double b) noexcept nogil:
    cdef double t
    if a == NEG_INF:
        return b
    if b == NEG_INF:
        return a
    if a < b:
        t = a
        a = b
        b = t
    return a + log1p(exp(b - a))


cdef inline long long hairpin_cents(const unsigned char[::1] seq, int i, int j,
                                    const signed char[:, ::1] pair_idx,
                                    const long long[::1] hp_len,
                                    const long long[:, :, ::1] hp_mis,
                                    const long long[::1] special3,
                                    const long long[::1] special4) noexcept nogil:
    cdef int pt = pair_idx[seq[i], seq[j]]
    cdef int k = j - i - 1
    cdef long long cents = hp_len[k] + hp_mis[pt, seq[i + 1], seq[j - 1]]
    cdef long long code = 0
    cdef int m
    if k <= 4:
        for m in range(i, j + 1):
            code = code * 4 + seq[m]
        if k == 3:
            cents += special3[code]
        else:
            cents += special4[code]
    return cents


cdef inline long long two_loop_cents(const unsigned char[::1] seq, int i, int j, int r, int q,
                                     const signed char[:, ::1] pair_idx,
                                     const long long[:, ::1] stack,
                                     const long long[::1] bulge_len,
                                     const long long[:, ::1] internal_len,
                                     const long long[:, :, ::1] in_mis) noexcept nogil:
    cdef int pt = pair_idx[seq[i], seq[j]]
    cdef int pt_in = pair_idx[seq[r], seq[q]]
    cdef int kl = r - i - 1
    cdef int kr = j - q - 1
    cdef int k1
    cdef long long cents
    cdef int pt_rev
    if kl == 0 and kr == 0:
        return stack[pt, pt_in]
    if kl == 0 or kr == 0:
        k1 = kl if kl > kr else kr
        cents = bulge_len[k1]
        if k1 == 1:
            cents += stack[pt, pt_in]
        return cents
    pt_rev = pair_idx[seq[q], seq[r]]
    return (internal_len[kl, kr]
            + in_mis[pt, seq[i + 1], seq[j - 1]]
            + in_mis[pt_rev, seq[q + 1], seq[r - 1]])


def fold(seq_codes, pk):
    """Minimum free energy fold: (energy in centi-kcal, 0-based arcs)."""
    cdef const unsigned char[::1] seq = np.ascontiguousarray(seq_codes, dtype=np.uint8)
    cdef int n = seq.shape[0]
    if n < 5:
        return 0, []
    cdef const signed char[:, ::1] pair_idx = pk.pair_idx
    cdef const long long[:, ::1] stack = pk.stack
    cdef const long long[::1] hp_len = pk.hairpin_len
    cdef const long long[:, :, ::1] hp_mis = pk.hairpin_mismatch
    cdef const long long[:, :, ::1] in_mis = pk.internal_mismatch
    cdef const long long[::1] bulge_len = pk.bulge_len
    cdef const long long[:, ::1] internal_len = pk.internal_len
    cdef const long long[::1] special3 = pk.special3
    cdef const long long[::1] special4 = pk.special4
    cdef int cap = pk.max_interior
    cdef long long ma = pk.multi_alpha
    cdef long long mb = pk.multi_beta
    cdef long long mg = pk.multi_gamma

    ve_arr = np.full((n, n), INF, dtype=np.int64)
    vc_arr = np.zeros((n, n), dtype=np.int64)
    me_arr = np.full((n, n), INF, dtype=np.int64)
    mc_arr = np.zeros((n, n), dtype=np.int64)
    m2e_arr = np.full((n, n), INF, dtype=np.int64)
    m2c_arr = np.zeros((n, n), dtype=np.int64)
    we_arr = np.zeros(n + 1, dtype=np.int64)
    wc_arr = np.zeros(n + 1, dtype=np.int64)
    cdef long long[:, ::1] ve = ve_arr
    cdef long long[:, ::1] vc = vc_arr
    cdef long long[:, ::1] me = me_arr
    cdef long long[:, ::1] mc = mc_arr
    cdef long long[:, ::1] m2e = m2e_arr
    cdef long long[:, ::1] m2c = m2c_arr
    cdef long long[::1] we = we_arr
    cdef long long[::1] wc = wc_arr

    cdef int d, i, j, r, q, k, rmax, qmin
    cdef long long best_e, best_c, best2_e, best2_c, cand_e, cand_c, branch_e, branch_c

    with nogil:
        for d in range(0, n):
            for i in range(0, n - d):
                j = i + d
                if d > 3 and pair_idx[seq[i], seq[j]] >= 0:
                    best_e = hairpin_cents(seq, i, j, pair_idx, hp_len, hp_mis, special3, special4)
                    best_c = 1
                    rmax = i + 1 + cap
                    if rmax > j - 5:
                        rmax = j - 5
                    for r in range(i + 1, rmax + 1):
                        qmin = r + 4
                        if qmin < j - 1 - cap:
                            qmin = j - 1 - cap
                        for q in range(qmin, j):
                            if pair_idx[seq[r], seq[q]] < 0 or ve[r, q] >= INF:
                                continue
                            cand_e = two_loop_cents(seq, i, j, r, q, pair_idx, stack,
                                                    bulge_len, internal_len, in_mis) + ve[r, q]
                            cand_c = vc[r, q] + 1
                            if cand_e < best_e or (cand_e == best_e and cand_c < best_c):
                                best_e = cand_e
                                best_c = cand_c
                    if m2e[i + 1, j - 1] < INF:
                        cand_e = ma + mb + m2e[i + 1, j - 1]
                        cand_c = m2c[i + 1, j - 1] + 1
                        if cand_e < best_e or (cand_e == best_e and cand_c < best_c):
                            best_e = cand_e
                            best_c = cand_c
                    ve[i, j] = best_e
                    vc[i, j] = best_c
                best_e = INF
                best_c = 0
                best2_e = INF
                best2_c = 0
                if d >= 1 and me[i, j - 1] < INF:
                    best_e = me[i, j - 1] + mg
                    best_c = mc[i, j - 1]
                if d >= 1 and m2e[i, j - 1] < INF:
                    best2_e = m2e[i, j - 1] + mg
                    best2_c = m2c[i, j - 1]
                for k in range(i, j - 3):
                    if ve[k, j] >= INF:
                        continue
                    branch_e = mb + ve[k, j]
                    branch_c = 1 + vc[k, j]
                    cand_e = (k - i) * mg + branch_e
                    cand_c = branch_c
                    if cand_e < best_e or (cand_e == best_e and cand_c < best_c):
                        best_e = cand_e
                        best_c = cand_c
                    if k > i and me[i, k - 1] < INF:
                        cand_e = me[i, k - 1] + branch_e
                        cand_c = mc[i, k - 1] + branch_c
                        if cand_e < best_e or (cand_e == best_e and cand_c < best_c):
                            best_e = cand_e
                            best_c = cand_c
                        if cand_e < best2_e or (cand_e == best2_e and cand_c < best2_c):
                            best2_e = cand_e
                            best2_c = cand_c
                me[i, j] = best_e
                mc[i, j] = best_c
                m2e[i, j] = best2_e
                m2c[i, j] = best2_c
        for i in range(n - 1, -1, -1):
            best_e = we[i + 1]
            best_c = wc[i + 1]
            for j in range(i + 4, n):
                if ve[i, j] >= INF:
                    continue
                cand_e = ve[i, j] + we[j + 1]
                cand_c = vc[i, j] + wc[j + 1]
                if cand_e < best_e or (cand_e == best_e and cand_c < best_c):
                    best_e = cand_e
                    best_c = cand_c
            we[i] = best_e
            wc[i] = best_c

    # traceback (same scan order as the pure backend)
    arcs = []
    frames = [("W", 0, 0)]
    cdef long long te, tc
    cdef int found
    while frames:
        tag, i, j = frames.pop()
        if tag == "W":
            while i < n:
                te = we[i]
                tc = wc[i]
                found = 0
                for j in range(i + 4, n):
                    if ve[i, j] >= INF:
                        continue
                    if ve[i, j] + we[j + 1] == te and vc[i, j] + wc[j + 1] == tc:
                        arcs.append((i, j))
                        frames.append(("V", i, j))
                        i = j + 1
                        found = 1
                        break
                if not found:
                    i += 1
        elif tag == "V":
            te = ve[i, j]
            tc = vc[i, j]
            if tc == 1 and te == hairpin_cents(seq, i, j, pair_idx, hp_len, hp_mis,
                                               special3, special4):
                continue
            found = 0
            rmax = i + 1 + cap
            if rmax > j - 5:
                rmax = j - 5
            for r in range(i + 1, rmax + 1):
                qmin = r + 4
                if qmin < j - 1 - cap:
                    qmin = j - 1 - cap
                for q in range(qmin, j):
                    if pair_idx[seq[r], seq[q]] < 0 or ve[r, q] >= INF:
                        continue
                    if (two_loop_cents(seq, i, j, r, q, pair_idx, stack, bulge_len,
                                       internal_len, in_mis) + ve[r, q] == te
                            and vc[r, q] + 1 == tc):
                        arcs.append((r, q))
                        frames.append(("V", r, q))
                        found = 1
                        break
                if found:
                    break
            if not found:
                frames.append(("M2", i + 1, j - 1))
        elif tag == "M":
            found = 0
            while not found:
                te = me[i, j]
                tc = mc[i, j]
                for k in range(i, j - 3):
                    if ve[k, j] >= INF:
                        continue
                    branch_e = mb + ve[k, j]
                    branch_c = 1 + vc[k, j]
                    if (k - i) * mg + branch_e == te and branch_c == tc:
                        arcs.append((k, j))
                        frames.append(("V", k, j))
                        found = 1
                        break
                    if k > i and me[i, k - 1] < INF:
                        if me[i, k - 1] + branch_e == te and mc[i, k - 1] + branch_c == tc:
                            arcs.append((k, j))
                            frames.append(("V", k, j))
                            frames.append(("M", i, k - 1))
                            found = 1
                            break
                if not found:
                    j -= 1
        else:  # M2
            found = 0
            while not found:
                te = m2e[i, j]
                tc = m2c[i, j]
                for k in range(i + 1, j - 3):
                    if ve[k, j] >= INF or me[i, k - 1] >= INF:
                        continue
                    if (me[i, k - 1] + mb + ve[k, j] == te
                            and mc[i, k - 1] + 1 + vc[k, j] == tc):
                        arcs.append((k, j))
                        frames.append(("V", k, j))
                        frames.append(("M", i, k - 1))
                        found = 1
                        break
                if not found:
                    j -= 1

    return int(we[0]), arcs


def mccaskill(seq_codes, pk, double rt):
    """log of the partition function over all structures of the sequence."""
    cdef const unsigned char[::1] seq = np.ascontiguousarray(seq_codes, dtype=np.uint8)
    cdef int n = seq.shape[0]
    if n < 5:
        return 0.0
    cdef const signed char[:, ::1] pair_idx = pk.pair_idx
    cdef const long long[:, ::1] stack = pk.stack
    cdef const long long[::1] hp_len = pk.hairpin_len
    cdef const long long[:, :, ::1] hp_mis = pk.hairpin_mismatch
    cdef const long long[:, :, ::1] in_mis = pk.internal_mismatch
    cdef const long long[::1] bulge_len = pk.bulge_len
    cdef const long long[:, ::1] internal_len = pk.internal_len
    cdef const long long[::1] special3 = pk.special3
    cdef const long long[::1] special4 = pk.special4
    cdef int cap = pk.max_interior
    cdef double scale = -1.0 / (100.0 * rt)
    cdef double wb = pk.multi_beta * scale
    cdef double wg = pk.multi_gamma * scale
    cdef double w_close = (pk.multi_alpha + pk.multi_beta) * scale

    vl_arr = np.full((n, n), NEG_INF)
    ml_arr = np.full((n, n), NEG_INF)
    m2l_arr = np.full((n, n), NEG_INF)
    wl_arr = np.zeros(n + 1)
    cdef double[:, ::1] vl = vl_arr
    cdef double[:, ::1] ml = ml_arr
    cdef double[:, ::1] m2l = m2l_arr
    cdef double[::1] wl = wl_arr

    cdef int d, i, j, r, q, k, rmax, qmin
    cdef double acc, acc1, acc2, branch, prefix

    with nogil:
        for d in range(0, n):
            for i in range(0, n - d):
                j = i + d
                if d > 3 and pair_idx[seq[i], seq[j]] >= 0:
                    acc = hairpin_cents(seq, i, j, pair_idx, hp_len, hp_mis,
                                        special3, special4) * scale
                    rmax = i + 1 + cap
                    if rmax > j - 5:
                        rmax = j - 5
                    for r in range(i + 1, rmax + 1):
                        qmin = r + 4
                        if qmin < j - 1 - cap:
                            qmin = j - 1 - cap
                        for q in range(qmin, j):
                            if pair_idx[seq[r], seq[q]] < 0 or vl[r, q] == NEG_INF:
                                continue
                            acc = logadd(acc, two_loop_cents(seq, i, j, r, q, pair_idx, stack,
                                                             bulge_len, internal_len, in_mis)
                                         * scale + vl[r, q])
                    if m2l[i + 1, j - 1] != NEG_INF:
                        acc = logadd(acc, w_close + m2l[i + 1, j - 1])
                    vl[i, j] = acc
                acc1 = ml[i, j - 1] + wg if d >= 1 else NEG_INF
                acc2 = m2l[i, j - 1] + wg if d >= 1 else NEG_INF
                for k in range(i, j - 3):
                    if vl[k, j] == NEG_INF:
                        continue
                    branch = wb + vl[k, j]
                    prefix = (k - i) * wg
                    if k > i and ml[i, k - 1] != NEG_INF:
                        prefix = logadd(prefix, ml[i, k - 1])
                        acc2 = logadd(acc2, ml[i, k - 1] + branch)
                    acc1 = logadd(acc1, prefix + branch)
                ml[i, j] = acc1
                m2l[i, j] = acc2
        wl[n] = 0.0
        for i in range(n - 1, -1, -1):
            acc = wl[i + 1]
            for j in range(i + 4, n):
                if vl[i, j] != NEG_INF:
                    acc = logadd(acc, vl[i, j] + wl[j + 1])
            wl[i] = acc

    return float(wl[0])
