"""Pure-Python fold kernels (reference backend).

Same recursions, energies, and traceback scan order as the compiled backend;
selected automatically when the extension is unavailable. Integer
centi-kcal energies make mfe results exact; McCaskill runs in log domain.

DP layout (0-based, inclusive):
  V[i][j]   best (energy, arcs) of the substructure rooted at arc (i, j)
  M[i][j]   multiloop interval with >= 1 branch (beta per branch, gamma per unpaired)
  M2[i][j]  multiloop interval with >= 2 branches
  W[i]      exterior suffix i..n-1
Ties compare (energy, arc count) lexicographically; traceback takes the
first candidate in a fixed scan order (pairing before leaving a position
unpaired, candidates ordered by ascending position).
"""

from __future__ import annotations

import math

from ._tables import INF_CENTS, PackedTables

BACKEND_NAME = "python"

NEG_INF = float("-inf")


def _pyviews(pk: PackedTables):
    """Python-native copies of the packed tables (cached; fast scalar access)."""
    views = getattr(pk, "_pyviews", None)
    if views is None:
        views = {
            "pair_idx": [[int(v) for v in row] for row in pk.pair_idx],
            "stack": [[int(v) for v in row] for row in pk.stack],
            "hp_len": [int(v) for v in pk.hairpin_len],
            "hp_mis": [[[int(v) for v in row] for row in plane] for plane in pk.hairpin_mismatch],
            "in_mis": [[[int(v) for v in row] for row in plane] for plane in pk.internal_mismatch],
            "bulge_len": [int(v) for v in pk.bulge_len],
            "internal_len": [[int(v) for v in row] for row in pk.internal_len],
            "special3": {k: int(v) for k, v in enumerate(pk.special3) if v},
            "special4": {k: int(v) for k, v in enumerate(pk.special4) if v},
        }
        pk._pyviews = views
    return views


class _Dp:
    def __init__(self, seq: list[int], pk: PackedTables):
        v = _pyviews(pk)
        self.seq = seq
        self.n = len(seq)
        self.pair_idx = v["pair_idx"]
        self.stack = v["stack"]
        self.hp_len = v["hp_len"]
        self.hp_mis = v["hp_mis"]
        self.in_mis = v["in_mis"]
        self.bulge_len = v["bulge_len"]
        self.internal_len = v["internal_len"]
        self.special3 = v["special3"]
        self.special4 = v["special4"]
        self.cap = pk.max_interior
        self.ma = pk.multi_alpha
        self.mb = pk.multi_beta
        self.mg = pk.multi_gamma

    def pt(self, i: int, j: int) -> int:
        return self.pair_idx[self.seq[i]][self.seq[j]]

    def hairpin_cents(self, i: int, j: int) -> int:
        seq = self.seq
        pt = self.pt(i, j)
        k = j - i - 1
        cents = self.hp_len[k] + self.hp_mis[pt][seq[i + 1]][seq[j - 1]]
        if k <= 4:
            code = 0
            for m in range(i, j + 1):
                code = code * 4 + seq[m]
            cents += (self.special3 if k == 3 else self.special4).get(code, 0)
        return cents

    def two_loop_cents(self, i: int, j: int, r: int, q: int) -> int:
        seq = self.seq
        pt = self.pt(i, j)
        pt_in = self.pt(r, q)
        kl, kr = r - i - 1, j - q - 1
        if kl == 0 and kr == 0:
            return self.stack[pt][pt_in]
        if kl == 0 or kr == 0:
            k1 = kl if kl > kr else kr
            cents = self.bulge_len[k1]
            if k1 == 1:
                cents += self.stack[pt][pt_in]
            return cents
        pt_rev = self.pair_idx[seq[q]][seq[r]]
        return (
            self.internal_len[kl][kr]
            + self.in_mis[pt][seq[i + 1]][seq[j - 1]]
            + self.in_mis[pt_rev][seq[q + 1]][seq[r - 1]]
        )

    def two_loop_range(self, i: int, j: int):
        """Candidate inner arcs (r, q) of a two-sided loop closed by (i, j)."""
        seq = self.seq
        pair_idx = self.pair_idx
        for r in range(i + 1, min(i + 1 + self.cap, j - 5) + 1):
            for q in range(max(r + 4, j - 1 - self.cap), j):
                if pair_idx[seq[r]][seq[q]] >= 0:
                    yield r, q

    # -- fill ------------------------------------------------------------------

    def fill(self):
        n = self.n
        INF = INF_CENTS
        ve = [[INF] * n for _ in range(n)]
        vc = [[0] * n for _ in range(n)]
        me = [[INF] * n for _ in range(n)]
        mc = [[0] * n for _ in range(n)]
        m2e = [[INF] * n for _ in range(n)]
        m2c = [[0] * n for _ in range(n)]
        mb, mg = self.mb, self.mg
        for d in range(0, n):
            for i in range(0, n - d):
                j = i + d
                if d > 3 and self.pt(i, j) >= 0:
                    best_e, best_c = self.hairpin_cents(i, j), 1
                    for r, q in self.two_loop_range(i, j):
                        if ve[r][q] >= INF:
                            continue
                        cand_e = self.two_loop_cents(i, j, r, q) + ve[r][q]
                        cand_c = vc[r][q] + 1
                        if cand_e < best_e or (cand_e == best_e and cand_c < best_c):
                            best_e, best_c = cand_e, cand_c
                    if d >= 2 and m2e[i + 1][j - 1] < INF:
                        cand_e = self.ma + mb + m2e[i + 1][j - 1]
                        cand_c = m2c[i + 1][j - 1] + 1
                        if cand_e < best_e or (cand_e == best_e and cand_c < best_c):
                            best_e, best_c = cand_e, cand_c
                    ve[i][j], vc[i][j] = best_e, best_c
                # M / M2 over [i..j]
                best_e, best_c = INF, 0
                best2_e, best2_c = INF, 0
                if d >= 1 and me[i][j - 1] < INF:
                    best_e, best_c = me[i][j - 1] + mg, mc[i][j - 1]
                if d >= 1 and m2e[i][j - 1] < INF:
                    best2_e, best2_c = m2e[i][j - 1] + mg, m2c[i][j - 1]
                for k in range(i, j - 3):
                    if ve[k][j] >= INF:
                        continue
                    branch_e = mb + ve[k][j]
                    branch_c = 1 + vc[k][j]
                    cand_e = (k - i) * mg + branch_e  # all-unpaired prefix
                    cand_c = branch_c
                    if cand_e < best_e or (cand_e == best_e and cand_c < best_c):
                        best_e, best_c = cand_e, cand_c
                    if k > i and me[i][k - 1] < INF:
                        cand_e = me[i][k - 1] + branch_e
                        cand_c = mc[i][k - 1] + branch_c
                        if cand_e < best_e or (cand_e == best_e and cand_c < best_c):
                            best_e, best_c = cand_e, cand_c
                        if cand_e < best2_e or (cand_e == best2_e and cand_c < best2_c):
                            best2_e, best2_c = cand_e, cand_c
                me[i][j], mc[i][j] = best_e, best_c
                m2e[i][j], m2c[i][j] = best2_e, best2_c
        we = [0] * (n + 1)
        wc = [0] * (n + 1)
        for i in range(n - 1, -1, -1):
            best_e, best_c = we[i + 1], wc[i + 1]
            for j in range(i + 4, n):
                if ve[i][j] >= INF:
                    continue
                cand_e = ve[i][j] + we[j + 1]
                cand_c = vc[i][j] + wc[j + 1]
                if cand_e < best_e or (cand_e == best_e and cand_c < best_c):
                    best_e, best_c = cand_e, cand_c
            we[i], wc[i] = best_e, best_c
        self.ve, self.vc, self.me, self.mc, self.m2e, self.m2c = ve, vc, me, mc, m2e, m2c
        self.we, self.wc = we, wc

    # -- traceback ---------------------------------------------------------------

    def traceback(self) -> list[tuple[int, int]]:
        arcs: list[tuple[int, int]] = []
        frames: list[tuple] = [("W", 0)]
        while frames:
            frame = frames.pop()
            if frame[0] == "W":
                self._trace_w(frame[1], arcs, frames)
            elif frame[0] == "V":
                self._trace_v(frame[1], frame[2], arcs, frames)
            elif frame[0] == "M":
                self._trace_m(frame[1], frame[2], arcs, frames)
            else:
                self._trace_m2(frame[1], frame[2], arcs, frames)
        return arcs

    def _trace_w(self, i, arcs, frames):
        n = self.n
        while i < n:
            te, tc = self.we[i], self.wc[i]
            paired = False
            for j in range(i + 4, n):
                if self.ve[i][j] >= INF_CENTS:
                    continue
                if self.ve[i][j] + self.we[j + 1] == te and self.vc[i][j] + self.wc[j + 1] == tc:
                    arcs.append((i, j))
                    frames.append(("V", i, j))
                    i = j + 1
                    paired = True
                    break
            if not paired:
                i += 1

    def _trace_v(self, i, j, arcs, frames):
        te, tc = self.ve[i][j], self.vc[i][j]
        if tc == 1 and te == self.hairpin_cents(i, j):
            return
        for r, q in self.two_loop_range(i, j):
            if self.ve[r][q] >= INF_CENTS:
                continue
            if (
                self.two_loop_cents(i, j, r, q) + self.ve[r][q] == te
                and self.vc[r][q] + 1 == tc
            ):
                arcs.append((r, q))
                frames.append(("V", r, q))
                return
        assert (
            self.m2e[i + 1][j - 1] < INF_CENTS
            and self.ma + self.mb + self.m2e[i + 1][j - 1] == te
            and self.m2c[i + 1][j - 1] + 1 == tc
        )
        frames.append(("M2", i + 1, j - 1))

    def _trace_m(self, i, j, arcs, frames):
        while True:
            te, tc = self.me[i][j], self.mc[i][j]
            for k in range(i, j - 3):
                if self.ve[k][j] >= INF_CENTS:
                    continue
                branch_e = self.mb + self.ve[k][j]
                branch_c = 1 + self.vc[k][j]
                if (k - i) * self.mg + branch_e == te and branch_c == tc:
                    arcs.append((k, j))
                    frames.append(("V", k, j))
                    return
                if k > i and self.me[i][k - 1] < INF_CENTS:
                    if self.me[i][k - 1] + branch_e == te and self.mc[i][k - 1] + branch_c == tc:
                        arcs.append((k, j))
                        frames.append(("V", k, j))
                        frames.append(("M", i, k - 1))
                        return
            j -= 1  # trailing unpaired position

    def _trace_m2(self, i, j, arcs, frames):
        while True:
            te, tc = self.m2e[i][j], self.m2c[i][j]
            for k in range(i, j - 3):
                if self.ve[k][j] >= INF_CENTS or k <= i or self.me[i][k - 1] >= INF_CENTS:
                    continue
                if (
                    self.me[i][k - 1] + self.mb + self.ve[k][j] == te
                    and self.mc[i][k - 1] + 1 + self.vc[k][j] == tc
                ):
                    arcs.append((k, j))
                    frames.append(("V", k, j))
                    frames.append(("M", i, k - 1))
                    return
            j -= 1


def fold(seq_codes, pk: PackedTables) -> tuple[int, list[tuple[int, int]]]:
    """Minimum free energy fold: (energy in centi-kcal, 0-based arcs)."""
    dp = _Dp([int(c) for c in seq_codes], pk)
    if dp.n < 5:
        return 0, []
    dp.fill()
    if dp.we[0] >= 0 and dp.wc[0] == 0:
        return dp.we[0], []
    return dp.we[0], dp.traceback()


def _logadd(a: float, b: float) -> float:
    if a == NEG_INF:
        return b
    if b == NEG_INF:
        return a
    if a < b:
        a, b = b, a
    return a + math.log1p(math.exp(b - a))


def mccaskill(seq_codes, pk: PackedTables, rt: float) -> float:
    """log of the partition function over all structures of the sequence."""
    dp = _Dp([int(c) for c in seq_codes], pk)
    n = dp.n
    if n < 5:
        return 0.0
    scale = -1.0 / (100.0 * rt)
    wb = pk.multi_beta * scale
    wg = pk.multi_gamma * scale
    w_close = (pk.multi_alpha + pk.multi_beta) * scale
    vl = [[NEG_INF] * n for _ in range(n)]
    ml = [[NEG_INF] * n for _ in range(n)]
    m2l = [[NEG_INF] * n for _ in range(n)]
    for d in range(0, n):
        for i in range(0, n - d):
            j = i + d
            if d > 3 and dp.pt(i, j) >= 0:
                acc = dp.hairpin_cents(i, j) * scale
                for r, q in dp.two_loop_range(i, j):
                    if vl[r][q] != NEG_INF:
                        acc = _logadd(acc, dp.two_loop_cents(i, j, r, q) * scale + vl[r][q])
                if d >= 2 and m2l[i + 1][j - 1] != NEG_INF:
                    acc = _logadd(acc, w_close + m2l[i + 1][j - 1])
                vl[i][j] = acc
            acc1 = ml[i][j - 1] + wg if d >= 1 else NEG_INF
            acc2 = m2l[i][j - 1] + wg if d >= 1 else NEG_INF
            for k in range(i, j - 3):
                if vl[k][j] == NEG_INF:
                    continue
                branch = wb + vl[k][j]
                prefix = (k - i) * wg
                if k > i and ml[i][k - 1] != NEG_INF:
                    prefix = _logadd(prefix, ml[i][k - 1])
                    acc2 = _logadd(acc2, ml[i][k - 1] + branch)
                acc1 = _logadd(acc1, prefix + branch)
            ml[i][j] = acc1
            m2l[i][j] = acc2
    wl = [NEG_INF] * (n + 1)
    wl[n] = 0.0
    for i in range(n - 1, -1, -1):
        acc = wl[i + 1]
        for j in range(i + 4, n):
            if vl[i][j] != NEG_INF:
                acc = _logadd(acc, vl[i][j] + wl[j + 1])
        wl[i] = acc
    return wl[0]
