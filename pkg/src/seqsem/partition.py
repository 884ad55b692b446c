"""Partition function over all sequences of a fixed structure, in log domain.

For a structure S, ``Q(S) = sum over all 4^n sequences of exp(-energy/RT)``.
The recursion fills one 4x4 table per arc (i, j): entry (a, b) is the log
partition value of the substructure under (i, j) with the endpoint
nucleotides fixed to (a, b). Each loop is summed in closed form: only the
nucleotides its energy reads are enumerated; every other position
contributes a multiplicative factor equal to its number of allowed
nucleotides (4 without constraints).

Log-domain floats encode weights; ``-inf`` encodes weight zero and never
turns into NaN.
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass, field

import numpy as np

from .energy import INADMISSIBLE, PAIR_INDEX, EnergyParams
from .structure import Arc, LoopKind, SecondaryStructure, decompose, encode_sequence

NEG_INF = float("-inf")

_ADMISSIBLE = PAIR_INDEX >= 0


def _logsumexp(values: np.ndarray) -> float:
    m = np.max(values)
    if m == NEG_INF:
        return NEG_INF
    return float(m + np.log(np.sum(np.exp(values - m))))


@dataclass(frozen=True, eq=False)
class PatternConstraint:
    """Per-position allowed-nucleotide sets, as an (n, 4) boolean mask.

    The common case, a concrete subsequence on an interval, is the
    singleton-set special case built by :meth:`subsequence`.
    """

    allowed: np.ndarray

    def __post_init__(self):
        if self.allowed.ndim != 2 or self.allowed.shape[1] != 4:
            raise ValueError("allowed mask must have shape (n, 4)")
        if not self.allowed.any(axis=1).all():
            raise ValueError("every position needs at least one allowed nucleotide")
        self.allowed.setflags(write=False)

    @property
    def n(self) -> int:
        return self.allowed.shape[0]

    @classmethod
    def full(cls, n: int) -> "PatternConstraint":
        return cls(np.ones((n, 4), dtype=bool))

    @classmethod
    def subsequence(cls, n: int, start: int, pattern: str) -> "PatternConstraint":
        """Fix positions ``start .. start+len(pattern)-1`` (1-based) to ``pattern``."""
        end = start + len(pattern) - 1
        if not (1 <= start <= end <= n):
            raise ValueError(f"interval [{start},{end}] out of range for length {n}")
        allowed = np.ones((n, 4), dtype=bool)
        codes = encode_sequence(pattern)
        for off, code in enumerate(codes):
            allowed[start - 1 + off] = False
            allowed[start - 1 + off, code] = True
        return cls(allowed)

    @classmethod
    def allowed_sets(cls, n: int, start: int, sets: list[str]) -> "PatternConstraint":
        """General mask: position ``start+t`` may take any nucleotide in ``sets[t]``."""
        end = start + len(sets) - 1
        if not (1 <= start <= end <= n):
            raise ValueError(f"interval [{start},{end}] out of range for length {n}")
        allowed = np.ones((n, 4), dtype=bool)
        for off, letters in enumerate(sets):
            row = np.zeros(4, dtype=bool)
            for code in encode_sequence(letters):
                row[code] = True
            allowed[start - 1 + off] = row
        return cls(allowed)


@dataclass(frozen=True)
class SequencePartition:
    """log Q(S) together with the per-arc 4x4 log tables that produced it."""

    structure: SecondaryStructure
    log_q: float
    arc_tables: dict[Arc, np.ndarray] = field(compare=False)


def _free_log_weight(counts: list[int]) -> float:
    """Σ log(c) over per-position option counts, grouped so that a run of
    identical counts is one multiplication (keeps the empty-structure value
    bit-identical to ``n * log 4``)."""
    total = 0.0
    for count, repeats in Counter(counts).items():
        if count == 0:
            return NEG_INF
        total += repeats * math.log(count)
    return total


class _TableBuilder:
    def __init__(self, params: EnergyParams, S: SecondaryStructure, allowed: np.ndarray):
        self.params = params
        self.S = S
        self.allowed = allowed
        self.scale = -1.0 / (100.0 * params.rt)  # cents -> -E/RT
        self.tables: dict[Arc, np.ndarray] = {}

    # -- helpers ------------------------------------------------------------

    def _codes(self, pos: int) -> np.ndarray:
        return np.flatnonzero(self.allowed[pos - 1])

    def _counts(self, positions) -> list[int]:
        return [int(self.allowed[p - 1].sum()) for p in positions]

    def _pair_mask(self, i: int, j: int) -> np.ndarray:
        """(4, 4) mask of admissible, allowed assignments for arc (i, j)."""
        return _ADMISSIBLE & np.outer(self.allowed[i - 1], self.allowed[j - 1])

    def _mismatch_w(self, table: np.ndarray) -> np.ndarray:
        """(6, 4, 4) mismatch table converted to log-weight units."""
        return table * self.scale

    # -- per-loop table assembly ---------------------------------------------

    def build(self) -> tuple[float, dict[Arc, np.ndarray]]:
        deco = decompose(self.S)
        exterior = deco.loops[0]
        for loop in reversed(deco.loops):  # children before parents
            if loop.kind is LoopKind.EXTERIOR:
                continue
            self.tables[loop.closing] = self._loop_table(loop)
        branch_sum = 0.0
        for arc in exterior.branches:
            branch_sum += _logsumexp(self.tables[arc])
        log_q = branch_sum + _free_log_weight(self._counts(exterior.unpaired_positions()))
        return log_q, self.tables

    def _loop_table(self, loop) -> np.ndarray:
        i, j = loop.closing
        if loop.kind is LoopKind.HAIRPIN:
            inner = self._hairpin_inner(loop)
        elif loop.kind is LoopKind.HELIX:
            inner = self._two_loop_inner(loop, bulge=False)
        elif loop.kind is LoopKind.BULGE:
            inner = self._two_loop_inner(loop, bulge=True)
        elif loop.kind is LoopKind.INTERIOR:
            inner = self._interior_inner(loop)
        else:
            inner = self._multi_inner(loop)
        table = np.where(self._pair_mask(i, j), inner, NEG_INF)
        return table

    def _hairpin_inner(self, loop) -> np.ndarray:
        """(4, 4) array over (a, b): log Σ over loop assignments of the weight."""
        params = self.params
        i, j = loop.closing
        k = j - i - 1
        out = np.full((4, 4), NEG_INF)
        if k <= 4:
            specials = params.special_loop_codes(k)
            positions = list(range(i + 1, j))
            grids = np.meshgrid(*[self._codes(p) for p in positions], indexing="ij")
            assign = np.stack([g.ravel() for g in grids], axis=1)  # (M, k)
            if assign.shape[0] == 0:
                return out
            x, y = assign[:, 0], assign[:, -1]
            mid_code = np.zeros(assign.shape[0], dtype=np.int64)
            for t in range(k):
                mid_code = mid_code * 4 + assign[:, t]
            for a in self._codes(i):
                for b in self._codes(j):
                    pt = PAIR_INDEX[a, b]
                    if pt == INADMISSIBLE:
                        continue
                    cents = params.hairpin_len_cents(k) + params.hairpin_mismatch_cents[pt, x, y]
                    if specials:
                        full_code = ((int(a) * (4**k)) + mid_code) * 4 + int(b)
                        bonus = np.zeros(assign.shape[0], dtype=np.int64)
                        for code, val in specials.items():
                            bonus[full_code == code] = val
                        cents = cents + bonus
                    out[a, b] = _logsumexp(cents * self.scale)
            return out
        # long hairpin: only the closing pair and the two flanking bases matter
        xs, ys = self._codes(i + 1), self._codes(j - 1)
        free = _free_log_weight(self._counts(range(i + 2, j - 1)))
        for a in self._codes(i):
            for b in self._codes(j):
                pt = PAIR_INDEX[a, b]
                if pt == INADMISSIBLE:
                    continue
                cents = params.hairpin_len_cents(k) + params.hairpin_mismatch_cents[
                    pt, xs[:, None], ys[None, :]
                ]
                out[a, b] = _logsumexp(cents * self.scale) + free
        return out

    def _two_loop_inner(self, loop, *, bulge: bool) -> np.ndarray:
        """Helix or bulge: energy reads the two pairs only."""
        params = self.params
        i, j = loop.closing
        r, s = loop.branches[0]
        t_in = self.tables[(r, s)]
        out = np.full((4, 4), NEG_INF)
        if bulge:
            k1 = max(r - i - 1, j - s - 1)
            base_cents = params.bulge_len_cents(k1)
            stacked = k1 == 1
            free = _free_log_weight(self._counts(loop.unpaired_positions()))
        else:
            base_cents = 0
            stacked = True
            free = 0.0
        for a in range(4):
            for b in range(4):
                pt = PAIR_INDEX[a, b]
                if pt == INADMISSIBLE:
                    continue
                if stacked:
                    w = (base_cents + params.stack_cents[pt]) * self.scale  # (6,)
                    vals = t_in + w[PAIR_INDEX] * 1.0
                    vals = np.where(_ADMISSIBLE, vals, NEG_INF)
                else:
                    vals = t_in + base_cents * self.scale
                out[a, b] = _logsumexp(vals) + free
        return out

    def _interior_inner(self, loop) -> np.ndarray:
        """Interior loop: pairs plus the four loop-side neighbor nucleotides."""
        params = self.params
        i, j = loop.closing
        r, s = loop.branches[0]
        kl, kr = r - i - 1, j - s - 1
        len_w = params.internal_len_cents(max(kl, kr), min(kl, kr)) * self.scale
        mis = self._mismatch_w(params.internal_mismatch_cents)  # (6,4,4) log-weights
        free = _free_log_weight(
            self._counts([p for p in range(i + 2, r - 1)] + [p for p in range(s + 2, j - 1)])
        )
        x1s, x2s = self._codes(i + 1), self._codes(r - 1)
        y1s, y2s = self._codes(s + 1), self._codes(j - 1)
        t_in = self.tables[(r, s)]
        out = np.full((4, 4), NEG_INF)
        for a in range(4):
            if not self.allowed[i - 1, a]:
                continue
            for b in range(4):
                pt = PAIR_INDEX[a, b]
                if pt == INADMISSIBLE or not self.allowed[j - 1, b]:
                    continue
                acc = np.full((4, 4), NEG_INF)  # over (c, d)
                for c in self._codes(r):
                    for d in self._codes(s):
                        pt_in = PAIR_INDEX[d, c]  # inner pair seen from the loop side
                        if PAIR_INDEX[c, d] == INADMISSIBLE:
                            continue
                        acc[c, d] = t_in[c, d] + self._neighbor_sum(
                            mis[pt], mis[pt_in], kl, kr, x1s, x2s, y1s, y2s
                        )
                out[a, b] = len_w + free + _logsumexp(acc)
        return out

    @staticmethod
    def _neighbor_sum(m1: np.ndarray, m2: np.ndarray, kl: int, kr: int,
                      x1s, x2s, y1s, y2s) -> float:
        """log Σ over neighbor nucleotides of exp(m1[x1,y2] + m2[y1,x2]).

        ``x1``/``x2`` flank the left interval, ``y1``/``y2`` the right one;
        a side of length 1 collapses its two flanks into one variable.
        """
        if kl == 1 and kr == 1:
            vals = m1[x1s[:, None], y1s[None, :]] + m2[y1s[None, :], x1s[:, None]]
            return _logsumexp(vals)
        if kl == 1:
            left = m1[x1s[:, None], y2s[None, :]]  # (x, y2)
            right = m2[y1s[:, None], x1s[None, :]]  # (y1, x)
            per_x = np.array(
                [_logsumexp(left[t, :]) + _logsumexp(right[:, t]) for t in range(len(x1s))]
            )
            return _logsumexp(per_x)
        if kr == 1:
            left = m1[x1s[:, None], y1s[None, :]]  # (x1, y)
            right = m2[y1s[:, None], x2s[None, :]]  # (y, x2)
            per_y = np.array(
                [_logsumexp(left[:, t]) + _logsumexp(right[t, :]) for t in range(len(y1s))]
            )
            return _logsumexp(per_y)
        return _logsumexp(m1[x1s[:, None], y2s[None, :]]) + _logsumexp(
            m2[y1s[:, None], x2s[None, :]]
        )

    def _multi_inner(self, loop) -> np.ndarray:
        """Multi-loop: the energy is sequence-independent, so branches factorize."""
        params = self.params
        p = len(loop.branches) + 1
        unpaired = loop.unpaired_positions()
        cents = (
            params.multi_alpha_cents
            + p * params.multi_beta_cents
            + loop.unpaired * params.multi_gamma_cents
        )
        total = cents * self.scale + _free_log_weight(self._counts(unpaired))
        for arc in loop.branches:
            total += _logsumexp(self.tables[arc])
        return np.full((4, 4), total)


def partition_function(params: EnergyParams, S: SecondaryStructure) -> SequencePartition:
    """log Q(S) over all sequences, plus the per-arc tables (children first)."""
    allowed = np.ones((S.n, 4), dtype=bool)
    log_q, tables = _TableBuilder(params, S, allowed).build()
    return SequencePartition(S, log_q, tables)


def pattern_partition(
    params: EnergyParams, S: SecondaryStructure, constraint: PatternConstraint
) -> float:
    """log Q(S | constraint): the same recursion over the narrowed alphabet.

    Returns ``-inf`` when no sequence satisfies the constraint (for example a
    pattern forcing a non-pairable duo on an arc); that is a valid weight of
    zero, not an error.
    """
    if constraint.n != S.n:
        raise ValueError(f"constraint length {constraint.n} != structure length {S.n}")
    log_q, _ = _TableBuilder(params, S, constraint.allowed).build()
    return log_q


def pattern_probability(
    params: EnergyParams, S: SecondaryStructure, constraint: PatternConstraint
) -> float:
    """P(pattern | S) = Q(S | pattern) / Q(S), in [0, 1]."""
    log_constrained = pattern_partition(params, S, constraint)
    if log_constrained == NEG_INF:
        return 0.0
    log_q = partition_function(params, S).log_q
    return min(1.0, math.exp(log_constrained - log_q))
