"""Flat, kernel-friendly views of an EnergyParams instance.

Both fold backends consume the same packed arrays, so their energies agree
with :mod:`seqsem.energy` to the exact integer centi-kcal.
"""

from __future__ import annotations

import numpy as np

from ..energy import PAIR_INDEX, EnergyParams
from ..structure import BASES

#: Interior loops larger than this per side are not searched by the fold DP
#: (standard windowing; exact for every structure whose sides fit).
DEFAULT_MAX_INTERIOR = 30

#: Sentinel for "no structure" in integer energy DP cells.
INF_CENTS = 1 << 60


class PackedTables:
    """Dense integer tables sized for sequences up to ``capacity`` positions."""

    def __init__(self, params: EnergyParams, capacity: int, max_interior: int):
        self.max_interior = max_interior
        self.capacity = max(capacity, 8)
        self.pair_idx = np.ascontiguousarray(PAIR_INDEX, dtype=np.int8)
        self.stack = np.ascontiguousarray(params.stack_cents, dtype=np.int64)
        self.hairpin_mismatch = np.ascontiguousarray(params.hairpin_mismatch_cents, dtype=np.int64)
        self.internal_mismatch = np.ascontiguousarray(params.internal_mismatch_cents, dtype=np.int64)
        self.hairpin_len = np.array(
            [0] * 3 + [params.hairpin_len_cents(k) for k in range(3, self.capacity + 1)],
            dtype=np.int64,
        )
        self.bulge_len = np.array(
            [0] + [params.bulge_len_cents(k) for k in range(1, self.capacity + 1)],
            dtype=np.int64,
        )
        side = max_interior + 1
        self.internal_len = np.zeros((side, side), dtype=np.int64)
        for k1 in range(1, side):
            for k2 in range(1, side):
                self.internal_len[k1, k2] = params.internal_len_cents(max(k1, k2), min(k1, k2))
        self.special3 = np.zeros(4**5, dtype=np.int64)
        self.special4 = np.zeros(4**6, dtype=np.int64)
        for seq, cents in params.special_loops_cents.items():
            code = 0
            for ch in seq:
                code = code * 4 + BASES.index(ch)
            (self.special3 if len(seq) == 5 else self.special4)[code] = cents
        self.multi_alpha = int(params.multi_alpha_cents)
        self.multi_beta = int(params.multi_beta_cents)
        self.multi_gamma = int(params.multi_gamma_cents)


def packed_tables(
    params: EnergyParams, n: int, max_interior: int = DEFAULT_MAX_INTERIOR
) -> PackedTables:
    """Packed tables covering length ``n``, cached on the params instance."""
    cache = params.__dict__.setdefault("_packed_tables", {})
    packed = cache.get(max_interior)
    if packed is None or packed.capacity < n:
        packed = PackedTables(params, max(n, 2 * getattr(packed, "capacity", 32)), max_interior)
        cache[max_interior] = packed
    return packed
