"""Boltzmann sampling of sequences for a fixed structure.

Sequences are built top to bottom: the exterior loop first, then each loop
conditioned on its already-fixed closing-pair nucleotides. Within a loop the
energy-relevant positions (at most eight) are drawn jointly from their exact
conditional law; energy-independent positions are uniform. The per-loop
log-probabilities telescope to ``-energy/RT - log Q(S)`` by construction.

Randomness: every draw owns a PCG64 generator seeded from
``SeedSequence(seed, spawn_key=(draw_index,))``, so ensembles are
reproducible and draws are independent and parallel-safe.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from .energy import INADMISSIBLE, PAIR_INDEX, EnergyParams, structure_energy_cents
from .partition import SequencePartition, partition_function
from .structure import LoopKind, SecondaryStructure, decode_sequence, decompose


@dataclass(frozen=True)
class SampledSequence:
    """One Boltzmann draw: the sequence, its energy, and its sampling law."""

    sequence: str
    energy: float
    log_prob: float
    stepwise_logs: tuple[float, ...]


class _Categorical:
    """Discrete draw over precomputed assignments with stored log-weights."""

    __slots__ = ("codes", "logw", "cum")

    def __init__(self, codes: np.ndarray, logw: np.ndarray):
        self.codes = codes
        self.logw = logw
        m = np.max(logw)
        probs = np.exp(logw - m)
        self.cum = np.cumsum(probs / probs.sum())
        self.cum[-1] = 1.0

    def draw(self, rng: np.random.Generator) -> int:
        return int(np.searchsorted(self.cum, rng.random(), side="right"))


class _JointLoop:
    """Hairpin/helix/bulge/interior: joint law of the enumerated positions,
    one categorical per admissible closing assignment (a, b)."""

    def __init__(self, arc, positions, free_positions, table, per_ab):
        self.arc = arc
        self.positions = positions
        self.free_positions = free_positions
        self.table = table
        self.per_ab = per_ab

    def emit(self, rng, seq_codes, stepwise):
        i, j = self.arc
        a, b = int(seq_codes[i - 1]), int(seq_codes[j - 1])
        cat = self.per_ab[(a, b)]
        idx = cat.draw(rng)
        for pos, code in zip(self.positions, cat.codes[idx]):
            seq_codes[pos - 1] = code
        for pos in self.free_positions:
            seq_codes[pos - 1] = rng.integers(0, 4)
        stepwise.append(float(cat.logw[idx]) - float(self.table[a, b]))


class _BranchLoop:
    """Multi or exterior loop: independent per-branch endpoint draws plus
    uniform unpaired positions (the loop energy reads no nucleotides)."""

    def __init__(self, arc, const_logw, branch_arcs, branch_cats, free_positions, norm):
        self.arc = arc  # None for the exterior loop
        self.const_logw = const_logw
        self.branch_arcs = branch_arcs
        self.branch_cats = branch_cats
        self.free_positions = free_positions
        self.norm = norm  # closing-arc table, or log Q(S) for the exterior

    def emit(self, rng, seq_codes, stepwise):
        entry = self.const_logw
        for (p, q), cat in zip(self.branch_arcs, self.branch_cats):
            idx = cat.draw(rng)
            c, d = cat.codes[idx]
            seq_codes[p - 1] = c
            seq_codes[q - 1] = d
            entry += float(cat.logw[idx])
        for pos in self.free_positions:
            seq_codes[pos - 1] = rng.integers(0, 4)
        if self.arc is None:
            norm = self.norm
        else:
            i, j = self.arc
            norm = float(self.norm[seq_codes[i - 1], seq_codes[j - 1]])
        stepwise.append(entry - norm)


def _arc_categorical(table: np.ndarray) -> _Categorical:
    mask = table > float("-inf")
    cs, ds = np.nonzero(mask)
    codes = np.stack([cs, ds], axis=1).astype(np.uint8)
    return _Categorical(codes, table[cs, ds].astype(float))


class SequenceSampler:
    """Reusable sampler for one (params, structure) pair.

    Precomputes every loop's conditional law from the arc tables; each
    subsequent draw costs time linear in the structure length.
    """

    def __init__(
        self,
        params: EnergyParams,
        S: SecondaryStructure,
        partition: SequencePartition | None = None,
    ):
        if partition is None:
            partition = partition_function(params, S)
        assert partition.log_q > float("-inf"), "structure admits no compatible sequence"
        self.params = params
        self.structure = S
        self.partition = partition
        self.scale = -1.0 / (100.0 * params.rt)
        self._loops = self._compile()

    # -- compilation of per-loop laws ----------------------------------------

    def _compile(self):
        deco = decompose(self.structure)
        tables = self.partition.arc_tables
        compiled = []
        for loop in deco.loops:
            if loop.kind in (LoopKind.EXTERIOR, LoopKind.MULTI):
                compiled.append(self._compile_branch_loop(loop, tables))
            else:
                compiled.append(self._compile_joint_loop(loop, tables))
        return compiled

    def _compile_branch_loop(self, loop, tables):
        params = self.params
        if loop.kind is LoopKind.EXTERIOR:
            const = 0.0
            norm = self.partition.log_q
            arc = None
        else:
            p = len(loop.branches) + 1
            cents = (
                params.multi_alpha_cents
                + p * params.multi_beta_cents
                + loop.unpaired * params.multi_gamma_cents
            )
            const = cents * self.scale
            norm = tables[loop.closing]
            arc = loop.closing
        cats = [_arc_categorical(tables[a]) for a in loop.branches]
        return _BranchLoop(arc, const, loop.branches, cats, loop.unpaired_positions(), norm)

    def _compile_joint_loop(self, loop, tables):
        params = self.params
        i, j = loop.closing
        table = tables[loop.closing]
        per_ab: dict[tuple[int, int], _Categorical] = {}
        if loop.kind is LoopKind.HAIRPIN:
            k = j - i - 1
            if k <= 4:
                positions = tuple(range(i + 1, j))
                free: tuple[int, ...] = ()
            else:
                positions = (i + 1, j - 1)
                free = tuple(range(i + 2, j - 1))
            grid = np.array(list(itertools.product(range(4), repeat=len(positions))), dtype=np.uint8)
            for a in range(4):
                for b in range(4):
                    if PAIR_INDEX[a, b] == INADMISSIBLE:
                        continue
                    logw = self._hairpin_logw(i, j, k, a, b, grid)
                    per_ab[(a, b)] = _Categorical(grid, logw)
        else:
            r, s = loop.branches[0]
            inner = tables[(r, s)]
            if loop.kind is LoopKind.HELIX:
                positions = (r, s)
                free = ()
            elif loop.kind is LoopKind.BULGE:
                positions = (r, s)
                free = loop.unpaired_positions()
            else:
                left_flanks = (i + 1,) if r - i - 1 == 1 else (i + 1, r - 1)
                right_flanks = (s + 1,) if j - s - 1 == 1 else (s + 1, j - 1)
                positions = (r, s) + left_flanks + right_flanks
                free = tuple(
                    p for p in loop.unpaired_positions() if p not in left_flanks + right_flanks
                )
            grid = np.array(list(itertools.product(range(4), repeat=len(positions))), dtype=np.uint8)
            pair_ok = PAIR_INDEX[grid[:, 0], grid[:, 1]] != INADMISSIBLE
            grid = grid[pair_ok]
            for a in range(4):
                for b in range(4):
                    if PAIR_INDEX[a, b] == INADMISSIBLE:
                        continue
                    logw = self._two_branch_logw(loop, a, b, grid, inner)
                    per_ab[(a, b)] = _Categorical(grid, logw)
        return _JointLoop(loop.closing, positions, free, table, per_ab)

    def _hairpin_logw(self, i, j, k, a, b, grid) -> np.ndarray:
        params = self.params
        pt = PAIR_INDEX[a, b]
        x, y = grid[:, 0], grid[:, -1]
        cents = params.hairpin_len_cents(k) + params.hairpin_mismatch_cents[pt, x, y]
        if k <= 4:
            specials = params.special_loop_codes(k)
            if specials:
                code = np.full(grid.shape[0], int(a), dtype=np.int64)
                for t in range(k):
                    code = code * 4 + grid[:, t]
                code = code * 4 + int(b)
                bonus = np.zeros(grid.shape[0], dtype=np.int64)
                for c, v in specials.items():
                    bonus[code == c] = v
                cents = cents + bonus
        return cents * self.scale

    def _two_branch_logw(self, loop, a, b, grid, inner) -> np.ndarray:
        params = self.params
        i, j = loop.closing
        r, s = loop.branches[0]
        pt = PAIR_INDEX[a, b]
        c, d = grid[:, 0], grid[:, 1]
        pt_in = PAIR_INDEX[c, d]
        if loop.kind is LoopKind.HELIX:
            cents = params.stack_cents[pt, pt_in]
        elif loop.kind is LoopKind.BULGE:
            k1 = max(r - i - 1, j - s - 1)
            cents = np.full(grid.shape[0], params.bulge_len_cents(k1), dtype=np.int64)
            if k1 == 1:
                cents = cents + params.stack_cents[pt, pt_in]
        else:
            kl, kr = r - i - 1, j - s - 1
            base = params.internal_len_cents(max(kl, kr), min(kl, kr))
            col = 2
            if kl == 1:
                x1 = x2 = grid[:, col]
                col += 1
            else:
                x1, x2 = grid[:, col], grid[:, col + 1]
                col += 2
            if kr == 1:
                y1 = y2 = grid[:, col]
            else:
                y1, y2 = grid[:, col], grid[:, col + 1]
            cents = (
                base
                + params.internal_mismatch_cents[pt, x1, y2]
                + params.internal_mismatch_cents[PAIR_INDEX[d, c], y1, x2]
            )
        return cents * self.scale + inner[c, d]

    # -- drawing ---------------------------------------------------------------

    def sample(self, rng: np.random.Generator) -> SampledSequence:
        """One exact Boltzmann draw using the caller's generator."""
        seq_codes = np.zeros(self.structure.n, dtype=np.uint8)
        stepwise: list[float] = []
        for loop in self._loops:
            loop.emit(rng, seq_codes, stepwise)
        cents = structure_energy_cents(self.params, seq_codes, self.structure)
        assert cents is not None  # sampled assignments are admissible by construction
        return SampledSequence(
            sequence=decode_sequence(seq_codes),
            energy=cents / 100.0,
            log_prob=float(sum(stepwise)),
            stepwise_logs=tuple(stepwise),
        )


def sample(
    params: EnergyParams,
    S: SecondaryStructure,
    partition: SequencePartition,
    rng: np.random.Generator,
) -> SampledSequence:
    """Single draw; prefer :class:`SequenceSampler` when drawing many."""
    return SequenceSampler(params, S, partition).sample(rng)


def ensemble_rng(seed: int, draw_index: int) -> np.random.Generator:
    """The generator owned by one draw of an ensemble (PCG64, spawn-keyed)."""
    return np.random.default_rng(np.random.SeedSequence(entropy=seed, spawn_key=(draw_index,)))


def sample_ensemble(
    params: EnergyParams,
    S: SecondaryStructure,
    count: int,
    seed: int,
    partition: SequencePartition | None = None,
) -> list[SampledSequence]:
    """``count`` independent draws, deterministic for a fixed seed.

    Draw ``k`` uses its own generator from ``ensemble_rng(seed, k)``, so the
    ensemble is reproducible regardless of evaluation order.
    """
    if count < 1:
        raise ValueError("count must be >= 1")
    sampler = SequenceSampler(params, S, partition)
    return [sampler.sample(ensemble_rng(seed, k)) for k in range(count)]
