"""Secondary structures: parsing, validation, loop decomposition, counting, uniform sampling.

Positions are 1-based in every public interface. An arc ``(i, j)`` is a base
pair with ``i < j`` and ``j - i > 3`` (minimum hairpin size). Structures are
pseudoknot-free: no two arcs cross.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .errors import SequenceError, StructureError

Arc = tuple[int, int]

#: Nucleotide alphabet; the index of each letter is its stable integer code.
BASES = "AUCG"

_BASE_CODE = {b: k for k, b in enumerate(BASES)}


def encode_sequence(seq: str | np.ndarray) -> np.ndarray:
    """Encode a nucleotide string as a uint8 code array (A=0, U=1, C=2, G=3).

    Accepts lowercase and DNA-style ``T`` (mapped to ``U``); arrays are
    passed through unchanged.
    """
    if isinstance(seq, np.ndarray):
        return seq.astype(np.uint8, copy=False)
    if not seq:
        raise SequenceError("empty sequence")
    codes = np.empty(len(seq), dtype=np.uint8)
    for col, ch in enumerate(seq.upper().replace("T", "U"), start=1):
        code = _BASE_CODE.get(ch)
        if code is None:
            raise SequenceError(f"illegal nucleotide {ch!r}", column=col)
        codes[col - 1] = code
    return codes


def decode_sequence(codes: np.ndarray) -> str:
    """Inverse of :func:`encode_sequence`."""
    return "".join(BASES[c] for c in codes)

#: Minimum index gap of an arc: every pair (i, j) must satisfy j - i > MIN_HAIRPIN_GAP,
#: i.e. a hairpin encloses at least 3 unpaired bases.
MIN_HAIRPIN_GAP = 3


def _check_arc(i: int, j: int, n: int) -> None:
    if not (1 <= i < j <= n):
        raise StructureError(f"arc ({i},{j}) out of range for length {n}")
    if j - i <= MIN_HAIRPIN_GAP:
        raise StructureError(
            f"arc ({i},{j}) violates the minimum hairpin size (requires j-i > {MIN_HAIRPIN_GAP})"
        )


@dataclass(frozen=True)
class SecondaryStructure:
    """A pseudoknot-free secondary structure: a backbone length and a set of arcs."""

    n: int
    arcs: tuple[Arc, ...]

    def __init__(self, n: int, arcs=()):
        if n < 1:
            raise StructureError(f"structure length must be >= 1, got {n}")
        normalized = tuple(sorted((int(i), int(j)) for i, j in arcs))
        object.__setattr__(self, "n", int(n))
        object.__setattr__(self, "arcs", normalized)
        self._validate()

    def _validate(self) -> None:
        seen: set[int] = set()
        for i, j in self.arcs:
            _check_arc(i, j, self.n)
            for p in (i, j):
                if p in seen:
                    raise StructureError(f"position {p} occurs in more than one arc")
                seen.add(p)
        # arcs are sorted by (i, j); two arcs cross iff i < r < j < s
        open_ends: list[int] = []
        for i, j in self.arcs:
            while open_ends and open_ends[-1] < i:
                open_ends.pop()
            if open_ends and open_ends[-1] < j:
                raise StructureError(f"crossing arcs: ({i},{j}) crosses an arc ending at {open_ends[-1]}")
            open_ends.append(j)

    @property
    def partner(self) -> dict[int, int]:
        """Map of paired positions, both directions."""
        try:
            return self.__dict__["_partner"]
        except KeyError:
            pm = {}
            for i, j in self.arcs:
                pm[i] = j
                pm[j] = i
            self.__dict__["_partner"] = pm
            return pm

    def to_dot_bracket(self) -> str:
        chars = ["."] * self.n
        for i, j in self.arcs:
            chars[i - 1] = "("
            chars[j - 1] = ")"
        return "".join(chars)

    def to_pair_lines(self) -> str:
        """Pair-list text form: first line the length, then one ``i j`` pair per line."""
        lines = [str(self.n)]
        lines.extend(f"{i} {j}" for i, j in self.arcs)
        return "\n".join(lines) + "\n"

    def __str__(self) -> str:
        return self.to_dot_bracket()


def parse_dot_bracket(text: str, *, line: int | None = None) -> SecondaryStructure:
    """Parse one dot-bracket string into a validated structure.

    Raises StructureError on illegal characters, unbalanced brackets, or a
    hairpin shorter than the minimum size; the error carries the offending
    column.
    """
    s = text.strip()
    if not s:
        raise StructureError("empty structure line", line=line)
    stack: list[int] = []
    arcs: list[Arc] = []
    for col, ch in enumerate(s, start=1):
        if ch == ".":
            continue
        if ch == "(":
            stack.append(col)
        elif ch == ")":
            if not stack:
                raise StructureError("unbalanced ')'", line=line, column=col)
            i = stack.pop()
            if col - i <= MIN_HAIRPIN_GAP:
                raise StructureError(
                    f"hairpin closed by ({i},{col}) is too short (j-i must exceed {MIN_HAIRPIN_GAP})",
                    line=line,
                    column=col,
                )
            arcs.append((i, col))
        else:
            raise StructureError(f"illegal character {ch!r}", line=line, column=col)
    if stack:
        raise StructureError("unbalanced '('", line=line, column=stack[0])
    return SecondaryStructure(len(s), arcs)


def parse_pair_lines(text: str) -> SecondaryStructure:
    """Parse the pair-list form: a length line followed by ``i j`` lines."""
    n = None
    arcs: list[Arc] = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        stripped = raw.strip()
        if not stripped or stripped.startswith("#"):
            continue
        fields = stripped.split()
        if n is None:
            if len(fields) != 1 or not fields[0].isdigit():
                raise StructureError("pair-list input must start with the structure length", line=lineno)
            n = int(fields[0])
            continue
        if len(fields) != 2:
            raise StructureError("expected 'i j' pair", line=lineno)
        try:
            i, j = int(fields[0]), int(fields[1])
        except ValueError:
            raise StructureError("expected integer pair positions", line=lineno) from None
        arcs.append((i, j))
    if n is None:
        raise StructureError("empty pair-list input")
    return SecondaryStructure(n, arcs)


# ---------------------------------------------------------------------------
# Loop decomposition
# ---------------------------------------------------------------------------


class LoopKind(enum.Enum):
    HAIRPIN = "hairpin"
    HELIX = "helix"
    BULGE = "bulge"
    INTERIOR = "interior"
    MULTI = "multi"
    EXTERIOR = "exterior"


@dataclass(frozen=True)
class Loop:
    """One loop of a decomposition.

    ``intervals`` follow the diagram convention: consecutive backbone
    intervals ``[a, b]`` whose junctions are the loop's arcs. For a loop
    closed by ``(i, j)`` with branches ``(p_1,q_1)..(p_k,q_k)`` they read
    ``[i,p_1], [q_1,p_2], .., [q_k,j]``; the exterior loop runs from 1 to n.
    """

    kind: LoopKind
    closing: Arc | None
    branches: tuple[Arc, ...]
    intervals: tuple[tuple[int, int], ...]
    unpaired: int

    def unpaired_positions(self) -> tuple[int, ...]:
        """Backbone positions of this loop that are not endpoints of its arcs."""
        endpoints = set()
        if self.closing is not None:
            endpoints.update(self.closing)
        for p, q in self.branches:
            endpoints.add(p)
            endpoints.add(q)
        out = []
        for a, b in self.intervals:
            out.extend(p for p in range(a, b + 1) if p not in endpoints)
        return tuple(out)


@dataclass(frozen=True)
class LoopDecomposition:
    """All loops of a structure, exterior first, parents before children."""

    structure: SecondaryStructure
    loops: tuple[Loop, ...]
    arc_to_closing_loop: dict[Arc, int] = field(compare=False)
    arc_to_parent_loop: dict[Arc, int] = field(compare=False)


def _children_map(S: SecondaryStructure) -> tuple[list[Arc], dict[Arc, list[Arc]]]:
    """Roots and direct-nesting children of every arc (arcs sorted by position)."""
    roots: list[Arc] = []
    children: dict[Arc, list[Arc]] = {arc: [] for arc in S.arcs}
    stack: list[Arc] = []
    for arc in S.arcs:  # sorted by (i, j)
        while stack and stack[-1][1] < arc[0]:
            stack.pop()
        if stack:
            children[stack[-1]].append(arc)
        else:
            roots.append(arc)
        stack.append(arc)
    return roots, children


def _loop_for(closing: Arc | None, branches: list[Arc], bounds: tuple[int, int]) -> Loop:
    lo, hi = bounds
    cuts = [lo]
    for p, q in branches:
        cuts.extend((p, q))
    cuts.append(hi)
    intervals = tuple((cuts[t], cuts[t + 1]) for t in range(0, len(cuts), 2))
    span = hi - lo + 1
    paired_inside = sum(q - p + 1 for p, q in branches)
    if closing is None:
        unpaired = span - paired_inside
    else:
        unpaired = span - paired_inside - 2
    if closing is None:
        kind = LoopKind.EXTERIOR
    elif not branches:
        kind = LoopKind.HAIRPIN
    elif len(branches) >= 2:
        kind = LoopKind.MULTI
    else:
        (p, q) = branches[0]
        left = p - closing[0] - 1
        right = closing[1] - q - 1
        if left == 0 and right == 0:
            kind = LoopKind.HELIX
        elif left == 0 or right == 0:
            kind = LoopKind.BULGE
        else:
            kind = LoopKind.INTERIOR
    return Loop(kind, closing, tuple(branches), intervals, unpaired)


@lru_cache(maxsize=512)
def decompose(S: SecondaryStructure) -> LoopDecomposition:
    """Decompose a structure into its loops (exterior first, parents before children).

    Every arc closes exactly one loop and is a branch of exactly one other
    (the exterior loop holds the outermost arcs as branches).
    """
    roots, children = _children_map(S)
    loops: list[Loop] = [_loop_for(None, roots, (1, S.n))]
    arc_to_closing: dict[Arc, int] = {}
    arc_to_parent: dict[Arc, int] = {arc: 0 for arc in roots}
    order: list[Arc] = list(roots)
    while order:
        arc = order.pop(0)
        idx = len(loops)
        loops.append(_loop_for(arc, children[arc], arc))
        arc_to_closing[arc] = idx
        for child in children[arc]:
            arc_to_parent[child] = idx
        order = children[arc] + order  # depth-first, left-to-right
    return LoopDecomposition(S, tuple(loops), arc_to_closing, arc_to_parent)


# ---------------------------------------------------------------------------
# Counting and uniform sampling
# ---------------------------------------------------------------------------


@lru_cache(maxsize=64)
def _structure_counts(n: int) -> tuple[int, ...]:
    """f[m] = number of valid structures on m positions, m = 0..n (exact big ints)."""
    f = [1] * (min(n, MIN_HAIRPIN_GAP + 1) + 1)
    for m in range(len(f), n + 1):
        total = f[m - 1]
        # position 1 paired with position t (arc gap t-1 > MIN_HAIRPIN_GAP)
        for t in range(MIN_HAIRPIN_GAP + 2, m + 1):
            total += f[t - 2] * f[m - t]
        f.append(total)
    return tuple(f[: n + 1])


def count_structures(n: int) -> int:
    """Number of secondary structures on ``n`` positions (minimum hairpin size enforced)."""
    if n < 0:
        raise ValueError("n must be >= 0")
    if n == 0:
        return 1
    return _structure_counts(n)[n]


def _rand_below(rng: np.random.Generator, m: int) -> int:
    """Uniform integer in [0, m) for arbitrarily large m (rejection over raw bits)."""
    if m <= 0:
        raise ValueError("m must be positive")
    bits = m.bit_length()
    words = (bits + 31) // 32
    excess = words * 32 - bits
    while True:
        x = 0
        for w in rng.integers(0, 2**32, size=words, dtype=np.uint64):
            x = (x << 32) | int(w)
        x >>= excess
        if x < m:
            return x


def _unrank_structure(n: int, rank: int) -> list[Arc]:
    """Decode ``rank`` in [0, count_structures(n)) into an arc list.

    Decoding mirrors the counting recursion: at the first position of each
    segment, ranks below f(m-1) leave it unpaired; the remainder is split by
    the partner position t, then into (inside, outside) sub-ranks.
    """
    f = _structure_counts(n)
    arcs: list[Arc] = []
    work: list[tuple[int, int, int]] = [(1, n, rank)]  # (origin, length, rank)
    while work:
        origin, m, r = work.pop()
        while m > MIN_HAIRPIN_GAP + 1:
            if r < f[m - 1]:
                origin += 1
                m -= 1
                continue
            r -= f[m - 1]
            for t in range(MIN_HAIRPIN_GAP + 2, m + 1):
                block = f[t - 2] * f[m - t]
                if r < block:
                    inside_rank, outside_rank = divmod(r, f[m - t])
                    arcs.append((origin, origin + t - 1))
                    work.append((origin + t, m - t, outside_rank))
                    origin, m, r = origin + 1, t - 2, inside_rank
                    break
                r -= block
            else:  # pragma: no cover - rank bounded by construction
                raise AssertionError("rank out of range")
        # m <= MIN_HAIRPIN_GAP + 1: no arcs fit
    return arcs


def sample_uniform_structure(n: int, rng: np.random.Generator) -> SecondaryStructure:
    """Draw a structure of length ``n`` uniformly over all valid structures."""
    if n < 1:
        raise ValueError("n must be >= 1")
    rank = _rand_below(rng, count_structures(n))
    return SecondaryStructure(n, _unrank_structure(n, rank))
