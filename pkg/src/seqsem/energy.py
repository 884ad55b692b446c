"""Nearest-neighbor energy model: parameter tables and loop/structure energies.

Energies are stored internally as integer centi-kcal/mol so that sums over
loops are exact (no float accumulation error): the energy of a structure is
bit-identical to the sum of its loop energies no matter the summation order.
Public functions return kcal/mol floats; ``math.inf`` marks an assignment
whose arcs carry a non-pairable nucleotide duo (Boltzmann weight 0).
"""

from __future__ import annotations

import hashlib
import math
from importlib import resources

import numpy as np

from .errors import ParamsError
from .structure import (
    BASES,
    Loop,
    LoopKind,
    SecondaryStructure,
    decode_sequence,
    decompose,
    encode_sequence,
)

#: Admissible ordered pairs (Watson-Crick + wobble); index = pair type code.
PAIR_TYPES = ("AU", "UA", "CG", "GC", "GU", "UG")

INADMISSIBLE = -1

#: PAIR_INDEX[a][b] = pair-type code of (a, b), or -1 if the duo cannot pair.
PAIR_INDEX = np.full((4, 4), INADMISSIBLE, dtype=np.int8)
for _k, _pt in enumerate(PAIR_TYPES):
    PAIR_INDEX[BASES.index(_pt[0]), BASES.index(_pt[1])] = _k

#: Gas constant in kcal/(mol*K).
GAS_CONSTANT = 1.98717e-3

_HAIRPIN_LEN_RANGE = (3, 30)
_BULGE_LEN_RANGE = (1, 30)
_INTERNAL_TOTAL_RANGE = (2, 60)

_REQUIRED_SCALARS = (
    "rt",
    "extrapolation_coeff",
    "ninio_asymmetry",
    "ninio_max",
    "multi_alpha",
    "multi_beta",
    "multi_gamma",
)
_REQUIRED_TABLES = (
    "stack",
    "hairpin_len",
    "hairpin_mismatch",
    "special_loops",
    "internal_len_total",
    "internal_mismatch",
    "bulge_len",
)


def pair_type(a: int | str, b: int | str) -> int:
    """Pair-type code of an ordered nucleotide duo, or ``INADMISSIBLE``."""
    if isinstance(a, str):
        a = BASES.index(a.upper())
    if isinstance(b, str):
        b = BASES.index(b.upper())
    return int(PAIR_INDEX[a, b])


def _cents(value: float) -> int:
    return int(round(value * 100))


class EnergyParams:
    """All tables of the loop energy model, immutable after load.

    Tables are integer centi-kcal/mol; see the in-repo format document for
    the file grammar. ``rt`` is the thermal scale RT in kcal/mol.
    """

    def __init__(self, scalars: dict[str, float], tables: dict, *, name: str, checksum: str):
        missing = [k for k in _REQUIRED_SCALARS if k not in scalars]
        missing += [k for k in _REQUIRED_TABLES if k not in tables]
        if missing:
            raise ParamsError(f"parameter file {name!r} is missing keys: {', '.join(sorted(missing))}")
        self.name = name
        self.checksum = checksum
        self.rt = float(scalars["rt"])
        if self.rt <= 0:
            raise ParamsError("rt must be positive")
        self.extrapolation_cents = _cents(scalars["extrapolation_coeff"])
        self.ninio_asym_cents = _cents(scalars["ninio_asymmetry"])
        self.ninio_max_cents = _cents(scalars["ninio_max"])
        self.multi_alpha_cents = _cents(scalars["multi_alpha"])
        self.multi_beta_cents = _cents(scalars["multi_beta"])
        self.multi_gamma_cents = _cents(scalars["multi_gamma"])
        self.stack_cents = tables["stack"]
        self.hairpin_len_cents_table = tables["hairpin_len"]
        self.hairpin_mismatch_cents = tables["hairpin_mismatch"]
        self.special_loops_cents = tables["special_loops"]
        self.internal_total_cents_table = tables["internal_len_total"]
        self.internal_mismatch_cents = tables["internal_mismatch"]
        self.bulge_len_cents_table = tables["bulge_len"]
        for arr in (self.stack_cents, self.hairpin_mismatch_cents, self.internal_mismatch_cents):
            arr.setflags(write=False)

    def with_rt(self, rt: float) -> "EnergyParams":
        """Copy of these parameters with a different thermal scale."""
        if rt <= 0:
            raise ParamsError("rt must be positive")
        clone = object.__new__(EnergyParams)
        clone.__dict__.update(self.__dict__)
        clone.rt = float(rt)
        return clone

    # -- length-dependent terms (log extrapolation beyond the tabulated range) --

    def hairpin_len_cents(self, k: int) -> int:
        lo, hi = _HAIRPIN_LEN_RANGE
        if k < lo:
            raise ValueError(f"hairpin needs at least {lo} unpaired bases, got {k}")
        if k <= hi:
            return int(self.hairpin_len_cents_table[k])
        return int(self.hairpin_len_cents_table[hi]) + int(
            round(self.extrapolation_cents * math.log(k / hi))
        )

    def bulge_len_cents(self, k: int) -> int:
        lo, hi = _BULGE_LEN_RANGE
        if k < lo:
            raise ValueError("bulge length must be >= 1")
        if k <= hi:
            return int(self.bulge_len_cents_table[k])
        return int(self.bulge_len_cents_table[hi]) + int(
            round(self.extrapolation_cents * math.log(k / hi))
        )

    def internal_len_cents(self, k1: int, k2: int) -> int:
        """Interior-loop length penalty; ``k1 >= k2 >= 1`` (max/min side lengths)."""
        lo, hi = _INTERNAL_TOTAL_RANGE
        total = k1 + k2
        if k2 < 1 or total < lo:
            raise ValueError("interior loop needs non-empty sides")
        if total <= hi:
            base = int(self.internal_total_cents_table[total])
        else:
            base = int(self.internal_total_cents_table[hi]) + int(
                round(self.extrapolation_cents * math.log(total / hi))
            )
        return base + min(self.ninio_max_cents, self.ninio_asym_cents * (k1 - k2))

    def special_loop_codes(self, k: int) -> dict[int, int]:
        """Special short-hairpin bonuses keyed by the base-4 integer code of the
        full (k+2)-letter loop subsequence, for ``k`` unpaired bases."""
        cache = self.__dict__.setdefault("_special_codes", {})
        if k not in cache:
            table: dict[int, int] = {}
            for seq, cents in self.special_loops_cents.items():
                if len(seq) != k + 2:
                    continue
                code = 0
                for ch in seq:
                    code = code * 4 + BASES.index(ch)
                table[code] = cents
            cache[k] = table
        return cache[k]


# ---------------------------------------------------------------------------
# Parameter file parsing
# ---------------------------------------------------------------------------


def _parse_pair_name(token: str, lineno: int) -> int:
    try:
        return PAIR_TYPES.index(token)
    except ValueError:
        raise ParamsError(f"unknown pair type {token!r}", line=lineno) from None


def _parse_base(token: str, lineno: int) -> int:
    if token in BASES:
        return BASES.index(token)
    raise ParamsError(f"unknown nucleotide {token!r}", line=lineno)


def _finish_range_table(name: str, entries: dict[int, int], span: tuple[int, int]) -> np.ndarray:
    lo, hi = span
    arr = np.zeros(hi + 1, dtype=np.int64)
    missing = []
    for k in range(lo, hi + 1):
        if k not in entries:
            missing.append(k)
        else:
            arr[k] = entries[k]
    if missing:
        raise ParamsError(f"table {name!r} is missing entries for {missing}")
    extra = sorted(set(entries) - set(range(lo, hi + 1)))
    if extra:
        raise ParamsError(f"table {name!r} has out-of-range entries for {extra}")
    return arr


def parse_params(text: str, *, name: str = "<string>") -> EnergyParams:
    """Parse a parameter file (see docs/params-format.md for the grammar)."""
    checksum = hashlib.sha256(text.encode()).hexdigest()
    scalars: dict[str, float] = {}
    tables: dict = {}
    current: str | None = None
    rows: list[tuple[int, list[str]]] = []

    def close_table(lineno: int) -> None:
        nonlocal current, rows
        assert current is not None
        tables[current] = _build_table(current, rows, lineno)
        current, rows = None, []

    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        fields = line.split()
        if current is not None:
            if fields[0] == "end":
                close_table(lineno)
            else:
                rows.append((lineno, fields))
            continue
        keyword = fields[0]
        if keyword == "version":
            if len(fields) != 2 or fields[1] != "1":
                raise ParamsError("unsupported parameter file version", line=lineno)
        elif keyword == "scalar":
            if len(fields) != 3:
                raise ParamsError("scalar lines read: scalar NAME VALUE", line=lineno)
            try:
                scalars[fields[1]] = float(fields[2])
            except ValueError:
                raise ParamsError(f"bad scalar value {fields[2]!r}", line=lineno) from None
        elif keyword == "table":
            if len(fields) != 2:
                raise ParamsError("table lines read: table NAME", line=lineno)
            current = fields[1]
        else:
            raise ParamsError(f"unexpected directive {keyword!r}", line=lineno)
    if current is not None:
        raise ParamsError(f"table {current!r} is not closed with 'end'")
    return EnergyParams(scalars, tables, name=name, checksum=checksum)


def _build_table(name: str, rows: list[tuple[int, list[str]]], end_line: int):
    if name == "stack":
        arr = np.zeros((6, 6), dtype=np.int64)
        seen = set()
        for lineno, fields in rows:
            if len(fields) != 7:
                raise ParamsError("stack rows read: PAIR v v v v v v", line=lineno)
            row = _parse_pair_name(fields[0], lineno)
            seen.add(row)
            arr[row] = [_cents(float(v)) for v in fields[1:]]
        if len(seen) != 6:
            raise ParamsError(f"table 'stack' is missing rows (ended line {end_line})")
        return arr
    if name in ("hairpin_mismatch", "internal_mismatch"):
        arr = np.zeros((6, 4, 4), dtype=np.int64)
        seen = set()
        for lineno, fields in rows:
            if len(fields) != 6:
                raise ParamsError(f"{name} rows read: PAIR BASE v v v v", line=lineno)
            pt = _parse_pair_name(fields[0], lineno)
            x = _parse_base(fields[1], lineno)
            seen.add((pt, x))
            arr[pt, x] = [_cents(float(v)) for v in fields[2:]]
        if len(seen) != 24:
            raise ParamsError(f"table {name!r} is incomplete (ended line {end_line})")
        return arr
    if name in ("hairpin_len", "bulge_len", "internal_len_total"):
        entries: dict[int, int] = {}
        for lineno, fields in rows:
            if len(fields) != 2:
                raise ParamsError(f"{name} rows read: K VALUE", line=lineno)
            entries[int(fields[0])] = _cents(float(fields[1]))
        span = {
            "hairpin_len": _HAIRPIN_LEN_RANGE,
            "bulge_len": _BULGE_LEN_RANGE,
            "internal_len_total": _INTERNAL_TOTAL_RANGE,
        }[name]
        return _finish_range_table(name, entries, span)
    if name == "special_loops":
        table: dict[str, int] = {}
        for lineno, fields in rows:
            if len(fields) != 2:
                raise ParamsError("special_loops rows read: LOOPSEQ VALUE", line=lineno)
            seq = fields[0].upper()
            if len(seq) not in (5, 6) or any(c not in BASES for c in seq):
                raise ParamsError(f"special loop {seq!r} must be 5 or 6 nucleotides", line=lineno)
            if pair_type(seq[0], seq[-1]) == INADMISSIBLE:
                raise ParamsError(f"special loop {seq!r} has a non-pairable closing duo", line=lineno)
            table[seq] = _cents(float(fields[1]))
        return table
    raise ParamsError(f"unknown table {name!r}")


def load_params(path: str | None = None) -> EnergyParams:
    """Load a parameter file; ``None`` loads the shipped default set."""
    if path is None:
        ref = resources.files("seqsem.data").joinpath("default.params")
        return parse_params(ref.read_text(), name="default.params")
    with open(path) as fh:
        text = fh.read()
    return parse_params(text, name=path)


# ---------------------------------------------------------------------------
# Loop and structure energies
# ---------------------------------------------------------------------------


def loop_energy_cents(params: EnergyParams, codes: np.ndarray, loop: Loop) -> int | None:
    """Integer loop energy in centi-kcal/mol; ``None`` when an arc duo cannot pair."""
    for p, q in loop.branches:
        if PAIR_INDEX[codes[p - 1], codes[q - 1]] == INADMISSIBLE:
            return None
    if loop.kind is LoopKind.EXTERIOR:
        return 0
    i, j = loop.closing
    if j > len(codes):
        raise ValueError(f"loop closed by ({i},{j}) does not fit a sequence of length {len(codes)}")
    pt = PAIR_INDEX[codes[i - 1], codes[j - 1]]
    if pt == INADMISSIBLE:
        return None
    if loop.kind is LoopKind.HAIRPIN:
        k = j - i - 1
        cents = params.hairpin_len_cents(k) + int(
            params.hairpin_mismatch_cents[pt, codes[i], codes[j - 2]]
        )
        if k <= 4:
            cents += params.special_loops_cents.get(decode_sequence(codes[i - 1 : j]), 0)
        return cents
    if loop.kind is LoopKind.HELIX:
        r, s = loop.branches[0]
        return int(params.stack_cents[pt, PAIR_INDEX[codes[r - 1], codes[s - 1]]])
    if loop.kind is LoopKind.BULGE:
        r, s = loop.branches[0]
        k1 = max(r - i - 1, j - s - 1)
        cents = params.bulge_len_cents(k1)
        if k1 == 1:
            cents += int(params.stack_cents[pt, PAIR_INDEX[codes[r - 1], codes[s - 1]]])
        return cents
    if loop.kind is LoopKind.INTERIOR:
        r, s = loop.branches[0]
        left, right = r - i - 1, j - s - 1
        pt_inner = PAIR_INDEX[codes[s - 1], codes[r - 1]]
        return (
            params.internal_len_cents(max(left, right), min(left, right))
            + int(params.internal_mismatch_cents[pt, codes[i], codes[j - 2]])
            + int(params.internal_mismatch_cents[pt_inner, codes[s], codes[r - 2]])
        )
    # multi-loop: constants only (p pairs including the closing arc, u unpaired)
    p = len(loop.branches) + 1
    return (
        params.multi_alpha_cents
        + p * params.multi_beta_cents
        + loop.unpaired * params.multi_gamma_cents
    )


def loop_energy(params: EnergyParams, seq: str | np.ndarray, loop: Loop) -> float:
    """Loop energy in kcal/mol (+inf when an arc of the loop cannot pair)."""
    cents = loop_energy_cents(params, encode_sequence(seq), loop)
    return math.inf if cents is None else cents / 100.0


def structure_energy_cents(
    params: EnergyParams, codes: np.ndarray, S: SecondaryStructure
) -> int | None:
    if len(codes) != S.n:
        raise ValueError(f"sequence length {len(codes)} != structure length {S.n}")
    total = 0
    for loop in decompose(S).loops:
        cents = loop_energy_cents(params, codes, loop)
        if cents is None:
            return None
        total += cents
    return total


def structure_energy(params: EnergyParams, seq: str | np.ndarray, S: SecondaryStructure) -> float:
    """Total energy: the sum of the energies of the structure's loops."""
    cents = structure_energy_cents(params, encode_sequence(seq), S)
    return math.inf if cents is None else cents / 100.0
