"""Structure-side dual: mfe folding and the partition function over structures.

Two interchangeable kernels implement the dynamic programs: a compiled
Cython extension and a pure-Python fallback. The compiled one is selected at
import when available; set ``SEQSEM_FOLD_BACKEND=python`` (or ``compiled``)
to force a choice. Both produce identical results; see
``benchmarks/compare_backends.py`` for the speed difference.

Ties in the mfe search break deterministically: minimum energy, then fewest
arcs, then the first optimum in the kernels' fixed traceback scan order
(pairing the leftmost position first, candidates in ascending position
order), which selects the lexicographically smallest arc set.
"""

from __future__ import annotations

import os
from dataclasses import dataclass

import numpy as np

from ..energy import EnergyParams
from ..structure import SecondaryStructure, encode_sequence
from ._tables import DEFAULT_MAX_INTERIOR, packed_tables
from . import _engine_py

try:
    from . import _engine_c
except ImportError:  # pragma: no cover - depends on the build environment
    _engine_c = None


def _select_backend():
    choice = os.environ.get("SEQSEM_FOLD_BACKEND", "").strip().lower()
    if choice == "python":
        return _engine_py
    if choice == "compiled":
        if _engine_c is None:
            raise ImportError("SEQSEM_FOLD_BACKEND=compiled but the extension is not built")
        return _engine_c
    if choice:
        raise ValueError(f"unknown SEQSEM_FOLD_BACKEND {choice!r}")
    return _engine_c if _engine_c is not None else _engine_py


_backend = _select_backend()


def backend_name() -> str:
    """Name of the kernel backend in use: 'compiled' or 'python'."""
    return _backend.BACKEND_NAME


def available_backends() -> dict[str, object]:
    backends = {"python": _engine_py}
    if _engine_c is not None:
        backends["compiled"] = _engine_c
    return backends


@dataclass(frozen=True)
class FoldResult:
    """An mfe structure and its energy (a global minimum over all structures)."""

    structure: SecondaryStructure
    energy: float


def mfe_fold(
    params: EnergyParams,
    seq: str | np.ndarray,
    *,
    max_interior: int = DEFAULT_MAX_INTERIOR,
    engine=None,
) -> FoldResult:
    """Fold a sequence to its minimum free energy structure.

    The search covers every valid structure whose two-sided loops have at
    most ``max_interior`` unpaired bases per side (the standard window; exact
    whenever the optimum fits, in particular for short sequences).
    """
    codes = encode_sequence(seq)
    pk = packed_tables(params, len(codes), max_interior)
    impl = engine or _backend
    cents, arcs0 = impl.fold(codes, pk)
    structure = SecondaryStructure(len(codes), [(i + 1, j + 1) for i, j in arcs0])
    return FoldResult(structure, cents / 100.0)


def mccaskill_partition(
    params: EnergyParams,
    seq: str | np.ndarray,
    *,
    max_interior: int = DEFAULT_MAX_INTERIOR,
    engine=None,
) -> float:
    """log of the partition function of a sequence over all its structures.

    Always >= 0: the empty structure contributes weight 1.
    """
    codes = encode_sequence(seq)
    pk = packed_tables(params, len(codes), max_interior)
    impl = engine or _backend
    return impl.mccaskill(codes, pk, params.rt)


def refolds_to(params: EnergyParams, seq: str | np.ndarray, S: SecondaryStructure) -> bool:
    """True iff the sequence's mfe structure equals ``S`` exactly (arc-set equality)."""
    result = mfe_fold(params, seq)
    return result.structure.n == S.n and result.structure.arcs == S.arcs
