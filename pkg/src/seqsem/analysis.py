"""Ensemble analytics: entropy heat-maps, pattern reports, energy spectra,
inverse-folding rate, the refolding-gap signature, and the mutual-information
dominant term.
"""

from __future__ import annotations

import math
from collections import Counter
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .energy import EnergyParams, structure_energy
from .fold import mfe_fold
from .partition import PatternConstraint, partition_function, pattern_partition
from .sampler import SampledSequence, sample_ensemble
from .structure import BASES, SecondaryStructure, encode_sequence, sample_uniform_structure

LOG4 = math.log(4.0)


def entropy(frequencies) -> float:
    """Shannon entropy of a pattern distribution, in log base 4.

    Accepts a mapping ``pattern -> probability`` or an array of
    probabilities; they must sum to 1 within 1e-6. Ranges over [0, w] for
    patterns of width w: 0 when one pattern is certain, w when uniform.
    """
    if hasattr(frequencies, "values"):
        probs = np.asarray(list(frequencies.values()), dtype=float)
    else:
        probs = np.asarray(frequencies, dtype=float)
    if probs.size and (probs < 0).any():
        raise ValueError("negative frequency")
    total = probs.sum()
    if abs(total - 1.0) > 1e-6:
        raise ValueError(f"frequencies sum to {total}, not 1")
    positive = probs[probs > 0]
    return float(-(positive * (np.log(positive) / LOG4)).sum())


# ---------------------------------------------------------------------------
# Heat maps
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class HeatMap:
    """R[i][j] = 1 - E[i][j]/(j-i+1) for intervals of width <= window.

    ``values`` is (n+1, n+1), 1-based, NaN outside the band. R=0 means the
    interval looks uniform, R=1 means a single pattern is certain.
    """

    n: int
    window: int
    values: np.ndarray
    provenance: str

    def entries(self):
        for i in range(1, self.n + 1):
            for j in range(i, min(self.n, i + self.window - 1) + 1):
                yield i, j, float(self.values[i, j])

    def to_csv(self) -> str:
        lines = ["i\\j," + ",".join(str(j) for j in range(1, self.n + 1))]
        for i in range(1, self.n + 1):
            cells = [str(i)]
            for j in range(1, self.n + 1):
                v = self.values[i, j]
                cells.append(format(v, ".9g") if not math.isnan(v) else "")
            lines.append(",".join(cells))
        return "\n".join(lines) + "\n"

    def to_pgm(self, saturation: float = 0.59) -> str:
        """ASCII PGM rendering; heat at or above ``saturation`` is black."""
        rows = []
        for i in range(1, self.n + 1):
            row = []
            for j in range(1, self.n + 1):
                v = self.values[i, j]
                if math.isnan(v):
                    row.append(255)
                else:
                    row.append(int(round(255 * (1.0 - min(v, saturation) / saturation))))
            rows.append(row)
        body = "\n".join(" ".join(str(g) for g in row) for row in rows)
        return f"P2\n{self.n} {self.n}\n255\n{body}\n"


def _interval_entropies_from_counts(counts: np.ndarray, total: int, width: int) -> float:
    probs = counts[counts > 0] / total
    return float(-(probs * (np.log(probs) / LOG4)).sum())


def sampled_heat_map(sequences: list[str], window: int = 8) -> HeatMap:
    """Heat map from ensemble pattern frequencies."""
    if not sequences:
        raise ValueError("empty ensemble")
    if window < 1:
        raise ValueError("window must be >= 1")
    mat = np.stack([encode_sequence(s) for s in sequences]).astype(np.int64)
    count, n = mat.shape
    values = np.full((n + 1, n + 1), np.nan)
    for w in range(1, window + 1):
        codes = np.zeros((count, n - w + 1), dtype=np.int64)
        for t in range(w):
            codes = codes * 4 + mat[:, t : t + n - w + 1]
        for i in range(n - w + 1):
            counts = np.bincount(codes[:, i], minlength=4**w)
            e = _interval_entropies_from_counts(counts, count, w)
            values[i + 1, i + w] = 1.0 - e / w
    return HeatMap(n, window, values, f"sampled:{count}")


def exact_heat_map(
    params: EnergyParams,
    S: SecondaryStructure,
    window: int = 4,
    max_exact_window: int = 5,
) -> HeatMap:
    """Heat map from exact pattern probabilities (no sampling noise).

    Work grows as 4^w per interval, so the window is bounded by
    ``max_exact_window``.
    """
    if window < 1:
        raise ValueError("window must be >= 1")
    if window > max_exact_window:
        raise ValueError(
            f"exact mode with window {window} exceeds the work bound ({max_exact_window}); "
            "use sampling instead"
        )
    n = S.n
    log_q = partition_function(params, S).log_q
    values = np.full((n + 1, n + 1), np.nan)
    for w in range(1, window + 1):
        for i in range(1, n - w + 2):
            probs = np.array(
                [
                    _pattern_prob_cached(params, S, i, pattern, log_q)
                    for pattern in _all_patterns(w)
                ]
            )
            probs = probs / probs.sum()
            e = float(-(probs[probs > 0] * (np.log(probs[probs > 0]) / LOG4)).sum())
            values[i, i + w - 1] = 1.0 - e / w
    return HeatMap(n, window, values, "exact")


def _all_patterns(width: int) -> list[str]:
    patterns = [""]
    for _ in range(width):
        patterns = [p + b for p in patterns for b in BASES]
    return patterns


def _pattern_prob_cached(params, S, start, pattern, log_q) -> float:
    log_p = pattern_partition(params, S, PatternConstraint.subsequence(S.n, start, pattern))
    return 0.0 if log_p == float("-inf") else math.exp(log_p - log_q)


def largest_hot_interval(heat_map: HeatMap, threshold: float) -> tuple[int, int] | None:
    """Widest interval whose heat exceeds ``threshold`` (ties: leftmost).

    The reporting threshold is a caller choice, not a built-in constant.
    """
    best: tuple[int, int] | None = None
    for i, j, value in heat_map.entries():
        if value > threshold and (best is None or j - i > best[1] - best[0]):
            best = (i, j)
    return best


# ---------------------------------------------------------------------------
# Pattern reports
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class PatternReport:
    pattern: str
    frequency: float
    probability: float


def top_patterns(
    params: EnergyParams,
    S: SecondaryStructure,
    sequences: list[str],
    interval: tuple[int, int],
    k: int = 10,
) -> list[PatternReport]:
    """Most frequent sampled patterns on an interval, with exact probabilities.

    Ordered by sampled frequency (descending), then lexicographically.
    """
    i, j = interval
    if not (1 <= i <= j <= S.n):
        raise ValueError(f"interval [{i},{j}] out of range")
    if j - i + 1 > 8:
        raise ValueError("pattern reports are limited to intervals of width <= 8")
    counts = Counter(s[i - 1 : j] for s in sequences)
    total = len(sequences)
    log_q = partition_function(params, S).log_q
    ranked = sorted(counts.items(), key=lambda kv: (-kv[1], kv[0]))[:k]
    return [
        PatternReport(p, c / total, _pattern_prob_cached(params, S, i, p, log_q))
        for p, c in ranked
    ]


# ---------------------------------------------------------------------------
# Refolding signature
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class DeltaStats:
    median: float
    q1: float
    q3: float

    @classmethod
    def of(cls, values) -> "DeltaStats":
        arr = np.asarray(values, dtype=float)
        q1, med, q3 = np.percentile(arr, [25, 50, 75])
        return cls(float(med), float(q1), float(q3))


@dataclass(frozen=True)
class BaselineSignature:
    structure: SecondaryStructure
    ifr: float
    delta_etas: tuple[float, ...]
    delta_stats: DeltaStats


@dataclass(frozen=True)
class SignatureReport:
    """IFR and refolding-gap statistics of an ensemble, with random baselines.

    ``delta_etas[k] = |energy(seq_k, S) - energy(seq_k, mfe(seq_k))|``; a
    sequence that refolds into S has a gap of exactly 0 (the converse needs
    a unique mfe, so the flag is reported separately).
    """

    ifr: float
    delta_etas: tuple[float, ...]
    delta_stats: DeltaStats
    refold_flags: tuple[bool, ...]
    baselines: tuple[BaselineSignature, ...]


def refold_stats(
    params: EnergyParams,
    S: SecondaryStructure,
    ensemble: list[SampledSequence],
    threads: int | None = None,
) -> tuple[tuple[float, ...], tuple[bool, ...]]:
    """Refolding gaps and refold flags for every sequence of an ensemble."""

    def one(sample: SampledSequence):
        fold = mfe_fold(params, sample.sequence)
        delta = abs(sample.energy - fold.energy)
        return delta, fold.structure.arcs == S.arcs

    if threads and threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(one, ensemble))
    else:
        results = [one(s) for s in ensemble]
    deltas = tuple(r[0] for r in results)
    flags = tuple(r[1] for r in results)
    return deltas, flags


def signature_report(
    params: EnergyParams,
    S: SecondaryStructure,
    ensemble: list[SampledSequence],
    baseline_count: int = 5,
    seed: int = 0,
    threads: int | None = None,
) -> SignatureReport:
    """Signature of an ensemble sampled from S, against uniform-random baselines.

    Each baseline draws one uniformly random structure of the same length and
    Boltzmann-samples an ensemble of the same size from it; baseline seeds
    derive from ``seed`` so the whole report is reproducible.
    """
    deltas, flags = refold_stats(params, S, ensemble, threads)
    baselines = []
    for b in range(baseline_count):
        struct_rng = np.random.default_rng(np.random.SeedSequence(entropy=seed, spawn_key=(b, 0)))
        S_b = sample_uniform_structure(S.n, struct_rng)
        sub_seed = int(np.random.SeedSequence(entropy=seed, spawn_key=(b, 1)).generate_state(1)[0])
        ens_b = sample_ensemble(params, S_b, len(ensemble), sub_seed)
        d_b, f_b = refold_stats(params, S_b, ens_b, threads)
        baselines.append(
            BaselineSignature(S_b, float(np.mean(f_b)), d_b, DeltaStats.of(d_b))
        )
    return SignatureReport(
        ifr=float(np.mean(flags)),
        delta_etas=deltas,
        delta_stats=DeltaStats.of(deltas),
        refold_flags=flags,
        baselines=tuple(baselines),
    )


# ---------------------------------------------------------------------------
# Mutual information (unnormalized dominant term)
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class MIScore:
    """The dominant mutual-information term for one (sequence, structure) pair,
    carried as sign and log-magnitude to avoid overflow.

    The term is ``exp(x) * (x - logQ(S) - logQ(sigma))`` with ``x = -energy/RT``;
    the normalization constant of the full mutual information is intractable
    and deliberately not applied.
    """

    sign: int
    log_magnitude: float

    def value(self) -> float:
        if self.sign == 0:
            return 0.0
        try:
            return self.sign * math.exp(self.log_magnitude)
        except OverflowError:
            return self.sign * math.inf


def mi_score(
    params: EnergyParams,
    seq: str | np.ndarray,
    S: SecondaryStructure,
    log_q_structure: float,
    log_q_sequence: float,
) -> MIScore:
    """Dominant MI term of ``(seq, S)`` given both log partition values."""
    energy = structure_energy(params, seq, S)
    if math.isinf(energy):
        return MIScore(0, float("-inf"))
    x = -energy / params.rt
    bracket = x - log_q_structure - log_q_sequence
    if bracket == 0.0:
        return MIScore(0, float("-inf"))
    sign = 1 if bracket > 0 else -1
    return MIScore(sign, x + math.log(abs(bracket)))


# ---------------------------------------------------------------------------
# Energy spectra
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class EnergySpectrum:
    """Histogram of ensemble energies, and of the refolding subset, on shared bins."""

    bin_edges: np.ndarray
    counts_all: np.ndarray
    counts_refolded: np.ndarray


def energy_spectrum(energies, refold_flags, bin_width: float = 0.5) -> EnergySpectrum:
    energies = np.asarray(energies, dtype=float)
    flags = np.asarray(refold_flags, dtype=bool)
    if energies.shape != flags.shape:
        raise ValueError("refold flags must align with energies")
    lo = math.floor(energies.min() / bin_width) * bin_width
    hi = math.ceil(energies.max() / bin_width) * bin_width
    if hi <= lo:
        hi = lo + bin_width
    edges = np.arange(lo, hi + bin_width / 2, bin_width)
    counts_all, _ = np.histogram(energies, bins=edges)
    counts_refold, _ = np.histogram(energies[flags], bins=edges)
    return EnergySpectrum(edges, counts_all, counts_refold)
