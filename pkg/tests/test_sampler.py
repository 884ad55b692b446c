from __future__ import annotations

import math
from collections import Counter

import numpy as np
import pytest

from oracles import exact_sequence_distribution
from seqsem import (
    PatternConstraint,
    SecondaryStructure,
    SequenceSampler,
    ensemble_rng,
    parse_dot_bracket,
    partition_function,
    pattern_probability,
    sample,
    sample_ensemble,
    structure_energy,
)


class TestSingleDraws:
    def test_sample_matches_class(self, params):
        S = parse_dot_bracket("((....))")
        part = partition_function(params, S)
        d1 = sample(params, S, part, ensemble_rng(3, 0))
        d2 = SequenceSampler(params, S, part).sample(ensemble_rng(3, 0))
        assert d1 == d2

    def test_energy_field_is_recomputable(self, params, corpus):
        for S in corpus[:8]:
            draw = sample_ensemble(params, S, 1, seed=11)[0]
            assert structure_energy(params, draw.sequence, S) == draw.energy

    def test_telescoping_identity(self, params, corpus):
        for S in corpus:
            part = partition_function(params, S)
            sampler = SequenceSampler(params, S, part)
            for k in range(20):
                draw = sampler.sample(ensemble_rng(5, k))
                lhs = sum(draw.stepwise_logs)
                rhs = -draw.energy / params.rt - part.log_q
                assert lhs == pytest.approx(rhs, rel=1e-9, abs=1e-9)
                assert draw.log_prob == pytest.approx(lhs)

    def test_one_stepwise_entry_per_loop(self, params):
        from seqsem.structure import decompose

        S = parse_dot_bracket("((...)(...))")
        draw = sample_ensemble(params, S, 1, seed=0)[0]
        assert len(draw.stepwise_logs) == len(decompose(S).loops)


class TestEnsembles:
    def test_deterministic_for_fixed_seed(self, params):
        S = parse_dot_bracket("((....))")
        a = sample_ensemble(params, S, 200, seed=42)
        b = sample_ensemble(params, S, 200, seed=42)
        assert a == b

    def test_draws_independent_of_count(self, params):
        # per-draw substreams: a longer run extends a shorter one
        S = parse_dot_bracket("((....))")
        short = sample_ensemble(params, S, 50, seed=9)
        long = sample_ensemble(params, S, 120, seed=9)
        assert long[:50] == short

    def test_count_validation(self, params):
        with pytest.raises(ValueError):
            sample_ensemble(params, parse_dot_bracket("(....)"), 0, seed=1)

    def test_empty_structure_uniform(self, params):
        S = SecondaryStructure(8, ())
        draws = sample_ensemble(params, S, 10_000, seed=13)
        freqs = np.zeros((8, 4))
        for d in draws:
            for pos, ch in enumerate(d.sequence):
                freqs[pos, "AUCG".index(ch)] += 1
        freqs /= len(draws)
        assert np.abs(freqs - 0.25).max() < 0.02

    def test_exactness_small_structure(self, params):
        # TV against the exact law on a 6-mer hairpin
        S = parse_dot_bracket("(....)")
        exact = exact_sequence_distribution(params, S)
        draws = sample_ensemble(params, S, 30_000, seed=21)
        counts = Counter(d.sequence for d in draws)
        assert set(counts) <= set(exact)
        tv = 0.5 * sum(abs(counts.get(s, 0) / 30_000 - p) for s, p in exact.items())
        assert tv < 0.03

    def test_marginals_match_pattern_probability(self, params):
        # empirical pattern frequency within 3 standard errors of the exact value
        S = parse_dot_bracket("((....))")
        n_draws = 20_000
        draws = sample_ensemble(params, S, n_draws, seed=17)
        for start, pattern in [(3, "GA"), (4, "AA"), (1, "G")]:
            c = PatternConstraint.subsequence(8, start, pattern)
            p = pattern_probability(params, S, c)
            hits = sum(
                d.sequence[start - 1 : start - 1 + len(pattern)] == pattern for d in draws
            )
            se = math.sqrt(p * (1 - p) / n_draws)
            assert abs(hits / n_draws - p) < 3.5 * se + 1e-12

    def test_paired_positions_cg_rich(self, params):
        S = parse_dot_bracket("((((((((....))))))))")
        draws = sample_ensemble(params, S, 2_000, seed=23)
        paired = [p - 1 for arc in S.arcs for p in arc]
        cg = np.mean([[d.sequence[p] in "CG" for p in paired] for d in draws])
        assert cg > 0.5

    def test_chi_square_all_small_corpus(self, params, corpus):
        # goodness of fit against the exact law for every corpus structure n <= 9
        from scipy import stats

        n_draws = 30_000
        for S in (s for s in corpus if s.n <= 9):
            exact = exact_sequence_distribution(params, S)
            counts = Counter(d.sequence for d in sample_ensemble(params, S, n_draws, seed=29))
            assert set(counts) <= set(exact)
            seqs = sorted(exact)
            expected = np.array([exact[s] * n_draws for s in seqs])
            observed = np.array([counts.get(s, 0) for s in seqs], dtype=float)
            big = expected >= 5.0
            f_exp = np.append(expected[big], expected[~big].sum())
            f_obs = np.append(observed[big], observed[~big].sum())
            assert stats.chisquare(f_obs, f_exp).pvalue >= 0.01

    def test_length_one_structure(self, params):
        S = SecondaryStructure(1, ())
        draws = sample_ensemble(params, S, 50, seed=31)
        assert {d.sequence for d in draws} <= {"A", "U", "C", "G"}
        assert all(d.energy == 0.0 for d in draws)
