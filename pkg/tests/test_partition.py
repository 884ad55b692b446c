from __future__ import annotations

import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import brute_force_log_partition, brute_force_log_partition_slow
from seqsem import (
    PatternConstraint,
    SecondaryStructure,
    parse_dot_bracket,
    partition_function,
    pattern_partition,
    pattern_probability,
)

NEG_INF = float("-inf")


class TestPartitionFunction:
    def test_empty_structure_closed_form(self, params):
        for n in range(1, 31):
            S = SecondaryStructure(n, ())
            assert partition_function(params, S).log_q == n * math.log(4)

    def test_oracle_equality_small(self, params):
        for db in ["((....))", "(.(...).)", "((.(...)))", "(...)..."]:
            S = parse_dot_bracket(db)
            log_q = partition_function(params, S).log_q
            assert log_q == pytest.approx(brute_force_log_partition(params, S), abs=1e-9)

    def test_two_oracles_agree(self, params):
        # the vectorized oracle matches the scalar per-sequence one
        for db in ["((....))", "(.(...).)", "(...)..."]:
            S = parse_dot_bracket(db)
            assert brute_force_log_partition(params, S) == pytest.approx(
                brute_force_log_partition_slow(params, S), abs=1e-9
            )

    def test_positive_sum_bounds(self, params):
        # n*ln4 + best weight bounds the sum above; one term bounds it below
        from oracles import _chunk_energies, _digit_block

        for db in ["((....))", "(.(...).)", "(...)..."]:
            S = parse_dot_bracket(db)
            log_q = partition_function(params, S).log_q
            codes = _digit_block(0, 4**S.n, S.n)
            cents, alive = _chunk_energies(params, S, codes)
            best = -(cents[alive].min() / 100.0) / params.rt
            assert best <= log_q <= S.n * math.log(4) + best + 1e-9

    def test_tables_cover_arcs(self, params):
        S = parse_dot_bracket("((.(...)))")
        result = partition_function(params, S)
        assert set(result.arc_tables) == set(S.arcs)
        for table in result.arc_tables.values():
            assert table.shape == (4, 4)
            assert not np.isnan(table).any()

    def test_substructure_locality(self, params):
        # the table of an arc depends only on what sits under it
        inner = parse_dot_bracket(".((...))..")
        outer = parse_dot_bracket("(((...))).")
        t1 = partition_function(params, inner).arc_tables[(2, 8)]
        t2 = partition_function(params, outer).arc_tables[(2, 8)]
        np.testing.assert_array_equal(t1, t2)


class TestPatternPartition:
    def test_full_mask_matches_partition(self, params, corpus):
        for S in corpus[:6]:
            full = PatternConstraint.full(S.n)
            assert pattern_partition(params, S, full) == partition_function(params, S).log_q

    def test_fixed_position_on_empty_structure(self, params):
        S = SecondaryStructure(3, ())
        c = PatternConstraint.subsequence(3, 1, "A")
        assert pattern_partition(params, S, c) == pytest.approx(2 * math.log(4))

    def test_oracle_equality(self, params):
        S = parse_dot_bracket("((....))")
        c = PatternConstraint.subsequence(8, 3, "GAAA")
        dp = pattern_partition(params, S, c)
        bf = brute_force_log_partition(params, S, allowed=c.allowed)
        assert dp == pytest.approx(bf, abs=1e-9)

    def test_forced_inadmissible_duo_gives_zero_weight(self, params):
        S = parse_dot_bracket("((....))")
        c = PatternConstraint.allowed_sets(8, 1, ["A"]).allowed.copy()
        c[7] = [False, False, True, False]  # position 8 forced to C; A-C cannot pair
        constraint = PatternConstraint(c)
        assert pattern_partition(params, S, constraint) == NEG_INF
        assert pattern_probability(params, S, constraint) == 0.0

    def test_interval_validation(self, params):
        with pytest.raises(ValueError):
            PatternConstraint.subsequence(8, 7, "GAA")
        with pytest.raises(ValueError):
            pattern_partition(
                params, parse_dot_bracket("((....))"), PatternConstraint.full(9)
            )


class TestPatternProbability:
    def test_wildcard_is_one(self, params):
        S = parse_dot_bracket("((....))")
        assert pattern_probability(params, S, PatternConstraint.full(8)) == 1.0

    def test_uniform_position_on_empty_structure(self, params):
        S = SecondaryStructure(6, ())
        for base in "AUCG":
            c = PatternConstraint.subsequence(6, 3, base)
            assert pattern_probability(params, S, c) == pytest.approx(0.25)

    @pytest.mark.parametrize("width", [1, 2, 3])
    def test_total_probability(self, params, width):
        S = parse_dot_bracket("((....))")
        start = 3
        total = sum(
            pattern_probability(
                params, S, PatternConstraint.subsequence(8, start, "".join(p))
            )
            for p in itertools.product("AUCG", repeat=width)
        )
        assert total == pytest.approx(1.0, abs=1e-9)

    @given(st.integers(min_value=0, max_value=3), st.data())
    @settings(max_examples=40, deadline=None)
    def test_narrowing_never_raises_log_q(self, params, pos, data):
        S = parse_dot_bracket("((....))")
        mask = np.ones((8, 4), dtype=bool)
        keep = data.draw(st.lists(st.integers(0, 3), min_size=1, max_size=4, unique=True))
        mask[pos + 2] = False
        for code in keep:
            mask[pos + 2, code] = True
        narrowed = pattern_partition(params, S, PatternConstraint(mask))
        full = partition_function(params, S).log_q
        assert narrowed <= full + 1e-12

    def test_random_masks_against_oracle(self, params):
        # arbitrary allowed-set masks, not just concrete subsequences
        rng = np.random.default_rng(77)
        for db in ["((....))", "(.(...).)", "((.(...)))"]:
            S = parse_dot_bracket(db)
            for _ in range(5):
                mask = rng.random((S.n, 4)) < 0.6
                mask[~mask.any(axis=1), rng.integers(0, 4)] = True
                dp = pattern_partition(params, S, PatternConstraint(mask.copy()))
                bf = brute_force_log_partition(params, S, allowed=mask)
                if bf == NEG_INF:
                    assert dp == NEG_INF
                else:
                    assert dp == pytest.approx(bf, abs=1e-9)


class TestLongLoops:
    """Loops beyond the tabulated length ranges use the extrapolation rule."""

    def test_long_hairpin_partition_and_sampling(self, params):
        from seqsem import SequenceSampler, ensemble_rng

        S = parse_dot_bracket("(" + "." * 33 + ")")  # hairpin k=33 > table max 30
        part = partition_function(params, S)
        assert np.isfinite(part.log_q)
        sampler = SequenceSampler(params, S, part)
        for k in range(5):
            draw = sampler.sample(ensemble_rng(55, k))
            rhs = -draw.energy / params.rt - part.log_q
            assert sum(draw.stepwise_logs) == pytest.approx(rhs, rel=1e-9)

    def test_wide_interior_partition_and_sampling(self, params):
        from seqsem import SequenceSampler, ensemble_rng

        # interior loop with side lengths 34 and 31: total 65 > table max 60
        S = parse_dot_bracket("(" + "." * 34 + "(...)" + "." * 31 + ")")
        part = partition_function(params, S)
        assert np.isfinite(part.log_q)
        sampler = SequenceSampler(params, S, part)
        draw = sampler.sample(ensemble_rng(56, 0))
        rhs = -draw.energy / params.rt - part.log_q
        assert sum(draw.stepwise_logs) == pytest.approx(rhs, rel=1e-9)
