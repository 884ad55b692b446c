from __future__ import annotations

import math

import numpy as np
import pytest

from seqsem import (
    SecondaryStructure,
    energy_spectrum,
    entropy,
    exact_heat_map,
    mfe_fold,
    mi_score,
    parse_dot_bracket,
    partition_function,
    sample_ensemble,
    sampled_heat_map,
    signature_report,
    top_patterns,
)
from seqsem.analysis import refold_stats


class TestEntropy:
    def test_uniform_hits_width(self):
        for w in (1, 2, 3):
            assert entropy([1 / 4**w] * 4**w) == pytest.approx(w)

    def test_certain_pattern_is_zero(self):
        assert entropy({"GAAA": 1.0}) == 0.0

    def test_two_even_patterns(self):
        assert entropy({"GA": 0.5, "GC": 0.5}) == pytest.approx(0.5)

    def test_bad_total_rejected(self):
        with pytest.raises(ValueError, match="sum"):
            entropy([0.5, 0.6])
        with pytest.raises(ValueError, match="negative"):
            entropy([1.5, -0.5])


class TestHeatMaps:
    def test_exact_empty_structure_all_zero(self, params):
        S = SecondaryStructure(6, ())
        hm = exact_heat_map(params, S, window=3)
        for _, _, value in hm.entries():
            assert value == pytest.approx(0.0, abs=1e-12)

    def test_entries_in_unit_interval(self, params):
        S = parse_dot_bracket("((....))")
        hm = exact_heat_map(params, S, window=4)
        for _, _, value in hm.entries():
            assert -1e-12 <= value <= 1.0

    def test_sampled_converges_to_exact(self, params):
        S = parse_dot_bracket("((....))")
        exact = exact_heat_map(params, S, window=4)
        draws = sample_ensemble(params, S, 30_000, seed=31)
        sampled = sampled_heat_map([d.sequence for d in draws], window=4)
        diffs = [
            abs(v - exact.values[i, j])
            for i, j, v in sampled.entries()
            if j - i + 1 <= 4
        ]
        assert max(diffs) < 0.03

    def test_exact_window_bound(self, params):
        with pytest.raises(ValueError, match="work bound"):
            exact_heat_map(params, parse_dot_bracket("((....))"), window=6)

    def test_csv_and_pgm_render(self, params):
        S = parse_dot_bracket("((....))")
        hm = exact_heat_map(params, S, window=2)
        csv = hm.to_csv()
        assert csv.count("\n") == S.n + 1
        pgm = hm.to_pgm()
        assert pgm.startswith("P2\n8 8\n255\n")
        grays = [int(tok) for tok in pgm.split("\n", 3)[3].split()]
        assert all(0 <= g <= 255 for g in grays)

    def test_saturation_maps_high_heat_to_black(self):
        from seqsem.analysis import HeatMap

        values = np.full((3, 3), np.nan)
        values[1, 1] = 0.59
        values[2, 2] = 0.0
        rendered = HeatMap(2, 1, values, "exact").to_pgm(saturation=0.59)
        cells = rendered.split("\n", 3)[3].split()
        assert cells[0] == "0" and cells[3] == "255"


class TestHotInterval:
    def test_largest_hot_interval(self, params):
        from seqsem import largest_hot_interval

        S = parse_dot_bracket("((....))")
        hm = exact_heat_map(params, S, window=4)
        hot = largest_hot_interval(hm, threshold=0.1)
        assert hot is not None and hot[1] - hot[0] + 1 <= 4
        assert hm.values[hot[0], hot[1]] > 0.1
        assert largest_hot_interval(hm, threshold=1.1) is None


class TestTopPatterns:
    def test_uniform_interval(self, params):
        S = SecondaryStructure(6, ())
        draws = sample_ensemble(params, S, 4_000, seed=33)
        reports = top_patterns(params, S, [d.sequence for d in draws], (2, 3), k=3)
        assert len(reports) == 3
        for r in reports:
            assert r.probability == pytest.approx(1 / 16)
            assert abs(r.frequency - 1 / 16) < 0.02

    def test_frequencies_close_to_probabilities(self, params):
        S = parse_dot_bracket("((....))")
        count = 20_000
        draws = sample_ensemble(params, S, count, seed=35)
        reports = top_patterns(params, S, [d.sequence for d in draws], (3, 6), k=10)
        assert reports == sorted(reports, key=lambda r: (-r.frequency, r.pattern))
        checked = 0
        for r in reports:
            if r.probability * count < 10:  # normal approximation needs mass
                continue
            checked += 1
            se = math.sqrt(r.probability * (1 - r.probability) / count)
            assert abs(r.frequency - r.probability) < 4 * se
        assert checked >= 5

    def test_interval_validation(self, params):
        S = parse_dot_bracket("((....))")
        with pytest.raises(ValueError):
            top_patterns(params, S, ["GGGAAACC"], (0, 3))


class TestSignature:
    def test_refold_gap_zero_iff_refolds_here(self, params):
        S = parse_dot_bracket("((((((((....))))))))")
        draws = sample_ensemble(params, S, 100, seed=37)
        deltas, flags = refold_stats(params, S, draws)
        for delta, flag in zip(deltas, flags):
            assert delta >= 0.0
            if flag:
                assert delta == 0.0

    def test_empty_structure_gap_is_minus_mfe(self, params):
        S = SecondaryStructure(12, ())
        draws = sample_ensemble(params, S, 30, seed=39)
        deltas, _ = refold_stats(params, S, draws)
        for draw, delta in zip(draws, deltas):
            assert delta == pytest.approx(-mfe_fold(params, draw.sequence).energy)

    def test_report_shape_and_determinism(self, params):
        S = parse_dot_bracket("((((....))))")
        draws = sample_ensemble(params, S, 60, seed=41)
        r1 = signature_report(params, S, draws, baseline_count=2, seed=7)
        r2 = signature_report(params, S, draws, baseline_count=2, seed=7, threads=4)
        assert 0.0 <= r1.ifr <= 1.0
        assert r1 == r2  # thread count never changes results
        assert len(r1.baselines) == 2
        for b in r1.baselines:
            assert b.structure.n == S.n


class TestMiScore:
    def test_closed_form_empty_structure(self, params):
        # energy 0, Q(S) = 4^4, Q(sigma) = 1: the term is log(1/256) = -8 ln 2
        S = SecondaryStructure(4, ())
        log_q_s = partition_function(params, S).log_q
        score = mi_score(params, "ACGU", S, log_q_s, 0.0)
        assert score.sign == -1
        assert score.value() == pytest.approx(-8 * math.log(2))

    def test_equal_energy_equal_score(self, params):
        # two different sequences with identical energy score identically
        from seqsem import structure_energy

        S = parse_dot_bracket("((....))")
        log_q_s = partition_function(params, S).log_q
        a, b = "GGAAAACC", "GGAAACCC"  # differ in a mismatch slot with equal value
        assert structure_energy(params, a, S) == structure_energy(params, b, S)
        assert mi_score(params, a, S, log_q_s, 1.0) == mi_score(params, b, S, log_q_s, 1.0)

    def test_infinite_energy_zero_weight(self, params):
        S = parse_dot_bracket("((....))")
        score = mi_score(params, "GAGAAACC", S, 10.0, 0.0)
        assert score.sign == 0 and score.value() == 0.0


class TestEnergySpectrum:
    def test_all_refold_identical_histograms(self):
        spec = energy_spectrum([-3.0, -2.4, -1.1], [True, True, True])
        np.testing.assert_array_equal(spec.counts_all, spec.counts_refolded)

    def test_none_refold_zero_red(self):
        spec = energy_spectrum([-3.0, -2.4, -1.1], [False, False, False])
        assert spec.counts_refolded.sum() == 0
        assert spec.counts_all.sum() == 3

    def test_bin_width_respected(self):
        spec = energy_spectrum([-1.0, 0.2, 1.4], [True, False, True], bin_width=0.5)
        widths = np.diff(spec.bin_edges)
        assert np.allclose(widths, 0.5)

    def test_misaligned_flags_rejected(self):
        with pytest.raises(ValueError):
            energy_spectrum([1.0, 2.0], [True])
