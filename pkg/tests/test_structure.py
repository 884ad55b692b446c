from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import all_structures, iter_arc_sets
from seqsem import (
    LoopKind,
    SecondaryStructure,
    StructureError,
    count_structures,
    decode_sequence,
    decompose,
    encode_sequence,
    parse_dot_bracket,
    parse_pair_lines,
    sample_uniform_structure,
)
from seqsem.structure import _unrank_structure


def random_structure_strategy(max_n: int = 40):
    """Uniform-ish structures via the library's unranking, seeded by hypothesis."""

    @st.composite
    def build(draw):
        n = draw(st.integers(min_value=1, max_value=max_n))
        rank = draw(st.integers(min_value=0, max_value=count_structures(n) - 1))
        return SecondaryStructure(n, _unrank_structure(n, rank))

    return build()


class TestParsing:
    def test_empty_line_rejected(self):
        with pytest.raises(StructureError):
            parse_dot_bracket("   ")

    def test_no_pairs(self):
        S = parse_dot_bracket(".....")
        assert S.n == 5 and S.arcs == ()

    def test_simple_hairpin(self):
        S = parse_dot_bracket("((....))")
        assert S.arcs == ((1, 8), (2, 7))

    def test_unbalanced(self):
        with pytest.raises(StructureError, match="column 3"):
            parse_dot_bracket("..)..")
        with pytest.raises(StructureError, match="column 1"):
            parse_dot_bracket("(....")

    def test_illegal_character(self):
        with pytest.raises(StructureError, match="column 2"):
            parse_dot_bracket(".x...")

    @pytest.mark.parametrize("gap", range(1, 9))
    def test_min_hairpin_gap_boundary(self, gap):
        # the validator must reject exactly the gaps j - i <= 3
        text = "(" + "." * (gap - 1) + ")"
        if gap <= 3:
            with pytest.raises(StructureError):
                parse_dot_bracket(text)
        else:
            S = parse_dot_bracket(text)
            assert S.arcs == ((1, gap + 1),)

    def test_direct_construction_rejects_crossing(self):
        with pytest.raises(StructureError, match="crossing"):
            SecondaryStructure(12, [(1, 6), (4, 10)])

    def test_direct_construction_rejects_shared_position(self):
        with pytest.raises(StructureError, match="more than one arc"):
            SecondaryStructure(12, [(1, 6), (6, 12)])

    def test_pair_lines_round_trip(self):
        S = parse_dot_bracket("((.(...)))")
        again = parse_pair_lines(S.to_pair_lines())
        assert again == S

    def test_partner_map(self):
        S = parse_dot_bracket("((.(...)))")
        assert S.partner[1] == 10 and S.partner[10] == 1
        assert S.partner[4] == 8 and 3 not in S.partner
        assert len(S.partner) == 2 * len(S.arcs)

    @given(random_structure_strategy())
    @settings(max_examples=150, deadline=None)
    def test_dot_bracket_round_trip(self, S):
        assert parse_dot_bracket(S.to_dot_bracket()) == S


class TestSequences:
    def test_encode_decode(self):
        assert decode_sequence(encode_sequence("AUCG")) == "AUCG"
        assert decode_sequence(encode_sequence("aucg")) == "AUCG"
        assert decode_sequence(encode_sequence("ATCG")) == "AUCG"

    def test_bad_nucleotide_column(self):
        from seqsem import SequenceError

        with pytest.raises(SequenceError, match="column 3"):
            encode_sequence("AUXG")


class TestDecompose:
    def test_empty_structure(self):
        deco = decompose(parse_dot_bracket("....."))
        assert len(deco.loops) == 1
        loop = deco.loops[0]
        assert loop.kind is LoopKind.EXTERIOR and loop.unpaired == 5

    def test_helix_hairpin(self):
        deco = decompose(parse_dot_bracket("((....))"))
        kinds = [l.kind for l in deco.loops]
        assert kinds == [LoopKind.EXTERIOR, LoopKind.HELIX, LoopKind.HAIRPIN]
        helix = deco.loops[1]
        assert helix.closing == (1, 8) and helix.branches == ((2, 7),)
        hairpin = deco.loops[2]
        assert hairpin.unpaired == 4

    def test_trna_shape_has_one_multi_with_three_pairs(self):
        deco = decompose(parse_dot_bracket("(((..(((....)))..(((....))).)))"))
        multis = [l for l in deco.loops if l.kind is LoopKind.MULTI]
        assert len(multis) == 1
        assert len(multis[0].branches) + 1 == 3

    def test_loop_kind_census(self):
        deco = decompose(parse_dot_bracket("((.(...)))"))
        kinds = [l.kind for l in deco.loops]
        assert LoopKind.BULGE in kinds

    @given(random_structure_strategy())
    @settings(max_examples=150, deadline=None)
    def test_arc_bookkeeping(self, S):
        deco = decompose(S)
        # every arc closes exactly one loop and branches exactly one other
        assert set(deco.arc_to_closing_loop) == set(S.arcs)
        assert set(deco.arc_to_parent_loop) == set(S.arcs)
        for arc in S.arcs:
            assert deco.loops[deco.arc_to_closing_loop[arc]].closing == arc
            assert arc in deco.loops[deco.arc_to_parent_loop[arc]].branches
        # unpaired + 2*arcs covers the backbone
        assert sum(l.unpaired for l in deco.loops) + 2 * len(S.arcs) == S.n
        # exactly one exterior, listed first; parents precede children
        kinds = [l.kind for l in deco.loops]
        assert kinds.count(LoopKind.EXTERIOR) == 1 and kinds[0] is LoopKind.EXTERIOR
        seen = set()
        for loop in deco.loops[1:]:
            parent = deco.arc_to_parent_loop[loop.closing]
            assert parent in seen or deco.loops[parent].kind is LoopKind.EXTERIOR
            seen.add(deco.arc_to_closing_loop[loop.closing])

    def test_deterministic(self):
        S = parse_dot_bracket("((.(...)))")
        assert decompose(S) is decompose(S)  # cached, hence byte-identical


class TestCounting:
    @pytest.mark.parametrize("n,expected", [(0, 1), (4, 1), (5, 2)])
    def test_known_counts(self, n, expected):
        assert count_structures(n) == expected

    @pytest.mark.parametrize("n", range(1, 13))
    def test_matches_enumeration(self, n):
        assert count_structures(n) == sum(1 for _ in iter_arc_sets(n))

    def test_unranking_is_a_bijection(self):
        n = 11
        seen = {tuple(sorted(_unrank_structure(n, r))) for r in range(count_structures(n))}
        assert seen == set(iter_arc_sets(n))


class TestUniformSampling:
    def test_n4_always_empty(self):
        rng = np.random.default_rng(0)
        for _ in range(20):
            assert sample_uniform_structure(4, rng).arcs == ()

    def test_n5_two_outcomes(self):
        rng = np.random.default_rng(1)
        hits = sum(bool(sample_uniform_structure(5, rng).arcs) for _ in range(10_000))
        assert abs(hits / 10_000 - 0.5) < 0.02

    def test_total_variation_small_n(self):
        n, draws = 9, 30_000
        rng = np.random.default_rng(7)
        counts: dict = {}
        for _ in range(draws):
            arcs = sample_uniform_structure(n, rng).arcs
            counts[arcs] = counts.get(arcs, 0) + 1
        total = count_structures(n)
        assert len(counts) == total == len(all_structures(n))
        tv = 0.5 * sum(abs(c / draws - 1 / total) for c in counts.values())
        assert tv < 0.02
