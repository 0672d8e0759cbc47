from __future__ import annotations

import math
from fractions import Fraction as F
from itertools import product

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from contrapunctus.rhythm import (
    EXTREME_TOO_SHORT,
    ExtremeNoteError,
    MeterSignature,
    PartitionTree,
    RhythmMismatch,
    Strength,
    TreeError,
    attach_rhythm,
    beat_info,
    count_trees,
    enumerate_trees,
    extreme_note_errors,
    farey,
    mediant,
    metrical_hierarchy,
    nth_tree,
    polyrhythm_table,
    sexpr_to_tree,
    tree_to_sexpr,
    uniform_tree,
    voice_periods,
)
from contrapunctus.score import ErrorRecord

from conftest import DUET_TREE

# ------------------------------------------------------------ Farey


def brute_farey(n):
    return sorted({F(a, b) for b in range(1, n + 1) for a in range(b + 1)})


@pytest.mark.parametrize("n", range(1, 25))
def test_farey_matches_brute_force(n):
    assert farey(n) == brute_farey(n)


@given(st.integers(1, 80))
def test_farey_neighbours_are_unimodular(n):
    terms = farey(n)
    for x, y in zip(terms, terms[1:]):
        assert y.numerator * x.denominator - x.numerator * y.denominator == 1
        # the first new term between neighbours of F_n is their mediant
        m = mediant(x, y)
        assert x < m < y and m.denominator > n


def test_farey_rejects_order_zero():
    with pytest.raises(ValueError):
        farey(0)


def test_mediant_needs_order():
    assert mediant(F(0), F(1)) == F(1, 2)
    with pytest.raises(ValueError):
        mediant(F(1, 2), F(1, 3))


# ------------------------------------------------------------ trees


def test_duet_tree_layers():
    tree = sexpr_to_tree(DUET_TREE)
    assert (tree.measure_depth, tree.beat_depth) == (1, 2)
    assert tree.leaf_count == 12
    assert tree.duration_classes() == [1] * 12
    assert "".join(s.value for s in tree.strengths()) == "XOOOXOooOoOo"
    assert tree_to_sexpr(tree) == DUET_TREE
    assert tree.measure_count == 2


def test_onsets_and_durations_of_duet_tree():
    tree = sexpr_to_tree(DUET_TREE)
    onsets, durations = tree.onsets(), tree.durations()
    assert onsets[:5] == [F(0), F(1, 8), F(1, 4), F(3, 8), F(1, 2)]
    assert durations[5:8] == [F(1, 24)] * 3
    assert sum(durations) == 1


def test_uniform_tree():
    # one measure of three beats
    tree = uniform_tree((3, 2), 0, 1)
    assert tree.leaf_count == 6
    assert "".join(s.value for s in tree.strengths()) == "XoOoOo"
    # three measures of two beats
    assert "".join(s.value for s in uniform_tree((3, 2), 1, 1).strengths()) == "XOXOXO"
    assert tree.onsets() == [F(k, 6) for k in range(6)]


def test_beat_info_and_layers():
    tree = uniform_tree((2, 2, 3), 1, 1)
    strengths, ds = beat_info(tree)
    assert ds == [1] * 12
    assert strengths[0] is Strength.DOWNBEAT and strengths[6] is Strength.DOWNBEAT
    assert strengths[3] is Strength.BEAT and strengths[1] is Strength.OFFBEAT
    assert [tree.layer_of(d) for d in range(3)] == ["measure", "beat", "duration"]


def test_deeper_leaves_get_higher_classes():
    tree = sexpr_to_tree("((X X) ((X X) X))", measure_depth=1, beat_depth=0)
    assert tree.duration_classes() == [1, 1, 2, 2, 1]


@pytest.mark.parametrize(
    "text,position",
    [
        ("(X X X X)", 0),
        ("(X X", 0),
        ("(X Y)", 3),
        ("(X X))", 5),
        ("", 0),
        ("(X (X))", 3),
    ],
)
def test_sexpr_errors_carry_positions(text, position):
    with pytest.raises(TreeError) as info:
        sexpr_to_tree(text)
    assert info.value.position == position


def test_tree_rejects_bad_branching_and_shallow_leaves():
    with pytest.raises(TreeError):
        PartitionTree(((), (), (), ()))
    with pytest.raises(TreeError):
        PartitionTree(((), ((), ())), measure_depth=1, beat_depth=1)


# ------------------------------------------------------------ enumeration


def oracle_shapes(leaves, caps):
    """Every distinct shape reachable by some layering, built without the canonical rules."""
    md_cap, bd_cap, dd_cap = caps
    patterns = [p for d in range(dd_cap + 1) for p in product((2, 3), repeat=d)]
    found = set()

    def fill(beats, remaining):
        if beats == 0:
            if remaining == 0:
                yield ()
            return
        for p in patterns:
            size = math.prod(p)
            if size <= remaining - (beats - 1):
                for rest in fill(beats - 1, remaining - size):
                    yield (uniform_tree(p).shape,) + rest

    def nest(level_factors, beat_shapes):
        it = iter(beat_shapes)

        def grow(level):
            if level == len(level_factors):
                return next(it)
            return tuple(grow(level + 1) for _ in range(level_factors[level]))

        return grow(0)

    top_max = md_cap + bd_cap if md_cap >= 1 else 0
    for top in range(top_max + 1):
        for level_factors in product((2, 3), repeat=top):
            beats = math.prod(level_factors)
            for beat_shapes in fill(beats, leaves):
                found.add(nest(level_factors, beat_shapes))
    return found


@pytest.mark.parametrize("caps", [(2, 2, 2), (1, 1, 1), (1, 1, 0), (2, 1, 2), (0, 0, 2)])
@pytest.mark.parametrize("leaves", [1, 2, 3, 5, 6, 8, 9, 12])
def test_tree_count_matches_shape_oracle(leaves, caps):
    shapes = oracle_shapes(leaves, caps)
    trees = list(enumerate_trees(leaves, caps))
    assert len(trees) == count_trees(leaves, caps) == len(shapes)
    assert {t.shape for t in trees} == shapes


def test_frozen_counts():
    assert [count_trees(n) for n in (8, 12, 16, 24, 32)] == [90, 1401, 18783, 3948745, 889470248]
    assert count_trees(8, (1, 1, 1)) == 64
    # five leaves need a 5 = 2 + 3 split above the beat patterns
    assert count_trees(5, (1, 1, 0)) == 0
    assert count_trees(5, (1, 1, 1)) == 12


def test_nth_tree_matches_stream():
    for n in (8, 12):
        trees = list(enumerate_trees(n))
        assert all(nth_tree(n, i) == tree for i, tree in enumerate(trees))
    with pytest.raises(IndexError):
        nth_tree(8, 90)
    with pytest.raises(IndexError):
        nth_tree(8, -1)


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 18782))
def test_nth_tree_round_trips(index):
    tree = nth_tree(16, index)
    assert tree.leaf_count == 16
    assert sexpr_to_tree(tree_to_sexpr(tree)) == tree


def test_enumerated_trees_round_trip_through_strings():
    for tree in enumerate_trees(12):
        assert sexpr_to_tree(tree_to_sexpr(tree)) == tree


# ------------------------------------------------------------ metre tables


def test_metrical_hierarchy_small():
    levels = metrical_hierarchy(MeterSignature(2, 2, 1))
    assert levels == {"I": [F(0)], "II": [F(1, 2)], "III": [F(1, 4), F(3, 4)]}


def test_meter_signature_validation():
    with pytest.raises(ValueError):
        MeterSignature(5, 2)
    with pytest.raises(ValueError):
        MeterSignature(2, 2, 0)


def test_polyrhythm_small():
    assert polyrhythm_table([(2, 2)]) == (4, ["XoOoX"])
    hyper, rows = polyrhythm_table([(2, 2), (3, 2)])
    assert hyper == 12 and all(len(r) == 13 and r[0] == r[-1] == "X" for r in rows)
    assert voice_periods([(3, 3), MeterSignature(2, 3)]) == [9, 6]
    with pytest.raises(ValueError):
        polyrhythm_table([])


# ------------------------------------------------------------ attachment


def test_attach_duet_tree(reference_duet):
    tp = attach_rhythm(reference_duet, sexpr_to_tree(DUET_TREE))
    assert tp.onset(1, 5) == F(1, 2)
    assert tp.duration(2, 6) == F(1, 24)
    assert tp.duration_classes == (1,) * 12


def test_attach_length_mismatch(reference_solo):
    with pytest.raises(RhythmMismatch):
        attach_rhythm(reference_solo, sexpr_to_tree(DUET_TREE))


def test_short_extreme_is_rejected(reference_duet):
    # with a single beat level the leaves of the second measure become fast
    tree = sexpr_to_tree(DUET_TREE, measure_depth=1, beat_depth=1)
    assert tree.duration_classes()[5:] == [2] * 7
    errors = extreme_note_errors(reference_duet, tree)
    assert ErrorRecord(2, 9, EXTREME_TOO_SHORT) in errors
    with pytest.raises(ExtremeNoteError) as info:
        attach_rhythm(reference_duet, tree)
    assert info.value.errors == errors


def test_single_leaf_tree():
    tree = sexpr_to_tree("X")
    assert tree.strengths() == [Strength.DOWNBEAT]
    assert tree.duration_classes() == [1]
    assert list(enumerate_trees(1)) == [tree]


def test_uniform_binary_tree_downbeats():
    strengths = uniform_tree((2, 2, 2), 1, 1).strengths()
    assert [i + 1 for i, s in enumerate(strengths) if s is Strength.DOWNBEAT] == [1, 5]


def test_onsets_lie_in_farey_of_the_branch_product():
    for tree in enumerate_trees(12):
        product_of_splits = math.lcm(*(o.denominator for o in tree.onsets()))
        grid = set(farey(product_of_splits))
        assert set(tree.onsets()) <= grid


@pytest.mark.parametrize("sig", [MeterSignature(3, 2, 6), MeterSignature(2, 3, 4), MeterSignature(2, 2, 1)])
def test_hierarchy_levels_partition_the_full_grid(sig):
    levels = metrical_hierarchy(sig)
    flat = [x for level in levels.values() for x in level]
    assert len(flat) == len(set(flat))
    den = sig.measures * sig.period
    assert sorted(flat) == [F(k, den) for k in range(den)]
