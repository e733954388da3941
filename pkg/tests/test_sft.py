from collections import Counter
from itertools import product
from random import Random

import pytest
from hypothesis import given, settings, strategies as st

from treeshift.sft import (
    BudgetExceeded,
    ForbiddenSet,
    Membership,
    NormalizedSft,
    NotInLanguage,
    Pattern,
    block_count,
    block_language,
    build_engine,
    certify_membership,
    extension_count,
    first_extension,
    is_empty,
    is_perfect,
    locally_admissible,
    normalize,
    rigidity_fixpoint,
    viable_fixpoint,
)
from treeshift.shifts import full_shift, golden_mean_string_sft, golden_mean_tree_sft, singleton_shift
from treeshift.trees import EMPTY, Alphabets, Block, DepthError, TruncatedTree, restrict

import brute

BIN = Alphabets.binary()


def forbidden_sets(n_labels):
    triples = list(product(range(n_labels), repeat=3))
    return st.sets(st.sampled_from(triples), max_size=len(triples))


def engine_for(forbidden, n_labels=2):
    a = Alphabets(2, tuple(str(x) for x in range(n_labels)))
    return viable_fixpoint(NormalizedSft(a, 2, [Block(2, 2, t) for t in forbidden]))


# ---- normalization and local admissibility ---------------------------------

def test_normalize_empty_pattern_set_is_full_shift():
    assert normalize(ForbiddenSet(BIN, ()), 2).forbidden == ()


def test_normalize_root_pattern_at_height_one():
    sft = normalize(ForbiddenSet(BIN, (Pattern.of({(): 1}),)), 1)
    assert sft.forbidden == (Block(2, 1, (1,)),)


def test_normalize_root_pattern_to_height_two_gives_four_blocks():
    sft = normalize(ForbiddenSet(BIN, (Pattern.of({(): 1}),)), 2)
    assert {b.labels for b in sft.forbidden} == {(1, x, y) for x in (0, 1) for y in (0, 1)}


def test_normalize_rejects_short_height_and_bad_patterns():
    f = ForbiddenSet(BIN, (Pattern.of({(): 1, (0,): 1}),))
    with pytest.raises(ValueError):
        normalize(f, 1)
    with pytest.raises(ValueError):
        Pattern.of({(0,): 1})
    with pytest.raises(ValueError):
        Pattern(())


def test_locally_admissible_golden_mean():
    sft = golden_mean_tree_sft().sft
    assert locally_admissible(Block(2, 2, (1, 0, 0)), sft)
    assert not locally_admissible(Block(2, 2, (1, 1, 0)), sft)


def test_locally_admissible_sees_inner_windows():
    sft = NormalizedSft(BIN, 2, [Block(2, 2, (x, 0, 0)) for x in (0, 1)])
    b = Block.from_function(2, 3, lambda w: 0 if w in ((0, 0), (0, 1)) else 1)
    assert not locally_admissible(b, sft)
    with pytest.raises(DepthError):
        locally_admissible(Block(2, 1, (0,)), sft)


@given(forbidden_sets(2), st.integers(2, 3))
def test_locally_admissible_matches_dict_windows(forbidden, h):
    sft = NormalizedSft(BIN, 2, [Block(2, 2, t) for t in forbidden])
    for tree in brute.all_trees(2, 2, h):
        b = Block(2, h, brute.as_labels(2, h, tree))
        assert locally_admissible(b, sft) == brute.windows_ok(tree, h, 2, 2, forbidden)


# ---- viability fixpoint and languages --------------------------------------

@given(forbidden_sets(2))
def test_block_counts_match_top_down_oracle(forbidden):
    e = engine_for(forbidden)
    for n in (1, 2, 3):
        expect = brute.language_p2(forbidden, 2, n)
        assert block_count(e, n) == len(expect)
        got = [b.labels for b in block_language(e, n)]
        assert got == sorted(brute.as_labels(2, n, t) for t in expect)
    assert is_empty(e) == (not brute.language_p2(forbidden, 2, 1))


@given(forbidden_sets(3).filter(lambda s: len(s) >= 12))
def test_block_counts_three_labels(forbidden):
    e = engine_for(forbidden, 3)
    for n in (1, 2, 3):
        assert block_count(e, n) == len(brute.language_p2(forbidden, 3, n))


@given(forbidden_sets(2), st.data())
def test_certify_on_depth_three_trees(forbidden, data):
    e = engine_for(forbidden)
    lang = {brute.as_labels(2, 3, t) for t in brute.language_p2(forbidden, 2, 3)}
    labels = tuple(data.draw(st.lists(st.integers(0, 1), min_size=7, max_size=7)))
    expect = Membership.IN_X if labels in lang else Membership.NOT_IN_X
    assert e.certify(TruncatedTree(Block(2, 3, labels))) is expect
    assert certify_membership(TruncatedTree(Block(2, 3, labels)), e) is expect


def test_certify_needs_depth_p():
    e = golden_mean_tree_sft().engine
    with pytest.raises(DepthError):
        e.certify(TruncatedTree(Block(2, 1, (0,))))


@settings(max_examples=15)
@given(forbidden_sets(2))
def test_extension_count_against_enumeration(forbidden):
    e = engine_for(forbidden)
    for H in (2, 3, 4):
        lang = block_language(e, H)
        for h in range(1, H):
            tally = Counter(restrict(c, EMPTY, h) for c in lang)
            for b in block_language(e, h):
                assert extension_count(e, b, H - h) == tally[b]


@given(forbidden_sets(2), st.integers(1, 4), st.integers(0, 2**16))
def test_extensions_restrict_to_start_and_are_in_language(forbidden, height, seed):
    e = engine_for(forbidden)
    if is_empty(e):
        return
    rng = Random(seed)
    start = e.random_extension(None, 1, rng)
    for b in e.iter_extensions(start, height):
        assert restrict(b, EMPTY, 1) == start
        assert e.in_language(b)
    b = e.random_extension(start, height, rng)
    assert e.in_language(b)


@given(forbidden_sets(2))
def test_rigid_blocks_have_one_extension_and_others_branch(forbidden):
    e = engine_for(forbidden)
    rigid = {b.labels for b in rigidity_fixpoint(e)}
    for b in e.viable:
        counts = [extension_count(e, b, extra) for extra in range(1, 9)]
        if b.labels in rigid:
            assert counts == [1] * 8
        else:
            assert max(counts) > 1


def test_extension_count_rejects_non_language_block():
    e = golden_mean_tree_sft().engine
    with pytest.raises(NotInLanguage):
        extension_count(e, Block(2, 2, (1, 1, 0)), 1)
    with pytest.raises(ValueError):
        extension_count(e, Block(2, 2, (1, 0, 0)), 0)


# ---- fixtures ---------------------------------------------------------------

def test_fixture_counts():
    assert [block_count(full_shift().engine, n) for n in (1, 2, 3)] == [2, 8, 128]
    assert [block_count(golden_mean_tree_sft().engine, n) for n in (2, 3)] == [5, 41]
    assert [block_count(golden_mean_string_sft().engine, n) for n in (1, 2, 3, 4)] == [2, 3, 5, 8]
    assert [block_count(singleton_shift().engine, n) for n in (1, 2, 3)] == [1, 1, 1]


def test_golden_mean_string_counts_match_strings():
    e = golden_mean_string_sft().engine
    for n in range(1, 9):
        expect = sum(1 for s in product((0, 1), repeat=n) if brute.no_adjacent_ones(s))
        assert block_count(e, n) == expect


def test_perfectness_of_fixtures():
    assert is_perfect(full_shift().engine)
    assert is_perfect(golden_mean_tree_sft().engine)
    assert not is_perfect(singleton_shift().engine)
    assert [b.labels for b in rigidity_fixpoint(singleton_shift().engine)] == [(0,)]


def test_dead_ends_are_pruned():
    # 0 repeats, 1 needs two 2 children, 2 has no allowed children
    allowed = {(0, 0, 0), (1, 2, 2)}
    e = engine_for([t for t in product(range(3), repeat=3) if t not in allowed], 3)
    assert [b.labels for b in e.viable] == [(0, 0, 0)]
    assert block_count(e, 3) == 1
    assert not e.in_language(Block(2, 2, (1, 2, 2)))


def test_empty_shift():
    e = engine_for(list(product((0, 1), repeat=3)))
    assert is_empty(e)
    assert block_count(e, 3) == 0
    with pytest.raises(NotInLanguage):
        first_extension(e, None, 2)


def test_budget_guard():
    e = build_engine(NormalizedSft(BIN, 2, ()), budget=100)
    with pytest.raises(BudgetExceeded):
        block_language(e, 3)
    assert block_count(e, 6) == 2**63


def test_build_engine_from_patterns():
    f = ForbiddenSet(BIN, (Pattern.of({(): 1, (0,): 1}), Pattern.of({(): 1, (1,): 1})))
    e = build_engine(f)
    assert e.p == 2
    assert block_count(e, 3) == 41


def test_membership_text():
    assert str(Membership.IN_X) == "InX-certified"
    assert str(Membership.NOT_IN_X) == "NotInX"


@settings(max_examples=20)
@given(forbidden_sets(2), st.data())
def test_raising_p_keeps_membership(forbidden, data):
    f = ForbiddenSet(BIN, tuple(Pattern.from_block(Block(2, 2, t)) for t in forbidden))
    small, big = viable_fixpoint(normalize(f, 2)), viable_fixpoint(normalize(f, 3))
    assert big.p == 3
    labels = tuple(data.draw(st.lists(st.integers(0, 1), min_size=15, max_size=15)))
    t = TruncatedTree(Block(2, 4, labels))
    assert small.certify(t) is big.certify(t)
    assert [block_count(small, n) for n in (1, 2, 3)] == [block_count(big, n) for n in (1, 2, 3)]
