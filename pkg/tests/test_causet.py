import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import brute_force_ideals, brute_force_iso_key, brute_force_posets
from csgrowth.causet import (
    GrowthTree,
    LabelledCauset,
    antichain,
    canonical_form,
    chain,
    children,
    enumerate_level,
    extend,
    is_ideal,
    is_originary,
    order_ideals,
    pair_count,
    pair_index,
    pair_list,
    partial_stems,
    restrict,
    singleton,
)
from csgrowth.errors import CapExceeded, ContractError


@st.composite
def causets(draw, max_n=7):
    n = draw(st.integers(1, max_n))
    pairs = [(i, j) for j in range(n) for i in range(j)]
    chosen = draw(st.lists(st.sampled_from(pairs), unique=True)) if pairs else []
    return LabelledCauset.from_relations(n, chosen)


# -- construction ---------------------------------------------------------


def test_rejects_unnatural_labelling():
    with pytest.raises(ContractError):
        LabelledCauset((0, 4, 0))


def test_rejects_intransitive_rows():
    # 0 < 1 < 2 without 0 < 2
    with pytest.raises(ContractError):
        LabelledCauset((0, 1, 2))


def test_rejects_empty():
    with pytest.raises(ContractError):
        LabelledCauset(())


def test_from_relations_closes_transitively():
    c = LabelledCauset.from_relations(3, [(0, 1), (1, 2)])
    assert c == chain(3)
    assert c.precedes(0, 2)


def test_from_relations_rejects_backward_pair():
    with pytest.raises(ContractError):
        LabelledCauset.from_relations(3, [(2, 1)])


# -- order ideals ---------------------------------------------------------


@pytest.mark.parametrize("n", [1, 2, 3, 4, 5])
def test_order_ideals_match_subset_oracle(n):
    for rows in brute_force_posets(n):
        got = [i.members for i in order_ideals(LabelledCauset(rows))]
        assert got == brute_force_ideals(rows)


def test_ideal_maximal_counts():
    c = LabelledCauset.from_relations(3, [(0, 2), (1, 2)])
    by_mask = {i.members: (i.size, i.maximal_count) for i in order_ideals(c)}
    assert by_mask == {0: (0, 0), 1: (1, 1), 2: (1, 1), 3: (2, 2), 7: (3, 1)}


def test_children_of_two_element_causets():
    assert len(children(antichain(2))) == 4
    assert len(children(chain(2))) == 3


@pytest.mark.parametrize("n", range(1, 11))
def test_antichain_has_power_set_children(n):
    assert len(order_ideals(antichain(n))) == 2**n


def test_chain_has_n_plus_one_children():
    assert len(children(chain(7))) == 8


def test_extend_adds_maximal_element():
    c = extend(chain(2), 0b11)
    assert c == chain(3)
    c = extend(chain(2), 0)
    assert c.past == (0, 1, 0)


def test_extend_rejects_non_ideal():
    with pytest.raises(ContractError):
        extend(chain(2), 0b10)


def test_extend_leaves_input_unchanged():
    c = antichain(2)
    extend(c, 0b01)
    assert c == antichain(2)


def test_partial_stems_by_size():
    c = antichain(3)
    assert [len(partial_stems(c, m)) for m in range(4)] == [1, 3, 3, 1]
    with pytest.raises(ContractError):
        partial_stems(c, 4)


def test_is_ideal():
    c = chain(3)
    assert is_ideal(c, 0b011)
    assert not is_ideal(c, 0b010)
    assert not is_ideal(c, 0b1000)


def test_is_originary_examples():
    assert is_originary(singleton())
    assert is_originary(chain(4))
    assert not is_originary(antichain(2))
    assert not is_originary(extend(chain(2), 0))
    v = LabelledCauset.from_relations(3, [(0, 1), (0, 2)])
    assert is_originary(v)


def test_restrict_relabels_in_order():
    c = LabelledCauset.from_relations(4, [(0, 2), (1, 3)])
    assert restrict(c, 0b0101) == chain(2)
    assert restrict(c, 0b0011) == antichain(2)


# -- canonical form -------------------------------------------------------


@pytest.mark.parametrize("n", [1, 2, 3, 4, 5])
def test_canonical_form_agrees_with_permutation_oracle(n):
    posets = brute_force_posets(n)
    ours = [canonical_form(LabelledCauset(r)) for r in posets]
    oracle = [brute_force_iso_key(r) for r in posets]
    pairs = set(zip(ours, oracle))
    # the two keys induce the same partition
    assert len(pairs) == len(set(ours)) == len(set(oracle))


def test_unlabelled_counts():
    assert [len(set(enumerate_level(n).iso_class)) for n in range(1, 7)] == [1, 2, 5, 16, 63, 318]


@settings(max_examples=150, deadline=None)
@given(causets(), st.randoms(use_true_random=False))
def test_canonical_form_invariant_under_natural_relabelling(c, rnd):
    # a random linear extension of the order
    remaining = list(range(c.n))
    order = []
    placed = 0
    while remaining:
        ready = [x for x in remaining if c.past[x] & ~placed == 0]
        x = rnd.choice(ready)
        order.append(x)
        remaining.remove(x)
        placed |= 1 << x
    perm = [0] * c.n
    for new, old in enumerate(order):
        perm[old] = new
    assert canonical_form(c.relabel(perm)) == canonical_form(c)


def test_canonical_form_separates_chain_and_antichain():
    assert canonical_form(chain(4)) != canonical_form(antichain(4))
    assert canonical_form(chain(4)).hex().startswith("04")


# -- growth tree ----------------------------------------------------------


def test_level_counts_match_known_sequence():
    assert [len(enumerate_level(n)) for n in range(1, 8)] == [1, 2, 7, 40, 357, 4824, 96428]


@pytest.mark.parametrize("n", [2, 3, 4, 5, 6])
def test_level_matches_brute_force_set(n):
    cat = enumerate_level(n)
    got = {tuple(int(x) for x in r) for r in cat.rows}
    assert got == set(brute_force_posets(n))
    assert len(got) == len(cat)


def test_level_order_and_extremes():
    for n in range(1, 7):
        cat = enumerate_level(n)
        assert cat.node(cat.antichain_index) == antichain(n)
        assert cat.node(cat.chain_index) == chain(n)
        rows = [tuple(r) for r in cat.rows.tolist()]
        assert rows == sorted(rows)


def test_parent_links_and_child_counts():
    for n in range(2, 7):
        cat, prev = enumerate_level(n), enumerate_level(n - 1)
        for i in range(len(cat)):
            assert prev.node(int(cat.parent[i])).past == cat.node(i).past[:-1]
        expected = [len(order_ideals(c)) for c in prev.nodes]
        assert np.bincount(cat.parent, minlength=len(prev)).tolist() == expected
        assert prev.child_counts().tolist() == expected


def test_index_of_round_trip():
    cat = enumerate_level(5)
    for i in (0, 17, 200, len(cat) - 1):
        assert cat.index_of(cat.node(i)) == i
    with pytest.raises(ContractError):
        cat.index_of(chain(4))


def test_pair_counts_match_ideals():
    cat = enumerate_level(4)
    for i in range(len(cat)):
        expect = np.zeros(pair_count(4), dtype=int)
        for ideal in order_ideals(cat.node(i)):
            expect[pair_index(ideal.size, ideal.maximal_count)] += 1
        assert cat.pair_counts[i].tolist() == expect.tolist()


def test_pair_list_round_trip():
    for n in range(6):
        assert [pair_index(v, m) for v, m in pair_list(n)] == list(range(pair_count(n)))


def test_ancestors_and_descendants():
    tree = GrowthTree()
    desc = tree.descendants(2, 0, 4)
    anc = tree.ancestors(2, 4)
    assert set(desc.tolist()) == set(np.nonzero(anc == 0)[0].tolist())
    assert len(tree.descendants(1, 0, 4)) == 40


def test_cap_is_enforced():
    tree = GrowthTree(cap=4)
    tree.level(4)
    with pytest.raises(CapExceeded, match="cap"):
        tree.level(5)
    with pytest.raises(CapExceeded):
        tree.ancestors(2, 5)
    assert len(tree.level(5, cap=5)) == 357


def test_export_schema():
    rows = [json.loads(line) for line in enumerate_level(3).to_jsonl().splitlines()]
    assert len(rows) == 7
    assert set(rows[0]) == {"n", "index", "parent", "past", "iso_key"}
    assert rows[-1]["past"] == [[], [0], [0, 1]]
