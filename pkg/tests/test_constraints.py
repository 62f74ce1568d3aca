import itertools

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from helpers import chapter, char, page, panel
from mangascribe.constraints import (
    ConstraintSet,
    InconsistentConstraintsError,
    UnionFind,
    constraints_from_identities,
    constraints_from_partition,
    extract_constraints,
    load_overrides,
    per_page_components,
)


def crops(*ids):
    return [char(c) for c in ids]


def test_single_edge_above_threshold():
    p = page(characters=crops("a", "b"), char_char={("a", "b"): 0.9})
    assert per_page_components(p, 0.5) == [["a", "b"]]


def test_single_edge_below_threshold():
    p = page(characters=crops("a", "b"), char_char={("a", "b"): 0.1})
    assert per_page_components(p, 0.5) == [["a"], ["b"]]


def test_threshold_is_inclusive():
    p = page(characters=crops("a", "b"), char_char={("a", "b"): 0.5})
    assert per_page_components(p, 0.5) == [["a", "b"]]


def test_transitive_closure():
    p = page(characters=crops("a", "b", "c"), char_char={("a", "b"): 0.8, ("b", "c"): 0.7, ("a", "c"): 0.2})
    assert per_page_components(p, 0.5) == [["a", "b", "c"]]


def test_two_components_give_m_and_c():
    p = page(characters=crops("a", "b", "c"), char_char={("a", "b"): 0.9})
    cs = extract_constraints(chapter(p))
    assert cs.must_link == {("a", "b")}
    assert cs.cannot_link == {("a", "c"), ("b", "c")}


def test_cross_page_pairs_unconstrained():
    ch = chapter(page(0, crops("a")), page(1, [char("b", page=1)]))
    cs = extract_constraints(ch)
    assert not cs.must_link and not cs.cannot_link


def test_four_crops_two_components():
    p = page(characters=crops("a", "b", "c", "d"), char_char={("a", "b"): 0.9, ("c", "d"): 0.9})
    cs = extract_constraints(chapter(p))
    assert cs.must_link == {("a", "b"), ("c", "d")}
    assert cs.cannot_link == {("a", "c"), ("a", "d"), ("b", "c"), ("b", "d")}


def test_same_panel_mode_only_cannot_links_within_panels():
    p = page(
        characters=[char("a", bbox=(0, 0, 10, 10)), char("b", bbox=(2, 2, 8, 8)), char("c", bbox=(60, 0, 70, 10))],
        panels=[panel("p1", (0, 0, 50, 50)), panel("p2", (55, 0, 100, 50))],
    )
    cs = extract_constraints(chapter(p), cannot_link="same-panel")
    assert cs.cannot_link == {("a", "b")}
    with pytest.raises(ValueError, match="cannot-link mode"):
        extract_constraints(chapter(p), cannot_link="chapter")


def test_inconsistent_sets_rejected(tmp_path):
    with pytest.raises(InconsistentConstraintsError, match="must- and cannot-linked"):
        ConstraintSet.from_pairs([("a", "b")], [("b", "a")])
    path = tmp_path / "over.json"
    path.write_text('{"must_link": [["a", "b"]], "cannot_link": [["a", "b"]]}')
    with pytest.raises(InconsistentConstraintsError):
        load_overrides(path)


def test_merge_detects_conflict():
    base = ConstraintSet.from_pairs(cannot_link=[("a", "b")])
    with pytest.raises(InconsistentConstraintsError):
        base.merge(ConstraintSet.from_pairs(must_link=[("a", "b")]))
    assert base.merge(ConstraintSet.from_pairs(must_link=[("a", "c")])).must_link == {("a", "c")}


def test_identities_constraints():
    ch = chapter(page(0, crops("a", "b", "c")), page(1, [char("d", page=1)]))
    cs = constraints_from_identities(ch, {"a": "X", "b": "Y", "c": "X", "d": "X"})
    assert cs.must_link == {("a", "c")}
    assert cs.cannot_link == {("a", "b"), ("b", "c")}


def test_union_find_root_is_earliest():
    uf = UnionFind("abcde")
    uf.union("e", "c")
    uf.union("c", "b")
    assert uf.find("e") == "b"
    assert uf.groups() == [["a"], ["b", "c", "e"], ["d"]]


@settings(max_examples=100, deadline=None)
@given(st.lists(st.tuples(st.integers(0, 6), st.integers(0, 6)), max_size=12))
def test_union_find_matches_reachability(edges):
    uf = UnionFind(range(7))
    for a, b in edges:
        uf.union(a, b)
    reach = {i: {i} for i in range(7)}
    changed = True
    while changed:
        changed = False
        for a, b in edges:
            merged = reach[a] | reach[b]
            for x in merged:
                if reach[x] != merged | reach[x]:
                    reach[x] |= merged
                    changed = True
    for a, b in itertools.combinations(range(7), 2):
        assert (uf.find(a) == uf.find(b)) == (b in reach[a])


@settings(max_examples=100, deadline=None)
@given(st.lists(st.integers(0, 3), min_size=1, max_size=8))
def test_partition_constraints_cover_every_pair_once(labels):
    ids = [f"x{i}" for i in range(len(labels))]
    groups = {}
    for c, g in zip(ids, labels):
        groups.setdefault(g, []).append(c)
    cs = constraints_from_partition(list(groups.values()))
    assert not cs.must_link & cs.cannot_link
    assert len(cs.must_link) + len(cs.cannot_link) == len(ids) * (len(ids) - 1) // 2
    for (a, b) in cs.must_link:
        assert labels[ids.index(a)] == labels[ids.index(b)]
