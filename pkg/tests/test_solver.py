import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from helpers import basis, chapter, char, page, random_problem
from mangascribe.bank import BankCharacter, CharacterBank
from mangascribe.constraints import ConstraintSet, InconsistentConstraintsError
from mangascribe.solver import (
    Assignment,
    AssignmentProblem,
    InstanceTooLargeError,
    collapse_fragments,
    load_names,
    name_chapter,
    solve_bruteforce,
    solve_exact,
    verify,
    write_names,
)


def feasible(problem, labels):
    k = problem.k
    lab = dict(zip(problem.crop_ids, labels))
    if any(lab[a] != lab[b] for a, b in problem.constraints.must_link):
        return False
    return not any(lab[a] == lab[b] != k for a, b in problem.constraints.cannot_link)


def oracle_optimum(problem):
    """Minimum over every per-crop labelling, without fragment collapsing."""
    best = math.inf
    for labels in itertools.product(range(problem.k + 1), repeat=problem.n):
        if feasible(problem, labels):
            best = min(best, math.fsum(problem.costs[i, j] for i, j in enumerate(labels)))
    return best


def example_one():
    costs = np.array([[0.1, 0.6, 0.75], [0.1, 0.6, 0.75]])
    return AssignmentProblem(costs, ("c1", "c2"), ConstraintSet.from_pairs(cannot_link=[("c1", "c2")]))


def test_example_cannot_link():
    a = solve_exact(example_one())
    assert dict(a.labels) == {"c1": 0, "c2": 1}
    assert a.objective == pytest.approx(0.7)


def test_example_must_link():
    costs = np.array([[0.1, 0.6, 0.75], [0.9, 0.6, 0.75]])
    p = AssignmentProblem(costs, ("c1", "c2"), ConstraintSet.from_pairs(must_link=[("c1", "c2")]))
    a = solve_exact(p)
    assert dict(a.labels) == {"c1": 0, "c2": 0}
    assert a.objective == pytest.approx(1.0)
    assert solve_bruteforce(p) == a


def test_empty_bank_everything_other():
    p = AssignmentProblem(np.full((5, 1), 0.75), tuple(f"c{i}" for i in range(5)))
    a = solve_exact(p)
    assert set(a.labels.values()) == {0}
    assert a.objective == pytest.approx(5 * 0.75)


def test_fragment_cost_rows_add():
    costs = np.array([[0.1, 0.75], [0.3, 0.75]])
    p = AssignmentProblem(costs, ("a", "b"), ConstraintSet.from_pairs(must_link=[("a", "b")]))
    frags, cl = collapse_fragments(p)
    assert len(frags) == 1 and frags[0].member_ids == ("a", "b")
    np.testing.assert_allclose(frags[0].cost_row, [0.4, 1.5])
    assert cl == set()


def test_unconstrained_fragments_are_singletons():
    p = AssignmentProblem(np.ones((3, 2)), ("a", "b", "c"))
    frags, cl = collapse_fragments(p)
    assert [f.member_ids for f in frags] == [("a",), ("b",), ("c",)]
    assert not cl


def test_transitively_inconsistent_constraints():
    cs = ConstraintSet.from_pairs(must_link=[("a", "b"), ("b", "c")], cannot_link=[("a", "c")])
    p = AssignmentProblem(np.ones((3, 2)), ("a", "b", "c"), cs)
    with pytest.raises(InconsistentConstraintsError, match="inconsistent constraints"):
        solve_exact(p)


def test_bruteforce_enumeration_count():
    p = AssignmentProblem(np.random.default_rng(0).uniform(size=(2, 4)), ("a", "b"))
    assert solve_bruteforce(p).stats["enumerated"] == 16


def test_bruteforce_agrees_on_example():
    assert solve_bruteforce(example_one()) == solve_exact(example_one())


def test_bruteforce_guard():
    p = AssignmentProblem(np.ones((20, 10)), tuple(f"c{i}" for i in range(20)))
    with pytest.raises(InstanceTooLargeError, match="instance too large"):
        solve_bruteforce(p)


def test_verify_other_exemption():
    p = example_one()
    both_other = Assignment({"c1": 2, "c2": 2}, 1.5, 2)
    assert verify(both_other, p)
    same_name = Assignment({"c1": 0, "c2": 0}, 0.2, 2)
    assert not verify(same_name, p)
    wrong_objective = Assignment({"c1": 0, "c2": 1}, 0.9, 2)
    assert not verify(wrong_objective, p)
    with pytest.raises(ValueError, match="misses"):
        verify(Assignment({"c1": 0}, 0.1, 2), p)


def test_problem_validation():
    with pytest.raises(ValueError, match="unknown crop"):
        AssignmentProblem(np.ones((1, 2)), ("a",), ConstraintSet.from_pairs(must_link=[("a", "z")]))
    with pytest.raises(ValueError, match="non-negative"):
        AssignmentProblem(np.array([[-1.0, 0.5]]), ("a",))
    with pytest.raises(ValueError, match="cost rows"):
        AssignmentProblem(np.ones((2, 2)), ("a",))


def test_ties_break_to_lowest_labels():
    p = AssignmentProblem(np.full((3, 3), 0.5), ("a", "b", "c"))
    assert dict(solve_exact(p).labels) == {"a": 0, "b": 0, "c": 0}
    p = AssignmentProblem(np.full((3, 3), 0.5), ("a", "b", "c"), ConstraintSet.from_pairs(cannot_link=[("a", "b"), ("b", "c"), ("a", "c")]))
    assert sorted(solve_exact(p).labels.values()) == [0, 1, 2]


@pytest.mark.parametrize("seed", range(40))
def test_exact_matches_independent_oracle(seed):
    rng = np.random.default_rng(seed)
    p = random_problem(rng, max_fragments=5, max_k=3, max_size=2, costs="integer" if seed % 2 else "uniform")
    if p.n > 7:
        p = p.subproblem(p.crop_ids[:7])
    a = solve_exact(p)
    assert verify(a, p)
    assert a.objective == pytest.approx(oracle_optimum(p), abs=1e-12)


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_exact_equals_bruteforce(seed):
    p = random_problem(np.random.default_rng(seed), costs="integer" if seed % 3 == 0 else "uniform")
    exact, brute = solve_exact(p), solve_bruteforce(p)
    assert verify(exact, p) and verify(brute, p)
    assert exact.objective == brute.objective
    assert dict(exact.labels) == dict(brute.labels)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_relaxation_never_costs_more(seed):
    p = random_problem(np.random.default_rng(seed))
    relaxed = AssignmentProblem(p.costs, p.crop_ids, ConstraintSet(p.constraints.must_link, frozenset()))
    assert solve_exact(relaxed).objective <= solve_exact(p).objective + 1e-12


def test_name_chapter_and_files(tmp_path):
    bank = CharacterBank((BankCharacter("Luffy", (basis(0, 3),)), BankCharacter("Zoro", (basis(1, 3),))))
    ch = chapter(
        page(0, [char("a", emb=basis(0, 3)), char("b", emb=basis(0, 3))]),
        page(1, [char("c", page=1, emb=basis(2, 3))]),
        dim=3,
    )
    a = name_chapter(ch, bank)
    names = a.names(bank)
    # a and b share no edge, so they are cannot-linked; Zoro costs sqrt(2) > eta
    assert names["c"] == "other"
    assert (names["a"], names["b"]) == ("Luffy", "other")
    path = tmp_path / "names.json"
    write_names(names, path, objective=a.objective)
    assert load_names(path) == names
    path.write_text("{}")
    with pytest.raises(ValueError, match="names"):
        load_names(path)
