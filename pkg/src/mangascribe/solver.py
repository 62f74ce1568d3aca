"""Exact constrained crop-to-character assignment.

Minimises the summed crop costs subject to: one label per crop, must-linked
crops share a label, and cannot-linked crops never share a *named* label (two
cannot-linked crops may both be "other"). Must-links are collapsed into
fragments first; the solver then runs a depth-first branch and bound over
fragment labels, independently for every connected component of the
fragment cannot-link graph.

Ties between optimal labelings are resolved deterministically: fragments are
ordered by decreasing size, then lowest member position, and among equally
cheap labelings the lexicographically smallest label vector (in that fragment
order, lower character index first, "other" last) wins. The brute-force
oracle applies the same rule.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Mapping, Sequence

import numpy as np

from mangascribe.bank import OTHER, CharacterBank, CostMatrix, build_cost_matrix
from mangascribe.chapter import Chapter, dumps_json
from mangascribe.constraints import (
    ConstraintSet,
    InconsistentConstraintsError,
    UnionFind,
    extract_constraints,
)

BRUTEFORCE_LIMIT = 10**7
OBJECTIVE_TOL = 1e-9


class InstanceTooLargeError(ValueError):
    pass


@dataclass(frozen=True)
class AssignmentProblem:
    costs: np.ndarray
    crop_ids: tuple[str, ...]
    constraints: ConstraintSet = field(default_factory=ConstraintSet)

    def __post_init__(self) -> None:
        costs = self.costs.values if isinstance(self.costs, CostMatrix) else self.costs
        costs = np.array(costs, dtype=np.float64)
        if costs.ndim != 2 or costs.shape[1] < 1:
            raise ValueError("costs must be an n x (k+1) matrix")
        if costs.shape[0] != len(self.crop_ids):
            raise ValueError(f"{costs.shape[0]} cost rows for {len(self.crop_ids)} crops")
        if not np.all(np.isfinite(costs)) or np.any(costs < 0):
            raise ValueError("costs must be finite and non-negative")
        ids = tuple(self.crop_ids)
        if len(set(ids)) != len(ids):
            raise ValueError("crop ids must be unique")
        known = set(ids)
        for a, b in self.constraints.must_link | self.constraints.cannot_link:
            if a not in known or b not in known:
                raise ValueError(f"constraint ({a!r}, {b!r}) references an unknown crop")
        costs.setflags(write=False)
        object.__setattr__(self, "costs", costs)
        object.__setattr__(self, "crop_ids", ids)

    @property
    def n(self) -> int:
        return len(self.crop_ids)

    @property
    def k(self) -> int:
        return self.costs.shape[1] - 1

    @classmethod
    def from_chapter(
        cls, chapter: Chapter, bank: CharacterBank, constraints: ConstraintSet | None = None
    ) -> AssignmentProblem:
        crops = list(chapter.characters())
        if constraints is None:
            constraints = extract_constraints(chapter)
        if not crops:
            return cls(np.zeros((0, bank.k + 1)), (), constraints)
        return cls(build_cost_matrix(crops, bank).values, tuple(c.id for c in crops), constraints)

    def subproblem(self, ids: Sequence[str]) -> AssignmentProblem:
        pos = {c: i for i, c in enumerate(self.crop_ids)}
        rows = [pos[c] for c in ids]
        return AssignmentProblem(self.costs[rows], tuple(ids), self.constraints.restrict(ids))


@dataclass(frozen=True)
class Fragment:
    member_ids: tuple[str, ...]
    members: tuple[int, ...]
    cost_row: np.ndarray

    @property
    def size(self) -> int:
        return len(self.members)


@dataclass(frozen=True)
class Assignment:
    """Label per crop (0..k-1 named characters, k is "other") and its cost."""

    labels: Mapping[str, int]
    objective: float
    k: int
    stats: Mapping[str, int] = field(default_factory=dict, compare=False)

    def names(self, bank: CharacterBank) -> dict[str, str]:
        if bank.k != self.k:
            raise ValueError(f"bank has {bank.k} characters, assignment expects {self.k}")
        return {c: bank.label_name(j) for c, j in self.labels.items()}

    def to_dict(self, bank: CharacterBank) -> dict[str, Any]:
        return {"names": self.names(bank), "objective": self.objective}


def _objective(problem: AssignmentProblem, labels: Mapping[str, int]) -> float:
    return math.fsum(problem.costs[i, labels[c]] for i, c in enumerate(problem.crop_ids))


def collapse_fragments(problem: AssignmentProblem) -> tuple[list[Fragment], set[tuple[int, int]]]:
    """Quotient the crops by the must-link relation.

    Returns fragments ordered by their lowest member position, and the set of
    fragment index pairs ``(i, j)``, ``i < j``, with at least one cannot-linked
    member pair.
    """
    pos = {c: i for i, c in enumerate(problem.crop_ids)}
    uf = UnionFind(range(problem.n))
    for a, b in sorted(problem.constraints.must_link):
        uf.union(pos[a], pos[b])
    fragments = []
    frag_of = [0] * problem.n
    for fi, members in enumerate(uf.groups()):
        members = tuple(sorted(members))
        for m in members:
            frag_of[m] = fi
        row = np.array([math.fsum(col) for col in problem.costs[list(members)].T])
        row.setflags(write=False)
        fragments.append(Fragment(tuple(problem.crop_ids[m] for m in members), members, row))
    cannot: set[tuple[int, int]] = set()
    for a, b in problem.constraints.cannot_link:
        fa, fb = frag_of[pos[a]], frag_of[pos[b]]
        if fa == fb:
            raise InconsistentConstraintsError(
                f"inconsistent constraints: {a!r} and {b!r} are cannot-linked "
                "but joined by must-links"
            )
        cannot.add((min(fa, fb), max(fa, fb)))
    return fragments, cannot


def _search_order(fragments: Sequence[Fragment]) -> list[int]:
    return sorted(range(len(fragments)), key=lambda f: (-fragments[f].size, fragments[f].members[0]))


def _to_assignment(
    problem: AssignmentProblem, fragments: Sequence[Fragment], frag_labels: Sequence[int], stats: dict
) -> Assignment:
    labels: dict[str, int] = {}
    for frag, lab in zip(fragments, frag_labels):
        for c in frag.member_ids:
            labels[c] = int(lab)
    labels = {c: labels[c] for c in problem.crop_ids}
    return Assignment(labels, _objective(problem, labels), problem.k, stats)


class _ComponentSearch:
    """Branch and bound over the fragments of one cannot-link component."""

    def __init__(self, costs: np.ndarray, neighbours: list[list[int]], k: int) -> None:
        self.costs = costs
        self.neighbours = neighbours
        self.k = k
        n = costs.shape[0]
        self.forbidden = np.zeros((n, k + 1), dtype=np.int32)
        self.current = [0] * n
        self.best_value = math.inf
        self.best: tuple[int, ...] | None = None
        self.nodes = 0

    def _remaining_bound(self, depth: int) -> float:
        if depth >= self.costs.shape[0]:
            return 0.0
        masked = np.where(self.forbidden[depth:] > 0, np.inf, self.costs[depth:])
        return float(masked.min(axis=1).sum())

    def _tol(self) -> float:
        return OBJECTIVE_TOL * max(1.0, abs(self.best_value))

    def run(self) -> tuple[int, ...]:
        self._descend(0, 0.0)
        assert self.best is not None
        return self.best

    def _descend(self, depth: int, partial: float) -> None:
        self.nodes += 1
        n = self.costs.shape[0]
        if depth == n:
            value = math.fsum(self.costs[i, self.current[i]] for i in range(n))
            labels = tuple(self.current)
            if value < self.best_value or (
                value == self.best_value and self.best is not None and labels < self.best
            ):
                self.best_value = value
                self.best = labels
            return
        if partial + self._remaining_bound(depth) > self.best_value + self._tol():
            return
        row = self.costs[depth]
        feasible = [j for j in range(self.k + 1) if self.forbidden[depth, j] == 0]
        feasible.sort(key=lambda j: (row[j], j))
        later = [nb for nb in self.neighbours[depth] if nb > depth]
        for j in feasible:
            self.current[depth] = j
            if j < self.k:
                for nb in later:
                    self.forbidden[nb, j] += 1
            self._descend(depth + 1, partial + row[j])
            if j < self.k:
                for nb in later:
                    self.forbidden[nb, j] -= 1


def solve_exact(problem: AssignmentProblem) -> Assignment:
    """Globally optimal feasible assignment via fragment branch and bound."""
    fragments, cannot = collapse_fragments(problem)
    k = problem.k
    labels = [k] * len(fragments)
    uf = UnionFind(range(len(fragments)))
    for a, b in cannot:
        uf.union(a, b)
    rank = {f: r for r, f in enumerate(_search_order(fragments))}
    nodes = 0
    for comp in uf.groups():
        if len(comp) == 1:
            f = comp[0]
            labels[f] = int(np.argmin(fragments[f].cost_row))
            continue
        order = sorted(comp, key=rank.__getitem__)
        local = {f: i for i, f in enumerate(order)}
        neighbours: list[list[int]] = [[] for _ in order]
        for a, b in cannot:
            if a in local and b in local:
                neighbours[local[a]].append(local[b])
                neighbours[local[b]].append(local[a])
        costs = np.vstack([fragments[f].cost_row for f in order])
        search = _ComponentSearch(costs, neighbours, k)
        best = search.run()
        nodes += search.nodes
        for f, lab in zip(order, best):
            labels[f] = lab
    return _to_assignment(problem, fragments, labels, {"nodes": nodes, "fragments": len(fragments)})


def solve_bruteforce(problem: AssignmentProblem, limit: int = BRUTEFORCE_LIMIT) -> Assignment:
    """Exhaustive enumeration of fragment labelings; a verification oracle."""
    fragments, cannot = collapse_fragments(problem)
    order = _search_order(fragments)
    F, L, k = len(fragments), problem.k + 1, problem.k
    total = L**F
    if total > limit:
        raise InstanceTooLargeError(f"instance too large: {L}^{F} labelings exceed {limit}")
    costs = np.vstack([fragments[f].cost_row for f in order]) if F else np.zeros((0, L))
    pos = {f: i for i, f in enumerate(order)}
    pairs = [(pos[a], pos[b]) for a, b in sorted(cannot)]
    weights = L ** np.arange(F - 1, -1, -1, dtype=np.int64)
    best: tuple[float, int] | None = None
    chunk = 1 << 18
    for start in range(0, total, chunk):
        idx = np.arange(start, min(total, start + chunk), dtype=np.int64)
        digits = (idx[:, None] // weights[None, :]) % L
        ok = np.ones(len(idx), dtype=bool)
        for a, b in pairs:
            ok &= ~((digits[:, a] == digits[:, b]) & (digits[:, a] < k))
        if not ok.any():
            continue
        approx = costs[np.arange(F)[None, :], digits].sum(axis=1) if F else np.zeros(len(idx))
        approx = np.where(ok, approx, np.inf)
        floor = approx.min()
        for c in np.flatnonzero(approx <= floor + OBJECTIVE_TOL * max(1.0, abs(floor))):
            value = math.fsum(costs[p, digits[c, p]] for p in range(F))
            cand = (value, int(idx[c]))
            if best is None or cand < best:
                best = cand
    assert best is not None  # all-"other" is always feasible
    code = best[1]
    chosen = [int((code // int(w)) % L) for w in weights]
    labels = [0] * F
    for p, f in enumerate(order):
        labels[f] = chosen[p]
    return _to_assignment(problem, fragments, labels, {"enumerated": total, "fragments": F})


def verify(assignment: Assignment, problem: AssignmentProblem) -> bool:
    """Check one label per crop, must-links, cannot-links and the stated objective."""
    known = set(problem.crop_ids)
    unknown = set(assignment.labels) - known
    if unknown:
        raise ValueError(f"assignment labels unknown crops: {sorted(unknown)[:5]}")
    missing = known - set(assignment.labels)
    if missing:
        raise ValueError(f"assignment misses crops: {sorted(missing)[:5]}")
    lab = assignment.labels
    k = problem.k
    if any(not (0 <= lab[c] <= k) for c in problem.crop_ids):
        return False
    if any(lab[a] != lab[b] for a, b in problem.constraints.must_link):
        return False
    if any(lab[a] == lab[b] and lab[a] != k for a, b in problem.constraints.cannot_link):
        return False
    return abs(_objective(problem, lab) - assignment.objective) <= OBJECTIVE_TOL


def name_chapter(
    chapter: Chapter,
    bank: CharacterBank,
    constraints: ConstraintSet | None = None,
) -> Assignment:
    """Optimal naming of every character crop of ``chapter``."""
    return solve_exact(AssignmentProblem.from_chapter(chapter, bank, constraints))


def write_names(names: Mapping[str, str], path: str | Path, **extra: Any) -> None:
    doc = {"names": dict(names), **extra}
    Path(path).write_text(dumps_json(doc), encoding="utf-8")


def load_names(path: str | Path) -> dict[str, str]:
    """Read the ``names`` map of an assignment or ground-truth JSON file."""
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(f"names file not found: {path}")
    doc = json.loads(path.read_text(encoding="utf-8"))
    if not isinstance(doc, dict) or not isinstance(doc.get("names"), dict):
        raise ValueError(f"{path}: expected an object with a 'names' map")
    return {str(k): str(v) for k, v in doc["names"].items()}


__all__ = [
    "OTHER",
    "Assignment",
    "AssignmentProblem",
    "Fragment",
    "InstanceTooLargeError",
    "collapse_fragments",
    "load_names",
    "name_chapter",
    "solve_bruteforce",
    "solve_exact",
    "verify",
    "write_names",
]
