"""Must-link / cannot-link constraints from per-page character clusters."""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Hashable, Iterable, Mapping, Sequence

from mangascribe.chapter import BoundingBox, Chapter, PageGraph

DEFAULT_MUST_LINK_THRESHOLD = 0.5

Pair = tuple[str, str]


class InconsistentConstraintsError(ValueError):
    """A pair is (directly or transitively) both must- and cannot-linked."""


def pair(a: str, b: str) -> Pair:
    if a == b:
        raise ValueError(f"a constraint needs two distinct crops, got {a!r} twice")
    return (a, b) if a < b else (b, a)


class UnionFind:
    """Disjoint sets; the root of each set is its earliest-inserted member."""

    def __init__(self, items: Iterable[Hashable] = ()) -> None:
        self._parent: dict[Hashable, Hashable] = {}
        self._order: dict[Hashable, int] = {}
        for item in items:
            self.add(item)

    def add(self, item: Hashable) -> None:
        if item not in self._parent:
            self._parent[item] = item
            self._order[item] = len(self._order)

    def find(self, item: Hashable) -> Hashable:
        root = item
        while self._parent[root] != root:
            root = self._parent[root]
        while self._parent[item] != root:
            self._parent[item], item = root, self._parent[item]
        return root

    def union(self, a: Hashable, b: Hashable) -> None:
        ra, rb = self.find(a), self.find(b)
        if ra == rb:
            return
        if self._order[rb] < self._order[ra]:
            ra, rb = rb, ra
        self._parent[rb] = ra

    def groups(self) -> list[list[Hashable]]:
        """Sets in order of their earliest member, members in insertion order."""
        out: dict[Hashable, list[Hashable]] = {}
        for item in self._parent:
            out.setdefault(self.find(item), []).append(item)
        return list(out.values())


@dataclass(frozen=True)
class ConstraintSet:
    must_link: frozenset[Pair] = field(default_factory=frozenset)
    cannot_link: frozenset[Pair] = field(default_factory=frozenset)

    def __post_init__(self) -> None:
        both = self.must_link & self.cannot_link
        if both:
            raise InconsistentConstraintsError(
                f"pairs both must- and cannot-linked: {sorted(both)[:5]}"
            )

    @classmethod
    def from_pairs(
        cls, must_link: Iterable[Sequence[str]] = (), cannot_link: Iterable[Sequence[str]] = ()
    ) -> ConstraintSet:
        return cls(
            frozenset(pair(a, b) for a, b in must_link),
            frozenset(pair(a, b) for a, b in cannot_link),
        )

    def merge(self, other: ConstraintSet) -> ConstraintSet:
        """Union of both sets; raises if the result has a pair in M and C."""
        return ConstraintSet(self.must_link | other.must_link, self.cannot_link | other.cannot_link)

    def restrict(self, ids: Iterable[str]) -> ConstraintSet:
        keep = set(ids)
        return ConstraintSet(
            frozenset(p for p in self.must_link if p[0] in keep and p[1] in keep),
            frozenset(p for p in self.cannot_link if p[0] in keep and p[1] in keep),
        )

    def to_dict(self) -> dict[str, Any]:
        return {
            "must_link": [list(p) for p in sorted(self.must_link)],
            "cannot_link": [list(p) for p in sorted(self.cannot_link)],
        }


def per_page_components(page: PageGraph, threshold: float = DEFAULT_MUST_LINK_THRESHOLD) -> list[list[str]]:
    """Connected components of the char-char graph with edges scoring >= threshold."""
    uf = UnionFind(c.id for c in page.characters)
    ids = [c.id for c in page.characters]
    for a, b in itertools.combinations(ids, 2):
        if page.edges.char_char_score(a, b) >= threshold:
            uf.union(a, b)
    return uf.groups()


def _panel_of(box: BoundingBox, panels: Sequence[BoundingBox]) -> int | None:
    """Index of the panel with the largest overlap, else the nearest centre."""
    if not panels:
        return None
    overlaps = [box.intersection(p) for p in panels]
    best = max(overlaps)
    if best > 0:
        return overlaps.index(best)
    cx, cy = box.center
    dists = [(p.center[0] - cx) ** 2 + (p.center[1] - cy) ** 2 for p in panels]
    return dists.index(min(dists))


def constraints_from_partition(
    groups: Sequence[Sequence[str]], same_group_of: Mapping[str, Hashable] | None = None
) -> ConstraintSet:
    """M = pairs inside a group; C = pairs across groups.

    When ``same_group_of`` is given, cross-group pairs are only cannot-linked
    if both ends map to the same key (used for the same-panel ablation).
    """
    must = set()
    cannot = set()
    for g in groups:
        must.update(pair(a, b) for a, b in itertools.combinations(g, 2))
    for g1, g2 in itertools.combinations(groups, 2):
        for a in g1:
            for b in g2:
                if same_group_of is None or same_group_of[a] == same_group_of[b]:
                    cannot.add(pair(a, b))
    return ConstraintSet(frozenset(must), frozenset(cannot))


def extract_constraints(
    chapter: Chapter,
    threshold: float = DEFAULT_MUST_LINK_THRESHOLD,
    cannot_link: str = "page",
) -> ConstraintSet:
    """Per-page must-link and cannot-link sets from char-char edge scores.

    Args:
        chapter: Parsed chapter.
        threshold: Edge score at or above which two crops are linked.
        cannot_link: ``"page"`` cannot-links every cross-component pair on a
            page; ``"same-panel"`` only those whose boxes fall in one panel.
    """
    if cannot_link not in ("page", "same-panel"):
        raise ValueError(f"unknown cannot-link mode {cannot_link!r}")
    must: set[Pair] = set()
    cannot: set[Pair] = set()
    for page in chapter.pages:
        groups = per_page_components(page, threshold)
        panel_key = None
        if cannot_link == "same-panel":
            boxes = [p.bbox for p in page.panels]
            panel_key = {c.id: _panel_of(c.bbox, boxes) for c in page.characters}
        cs = constraints_from_partition(groups, panel_key)
        must |= cs.must_link
        cannot |= cs.cannot_link
    return ConstraintSet(frozenset(must), frozenset(cannot))


def constraints_from_identities(chapter: Chapter, identities: Mapping[str, str]) -> ConstraintSet:
    """Ground-truth per-page constraints: same identity on a page must-links."""
    must: set[Pair] = set()
    cannot: set[Pair] = set()
    for page in chapter.pages:
        groups: dict[str, list[str]] = {}
        for c in page.characters:
            groups.setdefault(identities[c.id], []).append(c.id)
        cs = constraints_from_partition(list(groups.values()))
        must |= cs.must_link
        cannot |= cs.cannot_link
    return ConstraintSet(frozenset(must), frozenset(cannot))


def load_overrides(path: str | Path) -> ConstraintSet:
    """Read ``{"must_link": [[a, b], ...], "cannot_link": [[a, b], ...]}``."""
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(f"constraint override file not found: {path}")
    doc = json.loads(path.read_text(encoding="utf-8"))
    if not isinstance(doc, dict):
        raise ValueError(f"{path}: expected a JSON object")
    return ConstraintSet.from_pairs(doc.get("must_link", []), doc.get("cannot_link", []))
