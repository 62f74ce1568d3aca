"""Builders shared by the test modules."""

from __future__ import annotations

import numpy as np

from mangascribe.chapter import (
    BoundingBox,
    Chapter,
    CharacterNode,
    EdgeSet,
    PageGraph,
    PanelNode,
    TailNode,
    TextNode,
    normalize_embedding,
)


def unit(v):
    v = np.asarray(v, dtype=float)
    return v / np.linalg.norm(v)


def basis(i, dim=4):
    e = np.zeros(dim)
    e[i] = 1.0
    return e


def box(x1, y1, x2, y2):
    return BoundingBox(float(x1), float(y1), float(x2), float(y2))


def char(cid, page=0, bbox=(0, 0, 10, 10), emb=(1.0, 0.0), gt_name=None):
    return CharacterNode(cid, page, box(*bbox), normalize_embedding(emb), gt_name)


def text(tid, page=0, bbox=(0, 0, 10, 10), content="", score=0.9, gt_essential=None):
    return TextNode(tid, page, box(*bbox), content, score, None, gt_essential)


def panel(pid, bbox, page=0):
    return PanelNode(pid, page, box(*bbox))


def tail(lid, bbox=(0, 0, 5, 5), page=0):
    return TailNode(lid, page, box(*bbox))


def page(index=0, characters=(), texts=(), tails=(), panels=(), text_char=None, text_tail=None, char_char=None):
    cc = {}
    for (a, b), s in (char_char or {}).items():
        cc[(a, b) if a <= b else (b, a)] = s
    return PageGraph(
        index, tuple(characters), tuple(texts), tuple(tails), tuple(panels),
        EdgeSet(dict(text_char or {}), dict(text_tail or {}), cc),
    )


def chapter(*pages, dim=2):
    return Chapter(tuple(pages), dim)


def random_problem(rng, max_fragments=8, max_k=4, max_size=2, costs="uniform"):
    """Random AssignmentProblem with consistent constraints.

    Crops are dealt into hidden fragments chained by must-links; a random
    subset of cross-fragment pairs is cannot-linked.
    """
    from mangascribe.constraints import ConstraintSet, pair
    from mangascribe.solver import AssignmentProblem

    nfrag = int(rng.integers(1, max_fragments + 1))
    k = int(rng.integers(0, max_k + 1))
    sizes = rng.integers(1, max_size + 1, size=nfrag)
    ids, frag_of = [], []
    for f, s in enumerate(sizes):
        for _ in range(s):
            frag_of.append(f)
            ids.append(f"c{len(ids)}")
    order = rng.permutation(len(ids))
    ids = [ids[i] for i in order]
    frag_of = [frag_of[i] for i in order]
    must, cannot = set(), set()
    for f in range(nfrag):
        members = [c for c, g in zip(ids, frag_of) if g == f]
        must.update(pair(a, b) for a, b in zip(members, members[1:]))
    density = rng.uniform(0, 0.8)
    for i in range(len(ids)):
        for j in range(i + 1, len(ids)):
            if frag_of[i] != frag_of[j] and rng.random() < density:
                cannot.add(pair(ids[i], ids[j]))
    if costs == "integer":
        values = rng.integers(0, 4, size=(len(ids), k + 1)).astype(float)
    else:
        values = rng.uniform(0, 2, size=(len(ids), k + 1))
    return AssignmentProblem(values, tuple(ids), ConstraintSet(frozenset(must), frozenset(cannot)))
