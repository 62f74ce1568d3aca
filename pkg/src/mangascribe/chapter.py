"""Chapter and page graph data model, plus JSON ingestion.

A chapter file carries everything the upstream per-page detector produced:
character, text, tail and panel boxes, crop embeddings, essentiality scores
and the three families of association scores. Everything downstream treats a
parsed :class:`Chapter` as immutable.
"""

from __future__ import annotations

import enum
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Iterable, Iterator, Mapping

import numpy as np


class ChapterFormatError(ValueError):
    """Raised when a chapter document violates the file contract."""


@dataclass(frozen=True)
class BoundingBox:
    x1: float
    y1: float
    x2: float
    y2: float

    def __post_init__(self) -> None:
        coords = (self.x1, self.y1, self.x2, self.y2)
        if not all(math.isfinite(c) for c in coords):
            raise ChapterFormatError(f"non-finite box coordinates {coords}")
        if min(coords) < 0:
            raise ChapterFormatError(f"negative box coordinates {coords}")
        if not (self.x1 < self.x2 and self.y1 < self.y2):
            raise ChapterFormatError(f"degenerate box {coords}")

    @classmethod
    def from_list(cls, values: Iterable[float]) -> BoundingBox:
        values = list(values)
        if len(values) != 4:
            raise ChapterFormatError(f"bbox needs 4 numbers, got {values!r}")
        try:
            return cls(*(float(v) for v in values))
        except (TypeError, ValueError) as exc:
            if isinstance(exc, ChapterFormatError):
                raise
            raise ChapterFormatError(f"bad bbox {values!r}") from exc

    def to_list(self) -> list[float]:
        return [self.x1, self.y1, self.x2, self.y2]

    @property
    def area(self) -> float:
        return (self.x2 - self.x1) * (self.y2 - self.y1)

    @property
    def center(self) -> tuple[float, float]:
        return ((self.x1 + self.x2) / 2.0, (self.y1 + self.y2) / 2.0)

    def intersection(self, other: BoundingBox) -> float:
        w = min(self.x2, other.x2) - max(self.x1, other.x1)
        h = min(self.y2, other.y2) - max(self.y1, other.y1)
        if w <= 0 or h <= 0:
            return 0.0
        return w * h

    def iou(self, other: BoundingBox) -> float:
        inter = self.intersection(other)
        if inter == 0.0:
            return 0.0
        return inter / (self.area + other.area - inter)


class TextCategory(str, enum.Enum):
    ACTION_SOUND = "action_sound"
    BACKGROUND_INFO = "background_info"
    CONVERSATIONAL = "conversational"
    INTERNAL_THOUGHT = "internal_thought"
    INTERJECTION_EXPLICIT = "interjection_explicit"
    INTERJECTION_IMPLICIT = "interjection_implicit"
    EDITORIAL_NOTE = "editorial_note"
    SCENE_TEXT = "scene_text"
    OTHER = "other"


_NON_ESSENTIAL = frozenset(
    {
        TextCategory.ACTION_SOUND,
        TextCategory.EDITORIAL_NOTE,
        TextCategory.SCENE_TEXT,
        TextCategory.OTHER,
    }
)


def category_to_essential(category: TextCategory | str) -> bool:
    """Map one of the nine annotated text categories to the essential flag.

    Narration, conversation, internal thoughts and both kinds of interjection
    belong in a transcript; sound words, editorial notes, scene text and the
    catch-all category do not.
    """
    return TextCategory(category) not in _NON_ESSENTIAL


def _as_unit(values: Any, where: str, dim: int | None) -> np.ndarray:
    try:
        vec = np.asarray(values, dtype=np.float64)
    except (TypeError, ValueError) as exc:
        raise ChapterFormatError(f"{where}: embedding is not numeric") from exc
    if vec.ndim != 1 or vec.size == 0:
        raise ChapterFormatError(f"{where}: embedding must be a non-empty vector")
    if dim is not None and vec.size != dim:
        raise ChapterFormatError(
            f"{where}: embedding dimension mismatch (expected {dim}, got {vec.size})"
        )
    if not np.all(np.isfinite(vec)):
        raise ChapterFormatError(f"{where}: embedding has non-finite components")
    norm = float(np.linalg.norm(vec))
    if norm == 0.0:
        raise ChapterFormatError(f"{where}: zero embedding cannot be normalized")
    # Leave already-unit vectors untouched so that write/parse round trips are exact.
    if abs(norm - 1.0) > 1e-12:
        vec = vec / norm
    vec.setflags(write=False)
    return vec


def normalize_embedding(values: Any, dim: int | None = None) -> np.ndarray:
    """Return ``values`` as a read-only unit-norm float64 vector."""
    return _as_unit(values, "embedding", dim)


def _score(value: Any, where: str) -> float:
    try:
        s = float(value)
    except (TypeError, ValueError) as exc:
        raise ChapterFormatError(f"{where}: score {value!r} is not a number") from exc
    if not (0.0 <= s <= 1.0):
        raise ChapterFormatError(f"{where}: score {s} outside [0, 1]")
    return s


@dataclass(frozen=True)
class CharacterNode:
    id: str
    page_index: int
    bbox: BoundingBox
    embedding: np.ndarray = field(compare=False)
    gt_name: str | None = None


@dataclass(frozen=True)
class TextNode:
    id: str
    page_index: int
    bbox: BoundingBox
    content: str
    essential_score: float
    category: TextCategory | None = None
    gt_essential: bool | None = None


@dataclass(frozen=True)
class TailNode:
    id: str
    page_index: int
    bbox: BoundingBox


@dataclass(frozen=True)
class PanelNode:
    id: str
    page_index: int
    bbox: BoundingBox


def _pair(a: str, b: str) -> tuple[str, str]:
    return (a, b) if a <= b else (b, a)


@dataclass(frozen=True)
class EdgeSet:
    """Association scores of one page. Absent edges read as 0."""

    text_char: Mapping[tuple[str, str], float] = field(default_factory=dict)
    text_tail: Mapping[tuple[str, str], float] = field(default_factory=dict)
    char_char: Mapping[tuple[str, str], float] = field(default_factory=dict)

    def text_char_score(self, text_id: str, char_id: str) -> float:
        return self.text_char.get((text_id, char_id), 0.0)

    def text_tail_score(self, text_id: str, tail_id: str) -> float:
        return self.text_tail.get((text_id, tail_id), 0.0)

    def char_char_score(self, a: str, b: str) -> float:
        return self.char_char.get(_pair(a, b), 0.0)


@dataclass(frozen=True)
class PageGraph:
    index: int
    characters: tuple[CharacterNode, ...] = ()
    texts: tuple[TextNode, ...] = ()
    tails: tuple[TailNode, ...] = ()
    panels: tuple[PanelNode, ...] = ()
    edges: EdgeSet = field(default_factory=EdgeSet)


@dataclass(frozen=True)
class Chapter:
    pages: tuple[PageGraph, ...]
    embedding_dim: int
    chapter_id: str = "chapter"

    def characters(self) -> Iterator[CharacterNode]:
        for page in self.pages:
            yield from page.characters

    def texts(self) -> Iterator[TextNode]:
        for page in self.pages:
            yield from page.texts

    @property
    def character_ids(self) -> list[str]:
        return [c.id for c in self.characters()]

    def embeddings(self) -> np.ndarray:
        chars = list(self.characters())
        if not chars:
            return np.zeros((0, self.embedding_dim))
        return np.vstack([c.embedding for c in chars])


def _require(obj: Mapping[str, Any], key: str, where: str) -> Any:
    if key not in obj:
        raise ChapterFormatError(f"{where}: missing field {key!r}")
    return obj[key]


def _page_from_dict(
    raw: Any, position: int, dim: int, seen_ids: set[str]
) -> PageGraph:
    where = f"page {position}"
    if not isinstance(raw, Mapping):
        raise ChapterFormatError(f"{where}: expected an object")
    if "index" in raw and raw["index"] != position:
        raise ChapterFormatError(
            f"{where}: index {raw['index']!r} does not match its position in the file"
        )

    def claim(node_id: Any, kind: str) -> str:
        if not isinstance(node_id, str) or not node_id:
            raise ChapterFormatError(f"{where}: {kind} id must be a non-empty string")
        if node_id in seen_ids:
            raise ChapterFormatError(f"duplicate id {node_id!r}")
        seen_ids.add(node_id)
        return node_id

    chars = []
    for c in raw.get("characters", []):
        cid = claim(_require(c, "id", where), "character")
        gt = c.get("gt_name")
        if gt is not None and not isinstance(gt, str):
            raise ChapterFormatError(f"{cid}: gt_name must be a string")
        chars.append(
            CharacterNode(
                id=cid,
                page_index=position,
                bbox=BoundingBox.from_list(_require(c, "bbox", cid)),
                embedding=_as_unit(_require(c, "embedding", cid), cid, dim),
                gt_name=gt,
            )
        )

    texts = []
    for t in raw.get("texts", []):
        tid = claim(_require(t, "id", where), "text")
        category = t.get("category")
        if category is not None:
            try:
                category = TextCategory(category)
            except ValueError as exc:
                raise ChapterFormatError(f"{tid}: unknown category {category!r}") from exc
        gt_ess = t.get("gt_essential")
        if gt_ess is not None and not isinstance(gt_ess, bool):
            raise ChapterFormatError(f"{tid}: gt_essential must be a boolean")
        content = t.get("content", "")
        if not isinstance(content, str):
            raise ChapterFormatError(f"{tid}: content must be a string")
        texts.append(
            TextNode(
                id=tid,
                page_index=position,
                bbox=BoundingBox.from_list(_require(t, "bbox", tid)),
                content=content,
                essential_score=_score(_require(t, "essential_score", tid), tid),
                category=category,
                gt_essential=gt_ess,
            )
        )

    tails = [
        TailNode(claim(_require(x, "id", where), "tail"), position,
                 BoundingBox.from_list(_require(x, "bbox", where)))
        for x in raw.get("tails", [])
    ]
    panels = [
        PanelNode(claim(_require(x, "id", where), "panel"), position,
                  BoundingBox.from_list(_require(x, "bbox", where)))
        for x in raw.get("panels", [])
    ]

    char_ids = {c.id for c in chars}
    text_ids = {t.id for t in texts}
    tail_ids = {x.id for x in tails}
    raw_edges = raw.get("edges", {}) or {}
    if not isinstance(raw_edges, Mapping):
        raise ChapterFormatError(f"{where}: edges must be an object")

    def read(kind: str, left: set[str], right: set[str]) -> dict[tuple[str, str], float]:
        out: dict[tuple[str, str], float] = {}
        for entry in raw_edges.get(kind, []):
            if not isinstance(entry, (list, tuple)) or len(entry) != 3:
                raise ChapterFormatError(f"{where}: {kind} entries are [id, id, score]")
            a, b, s = entry
            if a not in left or b not in right:
                raise ChapterFormatError(
                    f"{where}: unknown edge endpoint in {kind} ({a!r}, {b!r})"
                )
            s = _score(s, f"{where} {kind} ({a}, {b})")
            if kind == "char_char":
                if a == b:
                    raise ChapterFormatError(f"{where}: self edge on {a!r}")
                key = _pair(a, b)
            else:
                key = (a, b)
            if key in out and out[key] != s:
                raise ChapterFormatError(f"{where}: conflicting scores for {kind} {key}")
            out[key] = s
        return out

    edges = EdgeSet(
        text_char=read("text_char", text_ids, char_ids),
        text_tail=read("text_tail", text_ids, tail_ids),
        char_char=read("char_char", char_ids, char_ids),
    )
    return PageGraph(position, tuple(chars), tuple(texts), tuple(tails), tuple(panels), edges)


def chapter_from_dict(doc: Any, chapter_id: str = "chapter") -> Chapter:
    """Validate a decoded chapter document and build a :class:`Chapter`."""
    if not isinstance(doc, Mapping):
        raise ChapterFormatError("chapter document must be a JSON object")
    dim = _require(doc, "embedding_dim", "chapter")
    if not isinstance(dim, int) or isinstance(dim, bool) or dim < 1:
        raise ChapterFormatError(f"embedding_dim must be a positive integer, got {dim!r}")
    pages_raw = _require(doc, "pages", "chapter")
    if not isinstance(pages_raw, list):
        raise ChapterFormatError("pages must be a list")
    chapter_id = doc.get("chapter_id", chapter_id)
    seen: set[str] = set()
    pages = tuple(_page_from_dict(p, i, dim, seen) for i, p in enumerate(pages_raw))
    return Chapter(pages=pages, embedding_dim=dim, chapter_id=str(chapter_id))


def parse_chapter(path: str | Path) -> Chapter:
    """Read and validate a chapter JSON file.

    Raises:
        FileNotFoundError: if ``path`` does not exist.
        ChapterFormatError: for malformed documents, dangling edge endpoints,
            embedding dimension mismatches and out-of-range scores.
    """
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(f"chapter file not found: {path}")
    try:
        doc = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ChapterFormatError(f"{path}: malformed JSON ({exc})") from exc
    return chapter_from_dict(doc, chapter_id=path.stem)


def chapter_to_dict(chapter: Chapter) -> dict[str, Any]:
    pages = []
    for page in chapter.pages:
        chars = []
        for c in page.characters:
            item: dict[str, Any] = {
                "id": c.id,
                "bbox": c.bbox.to_list(),
                "embedding": [float(v) for v in c.embedding],
            }
            if c.gt_name is not None:
                item["gt_name"] = c.gt_name
            chars.append(item)
        texts = []
        for t in page.texts:
            item = {
                "id": t.id,
                "bbox": t.bbox.to_list(),
                "content": t.content,
                "essential_score": t.essential_score,
            }
            if t.category is not None:
                item["category"] = t.category.value
            if t.gt_essential is not None:
                item["gt_essential"] = t.gt_essential
            texts.append(item)
        pages.append(
            {
                "index": page.index,
                "characters": chars,
                "texts": texts,
                "tails": [{"id": x.id, "bbox": x.bbox.to_list()} for x in page.tails],
                "panels": [{"id": x.id, "bbox": x.bbox.to_list()} for x in page.panels],
                "edges": {
                    "text_char": [[a, b, s] for (a, b), s in page.edges.text_char.items()],
                    "text_tail": [[a, b, s] for (a, b), s in page.edges.text_tail.items()],
                    "char_char": [[a, b, s] for (a, b), s in page.edges.char_char.items()],
                },
            }
        )
    return {"chapter_id": chapter.chapter_id, "embedding_dim": chapter.embedding_dim, "pages": pages}


def dumps_json(doc: Any) -> str:
    """Deterministic JSON text used for every file this package writes."""
    return json.dumps(doc, indent=2, ensure_ascii=False) + "\n"


def write_chapter(chapter: Chapter, path: str | Path) -> None:
    Path(path).write_text(dumps_json(chapter_to_dict(chapter)), encoding="utf-8")
