"""Reading order, speaker attribution and transcript rendering.

Reading order is right-to-left manga order computed by a recursive XY-cut
over panel boxes; texts follow their panel, and inside a panel run from the
right edge leftwards, top to bottom.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field
from typing import Any, Mapping, Sequence

from mangascribe.chapter import BoundingBox, Chapter, PageGraph, TextNode, dumps_json

UNSURE = "<unsure>"
DEFAULT_ESSENTIAL_THRESHOLD = 0.5
DEFAULT_SPEAKER_THRESHOLD = 0.4
DEFAULT_TAIL_THRESHOLD = 0.5


def _gaps(intervals: list[tuple[float, float]]) -> list[tuple[float, float]]:
    """Uncovered stretches between the merged intervals, as (start, end)."""
    intervals = sorted(intervals)
    gaps = []
    reach = intervals[0][1]
    for lo, hi in intervals[1:]:
        if lo >= reach:
            gaps.append((reach, lo))
        reach = max(reach, hi)
    return gaps


def _widest(gaps: list[tuple[float, float]]) -> tuple[float, float]:
    # widest first, earliest position on ties
    return min(gaps, key=lambda g: (-(g[1] - g[0]), g[0]))


def _xy_cut(items: list[tuple[BoundingBox, str]]) -> list[str]:
    if len(items) <= 1:
        return [i for _, i in items]
    h_gaps = _gaps([(b.y1, b.y2) for b, _ in items])
    if h_gaps:
        lo, hi = _widest(h_gaps)
        top = [it for it in items if it[0].y2 <= lo]
        bottom = [it for it in items if it[0].y1 >= hi]
        return _xy_cut(top) + _xy_cut(bottom)
    v_gaps = _gaps([(b.x1, b.x2) for b, _ in items])
    if v_gaps:
        lo, hi = _widest(v_gaps)
        left = [it for it in items if it[0].x2 <= lo]
        right = [it for it in items if it[0].x1 >= hi]
        return _xy_cut(right) + _xy_cut(left)
    return [i for _, i in sorted(items, key=lambda it: (-it[0].x2, it[0].y1, it[1]))]


def order_panels(page: PageGraph) -> list[str]:
    """Panel ids in reading order (top to bottom, right to left)."""
    return _xy_cut([(p.bbox, p.id) for p in page.panels])


def assign_to_panels(
    boxes: Sequence[BoundingBox], panels: Sequence[BoundingBox]
) -> list[int | None]:
    """Panel position (into ``panels``) for each box, or None without panels.

    Maximal overlap area wins, earlier panels on ties; with no overlap at all
    the panel with the nearest centre is used.
    """
    out: list[int | None] = []
    for box in boxes:
        if not panels:
            out.append(None)
            continue
        overlaps = [box.intersection(p) for p in panels]
        best = max(overlaps)
        if best > 0:
            out.append(overlaps.index(best))
            continue
        cx, cy = box.center
        dists = [(p.center[0] - cx) ** 2 + (p.center[1] - cy) ** 2 for p in panels]
        out.append(dists.index(min(dists)))
    return out


def _text_key(t: TextNode) -> tuple[float, float, str]:
    cx, cy = t.bbox.center
    return (-cx, cy, t.id)


def order_texts_with_panels(
    page: PageGraph, panel_order: Sequence[str]
) -> list[tuple[str | None, str]]:
    """(panel id, text id) pairs in reading order."""
    by_id = {p.id: p for p in page.panels}
    panels = [by_id[pid] for pid in panel_order]
    slots = assign_to_panels([t.bbox for t in page.texts], [p.bbox for p in panels])
    buckets: dict[int | None, list[TextNode]] = {}
    for t, slot in zip(page.texts, slots):
        buckets.setdefault(slot, []).append(t)
    out = []
    keys = [None] if not panels else range(len(panels))
    for slot in keys:
        pid = None if slot is None else panels[slot].id
        out.extend((pid, t.id) for t in sorted(buckets.get(slot, []), key=_text_key))
    return out


def order_texts(page: PageGraph, panel_order: Sequence[str]) -> list[str]:
    """Text ids of ``page`` in reading order given the panel order."""
    return [tid for _, tid in order_texts_with_panels(page, panel_order)]


@dataclass(frozen=True)
class Utterance:
    page_index: int
    panel_id: str | None
    text_id: str
    content: str
    speaker: str
    attributed: bool
    confidence: float


@dataclass(frozen=True)
class TranscriptParams:
    essential_threshold: float = DEFAULT_ESSENTIAL_THRESHOLD
    speaker_threshold: float = DEFAULT_SPEAKER_THRESHOLD
    tail_threshold: float = DEFAULT_TAIL_THRESHOLD
    tail_gated: bool = False
    use_gt_essential: bool = False


@dataclass(frozen=True)
class Transcript:
    utterances: tuple[Utterance, ...]
    chapter_id: str
    num_pages: int
    params: TranscriptParams = field(default_factory=TranscriptParams)


def is_essential(text: TextNode, threshold: float, use_gt: bool = False) -> bool:
    if use_gt and text.gt_essential is not None:
        return text.gt_essential
    return text.essential_score >= threshold


def attribute_speakers(
    chapter: Chapter,
    naming: Mapping[str, str],
    speaker_threshold: float = DEFAULT_SPEAKER_THRESHOLD,
    tail_gated: bool = False,
    *,
    essential_threshold: float = DEFAULT_ESSENTIAL_THRESHOLD,
    tail_threshold: float = DEFAULT_TAIL_THRESHOLD,
    use_gt_essential: bool = False,
) -> list[Utterance]:
    """Utterances for the essential texts of ``chapter`` in reading order.

    The speaker is the name of the crop with the highest text-character score
    when that score reaches ``speaker_threshold``, else ``<unsure>``. With
    ``tail_gated`` the speaker is kept but marked unattributed for texts that
    have no tail edge scoring at least ``tail_threshold``.
    """
    missing = [c for c in chapter.character_ids if c not in naming]
    if missing:
        raise ValueError(f"naming does not cover crops: {missing[:5]}")
    out = []
    for page in chapter.pages:
        texts = {t.id: t for t in page.texts}
        for panel_id, tid in order_texts_with_panels(page, order_panels(page)):
            text = texts[tid]
            if not is_essential(text, essential_threshold, use_gt_essential):
                continue
            confidence, speaker_crop = 0.0, None
            for c in page.characters:
                s = page.edges.text_char_score(tid, c.id)
                if s > confidence:
                    confidence, speaker_crop = s, c.id
            if speaker_crop is not None and confidence >= speaker_threshold:
                speaker = naming[speaker_crop]
            else:
                speaker = UNSURE
            attributed = True
            if tail_gated:
                attributed = any(
                    page.edges.text_tail_score(tid, tail.id) >= tail_threshold for tail in page.tails
                )
            out.append(
                Utterance(page.index, panel_id, tid, text.content, speaker, attributed, confidence)
            )
    return out


def build_transcript(
    chapter: Chapter, naming: Mapping[str, str], params: TranscriptParams | None = None
) -> Transcript:
    params = params or TranscriptParams()
    utterances = attribute_speakers(
        chapter,
        naming,
        params.speaker_threshold,
        params.tail_gated,
        essential_threshold=params.essential_threshold,
        tail_threshold=params.tail_threshold,
        use_gt_essential=params.use_gt_essential,
    )
    return Transcript(tuple(utterances), chapter.chapter_id, len(chapter.pages), params)


def _plain_line(u: Utterance) -> str:
    content = " ".join(u.content.split())
    if not u.attributed:
        return content
    return f"{u.speaker}: {content}"


def render_transcript(transcript: Transcript, fmt: str = "plain") -> bytes:
    """Serialize a transcript as plain text or JSON (UTF-8, LF line endings).

    Plain text marks each page with ``--- page N ---`` (1-based) and writes
    one ``speaker: content`` line per utterance.
    """
    if fmt == "plain":
        by_page: dict[int, list[Utterance]] = {}
        for u in transcript.utterances:
            by_page.setdefault(u.page_index, []).append(u)
        lines = []
        for p in range(transcript.num_pages):
            lines.append(f"--- page {p + 1} ---")
            lines.extend(_plain_line(u) for u in by_page.get(p, []))
        return ("\n".join(lines) + "\n").encode("utf-8")
    if fmt == "json":
        doc: dict[str, Any] = {
            "chapter_id": transcript.chapter_id,
            "num_pages": transcript.num_pages,
            "parameters": asdict(transcript.params),
            "utterances": [asdict(u) for u in transcript.utterances],
        }
        return dumps_json(doc).encode("utf-8")
    raise ValueError(f"unknown transcript format {fmt!r}")


def parse_transcript_json(data: bytes | str) -> Transcript:
    doc = json.loads(data)
    return Transcript(
        tuple(Utterance(**u) for u in doc["utterances"]),
        doc["chapter_id"],
        doc["num_pages"],
        TranscriptParams(**doc["parameters"]),
    )
