import json

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from mangascribe.chapter import (
    BoundingBox,
    ChapterFormatError,
    TextCategory,
    category_to_essential,
    chapter_from_dict,
    chapter_to_dict,
    dumps_json,
    normalize_embedding,
    parse_chapter,
    write_chapter,
)


def test_minimal_file_parses(minimal_doc, write_json):
    ch = parse_chapter(write_json(minimal_doc, "ch01.json"))
    assert len(ch.pages) == 1
    assert ch.chapter_id == "ch01"
    assert ch.character_ids == ["c1"]
    page = ch.pages[0]
    assert page.edges.text_char_score("t1", "c1") == 0.9
    assert page.edges.text_char_score("t1", "nope") == 0.0
    assert [t.content for t in ch.texts()] == ["Hello"]


def test_unknown_edge_endpoint(minimal_doc):
    minimal_doc["pages"][0]["edges"]["text_char"] = [["t1", "ghost", 0.5]]
    with pytest.raises(ChapterFormatError, match="unknown edge endpoint"):
        chapter_from_dict(minimal_doc)


def test_edge_endpoint_on_other_page_is_unknown(minimal_doc):
    second = json.loads(json.dumps(minimal_doc["pages"][0]))
    second["index"] = 1
    for kind, key in (("characters", "c"), ("texts", "t"), ("panels", "p")):
        for node in second[kind]:
            node["id"] = node["id"].replace(key + "1", key + "2")
    second["edges"]["text_char"] = [["t2", "c1", 0.5]]
    minimal_doc["pages"].append(second)
    with pytest.raises(ChapterFormatError, match="unknown edge endpoint"):
        chapter_from_dict(minimal_doc)


def test_embedding_normalized(minimal_doc):
    minimal_doc["pages"][0]["characters"][0]["embedding"] = [0.0, 2.0]
    ch = chapter_from_dict(minimal_doc)
    emb = ch.embeddings()[0]
    assert np.linalg.norm(emb) == pytest.approx(1.0, abs=1e-6)
    np.testing.assert_allclose(emb, [0.0, 1.0])


@pytest.mark.parametrize(
    "mutate, message",
    [
        (lambda d: d["pages"][0]["characters"][0].update(embedding=[0.0, 0.0]), "zero embedding"),
        (lambda d: d["pages"][0]["characters"][0].update(embedding=[1.0, 0.0, 0.0]), "dim"),
        (lambda d: d["pages"][0]["characters"][0].update(bbox=[5, 5, 5, 9]), "degenerate"),
        (lambda d: d["pages"][0]["texts"][0].update(essential_score=1.5), "outside"),
        (lambda d: d["pages"][0]["texts"][0].update(id="c1"), "duplicate id"),
        (lambda d: d["pages"][0].update(index=3), "index"),
        (lambda d: d["pages"][0]["texts"][0].update(category="shouting"), "unknown category"),
        (lambda d: d["pages"][0]["edges"].update(text_char=[["t1", "c1", 0.9], ["t1", "c1", 0.3]]), "conflicting"),
        (lambda d: d.update(embedding_dim=0), "embedding_dim"),
    ],
)
def test_invalid_documents(minimal_doc, mutate, message):
    mutate(minimal_doc)
    with pytest.raises(ChapterFormatError, match=message):
        chapter_from_dict(minimal_doc)


def test_char_char_self_edge_rejected(minimal_doc):
    minimal_doc["pages"][0]["edges"]["char_char"] = [["c1", "c1", 0.9]]
    with pytest.raises(ChapterFormatError, match="self edge"):
        chapter_from_dict(minimal_doc)


def test_char_char_symmetric(minimal_doc):
    page = minimal_doc["pages"][0]
    page["characters"].append({"id": "c2", "bbox": [0, 0, 5, 5], "embedding": [0.0, 1.0]})
    page["edges"]["char_char"] = [["c2", "c1", 0.8]]
    edges = chapter_from_dict(minimal_doc).pages[0].edges
    assert edges.char_char_score("c1", "c2") == edges.char_char_score("c2", "c1") == 0.8


def test_missing_file_and_bad_json(tmp_path):
    with pytest.raises(FileNotFoundError, match="missing.json"):
        parse_chapter(tmp_path / "missing.json")
    bad = tmp_path / "bad.json"
    bad.write_text("{not json", encoding="utf-8")
    with pytest.raises(ChapterFormatError, match="malformed JSON"):
        parse_chapter(bad)


def test_roundtrip_is_stable(minimal_doc, tmp_path):
    minimal_doc["pages"][0]["texts"][0]["category"] = "background_info"
    ch = chapter_from_dict(minimal_doc, "x")
    path = tmp_path / "x.json"
    write_chapter(ch, path)
    again = parse_chapter(path)
    assert dumps_json(chapter_to_dict(again)) == path.read_text(encoding="utf-8")
    assert again.pages[0].texts[0].category is TextCategory.BACKGROUND_INFO


@pytest.mark.parametrize(
    "category, essential",
    [
        ("conversational", True),
        ("scene_text", False),
        ("interjection_implicit", True),
        ("action_sound", False),
        ("editorial_note", False),
        ("background_info", True),
        ("internal_thought", True),
        ("other", False),
    ],
)
def test_category_to_essential(category, essential):
    assert category_to_essential(category) is essential


def test_box_geometry():
    a = BoundingBox(0, 0, 10, 10)
    b = BoundingBox(5, 0, 15, 10)
    assert a.area == 100
    assert a.center == (5.0, 5.0)
    assert a.intersection(b) == 50
    assert a.iou(b) == pytest.approx(50 / 150)
    assert a.iou(BoundingBox(20, 20, 30, 30)) == 0.0
    assert BoundingBox.from_list(a.to_list()) == a
    with pytest.raises(ChapterFormatError):
        BoundingBox.from_list([1, 2, 3])


coords = st.floats(0, 1000, allow_nan=False)


@st.composite
def boxes(draw):
    x1, y1 = draw(coords), draw(coords)
    w, h = draw(st.floats(0.5, 500)), draw(st.floats(0.5, 500))
    return BoundingBox(x1, y1, x1 + w, y1 + h)


@given(boxes(), boxes())
def test_iou_bounds_and_symmetry(a, b):
    iou = a.iou(b)
    assert 0.0 <= iou <= 1.0
    assert iou == pytest.approx(b.iou(a))
    assert a.iou(a) == pytest.approx(1.0)


@given(st.lists(st.floats(-100, 100, allow_nan=False), min_size=1, max_size=12))
def test_normalize_embedding_unit(values):
    v = np.array(values)
    if np.linalg.norm(v) < 1e-6:
        return
    out = normalize_embedding(v)
    assert np.linalg.norm(out) == pytest.approx(1.0, abs=1e-9)
    assert not out.flags.writeable
