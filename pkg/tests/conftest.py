from __future__ import annotations

import copy
import json

import pytest

ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


MINIMAL = {
    "embedding_dim": 2,
    "pages": [
        {
            "index": 0,
            "characters": [{"id": "c1", "bbox": [10, 10, 50, 80], "embedding": [1.0, 0.0]}],
            "texts": [
                {"id": "t1", "bbox": [60, 10, 90, 40], "content": "Hello", "essential_score": 0.9}
            ],
            "tails": [],
            "panels": [{"id": "p1", "bbox": [0, 0, 100, 100]}],
            "edges": {"text_char": [["t1", "c1", 0.9]], "text_tail": [], "char_char": []},
        }
    ],
}


@pytest.fixture
def minimal_doc():
    return copy.deepcopy(MINIMAL)


@pytest.fixture
def write_json(tmp_path):
    counter = iter(range(10**6))

    def _write(doc, name=None):
        path = tmp_path / (name or f"doc{next(counter)}.json")
        path.write_text(json.dumps(doc), encoding="utf-8")
        return path

    return _write


@pytest.fixture
def acceptance_log():
    """Record one pass/fail line per acceptance criterion, then assert it."""

    def _record(number, title, ok, detail):
        line = f"AC{number} {'PASS' if ok else 'FAIL'}  {title}: {detail}"
        ACCEPTANCE_LINES.append(line)
        print(line)
        assert ok, line

    return _record
