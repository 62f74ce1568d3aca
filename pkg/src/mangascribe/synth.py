"""Synthetic chapters with full ground truth.

Pages are grids of panels. Each character crop belongs either to a bank
character or to one of a pool of unnamed identities; its embedding is the
identity vector plus isotropic Gaussian noise, renormalized. Association
scores are the ground-truth indicator, flipped with probability
``edge_noise`` and then jittered (positives in [0.6, 1], negatives in [0, 0.4]).
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import numpy as np

from mangascribe.bank import OTHER, BankCharacter, CharacterBank, DEFAULT_ETA
from mangascribe.chapter import (
    BoundingBox,
    Chapter,
    CharacterNode,
    EdgeSet,
    PageGraph,
    PanelNode,
    TailNode,
    TextCategory,
    TextNode,
    category_to_essential,
    dumps_json,
    normalize_embedding,
)

MAX_TRIES = 10**5
PAGE_W, PAGE_H, GUTTER = 1000.0, 1400.0, 20.0

_NAMES = (
    "Aoi", "Haru", "Kenji", "Mika", "Ren", "Sora", "Taro", "Yuki", "Hana", "Daichi",
    "Emi", "Goro", "Ichiro", "Jun", "Kaori", "Nao", "Riku", "Shin", "Tomo", "Umi",
    "Yoshi", "Akira", "Botan", "Chie", "Fumi",
)
_ESSENTIAL_CATS = [c for c in TextCategory if category_to_essential(c)]
_NON_ESSENTIAL_CATS = [c for c in TextCategory if not category_to_essential(c)]


class SynthError(ValueError):
    pass


def character_name(j: int) -> str:
    base = _NAMES[j % len(_NAMES)]
    return base if j < len(_NAMES) else f"{base} {j // len(_NAMES) + 1}"


@dataclass(frozen=True)
class SynthConfig:
    seed: int = 0
    k_bank: int = 4
    pages: int = 5
    panels_per_page: tuple[int, int] = (2, 4)
    crops_per_page: tuple[int, int] = (2, 6)
    texts_per_page: tuple[int, int] = (2, 6)
    embedding_dim: int = 8
    noise_sigma: float = 0.05
    other_rate: float = 0.2
    edge_noise: float = 0.0
    essential_rate: float = 0.8
    tail_rate: float = 0.7
    lookalike_pairs: int = 0
    lookalike_page_rate: float = 0.0
    other_identities: int | None = None
    eta: float = DEFAULT_ETA

    def __post_init__(self) -> None:
        for name in ("panels_per_page", "crops_per_page", "texts_per_page"):
            lo, hi = getattr(self, name)
            if lo > hi or lo < 0:
                raise SynthError(f"{name} must be a non-empty range, got {(lo, hi)}")
        if self.panels_per_page[0] < 1:
            raise SynthError("every page needs at least one panel")
        if self.k_bank < 1 or self.embedding_dim < 2 or self.pages < 1:
            raise SynthError("need k_bank >= 1, embedding_dim >= 2 and pages >= 1")
        if self.noise_sigma < 0:
            raise SynthError("noise_sigma must be non-negative")
        if not 0 <= self.other_rate < 1:
            raise SynthError("other_rate must be in [0, 1)")
        if not 0 <= self.edge_noise < 1:
            raise SynthError("edge_noise must be in [0, 1)")
        if not 0 < self.essential_rate <= 1:
            raise SynthError("essential_rate must be in (0, 1]")
        if not 0 <= self.tail_rate <= 1 or not 0 <= self.lookalike_page_rate <= 1:
            raise SynthError("rates must lie in [0, 1]")
        if 2 * self.lookalike_pairs > self.k_bank:
            raise SynthError("lookalike_pairs needs 2 bank characters per pair")


@dataclass
class GroundTruth:
    names: dict[str, str] = field(default_factory=dict)
    speakers: dict[str, str] = field(default_factory=dict)
    essential: dict[str, bool] = field(default_factory=dict)
    identities: dict[str, str] = field(default_factory=dict)
    tails: dict[str, list[str]] = field(default_factory=dict)

    def to_dict(self) -> dict[str, Any]:
        return {
            "names": self.names,
            "speakers": self.speakers,
            "essential": self.essential,
            "identities": self.identities,
            "tails": self.tails,
        }

    @classmethod
    def from_dict(cls, doc: dict[str, Any]) -> GroundTruth:
        return cls(
            dict(doc.get("names", {})),
            dict(doc.get("speakers", {})),
            {k: bool(v) for k, v in doc.get("essential", {}).items()},
            dict(doc.get("identities", {})),
            {k: list(v) for k, v in doc.get("tails", {}).items()},
        )


def load_ground_truth(path: str | Path) -> GroundTruth:
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(f"ground-truth file not found: {path}")
    return GroundTruth.from_dict(json.loads(path.read_text(encoding="utf-8")))


def _unit(v: np.ndarray) -> np.ndarray:
    return v / np.linalg.norm(v)


def _random_unit(rng: np.random.Generator, dim: int) -> np.ndarray:
    while True:
        v = rng.normal(size=dim)
        n = np.linalg.norm(v)
        if n > 1e-9:
            return v / n


def _near(rng: np.random.Generator, u: np.ndarray, chord: float) -> np.ndarray:
    """Unit vector at Euclidean distance ``chord`` from unit vector ``u``."""
    w = rng.normal(size=u.size)
    w -= (w @ u) * u
    w = _unit(w)
    theta = 2.0 * math.asin(min(1.0, chord / 2.0))
    return math.cos(theta) * u + math.sin(theta) * w


def generate_bank(config: SynthConfig) -> CharacterBank:
    """k_bank unit vectors at pairwise distance >= 4 * noise_sigma, one exemplar each.

    The first ``2 * lookalike_pairs`` characters come in pairs whose members
    sit between 4 and 5 noise_sigma apart.
    """
    rng = np.random.default_rng([config.seed, 0])
    sep = 4.0 * config.noise_sigma
    vecs: list[np.ndarray] = []
    tries = 0
    while len(vecs) < config.k_bank:
        tries += 1
        if tries > MAX_TRIES:
            raise SynthError(
                f"could not place {config.k_bank} characters {sep:.3g} apart in "
                f"{config.embedding_dim} dimensions"
            )
        j = len(vecs)
        if j < 2 * config.lookalike_pairs and j % 2 == 1:
            chord = rng.uniform(max(sep, 0.05), max(1.25 * sep, 0.1))
            cand = _near(rng, vecs[j - 1], chord)
        else:
            cand = _random_unit(rng, config.embedding_dim)
        if all(np.linalg.norm(cand - v) >= sep for v in vecs):
            vecs.append(cand)
    chars = tuple(BankCharacter(character_name(j), (v,)) for j, v in enumerate(vecs))
    return CharacterBank(chars, config.eta)


def _panel_grid(n: int) -> list[BoundingBox]:
    cols = 1 if n == 1 else 2
    rows = math.ceil(n / cols)
    h = (PAGE_H - GUTTER * (rows + 1)) / rows
    boxes = []
    for r in range(rows):
        in_row = min(cols, n - r * cols)
        w = (PAGE_W - GUTTER * (in_row + 1)) / in_row
        y1 = GUTTER + r * (h + GUTTER)
        for c in range(in_row):
            x1 = GUTTER + c * (w + GUTTER)
            boxes.append(BoundingBox(x1, y1, x1 + w, y1 + h))
    return boxes


def _box_in(rng: np.random.Generator, panel: BoundingBox, lo: float = 0.15, hi: float = 0.35) -> BoundingBox:
    pw, ph = panel.x2 - panel.x1, panel.y2 - panel.y1
    w, h = rng.uniform(lo, hi) * pw, rng.uniform(lo, hi) * ph
    x1 = panel.x1 + rng.uniform(0, pw - w)
    y1 = panel.y1 + rng.uniform(0, ph - h)
    return BoundingBox(round(x1, 2), round(y1, 2), round(x1 + w, 2), round(y1 + h, 2))


def _score(rng: np.random.Generator, truth: bool, noise: float) -> float:
    if noise > 0 and rng.random() < noise:
        truth = not truth
    return round(float(rng.uniform(0.6, 1.0) if truth else rng.uniform(0.0, 0.4)), 6)


def generate_chapter(
    bank: CharacterBank, config: SynthConfig
) -> tuple[Chapter, GroundTruth]:
    """Random chapter over ``bank`` with its ground truth.

    Crop ``gt_name`` fields hold identity labels: the bank name for principal
    characters and ``extra_<j>`` for unnamed ones (which map to "other").
    Unnamed crops get a fresh random identity each, unless
    ``config.other_identities`` fixes a recurring pool of that size.
    """
    rng = np.random.default_rng([config.seed, 1])
    dim = config.embedding_dim
    if bank.k and bank.characters[0].exemplars[0].size != dim:
        raise SynthError("bank dimension does not match embedding_dim")
    identity_vec: dict[str, np.ndarray] = {c.name: c.exemplars[0] for c in bank.characters}
    extras = [f"extra_{j}" for j in range(config.other_identities or 0)]
    for name in extras:
        identity_vec[name] = _random_unit(rng, dim)

    def fresh_other() -> str:
        if extras:
            return extras[int(rng.integers(len(extras)))]
        name = f"extra_{len(identity_vec) - bank.k}"
        identity_vec[name] = _random_unit(rng, dim)
        return name
    gt = GroundTruth()
    pages = []
    for p in range(config.pages):
        panel_boxes = _panel_grid(int(rng.integers(config.panels_per_page[0], config.panels_per_page[1] + 1)))
        panels = tuple(PanelNode(f"p{p}-panel{j}", p, b) for j, b in enumerate(panel_boxes))

        m = int(rng.integers(config.crops_per_page[0], config.crops_per_page[1] + 1))
        idents = []
        slots = []
        for _ in range(m):
            if rng.random() < config.other_rate:
                idents.append(fresh_other())
            else:
                idents.append(bank.characters[int(rng.integers(bank.k))].name)
            slots.append(int(rng.integers(len(panels))))
        force = config.lookalike_pairs > 0 and (p == 0 or rng.random() < config.lookalike_page_rate)
        if force:
            i = int(rng.integers(config.lookalike_pairs))
            while len(idents) < 2:
                idents.append(fresh_other())
                slots.append(0)
            panel = int(rng.integers(len(panels)))
            idents[0], idents[1] = bank.characters[2 * i].name, bank.characters[2 * i + 1].name
            slots[0] = slots[1] = panel

        chars = []
        for j, (ident, slot) in enumerate(zip(idents, slots)):
            cid = f"p{p}-c{j}"
            vec = identity_vec[ident]
            if config.noise_sigma > 0:
                vec = _unit(vec + rng.normal(0.0, config.noise_sigma, dim))
            chars.append(CharacterNode(cid, p, _box_in(rng, panel_boxes[slot]), normalize_embedding(vec), ident))
            gt.identities[cid] = ident
            gt.names[cid] = ident if ident in bank.names else OTHER

        char_char = {}
        for a in range(m):
            for b in range(a + 1, m):
                key = (chars[a].id, chars[b].id) if chars[a].id < chars[b].id else (chars[b].id, chars[a].id)
                char_char[key] = _score(rng, idents[a] == idents[b], config.edge_noise)

        texts, tails = [], []
        text_char, text_tail = {}, {}
        speaker_of: dict[str, str | None] = {}
        for t in range(int(rng.integers(config.texts_per_page[0], config.texts_per_page[1] + 1))):
            tid = f"p{p}-t{t}"
            essential = bool(rng.random() < config.essential_rate)
            speaker = None
            if essential and chars:
                speaker = chars[int(rng.integers(m))]
                slot = slots[chars.index(speaker)]
            else:
                slot = int(rng.integers(len(panels)))
            cats = _ESSENTIAL_CATS if essential else _NON_ESSENTIAL_CATS
            category = cats[int(rng.integers(len(cats)))]
            ess_score = round(float(rng.uniform(0.6, 1.0) if essential else rng.uniform(0.0, 0.4)), 6)
            texts.append(
                TextNode(tid, p, _box_in(rng, panel_boxes[slot], 0.1, 0.25),
                         f"Line {t + 1} of page {p + 1}.", ess_score, category, essential)
            )
            gt.essential[tid] = essential
            speaker_of[tid] = speaker.id if speaker is not None else None
            if speaker is not None:
                gt.speakers[tid] = speaker.id
                if rng.random() < config.tail_rate:
                    lid = f"p{p}-l{len(tails)}"
                    tb = texts[-1].bbox
                    tails.append(TailNode(lid, p, BoundingBox(tb.x1, tb.y2, tb.x1 + 10.0, tb.y2 + 10.0)))
                    gt.tails[tid] = [lid]
        for text in texts:
            for c in chars:
                text_char[(text.id, c.id)] = _score(rng, speaker_of[text.id] == c.id, config.edge_noise)
            for tail in tails:
                text_tail[(text.id, tail.id)] = _score(
                    rng, tail.id in gt.tails.get(text.id, ()), config.edge_noise
                )
        pages.append(
            PageGraph(p, tuple(chars), tuple(texts), tuple(tails), panels,
                      EdgeSet(text_char, text_tail, char_char))
        )
    chapter = Chapter(tuple(pages), dim, f"synth-{config.seed}")
    return chapter, gt


def generate(config: SynthConfig) -> tuple[CharacterBank, Chapter, GroundTruth]:
    bank = generate_bank(config)
    chapter, gt = generate_chapter(bank, config)
    return bank, chapter, gt


def write_ground_truth(gt: GroundTruth, path: str | Path) -> None:
    Path(path).write_text(dumps_json(gt.to_dict()), encoding="utf-8")
