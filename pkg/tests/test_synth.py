import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mangascribe.bank import OTHER, write_bank
from mangascribe.chapter import parse_chapter, write_chapter
from mangascribe.constraints import extract_constraints
from mangascribe.metrics import naming_accuracy
from mangascribe.solver import name_chapter
from mangascribe.synth import (
    GroundTruth,
    SynthConfig,
    SynthError,
    generate,
    generate_bank,
    load_ground_truth,
    write_ground_truth,
)


def test_bank_separation():
    bank = generate_bank(SynthConfig(k_bank=2, embedding_dim=8, noise_sigma=0.05))
    reps = bank.representatives()
    assert np.linalg.norm(reps, axis=1) == pytest.approx([1.0, 1.0])
    assert np.linalg.norm(reps[0] - reps[1]) >= 0.2


def test_bank_deterministic():
    a = generate_bank(SynthConfig(seed=4))
    b = generate_bank(SynthConfig(seed=4))
    assert a.names == b.names
    np.testing.assert_array_equal(a.representatives(), b.representatives())


def test_impossible_packing():
    with pytest.raises(SynthError):
        generate_bank(SynthConfig(k_bank=100, embedding_dim=2, noise_sigma=0.2))


def test_noise_free_identifiable():
    bank, ch, gt = generate(SynthConfig(seed=2, noise_sigma=0.0, edge_noise=0.0, other_rate=0.0))
    names = name_chapter(ch, bank, extract_constraints(ch)).names(bank)
    assert naming_accuracy(gt.names, names) == 1.0


def test_byte_identical_files(tmp_path):
    for run in ("a", "b"):
        bank, ch, gt = generate(SynthConfig(seed=9, pages=4))
        write_chapter(ch, tmp_path / f"{run}.chapter.json")
        write_bank(bank, tmp_path / f"{run}.bank.json")
        write_ground_truth(gt, tmp_path / f"{run}.gt.json")
    for kind in ("chapter", "bank", "gt"):
        assert (tmp_path / f"a.{kind}.json").read_bytes() == (tmp_path / f"b.{kind}.json").read_bytes()
    again = parse_chapter(tmp_path / "a.chapter.json")
    assert again.character_ids == ch.character_ids
    assert load_ground_truth(tmp_path / "a.gt.json") == gt


def test_other_rate_near_one():
    with pytest.raises(SynthError):
        SynthConfig(other_rate=1.0)
    _, _, gt = generate(SynthConfig(seed=0, k_bank=1, pages=20, other_rate=0.99))
    others = sum(v == OTHER for v in gt.names.values())
    assert others / len(gt.names) >= 0.9


def test_lookalikes_share_a_panel_on_first_page():
    bank, ch, gt = generate(SynthConfig(seed=0, k_bank=4, lookalike_pairs=1, noise_sigma=0.1))
    reps = bank.representatives()
    dist = np.linalg.norm(reps[0] - reps[1])
    assert dist < min(np.linalg.norm(reps[i] - reps[j]) for i, j in itertools.combinations(range(4), 2) if (i, j) != (0, 1))
    page0 = {gt.names[c.id] for c in ch.pages[0].characters}
    assert {bank.names[0], bank.names[1]} <= page0


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 10**6), st.floats(0, 0.3), st.floats(0, 0.5))
def test_generated_invariants(seed, edge_noise, other_rate):
    bank, ch, gt = generate(SynthConfig(seed=seed, pages=3, edge_noise=edge_noise, other_rate=other_rate))
    assert set(gt.names) == set(ch.character_ids) == set(gt.identities)
    assert set(gt.names.values()) <= set(bank.names) | {OTHER}
    for c in ch.characters():
        assert (gt.names[c.id] == OTHER) == (gt.identities[c.id] not in bank.names)
        assert np.linalg.norm(c.embedding) == pytest.approx(1.0)
    for page in ch.pages:
        crop_ids = {c.id for c in page.characters}
        for t in page.texts:
            if t.id in gt.speakers:
                assert gt.essential[t.id] and gt.speakers[t.id] in crop_ids
        for a, b in itertools.combinations(page.characters, 2):
            if edge_noise == 0:
                same = gt.identities[a.id] == gt.identities[b.id]
                assert (page.edges.char_char_score(a.id, b.id) >= 0.5) == same


def test_ground_truth_dict_roundtrip():
    _, _, gt = generate(SynthConfig(seed=5))
    assert GroundTruth.from_dict(gt.to_dict()) == gt


@pytest.mark.parametrize(
    "kwargs",
    [dict(panels_per_page=(3, 2)), dict(panels_per_page=(0, 2)), dict(noise_sigma=-0.1),
     dict(edge_noise=1.0), dict(essential_rate=0.0), dict(lookalike_pairs=3, k_bank=4), dict(k_bank=0)],
)
def test_config_validation(kwargs):
    with pytest.raises(SynthError):
        SynthConfig(**kwargs)
