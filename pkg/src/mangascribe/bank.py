"""Named character gallery and the crop-to-character cost matrix."""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Sequence

import numpy as np

from mangascribe.chapter import CharacterNode, ChapterFormatError, _as_unit, dumps_json

OTHER = "other"
DEFAULT_ETA = 0.75


class BankFormatError(ValueError):
    """Raised for malformed or inconsistent character bank documents."""


@dataclass(frozen=True)
class BankCharacter:
    name: str
    exemplars: tuple[np.ndarray, ...]

    def __post_init__(self) -> None:
        if not self.name:
            raise BankFormatError("character name must be non-empty")
        if self.name == OTHER:
            raise BankFormatError(f"{OTHER!r} is reserved and cannot name a bank character")
        if not self.exemplars:
            raise BankFormatError(f"{self.name}: at least one exemplar is required")
        try:
            units = tuple(_as_unit(e, f"{self.name} exemplar", None) for e in self.exemplars)
        except ChapterFormatError as exc:
            raise BankFormatError(str(exc)) from exc
        object.__setattr__(self, "exemplars", units)


@dataclass(frozen=True)
class CharacterBank:
    characters: tuple[BankCharacter, ...] = ()
    eta: float = DEFAULT_ETA

    def __post_init__(self) -> None:
        if not self.eta > 0:
            raise BankFormatError(f"eta must be positive, got {self.eta}")
        names = [c.name for c in self.characters]
        if len(set(names)) != len(names):
            raise BankFormatError("character names must be unique")

    @property
    def k(self) -> int:
        return len(self.characters)

    @property
    def names(self) -> list[str]:
        return [c.name for c in self.characters]

    def label_name(self, label: int) -> str:
        """Name for a column index; index ``k`` is the "other" class."""
        return OTHER if label == self.k else self.characters[label].name

    def with_eta(self, eta: float) -> CharacterBank:
        return CharacterBank(self.characters, eta)

    def representatives(self) -> np.ndarray:
        """(k, D) matrix of representative embeddings, one row per character."""
        if not self.characters:
            return np.zeros((0, 0))
        return np.vstack([representative_embedding(c) for c in self.characters])


def representative_embedding(character: BankCharacter) -> np.ndarray:
    """Renormalized mean of a character's exemplars.

    A single exemplar is returned as is.
    """
    if len(character.exemplars) == 1:
        return character.exemplars[0]
    mean = np.mean(np.vstack(character.exemplars), axis=0)
    norm = np.linalg.norm(mean)
    if norm < 1e-12:
        raise BankFormatError(f"{character.name}: degenerate exemplar set (mean is zero)")
    return mean / norm


@dataclass(frozen=True)
class CostMatrix:
    """n x (k+1) crop-to-character costs; the last column is the outlier cost."""

    values: np.ndarray
    eta: float

    @property
    def n(self) -> int:
        return self.values.shape[0]

    @property
    def k(self) -> int:
        return self.values.shape[1] - 1


def cost_matrix_from_embeddings(embeddings: np.ndarray, bank: CharacterBank) -> CostMatrix:
    embeddings = np.atleast_2d(np.asarray(embeddings, dtype=np.float64))
    n = embeddings.shape[0]
    values = np.empty((n, bank.k + 1))
    if bank.k:
        reps = bank.representatives()
        if reps.shape[1] != embeddings.shape[1]:
            raise ValueError(
                f"dimension mismatch: crops have {embeddings.shape[1]}, bank has {reps.shape[1]}"
            )
        diff = embeddings[:, None, :] - reps[None, :, :]
        values[:, : bank.k] = np.sqrt(np.einsum("ijk,ijk->ij", diff, diff))
    values[:, bank.k] = bank.eta
    values.setflags(write=False)
    return CostMatrix(values, bank.eta)


def build_cost_matrix(crops: Sequence[CharacterNode], bank: CharacterBank) -> CostMatrix:
    """Euclidean distance from every crop to every bank character, plus the eta column."""
    if not crops:
        raise ValueError("at least one crop is required")
    return cost_matrix_from_embeddings(np.vstack([c.embedding for c in crops]), bank)


def optimal_exemplar_index(embeddings: Sequence[np.ndarray]) -> int:
    if len(embeddings) == 0:
        raise ValueError("need at least one embedding")
    if len(embeddings) == 1:
        return 0
    X = np.vstack(embeddings)
    dist = np.linalg.norm(X[:, None, :] - X[None, :, :], axis=2)
    # mean similarity to the others; the zero self-distance does not affect argmin
    mean_dist = dist.sum(axis=1) / (len(X) - 1)
    return int(np.argmin(mean_dist))


def optimal_exemplar(embeddings: Sequence[np.ndarray]) -> np.ndarray:
    """Member crop with the highest mean similarity to all other members.

    Similarity is negative Euclidean distance; ties go to the lowest index.
    """
    return np.asarray(embeddings[optimal_exemplar_index(embeddings)])


def optimal_exemplar_bank(
    crops: Sequence[CharacterNode], gt_names: dict[str, str], eta: float = DEFAULT_ETA
) -> CharacterBank:
    """Bank whose single exemplar per name is the in-chapter optimal crop.

    Names come from ``gt_names``; crops labelled "other" are ignored. Character
    order follows first appearance in ``crops``.
    """
    groups: dict[str, list[np.ndarray]] = {}
    for crop in crops:
        name = gt_names[crop.id]
        if name == OTHER:
            continue
        groups.setdefault(name, []).append(crop.embedding)
    chars = tuple(BankCharacter(name, (optimal_exemplar(embs),)) for name, embs in groups.items())
    return CharacterBank(chars, eta)


def bank_from_dict(doc: Any, embedding_dim: int | None = None) -> CharacterBank:
    if not isinstance(doc, dict):
        raise BankFormatError("bank document must be a JSON object")
    eta = doc.get("eta", DEFAULT_ETA)
    if not isinstance(eta, (int, float)) or isinstance(eta, bool):
        raise BankFormatError(f"eta must be a number, got {eta!r}")
    chars = []
    for i, raw in enumerate(doc.get("characters", [])):
        if not isinstance(raw, dict) or "name" not in raw:
            raise BankFormatError(f"character {i}: missing name")
        name = raw["name"]
        if not isinstance(name, str):
            raise BankFormatError(f"character {i}: name must be a string")
        exemplars = raw.get("exemplars") or []
        try:
            embs = tuple(_as_unit(e, f"{name} exemplar", embedding_dim) for e in exemplars)
        except ChapterFormatError as exc:
            raise BankFormatError(str(exc)) from exc
        chars.append(BankCharacter(name, embs))
    dims = {e.size for c in chars for e in c.exemplars}
    if len(dims) > 1:
        raise BankFormatError(f"exemplar dimensions disagree: {sorted(dims)}")
    return CharacterBank(tuple(chars), float(eta))


def parse_bank(path: str | Path, embedding_dim: int | None = None) -> CharacterBank:
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(f"bank file not found: {path}")
    try:
        doc = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise BankFormatError(f"{path}: malformed JSON ({exc})") from exc
    return bank_from_dict(doc, embedding_dim)


def bank_to_dict(bank: CharacterBank) -> dict[str, Any]:
    return {
        "eta": bank.eta,
        "characters": [
            {"name": c.name, "exemplars": [[float(v) for v in e] for e in c.exemplars]}
            for c in bank.characters
        ],
    }


def write_bank(bank: CharacterBank, path: str | Path) -> None:
    Path(path).write_text(dumps_json(bank_to_dict(bank)), encoding="utf-8")
