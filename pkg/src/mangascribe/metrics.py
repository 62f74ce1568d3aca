"""Evaluation metrics: clustering, retrieval, edge AP, text AP and naming accuracy."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Any, Hashable, Mapping, Sequence

import numpy as np
from scipy.special import gammaln

from mangascribe.chapter import BoundingBox, Chapter, dumps_json
from mangascribe.constraints import per_page_components

DEFAULT_IOU = 0.5


class MetricError(ValueError):
    pass


# ---------------------------------------------------------------- boxes / AP


def match_boxes(
    pred: Sequence[tuple[BoundingBox, float]], gt: Sequence[BoundingBox], iou_min: float = DEFAULT_IOU
) -> dict[int, int]:
    """Greedy one-to-one matching of predicted boxes to ground truth.

    Predictions are visited by descending score (input order on ties); each
    takes the free GT box of highest IoU, provided it reaches ``iou_min``.
    """
    if not 0.0 < iou_min <= 1.0:
        raise ValueError(f"iou_min must be in (0, 1], got {iou_min}")
    order = sorted(range(len(pred)), key=lambda i: -pred[i][1])
    free = set(range(len(gt)))
    out = {}
    for i in order:
        box = pred[i][0]
        best, best_iou = None, 0.0
        for j in sorted(free):
            iou = box.iou(gt[j])
            if iou >= iou_min and iou > best_iou:
                best, best_iou = j, iou
        if best is not None:
            out[i] = best
            free.discard(best)
    return out


def average_precision(scores: Sequence[float], labels: Sequence[bool]) -> float:
    """Mean of the precision at the rank of every positive, scores descending."""
    scores = np.asarray(scores, dtype=np.float64)
    labels = np.asarray(labels, dtype=bool)
    if scores.shape != labels.shape:
        raise MetricError("scores and labels differ in length")
    if not labels.any():
        raise MetricError("AP undefined: no positive labels")
    order = np.argsort(-scores, kind="stable")
    hits = labels[order]
    precision = np.cumsum(hits) / np.arange(1, len(hits) + 1)
    return float(precision[hits].mean())


# ---------------------------------------------------------------- clustering


def _contingency(a: Sequence[Hashable], b: Sequence[Hashable]) -> np.ndarray:
    _, ai = np.unique(np.asarray(a, dtype=object).astype(str), return_inverse=True)
    _, bi = np.unique(np.asarray(b, dtype=object).astype(str), return_inverse=True)
    table = np.zeros((ai.max() + 1, bi.max() + 1), dtype=np.int64)
    np.add.at(table, (ai, bi), 1)
    return table


def _entropy(counts: np.ndarray) -> float:
    p = counts[counts > 0] / counts.sum()
    return float(-(p * np.log(p)).sum())


def _mutual_info(table: np.ndarray) -> float:
    n = table.sum()
    a = table.sum(axis=1)
    b = table.sum(axis=0)
    nz = table > 0
    nij = table[nz]
    outer = np.outer(a, b)[nz]
    return float((nij / n * np.log(n * nij / outer)).sum())


def expected_mutual_info(a: np.ndarray, b: np.ndarray) -> float:
    """Expected MI of two random partitions with the given marginals (hypergeometric model)."""
    n = int(a.sum())
    total = 0.0
    lg_n = gammaln(n + 1)
    for ai in a:
        for bj in b:
            lo = max(1, ai + bj - n)
            hi = min(ai, bj)
            if lo > hi:
                continue
            nij = np.arange(lo, hi + 1)
            term = nij / n * np.log(n * nij / (ai * bj))
            log_p = (
                gammaln(ai + 1) + gammaln(bj + 1) + gammaln(n - ai + 1) + gammaln(n - bj + 1)
                - lg_n - gammaln(nij + 1) - gammaln(ai - nij + 1) - gammaln(bj - nij + 1)
                - gammaln(n - ai - bj + nij + 1)
            )
            total += float((term * np.exp(log_p)).sum())
    return total


def _same_partition(table: np.ndarray) -> bool:
    return bool(((table > 0).sum(axis=0) == 1).all() and ((table > 0).sum(axis=1) == 1).all())


def clustering_metrics(true_labels: Sequence[Hashable], pred_labels: Sequence[Hashable]) -> dict[str, float]:
    """AMI and NMI, both with the arithmetic-mean entropy normalizer."""
    if len(true_labels) != len(pred_labels):
        raise MetricError("label sequences differ in length")
    if len(true_labels) == 0:
        raise MetricError("need at least one item")
    table = _contingency(true_labels, pred_labels)
    if _same_partition(table):
        return {"AMI": 1.0, "NMI": 1.0}
    h_true, h_pred = _entropy(table.sum(axis=1)), _entropy(table.sum(axis=0))
    if h_true == 0.0 or h_pred == 0.0:
        return {"AMI": 0.0, "NMI": 0.0}
    mi = _mutual_info(table)
    mean_h = (h_true + h_pred) / 2.0
    emi = expected_mutual_info(table.sum(axis=1), table.sum(axis=0))
    denom = mean_h - emi
    eps = np.finfo(np.float64).eps
    denom = min(denom, -eps) if denom < 0 else max(denom, eps)
    return {"AMI": float((mi - emi) / denom), "NMI": float(mi / mean_h)}


# ---------------------------------------------------------------- retrieval


def retrieval_metrics(embeddings: np.ndarray, identity_labels: Sequence[Hashable]) -> dict[str, float]:
    """P@1, R-precision, MRR and MAP@R over leave-one-out nearest-neighbour rankings.

    Each point queries all others ranked by ascending Euclidean distance
    (index order on ties). Queries whose identity has no other member are
    skipped; the returned dict counts them under ``skipped_queries``.
    """
    X = np.asarray(embeddings, dtype=np.float64)
    labels = np.asarray([str(x) for x in identity_labels], dtype=object)
    n = len(labels)
    if X.shape[0] != n:
        raise MetricError("embeddings and labels differ in length")
    if n < 2:
        raise MetricError("need at least two points")
    dist = np.sqrt(np.maximum(((X[:, None, :] - X[None, :, :]) ** 2).sum(axis=2), 0.0))
    p1, rp, mrr, mapr = [], [], [], []
    for q in range(n):
        others = np.delete(np.arange(n), q)
        ranked = others[np.argsort(dist[q, others], kind="stable")]
        rel = labels[ranked] == labels[q]
        r = int(rel.sum())
        if r == 0:
            continue
        p1.append(float(rel[0]))
        rp.append(rel[:r].sum() / r)
        mrr.append(1.0 / (int(np.argmax(rel)) + 1))
        top = rel[:r]
        prec = np.cumsum(top) / np.arange(1, r + 1)
        mapr.append(float((prec * top).sum() / r))
    if not p1:
        raise MetricError("no valid queries: every identity occurs once")
    return {
        "P@1": float(np.mean(p1)),
        "R-P": float(np.mean(rp)),
        "MRR": float(np.mean(mrr)),
        "MAP@R": float(np.mean(mapr)),
        "valid_queries": len(p1),
        "skipped_queries": n - len(p1),
    }


# ---------------------------------------------------------------- edges


def _page_matches(gt_boxes, pred_boxes, iou_min):
    """pred index -> gt index; boxes carry no detector score, so input order decides."""
    return match_boxes([(b, 1.0) for b in pred_boxes], gt_boxes, iou_min)


def text_char_identity_pairs(
    gt: Chapter,
    gt_speakers: Mapping[str, str],
    pred: Chapter,
    identities: Mapping[str, str] | None = None,
    iou_min: float = DEFAULT_IOU,
) -> tuple[list[float], list[bool]]:
    """Scores and labels of every (GT text, identity on its page) pair.

    A pair's score is the max predicted text-char score over predicted
    character boxes matched to GT boxes of that identity (0 if none).
    """
    if len(gt.pages) != len(pred.pages):
        raise MetricError("GT and predicted chapters have different page counts")

    def ident(c):
        if identities is not None and c.id in identities:
            return identities[c.id]
        return c.gt_name if c.gt_name is not None else c.id

    scores: list[float] = []
    labels: list[bool] = []
    for gp, pp in zip(gt.pages, pred.pages):
        text_m = _page_matches([t.bbox for t in gp.texts], [t.bbox for t in pp.texts], iou_min)
        char_m = _page_matches([c.bbox for c in gp.characters], [c.bbox for c in pp.characters], iou_min)
        gt_text_to_pred = {g: p for p, g in text_m.items()}
        page_ident = [ident(c) for c in gp.characters]
        gt_id_of = {c.id: page_ident[i] for i, c in enumerate(gp.characters)}
        present = list(dict.fromkeys(page_ident))
        for gi, gtext in enumerate(gp.texts):
            speaker = gt_speakers.get(gtext.id)
            speaker_ident = gt_id_of.get(speaker) if speaker is not None else None
            ptext = pp.texts[gt_text_to_pred[gi]] if gi in gt_text_to_pred else None
            for identity in present:
                best = 0.0
                if ptext is not None:
                    for pi, gci in char_m.items():
                        if page_ident[gci] == identity:
                            best = max(best, pp.edges.text_char_score(ptext.id, pp.characters[pi].id))
                scores.append(best)
                labels.append(speaker_ident == identity)
    return scores, labels


def edge_ap_text_char_identity(
    gt: Chapter,
    gt_speakers: Mapping[str, str],
    pred: Chapter,
    identities: Mapping[str, str] | None = None,
    iou_min: float = DEFAULT_IOU,
) -> float:
    """Text-to-character-identity AP with identity max-pooling.

    Identities come from ``identities`` when given, else from each GT box's
    ``gt_name``, else the box id itself. Only identities present on a text's
    page are enumerated.
    """
    return average_precision(*text_char_identity_pairs(gt, gt_speakers, pred, identities, iou_min))


def edge_ap_text_tail(
    gt: Chapter, gt_tails: Mapping[str, Sequence[str]], pred: Chapter, iou_min: float = DEFAULT_IOU
) -> float:
    """AP over every (GT text, GT tail) pair on a page; positives from ``gt_tails``."""
    scores, labels = [], []
    for gp, pp in zip(gt.pages, pred.pages):
        text_m = {g: p for p, g in _page_matches(
            [t.bbox for t in gp.texts], [t.bbox for t in pp.texts], iou_min).items()}
        tail_m = {g: p for p, g in _page_matches(
            [x.bbox for x in gp.tails], [x.bbox for x in pp.tails], iou_min).items()}
        for ti, text in enumerate(gp.texts):
            positives = set(gt_tails.get(text.id, ()))
            for li, tail in enumerate(gp.tails):
                s = 0.0
                if ti in text_m and li in tail_m:
                    s = pp.edges.text_tail_score(pp.texts[text_m[ti]].id, pp.tails[tail_m[li]].id)
                scores.append(s)
                labels.append(tail.id in positives)
    return average_precision(scores, labels)


def page_clustering_metrics(
    chapter: Chapter, identities: Mapping[str, str], threshold: float = 0.5
) -> dict[str, float]:
    """Mean per-page AMI/NMI of char-char components against GT identities.

    Pages with fewer than two characters are skipped.
    """
    ami, nmi = [], []
    for page in chapter.pages:
        if len(page.characters) < 2:
            continue
        comp_of = {}
        for gi, group in enumerate(per_page_components(page, threshold)):
            for cid in group:
                comp_of[cid] = gi
        ids = [c.id for c in page.characters]
        m = clustering_metrics([identities[c] for c in ids], [comp_of[c] for c in ids])
        ami.append(m["AMI"])
        nmi.append(m["NMI"])
    if not ami:
        raise MetricError("no page has two or more characters")
    return {"AMI": float(np.mean(ami)), "NMI": float(np.mean(nmi)), "pages": len(ami)}


# ---------------------------------------------------------------- naming / text


def naming_accuracy(gt_names: Mapping[str, str], pred_names: Mapping[str, str]) -> float:
    """Fraction of crops whose predicted name equals the GT name ("other" included)."""
    if set(gt_names) != set(pred_names):
        raise MetricError(
            f"crop id sets differ ({len(set(gt_names) ^ set(pred_names))} ids unmatched)"
        )
    if not gt_names:
        raise MetricError("no crops to evaluate")
    return sum(gt_names[c] == pred_names[c] for c in gt_names) / len(gt_names)


def text_classification_ap(gt_essential: Sequence[bool], essential_scores: Sequence[float]) -> float:
    return average_precision(essential_scores, gt_essential)


# ---------------------------------------------------------------- report


@dataclass
class MetricReport:
    values: dict[str, float] = field(default_factory=dict)
    counts: dict[str, int] = field(default_factory=dict)
    parameters: dict[str, Any] = field(default_factory=dict)

    def to_dict(self) -> dict[str, Any]:
        return {"metrics": self.values, "counts": self.counts, "parameters": self.parameters}

    def to_json(self) -> str:
        return dumps_json(self.to_dict())

    def to_table(self) -> str:
        if not self.values:
            return "(no metrics)\n"
        width = max(len(k) for k in self.values)
        lines = [f"{'metric':<{width}}  value", f"{'-' * width}  ------"]
        for key, value in self.values.items():
            lines.append(f"{key:<{width}}  {value:.4f}")
        return "\n".join(lines) + "\n"

    @classmethod
    def from_json(cls, text: str) -> MetricReport:
        doc = json.loads(text)
        return cls(doc["metrics"], doc.get("counts", {}), doc.get("parameters", {}))


def mean_or_nan(values: Sequence[float]) -> float:
    return float(np.mean(values)) if len(values) else math.nan
