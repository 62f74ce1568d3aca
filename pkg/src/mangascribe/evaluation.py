"""Chapter-level evaluation runs that assemble a :class:`MetricReport`."""

from __future__ import annotations

from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from mangascribe.chapter import Chapter, parse_chapter
from mangascribe.metrics import (
    DEFAULT_IOU,
    MetricError,
    MetricReport,
    edge_ap_text_char_identity,
    edge_ap_text_tail,
    match_boxes,
    naming_accuracy,
    page_clustering_metrics,
    retrieval_metrics,
    text_classification_ap,
)
from mangascribe.solver import load_names
from mangascribe.synth import GroundTruth, load_ground_truth


def _expand(pattern: str, stem: str) -> str:
    return pattern.replace("{stem}", stem)


def check_alignment(chapter: Chapter, gt: GroundTruth) -> None:
    crops = set(chapter.character_ids)
    if set(gt.names) != crops:
        raise MetricError(
            f"{chapter.chapter_id}: ground-truth names and chapter crops are misaligned "
            f"({len(set(gt.names) ^ crops)} ids differ)"
        )
    texts = {t.id for t in chapter.texts()}
    stray = set(gt.essential) - texts
    if stray:
        raise MetricError(f"{chapter.chapter_id}: ground truth names unknown texts {sorted(stray)[:3]}")


def text_ap_for(gt_chapter: Chapter, gt: GroundTruth, pred: Chapter, iou_min: float) -> float:
    labels, scores = [], []
    for gp, pp in zip(gt_chapter.pages, pred.pages):
        m = match_boxes([(t.bbox, 1.0) for t in pp.texts], [t.bbox for t in gp.texts], iou_min)
        gt_to_pred = {g: p for p, g in m.items()}
        for gi, t in enumerate(gp.texts):
            if t.id not in gt.essential:
                continue
            labels.append(gt.essential[t.id])
            scores.append(pp.texts[gt_to_pred[gi]].essential_score if gi in gt_to_pred else 0.0)
    return text_classification_ap(labels, scores)


def evaluate_chapter(
    chapter: Chapter,
    gt: GroundTruth,
    predictions: Mapping[str, Mapping[str, str]],
    pred_chapter: Chapter | None = None,
    iou_min: float = DEFAULT_IOU,
    threshold: float = 0.5,
) -> tuple[dict[str, float], dict[str, str]]:
    """Every applicable metric for one chapter, plus reasons for skipped ones."""
    check_alignment(chapter, gt)
    pred = pred_chapter if pred_chapter is not None else chapter
    if len(pred.pages) != len(chapter.pages):
        raise MetricError("predicted chapter has a different number of pages")
    values: dict[str, float] = {}
    skipped: dict[str, str] = {}

    def attempt(name, fn):
        try:
            out = fn()
        except MetricError as exc:
            skipped[name] = str(exc)
            return
        if isinstance(out, dict):
            values.update({f"{name}/{k}": float(v) for k, v in out.items() if k not in ("pages", "valid_queries", "skipped_queries")})
        else:
            values[name] = float(out)

    attempt("text_classification_ap", lambda: text_ap_for(chapter, gt, pred, iou_min))
    attempt("text_char_identity_ap",
            lambda: edge_ap_text_char_identity(chapter, gt.speakers, pred, gt.identities or None, iou_min))
    attempt("text_tail_ap", lambda: edge_ap_text_tail(chapter, gt.tails, pred, iou_min))
    if gt.identities and set(pred.character_ids) <= set(gt.identities):
        attempt("char_clustering", lambda: page_clustering_metrics(pred, gt.identities, threshold))
        ids = pred.character_ids
        if len(ids) >= 2:
            attempt("retrieval", lambda: retrieval_metrics(pred.embeddings(), [gt.identities[c] for c in ids]))
    for label, names in predictions.items():
        values[f"naming_accuracy/{label}"] = naming_accuracy(gt.names, names)
    return values, skipped


def evaluate_chapters(
    chapter_paths: Sequence[str | Path],
    gt_paths: Sequence[str | Path],
    prediction_patterns: Mapping[str, str],
    pred_chapter_pattern: str | None = None,
    iou_min: float = DEFAULT_IOU,
    threshold: float = 0.5,
) -> MetricReport:
    """Evaluate aligned chapter/ground-truth files; metrics are chapter means."""
    per_chapter: dict[str, dict[str, float]] = {}
    skipped_total: dict[str, int] = {}
    n_crops = n_texts = 0
    for cpath, gpath in zip(chapter_paths, gt_paths):
        chapter = parse_chapter(cpath)
        gt = load_ground_truth(gpath)
        stem = Path(cpath).stem
        preds = {label: load_names(_expand(pat, stem)) for label, pat in prediction_patterns.items()}
        pred_chapter = parse_chapter(_expand(pred_chapter_pattern, stem)) if pred_chapter_pattern else None
        values, skipped = evaluate_chapter(chapter, gt, preds, pred_chapter, iou_min, threshold)
        per_chapter[stem] = values
        for name in skipped:
            skipped_total[name] = skipped_total.get(name, 0) + 1
        n_crops += len(chapter.character_ids)
        n_texts += sum(1 for _ in chapter.texts())
    keys: list[str] = []
    for vals in per_chapter.values():
        keys.extend(k for k in vals if k not in keys)
    report = MetricReport()
    for key in keys:
        report.values[key] = float(np.mean([v[key] for v in per_chapter.values() if key in v]))
    report.counts = {"chapters": len(per_chapter), "crops": n_crops, "texts": n_texts}
    report.counts.update({f"skipped/{k}": v for k, v in skipped_total.items()})
    report.parameters = {
        "iou_min": iou_min,
        "must_link_threshold": threshold,
        "identity_pooling": "max",
        "identities_enumerated": "page-present",
        "per_chapter": per_chapter,
    }
    return report
