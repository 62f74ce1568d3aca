"""Command-line entry point: transcribe, name, baseline, eval, synth."""

from __future__ import annotations

import argparse
import logging
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path
from typing import Any, Sequence

from mangascribe.bank import DEFAULT_ETA, CharacterBank, parse_bank, write_bank
from mangascribe.baselines.naming import (
    DEFAULT_ANOMALY_THRESHOLD,
    DEFAULT_NTREES,
    DEFAULT_SUBSAMPLE,
    name_by_iforest_kmeans,
    name_by_kmeans,
)
from mangascribe.chapter import Chapter, dumps_json, parse_chapter, write_chapter
from mangascribe.constraints import (
    DEFAULT_MUST_LINK_THRESHOLD,
    ConstraintSet,
    constraints_from_identities,
    extract_constraints,
    load_overrides,
)
from mangascribe.evaluation import evaluate_chapters
from mangascribe.solver import name_chapter, write_names
from mangascribe.synth import SynthConfig, generate, load_ground_truth, write_ground_truth
from mangascribe.transcript import (
    DEFAULT_ESSENTIAL_THRESHOLD,
    DEFAULT_SPEAKER_THRESHOLD,
    DEFAULT_TAIL_THRESHOLD,
    UNSURE,
    TranscriptParams,
    build_transcript,
    render_transcript,
)

logger = logging.getLogger("mangascribe")


class CliError(Exception):
    pass


def _unit_interval(text: str) -> float:
    value = float(text)
    if not 0.0 <= value <= 1.0:
        raise argparse.ArgumentTypeError(f"{value} is not in [0, 1]")
    return value


def _positive(text: str) -> float:
    value = float(text)
    if value <= 0:
        raise argparse.ArgumentTypeError(f"{value} must be positive")
    return value


def _load_inputs(chapter_path: str, bank_path: str, eta: float | None) -> tuple[Chapter, CharacterBank]:
    chapter = parse_chapter(chapter_path)
    bank = parse_bank(bank_path, chapter.embedding_dim)
    if eta is not None:
        bank = bank.with_eta(eta)
    return chapter, bank


def _constraints(chapter: Chapter, args: argparse.Namespace) -> ConstraintSet:
    if getattr(args, "gt_constraints", None):
        cs = constraints_from_identities(chapter, load_ground_truth(args.gt_constraints).identities)
    else:
        cs = extract_constraints(chapter, args.theta_ml, args.cannot_link)
    if getattr(args, "overrides", None):
        cs = cs.merge(load_overrides(args.overrides))
    return cs


# ---------------------------------------------------------------- transcribe


def _transcribe_one(job: tuple[str, dict[str, Any]]) -> str:
    chapter_path, opts = job
    args = argparse.Namespace(**opts)
    chapter, bank = _load_inputs(chapter_path, args.bank, args.eta)
    assignment = name_chapter(chapter, bank, _constraints(chapter, args))
    names = assignment.names(bank)
    params = TranscriptParams(
        essential_threshold=args.tau_essential,
        speaker_threshold=args.tau_speaker,
        tail_threshold=args.tail_threshold,
        tail_gated=args.tail_gated,
        use_gt_essential=args.use_gt_essential,
    )
    transcript = build_transcript(chapter, names, params)
    stem = Path(chapter_path).stem
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    plain = Path(args.plain) if args.plain else out_dir / f"{stem}.transcript.txt"
    as_json = Path(args.json) if args.json else out_dir / f"{stem}.transcript.json"
    plain.write_bytes(render_transcript(transcript, "plain"))
    as_json.write_bytes(render_transcript(transcript, "json"))
    write_names(names, out_dir / f"{stem}.names.json", objective=assignment.objective)
    unsure = sum(u.speaker == UNSURE for u in transcript.utterances)
    return (
        f"{stem}: objective={assignment.objective:.6f} crops={len(names)} "
        f"utterances={len(transcript.utterances)} unsure={unsure} -> {plain}, {as_json}"
    )


def cmd_transcribe(args: argparse.Namespace) -> int:
    if len(args.chapters) > 1 and (args.plain or args.json):
        raise CliError("--plain/--json name a single output; use --out-dir with several chapters")
    opts = {k: v for k, v in vars(args).items() if k != "func"}
    jobs = [(c, opts) for c in args.chapters]
    if args.jobs > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            lines = list(pool.map(_transcribe_one, jobs))
    else:
        lines = [_transcribe_one(j) for j in jobs]
    for line in lines:
        print(line, file=sys.stderr)
    return 0


# ---------------------------------------------------------------- name / baseline


def cmd_name(args: argparse.Namespace) -> int:
    chapter, bank = _load_inputs(args.chapter, args.bank, args.eta)
    assignment = name_chapter(chapter, bank, _constraints(chapter, args))
    write_names(assignment.names(bank), args.out, objective=assignment.objective)
    print(f"objective={assignment.objective:.6f} crops={len(assignment.labels)}", file=sys.stderr)
    return 0


def cmd_baseline(args: argparse.Namespace) -> int:
    chapter, bank = _load_inputs(args.chapter, args.bank, args.eta)
    crops = list(chapter.characters())
    if args.method == "kmeans":
        result = name_by_kmeans(crops, bank, seed=args.seed)
    else:
        result = name_by_iforest_kmeans(
            crops, bank, seed=args.seed, ntrees=args.ntrees,
            subsample=args.subsample, threshold=args.anomaly_threshold,
        )
    write_names(result.names, args.out, method=result.method, seed=args.seed, fallback=result.fallback)
    if result.fallback:
        print("warning: iForest left too few crops; fell back to K-means", file=sys.stderr)
    return 0


# ---------------------------------------------------------------- eval


def _parse_pred(value: str) -> tuple[str, str]:
    label, sep, pattern = value.partition("=")
    if not sep or not label or not pattern:
        raise CliError(f"--pred expects LABEL=PATH_PATTERN, got {value!r}")
    return label, pattern


def cmd_eval(args: argparse.Namespace) -> int:
    if len(args.chapter) != len(args.gt):
        raise CliError(f"{len(args.chapter)} chapters but {len(args.gt)} ground-truth files")
    preds = dict(_parse_pred(p) for p in args.pred)
    report = evaluate_chapters(
        args.chapter, args.gt, preds, pred_chapter_pattern=args.pred_chapter,
        iou_min=args.iou_min, threshold=args.theta_ml,
    )
    text = report.to_json()
    if args.json:
        Path(args.json).write_text(text, encoding="utf-8")
        # the report went to a file, so stdout is free for the readable table
        sys.stdout.write(report.to_table())
    else:
        sys.stdout.write(text)
    return 0


# ---------------------------------------------------------------- synth


def cmd_synth(args: argparse.Namespace) -> int:
    config = SynthConfig(
        seed=args.seed, k_bank=args.k, pages=args.pages,
        panels_per_page=tuple(args.panels_per_page), crops_per_page=tuple(args.crops_per_page),
        texts_per_page=tuple(args.texts_per_page), embedding_dim=args.dim,
        noise_sigma=args.sigma, other_rate=args.other_rate, edge_noise=args.edge_noise,
        essential_rate=args.essential_rate, tail_rate=args.tail_rate,
        lookalike_pairs=args.lookalike_pairs, lookalike_page_rate=args.lookalike_page_rate,
        other_identities=args.other_identities, eta=args.eta if args.eta is not None else DEFAULT_ETA,
    )
    bank, chapter, gt = generate(config)
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = [out / f"{args.prefix}.chapter.json", out / f"{args.prefix}.bank.json", out / f"{args.prefix}.gt.json"]
    write_chapter(chapter, paths[0])
    write_bank(bank, paths[1])
    write_ground_truth(gt, paths[2])
    for p in paths:
        print(p)
    return 0


# ---------------------------------------------------------------- parser


def _add_naming_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--bank", required=True, help="character bank JSON")
    p.add_argument("--eta", type=_positive, default=None, help="outlier cost (default: bank file, else 0.75)")
    p.add_argument("--theta-ml", type=_unit_interval, default=DEFAULT_MUST_LINK_THRESHOLD,
                   help="char-char score that links two crops")
    p.add_argument("--cannot-link", choices=("page", "same-panel"), default="page")
    p.add_argument("--overrides", help="JSON with extra must_link/cannot_link pairs")
    p.add_argument("--gt-constraints", help="ground-truth JSON; use its identities as constraints")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="mangascribe", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("transcribe", help="name characters and write transcripts")
    p.add_argument("chapters", nargs="+")
    _add_naming_flags(p)
    p.add_argument("--out-dir", default=".")
    p.add_argument("--plain", help="plain-text transcript path (single chapter)")
    p.add_argument("--json", help="JSON transcript path (single chapter)")
    p.add_argument("--tau-essential", type=_unit_interval, default=DEFAULT_ESSENTIAL_THRESHOLD)
    p.add_argument("--tau-speaker", type=_unit_interval, default=DEFAULT_SPEAKER_THRESHOLD)
    p.add_argument("--tail-threshold", type=_unit_interval, default=DEFAULT_TAIL_THRESHOLD)
    p.add_argument("--tail-gated", action="store_true", help="only name speakers of texts with tails")
    p.add_argument("--use-gt-essential", action="store_true")
    p.add_argument("--jobs", type=int, default=1)
    p.set_defaults(func=cmd_transcribe)

    p = sub.add_parser("name", help="solve the constrained naming problem")
    p.add_argument("chapter")
    _add_naming_flags(p)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_name)

    p = sub.add_parser("baseline", help="clustering baseline naming")
    p.add_argument("chapter")
    p.add_argument("--bank", required=True)
    p.add_argument("--eta", type=_positive, default=None)
    p.add_argument("--method", choices=("kmeans", "iforest-kmeans"), required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--ntrees", type=int, default=DEFAULT_NTREES)
    p.add_argument("--subsample", type=int, default=DEFAULT_SUBSAMPLE)
    p.add_argument("--anomaly-threshold", type=_unit_interval, default=DEFAULT_ANOMALY_THRESHOLD)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_baseline)

    p = sub.add_parser("eval", help="compute the metric report")
    p.add_argument("--chapter", nargs="+", required=True)
    p.add_argument("--gt", nargs="+", required=True)
    p.add_argument("--pred", action="append", default=[],
                   help="LABEL=PATTERN naming file; {stem} expands to the chapter file stem")
    p.add_argument("--pred-chapter", help="predicted chapter PATTERN for edge AP (default: the chapter)")
    p.add_argument("--iou-min", type=_positive, default=0.5)
    p.add_argument("--theta-ml", type=_unit_interval, default=DEFAULT_MUST_LINK_THRESHOLD)
    p.add_argument("--json", help="write the JSON report here instead of stdout")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("synth", help="generate a synthetic chapter, bank and ground truth")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--k", type=int, default=4)
    p.add_argument("--pages", type=int, default=5)
    p.add_argument("--dim", type=int, default=8)
    p.add_argument("--sigma", type=float, default=0.05)
    p.add_argument("--other-rate", type=float, default=0.2)
    p.add_argument("--edge-noise", type=float, default=0.0)
    p.add_argument("--essential-rate", type=float, default=0.8)
    p.add_argument("--tail-rate", type=float, default=0.7)
    p.add_argument("--lookalike-pairs", type=int, default=0)
    p.add_argument("--lookalike-page-rate", type=float, default=0.0)
    p.add_argument("--other-identities", type=int, default=None)
    p.add_argument("--panels-per-page", type=int, nargs=2, default=(2, 4), metavar=("LO", "HI"))
    p.add_argument("--crops-per-page", type=int, nargs=2, default=(2, 6), metavar=("LO", "HI"))
    p.add_argument("--texts-per-page", type=int, nargs=2, default=(2, 6), metavar=("LO", "HI"))
    p.add_argument("--eta", type=_positive, default=None)
    p.add_argument("--out-dir", default=".")
    p.add_argument("--prefix", default="synth")
    p.set_defaults(func=cmd_synth)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (OSError, ValueError, KeyError, CliError) as exc:
        message = " ".join(str(exc).split()) or exc.__class__.__name__
        print(f"error: {message}", file=sys.stderr)
        return 1


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
