"""Chapter-wide manga character naming, transcript composition and evaluation."""

from mangascribe.bank import (
    OTHER,
    BankCharacter,
    CharacterBank,
    CostMatrix,
    build_cost_matrix,
    optimal_exemplar,
    parse_bank,
    representative_embedding,
)
from mangascribe.baselines import name_by_iforest_kmeans, name_by_kmeans
from mangascribe.chapter import (
    BoundingBox,
    Chapter,
    ChapterFormatError,
    TextCategory,
    category_to_essential,
    parse_chapter,
)
from mangascribe.constraints import ConstraintSet, extract_constraints, per_page_components
from mangascribe.metrics import (
    MetricReport,
    average_precision,
    clustering_metrics,
    naming_accuracy,
    retrieval_metrics,
)
from mangascribe.solver import (
    Assignment,
    AssignmentProblem,
    collapse_fragments,
    name_chapter,
    solve_bruteforce,
    solve_exact,
    verify,
)
from mangascribe.synth import GroundTruth, SynthConfig, generate
from mangascribe.transcript import (
    UNSURE,
    Transcript,
    attribute_speakers,
    build_transcript,
    order_panels,
    order_texts,
    render_transcript,
)

__version__ = "0.1.0"

__all__ = [
    "OTHER",
    "UNSURE",
    "Assignment",
    "AssignmentProblem",
    "BankCharacter",
    "BoundingBox",
    "Chapter",
    "ChapterFormatError",
    "CharacterBank",
    "ConstraintSet",
    "CostMatrix",
    "GroundTruth",
    "MetricReport",
    "SynthConfig",
    "TextCategory",
    "Transcript",
    "attribute_speakers",
    "average_precision",
    "build_cost_matrix",
    "build_transcript",
    "category_to_essential",
    "clustering_metrics",
    "collapse_fragments",
    "extract_constraints",
    "generate",
    "name_by_iforest_kmeans",
    "name_by_kmeans",
    "name_chapter",
    "naming_accuracy",
    "optimal_exemplar",
    "order_panels",
    "order_texts",
    "parse_bank",
    "parse_chapter",
    "per_page_components",
    "render_transcript",
    "representative_embedding",
    "retrieval_metrics",
    "solve_bruteforce",
    "solve_exact",
    "verify",
]
