"""Near-duplicate detection for web application states.

Pages are reduced to their element-name sequence, shingled into k-mers,
sketched with MinHash and streamed through a bucket index that flags each
page as new or as a near-duplicate of an earlier one.
"""

from .dom import (
    DomSequence,
    ElementFilter,
    HtmlDocument,
    dom_sequence,
    load_directory,
    load_jsonl,
    parse_html,
    serialize,
)
from .errors import (
    BothEmpty,
    DedupError,
    DuplicateId,
    EmptySet,
    EncodingError,
    FamilyMismatch,
    InputEmpty,
    InvalidParam,
    MissingLabel,
)
from .lsh import (
    CandidateCounts,
    Decision,
    DedupConfig,
    Deduplicator,
    LshIndex,
    SimpleHashDeduplicator,
    Verdict,
    dedup_stream,
    simplehash_stream,
)
from .metrics import GroundTruth, ScanMetrics, evaluate
from .minhash import HashFamily, MinHashSketch, SimilarityEstimate, estimate_jaccard, make_family, sketch
from .shingling import ShingleParams, ShingleSet, exact_jaccard, shingle

__version__ = "0.1.0"

__all__ = [
    "BothEmpty", "CandidateCounts", "Decision", "DedupConfig", "DedupError", "Deduplicator",
    "DomSequence", "DuplicateId", "ElementFilter", "EmptySet", "EncodingError", "FamilyMismatch",
    "GroundTruth", "HashFamily", "HtmlDocument", "InputEmpty", "InvalidParam", "LshIndex",
    "MinHashSketch", "MissingLabel", "ScanMetrics", "ShingleParams", "ShingleSet",
    "SimilarityEstimate", "SimpleHashDeduplicator", "Verdict", "dedup_stream", "dom_sequence",
    "estimate_jaccard", "evaluate", "exact_jaccard", "load_directory", "load_jsonl",
    "make_family", "parse_html", "serialize", "shingle", "simplehash_stream", "sketch",
]
