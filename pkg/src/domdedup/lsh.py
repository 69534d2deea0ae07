"""Bucket index over MinHash sketches and streaming near-duplicate removal.

The index keeps one table per hash function. Table ``i`` maps a minimum hash
value ``v`` to the ids of every registered state whose sketch has ``v`` at
coordinate ``i``. Probing a sketch counts, per registered state, in how many
tables the two share a bucket; divided by ``ell`` that count is exactly the
coordinate agreement rate of the two sketches. States that share no bucket
are never touched, which is what lets a stream be deduplicated without
comparing every pair.
"""

from __future__ import annotations

import enum
import json
from collections import Counter
from dataclasses import asdict, dataclass, field
from hashlib import blake2b
from pathlib import Path
from typing import Iterable, Iterator

import numpy as np

from .dom import ElementFilter, HtmlDocument, dom_sequence
from .errors import DedupError, DuplicateId, FamilyMismatch, InvalidParam
from .minhash import DEFAULT_ELL, FAMILY_VERSION, HashFamily, MinHashSketch, make_family, sketch
from .shingling import DEFAULT_K, SEPARATOR, ShingleParams, ShingleSet, shingle

DEFAULT_TAU = 0.85
INDEX_FORMAT_VERSION = 1


@dataclass(frozen=True)
class DedupConfig:
    k: int = DEFAULT_K
    ell: int = DEFAULT_ELL
    tau: float = DEFAULT_TAU
    master_seed: int = 0

    def __post_init__(self):
        ShingleParams(self.k)
        if self.ell < 1:
            raise InvalidParam(f"ell must be >= 1, got {self.ell}")
        if not 0.0 <= self.tau <= 1.0:
            raise InvalidParam(f"tau must lie in [0, 1], got {self.tau}")

    @property
    def threshold(self) -> float:
        """Minimum bucket-agreement count for a duplicate (``tau * ell``)."""
        return self.tau * self.ell


class Decision(str, enum.Enum):
    NEW = "new"
    DUPLICATE = "duplicate"
    FAILED = "failed"


@dataclass(frozen=True)
class Verdict:
    probe_id: str
    decision: Decision
    matched_id: str | None = None
    score: int = 0
    similarity: float = 0.0
    candidates_examined: int = 0
    error: str | None = None

    @property
    def is_new(self) -> bool:
        return self.decision is Decision.NEW

    def to_dict(self) -> dict:
        d = asdict(self)
        d["decision"] = self.decision.value
        return d


@dataclass
class CandidateCounts:
    counts: dict[str, int]
    ell: int

    def similarity(self, state_id: str) -> float:
        return self.counts.get(state_id, 0) / self.ell

    def __len__(self):
        return len(self.counts)


@dataclass
class LshIndex:
    config: DedupConfig = field(default_factory=DedupConfig)
    family: HashFamily | None = None

    def __post_init__(self):
        if self.family is None:
            self.family = make_family(self.config.ell, self.config.master_seed)
        elif self.family.ell != self.config.ell or self.family.master_seed != self.config.master_seed:
            raise FamilyMismatch("hash family does not match config (ell, master_seed)")
        self.tables: list[dict[int, list[str]]] = [{} for _ in range(self.family.ell)]
        self._sketches: dict[str, MinHashSketch] = {}
        self._order: dict[str, int] = {}

    @property
    def registered(self) -> int:
        return len(self._sketches)

    def __len__(self) -> int:
        return len(self._sketches)

    def __contains__(self, state_id: str) -> bool:
        return state_id in self._sketches

    def ids(self) -> list[str]:
        """Registered ids in insertion order."""
        return list(self._sketches)

    def sketch_of(self, state_id: str) -> MinHashSketch:
        return self._sketches[state_id]

    def _check(self, sk: MinHashSketch) -> None:
        fam = self.family
        if sk.ell != fam.ell or sk.master_seed != fam.master_seed or sk.family_version != fam.version:
            raise FamilyMismatch("sketch was not produced by this index's hash family")

    def probe(self, sk: MinHashSketch) -> CandidateCounts:
        self._check(sk)
        counts: Counter[str] = Counter()
        for table, v in zip(self.tables, sk.mins.tolist()):
            bucket = table.get(v)
            if bucket:
                counts.update(bucket)
        return CandidateCounts(dict(counts), self.family.ell)

    def classify(self, sk: MinHashSketch, probe_id: str = "") -> Verdict:
        cand = self.probe(sk)
        ell = self.family.ell
        if not cand.counts:
            return Verdict(probe_id, Decision.NEW, None, 0, 0.0, 0)
        # ties go to the earliest registered state
        order = self._order
        best = max(cand.counts, key=lambda sid: (cand.counts[sid], -order[sid]))
        score = cand.counts[best]
        if score < self.config.tau * ell:
            return Verdict(probe_id, Decision.NEW, None, score, score / ell, len(cand))
        return Verdict(probe_id, Decision.DUPLICATE, best, score, score / ell, len(cand))

    def insert(self, state_id: str, sk: MinHashSketch) -> None:
        self._check(sk)
        if state_id in self._sketches:
            raise DuplicateId(state_id)
        for table, v in zip(self.tables, sk.mins.tolist()):
            table.setdefault(v, []).append(state_id)
        self._order[state_id] = len(self._sketches)
        self._sketches[state_id] = sk

    def max_bucket_size(self) -> int:
        return max((len(b) for t in self.tables for b in t.values()), default=0)

    def save(self, directory: str | Path) -> None:
        """Persist header, sketch records and id table; buckets are rebuilt on load."""
        directory = Path(directory)
        directory.mkdir(parents=True, exist_ok=True)
        header = {
            "format_version": INDEX_FORMAT_VERSION,
            "family_version": self.family.version,
            "config": asdict(self.config),
            "family_seeds": [int(s) for s in self.family.seeds],
            "registered": self.registered,
        }
        (directory / "header.json").write_text(json.dumps(header, indent=2) + "\n")
        (directory / "ids.json").write_text(json.dumps(self.ids()) + "\n")
        with open(directory / "sketches.bin", "wb") as fh:
            for sk in self._sketches.values():
                fh.write(sk.to_bytes())

    @classmethod
    def load(cls, directory: str | Path) -> LshIndex:
        directory = Path(directory)
        header = json.loads((directory / "header.json").read_text())
        if header.get("format_version") != INDEX_FORMAT_VERSION:
            raise ValueError(f"unsupported index format {header.get('format_version')!r}")
        if header.get("family_version") != FAMILY_VERSION:
            raise ValueError(f"unsupported hash family version {header.get('family_version')!r}")
        idx = cls(DedupConfig(**header["config"]))
        if [int(s) for s in idx.family.seeds] != header["family_seeds"]:
            raise FamilyMismatch("stored family seeds do not match the regenerated family")
        ids = json.loads((directory / "ids.json").read_text())
        data = (directory / "sketches.bin").read_bytes()
        offset = 0
        for state_id in ids:
            sk, offset = MinHashSketch.read(data, offset)
            idx.insert(state_id, sk)
        if offset != len(data):
            raise ValueError("sketch file has trailing bytes or does not match the id table")
        return idx


def failed_verdict(state_id: str, exc: Exception) -> Verdict:
    return Verdict(state_id, Decision.FAILED, error=f"{type(exc).__name__}: {exc}")


def shingle_document(doc: HtmlDocument, k: int, element_filter: ElementFilter | None = None) -> ShingleSet:
    """Parse, serialize, filter and shingle one document."""
    return shingle(dom_sequence(doc, element_filter), k)


class Deduplicator:
    """Stateful single-stream deduplicator.

    Documents are classified against everything admitted so far and
    inserted when new. The order of calls to :meth:`add` matters: the
    similarity relation is not transitive.
    """

    def __init__(self, config: DedupConfig | None = None, element_filter: ElementFilter | None = None,
                 index: LshIndex | None = None):
        if index is not None:
            if config is not None and config != index.config:
                raise InvalidParam("config does not match the supplied index")
            config = index.config
        self.config = config or DedupConfig()
        self.element_filter = element_filter if element_filter is not None else ElementFilter()
        self.index = index if index is not None else LshIndex(self.config)

    def sketch_document(self, doc: HtmlDocument) -> MinHashSketch:
        return sketch(shingle_document(doc, self.config.k, self.element_filter), self.index.family)

    def add_sketch(self, state_id: str, sk: MinHashSketch) -> Verdict:
        if state_id in self.index:
            raise DuplicateId(state_id)
        verdict = self.index.classify(sk, state_id)
        if verdict.is_new:
            self.index.insert(state_id, sk)
        return verdict

    def add(self, doc: HtmlDocument) -> Verdict:
        try:
            sk = self.sketch_document(doc)
        except DedupError as exc:
            return failed_verdict(doc.id, exc)
        return self.add_sketch(doc.id, sk)


def dedup_stream(states: Iterable[HtmlDocument], cfg: DedupConfig | None = None,
                 element_filter: ElementFilter | None = None) -> tuple[LshIndex, list[Verdict]]:
    """Classify ``states`` in order; returns the index of unique states and one verdict per input."""
    dd = Deduplicator(cfg, element_filter)
    seen: set[str] = set()
    verdicts = []
    for doc in states:
        if doc.id in seen:
            raise DuplicateId(doc.id)
        seen.add(doc.id)
        verdicts.append(dd.add(doc))
    return dd.index, verdicts


def dedup_shingle_sets(items: Iterable[tuple[str, ShingleSet]], cfg: DedupConfig | None = None) -> tuple[LshIndex, list[Verdict]]:
    """Like :func:`dedup_stream` for inputs that are already shingled."""
    cfg = cfg or DedupConfig()
    idx = LshIndex(cfg)
    verdicts = []
    for state_id, p in items:
        sk = sketch(p, idx.family)
        v = idx.classify(sk, state_id)
        if v.is_new:
            idx.insert(state_id, sk)
        verdicts.append(v)
    return idx, verdicts


def sequence_hash(tokens: Iterable[str]) -> int:
    """Whole-sequence hash used by the simple-hash baseline."""
    data = SEPARATOR.join(t.encode("utf-8") for t in tokens)
    return int.from_bytes(blake2b(data, digest_size=8, person=b"domdedup.page").digest(), "little")


class SimpleHashDeduplicator:
    """Baseline: two states are equal iff their element sequences hash equal."""

    def __init__(self, element_filter: ElementFilter | None = None):
        self.element_filter = element_filter if element_filter is not None else ElementFilter()
        self.seen: dict[int, str] = {}

    def add_hash(self, state_id: str, h: int) -> Verdict:
        first = self.seen.get(h)
        if first is None:
            self.seen[h] = state_id
            return Verdict(state_id, Decision.NEW)
        return Verdict(state_id, Decision.DUPLICATE, first, 1, 1.0, 1)

    def add(self, doc: HtmlDocument) -> Verdict:
        try:
            h = sequence_hash(dom_sequence(doc, self.element_filter))
        except DedupError as exc:
            return failed_verdict(doc.id, exc)
        return self.add_hash(doc.id, h)


def simplehash_stream(states: Iterable[HtmlDocument], element_filter: ElementFilter | None = None) -> list[Verdict]:
    dd = SimpleHashDeduplicator(element_filter)
    return [dd.add(doc) for doc in states]


def unique_ids(verdicts: Iterable[Verdict]) -> Iterator[str]:
    return (v.probe_id for v in verdicts if v.is_new)


def agreement_counts(sk: MinHashSketch, others: dict[str, MinHashSketch]) -> dict[str, int]:
    """Direct coordinate comparison against every sketch; the all-pairs path the index avoids."""
    return {sid: int(np.count_nonzero(sk.mins == o.mins)) for sid, o in others.items()}
