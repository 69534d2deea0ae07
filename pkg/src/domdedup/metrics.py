"""Scan quality against ground-truth state labels.

efficiency = truly unique states found / states reported unique
coverage   = truly unique states found / states that exist
"""

from __future__ import annotations

import json
import warnings
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Iterable, Mapping

from .errors import MissingLabel
from .lsh import Decision, Verdict


@dataclass(frozen=True)
class GroundTruth:
    labels: Mapping[str, str]

    @property
    def true_state_count(self) -> int:
        return len(set(self.labels.values()))

    def label(self, state_id: str) -> str:
        try:
            return self.labels[state_id]
        except KeyError:
            raise MissingLabel(state_id) from None

    @classmethod
    def load(cls, path: str | Path) -> GroundTruth:
        """Read ``{"id": ..., "label": ...}`` records, one per line."""
        labels = {}
        with open(path, encoding="utf-8-sig") as fh:
            for lineno, line in enumerate(fh, 1):
                if not line.strip():
                    continue
                try:
                    rec = json.loads(line)
                    labels[str(rec["id"])] = str(rec["label"])
                except (json.JSONDecodeError, KeyError, TypeError) as exc:
                    raise ValueError(f"{path}:{lineno}: malformed truth record ({exc})") from exc
        return cls(labels)

    def save(self, path: str | Path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            for state_id, label in self.labels.items():
                fh.write(json.dumps({"id": state_id, "label": label}) + "\n")


@dataclass(frozen=True)
class ScanMetrics:
    reported_unique: int
    truly_unique_found: int
    true_state_count: int
    efficiency: float
    coverage: float
    false_merges: int
    false_splits: int
    empty_report: bool = False
    # duplicates whose matched representative carries a different label
    merge_details: list[dict] = field(default_factory=list)

    def to_dict(self, details: bool = True) -> dict:
        d = asdict(self)
        if not details:
            del d["merge_details"]
        return d


def evaluate(verdicts: Iterable[Verdict], truth: GroundTruth) -> ScanMetrics:
    verdicts = list(verdicts)
    for v in verdicts:
        truth.label(v.probe_id)
    new = [v for v in verdicts if v.decision is Decision.NEW]
    found_labels = {truth.labels[v.probe_id] for v in new}
    reported = len(new)
    found = len(found_labels)
    total = truth.true_state_count
    empty = reported == 0
    if empty:
        warnings.warn("no state was reported unique; efficiency defined as 1.0", RuntimeWarning, stacklevel=2)
    details = []
    for v in verdicts:
        if v.decision is Decision.DUPLICATE and v.matched_id is not None:
            own, other = truth.labels[v.probe_id], truth.label(v.matched_id)
            if own != other:
                details.append({"id": v.probe_id, "label": own, "matched_id": v.matched_id, "matched_label": other})
    details.sort(key=lambda d: d["id"])
    return ScanMetrics(
        reported_unique=reported,
        truly_unique_found=found,
        true_state_count=total,
        efficiency=1.0 if empty else found / reported,
        coverage=found / total if total else 1.0,
        false_merges=total - found,
        false_splits=reported - found,
        empty_report=empty,
        merge_details=details,
    )
