"""k-mer shingles over element-name sequences.

A window of ``k`` consecutive element names is joined with NUL bytes (which
cannot occur in a tag name) and fingerprinted with 64-bit BLAKE2b, read as a
little-endian unsigned integer. The fingerprint is independent of platform,
Python version and ``PYTHONHASHSEED``.

Sequences shorter than ``k`` would have no windows at all. They instead get
a single fingerprint of the whole sequence, personalised differently from
ordinary windows and keyed by the length, so that short pages compare by
exact equality instead of vanishing.
"""

from __future__ import annotations

from dataclasses import dataclass
from hashlib import blake2b
from typing import AbstractSet, Iterator, Sequence

from .errors import BothEmpty, InvalidParam

SEPARATOR = b"\x00"
DEFAULT_K = 12

_WINDOW_PERSON = b"domdedup.window"
_SHORT_PERSON = b"domdedup.short"


@dataclass(frozen=True)
class ShingleParams:
    k: int = DEFAULT_K

    def __post_init__(self):
        if not isinstance(self.k, int) or self.k < 1:
            raise InvalidParam(f"k must be a positive integer, got {self.k!r}")


class ShingleSet(frozenset):
    """Frozen set of 64-bit shingle fingerprints."""

    @property
    def shingles(self) -> frozenset[int]:
        return frozenset(self)

    @property
    def cardinality(self) -> int:
        return len(self)


def window_fingerprint(tokens: Sequence[str]) -> int:
    data = SEPARATOR.join(t.encode("utf-8") for t in tokens)
    return int.from_bytes(blake2b(data, digest_size=8, person=_WINDOW_PERSON).digest(), "little")


def short_fingerprint(tokens: Sequence[str]) -> int:
    data = len(tokens).to_bytes(4, "little") + SEPARATOR.join(t.encode("utf-8") for t in tokens)
    return int.from_bytes(blake2b(data, digest_size=8, person=_SHORT_PERSON).digest(), "little")


def windows(seq: Sequence[str], k: int) -> Iterator[tuple[str, ...]]:
    """All windows of ``k`` consecutive tokens, in position order, repeats included."""
    elements = tuple(seq)
    for i in range(len(elements) - k + 1):
        yield elements[i : i + k]


def shingle(seq: Sequence[str], params: ShingleParams | int = DEFAULT_K) -> ShingleSet:
    k = params.k if isinstance(params, ShingleParams) else ShingleParams(params).k
    elements = tuple(seq)
    if len(elements) < k:
        return ShingleSet((short_fingerprint(elements),))
    # slice windows out of one joined buffer; equal to window_fingerprint per window
    encoded = [t.encode("utf-8") for t in elements]
    joined = SEPARATOR.join(encoded)
    starts = [0]
    for e in encoded:
        starts.append(starts[-1] + len(e) + 1)
    distinct = {joined[starts[i] : starts[i + k] - 1] for i in range(len(encoded) - k + 1)}
    return ShingleSet(
        int.from_bytes(blake2b(w, digest_size=8, person=_WINDOW_PERSON).digest(), "little")
        for w in distinct
    )


def exact_jaccard(a: AbstractSet, b: AbstractSet) -> float:
    if not a and not b:
        raise BothEmpty("Jaccard similarity of two empty sets is undefined")
    inter = len(a & b)
    return inter / (len(a) + len(b) - inter)
