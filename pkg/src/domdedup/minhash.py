"""MinHash sketches over shingle fingerprints.

Hash family, version 1
----------------------
Function ``i`` of a family with master seed ``s`` is::

    h_i(x) = fmix64(x XOR seed_i)

where ``fmix64`` is the 64-bit MurmurHash3 finalizer (a bijection with full
avalanche) and ``seed_1 .. seed_ell`` are the first ``ell`` outputs of the
SplitMix64 generator started at ``s``. SplitMix64 outputs are a bijection of
its counter, so the per-function seeds are pairwise distinct.

A sketch stores the minimum *hash value* per function rather than the argmin
element. Two sets agree on coordinate ``i`` exactly when their minimising
elements agree, up to a 2**-64 chance of two distinct elements sharing a
minimum value.

Binary sketch record (little-endian)::

    offset  size  field
    0       4     magic b"DMHS"
    4       1     record format version (1)
    5       1     hash family version (1)
    6       4     ell, uint32
    10      8     master seed, uint64
    18      8*ell minimum hash values, uint64
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field
from typing import Iterable

import numpy as np

from .errors import EmptySet, FamilyMismatch, InvalidParam

DEFAULT_ELL = 200
FAMILY_VERSION = 1
RECORD_VERSION = 1
MAGIC = b"DMHS"
_HEADER = struct.Struct("<4sBBIQ")

MASK64 = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15
_C1 = np.uint64(0xFF51AFD7ED558CCD)
_C2 = np.uint64(0xC4CEB9FE1A85EC53)
_S33 = np.uint64(33)
_BLOCK = 256


def splitmix64(state: int, n: int) -> list[int]:
    out = []
    for _ in range(n):
        state = (state + _GOLDEN) & MASK64
        z = state
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
        out.append(z ^ (z >> 31))
    return out


def fmix64(x: np.ndarray) -> np.ndarray:
    """MurmurHash3 finalizer, applied elementwise to a uint64 array."""
    x = x ^ (x >> _S33)
    x = x * _C1
    x = x ^ (x >> _S33)
    x = x * _C2
    return x ^ (x >> _S33)


def _fmix64_inplace(x: np.ndarray) -> np.ndarray:
    tmp = np.empty_like(x)
    for c in (_C1, _C2):
        np.right_shift(x, _S33, out=tmp)
        np.bitwise_xor(x, tmp, out=x)
        np.multiply(x, c, out=x)
    np.right_shift(x, _S33, out=tmp)
    np.bitwise_xor(x, tmp, out=x)
    return x


@dataclass(frozen=True, eq=False)
class HashFamily:
    ell: int
    master_seed: int
    seeds: np.ndarray = field(repr=False)
    version: int = FAMILY_VERSION

    def __eq__(self, other):
        return (
            isinstance(other, HashFamily)
            and self.ell == other.ell
            and self.master_seed == other.master_seed
            and self.version == other.version
        )

    def __hash__(self):
        return hash((self.ell, self.master_seed, self.version))

    def hash_values(self, fingerprints: np.ndarray) -> np.ndarray:
        """Matrix of shape (ell, n): row ``i`` is h_i applied to every fingerprint."""
        x = np.bitwise_xor(fingerprints[np.newaxis, :], self.seeds[:, np.newaxis])
        return _fmix64_inplace(x)


def make_family(ell: int = DEFAULT_ELL, master_seed: int = 0) -> HashFamily:
    if not isinstance(ell, (int, np.integer)) or ell < 1:
        raise InvalidParam(f"ell must be >= 1, got {ell!r}")
    master_seed = int(master_seed) & MASK64
    seeds = np.array(splitmix64(master_seed, int(ell)), dtype=np.uint64)
    seeds.setflags(write=False)
    return HashFamily(ell=int(ell), master_seed=master_seed, seeds=seeds)


@dataclass(frozen=True, eq=False)
class MinHashSketch:
    mins: np.ndarray
    master_seed: int = 0
    family_version: int = FAMILY_VERSION

    @property
    def ell(self) -> int:
        return len(self.mins)

    def __eq__(self, other):
        return (
            isinstance(other, MinHashSketch)
            and self.master_seed == other.master_seed
            and self.family_version == other.family_version
            and np.array_equal(self.mins, other.mins)
        )

    def __hash__(self):
        return hash((self.master_seed, self.mins.tobytes()))

    def union(self, other: MinHashSketch) -> MinHashSketch:
        """Sketch of the union of the two underlying sets."""
        _check_compatible(self, other)
        return MinHashSketch(np.minimum(self.mins, other.mins), self.master_seed, self.family_version)

    def to_bytes(self) -> bytes:
        header = _HEADER.pack(MAGIC, RECORD_VERSION, self.family_version, self.ell, self.master_seed)
        return header + self.mins.astype("<u8").tobytes()

    @classmethod
    def from_bytes(cls, data: bytes, offset: int = 0) -> MinHashSketch:
        sk, _ = cls.read(data, offset)
        return sk

    @classmethod
    def read(cls, data: bytes, offset: int = 0) -> tuple[MinHashSketch, int]:
        """Decode one record at ``offset``; returns the sketch and the next offset."""
        if len(data) - offset < _HEADER.size:
            raise ValueError("truncated sketch record header")
        magic, version, family_version, ell, seed = _HEADER.unpack_from(data, offset)
        if magic != MAGIC:
            raise ValueError(f"bad sketch magic {magic!r}")
        if version != RECORD_VERSION:
            raise ValueError(f"unsupported sketch record version {version}")
        if family_version != FAMILY_VERSION:
            raise ValueError(f"unsupported hash family version {family_version}")
        start = offset + _HEADER.size
        end = start + 8 * ell
        if len(data) < end:
            raise ValueError("truncated sketch record body")
        mins = np.frombuffer(data, dtype="<u8", count=ell, offset=start).astype(np.uint64)
        return cls(mins, seed, family_version), end


def _as_array(p: Iterable[int]) -> np.ndarray:
    if isinstance(p, np.ndarray):
        return p.astype(np.uint64, copy=False)
    if not isinstance(p, (set, frozenset)):
        p = list(p)
    return np.fromiter(p, dtype=np.uint64, count=len(p))


def sketch(p: Iterable[int], fam: HashFamily) -> MinHashSketch:
    """MinHash sketch of a set of 64-bit fingerprints."""
    arr = _as_array(p)
    if arr.size == 0:
        raise EmptySet("cannot sketch an empty set")
    mins = None
    # bounded blocks keep the (ell, block) scratch matrix in cache
    for start in range(0, arr.size, _BLOCK):
        block = fam.hash_values(arr[start : start + _BLOCK]).min(axis=1)
        mins = block if mins is None else np.minimum(mins, block, out=mins)
    return MinHashSketch(mins, fam.master_seed, fam.version)


@dataclass(frozen=True)
class SimilarityEstimate:
    agreements: int
    ell: int

    @property
    def value(self) -> float:
        return self.agreements / self.ell

    def __float__(self) -> float:
        return self.value


def _check_compatible(x: MinHashSketch, y: MinHashSketch) -> None:
    if x.ell != y.ell:
        raise FamilyMismatch(f"sketch lengths differ: {x.ell} != {y.ell}")
    if x.master_seed != y.master_seed or x.family_version != y.family_version:
        raise FamilyMismatch("sketches come from different hash families")


def estimate_jaccard(x: MinHashSketch, y: MinHashSketch) -> SimilarityEstimate:
    _check_compatible(x, y)
    return SimilarityEstimate(int(np.count_nonzero(x.mins == y.mins)), x.ell)
