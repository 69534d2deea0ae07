"""HTML ingestion: parse a response body and flatten its DOM to element names.

Only element names survive serialization. Text, comments, attribute values
and the document node itself are dropped, so two pages that differ only in
their text content produce the same :class:`DomSequence`.
"""

from __future__ import annotations

import codecs
import json
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Iterator

from selectolax.lexbor import LexborHTMLParser

from .errors import EncodingError, InputEmpty

DomTree = LexborHTMLParser

DEFAULT_EXCLUDED_TAGS = frozenset(
    {"script", "style", "noscript", "meta", "link", "br", "wbr"}
)

_META_CHARSET = re.compile(rb"""<meta[^>]+charset\s*=\s*["']?\s*([a-zA-Z0-9_\-:.]+)""", re.I)


@dataclass(frozen=True)
class HtmlDocument:
    id: str
    raw: bytes
    source_label: str | None = None

    def __post_init__(self):
        if not self.id:
            raise ValueError("document id must be non-empty")
        if isinstance(self.raw, str):
            object.__setattr__(self, "raw", self.raw.encode("utf-8"))


@dataclass(frozen=True)
class DomSequence:
    elements: tuple[str, ...]

    @property
    def length(self) -> int:
        return len(self.elements)

    def __len__(self) -> int:
        return len(self.elements)

    def __iter__(self) -> Iterator[str]:
        return iter(self.elements)


@dataclass(frozen=True)
class ElementFilter:
    """Element names to drop from a serialized DOM.

    Filtering works on tokens: an excluded element disappears from the
    sequence but its descendants (if any) are kept. This makes filtering a
    projection, so applying it twice changes nothing.
    """

    excluded_tags: frozenset[str] = field(default=DEFAULT_EXCLUDED_TAGS)
    include_text: bool = field(default=False, init=False)

    def __post_init__(self):
        object.__setattr__(
            self, "excluded_tags", frozenset(t.lower() for t in self.excluded_tags)
        )

    @classmethod
    def empty(cls) -> ElementFilter:
        return cls(frozenset())

    def apply(self, seq: DomSequence) -> DomSequence:
        if not self.excluded_tags:
            return seq
        return DomSequence(tuple(t for t in seq.elements if t not in self.excluded_tags))


def decode_html(raw: bytes) -> str:
    """Decode a response body as UTF-8, honouring a BOM or a meta charset."""
    if not raw:
        raise InputEmpty("document body is empty")
    for bom, codec in (
        (codecs.BOM_UTF8, "utf-8"),
        (codecs.BOM_UTF16_LE, "utf-16-le"),
        (codecs.BOM_UTF16_BE, "utf-16-be"),
    ):
        if raw.startswith(bom):
            try:
                return raw[len(bom):].decode(codec)
            except UnicodeDecodeError as exc:
                raise EncodingError(f"invalid {codec} after byte-order mark: {exc}") from exc
    try:
        return raw.decode("utf-8")
    except UnicodeDecodeError as exc:
        utf8_error = exc
    match = _META_CHARSET.search(raw[:1024])
    if match:
        label = match.group(1).decode("ascii").lower()
        try:
            return raw.decode(label)
        except (LookupError, UnicodeDecodeError):
            pass
    raise EncodingError(f"cannot decode document as UTF-8: {utf8_error}")


def parse_html(doc: HtmlDocument | bytes | str) -> DomTree:
    """Parse with the error-tolerant HTML5 tree builder; malformed input is repaired."""
    if isinstance(doc, HtmlDocument):
        raw = doc.raw
    else:
        raw = doc.encode("utf-8") if isinstance(doc, str) else doc
    text = decode_html(raw)
    return LexborHTMLParser(text)


def serialize(tree: DomTree, element_filter: ElementFilter | None = None) -> DomSequence:
    """Pre-order (document order) list of element names in ``tree``."""
    if element_filter is None:
        element_filter = ElementFilter()
    excluded = element_filter.excluded_tags
    root = tree.root
    if root is None:
        return DomSequence(())
    # lexbor reports comments and other non-element nodes as "-comment" etc.
    tags = [n.tag for n in root.traverse(include_text=False)]
    tags = [t.lower() for t in tags if t and t[0] not in "-!"]
    return DomSequence(tuple(t for t in tags if t not in excluded))


def dom_sequence(doc: HtmlDocument | bytes | str, element_filter: ElementFilter | None = None) -> DomSequence:
    return serialize(parse_html(doc), element_filter)


def load_directory(path: str | Path) -> list[HtmlDocument]:
    """Read every ``.html``/``.htm`` file under ``path``; the file stem is the state id."""
    path = Path(path)
    files = sorted(
        p for p in path.rglob("*") if p.is_file() and p.suffix.lower() in (".html", ".htm")
    )
    docs = []
    seen = set()
    for p in files:
        if p.stem in seen:
            raise ValueError(f"duplicate state id {p.stem!r} in {path}")
        seen.add(p.stem)
        docs.append(HtmlDocument(id=p.stem, raw=p.read_bytes()))
    return docs


def iter_jsonl(path: str | Path) -> Iterator[HtmlDocument]:
    """Yield documents from a line-delimited file of ``{"id", "html", "label"?}`` objects."""
    with open(path, encoding="utf-8-sig") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.strip()
            if not line:
                continue
            try:
                rec = json.loads(line)
                doc_id = str(rec["id"])
                html = rec["html"]
            except (json.JSONDecodeError, KeyError, TypeError) as exc:
                raise ValueError(f"{path}:{lineno}: malformed record ({exc})") from exc
            yield HtmlDocument(id=doc_id, raw=html.encode("utf-8"), source_label=rec.get("label"))


def load_jsonl(path: str | Path) -> list[HtmlDocument]:
    docs = list(iter_jsonl(path))
    ids = [d.id for d in docs]
    if len(set(ids)) != len(ids):
        raise ValueError(f"duplicate state ids in {path}")
    return docs


def write_jsonl(docs: Iterable[HtmlDocument], path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for d in docs:
            rec = {"id": d.id, "html": d.raw.decode("utf-8")}
            if d.source_label is not None:
                rec["label"] = d.source_label
            fh.write(json.dumps(rec, sort_keys=True) + "\n")
