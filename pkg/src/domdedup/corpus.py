"""Synthetic web-application corpora with known state labels.

Each template is a random element tree standing in for one application
state. Variants of a template are rendered with controlled perturbations:

``text``
    fresh text content and attribute values; element structure untouched.
``edit``
    one contiguous element insertion or deletion (a banner, an extra field,
    a removed widget). Block sizes are geometric with mean of about three
    elements, capped at ``edit_rate * n_tokens``.
``repeat``
    the repetition count of every repeated list/table row changes (the
    ``A R R B`` vs ``A R R R B`` situation). Rows are at least
    ``min_row_len`` elements long; with ``min_row_len >= k - 1`` every
    variant has the same k-shingle set as its template.
``shuffle``
    the top-level components of ``<main>`` are reordered.
``popup``
    about half of the variants get a small dialog appended to the body.

Trees only use nestings that the HTML5 tree builder keeps as written, so the
pre-order of a template tree equals the parsed element sequence.
"""

from __future__ import annotations

import html
import random
from dataclasses import dataclass, field
from typing import Iterator

import numpy as np

from .dom import HtmlDocument
from .errors import InvalidParam
from .metrics import GroundTruth

CONTAINERS = (
    "div", "div", "div", "section", "article", "aside", "nav", "header", "footer",
    "span", "fieldset", "figure", "blockquote",
)
LEAVES = (
    "a", "a", "button", "img", "input", "h2", "h3", "p", "p", "em", "strong", "b", "i",
    "label", "small", "code", "textarea", "select", "hr", "span",
)
TEXT_TAGS = frozenset(
    {"a", "button", "h2", "h3", "p", "em", "strong", "b", "i", "label", "small", "code",
     "textarea", "option", "title", "span", "td", "th", "li"}
)
VOID_TAGS = frozenset({"img", "input", "hr", "meta", "link", "br"})
WORDS = (
    "account", "order", "invoice", "profile", "settings", "search", "results", "cart",
    "report", "project", "status", "history", "message", "user", "admin", "upload",
    "download", "help", "review", "share", "delete", "update", "team", "billing",
)
PERTURBATIONS = frozenset({"text", "edit", "repeat", "shuffle", "popup"})


@dataclass
class Node:
    tag: str
    children: list[Node] = field(default_factory=list)
    repeat: int = 1
    container: bool = False

    def clone(self) -> Node:
        return Node(self.tag, [c.clone() for c in self.children], self.repeat, self.container)

    def tokens(self) -> Iterator[str]:
        """Pre-order element names, with repeated nodes expanded."""
        for _ in range(self.repeat):
            yield self.tag
            for c in self.children:
                yield from c.tokens()

    def size(self) -> int:
        return self.repeat * (1 + sum(c.size() for c in self.children))


@dataclass(frozen=True)
class CorpusSpec:
    templates: int = 20
    variants: int = 25
    min_tokens: int = 700
    max_tokens: int = 1100
    edit_rate: float = 0.02
    perturbations: frozenset[str] = frozenset({"text", "edit"})
    min_row_len: int = 11
    min_repeat: int = 2
    max_repeat: int = 8

    def __post_init__(self):
        object.__setattr__(self, "perturbations", frozenset(self.perturbations))
        if self.templates < 1 or self.variants < 1:
            raise InvalidParam("templates and variants must be >= 1")
        if not 0.0 <= self.edit_rate <= 1.0:
            raise InvalidParam("edit_rate must lie in [0, 1]")
        if not 50 <= self.min_tokens <= self.max_tokens:
            raise InvalidParam("need 50 <= min_tokens <= max_tokens")
        if self.min_row_len < 2 or not 2 <= self.min_repeat <= self.max_repeat:
            raise InvalidParam("bad repeated-row parameters")
        unknown = self.perturbations - PERTURBATIONS
        if unknown:
            raise InvalidParam(f"unknown perturbations: {sorted(unknown)}")


class _Builder:
    def __init__(self, rng: np.random.Generator, spec: CorpusSpec):
        self.rng = rng
        self.spec = spec

    def pick(self, seq):
        return seq[int(self.rng.integers(len(seq)))]

    def leaf(self) -> Node:
        tag = self.pick(LEAVES)
        if tag == "select":
            return Node("select", [Node("option") for _ in range(int(self.rng.integers(2, 5)))])
        return Node(tag)

    def block(self, budget: int, depth: int = 0) -> Node:
        """Random subtree of roughly ``budget`` elements."""
        if budget <= 1 or depth >= 6:
            return self.leaf()
        r = self.rng.random()
        if budget >= 20 and r < 0.06:
            return self.repeated_list(budget, depth)
        if budget >= 25 and r < 0.12:
            return self.table(budget, depth)
        if budget <= 12 and r < 0.35:
            return self.form(budget)
        return self.container(budget, depth)

    def container(self, budget: int, depth: int) -> Node:
        node = Node(self.pick(CONTAINERS), container=True)
        remaining = budget - 1
        while remaining > 0:
            part = min(remaining, int(self.rng.integers(1, max(2, remaining // 2 + 2))))
            child = self.block(part, depth + 1)
            node.children.append(child)
            remaining -= child.size()
        return node

    def form(self, budget: int) -> Node:
        children = []
        for _ in range(max(1, budget - 1)):
            children.append(Node(self.pick(("label", "input", "input", "button", "textarea"))))
        return Node("form", children)

    def row(self, tag: str, depth: int) -> Node:
        # rows of at least k-1 elements keep the shingle set stable under repetition changes
        size = int(self.rng.integers(self.spec.min_row_len, self.spec.min_row_len + 8))
        node = Node(tag, container=False)
        remaining = size - 1
        while remaining > 0:
            child = self.leaf() if remaining < 3 or self.rng.random() < 0.6 else self.inner(remaining)
            node.children.append(child)
            remaining -= child.size()
        return node

    def inner(self, remaining: int) -> Node:
        node = Node(self.pick(("div", "span")))
        for _ in range(int(self.rng.integers(1, min(4, remaining)))):
            node.children.append(Node(self.pick(("a", "img", "small", "em", "button"))))
        return node

    def repeated_list(self, budget: int, depth: int) -> Node:
        r = self.row("li", depth + 1)
        r.repeat = int(self.rng.integers(2, 5))
        return Node(self.pick(("ul", "ol")), [r])

    def table(self, budget: int, depth: int) -> Node:
        ncols = int(self.rng.integers(2, 5))
        head = Node("tr", [Node("th") for _ in range(ncols)])
        cells = []
        for _ in range(ncols):
            cell = Node("td")
            for _ in range(int(self.rng.integers(0, 3))):
                cell.children.append(self.leaf())
            cells.append(cell)
        body_row = Node("tr", cells, repeat=int(self.rng.integers(2, 5)))
        while body_row.size() // body_row.repeat < self.spec.min_row_len:
            body_row.children[-1].children.append(Node("span", [Node("a"), Node("img")]))
        return Node("table", [Node("thead", [head]), Node("tbody", [body_row])])

    def site(self) -> tuple[Node, Node, list[Node]]:
        """Chrome and component library shared by every state of one application."""
        item = self.row("li", 3)
        item.repeat = int(self.rng.integers(2, 5))
        nav = Node("nav", [Node("ul", [item])])
        header = Node("header", [Node("div", [Node("a", [Node("img")]), nav, self.block(12, 4)])])
        footer = Node("footer", [self.block(int(self.rng.integers(15, 30)), 3)])
        library = [self.block(int(self.rng.integers(30, 70)), 1) for _ in range(10)]
        return header, footer, library

    def page(self, site: tuple[Node, Node, list[Node]]) -> Node:
        header, footer, library = site
        target = int(self.rng.integers(self.spec.min_tokens, self.spec.max_tokens + 1))
        head = Node("head", [Node("title"), Node("meta"), Node("link")])
        if self.rng.random() < 0.5:
            head.children.append(Node("style"))
        head.children.append(Node("script"))
        main = Node("main", container=True)
        body = Node("body", [header.clone(), main, footer.clone(), Node("script")])
        html_node = Node("html", [head, body])
        picks = self.rng.choice(len(library), size=int(self.rng.integers(1, 3)), replace=False)
        shared = [library[int(i)].clone() for i in picks]
        while html_node.size() + sum(c.size() for c in shared) < target:
            remaining = target - html_node.size() - sum(c.size() for c in shared)
            main.children.append(self.block(min(remaining, int(self.rng.integers(20, 120)))))
        for c in shared:
            main.children.insert(int(self.rng.integers(len(main.children) + 1)), c)
        return html_node


def _walk(node: Node, in_repeat: bool = False) -> Iterator[tuple[Node, bool]]:
    """Pre-order nodes with a flag for being inside a repeated subtree."""
    stack = [(node, in_repeat)]
    while stack:
        n, rep = stack.pop()
        rep = rep or n.repeat > 1
        yield n, rep
        stack.extend((c, rep) for c in reversed(n.children))


def _parents(root: Node) -> Iterator[tuple[Node, int, Node, bool]]:
    """(parent, index, child, inside_repeated_subtree) for every edge."""
    for parent, rep in _walk(root):
        for i, c in enumerate(parent.children):
            yield parent, i, c, rep or c.repeat > 1


def _sizes(root: Node) -> dict[int, int]:
    """Subtree size of every node below ``root``, keyed by ``id(node)``."""
    out: dict[int, int] = {}

    def visit(node: Node) -> int:
        n = node.repeat * (1 + sum(visit(c) for c in node.children))
        out[id(node)] = n
        return n

    visit(root)
    return out


def _body_main(root: Node) -> tuple[Node, Node]:
    body = root.children[1]
    return body, body.children[1]


def perturb(template: Node, spec: CorpusSpec, rng: np.random.Generator) -> Node:
    """Structural perturbations for one variant (text is handled at render time)."""
    tree = template.clone()
    builder = _Builder(rng, spec)
    kinds = spec.perturbations
    if "repeat" in kinds:
        for node, _ in _walk(tree):
            if node.repeat > 1:
                node.repeat = int(rng.integers(spec.min_repeat, spec.max_repeat + 1))
    if "shuffle" in kinds:
        _, main = _body_main(tree)
        order = rng.permutation(len(main.children))
        main.children = [main.children[i] for i in order]
    if "edit" in kinds and spec.edit_rate > 0:
        max_block = max(1, int(spec.edit_rate * template.size()))
        _, main = _body_main(tree)
        if rng.random() < 0.5:
            slots = [n for n, rep in _walk(main) if n.container and not rep]
            target = slots[int(rng.integers(len(slots)))]
            size = min(max_block, int(rng.geometric(0.35)))
            new = builder.block(size, depth=4) if size > 1 else builder.leaf()
            while new.size() > max_block:
                new = builder.leaf()
            target.children.insert(int(rng.integers(len(target.children) + 1)), new)
        else:
            size = min(max_block, int(rng.geometric(0.35)))
            sizes = _sizes(main)
            edges = [(p, i) for p, i, c, rep in _parents(main) if not rep and p.container
                     and sizes[id(c)] <= size and len(p.children) > 1]
            if edges:
                p, i = edges[int(rng.integers(len(edges)))]
                del p.children[i]
    if "popup" in kinds and rng.random() < 0.5:
        body, _ = _body_main(tree)
        popup = Node("div", [Node("p"), Node("button")])
        body.children.insert(len(body.children) - 1, popup)
    return tree


def render(tree: Node, rng: np.random.Generator | None = None) -> str:
    """HTML for ``tree``; ``rng`` drives text and attribute content."""
    out = ["<!DOCTYPE html>"]
    # one numpy draw seeds a stdlib generator; per-word numpy calls are slow
    text_rng = None if rng is None else random.Random(int(rng.integers(2**63)))

    def words(n: int) -> str:
        if text_rng is None:
            return " ".join(WORDS[:n])
        return " ".join(text_rng.choices(WORDS, k=n))

    def emit(node: Node) -> None:
        for _ in range(node.repeat):
            attrs = ""
            if node.tag == "a":
                attrs = f' href="/{words(1)}/{0 if text_rng is None else text_rng.randrange(1000)}"'
            elif node.tag in ("div", "section", "span"):
                attrs = f' class="{words(1)}"'
            elif node.tag == "input":
                attrs = f' name="{words(1)}"'
            out.append(f"<{node.tag}{attrs}>")
            if node.tag in VOID_TAGS:
                continue
            if node.tag == "script":
                out.append(f"var {words(1)} = 1;")
            elif node.tag == "style":
                out.append(".x { color: red }")
            elif node.tag in TEXT_TAGS:
                n = 1 if text_rng is None else text_rng.randint(1, 5)
                out.append(html.escape(words(n)))
            for c in node.children:
                emit(c)
            out.append(f"</{node.tag}>")

    emit(tree)
    return "".join(out)


def template_label(i: int) -> str:
    return f"t{i:03d}"


def generate_templates(spec: CorpusSpec, seed: int) -> list[Node]:
    rng = np.random.default_rng([seed, 0])
    builder = _Builder(rng, spec)
    site = builder.site()
    return [builder.page(site) for _ in range(spec.templates)]


def generate_corpus(spec: CorpusSpec | None = None, seed: int = 0) -> tuple[list[HtmlDocument], GroundTruth]:
    """Render ``spec.templates * spec.variants`` labelled documents.

    Documents are ordered variant-major (every template's first variant,
    then every second variant, ...) so a stream sees all states early.
    """
    spec = spec or CorpusSpec()
    templates = generate_templates(spec, seed)
    rng = np.random.default_rng([seed, 1])
    docs = []
    labels = {}
    for v in range(spec.variants):
        for t, template in enumerate(templates):
            tree = perturb(template, spec, rng)
            text_rng = rng if "text" in spec.perturbations else None
            doc_id = f"{template_label(t)}-v{v:03d}"
            label = template_label(t)
            docs.append(HtmlDocument(doc_id, render(tree, text_rng).encode("utf-8"), label))
            labels[doc_id] = label
    return docs, GroundTruth(labels)


def flat_html(tokens) -> str:
    """A document whose body is exactly ``tokens`` as empty sibling elements."""
    parts = ["<!DOCTYPE html><html><head></head><body>"]
    for t in tokens:
        parts.append(f"<{t}>" if t in VOID_TAGS else f"<{t}></{t}>")
    parts.append("</body></html>")
    return "".join(parts)


FLAT_TAGS = (
    "div", "span", "section", "article", "aside", "nav", "header", "footer", "em",
    "strong", "b", "i", "small", "code", "label", "button", "img", "input", "h2", "h3",
)


def chain_corpus(m: int = 7, core: int = 160, private: int = 10) -> list[HtmlDocument]:
    """States ``s_1..s_m`` where neighbours are near-duplicates and others are not.

    Every state holds a shared core of ``core`` distinct custom elements plus
    two private blocks of ``private`` elements, shared with its left and right
    neighbour respectively. Meant for ``k=1`` so that shingles are element
    names: neighbours have Jaccard ``(c+3+p)/(c+3+3p)`` and non-neighbours
    ``(c+3)/(c+3+4p)``, counting html/head/body in the core.
    """
    if m < 1:
        raise InvalidParam("m must be >= 1")
    core_tags = [f"x-core{i:04d}" for i in range(core)]
    blocks = [[f"x-b{j:03d}-{i:03d}" for i in range(private)] for j in range(m + 1)]
    return [
        HtmlDocument(f"s{j + 1}", flat_html(core_tags + blocks[j] + blocks[j + 1]).encode())
        for j in range(m)
    ]


def repeat_pattern_case(rng: np.random.Generator, k: int, r_min: int | None = None,
                        r_max: int | None = None) -> tuple[list[str], list[str], int]:
    """Token strings ``A R R B`` and ``A R^n B`` plus ``n``.

    ``|R|`` is drawn from ``[r_min, r_max]``, by default ``[max(k-1, k//2+1), k+5]``.
    Every window of ``A R^n B`` also occurs in ``A R R B`` once ``|R| >= k-1``;
    for ``k/2 < |R| < k-1`` windows starting late in one copy of ``R`` can be
    missing from the doubled form.
    """
    r_min = max(k - 1, k // 2 + 1) if r_min is None else r_min
    r_max = k + 5 if r_max is None else r_max
    r_len = int(rng.integers(r_min, r_max + 1))
    a = [FLAT_TAGS[i] for i in rng.integers(len(FLAT_TAGS), size=int(rng.integers(0, 15)))]
    r = [FLAT_TAGS[i] for i in rng.integers(len(FLAT_TAGS), size=r_len)]
    b = [FLAT_TAGS[i] for i in rng.integers(len(FLAT_TAGS), size=int(rng.integers(0, 15)))]
    n = int(rng.integers(2, 9))
    return a + r + r + b, a + r * n + b, n
