"""Command-line front end.

Subcommands::

    domdedup dedup   --input PATH [...]   stream a corpus through the index
    domdedup sweep   --input PATH --truth FILE --k-grid 4,12,40 [...]
    domdedup gen     --out PATH [...]     write a synthetic labelled corpus
    domdedup inspect FILE [--k 5 --dump-shingles --sketch]

Every ``dedup``/``sweep`` option can also come from a JSON config file
(``--config``) or from a ``DOMDEDUP_<OPTION>`` environment variable.
Precedence: command line, then environment, then config file, then defaults.

Exit codes: 0 success, 1 fatal configuration or I/O error, 2 the run
completed but some documents could not be processed.
"""

from __future__ import annotations

import argparse
import csv
import functools
import io
import json
import logging
import os
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields
from datetime import datetime, timezone
from pathlib import Path

from . import __version__
from .corpus import CorpusSpec, generate_corpus
from .dom import DEFAULT_EXCLUDED_TAGS, ElementFilter, HtmlDocument, dom_sequence, load_directory, load_jsonl
from .errors import DedupError
from .lsh import (
    DedupConfig,
    Deduplicator,
    LshIndex,
    SimpleHashDeduplicator,
    Verdict,
    failed_verdict,
    sequence_hash,
)
from .metrics import GroundTruth, evaluate
from .minhash import make_family, sketch
from .shingling import shingle, windows

log = logging.getLogger("domdedup")

ENV_PREFIX = "DOMDEDUP_"
EXIT_OK, EXIT_FATAL, EXIT_DOC_ERRORS = 0, 1, 2


class FatalError(Exception):
    pass


@dataclass
class RunConfig:
    input: list[str] = field(default_factory=list)
    format: str | None = None
    k: int = 12
    hashes: int = 200
    tau: float = 0.85
    seed: int = 0
    exclude_tags: list[str] | None = None
    truth: str | None = None
    report: str | None = None
    strategy: str = "minhash"
    dump_shingles: bool = False
    deterministic: bool = False
    max_bucket_warn: int | None = None
    workers: int = 1
    save_index: str | None = None
    load_index: str | None = None

    def dedup_config(self) -> DedupConfig:
        return DedupConfig(k=self.k, ell=self.hashes, tau=self.tau, master_seed=self.seed)

    def element_filter(self) -> ElementFilter:
        if self.exclude_tags is None:
            return ElementFilter()
        return ElementFilter(frozenset(self.exclude_tags))

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> RunConfig:
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise FatalError(f"unknown config keys: {sorted(unknown)}")
        cfg = cls(**data)
        cfg.validate()
        return cfg

    def validate(self) -> None:
        if self.format not in (None, "dir", "jsonl"):
            raise FatalError(f"--format must be dir or jsonl, got {self.format!r}")
        if self.strategy not in ("minhash", "simplehash"):
            raise FatalError(f"--strategy must be minhash or simplehash, got {self.strategy!r}")
        if self.workers < 1:
            raise FatalError("--workers must be >= 1")
        try:
            self.dedup_config()
        except DedupError as exc:
            raise FatalError(str(exc)) from exc


def _csv_list(value: str) -> list[str]:
    return [v.strip() for v in value.split(",") if v.strip()]


def _bool(value: str) -> bool:
    if value.lower() in ("1", "true", "yes", "on"):
        return True
    if value.lower() in ("0", "false", "no", "off", ""):
        return False
    raise ValueError(f"not a boolean: {value!r}")


# option name -> parser for string values (environment variables)
_ENV_PARSERS = {
    "input": _csv_list, "format": str, "k": int, "hashes": int, "tau": float, "seed": int,
    "exclude_tags": _csv_list, "truth": str, "report": str, "strategy": str,
    "dump_shingles": _bool, "deterministic": _bool, "max_bucket_warn": int, "workers": int,
    "save_index": str, "load_index": str,
}


def resolve_config(args: argparse.Namespace, environ=os.environ) -> RunConfig:
    data = RunConfig().to_dict()
    if getattr(args, "config", None):
        try:
            data.update(json.loads(Path(args.config).read_text()))
        except (OSError, json.JSONDecodeError) as exc:
            raise FatalError(f"cannot read config {args.config}: {exc}") from exc
    for name, parse in _ENV_PARSERS.items():
        raw = environ.get(ENV_PREFIX + name.upper())
        if raw is not None:
            try:
                data[name] = parse(raw)
            except ValueError as exc:
                raise FatalError(f"bad value for {ENV_PREFIX}{name.upper()}: {exc}") from exc
    for name in _ENV_PARSERS:
        value = getattr(args, name, None)
        if value is not None and value is not False:
            data[name] = value
    cfg = RunConfig.from_dict(data)
    if getattr(args, "save_config", None):
        Path(args.save_config).write_text(json.dumps(cfg.to_dict(), indent=2, sort_keys=True) + "\n")
    return cfg


def load_documents(cfg: RunConfig) -> list[HtmlDocument]:
    if not cfg.input:
        raise FatalError("no input given (--input)")
    docs: list[HtmlDocument] = []
    for item in cfg.input:
        path = Path(item)
        fmt = cfg.format or ("dir" if path.is_dir() else "jsonl")
        try:
            docs.extend(load_directory(path) if fmt == "dir" else load_jsonl(path))
        except (OSError, ValueError, UnicodeDecodeError) as exc:
            raise FatalError(f"cannot read {path}: {exc}") from exc
    ids = [d.id for d in docs]
    if len(set(ids)) != len(ids):
        raise FatalError("state ids are not unique across inputs")
    return docs


@functools.lru_cache(maxsize=4)
def _family(ell: int, seed: int):
    return make_family(ell, seed)


def _prepare(args):
    """Worker task: sketch (minhash) or whole-sequence hash (simplehash) of one document."""
    doc, cfg_dict, strategy, excluded = args
    element_filter = ElementFilter(frozenset(excluded))
    try:
        seq = dom_sequence(doc, element_filter)
    except DedupError as exc:
        return doc.id, None, exc
    if strategy == "simplehash":
        return doc.id, sequence_hash(seq), None
    cfg = DedupConfig(**cfg_dict)
    return doc.id, sketch(shingle(seq, cfg.k), _family(cfg.ell, cfg.master_seed)), None


def _prepared(docs, dcfg: DedupConfig, cfg: RunConfig, element_filter: ElementFilter):
    if cfg.workers == 1:
        fam = make_family(dcfg.ell, dcfg.master_seed)
        for d in docs:
            try:
                seq = dom_sequence(d, element_filter)
            except DedupError as exc:
                yield d.id, None, exc
                continue
            if cfg.strategy == "simplehash":
                yield d.id, sequence_hash(seq), None
            else:
                yield d.id, sketch(shingle(seq, dcfg.k), fam), None
        return
    tasks = ((d, asdict(dcfg), cfg.strategy, sorted(element_filter.excluded_tags)) for d in docs)
    with ProcessPoolExecutor(max_workers=cfg.workers) as pool:
        yield from pool.map(_prepare, tasks, chunksize=16)


def dump_shingles(docs, k: int, element_filter: ElementFilter, out) -> None:
    for d in docs:
        out.write(f"# {d.id}\n")
        try:
            seq = dom_sequence(d, element_filter)
        except DedupError as exc:
            out.write(f"! {exc}\n")
            continue
        if len(seq) < k:
            out.write(" ".join(seq.elements) + "\t(short document: one whole-sequence shingle)\n")
            continue
        seen = set()
        for w in windows(seq, k):
            if w not in seen:
                seen.add(w)
                out.write(" ".join(w) + "\n")


def run_dedup(cfg: RunConfig, docs: list[HtmlDocument] | None = None) -> tuple[dict, int]:
    """Run one dedup pass; returns the report and the exit code."""
    if docs is None:
        docs = load_documents(cfg)
    element_filter = cfg.element_filter()
    truth = _load_truth(cfg.truth) if cfg.truth else None

    index = None
    if cfg.load_index:
        try:
            index = LshIndex.load(cfg.load_index)
        except (OSError, ValueError, KeyError) as exc:
            raise FatalError(f"cannot load index {cfg.load_index}: {exc}") from exc
    dcfg = index.config if index is not None else cfg.dedup_config()

    if cfg.dump_shingles:
        dump_shingles(docs, dcfg.k, element_filter, sys.stdout if cfg.report else sys.stderr)

    start = time.perf_counter()
    verdicts: list[Verdict] = []
    if cfg.strategy == "simplehash":
        engine = SimpleHashDeduplicator(element_filter)
        for doc_id, h, err in _prepared(docs, dcfg, cfg, element_filter):
            verdicts.append(failed_verdict(doc_id, err) if err else engine.add_hash(doc_id, h))
    else:
        engine = Deduplicator(dcfg, element_filter, index=index)
        for doc_id, sk, err in _prepared(docs, dcfg, cfg, element_filter):
            verdicts.append(failed_verdict(doc_id, err) if err else engine.add_sketch(doc_id, sk))
    elapsed = time.perf_counter() - start

    report = build_report(cfg, dcfg, verdicts, engine, truth)
    if not cfg.deterministic:
        report["timing"] = {
            "elapsed_seconds": elapsed,
            "documents_per_second": len(docs) / elapsed if elapsed > 0 else None,
        }
        report["generated_at"] = datetime.now(timezone.utc).isoformat()
    if cfg.save_index and cfg.strategy == "minhash":
        engine.index.save(cfg.save_index)
    failed = sum(v.decision.value == "failed" for v in verdicts)
    return report, EXIT_DOC_ERRORS if failed else EXIT_OK


def _load_truth(path: str) -> GroundTruth:
    try:
        return GroundTruth.load(path)
    except (OSError, ValueError) as exc:
        raise FatalError(f"cannot read truth file {path}: {exc}") from exc


def build_report(cfg: RunConfig, dcfg: DedupConfig, verdicts: list[Verdict], engine, truth) -> dict:
    counts = {d: 0 for d in ("new", "duplicate", "failed")}
    for v in verdicts:
        counts[v.decision.value] += 1
    echo = {**cfg.to_dict(), "k": dcfg.k, "hashes": dcfg.ell, "tau": dcfg.tau, "seed": dcfg.master_seed}
    # output locations do not influence results; leaving them out keeps reports comparable
    for key in ("report", "save_index"):
        echo.pop(key)
    report = {
        "tool": "domdedup",
        "version": __version__,
        "strategy": cfg.strategy,
        "config": echo,
        "seed": dcfg.master_seed,
        "documents": len(verdicts),
        "unique": counts["new"],
        "duplicates": counts["duplicate"],
        "failed": counts["failed"],
        "unique_states": [v.probe_id for v in verdicts if v.is_new],
        "verdicts": [
            {"id": v.probe_id, "decision": v.decision.value, "matched_id": v.matched_id,
             "similarity": v.similarity, "score": v.score,
             "candidates_examined": v.candidates_examined, "error": v.error}
            for v in verdicts
        ],
    }
    if cfg.strategy == "minhash":
        index = engine.index
        max_bucket = index.max_bucket_size()
        warnings = []
        if cfg.max_bucket_warn is not None and max_bucket > cfg.max_bucket_warn:
            msg = (f"largest bucket holds {max_bucket} states (> {cfg.max_bucket_warn}); "
                   "the corpus may be degenerate for this k")
            warnings.append(msg)
            log.warning(msg)
        report["hash_family"] = {"version": index.family.version, "ell": index.family.ell,
                                 "master_seed": index.family.master_seed}
        report["index"] = {"registered": index.registered, "max_bucket_size": max_bucket,
                           "warnings": warnings}
    if truth is not None:
        labelled = [v for v in verdicts if v.probe_id in truth.labels]
        if len(labelled) != len(verdicts):
            missing = sorted(v.probe_id for v in verdicts if v.probe_id not in truth.labels)
            raise FatalError(f"truth file has no label for: {missing[:5]}")
        report["metrics"] = evaluate(verdicts, truth).to_dict()
    return report


def write_report(report: dict, path: str | None) -> None:
    text = json.dumps(report, indent=2, sort_keys=True) + "\n"
    if path is None:
        sys.stdout.write(text)
        return
    Path(path).write_text(text)
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["id", "decision", "matched_id", "similarity", "score", "error"])
    for v in report["verdicts"]:
        writer.writerow([v["id"], v["decision"], v["matched_id"] or "", v["similarity"], v["score"], v["error"] or ""])
    Path(path).with_suffix(".csv").write_text(buf.getvalue())


def sweep(cfg: RunConfig, k_grid, ell_grid, tau_grid, docs=None) -> list[dict]:
    """One dedup run per grid cell; parsing is shared, shingles per k, sketches per (k, ell)."""
    if not cfg.truth:
        raise FatalError("sweep needs --truth")
    if docs is None:
        docs = load_documents(cfg)
    truth = _load_truth(cfg.truth)
    element_filter = cfg.element_filter()
    seqs = {}
    failed = {}
    for d in docs:
        try:
            seqs[d.id] = dom_sequence(d, element_filter)
        except DedupError as exc:
            failed[d.id] = exc
    rows = []
    for k in k_grid:
        shingles = {i: shingle(s, k) for i, s in seqs.items()}
        for ell in ell_grid:
            fam = make_family(ell, cfg.seed)
            sketches = {i: sketch(p, fam) for i, p in shingles.items()}
            for tau in tau_grid:
                dcfg = DedupConfig(k=k, ell=ell, tau=tau, master_seed=cfg.seed)
                engine = Deduplicator(dcfg, element_filter)
                verdicts = [
                    failed_verdict(d.id, failed[d.id]) if d.id in failed else engine.add_sketch(d.id, sketches[d.id])
                    for d in docs
                ]
                m = evaluate(verdicts, truth)
                rows.append({"k": k, "hashes": ell, "tau": tau, **m.to_dict(details=False)})
    return rows


def write_sweep(rows: list[dict], cfg: RunConfig, path: str | None) -> None:
    report = {"tool": "domdedup", "version": __version__, "seed": cfg.seed, "cells": rows}
    text = json.dumps(report, indent=2, sort_keys=True) + "\n"
    if path is None:
        sys.stdout.write(text)
        return
    Path(path).write_text(text)
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=list(rows[0]) if rows else ["k"], lineterminator="\n")
    writer.writeheader()
    writer.writerows(rows)
    Path(path).with_suffix(".csv").write_text(buf.getvalue())


def cmd_gen(args) -> int:
    spec = CorpusSpec(
        templates=args.templates, variants=args.variants, min_tokens=args.min_tokens,
        max_tokens=args.max_tokens, edit_rate=args.edit_rate,
        perturbations=frozenset(_csv_list(args.perturb)),
    )
    docs, truth = generate_corpus(spec, args.seed)
    out = Path(args.out)
    if args.format == "dir":
        out.mkdir(parents=True, exist_ok=True)
        for d in docs:
            (out / f"{d.id}.html").write_bytes(d.raw)
        truth_path = Path(args.truth) if args.truth else out / "truth.jsonl"
    else:
        from .dom import write_jsonl

        out.parent.mkdir(parents=True, exist_ok=True)
        write_jsonl(docs, out)
        truth_path = Path(args.truth) if args.truth else out.with_suffix(".truth.jsonl")
    truth.save(truth_path)
    print(f"wrote {len(docs)} documents ({spec.templates} states) to {out}; truth in {truth_path}")
    return EXIT_OK


def cmd_inspect(args) -> int:
    path = Path(args.file)
    try:
        doc = HtmlDocument(path.stem, path.read_bytes())
    except OSError as exc:
        raise FatalError(f"cannot read {path}: {exc}") from exc
    element_filter = ElementFilter() if args.exclude_tags is None else ElementFilter(frozenset(args.exclude_tags))
    try:
        seq = dom_sequence(doc, element_filter)
    except DedupError as exc:
        raise FatalError(f"{path}: {exc}") from exc
    print(f"elements ({len(seq)}): {' '.join(seq.elements)}")
    p = shingle(seq, args.k)
    print(f"distinct {args.k}-shingles: {len(p)}")
    if args.dump_shingles:
        dump_shingles([doc], args.k, element_filter, sys.stdout)
    if args.sketch:
        sk = sketch(p, make_family(args.hashes, args.seed))
        print("sketch: " + " ".join(f"{int(v):016x}" for v in sk.mins))
    return EXIT_OK


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_FATAL, f"{self.prog}: error: {message}\n")


def _float_list(s):
    return [float(x) for x in _csv_list(s)]


def _int_list(s):
    return [int(x) for x in _csv_list(s)]


def _add_run_options(p: argparse.ArgumentParser) -> None:
    # defaults are None so that unset flags fall through to env/config values
    p.add_argument("--input", action="append", help="corpus directory or .jsonl file (repeatable)")
    p.add_argument("--format", choices=("dir", "jsonl"), help="input format (default: by path type)")
    p.add_argument("--k", type=int, help="shingle length (default 12)")
    p.add_argument("--hashes", type=int, help="number of hash functions (default 200)")
    p.add_argument("--tau", type=float, help="similarity threshold (default 0.85)")
    p.add_argument("--seed", type=int, help="master seed of the hash family (default 0)")
    p.add_argument("--truth", help="ground-truth labels, one {id, label} JSON object per line")
    p.add_argument("--report", help="write the JSON report here (and a .csv beside it)")
    p.add_argument("--strategy", choices=("minhash", "simplehash"))
    p.add_argument("--exclude-tags", type=_csv_list, dest="exclude_tags",
                   help=f"comma-separated tags to drop (default {','.join(sorted(DEFAULT_EXCLUDED_TAGS))})")
    p.add_argument("--dump-shingles", action="store_true", dest="dump_shingles")
    p.add_argument("--deterministic", action="store_true", help="omit timings and timestamps")
    p.add_argument("--max-bucket-warn", type=int, dest="max_bucket_warn")
    p.add_argument("--workers", type=int, help="processes for parsing and sketching (default 1)")
    p.add_argument("--save-index", dest="save_index")
    p.add_argument("--load-index", dest="load_index")
    p.add_argument("--config", help="JSON config file")
    p.add_argument("--save-config", dest="save_config", help="write the resolved config as JSON")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="domdedup", description="Near-duplicate web application state detection.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("dedup", help="classify every document as new or near-duplicate")
    _add_run_options(p)

    p = sub.add_parser("sweep", help="grid search over k, hashes and tau against ground truth")
    _add_run_options(p)
    p.add_argument("--k-grid", type=_int_list, dest="k_grid")
    p.add_argument("--hashes-grid", type=_int_list, dest="hashes_grid")
    p.add_argument("--tau-grid", type=_float_list, dest="tau_grid")

    p = sub.add_parser("gen", help="write a synthetic labelled corpus")
    p.add_argument("--out", required=True)
    p.add_argument("--format", choices=("dir", "jsonl"), default="dir")
    p.add_argument("--truth")
    p.add_argument("--templates", type=int, default=20)
    p.add_argument("--variants", type=int, default=25)
    p.add_argument("--min-tokens", type=int, default=CorpusSpec.min_tokens, dest="min_tokens")
    p.add_argument("--max-tokens", type=int, default=CorpusSpec.max_tokens, dest="max_tokens")
    p.add_argument("--edit-rate", type=float, default=0.02, dest="edit_rate")
    p.add_argument("--perturb", default="text,edit", help="comma-separated: text,edit,repeat,shuffle,popup")
    p.add_argument("--seed", type=int, default=0)

    p = sub.add_parser("inspect", help="show the element sequence, shingles and sketch of one file")
    p.add_argument("file")
    p.add_argument("--k", type=int, default=12)
    p.add_argument("--hashes", type=int, default=200)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--exclude-tags", type=_csv_list, dest="exclude_tags")
    p.add_argument("--dump-shingles", action="store_true", dest="dump_shingles")
    p.add_argument("--sketch", action="store_true")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.command == "gen":
            return cmd_gen(args)
        if args.command == "inspect":
            return cmd_inspect(args)
        cfg = resolve_config(args)
        if args.command == "dedup":
            report, code = run_dedup(cfg)
            write_report(report, cfg.report)
            return code
        rows = sweep(cfg, args.k_grid or [cfg.k], args.hashes_grid or [cfg.hashes], args.tau_grid or [cfg.tau])
        write_sweep(rows, cfg, cfg.report)
        return EXIT_OK
    except FatalError as exc:
        print(f"domdedup: error: {exc}", file=sys.stderr)
        return EXIT_FATAL
    except DedupError as exc:
        print(f"domdedup: error: {exc}", file=sys.stderr)
        return EXIT_FATAL
    except OSError as exc:
        print(f"domdedup: error: {exc}", file=sys.stderr)
        return EXIT_FATAL


if __name__ == "__main__":
    sys.exit(main())
