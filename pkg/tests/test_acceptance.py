"""Acceptance criteria, one test per criterion.

Each test prints a one-line result; the terminal summary (see conftest.py)
lists PASS/FAIL for every criterion at the end of the run.
"""

import io
import itertools
import time
from contextlib import redirect_stdout
from importlib import resources

import numpy as np
import pytest

from domdedup import (
    DedupConfig,
    HtmlDocument,
    LshIndex,
    dedup_stream,
    dom_sequence,
    estimate_jaccard,
    evaluate,
    exact_jaccard,
    make_family,
    shingle,
    simplehash_stream,
    sketch,
)
from domdedup.cli import RunConfig, main, run_dedup
from domdedup.corpus import (
    CorpusSpec,
    chain_corpus,
    flat_html,
    generate_templates,
    perturb,
    render,
    repeat_pattern_case,
)
from domdedup.lsh import agreement_counts, sequence_hash
from domdedup.shingling import window_fingerprint
from oracles import separation

rng_seed = 20240601


def random_pair(rng, j_target, union_size):
    """Two sets of random 64-bit values whose union has ``union_size`` elements."""
    universe = rng.integers(0, 2**63, size=union_size, dtype=np.int64).astype(np.uint64)
    universe = np.unique(universe)
    n = len(universe)
    inter = int(round(j_target * n))
    rest = n - inter
    a_only = int(rng.integers(0, rest + 1)) if rest else 0
    shared = universe[:inter]
    a = np.concatenate([shared, universe[inter : inter + a_only]])
    b = np.concatenate([shared, universe[inter + a_only :]])
    if len(a) == 0 or len(b) == 0:
        # keep both sets non-empty; the exact value is recomputed below
        a = np.concatenate([a, universe[-1:]])
        b = np.concatenate([b, universe[:1]])
    return set(a.tolist()), set(b.tolist())


@pytest.fixture(scope="module")
def pair_population():
    rng = np.random.default_rng(rng_seed)
    pairs = []
    for j in np.linspace(0.0, 1.0, 1000):
        a, b = random_pair(rng, float(j), int(rng.integers(50, 400)))
        pairs.append((a, b, exact_jaccard(a, b)))
    return pairs


def mean_abs_error(pairs, ell, seed=0):
    fam = make_family(ell, seed)
    errs = [abs(estimate_jaccard(sketch(a, fam), sketch(b, fam)).value - j) for a, b, j in pairs]
    return float(np.mean(errs))


@pytest.mark.criterion(1, "estimator accuracy")
def test_c1_estimator_accuracy(pair_population, detail):
    js = [j for _, _, j in pair_population]
    # exact values spread across the whole interval
    assert min(js) == 0.0 and max(js) == 1.0
    assert np.histogram(js, bins=10, range=(0, 1))[0].min() >= 50
    start = time.perf_counter()
    err = mean_abs_error(pair_population, 200)
    elapsed = time.perf_counter() - start
    detail(f"mean |est - exact| = {err:.4f} at ell=200 over 1000 pairs ({elapsed:.1f}s)")
    assert err <= 0.07
    assert elapsed < 30


@pytest.mark.criterion(2, "unbiasedness")
def test_c2_unbiasedness(detail):
    rng = np.random.default_rng(rng_seed + 1)
    pairs = []
    for j in np.linspace(0.05, 0.95, 20):
        a, b = random_pair(rng, float(j), 300)
        pairs.append((a, b, exact_jaccard(a, b)))
    assert all(0 < j < 1 for _, _, j in pairs)
    start = time.perf_counter()
    families = [make_family(1, seed) for seed in range(1, 401)]
    ok = 0
    worst = 0.0
    for a, b, j in pairs:
        agree = sum(int(sketch(a, f).mins[0] == sketch(b, f).mins[0]) for f in families)
        rate = agree / len(families)
        band = 3 * np.sqrt(j * (1 - j) / len(families))
        ok += abs(rate - j) <= band
        worst = max(worst, abs(rate - j) / band)
    elapsed = time.perf_counter() - start
    detail(f"{ok}/20 pairs within 3 sigma over 400 families (worst {worst:.2f} sigma/3, {elapsed:.1f}s)")
    assert ok >= 19
    assert elapsed < 120


@pytest.mark.criterion(3, "error decay")
def test_c3_error_decay(pair_population, detail):
    start = time.perf_counter()
    e200 = mean_abs_error(pair_population, 200)
    e800 = mean_abs_error(pair_population, 800)
    elapsed = time.perf_counter() - start
    detail(f"error ell=200 {e200:.4f}, ell=800 {e800:.4f}, ratio {e800 / e200:.3f} ({elapsed:.1f}s)")
    assert e800 <= 0.55 * e200
    assert elapsed < 120


@pytest.mark.criterion(4, "bucket counts exact")
def test_c4_bucket_counts_equal_direct_agreement(default_corpus, detail):
    docs, _ = default_corpus
    start = time.perf_counter()
    idx = LshIndex(DedupConfig())
    checked = 0
    for d in docs:
        sk = sketch(shingle(dom_sequence(d), idx.config.k), idx.family)
        cand = idx.probe(sk)
        direct = agreement_counts(sk, {i: idx.sketch_of(i) for i in idx.ids()})
        for sid, count in cand.counts.items():
            assert count == direct[sid]
            assert cand.similarity(sid) == direct[sid] / idx.family.ell
            checked += 1
        # states outside every bucket agree nowhere
        assert {s for s, c in direct.items() if c} == set(cand.counts)
        idx.insert(d.id, sk)
    elapsed = time.perf_counter() - start
    detail(f"{checked} candidate counts over {len(docs)} probes equal direct agreement ({elapsed:.1f}s)")
    assert len(docs) == 500 and checked > 0
    assert elapsed < 60


# Hand enumeration of every window of 5 consecutive element names in the
# bundled sample page (html head title body table tbody tr td a td span tr td a td span).
SAMPLE_5MERS = {
    ("html", "head", "title", "body", "table"),
    ("head", "title", "body", "table", "tbody"),
    ("title", "body", "table", "tbody", "tr"),
    ("body", "table", "tbody", "tr", "td"),
    ("table", "tbody", "tr", "td", "a"),
    ("tbody", "tr", "td", "a", "td"),
    ("tr", "td", "a", "td", "span"),
    ("td", "a", "td", "span", "tr"),
    ("a", "td", "span", "tr", "td"),
    ("td", "span", "tr", "td", "a"),
    ("span", "tr", "td", "a", "td"),
}


@pytest.mark.criterion(5, "sample page 5-mers")
def test_c5_sample_page(tmp_path, detail):
    page = resources.files("domdedup").joinpath("data/sample_table.html")
    raw = page.read_bytes()
    seq = dom_sequence(raw)
    got = shingle(seq, 5)
    assert got == {window_fingerprint(w) for w in SAMPLE_5MERS}
    # the same set as printed by the command line
    (tmp_path / "sample_table.html").write_bytes(raw)
    out = io.StringIO()
    with redirect_stdout(out):
        assert main(["inspect", str(tmp_path / "sample_table.html"), "--k", "5", "--dump-shingles"]) == 0
    printed = [ln for ln in out.getvalue().splitlines() if ln and not ln.startswith(("#", "elements", "distinct"))]
    assert {tuple(ln.split()) for ln in printed} == SAMPLE_5MERS
    assert len(printed) == len(SAMPLE_5MERS)
    detail(f"{len(got)} distinct 5-mers, equal to the enumerated set")


def _duplicate_pair_cases(n):
    """Pairs of documents with equal element sequences but different bytes."""
    spec = CorpusSpec(templates=10, variants=1, min_tokens=120, max_tokens=400, perturbations={"text"})
    templates = generate_templates(spec, seed=3)
    rng = np.random.default_rng(rng_seed + 6)
    cases = []
    for i in range(n):
        tree = templates[i % len(templates)]
        if i % 4 == 3:
            tree = perturb(tree, CorpusSpec(perturbations={"edit"}, edit_rate=0.05), rng)
        a = render(tree, rng)
        b = render(tree, rng)
        if i % 3 == 1:
            # comments, scripts and whitespace do not reach the element sequence
            b = b.replace("<main>", "<main>\n  <!-- banner --><script>track()</script>\n", 1)
        cases.append((HtmlDocument(f"c{i}a", a.encode()), HtmlDocument(f"c{i}b", b.encode())))
    return cases


@pytest.mark.criterion(6, "simple-hash subsumption")
def test_c6_simplehash_subsumption(detail):
    cases = _duplicate_pair_cases(200)
    violations = 0
    equal_pairs = 0
    for a, b in cases:
        if sequence_hash(dom_sequence(a)) != sequence_hash(dom_sequence(b)):
            continue
        equal_pairs += 1
        assert simplehash_stream([a, b])[1].matched_id == a.id
        _, verdicts = dedup_stream([a, b], DedupConfig())
        violations += not (verdicts[1].decision.value == "duplicate" and verdicts[1].matched_id == a.id)
    detail(f"{equal_pairs} pairs equal under whole-sequence hashing, {violations} violations")
    assert equal_pairs == 200
    assert violations == 0


def _repeat_cases(n, seed, k_values, r_bounds):
    rng = np.random.default_rng(seed)
    for i in range(n):
        k = int(k_values[i % len(k_values)])
        r_min, r_max = r_bounds(k)
        d1, d2, reps = repeat_pattern_case(rng, k, r_min, r_max)
        yield i, k, d1, d2, reps


def _check_repeat_cases(cases):
    set_violations = dedup_violations = 0
    for i, k, d1, d2, reps in cases:
        r_len = (len(d2) - len(d1)) // (reps - 2) if reps > 2 else None
        assert r_len is None or k < 2 * r_len
        if shingle(d1, k) != shingle(d2, k):
            set_violations += 1
        docs = [HtmlDocument(f"r{i}a", flat_html(d1).encode()), HtmlDocument(f"r{i}b", flat_html(d2).encode())]
        _, verdicts = dedup_stream(docs, DedupConfig(k=k))
        dedup_violations += verdicts[1].decision.value != "duplicate"
    return set_violations, dedup_violations


@pytest.mark.criterion(7, "repeating-pattern subsumption")
@pytest.mark.xfail(strict=True, reason=(
    "k < 2|R| is not sufficient for equal shingle sets: a window of A R^n B that starts "
    "late in one copy of R only fits inside R R when k <= |R| + 1 (see test_c7b)"))
def test_c7_repeating_pattern(detail):
    # |R| drawn over the whole stated range k/2 < |R| <= k+5
    cases = list(_repeat_cases(200, rng_seed + 7, range(4, 21), lambda k: (k // 2 + 1, k + 5)))
    set_violations, dedup_violations = _check_repeat_cases(cases)
    detail(f"k < 2|R|: {set_violations}/200 shingle-set violations, {dedup_violations}/200 not classified duplicate")
    assert set_violations == 0 and dedup_violations == 0


@pytest.mark.criterion("7b", "repeating pattern, |R| >= k-1")
def test_c7b_repeating_pattern_tight(detail):
    cases = list(_repeat_cases(200, rng_seed + 7, range(4, 21), lambda k: (k - 1, k + 5)))
    set_violations, dedup_violations = _check_repeat_cases(cases)
    detail(f"k <= |R|+1: {set_violations}/200 shingle-set violations, {dedup_violations}/200 not duplicate")
    assert set_violations == 0 and dedup_violations == 0


@pytest.mark.criterion(8, "chain order dependence")
def test_c8_chain(detail):
    states = {d.id: d for d in chain_corpus(7)}
    cfg = DedupConfig(k=1, ell=2000, tau=0.85)
    # the construction: neighbours above the threshold, everything else below
    sets = {i: shingle(dom_sequence(d), 1) for i, d in states.items()}
    for (i, a), (j, b) in itertools.combinations(enumerate(sets.values()), 2):
        assert (exact_jaccard(a, b) >= 0.85) == (j - i == 1)

    forward = [states[f"s{i}"] for i in range(1, 8)]
    alternate = [states[f"s{i}"] for i in (2, 4, 6, 1, 3, 5, 7)]
    _, fv = dedup_stream(forward, cfg)
    _, av = dedup_stream(alternate, cfg)
    n_forward = sum(v.is_new for v in fv)
    n_alternate = sum(v.is_new for v in av)
    detail(f"forward order {n_forward} unique, alternate order {n_alternate} unique")
    assert n_forward == 4
    assert n_alternate == 3


@pytest.mark.criterion(9, "synthetic corpus quality")
def test_c9_synthetic_corpus(default_corpus, detail):
    docs, truth = default_corpus
    start = time.perf_counter()
    # all-pairs exact Jaccard oracle validates separability first
    sets = [shingle(dom_sequence(d), 12) for d in docs]
    intra_min, inter_max = separation(sets, [truth.label(d.id) for d in docs])
    assert intra_min >= 0.9 and inter_max <= 0.4

    _, verdicts = dedup_stream(docs, DedupConfig())
    m = evaluate(verdicts, truth)
    baseline = sum(v.is_new for v in simplehash_stream(docs))
    elapsed = time.perf_counter() - start
    detail(f"oracle intra>={intra_min:.3f} inter<={inter_max:.3f}; unique {m.reported_unique}, "
           f"efficiency {m.efficiency:.3f}, coverage {m.coverage:.3f}; simplehash {baseline} ({elapsed:.1f}s)")
    assert 20 <= m.reported_unique <= 24
    assert m.efficiency >= 0.8
    assert m.coverage >= 0.95
    assert baseline >= 5 * m.reported_unique
    assert elapsed < 60


@pytest.mark.criterion(10, "determinism")
def test_c10_determinism(default_corpus, tmp_path, detail):
    docs, truth = default_corpus
    corpus = tmp_path / "corpus"
    corpus.mkdir()
    for d in docs[:120]:
        (corpus / f"{d.id}.html").write_bytes(d.raw)
    truth.save(tmp_path / "truth.jsonl")
    reports = []
    for name in ("a.json", "b.json"):
        args = ["dedup", "--input", str(corpus), "--truth", str(tmp_path / "truth.jsonl"),
                "--seed", "11", "--deterministic", "--report", str(tmp_path / name)]
        assert main(args) == 0
        reports.append((tmp_path / name).read_bytes())
    assert reports[0] == reports[1]
    assert b"generated_at" not in reports[0]
    detail(f"two deterministic reports byte-identical ({len(reports[0])} bytes)")


@pytest.mark.criterion(11, "throughput")
def test_c11_throughput(default_corpus, tmp_path, detail):
    docs, _ = default_corpus
    corpus = tmp_path / "corpus"
    corpus.mkdir()
    for d in docs:
        (corpus / f"{d.id}.html").write_bytes(d.raw)
    cfg = RunConfig(input=[str(corpus)], workers=1)
    start = time.perf_counter()
    report, code = run_dedup(cfg)
    elapsed = time.perf_counter() - start
    rate = len(docs) / elapsed
    detail(f"{rate:.0f} documents/second end to end, single worker ({elapsed:.2f}s for {len(docs)})")
    assert code == 0 and report["documents"] == 500
    assert rate >= 200
