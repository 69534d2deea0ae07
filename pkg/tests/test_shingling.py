import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from domdedup import BothEmpty, InvalidParam, ShingleParams, exact_jaccard, shingle
from domdedup.shingling import short_fingerprint, window_fingerprint, windows

TAGS = ["div", "span", "a", "p", "li", "ul", "td", "tr"]
token_lists = st.lists(st.sampled_from(TAGS), max_size=60)


def test_sequence_of_length_k_has_one_shingle():
    seq = ["a", "b", "c", "d", "e"]
    assert shingle(seq, 5).cardinality == 1
    assert shingle(seq, 5) == {window_fingerprint(seq)}


def test_naive_window_oracle():
    rng = np.random.default_rng(0)
    seq = [TAGS[i] for i in rng.integers(len(TAGS), size=200)]
    naive = {tuple(seq[i : i + 12]) for i in range(len(seq) - 11)}
    got = shingle(seq, 12)
    assert got.cardinality == len(naive)
    assert got == {window_fingerprint(w) for w in naive}


@given(token_lists, st.integers(1, 15))
def test_windows_match_enumeration(seq, k):
    ws = list(windows(seq, k))
    assert ws == [tuple(seq[i : i + k]) for i in range(len(seq) - k + 1)]
    p = shingle(seq, k)
    if len(seq) >= k:
        assert p == {window_fingerprint(w) for w in ws}
    else:
        assert p == {short_fingerprint(tuple(seq))}


@given(token_lists, st.sampled_from(TAGS), st.integers(1, 10))
def test_append_adds_at_most_one_shingle(seq, tag, k):
    before = shingle(seq, k)
    after = shingle(seq + [tag], k)
    if len(seq) >= k:
        assert before <= after
        assert len(after - before) <= 1


def test_separator_prevents_ambiguity():
    assert window_fingerprint(["ab", "c"]) != window_fingerprint(["a", "bc"])


def test_short_documents_compare_by_equality():
    assert shingle(["div", "p"], 12) == shingle(["div", "p"], 12)
    assert shingle(["div", "p"], 12) != shingle(["p", "div"], 12)
    # an empty sequence still has a (single) shingle
    assert shingle([], 3).cardinality == 1
    # a short document never collides with a window of the same tokens
    assert short_fingerprint(("a", "b")) != window_fingerprint(("a", "b"))


def test_fingerprints_are_stable():
    # frozen values: fingerprints are part of the persisted format
    assert window_fingerprint(("html", "head")) == 18236203392279701816
    assert short_fingerprint(()) == 15775406435462968254


def test_params_validation():
    with pytest.raises(InvalidParam):
        ShingleParams(0)
    with pytest.raises(InvalidParam):
        shingle(["a"], -1)
    assert shingle(["a", "b", "c"], ShingleParams(2)) == shingle(["a", "b", "c"], 2)


class TestExactJaccard:
    def test_identical(self):
        assert exact_jaccard({1, 2}, {1, 2}) == 1.0

    def test_disjoint(self):
        assert exact_jaccard({1, 2}, {3}) == 0.0

    def test_half(self):
        assert exact_jaccard({"x", "y", "z"}, {"y", "z", "w"}) == 0.5

    def test_both_empty(self):
        with pytest.raises(BothEmpty):
            exact_jaccard(set(), set())

    def test_one_empty(self):
        assert exact_jaccard(set(), {1}) == 0.0

    @given(st.sets(st.integers(0, 30)), st.sets(st.integers(0, 30)))
    def test_properties(self, a, b):
        if not a and not b:
            return
        j = exact_jaccard(a, b)
        assert 0.0 <= j <= 1.0
        assert j == exact_jaccard(b, a)
        if a:
            assert exact_jaccard(a, a) == 1.0
