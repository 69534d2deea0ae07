"""
From a page to a sketch
=======================

A page is reduced to the names of its elements, in document order. Windows
of k consecutive names (shingles) form a set, and a MinHash sketch of that
set estimates Jaccard similarity with other pages.
"""

from importlib import resources

import numpy as np

from domdedup import dom_sequence, estimate_jaccard, exact_jaccard, make_family, shingle, sketch
from domdedup.shingling import windows

# %%
# The bundled sample page is a small results table.
raw = resources.files("domdedup").joinpath("data/sample_table.html").read_bytes()
seq = dom_sequence(raw)
print(" ".join(seq))

# %%
# Its 5-shingles. Repeated table rows produce repeated windows; the set keeps one copy.
seen = []
for w in windows(seq, 5):
    if w not in seen:
        seen.append(w)
for w in seen:
    print("  ", " ".join(w))
print(len(seen), "distinct windows,", shingle(seq, 5).cardinality, "fingerprints")

# %%
# Adding a third row changes nothing at k=5: every window of the longer page
# already occurs in the two-row page.
three_rows = raw.replace(b"</tbody>", b"<tr><td><a>x</a></td><td><span>y</span></td></tr></tbody>")
print("same set with a third row:", shingle(dom_sequence(three_rows), 5) == shingle(seq, 5))

# %%
# Sketch accuracy on random sets with a known overlap.
rng = np.random.default_rng(0)
shared = set(rng.integers(0, 2**63, size=600).tolist())
a = shared | set(rng.integers(0, 2**63, size=200).tolist())
b = shared | set(rng.integers(0, 2**63, size=200).tolist())
for ell in (50, 200, 800):
    fam = make_family(ell, master_seed=1)
    est = estimate_jaccard(sketch(a, fam), sketch(b, fam))
    print(f"ell={ell:4d}  estimate {est.value:.3f}  exact {exact_jaccard(a, b):.3f}")
