"""
Scan order matters
==================

Near-duplication is not transitive. In a chain s1 .. s7 where only neighbours
are similar enough, the number of states kept depends on which arrive first.
"""

from domdedup import DedupConfig, dedup_stream, dom_sequence, exact_jaccard, shingle
from domdedup.corpus import chain_corpus

states = {d.id: d for d in chain_corpus(7)}
sets = {i: shingle(dom_sequence(d), 1) for i, d in states.items()}
print("J(s1, s2) =", round(exact_jaccard(sets["s1"], sets["s2"]), 3))
print("J(s1, s3) =", round(exact_jaccard(sets["s1"], sets["s3"]), 3))

# %%
cfg = DedupConfig(k=1, ell=2000, tau=0.85)
for order in (["s1", "s2", "s3", "s4", "s5", "s6", "s7"], ["s2", "s4", "s6", "s1", "s3", "s5", "s7"]):
    _, verdicts = dedup_stream([states[i] for i in order], cfg)
    kept = [v.probe_id for v in verdicts if v.is_new]
    print(" ".join(order), "->", len(kept), "kept:", kept)
