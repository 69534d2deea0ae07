"""
Deduplicating a stream of states
================================

Generate a labelled corpus of 20 application states with 25 noisy views each,
stream it through the bucket index and score the result against the labels.
"""

import time

from domdedup import DedupConfig, dedup_stream, evaluate, simplehash_stream
from domdedup.corpus import CorpusSpec, generate_corpus

docs, truth = generate_corpus(CorpusSpec(), seed=0)
print(len(docs), "documents,", truth.true_state_count, "true states")

# %%
start = time.perf_counter()
index, verdicts = dedup_stream(docs, DedupConfig(k=12, ell=200, tau=0.85))
elapsed = time.perf_counter() - start
m = evaluate(verdicts, truth)
print(f"minhash:    {m.reported_unique} reported, efficiency {m.efficiency:.2f}, "
      f"coverage {m.coverage:.2f}  ({len(docs) / elapsed:.0f} docs/s)")
print("largest bucket:", index.max_bucket_size())

# %%
# A few verdicts: each duplicate names the representative it matched.
for v in verdicts[20:25]:
    print(f"  {v.probe_id}  {v.decision.value:9s} -> {v.matched_id}  ({v.similarity:.2f})")

# %%
# Hashing the whole element sequence treats every small edit as a new state.
baseline = evaluate(simplehash_stream(docs), truth)
print(f"simplehash: {baseline.reported_unique} reported, efficiency {baseline.efficiency:.2f}")
