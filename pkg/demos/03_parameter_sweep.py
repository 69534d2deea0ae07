"""
Choosing k and tau
==================

Long shingles make comparison strict: one inserted element disturbs up to
2k-1 windows, so noisy views of the same state drift apart. The threshold
tau trades merges against splits in the same way.
"""

import os
import tempfile

from domdedup.cli import RunConfig, sweep
from domdedup.corpus import CorpusSpec, generate_corpus

docs, truth = generate_corpus(CorpusSpec(), seed=0)
with tempfile.TemporaryDirectory() as tmp:
    truth_path = os.path.join(tmp, "truth.jsonl")
    truth.save(truth_path)
    rows = sweep(RunConfig(truth=truth_path), [4, 8, 12, 24, 40], [200], [0.7, 0.85, 0.95], docs=docs)

# %%
print(" k    tau   reported  efficiency  coverage")
for r in rows:
    print(f"{r['k']:2d}  {r['tau']:.2f}  {r['reported_unique']:8d}  {r['efficiency']:10.3f}  {r['coverage']:8.3f}")
