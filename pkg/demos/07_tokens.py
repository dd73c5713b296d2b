"""Turn sparse coefficients into discrete tokens and back.

The vocabulary is fitted once on pooled training coefficients: bin
edges at the k/V quantiles, one median representative per bin. Each
kept coefficient then becomes (position id, token), the form a sequence
model downstream would consume.
"""

import os
from collections import Counter

import numpy as np

from wavecast import (
    SynthConfig,
    WaveletSpec,
    decode,
    encode,
    fit_vocab,
    gen_synthetic_corpus,
    position_coords,
    sparsify_frame,
    write_tokens,
    write_vocab,
)

OUT = os.path.join(os.path.dirname(__file__), "output")
os.makedirs(OUT, exist_ok=True)

spec = WaveletSpec(family_order=2, levels=3)
corpus = gen_synthetic_corpus(
    SynthConfig(n_storms=8, frames_per_storm=14, image_width=64, seed=9)
)
sparse = [sparsify_frame(f, spec, q=0.10) for f in corpus.frames]

pool = np.concatenate([s.value for s in sparse[:80]])
for v in (16, 64):
    vocab = fit_vocab(pool, v)
    errs = []
    for s in sparse[80:]:
        back = decode(encode(s, vocab), vocab)
        errs.append(np.sqrt(np.mean((back.value - s.value) ** 2)))
    print(f"V={v:3d}: fitted on {vocab.fitted_on} coefficients, "
          f"held-out RMSE {np.mean(errs):8.3f}")

vocab = fit_vocab(pool, 64)
s = sparse[100]
seq = encode(s, vocab)
print(f"\n{s.storm_id} {s.timestamp:%Y-%m-%dT%H:%M}Z: "
      f"{len(s)} entries -> {len(seq)} tokens")

common = Counter(tok for _, tok in seq.tokens).most_common(3)
print("most common tokens:", ", ".join(f"{t} (x{n})" for t, n in common))
pid, tok = seq.tokens[0]
frame_i, j, k, r, c = position_coords(pid, seq.width, spec.levels)
print(f"first token: id {pid} -> scale {j}, orientation {k}, "
      f"row {r}, col {c}, token {tok} ~ {vocab.reps[tok]:.2f}")

write_vocab(vocab, os.path.join(OUT, "vocab.json"))
write_tokens(seq, os.path.join(OUT, "frame.tok"))
print(f"wrote {OUT}/vocab.json and {OUT}/frame.tok")
