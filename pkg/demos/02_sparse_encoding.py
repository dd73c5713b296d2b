"""Sweep the kept fraction q and watch reconstruction quality degrade.

The sparse encoding keeps the top q of coefficients by magnitude, then
drops fine-scale detail outside a central disc. This script prints the
actual retained fraction and the image-space RMSE for a few settings
and writes one sparse file for inspection.
"""

import os

import numpy as np

from wavecast import (
    RadialMaskSpec,
    SynthConfig,
    WaveletSpec,
    compression_ratio,
    gen_synthetic_corpus,
    reconstruct,
    sparsify_frame,
    write_wsc,
)

OUT = os.path.join(os.path.dirname(__file__), "output")
os.makedirs(OUT, exist_ok=True)

spec = WaveletSpec(family_order=2, levels=3)
corpus = gen_synthetic_corpus(
    SynthConfig(n_storms=1, frames_per_storm=13, image_width=128, seed=12)
)
frame = corpus.frames[8]
x = frame.temps.astype(np.float64)

print(f"{frame.storm_id} {frame.timestamp:%Y-%m-%dT%H:%M}Z  "
      f"temps {x.min():.1f}..{x.max():.1f} K")
print(f"{'q':>6} {'kept':>6} {'ratio':>8} {'rmse K':>8}")
for q in (0.50, 0.20, 0.10, 0.05, 0.02):
    s = sparsify_frame(frame, spec, q=q, mask=RadialMaskSpec(r_frac=0.25))
    err = np.sqrt(np.mean((reconstruct(s) - x) ** 2))
    print(f"{q:6.2f} {len(s):6d} {compression_ratio(s):8.4f} {err:8.3f}")

# Defaults are q=0.10 with the disc mask at the finest scale; that is
# the setting the dataset builder uses.
s = sparsify_frame(frame, spec, q=0.10)
path = os.path.join(OUT, "frame.wsc")
write_wsc(s, path)
print(f"\nwrote {path} ({len(s)} entries, ratio {compression_ratio(s):.4f})")
print("header + first entries:")
with open(path) as fh:
    for line in list(fh)[:4]:
        print(" ", line.rstrip())
