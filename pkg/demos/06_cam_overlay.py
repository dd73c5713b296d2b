"""Ask the trained model where it looked.

The class activation map is the class-weighted sum of the last conv
features, upsampled to input size. In wavelet mode the input plane is
the nested-quadrant coefficient grid, so slicing the overlay along the
layout attributes evidence to individual subbands.
"""

import os

import numpy as np

from wavecast import (
    ClassifierConfig,
    SynthConfig,
    WaveletSpec,
    build_sequences,
    cam_to_subbands,
    compute_cam,
    compute_ri_labels,
    gen_synthetic_corpus,
    score_samples,
    sparsify_frame,
    train,
    write_pgm,
)

OUT = os.path.join(os.path.dirname(__file__), "output")
os.makedirs(OUT, exist_ok=True)

spec = WaveletSpec(family_order=2, levels=3)
corpus = gen_synthetic_corpus(
    SynthConfig(n_storms=12, frames_per_storm=16, image_width=64, seed=4)
)
labels = [lab for t in corpus.tracks for lab in compute_ri_labels(t)]
frames = [sparsify_frame(f, spec, q=0.10) for f in corpus.frames]
samples = build_sequences(frames, labels).samples
model = train(samples, ClassifierConfig(epochs=10, seed=0))

# Pick the positive sample the model is most confident about.
posteriors = score_samples(model, samples)
positives = [i for i, s in enumerate(samples) if s.label == 1]
best = max(positives, key=lambda i: posteriors[i])
sample = samples[best]
print(f"CAM for {sample.storm_id} at {sample.t:%Y-%m-%d %H:%M}Z, "
      f"posterior {posteriors[best]:.3f}")

cam = compute_cam(model, sample, class_index=1)
print(f"feature grid {cam.weights.shape}, overlay {cam.overlay.shape}")

slices = cam_to_subbands(cam, spec)
ranked = sorted(slices.items(), key=lambda kv: -np.abs(kv[1]).mean())
print("\nmean |activation| by subband:")
names = {0: "approx", 1: "horiz", 2: "vert", 3: "diag"}
for (j, k), grid in ranked:
    print(f"  scale {j} {names[k]:6s} {np.abs(grid).mean():9.4f}")

pgm = os.path.join(OUT, "cam.pgm")
write_pgm(cam.overlay, pgm)
print(f"\nwrote {pgm} (any image viewer opens it)")
