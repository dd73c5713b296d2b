"""Generate a seeded synthetic corpus and look at what is inside.

Every storm gets a 6-hourly track and one IR frame per record; a
configured fraction of storms carry a fast intensity ramp that the
labeling rule later picks up as RI. Same seed, same bytes.
"""

import os

import numpy as np

from wavecast import SynthConfig, compute_ri_labels, gen_synthetic_corpus, write_corpus

OUT = os.path.join(os.path.dirname(__file__), "output", "corpus")

cfg = SynthConfig(n_storms=6, frames_per_storm=16, image_width=64,
                  noise_sd=2.0, ri_fraction=0.3, seed=7)
corpus = gen_synthetic_corpus(cfg)

print(f"{len(corpus.tracks)} storms, {len(corpus.frames)} frames, "
      f"{len(corpus.ri_storm_ids)} built to intensify\n")

for track in corpus.tracks:
    winds = [r.max_wind_kt for r in track.records]
    tag = "RI" if track.storm_id in corpus.ri_storm_ids else "  "
    print(f"{track.storm_id} {tag} winds {winds[0]:3d}..{max(winds):3d} kt: "
          + " ".join(f"{w:3d}" for w in winds))

labels = [lab for t in corpus.tracks for lab in compute_ri_labels(t)]
positives = sum(lab.label for lab in labels)
print(f"\n{len(labels)} labeled times, {positives} positive "
      f"({100 * positives / len(labels):.0f} %)")

# The cold core deepens as the storm intensifies; compare mean core
# temperature on the first and last frame of one intensifier.
ri_id = sorted(corpus.ri_storm_ids)[0]
frames = [f for f in corpus.frames if f.storm_id == ri_id]
c = frames[0].width // 2
core = slice(c - 8, c + 8)
first = float(np.mean(frames[0].temps[core, core]))
last = float(np.mean(frames[-1].temps[core, core]))
print(f"\n{ri_id} core 16x16 mean temp: {first:.1f} K first frame, "
      f"{last:.1f} K last frame")

write_corpus(corpus, OUT)
print(f"wrote corpus to {OUT}")
