"""Walk through the 2D transform on a tiny grid and a realistic frame.

Shows the hand-checkable 2x2 Haar case, then decomposes a synthetic
128 px brightness-temperature field and prints where the energy lives.
"""

import os

import numpy as np

from wavecast import SynthConfig, WaveletSpec, dwt2, gen_synthetic_corpus, idwt2

OUT = os.path.join(os.path.dirname(__file__), "output")
os.makedirs(OUT, exist_ok=True)

# The smallest interesting input: one Haar step on a 2x2 grid. Averages
# and differences, scaled to keep energy.
tiny = np.array([[4.0, 2.0], [2.0, 0.0]])
d = dwt2(tiny, WaveletSpec(family_order=1, levels=1))
print("2x2 input:")
print(tiny)
print(f"approx     {d.approx.ravel()[0]:+.1f}")
print(f"horizontal {d.details[(1, 1)].ravel()[0]:+.1f}")
print(f"vertical   {d.details[(1, 2)].ravel()[0]:+.1f}")
print(f"diagonal   {d.details[(1, 3)].ravel()[0]:+.1f}")
print()

# Now a storm-like field: cold core, warm background, instrument noise.
corpus = gen_synthetic_corpus(
    SynthConfig(n_storms=1, frames_per_storm=13, image_width=128, seed=3)
)
frame = corpus.frames[6]
x = frame.temps.astype(np.float64)
spec = WaveletSpec(family_order=2, levels=3)
decomp = dwt2(x, spec)

total = float(np.sum(x * x))
print(f"frame {frame.storm_id} at {frame.timestamp:%Y-%m-%d %H:%M} UTC, "
      f"{x.shape[0]} px, total energy {total:.3e}")
approx_energy = float(np.sum(decomp.approx ** 2))
detail_energy = total - approx_energy
print(f"  approximation: {100 * approx_energy / total:.4f} % of energy in "
      f"{decomp.approx.size} of {x.size} coefficients")
print(f"  detail:        {100 * detail_energy / total:.4f} %, split across scales as")
for j in range(1, spec.levels + 1):
    e = sum(float(np.sum(decomp.details[(j, k)] ** 2)) for k in (1, 2, 3))
    n = sum(decomp.details[(j, k)].size for k in (1, 2, 3))
    print(f"    scale {j}: {100 * e / detail_energy:5.1f} % of detail energy "
          f"in {n} coefficients")

back = idwt2(decomp)
print(f"round trip max abs error: {np.abs(back - x).max():.3e}")

np.save(os.path.join(OUT, "frame.npy"), x)
np.save(os.path.join(OUT, "approx.npy"), decomp.approx)
print(f"wrote {OUT}/frame.npy and {OUT}/approx.npy")
