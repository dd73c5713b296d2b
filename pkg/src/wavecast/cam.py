"""Class-activation maps for the GAP + linear classifier.

Because pooling is a plain spatial mean and the head is linear, the
class score decomposes over locations: CAM(y, x) = sum_c w[class, c] *
A_c(y, x) on the final conv features. The overlay is that grid
bilinearly upsampled to the input resolution; in wavelet input mode the
overlay can then be cut along the nested-quadrant layout to see which
scale and orientation the model attended to.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, DomainError
from .model import TrainedModel, final_conv_features
from .wavelets import WaveletSpec, subband_layout


@dataclass(frozen=True)
class CamGrid:
    """Activation weights at feature resolution plus the input-size overlay."""

    weights: np.ndarray
    overlay: np.ndarray
    class_index: int

    def __post_init__(self):
        if not (np.all(np.isfinite(self.weights)) and np.all(np.isfinite(self.overlay))):
            raise DomainError("non-finite activation map")


def bilinear_upsample(grid: np.ndarray, out_h: int, out_w: int) -> np.ndarray:
    """Separable bilinear resize with half-pixel centers and edge clamping."""
    grid = np.asarray(grid, dtype=np.float64)
    in_h, in_w = grid.shape
    ys = (np.arange(out_h) + 0.5) * in_h / out_h - 0.5
    xs = (np.arange(out_w) + 0.5) * in_w / out_w - 0.5
    # Interpolate along columns, then along rows; np.interp clamps ends.
    cols = np.empty((in_h, out_w))
    src_x = np.arange(in_w, dtype=np.float64)
    for r in range(in_h):
        cols[r] = np.interp(xs, src_x, grid[r])
    out = np.empty((out_h, out_w))
    src_y = np.arange(in_h, dtype=np.float64)
    for c in range(out_w):
        out[:, c] = np.interp(ys, src_y, cols[:, c])
    return out


def compute_cam(model: TrainedModel, sample, class_index: int = 1) -> CamGrid:
    """Weighted sum of final conv features by the class's head weights.

    Only the conv part of the head row is used; env-branch weights do
    not touch the spatial map.
    """
    if class_index not in (0, 1):
        raise DomainError(f"class_index must be 0 or 1, got {class_index}")
    feats = final_conv_features(model, sample)
    n_chan = feats.shape[0]
    w_row = model.params["head.w"][class_index, :n_chan]
    weights = np.tensordot(w_row, feats, axes=1)
    overlay = bilinear_upsample(weights, model.input_width, model.input_width)
    return CamGrid(weights=weights, overlay=overlay, class_index=class_index)


def cam_to_subbands(cam: CamGrid, spec: WaveletSpec) -> dict:
    """Cut the overlay along the nested-quadrant layout; the slices tile
    the overlay exactly. Only meaningful for wavelet-mode inputs."""
    side = cam.overlay.shape[0]
    if cam.overlay.shape[0] != cam.overlay.shape[1]:
        raise ConfigError("overlay must be square to slice by subband")
    spec.validate_width(side)
    slices = {}
    for (j, k), (r0, c0, w) in subband_layout(side, spec.levels).items():
        slices[(j, k)] = cam.overlay[r0:r0 + w, c0:c0 + w].copy()
    return slices


def write_cam_csv(cam: CamGrid, path) -> None:
    """Overlay grid as CSV rows, shortest round-trip decimals."""
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        for row in cam.overlay:
            writer.writerow([repr(float(v)) for v in row])


def write_pgm(grid: np.ndarray, path) -> None:
    """8-bit binary PGM, min-max scaled; flat grids render mid-gray."""
    grid = np.asarray(grid, dtype=np.float64)
    lo, hi = float(grid.min()), float(grid.max())
    if hi > lo:
        scaled = np.round((grid - lo) / (hi - lo) * 255.0)
    else:
        scaled = np.full_like(grid, 128.0)
    data = scaled.astype(np.uint8)
    with open(path, "wb") as fh:
        fh.write(f"P5\n{grid.shape[1]} {grid.shape[0]}\n255\n".encode("ascii"))
        fh.write(data.tobytes())
