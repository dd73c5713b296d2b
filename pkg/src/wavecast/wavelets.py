"""Fast 2D orthogonal Daubechies wavelet transform.

The forward transform is the standard Mallat cascade: at each level the
current approximation is filtered and downsampled along rows and then
columns, producing a coarser approximation plus three directional
detail subbands (horizontal, vertical, diagonal). Subbands are
critically sampled, so the decomposition holds exactly as many
coefficients as the image has pixels.

Filters follow the orthonormal convention (unit-energy basis
functions), so with periodic extension the transform is an orthogonal
change of basis: energy is conserved and the inverse is the transpose.
Symmetric extension is also accepted; it stays critically sampled by
using the adjoint as the inverse, which reconstructs exactly in the
interior but only approximately near the edges (exactly, for the Haar
filter). Every exactness guarantee in this module is stated for the
periodic mode.

Scale index ``j`` runs from 1 (finest) to ``levels`` (coarsest); a
subband at scale ``j`` has width ``image_width / 2**j``. Orientation
``k`` is 0 for the approximation (scale ``levels`` only), 1 for
horizontal structure (smooth along x, detail along y), 2 for vertical,
3 for diagonal.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, DomainError, ShapeError

ORIENT_APPROX = 0
ORIENT_HORIZONTAL = 1
ORIENT_VERTICAL = 2
ORIENT_DIAGONAL = 3

EXTENSIONS = ("periodic", "symmetric")

MAX_ORDER = 10


def daubechies_filters(order: int) -> tuple[np.ndarray, np.ndarray]:
    """Orthonormal Daubechies analysis filters of the given order.

    Parameters
    ----------
    order : int
        Number of vanishing moments ``p`` in 1..10; the filters have
        length ``2p``. Order 1 is the Haar pair.

    Returns
    -------
    (h, g) : tuple of ndarray
        Lowpass and highpass analysis filters. ``h`` is the extremal
        phase (minimum phase) solution with ``sum(h) = sqrt(2)`` and
        ``sum(h**2) = 1``; ``g`` is its quadrature mirror
        ``g[m] = (-1)**m h[2p-1-m]``.
    """
    if not 1 <= order <= MAX_ORDER:
        raise ConfigError(f"wavelet order must be in 1..{MAX_ORDER}, got {order}")
    if order == 1:
        h = np.array([1.0, 1.0]) / math.sqrt(2.0)
    else:
        p = order
        # Roots of the degree p-1 polynomial sum_k C(p-1+k, k) y^k give
        # the zeros of the product filter away from z = -1; each maps to
        # a reciprocal pair in z, of which the root inside the unit
        # circle is kept (spectral factorization, extremal phase).
        binom = np.array([math.comb(p - 1 + k, k) for k in range(p)], dtype=float)
        y_roots = np.roots(binom[::-1])
        z_roots = []
        for y in y_roots:
            c = 1.0 - 2.0 * y
            s = np.sqrt(c * c - 1.0 + 0.0j)
            z1, z2 = c + s, c - s
            z_roots.append(z1 if abs(z1) < 1.0 else z2)
        coeffs = np.poly([-1.0] * p + z_roots)
        h = np.real(coeffs)
        h *= math.sqrt(2.0) / h.sum()
    g = _quadrature_mirror(h)
    return h, g


def _quadrature_mirror(h: np.ndarray) -> np.ndarray:
    signs = np.where(np.arange(h.size) % 2 == 0, 1.0, -1.0)
    return signs * h[::-1]


@dataclass(frozen=True)
class WaveletSpec:
    """Transform parameters: filter family order, depth, boundary mode."""

    family_order: int = 2
    levels: int = 3
    extension: str = "periodic"

    def __post_init__(self):
        if not 1 <= self.family_order <= MAX_ORDER:
            raise ConfigError(
                f"family_order must be in 1..{MAX_ORDER}, got {self.family_order}"
            )
        if self.levels < 1:
            raise ConfigError(f"levels must be >= 1, got {self.levels}")
        if self.extension not in EXTENSIONS:
            raise ConfigError(
                f"extension must be one of {EXTENSIONS}, got {self.extension!r}"
            )

    @property
    def filter_length(self) -> int:
        return 2 * self.family_order

    def validate_width(self, width: int) -> None:
        block = 1 << self.levels
        if width < block or width % block != 0:
            raise ShapeError(
                f"image width {width} must be >= {block} and divisible by "
                f"{block} for {self.levels} levels"
            )
        if self.filter_length > width:
            raise ShapeError(
                f"filter length {self.filter_length} exceeds image width {width}"
            )


class WaveletDecomposition:
    """Dense multi-level subband pyramid produced by :func:`dwt2`.

    Attributes
    ----------
    approx : ndarray
        Coarse approximation, shape ``(width/2**levels,)**2``.
    details : dict
        Maps ``(scale, orientation)`` with orientation in {1, 2, 3} to a
        subband array of shape ``(width/2**scale,)**2``.
    spec : WaveletSpec
    width : int
        Side length of the source image.
    """

    def __init__(self, approx: np.ndarray, details: dict, spec: WaveletSpec, width: int):
        spec.validate_width(width)
        coarse = width >> spec.levels
        approx = np.asarray(approx, dtype=float)
        if approx.shape != (coarse, coarse):
            raise ShapeError(f"approx shape {approx.shape}, expected {(coarse, coarse)}")
        expected_keys = {
            (j, k) for j in range(1, spec.levels + 1) for k in (1, 2, 3)
        }
        if set(details.keys()) != expected_keys:
            raise ShapeError(
                f"detail subbands {sorted(details.keys())} do not cover "
                f"scales 1..{spec.levels} x orientations 1..3"
            )
        clean = {}
        for (j, k), band in details.items():
            band = np.asarray(band, dtype=float)
            side = width >> j
            if band.shape != (side, side):
                raise ShapeError(
                    f"subband ({j},{k}) shape {band.shape}, expected {(side, side)}"
                )
            clean[(j, k)] = band
        self.approx = approx
        self.details = clean
        self.spec = spec
        self.width = width

    def subbands(self):
        """Iterate ``((scale, orientation), array)`` in canonical order,
        finest detail scale first, approximation last."""
        for j in range(1, self.spec.levels + 1):
            for k in (1, 2, 3):
                yield (j, k), self.details[(j, k)]
        yield (self.spec.levels, 0), self.approx

    def coefficient_count(self) -> int:
        return self.width * self.width

    def energy(self) -> float:
        total = float(np.sum(self.approx**2))
        for band in self.details.values():
            total += float(np.sum(band**2))
        return total

    def to_array(self) -> np.ndarray:
        """Pack all subbands into one image-sized grid in the nested
        quadrant layout (approximation in the top-left corner)."""
        out = np.zeros((self.width, self.width))
        for (j, k), band in self.subbands():
            r0, c0, side = subband_placement(self.width, self.spec.levels, j, k)
            out[r0 : r0 + side, c0 : c0 + side] = band
        return out

    @classmethod
    def from_array(cls, grid: np.ndarray, spec: WaveletSpec) -> "WaveletDecomposition":
        grid = np.asarray(grid, dtype=float)
        if grid.ndim != 2 or grid.shape[0] != grid.shape[1]:
            raise ShapeError(f"expected a square grid, got {grid.shape}")
        width = grid.shape[0]
        spec.validate_width(width)
        details = {}
        approx = None
        for j in range(1, spec.levels + 1):
            for k in (0, 1, 2, 3):
                if k == 0 and j != spec.levels:
                    continue
                r0, c0, side = subband_placement(width, spec.levels, j, k)
                block = grid[r0 : r0 + side, c0 : c0 + side].copy()
                if k == 0:
                    approx = block
                else:
                    details[(j, k)] = block
        return cls(approx, details, spec, width)


def subband_placement(width: int, levels: int, scale: int, orientation: int):
    """Top-left corner and side length of a subband in the nested
    quadrant layout. Horizontal detail sits below the coarser block,
    vertical to its right, diagonal on the corner."""
    side = width >> scale
    if orientation == ORIENT_APPROX:
        if scale != levels:
            raise ShapeError("approximation lives at the coarsest scale only")
        return 0, 0, side
    if orientation == ORIENT_HORIZONTAL:
        return side, 0, side
    if orientation == ORIENT_VERTICAL:
        return 0, side, side
    if orientation == ORIENT_DIAGONAL:
        return side, side, side
    raise ShapeError(f"orientation {orientation} not in 0..3")


def subband_layout(width: int, levels: int) -> dict:
    """All ``(scale, orientation) -> (row0, col0, side)`` placements."""
    layout = {(levels, 0): subband_placement(width, levels, levels, 0)}
    for j in range(1, levels + 1):
        for k in (1, 2, 3):
            layout[(j, k)] = subband_placement(width, levels, j, k)
    return layout


def _wrap(indices: np.ndarray, n: int, extension: str) -> np.ndarray:
    if extension == "periodic":
        return indices % n
    # Half-point symmetric reflection with the edge sample repeated,
    # folded with period 2n so arbitrarily long filters stay in range.
    t = indices % (2 * n)
    return np.where(t < n, t, 2 * n - 1 - t)


def _analyze_last_axis(x, h, g, extension):
    """Filter and downsample along the last axis: returns (low, high)."""
    n = x.shape[-1]
    half = n // 2
    idx = 2 * np.arange(half)[:, None] + np.arange(h.size)[None, :]
    idx = _wrap(idx, n, extension)
    windows = x[..., idx]
    return windows @ h, windows @ g


def _synthesize_last_axis(low, high, h, g, extension, n):
    """Adjoint of :func:`_analyze_last_axis`; exact inverse for the
    periodic mode."""
    half = n // 2
    flat_low = low.reshape(-1, half)
    flat_high = high.reshape(-1, half)
    out = np.zeros((flat_low.shape[0], n))
    base = 2 * np.arange(half)
    rows = np.arange(flat_low.shape[0])[:, None]
    for m in range(h.size):
        cols = _wrap(base + m, n, extension)
        contrib = flat_low * h[m] + flat_high * g[m]
        if extension == "periodic":
            # 2i + m are distinct mod n for fixed m, so plain fancy
            # indexing accumulates safely.
            out[:, cols] += contrib
        else:
            np.add.at(out, (rows, cols[None, :]), contrib)
    return out.reshape(low.shape[:-1] + (n,))


def _analyze_level(a, h, g, extension):
    lo_x, hi_x = _analyze_last_axis(a, h, g, extension)
    ll, hl = _analyze_last_axis(np.swapaxes(lo_x, -1, -2), h, g, extension)
    lh, hh = _analyze_last_axis(np.swapaxes(hi_x, -1, -2), h, g, extension)
    # swap back so rows are y again; hl carries detail along y.
    return (
        np.swapaxes(ll, -1, -2),
        np.swapaxes(hl, -1, -2),  # horizontal: smooth x, detail y
        np.swapaxes(lh, -1, -2),  # vertical: detail x, smooth y
        np.swapaxes(hh, -1, -2),  # diagonal
    )


def _synthesize_level(ll, horiz, vert, diag, h, g, extension):
    n = 2 * ll.shape[-1]
    # Undo the column (y) filtering first, then the row (x) filtering.
    lo_x = _synthesize_last_axis(
        np.swapaxes(ll, -1, -2), np.swapaxes(horiz, -1, -2), h, g, extension, n
    )
    hi_x = _synthesize_last_axis(
        np.swapaxes(vert, -1, -2), np.swapaxes(diag, -1, -2), h, g, extension, n
    )
    lo_x = np.swapaxes(lo_x, -1, -2)
    hi_x = np.swapaxes(hi_x, -1, -2)
    return _synthesize_last_axis(lo_x, hi_x, h, g, extension, n)


def dwt2(image: np.ndarray, spec: WaveletSpec) -> WaveletDecomposition:
    """Multi-level 2D discrete wavelet transform of a square image.

    Parameters
    ----------
    image : ndarray
        Square 2D array of finite values; the side length must be at
        least ``2**spec.levels`` and divisible by it.
    spec : WaveletSpec

    Returns
    -------
    WaveletDecomposition
        Approximation plus three detail subbands per scale. With
        periodic extension the map is orthogonal, so coefficient energy
        equals pixel energy to rounding.
    """
    image = np.asarray(image, dtype=float)
    if image.ndim != 2 or image.shape[0] != image.shape[1]:
        raise ShapeError(f"expected a square 2D image, got shape {image.shape}")
    spec.validate_width(image.shape[0])
    if not np.all(np.isfinite(image)):
        raise DomainError("image contains non-finite values")

    h, g = daubechies_filters(spec.family_order)
    details = {}
    a = image
    for j in range(1, spec.levels + 1):
        a, horiz, vert, diag = _analyze_level(a, h, g, spec.extension)
        details[(j, 1)] = horiz
        details[(j, 2)] = vert
        details[(j, 3)] = diag
    return WaveletDecomposition(a, details, spec, image.shape[0])


def idwt2(decomp: WaveletDecomposition) -> np.ndarray:
    """Inverse of :func:`dwt2`; exact (to rounding) for periodic
    extension, approximate near edges for symmetric extension."""
    spec = decomp.spec
    h, g = daubechies_filters(spec.family_order)
    a = decomp.approx
    for j in range(spec.levels, 0, -1):
        a = _synthesize_level(
            a,
            decomp.details[(j, 1)],
            decomp.details[(j, 2)],
            decomp.details[(j, 3)],
            h,
            g,
            spec.extension,
        )
    return a
