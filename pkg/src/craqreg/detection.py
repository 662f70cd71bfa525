"""Keypoint detection over patch grids behind a pluggable backend.

A backend consumes one image patch and returns a quarter-resolution
confidence heatmap plus a quarter-resolution descriptor field. This
module owns everything around that contract: patch planning, heatmap
upsampling, non-maximum suppression, descriptor sampling, and the
merge of per-patch detections into one ranked result.
"""

from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Callable, Protocol

import numpy as np
from scipy.ndimage import maximum_filter

from .errors import ConfigError, EmptyDetection
from .images import ensure_image
from .interp import bicubic_upsample

# Full-resolution suppression radius; matches the x4 head-to-image
# resolution ratio.
NMS_RADIUS = 4

HEAD_FACTOR = 4

DESCRIPTOR_DIM = 128


@dataclass(frozen=True)
class Keypoint:
    x: float
    y: float
    score: float


@dataclass(frozen=True)
class PatchGrid:
    """Tiling of an image into patch_size squares with clamped tails."""

    patch_size: int
    width: int
    height: int
    origins: tuple[tuple[int, int], ...]

    @property
    def patch_extent(self) -> tuple[int, int]:
        return min(self.patch_size, self.width), min(self.patch_size, self.height)


def _origins_1d(extent: int, patch: int) -> list[int]:
    if extent <= patch:
        return [0]
    xs = list(range(0, extent - patch + 1, patch))
    if xs[-1] != extent - patch:
        xs.append(extent - patch)
    return xs


def plan_patches(width: int, height: int, patch_size: int) -> PatchGrid:
    """Plan patch origins covering every pixel.

    Origins step by patch_size; the final row/column is clamped back to
    extent - patch_size so trailing patches overlap instead of reading
    past the edge. Images smaller than patch_size yield a single patch
    clamped to the image extent.
    """
    if width < 1 or height < 1 or patch_size < 1:
        raise ValueError("width, height and patch_size must be >= 1")
    origins = tuple(
        (ox, oy)
        for oy in _origins_1d(height, patch_size)
        for ox in _origins_1d(width, patch_size)
    )
    return PatchGrid(patch_size=patch_size, width=width, height=height, origins=origins)


def upsample_heatmap(heat: np.ndarray, factor: int = HEAD_FACTOR) -> np.ndarray:
    """Bicubic (Catmull-Rom) upsampling of a confidence map, clamped to [0, 1]."""
    out = bicubic_upsample(np.asarray(heat, dtype=float), factor)
    return np.clip(out, 0.0, 1.0)


def nms(heat: np.ndarray, radius: int = NMS_RADIUS) -> tuple[np.ndarray, np.ndarray]:
    """Keep pixels that win their (2r+1)^2 window.

    A pixel survives iff no neighbor in its window has a larger value
    and no equal-valued neighbor precedes it in (y, x) lexicographic
    order. Implemented exactly by packing (value rank, reversed lex id)
    into one integer key and max-filtering the keys.

    Returns (positions, scores): positions is (N, 2) int64 as (x, y) in
    row-major scan order.
    """
    heat = np.asarray(heat, dtype=float)
    if radius < 1:
        raise ValueError("radius must be >= 1")
    h, w = heat.shape
    npix = h * w
    ranks = np.unique(heat, return_inverse=True)[1].reshape(h, w).astype(np.int64)
    lex = np.arange(npix, dtype=np.int64).reshape(h, w)
    key = ranks * npix + (npix - 1 - lex)
    winner = maximum_filter(key, size=2 * radius + 1, mode="constant", cval=-1)
    ys, xs = np.nonzero(key == winner)
    positions = np.column_stack([xs, ys]).astype(np.int64)
    return positions, heat[ys, xs]


def suppress_points(
    positions: np.ndarray, scores: np.ndarray, radius: int
) -> np.ndarray:
    """Greedy point-set NMS: returns indices of survivors.

    Candidates are visited by descending score (ties by (y, x)); a point
    is kept iff no kept point lies within Chebyshev distance ``radius``.
    Output indices are in acceptance order, i.e. already sorted by
    (score desc, y asc, x asc).
    """
    if len(positions) == 0:
        return np.empty(0, dtype=np.int64)
    order = np.lexsort((positions[:, 0], positions[:, 1], -scores))
    cell = radius + 1
    buckets: dict[tuple[int, int], list[int]] = {}
    kept: list[int] = []
    for i in order:
        x, y = int(positions[i, 0]), int(positions[i, 1])
        cx, cy = x // cell, y // cell
        blocked = False
        for ny in (cy - 1, cy, cy + 1):
            for nx in (cx - 1, cx, cx + 1):
                for j in buckets.get((ny, nx), ()):
                    if (
                        abs(positions[j, 0] - x) <= radius
                        and abs(positions[j, 1] - y) <= radius
                    ):
                        blocked = True
                        break
                if blocked:
                    break
            if blocked:
                break
        if not blocked:
            kept.append(i)
            buckets.setdefault((cy, cx), []).append(i)
    return np.asarray(kept, dtype=np.int64)


class DescriptorGrid:
    """Quarter-resolution field of unit descriptors, computed lazily.

    Grid node (row, col) corresponds to full-resolution position
    (HEAD_FACTOR * col, HEAD_FACTOR * row). Backends supply ``node_fn``
    computing a batch of node vectors; results are cached so repeated
    sampling touches each node once.
    """

    def __init__(
        self,
        height: int,
        width: int,
        dim: int,
        node_fn: Callable[[np.ndarray, np.ndarray], np.ndarray],
    ):
        self.height = height
        self.width = width
        self.dim = dim
        self._node_fn = node_fn
        self._cache: dict[int, np.ndarray] = {}

    @classmethod
    def from_array(cls, arr: np.ndarray) -> "DescriptorGrid":
        arr = np.asarray(arr, dtype=float)
        h, w, d = arr.shape

        def node_fn(rows: np.ndarray, cols: np.ndarray) -> np.ndarray:
            return arr[rows, cols]

        return cls(h, w, d, node_fn)

    def nodes(self, rows: np.ndarray, cols: np.ndarray) -> np.ndarray:
        rows = np.asarray(rows, dtype=np.int64)
        cols = np.asarray(cols, dtype=np.int64)
        keys = rows * self.width + cols
        missing = np.array(sorted({int(k) for k in keys} - self._cache.keys()), dtype=np.int64)
        if len(missing):
            vecs = self._node_fn(missing // self.width, missing % self.width)
            for k, v in zip(missing, vecs):
                self._cache[int(k)] = v
        return np.stack([self._cache[int(k)] for k in keys])


def sample_descriptors(grid: DescriptorGrid, positions: np.ndarray) -> np.ndarray:
    """Bilinear descriptor interpolation at full-resolution positions.

    Positions are divided by the head factor, the four surrounding grid
    nodes are blended, and the result is re-normalized to unit length.
    """
    positions = np.asarray(positions, dtype=float)
    gx = positions[:, 0] / HEAD_FACTOR
    gy = positions[:, 1] / HEAD_FACTOR
    x0 = np.clip(np.floor(gx).astype(np.int64), 0, grid.width - 1)
    y0 = np.clip(np.floor(gy).astype(np.int64), 0, grid.height - 1)
    x1 = np.minimum(x0 + 1, grid.width - 1)
    y1 = np.minimum(y0 + 1, grid.height - 1)
    fx = np.clip(gx - x0, 0.0, 1.0)[:, None]
    fy = np.clip(gy - y0, 0.0, 1.0)[:, None]

    v00 = grid.nodes(y0, x0)
    v10 = grid.nodes(y0, x1)
    v01 = grid.nodes(y1, x0)
    v11 = grid.nodes(y1, x1)
    v = (
        v00 * (1.0 - fx) * (1.0 - fy)
        + v10 * fx * (1.0 - fy)
        + v01 * (1.0 - fx) * fy
        + v11 * fx * fy
    )
    norms = np.linalg.norm(v, axis=1, keepdims=True)
    fallback = np.zeros(grid.dim)
    fallback[0] = 1.0
    small = norms[:, 0] < 1e-12
    v[small] = fallback
    norms[small] = 1.0
    return v / norms


def sample_descriptor(grid: DescriptorGrid, pos) -> np.ndarray:
    """Single-position variant of :func:`sample_descriptors`."""
    return sample_descriptors(grid, np.asarray(pos, dtype=float)[None, :])[0]


class DetectionBackend(Protocol):
    name: str
    descriptor_dim: int

    def detect_patch(self, patch: np.ndarray) -> tuple[np.ndarray, DescriptorGrid]:
        """Quarter-resolution heatmap in [0, 1] plus descriptor grid."""
        ...


_BACKENDS: dict[str, Callable[[], DetectionBackend]] = {}


def register_backend(name: str, factory: Callable[[], DetectionBackend]) -> None:
    _BACKENDS[name] = factory


def get_backend(name: str) -> DetectionBackend:
    if name not in _BACKENDS:
        from . import junction  # noqa: F401  (registers the default backend)
    if name not in _BACKENDS:
        raise ConfigError("backend", f"unknown backend {name!r}")
    return _BACKENDS[name]()


@dataclass
class DetectionResult:
    """Ranked keypoints with index-aligned descriptors for one image.

    positions: (N, 2) float64 full-resolution (x, y)
    scores:    (N,) descending
    descriptors: (N, D) unit rows
    """

    positions: np.ndarray
    scores: np.ndarray
    descriptors: np.ndarray

    def __len__(self) -> int:
        return len(self.positions)

    def keypoints(self) -> list[Keypoint]:
        return [
            Keypoint(float(x), float(y), float(s))
            for (x, y), s in zip(self.positions, self.scores)
        ]


def _detect_patch_task(
    patch: np.ndarray,
    origin: tuple[int, int],
    backend_name: str,
    tau_kp: float,
    radius: int,
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    backend = get_backend(backend_name)
    heat_q, grid = backend.detect_patch(patch)
    heat = upsample_heatmap(heat_q, HEAD_FACTOR)
    # the backend may have padded to a multiple of the head factor; crop
    # back so no keypoint lands in replicated padding
    heat = heat[: patch.shape[0], : patch.shape[1]]
    positions, scores = nms(heat, radius)
    keep = scores > tau_kp
    positions, scores = positions[keep], scores[keep]
    if len(positions) == 0:
        return (
            np.empty((0, 2), dtype=np.int64),
            np.empty(0),
            np.empty((0, backend.descriptor_dim)),
        )
    descriptors = sample_descriptors(grid, positions)
    return positions + np.array(origin, dtype=np.int64), scores, descriptors


def _detect_patch_star(args) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    return _detect_patch_task(*args)


def detect_image(img: np.ndarray, cfg, workers: int = 1) -> DetectionResult:
    """Detect keypoints over the full image via its patch grid.

    Patches are processed independently (optionally in a process pool),
    keypoints are shifted to global coordinates, overlap duplicates are
    removed by point-set NMS at the same radius, and the result is
    filtered to score > tau_kp, sorted by descending score and truncated
    to n_max.

    Raises EmptyDetection when nothing passes the threshold.
    """
    img = ensure_image(img)
    h, w = img.shape[:2]
    grid = plan_patches(w, h, cfg.patch_size)
    pw, ph = grid.patch_extent
    tasks = [
        (
            np.ascontiguousarray(img[oy : oy + ph, ox : ox + pw]),
            (ox, oy),
            cfg.backend,
            cfg.tau_kp,
            NMS_RADIUS,
        )
        for ox, oy in grid.origins
    ]
    if workers <= 1 or len(tasks) == 1:
        parts = [_detect_patch_star(t) for t in tasks]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(_detect_patch_star, tasks))

    positions = np.concatenate([p[0] for p in parts])
    scores = np.concatenate([p[1] for p in parts])
    descriptors = np.concatenate([p[2] for p in parts])
    if len(positions) == 0:
        raise EmptyDetection(f"no keypoint with score > {cfg.tau_kp}")

    kept = suppress_points(positions, scores, NMS_RADIUS)
    kept = kept[: cfg.n_max]
    return DetectionResult(
        positions=positions[kept].astype(float),
        scores=scores[kept],
        descriptors=descriptors[kept],
    )
