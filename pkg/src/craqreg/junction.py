"""Classical crack-junction detection backend.

Branching points of the crack network are landmarks that survive the
modality change between capture systems, because the cracks themselves
are physical structure rather than depicted content. This backend finds
them with plain morphology: a ridge-strength map from black-hat
filtering (run on both polarities so dark and bright thin lines score
alike), skeletonization, and branch-point marking. Descriptors are
gradient-orientation histograms of the strength map, not of raw
intensity, which keeps them stable across modalities.

Satisfies the quarter-resolution heatmap + descriptor-grid contract of
:mod:`craqreg.detection`, so a learned backend can replace it without
touching the pipeline.
"""

from __future__ import annotations

import numpy as np
from scipy.ndimage import gaussian_filter, grey_closing, uniform_filter

from .detection import DESCRIPTOR_DIM, DescriptorGrid, HEAD_FACTOR, register_backend
from .images import ensure_image, luma

STRENGTH_DISK_RADIUS = 3
STRENGTH_PERCENTILE = 99.5
BINARIZE_WINDOW = 31
BINARIZE_OFFSET = 0.05
MIN_BRANCH_DEGREE = 3
HEAT_SPREAD_SIGMA = 1.5

DESC_WINDOW = 32          # full-resolution window side
DESC_CELLS = 4            # spatial cells per side
DESC_BINS = 8             # orientation bins
DESC_SIGMA = 8.0          # Gaussian window weight
DESC_CLAMP = 0.2


def _disk(radius: int) -> np.ndarray:
    r = np.arange(-radius, radius + 1)
    dx, dy = np.meshgrid(r, r)
    return (dx * dx + dy * dy) <= radius * radius


_FOOTPRINT = _disk(STRENGTH_DISK_RADIUS)


def crack_strength(patch: np.ndarray) -> np.ndarray:
    """Thin-ridge response in [0, 1], symmetric under intensity inversion.

    Black-hat (closing minus image) of the luma responds to thin dark
    structures; the same filter on the inverted image responds to thin
    bright ones. The pointwise max of both is normalized by its 99.5th
    percentile so contrast changes between modalities wash out.
    """
    g = luma(ensure_image(patch))
    dark = grey_closing(g, footprint=_FOOTPRINT) - g
    inv = 255.0 - g
    bright = grey_closing(inv, footprint=_FOOTPRINT) - inv
    s = np.maximum(dark, bright)
    p = np.percentile(s, STRENGTH_PERCENTILE)
    if p <= 1e-9:
        return np.zeros_like(s)
    return np.clip(s / p, 0.0, 1.0)


def _neighbor_stack(img: np.ndarray) -> tuple[np.ndarray, ...]:
    """8-neighborhood planes (N, NE, E, SE, S, SW, W, NW), zero-padded."""
    p = np.pad(img, 1)
    return (
        p[:-2, 1:-1],   # N
        p[:-2, 2:],     # NE
        p[1:-1, 2:],    # E
        p[2:, 2:],      # SE
        p[2:, 1:-1],    # S
        p[2:, :-2],     # SW
        p[1:-1, :-2],   # W
        p[:-2, :-2],    # NW
    )


def thin_skeleton(mask: np.ndarray, max_iters: int = 200) -> np.ndarray:
    """Zhang-Suen thinning of a binary mask down to 1-px strokes."""
    img = np.ascontiguousarray(mask, dtype=np.uint8)
    for _ in range(max_iters):
        changed = False
        for step in (0, 1):
            n = _neighbor_stack(img)
            b = np.zeros(img.shape, dtype=np.int16)
            for plane in n:
                b += plane
            # transitions 0 -> 1 around the ring N, NE, ..., NW, N
            a = np.zeros(img.shape, dtype=np.int16)
            for k in range(8):
                a += (n[k] == 0) & (n[(k + 1) % 8] == 1)
            if step == 0:
                c1 = n[0] * n[2] * n[4] == 0   # N * E * S
                c2 = n[2] * n[4] * n[6] == 0   # E * S * W
            else:
                c1 = n[0] * n[2] * n[6] == 0   # N * E * W
                c2 = n[0] * n[4] * n[6] == 0   # N * S * W
            remove = (img == 1) & (b >= 2) & (b <= 6) & (a == 1) & c1 & c2
            if remove.any():
                img[remove] = 0
                changed = True
        if not changed:
            break
    return img.astype(bool)


def _maxpool_centered(a: np.ndarray, k: int) -> np.ndarray:
    """k x k max-pool with windows centered on the k-grid nodes.

    Cell (i, j) aggregates full-resolution [k*i - k/2, k*i + k/2), so a
    pooled peak sits at the node nearest the source maximum instead of
    being floor-quantized a full cell away.
    """
    h, w = a.shape
    half = k // 2
    padded = np.pad(a, ((half, 0), (half, 0)))[:h, :w]
    return padded.reshape(h // k, k, w // k, k).max(axis=(1, 3))


def _branch_degree(skel: np.ndarray) -> np.ndarray:
    """Number of distinct skeleton arms leaving each pixel.

    Counted as 0->1 transitions around the 8-ring. A raw neighbor count
    misfires on the staircase corners thinning leaves along diagonal
    strokes (3 neighbors, but still just a path); the transition count
    is 2 there and >= 3 only where arms genuinely branch.
    """
    n = _neighbor_stack(skel.astype(np.uint8))
    degree = np.zeros(skel.shape, dtype=np.int16)
    for k in range(8):
        degree += (n[k] == 0) & (n[(k + 1) % 8] == 1)
    return degree


def junction_heatmap(strength: np.ndarray) -> np.ndarray:
    """Quarter-resolution junction confidence map.

    The strength map is binarized against a 31x31 local mean (+0.05),
    thinned, and skeleton pixels where >= 3 arms meet are marked as
    junctions scoring their local crack strength. Marks are spread by a
    small impulse-normalized Gaussian before the 4x4 max-pool: the
    quarter-resolution map then carries sub-cell position in the
    relative weights of neighboring cells, like the smooth confidence
    maps of a learned head, instead of snapping every peak to the
    nearest grid node on upsampling.
    """
    strength = np.asarray(strength, dtype=float)
    local_mean = uniform_filter(strength, size=BINARIZE_WINDOW)
    binary = strength > local_mean + BINARIZE_OFFSET
    skel = thin_skeleton(binary)
    junctions = skel & (_branch_degree(skel) >= MIN_BRANCH_DEGREE)
    heat = np.where(junctions, strength, 0.0)
    heat = gaussian_filter(heat, HEAT_SPREAD_SIGMA)
    heat = np.clip(heat * (2.0 * np.pi * HEAT_SPREAD_SIGMA**2), 0.0, 1.0)
    return _maxpool_centered(heat, HEAD_FACTOR)


def _spatial_kernel() -> np.ndarray:
    """Per-offset weights into the 4x4 cell grid, Gaussian included.

    Shape (window^2, cells^2); fixed for all keypoints since window
    offsets are integers relative to the keypoint.
    """
    half = DESC_WINDOW // 2
    offs = np.arange(-half, half)
    dy, dx = np.meshgrid(offs, offs, indexing="ij")
    dx = dx.ravel()
    dy = dy.ravel()
    gauss = np.exp(-((dx + 0.5) ** 2 + (dy + 0.5) ** 2) / (2.0 * DESC_SIGMA**2))
    cell_size = DESC_WINDOW // DESC_CELLS
    cx = (dx + half + 0.5) / cell_size - 0.5
    cy = (dy + half + 0.5) / cell_size - 0.5
    k = np.zeros((DESC_WINDOW * DESC_WINDOW, DESC_CELLS * DESC_CELLS))
    x0 = np.floor(cx).astype(int)
    y0 = np.floor(cy).astype(int)
    fx = cx - x0
    fy = cy - y0
    for ix, wx in ((x0, 1.0 - fx), (x0 + 1, fx)):
        for iy, wy in ((y0, 1.0 - fy), (y0 + 1, fy)):
            ok = (ix >= 0) & (ix < DESC_CELLS) & (iy >= 0) & (iy < DESC_CELLS)
            idx = np.where(ok, iy * DESC_CELLS + ix, 0)
            np.add.at(k, (np.arange(len(dx)), idx), np.where(ok, wx * wy * gauss, 0.0))
    return k


_SPATIAL_K = _spatial_kernel()


def junction_descriptors(
    strength: np.ndarray,
    positions: np.ndarray,
    grads: tuple[np.ndarray, np.ndarray] | None = None,
    chunk: int = 2048,
) -> np.ndarray:
    """Histogram-of-gradient descriptors of the strength map.

    For each position: a 32x32 window of strength-map gradients,
    Gaussian-weighted (sigma 8), binned trilinearly into a 4x4 spatial
    grid of 8 orientation bins, normalized, clamped at 0.2 and
    renormalized. Returns (N, 128) unit rows.
    """
    strength = np.asarray(strength, dtype=float)
    positions = np.atleast_2d(np.asarray(positions, dtype=np.int64))
    if grads is None:
        grads = np.gradient(strength)
    gy, gx = grads
    mag_map = np.hypot(gx, gy)
    ang_map = np.mod(np.arctan2(gy, gx), 2.0 * np.pi)

    h, w = strength.shape
    half = DESC_WINDOW // 2
    offs = np.arange(-half, half)
    ody, odx = np.meshgrid(offs, offs, indexing="ij")
    odx = odx.ravel()
    ody = ody.ravel()

    out = np.empty((len(positions), DESCRIPTOR_DIM))
    for lo in range(0, len(positions), chunk):
        pts = positions[lo : lo + chunk]
        rows = np.clip(pts[:, 1][:, None] + ody[None, :], 0, h - 1)
        cols = np.clip(pts[:, 0][:, None] + odx[None, :], 0, w - 1)
        mag = mag_map[rows, cols]                      # (n, window^2)
        ang = ang_map[rows, cols]

        bin_f = ang * (DESC_BINS / (2.0 * np.pi))
        b0 = np.floor(bin_f).astype(np.int64) % DESC_BINS
        t = bin_f - np.floor(bin_f)
        b1 = (b0 + 1) % DESC_BINS

        hist = np.zeros((len(pts), DESC_CELLS * DESC_CELLS, DESC_BINS))
        for b in range(DESC_BINS):
            contrib = mag * ((b0 == b) * (1.0 - t) + (b1 == b) * t)
            hist[:, :, b] = contrib @ _SPATIAL_K
        desc = hist.reshape(len(pts), -1)

        norms = np.linalg.norm(desc, axis=1, keepdims=True)
        np.maximum(norms, 1e-12, out=norms)
        desc = np.minimum(desc / norms, DESC_CLAMP)
        norms = np.linalg.norm(desc, axis=1, keepdims=True)
        flat = norms[:, 0] < 1e-12
        desc[flat, 0] = 1.0
        norms[flat] = 1.0
        out[lo : lo + chunk] = desc / norms
    return out


def junction_descriptor(strength: np.ndarray, pos) -> np.ndarray:
    """Single-position variant of :func:`junction_descriptors`."""
    p = np.asarray(pos, dtype=float)
    return junction_descriptors(strength, np.rint(p).astype(np.int64)[None, :])[0]


class JunctionBackend:
    """Default detection backend built on crack-junction morphology."""

    name = "junction"
    descriptor_dim = DESCRIPTOR_DIM

    def detect_patch(self, patch: np.ndarray) -> tuple[np.ndarray, DescriptorGrid]:
        patch = ensure_image(patch)
        ph, pw = patch.shape[:2]
        pad_h = (-ph) % HEAD_FACTOR
        pad_w = (-pw) % HEAD_FACTOR
        if pad_h or pad_w:
            widths = [(0, pad_h), (0, pad_w)] + [(0, 0)] * (patch.ndim - 2)
            patch = np.pad(patch, widths, mode="edge")

        strength = crack_strength(patch)
        heat_q = junction_heatmap(strength)
        state: dict = {}

        def node_fn(rows: np.ndarray, cols: np.ndarray) -> np.ndarray:
            if "grads" not in state:
                state["grads"] = np.gradient(strength)
            pts = np.column_stack([cols * HEAD_FACTOR, rows * HEAD_FACTOR])
            return junction_descriptors(strength, pts, grads=state["grads"])

        grid = DescriptorGrid(
            heat_q.shape[0], heat_q.shape[1], self.descriptor_dim, node_fn
        )
        return heat_q, grid


register_backend(JunctionBackend.name, JunctionBackend)
