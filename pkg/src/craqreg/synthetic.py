"""Synthetic craquelure fixtures for tests and demos.

Voronoi edges of a random point set make a credible stand-in for the
crack network of aged paint: thin lines meeting in three-way junctions
whose positions are known exactly, which gives every detection and
registration test an oracle.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np
from scipy.ndimage import gaussian_filter
from scipy.spatial import Voronoi

from .evaluation import ControlPointAnnotation, save_annotation
from .geometry import Homography
from .images import save_png, to_u8
from .pipeline import warp_image

MODALITIES = ("identity", "invert", "gamma-blur")

GAMMA = 1.8
BLUR_SIGMA = 1.0
NOISE_SIGMA = 4.0


def _draw_segment(
    darkness: np.ndarray, p0: np.ndarray, p1: np.ndarray, core: float = 0.9
) -> None:
    """Accumulate a smooth constant-width dark line into a [0,1] map.

    Distance-to-segment profile: fully dark within ``core`` pixels of
    the centerline, one-pixel soft falloff outside. Smooth edges keep
    the skeletonized line free of stair-step spurs.
    """
    h, w = darkness.shape
    x0 = max(0, int(np.floor(min(p0[0], p1[0]) - core - 2)))
    x1 = min(w, int(np.ceil(max(p0[0], p1[0]) + core + 3)))
    y0 = max(0, int(np.floor(min(p0[1], p1[1]) - core - 2)))
    y1 = min(h, int(np.ceil(max(p0[1], p1[1]) + core + 3)))
    if x0 >= x1 or y0 >= y1:
        return
    gx, gy = np.meshgrid(np.arange(x0, x1, dtype=float), np.arange(y0, y1, dtype=float))
    d = p1 - p0
    len2 = float(d @ d)
    if len2 < 1e-12:
        t = np.zeros_like(gx)
    else:
        t = np.clip(((gx - p0[0]) * d[0] + (gy - p0[1]) * d[1]) / len2, 0.0, 1.0)
    dist = np.hypot(gx - (p0[0] + t * d[0]), gy - (p0[1] + t * d[1]))
    profile = np.clip(core + 1.0 - dist, 0.0, 1.0)
    np.maximum(darkness[y0:y1, x0:x1], profile, out=darkness[y0:y1, x0:x1])


def _border_fade(width: int, height: int, start: float = 24.0, end: float = 4.0) -> np.ndarray:
    """Envelope in [0, 1]: 1 in the interior, 0 within ``end`` px of the
    border, ramping between. Keeps strokes from being clipped by the
    frame, which would leave T-shaped thinning artifacts."""
    xs = np.arange(width, dtype=float)
    ys = np.arange(height, dtype=float)
    bx = np.minimum(xs, width - 1 - xs)
    by = np.minimum(ys, height - 1 - ys)
    bdist = np.minimum(bx[None, :], by[:, None])
    return np.clip((bdist - end) / (start - end), 0.0, 1.0)


def craquelure_image(
    width: int,
    height: int,
    n_cells: int = 70,
    seed: int = 0,
    bg: float = 205.0,
    line: float = 45.0,
    margin: int = 30,
) -> tuple[np.ndarray, np.ndarray]:
    """Random crack network image plus its true junction positions.

    Voronoi edges of a random point set, drawn as thin dark lines fading
    out near the border. Returns (image u8 grayscale, junctions (K, 2)
    float (x, y)): Voronoi vertices where >= 3 drawn edges meet, at
    least ``margin`` pixels from the border (inside the faded frame the
    network is attenuated, so vertices there are excluded).
    """
    rng = np.random.Generator(np.random.PCG64(seed))
    pad = 0.15
    pts = rng.uniform(
        [-pad * width, -pad * height],
        [(1 + pad) * width, (1 + pad) * height],
        size=(n_cells, 2),
    )
    vor = Voronoi(pts)

    darkness = np.zeros((height, width))
    incidence: dict[int, int] = {}
    for v0, v1 in vor.ridge_vertices:
        if v0 < 0 or v1 < 0:
            continue
        p0, p1 = vor.vertices[v0], vor.vertices[v1]
        _draw_segment(darkness, p0, p1)
        incidence[v0] = incidence.get(v0, 0) + 1
        incidence[v1] = incidence.get(v1, 0) + 1

    darkness *= _border_fade(width, height)
    junctions = [
        vor.vertices[v]
        for v, deg in incidence.items()
        if deg >= 3
        and margin <= vor.vertices[v][0] < width - margin
        and margin <= vor.vertices[v][1] < height - margin
    ]

    gx, gy = rng.uniform(-1.0, 1.0, 2)
    xs = np.linspace(-1.0, 1.0, width)
    ys = np.linspace(-1.0, 1.0, height)
    canvas = bg + 18.0 * (gx * xs[None, :] + gy * ys[:, None])
    canvas = canvas * (1.0 - darkness) + line * darkness
    img = to_u8(canvas)
    junc = np.array(junctions, dtype=float) if junctions else np.empty((0, 2))
    return img, junc


def scattered_junctions(
    width: int,
    height: int,
    n: int = 20,
    seed: int = 0,
    arm_length: float = 34.0,
    bg: float = 205.0,
    line: float = 45.0,
) -> tuple[np.ndarray, np.ndarray]:
    """Isolated Y-junctions at well-separated random positions.

    Every drawn structure is one three-armed junction, so the ground
    truth is exhaustive: detections must account one-to-one for the
    returned centers.
    """
    rng = np.random.Generator(np.random.PCG64(seed))
    margin = arm_length + 16.0
    min_sep = 2.0 * arm_length + 12.0
    centers: list[np.ndarray] = []
    while len(centers) < n:
        c = rng.uniform([margin, margin], [width - margin, height - margin])
        if all(np.hypot(*(c - o)) >= min_sep for o in centers):
            centers.append(c)
    darkness = np.zeros((height, width))
    for c in centers:
        base = rng.uniform(0.0, 2.0 * np.pi)
        angles = base + np.array([0.0, 1.0, 2.0]) * (2.0 * np.pi / 3.0)
        angles += rng.uniform(-0.3, 0.3, 3)
        for ang in angles:
            tip = c + arm_length * np.array([np.cos(ang), np.sin(ang)])
            _draw_segment(darkness, c, tip)
    canvas = bg * (1.0 - darkness) + line * darkness
    return to_u8(canvas), np.array(centers)


def apply_modality(img: np.ndarray, kind: str, seed: int = 0) -> np.ndarray:
    """Photometric stand-in for a modality change."""
    if kind == "identity":
        rng = np.random.Generator(np.random.PCG64(seed))
        noisy = img.astype(float) + rng.normal(0.0, NOISE_SIGMA, img.shape)
        return to_u8(noisy)
    if kind == "invert":
        return (255 - img.astype(np.int16)).astype(np.uint8)
    if kind == "gamma":
        return to_u8(255.0 * (img.astype(float) / 255.0) ** GAMMA)
    if kind == "gamma-blur":
        g = 255.0 * (img.astype(float) / 255.0) ** GAMMA
        return to_u8(gaussian_filter(g, BLUR_SIGMA))
    raise ValueError(f"unknown modality {kind!r}")


def random_mild_homography(
    seed: int,
    width: int,
    height: int,
    max_rot_deg: float = 2.0,
    max_scale_dev: float = 0.03,
    max_shift: float = 8.0,
    max_persp: float = 8e-5,
) -> Homography:
    """Near-identity perspective transform about the image center."""
    rng = np.random.Generator(np.random.PCG64(seed))
    theta = np.deg2rad(rng.uniform(-max_rot_deg, max_rot_deg))
    s = 1.0 + rng.uniform(-max_scale_dev, max_scale_dev)
    tx, ty = rng.uniform(-max_shift, max_shift, 2)
    cx, cy = width / 2.0, height / 2.0
    c, si = np.cos(theta), np.sin(theta)
    rot = np.array([[s * c, -s * si, 0.0], [s * si, s * c, 0.0], [0.0, 0.0, 1.0]])
    to_c = np.array([[1.0, 0.0, -cx], [0.0, 1.0, -cy], [0.0, 0.0, 1.0]])
    from_c = np.array([[1.0, 0.0, cx + tx], [0.0, 1.0, cy + ty], [0.0, 0.0, 1.0]])
    m = from_c @ rot @ to_c
    m[2, 0] = rng.uniform(-max_persp, max_persp)
    m[2, 1] = rng.uniform(-max_persp, max_persp)
    return Homography(m)


def make_pair(
    seed: int,
    width: int = 640,
    height: int = 640,
    modality: str = "identity",
    n_cells: int = 70,
    n_control: int = 40,
) -> dict:
    """One synthetic registration pair with exact ground truth.

    The crack network is rendered on a padded canvas; the reference is a
    crop and the moving image is a mildly warped resampling, so neither
    view has fabricated (out-of-bounds) borders. Returns ref, mov, the
    true moving->reference homography, and control point pairs.
    """
    pad = max(24, int(0.08 * max(width, height)))
    base, _ = craquelure_image(
        width + 2 * pad, height + 2 * pad, n_cells=n_cells, seed=seed
    )
    ref = base[pad : pad + height, pad : pad + width].copy()

    h_gt = random_mild_homography(seed + 10_000, width, height)
    shift = Homography.translation(pad, pad)
    # mov[p] = base[(shift . h_gt)(p)]  =>  warp base by the inverse
    mov_geo = warp_image(base, (shift @ h_gt).inverse(), width, height)
    mov = apply_modality(mov_geo, modality, seed=seed + 20_000)

    cols = int(np.ceil(np.sqrt(n_control * width / height)))
    rows = int(np.ceil(n_control / cols))
    m = 48
    gx = np.linspace(m, width - 1 - m, cols)
    gy = np.linspace(m, height - 1 - m, rows)
    mesh = np.stack(np.meshgrid(gx, gy), axis=-1).reshape(-1, 2)[:n_control]
    proj = h_gt.apply_many(mesh)
    inside = (
        (proj[:, 0] >= 0)
        & (proj[:, 0] <= width - 1)
        & (proj[:, 1] >= 0)
        & (proj[:, 1] <= height - 1)
    )
    return {
        "ref": ref,
        "mov": mov,
        "h_gt": h_gt,
        "ref_pts": proj[inside],
        "mov_pts": mesh[inside],
    }


def build_dataset(
    root: str | Path,
    modality: str,
    n_pairs: int = 13,
    width: int = 640,
    height: int = 640,
    seed0: int = 0,
    domain: str | None = None,
) -> Path:
    """Write images, annotations and a manifest for one modality set."""
    root = Path(root)
    (root / "images").mkdir(parents=True, exist_ok=True)
    (root / "annotations").mkdir(parents=True, exist_ok=True)
    domain = domain or f"SYN-{modality}"
    entries = []
    for k in range(n_pairs):
        pair_id = f"{modality}-{k:02d}"
        data = make_pair(seed0 + k, width, height, modality=modality)
        ref_name = f"images/{pair_id}_ref.png"
        mov_name = f"images/{pair_id}_mov.png"
        ann_name = f"annotations/{pair_id}.json"
        save_png(root / ref_name, data["ref"])
        save_png(root / mov_name, data["mov"])
        save_annotation(
            root / ann_name,
            ControlPointAnnotation(pair_id, data["ref_pts"], data["mov_pts"]),
        )
        entries.append(
            {
                "pair_id": pair_id,
                "reference": ref_name,
                "moving": mov_name,
                "annotations": ann_name,
                "domain": domain,
            }
        )
    manifest = root / "manifest.json"
    with open(manifest, "w") as f:
        json.dump({"entries": entries}, f, indent=2)
        f.write("\n")
    return manifest
