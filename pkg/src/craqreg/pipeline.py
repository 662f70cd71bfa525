"""End-to-end registration: resize policy, detect, match, estimate,
warp, overlays, and the self-contained result bundle."""

from __future__ import annotations

import json
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .config import RegistrationConfig, parse_resize_policy
from .detection import DetectionResult, detect_image
from .errors import (
    AlphaOutOfRange,
    ConfigError,
    DegenerateHomography,
    DimensionMismatch,
    InvalidPolicy,
)
from .estimation import EstimationReport, estimate_homography
from .geometry import Homography
from .images import ensure_image, luma, save_png, to_rgb, to_u8
from .interp import resize_bilinear, sample_bilinear
from .matching import Matches, match_mutual_nn

CIRCLE_RADIUS = 3
COLOR_KEYPOINT = np.array([0, 0, 255], dtype=np.uint8)    # blue
COLOR_MATCH = np.array([255, 255, 0], dtype=np.uint8)     # yellow


@dataclass
class RegistrationOutput:
    """Everything a viewer needs from one registration run."""

    h_original: Homography
    h_working: Homography
    warped_moving: np.ndarray
    overlay_redcyan: np.ndarray
    report: EstimationReport
    working_scale_ref: float
    working_scale_mov: float
    matches_visualization: np.ndarray | None = None
    detection_ref: DetectionResult | None = None
    detection_mov: DetectionResult | None = None
    match_count: int = 0
    timings_ms: dict[str, float] = field(default_factory=dict)


def apply_resize_policy(
    ref: np.ndarray, mov: np.ndarray, policy: str
) -> tuple[np.ndarray, np.ndarray, float, float]:
    """Bring the pair to working resolution.

    same-width: the moving image is resized (bilinear, aspect
    preserving) to the reference width; custom height resizes both to
    that height; none leaves both untouched. Returns (ref, mov, s_ref,
    s_mov) where working_point = s * original_point.
    """
    ref = ensure_image(ref)
    mov = ensure_image(mov)
    try:
        kind, height = parse_resize_policy(policy)
    except ConfigError as exc:
        raise InvalidPolicy(str(exc)) from exc

    def scaled(img: np.ndarray, s: float) -> np.ndarray:
        if s == 1.0:
            return img
        h, w = img.shape[:2]
        return resize_bilinear(img, max(1, round(w * s)), max(1, round(h * s)))

    if kind == "none":
        return ref, mov, 1.0, 1.0
    if kind == "same-width":
        s_mov = ref.shape[1] / mov.shape[1]
        mov_w = resize_bilinear(
            mov, ref.shape[1], max(1, round(mov.shape[0] * s_mov))
        ) if s_mov != 1.0 else mov
        return ref, mov_w, 1.0, s_mov
    # custom height
    s_ref = height / ref.shape[0]
    s_mov = height / mov.shape[0]
    ref_w = scaled(ref, s_ref)
    mov_w = scaled(mov, s_mov)
    return ref_w, mov_w, s_ref, s_mov


def warp_image(
    mov: np.ndarray, h: Homography, out_w: int, out_h: int, band: int = 256
) -> np.ndarray:
    """Warp by inverse mapping with bilinear sampling; out-of-bounds black.

    For each output pixel p the moving image is sampled at h^-1(p), so
    the output lives in the coordinate frame h maps into.
    """
    mov = ensure_image(mov)
    try:
        hinv = h.inverse()
    except DegenerateHomography:
        raise
    mh, mw = mov.shape[:2]
    shape = (out_h, out_w) if mov.ndim == 2 else (out_h, out_w, mov.shape[2])
    out = np.zeros(shape, dtype=np.uint8)
    m = hinv.m
    xs = np.arange(out_w, dtype=float)
    for y0 in range(0, out_h, band):
        y1 = min(y0 + band, out_h)
        gy, gx = np.meshgrid(np.arange(y0, y1, dtype=float), xs, indexing="ij")
        w = m[2, 0] * gx + m[2, 1] * gy + m[2, 2]
        ok = np.abs(w) > 1e-12
        wsafe = np.where(ok, w, 1.0)
        sx = (m[0, 0] * gx + m[0, 1] * gy + m[0, 2]) / wsafe
        sy = (m[1, 0] * gx + m[1, 1] * gy + m[1, 2]) / wsafe
        valid = ok & (sx >= 0) & (sx <= mw - 1) & (sy >= 0) & (sy <= mh - 1)
        vals = sample_bilinear(mov, np.clip(sx, 0, mw - 1), np.clip(sy, 0, mh - 1))
        vals = np.clip(np.rint(vals), 0, 255).astype(np.uint8)
        if mov.ndim == 3:
            vals[~valid] = 0
        else:
            vals = np.where(valid, vals, 0)
        out[y0:y1] = vals
    return out


def overlay_redcyan(ref: np.ndarray, warped: np.ndarray) -> np.ndarray:
    """Reference luma in red, warped luma in green+blue.

    Aligned content renders gray; misalignment shows as red/cyan fringes.
    """
    ref = ensure_image(ref)
    warped = ensure_image(warped)
    if ref.shape[:2] != warped.shape[:2]:
        raise DimensionMismatch(
            f"reference {ref.shape[:2]} vs warped {warped.shape[:2]}"
        )
    r = to_u8(luma(ref))
    gb = to_u8(luma(warped))
    return np.stack([r, gb, gb], axis=2)


def overlay_blend(ref: np.ndarray, warped: np.ndarray, alpha: float) -> np.ndarray:
    """Linear blend: alpha weights the warped moving image."""
    ref = ensure_image(ref)
    warped = ensure_image(warped)
    if ref.shape[:2] != warped.shape[:2]:
        raise DimensionMismatch(
            f"reference {ref.shape[:2]} vs warped {warped.shape[:2]}"
        )
    if not 0.0 <= alpha <= 1.0:
        raise AlphaOutOfRange(f"alpha {alpha} outside [0, 1]")
    if (ref.ndim == 3) != (warped.ndim == 3):
        ref, warped = to_rgb(ref), to_rgb(warped)
    blend = (1.0 - alpha) * ref.astype(float) + alpha * warped.astype(float)
    return to_u8(blend)


def _circle_offsets(radius: int) -> np.ndarray:
    r = np.arange(-radius, radius + 1)
    dx, dy = np.meshgrid(r, r)
    d = np.hypot(dx, dy)
    ring = (d >= radius - 0.5) & (d <= radius + 0.5)
    return np.column_stack([dx[ring], dy[ring]])


_RING = _circle_offsets(CIRCLE_RADIUS)


def _draw_circles(canvas: np.ndarray, pts: np.ndarray, color: np.ndarray) -> None:
    if len(pts) == 0:
        return
    h, w = canvas.shape[:2]
    px = (np.rint(pts[:, 0]).astype(int)[:, None] + _RING[:, 0]).ravel()
    py = (np.rint(pts[:, 1]).astype(int)[:, None] + _RING[:, 1]).ravel()
    ok = (px >= 0) & (px < w) & (py >= 0) & (py < h)
    canvas[py[ok], px[ok]] = color


def _draw_line(canvas: np.ndarray, p0, p1, color: np.ndarray) -> None:
    h, w = canvas.shape[:2]
    n = int(max(abs(p1[0] - p0[0]), abs(p1[1] - p0[1]))) + 1
    t = np.linspace(0.0, 1.0, n + 1)
    xs = np.rint(p0[0] + (p1[0] - p0[0]) * t).astype(int)
    ys = np.rint(p0[1] + (p1[1] - p0[1]) * t).astype(int)
    ok = (xs >= 0) & (xs < w) & (ys >= 0) & (ys < h)
    canvas[ys[ok], xs[ok]] = color


def render_matches(
    ref: np.ndarray,
    mov: np.ndarray,
    kps_ref: np.ndarray,
    kps_mov: np.ndarray,
    matches: Matches,
    inlier_mask: np.ndarray,
) -> np.ndarray:
    """Side-by-side canvas: blue keypoint circles, yellow inlier lines."""
    ref = to_rgb(ref)
    mov = to_rgb(mov)
    h = max(ref.shape[0], mov.shape[0])
    w = ref.shape[1] + mov.shape[1]
    canvas = np.zeros((h, w, 3), dtype=np.uint8)
    canvas[: ref.shape[0], : ref.shape[1]] = ref
    canvas[: mov.shape[0], ref.shape[1] :] = mov

    offset = np.array([ref.shape[1], 0.0])
    kps_mov_shifted = np.asarray(kps_mov, dtype=float) + offset
    _draw_circles(canvas, np.asarray(kps_ref, dtype=float), COLOR_KEYPOINT)
    _draw_circles(canvas, kps_mov_shifted, COLOR_KEYPOINT)
    for k in np.nonzero(np.asarray(inlier_mask, dtype=bool))[0]:
        p0 = np.asarray(kps_ref, dtype=float)[matches.idx_ref[k]]
        p1 = kps_mov_shifted[matches.idx_mov[k]]
        _draw_line(canvas, p0, p1, COLOR_MATCH)
    return canvas


def register(
    ref: np.ndarray,
    mov: np.ndarray,
    cfg: RegistrationConfig | None = None,
    workers: int = 1,
) -> RegistrationOutput:
    """Full registration chain on a decoded image pair.

    The homography is estimated at working resolution and composed with
    the resize scalings into original coordinates, where the warp and
    overlays are rendered. Stage failures raise EmptyDetection,
    NoMatches or EstimationFailed, each tagged with its stage.
    """
    cfg = cfg or RegistrationConfig()
    cfg.validate()
    ref = ensure_image(ref)
    mov = ensure_image(mov)
    timings: dict[str, float] = {}
    t_total = time.perf_counter()

    t0 = time.perf_counter()
    ref_w, mov_w, s_ref, s_mov = apply_resize_policy(ref, mov, cfg.resize_policy)
    timings["resize"] = time.perf_counter() - t0

    t0 = time.perf_counter()
    det_ref = detect_image(ref_w, cfg, workers=workers)
    timings["detect_reference"] = time.perf_counter() - t0
    t0 = time.perf_counter()
    det_mov = detect_image(mov_w, cfg, workers=workers)
    timings["detect_moving"] = time.perf_counter() - t0

    t0 = time.perf_counter()
    matches = match_mutual_nn(det_ref.descriptors, det_mov.descriptors)
    timings["match"] = time.perf_counter() - t0

    t0 = time.perf_counter()
    report = estimate_homography(
        matches, det_ref.positions, det_mov.positions, cfg.estimator
    )
    timings["estimate"] = time.perf_counter() - t0

    h_working = report.h
    h_original = Homography(
        np.diag([1.0 / s_ref, 1.0 / s_ref, 1.0])
        @ h_working.m
        @ np.diag([s_mov, s_mov, 1.0])
    )

    t0 = time.perf_counter()
    warped = warp_image(mov, h_original, ref.shape[1], ref.shape[0])
    timings["warp"] = time.perf_counter() - t0

    t0 = time.perf_counter()
    overlay = overlay_redcyan(ref, warped)
    vis = None
    if cfg.visualize_matches:
        vis = render_matches(
            ref_w, mov_w, det_ref.positions, det_mov.positions,
            matches, report.inlier_mask,
        )
    timings["overlays"] = time.perf_counter() - t0
    timings["total"] = time.perf_counter() - t_total

    return RegistrationOutput(
        h_original=h_original,
        h_working=h_working,
        warped_moving=warped,
        overlay_redcyan=overlay,
        report=report,
        working_scale_ref=s_ref,
        working_scale_mov=s_mov,
        matches_visualization=vis,
        detection_ref=det_ref,
        detection_mov=det_mov,
        match_count=len(matches),
        timings_ms={k: v * 1000.0 for k, v in timings.items()},
    )


def result_manifest(out: RegistrationOutput, cfg: RegistrationConfig) -> dict:
    """Deterministic result.json contents (timings live in timings.json)."""
    files = [
        "overlay_redcyan.png",
        "reference.png",
        "moving.png",
        "result.json",
        "timings.json",
        "warped.png",
    ]
    if out.matches_visualization is not None:
        files.append("matches.png")
    return {
        "homography_original": out.h_original.as_flat(),
        "homography_working": out.h_working.as_flat(),
        "working_scale_ref": out.working_scale_ref,
        "working_scale_mov": out.working_scale_mov,
        "method": out.report.method,
        "iterations_run": out.report.iterations_run,
        "match_count": out.match_count,
        "inlier_count": out.report.inlier_count,
        "score": out.report.score,
        "keypoints_reference": len(out.detection_ref) if out.detection_ref else 0,
        "keypoints_moving": len(out.detection_mov) if out.detection_mov else 0,
        "warp_fill": "black",
        "config": cfg.to_dict(),
        "files": sorted(files),
    }


def write_bundle(
    out_dir: str | Path,
    ref: np.ndarray,
    mov: np.ndarray,
    out: RegistrationOutput,
    cfg: RegistrationConfig,
) -> Path:
    """Write the self-contained result bundle directory."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    save_png(out_dir / "reference.png", ref)
    save_png(out_dir / "moving.png", mov)
    save_png(out_dir / "warped.png", out.warped_moving)
    save_png(out_dir / "overlay_redcyan.png", out.overlay_redcyan)
    if out.matches_visualization is not None:
        save_png(out_dir / "matches.png", out.matches_visualization)
    manifest = result_manifest(out, cfg)
    with open(out_dir / "result.json", "w") as f:
        json.dump(manifest, f, indent=2, sort_keys=True)
        f.write("\n")
    with open(out_dir / "timings.json", "w") as f:
        json.dump(
            {k: round(v, 3) for k, v in out.timings_ms.items()},
            f, indent=2, sort_keys=True,
        )
        f.write("\n")
    return out_dir
