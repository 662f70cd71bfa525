"""Resize policy, warping, overlays, match rendering, full register."""

from __future__ import annotations

import json

import numpy as np
import pytest

from craqreg.config import RegistrationConfig
from craqreg.errors import (
    AlphaOutOfRange,
    DimensionMismatch,
    EmptyDetection,
    InvalidPolicy,
)
from craqreg.evaluation import ControlPointAnnotation, pair_errors
from craqreg.geometry import Homography
from craqreg.matching import Matches
from craqreg.pipeline import (
    apply_resize_policy,
    overlay_blend,
    overlay_redcyan,
    register,
    render_matches,
    warp_image,
    write_bundle,
)


def checkerboard(h: int, w: int, block: int = 8) -> np.ndarray:
    yy, xx = np.mgrid[:h, :w]
    return (((yy // block + xx // block) % 2) * 255).astype(np.uint8)


class TestResizePolicy:
    def test_same_width(self):
        ref = np.zeros((1500, 2000), dtype=np.uint8)
        mov = np.zeros((800, 1000), dtype=np.uint8)
        r2, m2, s_ref, s_mov = apply_resize_policy(ref, mov, "same-width")
        assert r2.shape == (1500, 2000)
        assert m2.shape == (1600, 2000)
        assert s_ref == 1.0
        assert s_mov == 2.0

    def test_custom_height(self):
        ref = np.zeros((500, 500), dtype=np.uint8)
        mov = np.zeros((4000, 1000), dtype=np.uint8)
        r2, m2, s_ref, s_mov = apply_resize_policy(ref, mov, "height:2000")
        assert m2.shape == (2000, 500)
        assert s_mov == 0.5
        assert r2.shape == (2000, 2000)
        assert s_ref == 4.0

    def test_none(self):
        ref = np.zeros((10, 20), dtype=np.uint8)
        mov = np.zeros((30, 40), dtype=np.uint8)
        r2, m2, s_ref, s_mov = apply_resize_policy(ref, mov, "none")
        assert r2.shape == ref.shape and m2.shape == mov.shape
        assert s_ref == s_mov == 1.0

    def test_invalid_height(self):
        ref = mov = np.zeros((10, 10), dtype=np.uint8)
        with pytest.raises(InvalidPolicy):
            apply_resize_policy(ref, mov, "height:0")
        with pytest.raises(InvalidPolicy):
            apply_resize_policy(ref, mov, "height:-5")


class TestWarpImage:
    def test_identity_reproduces_interior(self):
        img = checkerboard(64, 64)
        out = warp_image(img, Homography.identity(), 64, 64)
        assert np.array_equal(out, img)

    def test_integer_translation(self):
        img = checkerboard(32, 32)
        out = warp_image(img, Homography.translation(5.0, 0.0), 32, 32)
        assert np.all(out[:, :5] == 0)
        assert np.array_equal(out[:, 5:], img[:, :-5])

    def test_scale_two_checker_corners(self):
        img = np.array([[0, 255], [255, 0]], dtype=np.uint8)
        h = Homography.scaling(2.0)
        out = warp_image(img, h, 4, 4)
        # corners of the source grid map to even output pixels
        assert out[0, 0] == 0
        assert out[0, 2] == 255
        assert out[2, 0] == 255
        assert out[2, 2] == 0
        # midpoint between source nodes is a bilinear average
        assert out[0, 1] == round((0 + 255) / 2)

    def test_rgb(self):
        img = np.dstack([checkerboard(16, 16)] * 3)
        out = warp_image(img, Homography.translation(2.0, 0.0), 16, 16)
        assert out.shape == (16, 16, 3)
        assert np.all(out[:, :2] == 0)

    def test_warp_roundtrip_psnr(self, crack_fixture):
        img, _ = crack_fixture
        h = Homography(
            np.array([[1.02, 0.01, 3.0], [-0.01, 0.99, -2.0], [1e-5, 0.0, 1.0]])
        )
        there = warp_image(img, h, img.shape[1], img.shape[0])
        back = warp_image(there, h.inverse(), img.shape[1], img.shape[0])
        inner = (slice(40, -40), slice(40, -40))
        mse = np.mean((back[inner].astype(float) - img[inner].astype(float)) ** 2)
        psnr = 10 * np.log10(255.0**2 / mse)
        assert psnr > 30.0


class TestOverlays:
    def test_redcyan_equal_inputs_gray(self):
        img = checkerboard(16, 16)
        out = overlay_redcyan(img, img)
        assert out.shape == (16, 16, 3)
        assert np.array_equal(out[..., 0], out[..., 1])
        assert np.array_equal(out[..., 1], out[..., 2])

    def test_redcyan_white_ref_black_mov_pure_red(self):
        ref = np.full((8, 8), 255, dtype=np.uint8)
        mov = np.zeros((8, 8), dtype=np.uint8)
        out = overlay_redcyan(ref, mov)
        assert np.all(out[..., 0] == 255)
        assert np.all(out[..., 1] == 0)
        assert np.all(out[..., 2] == 0)

    def test_redcyan_black_ref_white_mov_pure_cyan(self):
        ref = np.zeros((8, 8), dtype=np.uint8)
        mov = np.full((8, 8), 255, dtype=np.uint8)
        out = overlay_redcyan(ref, mov)
        assert np.all(out[..., 0] == 0)
        assert np.all(out[..., 1] == 255)
        assert np.all(out[..., 2] == 255)

    def test_redcyan_dimension_mismatch(self):
        with pytest.raises(DimensionMismatch):
            overlay_redcyan(np.zeros((8, 8), np.uint8), np.zeros((9, 8), np.uint8))

    def test_blend_endpoints(self):
        ref = checkerboard(8, 8)
        mov = 255 - ref
        assert np.array_equal(overlay_blend(ref, mov, 0.0), ref)
        assert np.array_equal(overlay_blend(ref, mov, 1.0), mov)

    def test_blend_midpoint_value(self):
        ref = np.full((4, 4), 100, dtype=np.uint8)
        mov = np.full((4, 4), 200, dtype=np.uint8)
        assert np.all(overlay_blend(ref, mov, 0.5) == 150)

    def test_blend_symmetric_at_half(self):
        rng = np.random.default_rng(1)
        a = rng.integers(0, 255, (16, 16)).astype(np.uint8)
        b = rng.integers(0, 255, (16, 16)).astype(np.uint8)
        ab = overlay_blend(a, b, 0.5).astype(int)
        ba = overlay_blend(b, a, 0.5).astype(int)
        assert np.abs(ab - ba).max() <= 1

    def test_blend_alpha_out_of_range(self):
        img = checkerboard(4, 4)
        with pytest.raises(AlphaOutOfRange):
            overlay_blend(img, img, 1.5)


class TestRenderMatches:
    def test_canvas_layout_and_line(self):
        ref = np.zeros((40, 60), dtype=np.uint8)
        mov = np.zeros((40, 50), dtype=np.uint8)
        kps_ref = np.array([[10.0, 10.0]])
        kps_mov = np.array([[20.0, 20.0]])
        matches = Matches(
            np.array([0], dtype=np.int64), np.array([0], dtype=np.int64), np.zeros(1)
        )
        out = render_matches(ref, mov, kps_ref, kps_mov, matches, np.array([True]))
        assert out.shape == (40, 110, 3)
        yellow = np.all(out == [255, 255, 0], axis=2)
        ys, xs = np.nonzero(yellow)
        assert yellow[10, 10] or yellow[11, 10] or yellow[10, 11]
        assert xs.max() >= 60 + 20 - 1  # reaches the shifted moving keypoint

    def test_no_lines_when_all_outliers(self):
        ref = np.zeros((30, 30), dtype=np.uint8)
        kps = np.array([[15.0, 15.0]])
        matches = Matches(
            np.array([0], dtype=np.int64), np.array([0], dtype=np.int64), np.zeros(1)
        )
        out = render_matches(ref, ref, kps, kps, matches, np.array([False]))
        assert not np.any(np.all(out == [255, 255, 0], axis=2))
        # circles still drawn
        assert np.any(np.all(out == [0, 0, 255], axis=2))

    def test_zero_matches_circles_only(self):
        ref = np.zeros((30, 30), dtype=np.uint8)
        kps = np.array([[5.0, 5.0], [20.0, 10.0]])
        matches = Matches(
            np.empty(0, dtype=np.int64), np.empty(0, dtype=np.int64), np.empty(0)
        )
        out = render_matches(ref, ref, kps, kps, matches, np.empty(0, dtype=bool))
        assert np.any(np.all(out == [0, 0, 255], axis=2))
        assert not np.any(np.all(out == [255, 255, 0], axis=2))


class TestRegister:
    def test_self_registration_identity(self, crack_fixture, fast_config):
        img, _ = crack_fixture
        out = register(img, img, fast_config)
        grid = np.stack(
            np.meshgrid(np.linspace(50, 590, 10), np.linspace(50, 590, 10)), -1
        ).reshape(-1, 2)
        moved = out.h_original.apply_many(grid)
        me = np.linalg.norm(moved - grid, axis=1).mean()
        assert me < 0.5

    def test_synthetic_pair_grid_error(self, registration_pair, fast_config):
        data = registration_pair
        out = register(data["ref"], data["mov"], fast_config)
        ann = ControlPointAnnotation("t", data["ref_pts"], data["mov_pts"])
        errs = pair_errors(out.h_original, ann)
        assert errs.mean() < 3.0

    def test_blank_moving_raises_detection_stage(self, crack_fixture, fast_config):
        img, _ = crack_fixture
        blank = np.full_like(img, 128)
        with pytest.raises(EmptyDetection) as exc_info:
            register(img, blank, fast_config)
        assert exc_info.value.stage == "detection"

    def test_scale_composition(self, crack_fixture):
        # same-width policy on a half-size moving image: h_original must
        # absorb the working-scale transforms exactly
        img, _ = crack_fixture
        from craqreg.interp import resize_bilinear

        mov_small = resize_bilinear(img, 320, 320)
        cfg = RegistrationConfig(resize_policy="same-width")
        out = register(img, mov_small, cfg)
        assert out.working_scale_mov == 2.0
        s_ref_inv = np.diag([1.0, 1.0, 1.0])
        s_mov = np.diag([2.0, 2.0, 1.0])
        recomposed = s_ref_inv @ out.h_working.m @ s_mov
        recomposed /= recomposed[2, 2]
        assert np.allclose(out.h_original.m, recomposed, atol=1e-9)
        # the recovered transform maps moving-original to reference-original:
        # approximately a uniform x2 scaling
        grid = np.stack(
            np.meshgrid(np.linspace(40, 280, 6), np.linspace(40, 280, 6)), -1
        ).reshape(-1, 2)
        err = np.linalg.norm(
            out.h_original.apply_many(grid) - 2.0 * grid, axis=1
        ).mean()
        assert err < 3.0

    def test_outputs_shapes_and_overlay(self, registration_pair, fast_config):
        data = registration_pair
        out = register(data["ref"], data["mov"], fast_config)
        assert out.warped_moving.shape[:2] == data["ref"].shape[:2]
        assert out.overlay_redcyan.shape == (*data["ref"].shape[:2], 3)
        assert out.matches_visualization is None
        assert out.report.inlier_count >= 4
        assert set(out.timings_ms) >= {
            "resize", "detect_reference", "detect_moving",
            "match", "estimate", "warp", "overlays", "total",
        }

    def test_visualize_matches_flag(self, registration_pair):
        data = registration_pair
        cfg = RegistrationConfig(resize_policy="none", visualize_matches=True)
        out = register(data["ref"], data["mov"], cfg)
        assert out.matches_visualization is not None
        assert out.matches_visualization.shape[2] == 3


class TestBundle:
    def test_bundle_files_and_manifest(self, registration_pair, fast_config, tmp_path):
        data = registration_pair
        out = register(data["ref"], data["mov"], fast_config)
        write_bundle(tmp_path, data["ref"], data["mov"], out, fast_config)
        manifest = json.loads((tmp_path / "result.json").read_text())
        for name in manifest["files"]:
            assert (tmp_path / name).exists(), name
        assert len(manifest["homography_original"]) == 9
        assert manifest["homography_original"][8] == 1.0
        assert manifest["warp_fill"] == "black"
        assert manifest["method"] == "ransac"
        timings = json.loads((tmp_path / "timings.json").read_text())
        assert "total" in timings
