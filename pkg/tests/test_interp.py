"""Interpolation kernel tests: bicubic upsampling and bilinear sampling."""

from __future__ import annotations

import numpy as np
import pytest

from craqreg.interp import (
    _catmull_rom_weights,
    bicubic_upsample,
    resize_bilinear,
    sample_bilinear,
)


def catmull_rom_reference(t: float, a: float = -0.5) -> np.ndarray:
    """Direct evaluation of the cubic convolution kernel at the 4 taps."""
    def w(x):
        x = abs(x)
        if x <= 1:
            return (a + 2) * x**3 - (a + 3) * x**2 + 1
        if x < 2:
            return a * x**3 - 5 * a * x**2 + 8 * a * x - 4 * a
        return 0.0

    return np.array([w(t + 1), w(t), w(1 - t), w(2 - t)])


class TestBicubic:
    def test_factor_one_identity(self):
        m = np.random.default_rng(0).random((5, 7))
        assert np.array_equal(bicubic_upsample(m, 1), m)

    def test_constant_preserved(self):
        m = np.full((2, 2), 0.7)
        out = np.clip(bicubic_upsample(m, 4), 0, 1)
        assert out.shape == (8, 8)
        assert np.allclose(out, 0.7)

    def test_delta_argmax_preserved(self):
        m = np.zeros((9, 9))
        m[4, 4] = 1.0
        out = bicubic_upsample(m, 4)
        iy, ix = np.unravel_index(np.argmax(out), out.shape)
        assert (iy, ix) == (16, 16)
        assert out[16, 16] == pytest.approx(1.0)

    def test_weights_match_direct_kernel(self):
        for t in (0.0, 0.25, 0.5, 0.9):
            got = _catmull_rom_weights(np.array([t]))[0]
            assert np.allclose(got, catmull_rom_reference(t), atol=1e-12)

    def test_weights_sum_to_one(self):
        t = np.linspace(0, 0.999, 64)
        w = _catmull_rom_weights(t)
        assert np.allclose(w.sum(axis=1), 1.0, atol=1e-12)

    def test_linear_ramp_reproduced(self):
        m = np.arange(8.0)[None, :].repeat(4, axis=0)
        out = bicubic_upsample(m, 2)
        # interior columns follow the ramp at half steps
        assert np.allclose(out[2, 2:12], np.arange(2, 12) / 2.0, atol=1e-9)


class TestBilinear:
    def test_grid_nodes_exact(self):
        rng = np.random.default_rng(1)
        img = rng.random((6, 5))
        xs, ys = np.meshgrid(np.arange(5.0), np.arange(6.0))
        assert np.allclose(sample_bilinear(img, xs, ys), img)

    def test_midpoint_average(self):
        img = np.array([[0.0, 1.0]])
        v = sample_bilinear(img, np.array([0.5]), np.array([0.0]))
        assert v[0] == pytest.approx(0.5)

    def test_hand_weights(self):
        # fractional offset (0.25, 0.75): weights 0.1875, 0.0625, 0.5625, 0.1875
        img = np.array([[1.0, 2.0], [3.0, 4.0]])
        v = sample_bilinear(img, np.array([0.25]), np.array([0.75]))
        expected = 1.0 * 0.1875 + 2.0 * 0.0625 + 3.0 * 0.5625 + 4.0 * 0.1875
        assert v[0] == pytest.approx(expected)

    def test_resize_scale_mapping(self):
        # mapping src = dst / s: dst pixel 2 at s=2 samples src pixel 1
        img = (np.arange(16, dtype=np.uint8).reshape(4, 4) * 16).astype(np.uint8)
        out = resize_bilinear(img, 8, 8)
        assert out.shape == (8, 8)
        assert out[0, 2] == img[0, 1]
        assert out[2, 0] == img[1, 0]

    def test_resize_identity(self):
        img = np.random.default_rng(2).integers(0, 255, (10, 12)).astype(np.uint8)
        assert np.array_equal(resize_bilinear(img, 12, 10), img)
