"""Shared synthetic fixtures; session-scoped where generation is slow."""

from __future__ import annotations

import numpy as np
import pytest

from craqreg.config import RegistrationConfig
from craqreg.synthetic import craquelure_image, make_pair, scattered_junctions


@pytest.fixture(scope="session")
def crack_fixture():
    """Dense craquelure image with true junction list."""
    img, junctions = craquelure_image(640, 640, n_cells=70, seed=0)
    return img, junctions


@pytest.fixture(scope="session")
def sparse_fixture():
    """20 isolated Y-junctions with exhaustive ground truth."""
    img, centers = scattered_junctions(640, 640, n=20, seed=0)
    return img, centers


@pytest.fixture(scope="session")
def registration_pair():
    """One synthetic pair with known homography and control points."""
    return make_pair(0, 512, 512, modality="identity")


@pytest.fixture()
def fast_config():
    return RegistrationConfig(resize_policy="none")


def assert_unit_rows(arr: np.ndarray, atol: float = 1e-6) -> None:
    norms = np.linalg.norm(arr, axis=-1)
    assert np.all(np.abs(norms - 1.0) <= atol)
