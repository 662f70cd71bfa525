"""Projective geometry: homographies, DLT estimation, transfer errors.

Convention: a homography ``h`` maps points of the *moving* image into the
*reference* image, so errors are measured in reference-image pixels.
"""

from __future__ import annotations

import numpy as np

from .errors import DegenerateConfiguration, DegenerateHomography, DegeneratePoint

W_EPS = 1e-12        # projective denominator cutoff
DET_EPS = 1e-12      # invertibility cutoff after normalization
RANK_RTOL = 1e-10    # design-matrix rank-deficiency ratio


def _normalized(m: np.ndarray) -> np.ndarray:
    """Scale so m[2,2] = 1, or to unit Frobenius norm when m[2,2] ~ 0."""
    if abs(m[2, 2]) > 1e-9:
        return m / m[2, 2]
    n = np.linalg.norm(m)
    if n <= W_EPS:
        raise DegenerateHomography("matrix is numerically zero")
    m = m / n
    # fix the sign so the representation is unique
    k = int(np.argmax(np.abs(m)))
    if m.flat[k] < 0:
        m = -m
    return m


class Homography:
    """Immutable 3x3 projective transform.

    Normalized on construction (m[2,2] = 1 where possible, unit Frobenius
    norm otherwise) and checked for invertibility.
    """

    __slots__ = ("m",)

    def __init__(self, m):
        m = np.array(m, dtype=float)
        if m.shape != (3, 3):
            raise DegenerateHomography(f"expected 3x3 matrix, got {m.shape}")
        if not np.all(np.isfinite(m)):
            raise DegenerateHomography("matrix has non-finite entries")
        m = _normalized(m)
        if abs(np.linalg.det(m)) <= DET_EPS:
            raise DegenerateHomography("matrix is not invertible")
        m.setflags(write=False)
        self.m = m

    @classmethod
    def identity(cls) -> "Homography":
        return cls(np.eye(3))

    @classmethod
    def translation(cls, tx: float, ty: float) -> "Homography":
        m = np.eye(3)
        m[0, 2] = tx
        m[1, 2] = ty
        return cls(m)

    @classmethod
    def scaling(cls, sx: float, sy: float | None = None) -> "Homography":
        sy = sx if sy is None else sy
        return cls(np.diag([sx, sy, 1.0]))

    @classmethod
    def from_flat(cls, values) -> "Homography":
        arr = np.asarray(values, dtype=float)
        if arr.shape != (9,):
            raise DegenerateHomography("expected 9 row-major values")
        return cls(arr.reshape(3, 3))

    def as_flat(self) -> list[float]:
        """Row-major 9-element list, the serialization format."""
        return [float(v) for v in self.m.ravel()]

    def inverse(self) -> "Homography":
        return Homography(np.linalg.inv(self.m))

    def __matmul__(self, other: "Homography") -> "Homography":
        return Homography(self.m @ other.m)

    def apply(self, p) -> np.ndarray:
        """Transfer a single point; raises DegeneratePoint near the horizon."""
        x, y = float(p[0]), float(p[1])
        m = self.m
        w = m[2, 0] * x + m[2, 1] * y + m[2, 2]
        if abs(w) <= W_EPS:
            raise DegeneratePoint(f"point ({x}, {y}) maps to infinity")
        return np.array([
            (m[0, 0] * x + m[0, 1] * y + m[0, 2]) / w,
            (m[1, 0] * x + m[1, 1] * y + m[1, 2]) / w,
        ])

    def apply_many(self, pts: np.ndarray) -> np.ndarray:
        """Transfer an (N, 2) array of points.

        Raises DegeneratePoint if any denominator vanishes; use
        :func:`transfer_errors` inside estimators where degenerate points
        should score as outliers instead.
        """
        pts = np.asarray(pts, dtype=float)
        hom = np.column_stack([pts, np.ones(len(pts))])
        proj = hom @ self.m.T
        w = proj[:, 2]
        if np.any(np.abs(w) <= W_EPS):
            raise DegeneratePoint("some points map to infinity")
        return proj[:, :2] / w[:, None]

    def __repr__(self) -> str:  # pragma: no cover
        return f"Homography({self.m.tolist()})"


def reprojection_error(h: Homography, a, b) -> float:
    """Forward transfer error ||h(b) - a|| in reference-image pixels."""
    d = h.apply(b) - np.asarray(a, dtype=float)
    return float(np.hypot(d[0], d[1]))


def transfer_errors(h: Homography, pts_a: np.ndarray, pts_b: np.ndarray) -> np.ndarray:
    """Per-correspondence forward transfer errors, vectorized.

    Points whose projective denominator vanishes get error +inf rather
    than raising, so robust estimators can treat them as outliers.
    """
    pts_a = np.asarray(pts_a, dtype=float)
    pts_b = np.asarray(pts_b, dtype=float)
    hom = np.column_stack([pts_b, np.ones(len(pts_b))])
    proj = hom @ h.m.T
    w = proj[:, 2]
    ok = np.abs(w) > W_EPS
    err = np.full(len(pts_b), np.inf)
    d = proj[ok, :2] / w[ok, None] - pts_a[ok]
    err[ok] = np.hypot(d[:, 0], d[:, 1])
    return err


def _hartley_transform(pts: np.ndarray) -> np.ndarray:
    """Similarity moving the centroid to 0 and mean radius to sqrt(2)."""
    c = pts.mean(axis=0)
    d = np.mean(np.hypot(pts[:, 0] - c[0], pts[:, 1] - c[1]))
    if d < W_EPS:
        raise DegenerateConfiguration("all points coincide")
    s = np.sqrt(2.0) / d
    return np.array([
        [s, 0.0, -s * c[0]],
        [0.0, s, -s * c[1]],
        [0.0, 0.0, 1.0],
    ])


def estimate_dlt(
    pts_a: np.ndarray,
    pts_b: np.ndarray,
    weights: np.ndarray | None = None,
) -> Homography:
    """Normalized direct linear transform mapping ``pts_b`` onto ``pts_a``.

    Both point sets are Hartley-normalized (centroid at the origin, mean
    distance sqrt(2)), the 2n x 9 system is solved by SVD, and the result
    is denormalized. Optional non-negative per-correspondence weights
    scale the equation rows (used by the weighted refit of the
    continuous-score estimator).

    Raises
    ------
    DegenerateConfiguration
        Fewer than 4 points, or the design matrix is rank-deficient
        (e.g. 3 of 4 points collinear), detected via the ratio of the
        8th singular value to the largest.
    """
    pts_a = np.asarray(pts_a, dtype=float)
    pts_b = np.asarray(pts_b, dtype=float)
    n = len(pts_a)
    if n < 4 or len(pts_b) != n:
        raise DegenerateConfiguration(f"need >= 4 correspondences, got {n}")
    if not (np.all(np.isfinite(pts_a)) and np.all(np.isfinite(pts_b))):
        raise DegenerateConfiguration("non-finite correspondence coordinates")

    t_a = _hartley_transform(pts_a)
    t_b = _hartley_transform(pts_b)
    na = np.column_stack([pts_a, np.ones(n)]) @ t_a.T
    nb = np.column_stack([pts_b, np.ones(n)]) @ t_b.T

    a = np.zeros((2 * n, 9))
    a[0::2, 0:3] = nb
    a[0::2, 6:9] = -na[:, 0:1] * nb
    a[1::2, 3:6] = nb
    a[1::2, 6:9] = -na[:, 1:2] * nb
    if weights is not None:
        w = np.sqrt(np.maximum(np.asarray(weights, dtype=float), 0.0))
        if np.count_nonzero(w) < 4:
            raise DegenerateConfiguration("fewer than 4 positive weights")
        a *= np.repeat(w, 2)[:, None]

    u, s, vt = np.linalg.svd(a)
    # s has min(2n, 9) >= 8 entries; a vanishing 8th value means the
    # solution space has dimension > 1.
    if s[7] <= RANK_RTOL * s[0]:
        raise DegenerateConfiguration("rank-deficient design matrix")
    h_norm = vt[-1].reshape(3, 3)
    m = np.linalg.inv(t_a) @ h_norm @ t_b
    try:
        return Homography(m)
    except DegenerateHomography as exc:
        raise DegenerateConfiguration(str(exc)) from exc
