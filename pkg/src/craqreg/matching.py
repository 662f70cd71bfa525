"""Mutual nearest-neighbor descriptor matching."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import NoMatches


@dataclass
class Matches:
    """Index pairs into two detection results, sorted by ascending distance."""

    idx_ref: np.ndarray   # (M,) int64
    idx_mov: np.ndarray   # (M,) int64
    dist: np.ndarray      # (M,) float64, L2 descriptor distance

    def __len__(self) -> int:
        return len(self.idx_ref)


def match_mutual_nn(
    desc_ref: np.ndarray, desc_mov: np.ndarray, chunk: int = 512
) -> Matches:
    """Keep (i, j) iff j is i's nearest neighbor and i is j's.

    Distances are L2 between descriptor rows (equivalent ordering to
    cosine distance on unit vectors). Argmin ties resolve to the
    smaller index; output is sorted by (distance, reference index).

    Raises NoMatches if either side is empty or no mutual pair exists.
    """
    a = np.asarray(desc_ref, dtype=float)
    b = np.asarray(desc_mov, dtype=float)
    if a.ndim != 2 or b.ndim != 2 or a.shape[1] != b.shape[1]:
        raise ValueError("descriptor arrays must be (N, D) with matching D")
    na, nb = len(a), len(b)
    if na == 0 or nb == 0:
        raise NoMatches("empty descriptor set")

    bb = np.einsum("ij,ij->i", b, b)
    nn_ab = np.empty(na, dtype=np.int64)
    d2_ab = np.empty(na)
    best_ba = np.full(nb, np.inf)
    nn_ba = np.zeros(nb, dtype=np.int64)
    for lo in range(0, na, chunk):
        rows = a[lo : lo + chunk]
        d2 = (
            np.einsum("ij,ij->i", rows, rows)[:, None]
            + bb[None, :]
            - 2.0 * rows @ b.T
        )
        np.maximum(d2, 0.0, out=d2)
        nn_ab[lo : lo + chunk] = d2.argmin(axis=1)
        d2_ab[lo : lo + chunk] = d2[np.arange(len(rows)), nn_ab[lo : lo + chunk]]
        col_min = d2.min(axis=0)
        col_arg = d2.argmin(axis=0) + lo
        better = col_min < best_ba
        best_ba[better] = col_min[better]
        nn_ba[better] = col_arg[better]

    mutual = nn_ba[nn_ab] == np.arange(na)
    idx_ref = np.nonzero(mutual)[0].astype(np.int64)
    if len(idx_ref) == 0:
        raise NoMatches("no mutual nearest-neighbor pair")
    idx_mov = nn_ab[idx_ref]
    dist = np.sqrt(d2_ab[idx_ref])
    order = np.lexsort((idx_ref, dist))
    return Matches(idx_ref=idx_ref[order], idx_mov=idx_mov[order], dist=dist[order])
