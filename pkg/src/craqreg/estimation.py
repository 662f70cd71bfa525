"""Robust homography estimation: RANSAC, LO-RANSAC and a threshold-free
truncated-quadratic scorer.

All variants share the same seeded sampling loop (PCG64, a portable
64-bit generator) and adaptive termination, so runs are reproducible
bit-for-bit from the configured seed and paired-seed comparisons between
variants are meaningful.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .config import EstimatorConfig
from .errors import DegenerateConfiguration, DegenerateHomography, EstimationFailed
from .geometry import Homography, estimate_dlt, transfer_errors
from .matching import Matches

MIN_SAMPLE = 4
LO_MAX_ROUNDS = 10
MAGSAC_TAU_FACTOR = 3.0
MAGSAC_REFIT_ROUNDS = 3


@dataclass
class EstimationReport:
    """Audit trail of one robust estimation run."""

    h: Homography
    inlier_mask: np.ndarray
    iterations_run: int
    method: str
    score: float

    @property
    def inlier_count(self) -> int:
        return int(self.inlier_mask.sum())


def _sample4(rng: np.random.Generator, n: int) -> list[int]:
    """Floyd's algorithm: uniform 4-subset of range(n)."""
    chosen: set[int] = set()
    out: list[int] = []
    for j in range(n - MIN_SAMPLE, n):
        t = int(rng.integers(0, j + 1))
        if t in chosen:
            t = j
        chosen.add(t)
        out.append(t)
    return out


def _adaptive_trials(inlier_ratio: float, confidence: float) -> int:
    p_good = inlier_ratio**MIN_SAMPLE
    if p_good >= 1.0 - 1e-15:
        return 0
    if p_good <= 0.0:
        return np.iinfo(np.int64).max
    return int(math.ceil(math.log1p(-confidence) / math.log1p(-p_good)))


def _truncated_score(errors: np.ndarray, tau_max: float) -> float:
    # errors of +inf (degenerate transfers) contribute 0
    contrib = 1.0 - (errors / tau_max) ** 2
    return float(np.maximum(0.0, contrib).sum())


def _local_optimize(
    h: Homography,
    mask: np.ndarray,
    pts_a: np.ndarray,
    pts_b: np.ndarray,
    tau: float,
) -> tuple[Homography, np.ndarray]:
    """Iterative refit-on-inliers until the inlier set is stable.

    The consensus can oscillate between rounds, so the best round seen
    is returned rather than the last.
    """
    best_h, best_mask = h, mask
    for _ in range(LO_MAX_ROUNDS):
        if mask.sum() < MIN_SAMPLE:
            break
        try:
            h2 = estimate_dlt(pts_a[mask], pts_b[mask])
        except DegenerateConfiguration:
            break
        mask2 = transfer_errors(h2, pts_a, pts_b) < tau
        stable = bool(np.array_equal(mask2, mask))
        h, mask = h2, mask2
        if mask2.sum() >= best_mask.sum():
            best_h, best_mask = h2, mask2
        if stable:
            break
    return best_h, best_mask


def _refit_on_mask(
    h: Homography,
    mask: np.ndarray,
    pts_a: np.ndarray,
    pts_b: np.ndarray,
    tau: float,
) -> tuple[Homography, np.ndarray]:
    """Final least-squares refit on the consensus set.

    Falls back to the input model if the refit is degenerate or drops
    the consensus below the minimal sample.
    """
    if mask.sum() >= MIN_SAMPLE:
        try:
            h2 = estimate_dlt(pts_a[mask], pts_b[mask])
        except DegenerateConfiguration:
            return h, mask
        mask2 = transfer_errors(h2, pts_a, pts_b) < tau
        if mask2.sum() >= MIN_SAMPLE:
            return h2, mask2
    return h, mask


def _magsac_refit(
    h: Homography,
    pts_a: np.ndarray,
    pts_b: np.ndarray,
    tau_max: float,
) -> Homography:
    for _ in range(MAGSAC_REFIT_ROUNDS):
        e = transfer_errors(h, pts_a, pts_b)
        w = np.maximum(0.0, 1.0 - (e / tau_max) ** 2)
        if np.count_nonzero(w) < MIN_SAMPLE:
            break
        try:
            h = estimate_dlt(pts_a, pts_b, weights=w)
        except DegenerateConfiguration:
            break
    return h


def _run(
    matches: Matches,
    pts_ref: np.ndarray,
    pts_mov: np.ndarray,
    cfg: EstimatorConfig,
    method: str,
) -> EstimationReport:
    m = len(matches)
    if m < MIN_SAMPLE:
        raise EstimationFailed(f"need >= {MIN_SAMPLE} matches, got {m}")
    pts_ref = np.asarray(pts_ref, dtype=float)
    pts_mov = np.asarray(pts_mov, dtype=float)
    a = pts_ref[matches.idx_ref]
    b = pts_mov[matches.idx_mov]

    rng = np.random.Generator(np.random.PCG64(cfg.seed))
    tau = cfg.tau_reproj
    tau_max = MAGSAC_TAU_FACTOR * tau
    magsac = method == "magsac-simplified"

    best_h: Homography | None = None
    best_mask = np.zeros(m, dtype=bool)
    best_count = 0
    best_mean = np.inf
    best_score = -np.inf
    # termination tracks the best *sampled* consensus so a seed-paired
    # lo-ransac run explores exactly the hypotheses plain RANSAC does;
    # local optimization then only ever adds inliers on top
    raw_count = 0
    raw_mean = np.inf
    needed = cfg.max_iters
    it = 0

    while it < min(cfg.max_iters, needed):
        it += 1
        idx = _sample4(rng, m)
        try:
            h = estimate_dlt(a[idx], b[idx])
        except (DegenerateConfiguration, DegenerateHomography):
            continue
        e = transfer_errors(h, a, b)
        mask = e < tau
        count = int(mask.sum())
        mean_err = float(e[mask].mean()) if count else np.inf

        if count > raw_count or (count == raw_count and mean_err < raw_mean):
            raw_count, raw_mean = count, mean_err

        if magsac:
            score = _truncated_score(e, tau_max)
            better = score > best_score
        else:
            better = count > best_count or (
                count == best_count and mean_err < best_mean
            )
        if better:
            best_h, best_mask, best_count = h, mask, count
            best_mean = mean_err
            best_score = _truncated_score(e, tau_max) if magsac else float(count)

            if method == "lo-ransac" and count >= MIN_SAMPLE:
                h_lo, mask_lo = _local_optimize(h, mask, a, b, tau)
                if int(mask_lo.sum()) > best_count:
                    e_lo = transfer_errors(h_lo, a, b)
                    best_h, best_mask = h_lo, mask_lo
                    best_count = int(mask_lo.sum())
                    best_mean = float(e_lo[mask_lo].mean())

        term_count = raw_count if method == "lo-ransac" else best_count
        needed = _adaptive_trials(term_count / m, cfg.confidence)

    if best_h is None or best_count < MIN_SAMPLE:
        raise EstimationFailed(
            f"{method}: no model reached {MIN_SAMPLE} inliers in {it} iterations"
        )

    if magsac:
        h_final = _magsac_refit(best_h, a, b, tau_max)
        mask_final = transfer_errors(h_final, a, b) < tau
        if mask_final.sum() < MIN_SAMPLE:
            h_final, mask_final = best_h, best_mask
        score = _truncated_score(transfer_errors(h_final, a, b), tau_max)
    elif method == "lo-ransac":
        # the variant's final refit is its own optimization loop:
        # refit-on-inliers until the consensus set is stable
        h_final, mask_final = _local_optimize(best_h, best_mask, a, b, tau)
        if mask_final.sum() < MIN_SAMPLE:
            h_final, mask_final = best_h, best_mask
        score = float(mask_final.sum())
    else:
        h_final, mask_final = _refit_on_mask(best_h, best_mask, a, b, tau)
        score = float(mask_final.sum())

    return EstimationReport(
        h=h_final,
        inlier_mask=mask_final,
        iterations_run=it,
        method=method,
        score=score,
    )


def estimate_ransac(
    matches: Matches, pts_ref: np.ndarray, pts_mov: np.ndarray, cfg: EstimatorConfig
) -> EstimationReport:
    """Plain RANSAC: hypotheses from random 4-samples scored by inlier
    count (ties by lower mean inlier error), adaptive termination, and a
    final least-squares refit on the consensus set."""
    return _run(matches, pts_ref, pts_mov, cfg, "ransac")


def estimate_lo_ransac(
    matches: Matches, pts_ref: np.ndarray, pts_mov: np.ndarray, cfg: EstimatorConfig
) -> EstimationReport:
    """RANSAC plus iterative local optimization of each new best model
    (refit on inliers, recompute inliers, until stable); the optimized
    model replaces the best when it improves the inlier count."""
    return _run(matches, pts_ref, pts_mov, cfg, "lo-ransac")


def estimate_magsac_simplified(
    matches: Matches, pts_ref: np.ndarray, pts_mov: np.ndarray, cfg: EstimatorConfig
) -> EstimationReport:
    """Threshold-free scoring variant: models maximize the truncated
    quadratic score sum(max(0, 1 - e^2/tau_max^2)) with tau_max = 3 tau,
    and the final model is a weighted refit iterated 3 times. The inlier
    mask is still reported at tau for comparability."""
    return _run(matches, pts_ref, pts_mov, cfg, "magsac-simplified")


_METHODS = {
    "ransac": estimate_ransac,
    "lo-ransac": estimate_lo_ransac,
    "magsac-simplified": estimate_magsac_simplified,
}


def estimate_homography(
    matches: Matches, pts_ref: np.ndarray, pts_mov: np.ndarray, cfg: EstimatorConfig
) -> EstimationReport:
    """Dispatch to the estimator named in the config."""
    try:
        fn = _METHODS[cfg.method]
    except KeyError:
        raise EstimationFailed(f"unknown estimator method {cfg.method!r}") from None
    return fn(matches, pts_ref, pts_mov, cfg)
