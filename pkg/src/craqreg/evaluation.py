"""Control-point evaluation: ME/MAE metrics and success-rate tables."""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .config import RegistrationConfig
from .errors import EmptyDataset, EmptyErrorList, RegistrationError
from .geometry import Homography
from .images import load_image
from .pipeline import register


@dataclass
class ControlPointAnnotation:
    """Manually labeled point pairs in original image coordinates."""

    pair_id: str
    ref_pts: np.ndarray   # (N, 2)
    mov_pts: np.ndarray   # (N, 2)

    def __len__(self) -> int:
        return len(self.ref_pts)


def load_annotation(path: str | Path) -> ControlPointAnnotation:
    with open(path) as f:
        data = json.load(f)
    points = data.get("points", [])
    if not points:
        raise ValueError(f"{path}: annotation has no point pairs")
    ref = np.array([p["ref"] for p in points], dtype=float)
    mov = np.array([p["mov"] for p in points], dtype=float)
    if ref.shape != mov.shape or ref.shape[1] != 2:
        raise ValueError(f"{path}: malformed point pairs")
    if not (np.all(np.isfinite(ref)) and np.all(np.isfinite(mov))):
        raise ValueError(f"{path}: non-finite control point")
    return ControlPointAnnotation(
        pair_id=str(data.get("pair_id", Path(path).stem)), ref_pts=ref, mov_pts=mov
    )


def save_annotation(path: str | Path, ann: ControlPointAnnotation) -> None:
    doc = {
        "pair_id": ann.pair_id,
        "points": [
            {"ref": [float(a[0]), float(a[1])], "mov": [float(b[0]), float(b[1])]}
            for a, b in zip(ann.ref_pts, ann.mov_pts)
        ],
    }
    with open(path, "w") as f:
        json.dump(doc, f, indent=2)
        f.write("\n")


@dataclass
class ManifestEntry:
    pair_id: str
    reference: Path
    moving: Path
    annotations: Path
    domain: str = "all"


def load_manifest(path: str | Path) -> list[ManifestEntry]:
    """Dataset manifest; paths are resolved relative to the manifest file."""
    path = Path(path)
    with open(path) as f:
        data = json.load(f)
    entries = data.get("entries", [])
    base = path.parent
    out: list[ManifestEntry] = []
    seen: set[str] = set()
    for e in entries:
        pid = str(e["pair_id"])
        if pid in seen:
            raise ValueError(f"duplicate pair_id {pid!r} in manifest")
        seen.add(pid)
        entry = ManifestEntry(
            pair_id=pid,
            reference=base / e["reference"],
            moving=base / e["moving"],
            annotations=base / e["annotations"],
            domain=str(e.get("domain", "all")),
        )
        for p in (entry.reference, entry.moving, entry.annotations):
            if not p.exists():
                raise ValueError(f"manifest entry {pid!r}: missing file {p}")
        out.append(entry)
    return out


def pair_errors(h: Homography, ann: ControlPointAnnotation) -> np.ndarray:
    """Per-point forward transfer errors in reference-frame pixels."""
    proj = h.apply_many(ann.mov_pts)
    d = proj - ann.ref_pts
    return np.hypot(d[:, 0], d[:, 1])


def me(errors) -> float:
    errors = np.asarray(errors, dtype=float)
    if len(errors) == 0:
        raise EmptyErrorList("mean of empty error list")
    return float(errors.mean())


def mae(errors) -> float:
    errors = np.asarray(errors, dtype=float)
    if len(errors) == 0:
        raise EmptyErrorList("max of empty error list")
    return float(errors.max())


def success_rate(per_pair_metric, eps: float) -> float:
    """Percentage of pairs with metric <= eps; failures (inf) never count."""
    values = np.asarray(per_pair_metric, dtype=float)
    if len(values) == 0:
        raise EmptyDataset("success rate over empty dataset")
    if not eps > 0:
        raise ValueError("eps must be > 0")
    return float(100.0 * np.count_nonzero(values <= eps) / len(values))


@dataclass
class PairResult:
    pair_id: str
    domain: str
    me: float
    mae: float
    status: str          # "ok" or "failed:<stage>"


@dataclass
class SuccessRateRow:
    method: str
    domain: str
    metric: str          # "ME" | "MAE"
    threshold: float
    rate: float          # percent


@dataclass
class EvaluationResult:
    rows: list[SuccessRateRow]
    pairs: list[PairResult]

    def table_text(self) -> str:
        dom_w = max(10, max((len(r.domain) for r in self.rows), default=10))
        lines = [
            f"{'method':<18} {'domain':<{dom_w}} {'metric':<6} {'eps':>5} {'SR[%]':>7}"
        ]
        for r in self.rows:
            lines.append(
                f"{r.method:<18} {r.domain:<{dom_w}} {r.metric:<6} "
                f"{r.threshold:>5g} {r.rate:>7.1f}"
            )
        return "\n".join(lines) + "\n"

    def table_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf)
        writer.writerow(["method", "domain", "metric", "threshold", "success_rate"])
        for r in self.rows:
            writer.writerow([r.method, r.domain, r.metric, r.threshold, f"{r.rate:.6g}"])
        return buf.getvalue()

    def curve_csv(self, metric: str) -> str:
        """Threshold-vs-SR series per domain, one column per domain."""
        rows = [r for r in self.rows if r.metric == metric]
        domains = sorted({r.domain for r in rows})
        thresholds = sorted({r.threshold for r in rows})
        lookup = {(r.domain, r.threshold): r.rate for r in rows}
        buf = io.StringIO()
        writer = csv.writer(buf)
        writer.writerow(["threshold"] + domains)
        for t in thresholds:
            writer.writerow(
                [t] + [f"{lookup.get((d, t), float('nan')):.6g}" for d in domains]
            )
        return buf.getvalue()

    def pairs_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf)
        writer.writerow(["pair_id", "domain", "me", "mae", "status"])
        for p in self.pairs:
            writer.writerow([p.pair_id, p.domain, f"{p.me:.6g}", f"{p.mae:.6g}", p.status])
        return buf.getvalue()


def _check_bounds(ann: ControlPointAnnotation, ref_shape, mov_shape) -> None:
    rh, rw = ref_shape[:2]
    mh, mw = mov_shape[:2]
    if np.any(ann.ref_pts[:, 0] > rw - 1) or np.any(ann.ref_pts[:, 1] > rh - 1) or np.any(ann.ref_pts < 0):
        raise ValueError(f"{ann.pair_id}: reference control point outside image")
    if np.any(ann.mov_pts[:, 0] > mw - 1) or np.any(ann.mov_pts[:, 1] > mh - 1) or np.any(ann.mov_pts < 0):
        raise ValueError(f"{ann.pair_id}: moving control point outside image")


def evaluate_dataset(
    manifest: list[ManifestEntry],
    cfg: RegistrationConfig,
    thresholds_me,
    thresholds_mae,
    workers: int = 1,
) -> EvaluationResult:
    """Register every manifest pair and aggregate success rates.

    Per-pair registration failures are recorded (status failed:<stage>)
    and score as infinite error, capping the success rate at every
    threshold instead of being dropped.
    """
    if not manifest:
        raise EmptyDataset("manifest has no entries")
    pairs: list[PairResult] = []
    for entry in manifest:
        ref = load_image(entry.reference)
        mov = load_image(entry.moving)
        ann = load_annotation(entry.annotations)
        _check_bounds(ann, ref.shape, mov.shape)
        try:
            out = register(ref, mov, cfg, workers=workers)
            errs = pair_errors(out.h_original, ann)
            pairs.append(
                PairResult(entry.pair_id, entry.domain, me(errs), mae(errs), "ok")
            )
        except RegistrationError as exc:
            stage = exc.stage or "unknown"
            pairs.append(
                PairResult(entry.pair_id, entry.domain, np.inf, np.inf, f"failed:{stage}")
            )

    rows: list[SuccessRateRow] = []
    domains = sorted({p.domain for p in pairs})
    method = cfg.estimator.method
    for domain in domains:
        in_domain = [p for p in pairs if p.domain == domain]
        me_vals = [p.me for p in in_domain]
        mae_vals = [p.mae for p in in_domain]
        for eps in sorted(thresholds_me):
            rows.append(
                SuccessRateRow(method, domain, "ME", float(eps), success_rate(me_vals, eps))
            )
        for eps in sorted(thresholds_mae):
            rows.append(
                SuccessRateRow(method, domain, "MAE", float(eps), success_rate(mae_vals, eps))
            )
    return EvaluationResult(rows=rows, pairs=pairs)


def write_evaluation(out_dir: str | Path, result: EvaluationResult) -> Path:
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    (out_dir / "success_rates.txt").write_text(result.table_text())
    (out_dir / "success_rates.csv").write_text(result.table_csv())
    (out_dir / "curve_me.csv").write_text(result.curve_csv("ME"))
    (out_dir / "curve_mae.csv").write_text(result.curve_csv("MAE"))
    (out_dir / "pairs.csv").write_text(result.pairs_csv())
    return out_dir
