"""In-memory job queue executing registrations on worker threads.

Job states move strictly pending -> running -> done | failed; snapshots
are taken under a lock so readers never observe a half-updated record.
Jobs are not persisted across restarts.
"""

from __future__ import annotations

import json
import queue
import threading
import uuid
from dataclasses import dataclass, field
from pathlib import Path

from ..config import RegistrationConfig
from ..errors import RegistrationError
from ..images import load_image
from ..pipeline import register, result_manifest, write_bundle

_SENTINEL = None


@dataclass
class Job:
    job_id: str
    reference_path: Path
    moving_path: Path
    config: RegistrationConfig
    bundle_dir: Path
    state: str = "pending"
    stage: str | None = None
    message: str | None = None
    timings_ms: dict = field(default_factory=dict)
    result: dict | None = None
    assets: list[str] = field(default_factory=list)


_ASSET_FILES = {
    "warped": "warped.png",
    "overlay_redcyan": "overlay_redcyan.png",
    "matches": "matches.png",
    "reference": "reference.png",
    "moving": "moving.png",
}


class JobStore:
    """Submission, execution and snapshot access for registration jobs."""

    def __init__(self, jobs_dir: Path, workers: int = 1):
        self._jobs_dir = Path(jobs_dir)
        self._jobs_dir.mkdir(parents=True, exist_ok=True)
        self._jobs: dict[str, Job] = {}
        self._lock = threading.Lock()
        self._queue: queue.Queue = queue.Queue()
        self._workers = max(1, workers)
        self._threads: list[threading.Thread] = []

    def start(self) -> None:
        for i in range(self._workers):
            t = threading.Thread(target=self._worker, name=f"craqreg-job-{i}", daemon=True)
            t.start()
            self._threads.append(t)

    def stop(self) -> None:
        for _ in self._threads:
            self._queue.put(_SENTINEL)
        for t in self._threads:
            t.join(timeout=30)
        self._threads.clear()

    def submit(self, reference_path: Path, moving_path: Path, cfg: RegistrationConfig) -> str:
        job_id = uuid.uuid4().hex
        job = Job(
            job_id=job_id,
            reference_path=Path(reference_path),
            moving_path=Path(moving_path),
            config=cfg,
            bundle_dir=self._jobs_dir / job_id,
        )
        with self._lock:
            self._jobs[job_id] = job
        self._queue.put(job_id)
        return job_id

    def get(self, job_id: str) -> dict | None:
        with self._lock:
            job = self._jobs.get(job_id)
            if job is None:
                return None
            snap = {
                "job_id": job.job_id,
                "state": job.state,
                "stage": job.stage,
                "message": job.message,
                "config": job.config.to_dict(),
                "timings_ms": dict(job.timings_ms),
                "result": dict(job.result) if job.result else None,
                "assets": list(job.assets),
            }
        return snap

    def bundle_dir(self, job_id: str) -> Path | None:
        with self._lock:
            job = self._jobs.get(job_id)
            return job.bundle_dir if job else None

    def asset_path(self, job_id: str, asset: str) -> Path | None:
        if asset not in _ASSET_FILES:
            return None
        d = self.bundle_dir(job_id)
        return d / _ASSET_FILES[asset] if d else None

    def _set_state(self, job_id: str, state: str, **fields) -> None:
        with self._lock:
            job = self._jobs[job_id]
            job.state = state
            for k, v in fields.items():
                setattr(job, k, v)

    def _worker(self) -> None:
        while True:
            job_id = self._queue.get()
            if job_id is _SENTINEL:
                return
            with self._lock:
                job = self._jobs[job_id]
            self._set_state(job_id, "running")
            try:
                ref = load_image(job.reference_path)
                mov = load_image(job.moving_path)
                out = register(ref, mov, job.config)
                write_bundle(job.bundle_dir, ref, mov, out, job.config)
                manifest = result_manifest(out, job.config)
                assets = [
                    name
                    for name, fname in _ASSET_FILES.items()
                    if (job.bundle_dir / fname).exists()
                ]
                self._set_state(
                    job_id,
                    "done",
                    timings_ms={k: round(v, 3) for k, v in out.timings_ms.items()},
                    result=manifest,
                    assets=assets,
                )
            except RegistrationError as exc:
                self._set_state(
                    job_id, "failed", stage=exc.stage or "pipeline", message=str(exc)
                )
            except Exception as exc:  # pragma: no cover - defensive
                self._set_state(job_id, "failed", stage="internal", message=repr(exc))

    def export_files(self, job_id: str) -> list[Path] | None:
        """Bundle files as listed in result.json, for the export zip."""
        d = self.bundle_dir(job_id)
        if d is None:
            return None
        result_file = d / "result.json"
        if not result_file.exists():
            return None
        with open(result_file) as f:
            names = json.load(f)["files"]
        return [d / n for n in names]
