"""FastAPI service exposing registration jobs, assets and configuration.

The companion browser UI talks only to these endpoints; the CLI `serve`
subcommand runs the same app under uvicorn.
"""

from __future__ import annotations

import io
import json
import tempfile
import uuid
import zipfile
from contextlib import asynccontextmanager
from pathlib import Path

from fastapi import FastAPI, HTTPException, UploadFile
from fastapi.responses import FileResponse, Response
from fastapi.staticfiles import StaticFiles

from ..config import (
    RegistrationConfig,
    config_path,
    default_config,
    load_persisted,
    save_persisted,
)
from ..errors import ConfigError
from ..images import decode_image, encode_png, image_size, load_image, save_png
from ..pipeline import overlay_blend
from .jobs import JobStore
from .models import (
    JobCreatedResponse,
    JobRecordResponse,
    PersistedConfigResponse,
    RegistrationRequest,
    UploadResponse,
)

DEFAULT_MAX_PIXELS = 200_000_000


def create_app(
    data_dir: str | Path | None = None,
    job_workers: int = 1,
    max_pixels: int = DEFAULT_MAX_PIXELS,
    static_dir: str | Path | None = None,
) -> FastAPI:
    root = Path(data_dir) if data_dir else Path(tempfile.mkdtemp(prefix="craqreg-"))
    uploads_dir = root / "uploads"
    uploads_dir.mkdir(parents=True, exist_ok=True)
    cfg_file = config_path(root)
    store = JobStore(root / "jobs", workers=job_workers)
    images: dict[str, dict] = {}

    @asynccontextmanager
    async def lifespan(app: FastAPI):
        store.start()
        yield
        store.stop()

    app = FastAPI(title="craqreg", lifespan=lifespan)
    app.state.data_dir = root
    app.state.job_store = store

    def _current_config() -> RegistrationConfig:
        try:
            return load_persisted(cfg_file)
        except (ConfigError, json.JSONDecodeError):
            return default_config()

    def _job_or_404(job_id: str) -> dict:
        snap = store.get(job_id)
        if snap is None:
            raise HTTPException(status_code=404, detail=f"unknown job {job_id!r}")
        return snap

    @app.post("/api/images", response_model=UploadResponse)
    async def upload_image(file: UploadFile) -> UploadResponse:
        """Accept a PNG/JPEG/TIFF upload and stage it for registration."""
        data = await file.read()
        try:
            w, h = image_size(data)
        except Exception:
            raise HTTPException(status_code=400, detail="undecodable image") from None
        if w * h > max_pixels:
            raise HTTPException(
                status_code=413,
                detail=f"image has {w * h} pixels, cap is {max_pixels}",
            )
        try:
            arr = decode_image(data)
        except Exception:
            raise HTTPException(status_code=400, detail="undecodable image") from None
        image_id = uuid.uuid4().hex
        path = uploads_dir / f"{image_id}.png"
        save_png(path, arr)
        images[image_id] = {
            "path": path,
            "width": arr.shape[1],
            "height": arr.shape[0],
        }
        return UploadResponse(
            image_id=image_id, width=arr.shape[1], height=arr.shape[0]
        )

    @app.get("/api/config", response_model=PersistedConfigResponse)
    def get_config() -> PersistedConfigResponse:
        cfg = _current_config()
        return PersistedConfigResponse(
            defaults=cfg == default_config(), config=cfg.to_dict()
        )

    @app.put("/api/config", response_model=PersistedConfigResponse)
    def put_config(body: dict) -> PersistedConfigResponse:
        """Validate and persist the configuration; 400 names the bad field."""
        payload = body.get("config", body)
        try:
            cfg = RegistrationConfig.from_dict(payload)
        except ConfigError as exc:
            raise HTTPException(
                status_code=400, detail={"field": exc.field, "message": str(exc)}
            ) from None
        doc = save_persisted(cfg_file, cfg)
        return PersistedConfigResponse(**doc)

    @app.post("/api/config/reset", response_model=PersistedConfigResponse)
    def reset_config() -> PersistedConfigResponse:
        doc = save_persisted(cfg_file, default_config())
        return PersistedConfigResponse(**doc)

    @app.post("/api/registrations", response_model=JobCreatedResponse)
    def create_registration(req: RegistrationRequest) -> JobCreatedResponse:
        """Queue an asynchronous registration job; poll its record for state."""
        for name, image_id in (("reference_id", req.reference_id),
                               ("moving_id", req.moving_id)):
            if image_id not in images:
                raise HTTPException(
                    status_code=404, detail=f"unknown image for {name}: {image_id!r}"
                )
        if req.config is not None:
            try:
                cfg = RegistrationConfig.from_dict(req.config)
            except ConfigError as exc:
                raise HTTPException(
                    status_code=400, detail={"field": exc.field, "message": str(exc)}
                ) from None
        else:
            cfg = _current_config()
        job_id = store.submit(
            images[req.reference_id]["path"], images[req.moving_id]["path"], cfg
        )
        return JobCreatedResponse(job_id=job_id)

    @app.get("/api/registrations/{job_id}", response_model=JobRecordResponse)
    def get_registration(job_id: str) -> JobRecordResponse:
        return JobRecordResponse(**_job_or_404(job_id))

    def _done_or_409(job_id: str) -> dict:
        snap = _job_or_404(job_id)
        if snap["state"] != "done":
            raise HTTPException(
                status_code=409, detail=f"job is {snap['state']}, not done"
            )
        return snap

    @app.get("/api/registrations/{job_id}/assets/{asset}")
    def get_asset(job_id: str, asset: str) -> FileResponse:
        _done_or_409(job_id)
        path = store.asset_path(job_id, asset)
        if path is None or not path.exists():
            raise HTTPException(status_code=404, detail=f"no asset {asset!r}")
        return FileResponse(path, media_type="image/png")

    @app.get("/api/registrations/{job_id}/blend")
    def get_blend(job_id: str, alpha: float = 0.5) -> Response:
        """Server-rendered blend; the UI normally composites client-side."""
        _done_or_409(job_id)
        if not 0.0 <= alpha <= 1.0:
            raise HTTPException(status_code=400, detail="alpha must be in [0, 1]")
        d = store.bundle_dir(job_id)
        ref = load_image(d / "reference.png")
        warped = load_image(d / "warped.png")
        png = encode_png(overlay_blend(ref, warped, alpha))
        return Response(content=png, media_type="image/png")

    @app.get("/api/registrations/{job_id}/export")
    def export_bundle(job_id: str) -> Response:
        _done_or_409(job_id)
        files = store.export_files(job_id)
        buf = io.BytesIO()
        with zipfile.ZipFile(buf, "w", zipfile.ZIP_DEFLATED) as zf:
            for path in files:
                zf.write(path, arcname=path.name)
        return Response(
            content=buf.getvalue(),
            media_type="application/zip",
            headers={
                "Content-Disposition": f'attachment; filename="{job_id}.zip"'
            },
        )

    if static_dir is not None and Path(static_dir).is_dir():
        app.mount("/", StaticFiles(directory=static_dir, html=True), name="ui")

    return app
