"""Pydantic request/response schemas for the HTTP API."""

from __future__ import annotations

from typing import Any, Optional

from pydantic import BaseModel


class UploadResponse(BaseModel):
    image_id: str
    width: int
    height: int


class RegistrationRequest(BaseModel):
    reference_id: str
    moving_id: str
    config: Optional[dict[str, Any]] = None


class JobCreatedResponse(BaseModel):
    job_id: str


class JobRecordResponse(BaseModel):
    job_id: str
    state: str
    stage: Optional[str] = None
    message: Optional[str] = None
    config: dict[str, Any]
    timings_ms: dict[str, float] = {}
    result: Optional[dict[str, Any]] = None
    assets: list[str] = []


class PersistedConfigResponse(BaseModel):
    defaults: bool
    config: dict[str, Any]
