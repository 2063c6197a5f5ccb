"""Pydantic request/response models for the review HTTP API."""

from __future__ import annotations

from pydantic import BaseModel, Field


class FlagModel(BaseModel):
    code: str
    severity: str
    detail: str
    row: int | None = None


class RecordModel(BaseModel):
    row: int
    label: str
    raw_value: str
    amount: str
    side: str
    flags: list[FlagModel] = Field(default_factory=list)


class IdentityModel(BaseModel):
    status: str  # balanced | mismatch
    difference: str
    asset_sum: str
    liability_sum: str
    asset_total: str | None = None
    liability_total: str | None = None


class ReviewBundleModel(BaseModel):
    page_id: int
    version: int
    raw_image_url: str
    processed_image_url: str | None = None
    header: str = ""
    records: list[RecordModel] = Field(default_factory=list)
    sheet_flags: list[FlagModel] = Field(default_factory=list)
    identity: IdentityModel
    reviewed: bool = False


class PageSummaryModel(BaseModel):
    page_id: int
    red: int
    yellow: int
    reviewed: bool
    has_records: bool
    version: int


class CorrectionEditModel(BaseModel):
    row_id: int
    field: str  # label | amount
    value: str


class CorrectionSetModel(BaseModel):
    base_version: int
    reviewer: str
    edits: list[CorrectionEditModel]


class ConflictModel(BaseModel):
    detail: str
    current_version: int


class PromoteRequestModel(BaseModel):
    reviewer: str = "anonymous"


class PromoteResponseModel(BaseModel):
    version: int


class RefusalModel(BaseModel):
    detail: str
    flags: list[FlagModel]
