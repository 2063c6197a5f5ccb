"""FastAPI wiring for the review service.

Responses carry the page entry version in an X-Page-Version header so
clients can hand it back as the base version for corrections. The review
UI's static build, when present, is served at the root path.
"""

from __future__ import annotations

from pathlib import Path

from fastapi import FastAPI, HTTPException, Query, Response
from fastapi.responses import HTMLResponse, JSONResponse
from fastapi.staticfiles import StaticFiles

from ..extract import ExtractionConfig
from ..records import Flag
from ..validate import Rule
from ..workspace import ArtifactMissingError, UnknownPageError, Workspace
from .review import (CorrectionSet, Identity, NotExtractedError,
                     PromotionRefusedError, ReviewBundle, ReviewError,
                     ReviewService, VersionConflictError)
from .schemas import (ConflictModel, CorrectionSetModel, FlagModel,
                      IdentityModel, PageSummaryModel, PromoteRequestModel,
                      PromoteResponseModel, RecordModel, RefusalModel,
                      ReviewBundleModel)

_FALLBACK_INDEX = """<!doctype html>
<html><head><title>review service</title></head>
<body><h1>Review service is running</h1>
<p>No UI build found. The JSON API lives under <code>/api</code>.</p>
</body></html>"""


def _fmt_cents(cents: int) -> str:
    if cents % 100 == 0:
        return str(cents // 100)
    return f"{cents // 100}.{cents % 100:02d}"


def _flag_model(f: Flag) -> FlagModel:
    return FlagModel(code=f.code, severity=f.severity, detail=f.detail, row=f.row)


def _identity_model(identity: Identity) -> IdentityModel:
    return IdentityModel(
        status=identity.status,
        difference=_fmt_cents(identity.difference_cents),
        asset_sum=_fmt_cents(identity.asset_sum),
        liability_sum=_fmt_cents(identity.liability_sum),
        asset_total=None if identity.asset_total is None else _fmt_cents(identity.asset_total),
        liability_total=None if identity.liability_total is None else _fmt_cents(identity.liability_total),
    )


def _bundle_model(bundle: ReviewBundle, has_processed: bool) -> ReviewBundleModel:
    sheet = bundle.sheet
    row_flags: dict[int, list[FlagModel]] = {}
    sheet_flags: list[FlagModel] = []
    for f in bundle.flags:
        if f.row is not None:
            row_flags.setdefault(f.row, []).append(_flag_model(f))
        else:
            sheet_flags.append(_flag_model(f))
    records = [
        RecordModel(
            row=r.row_id,
            label=r.label,
            raw_value=r.raw_value,
            amount=r.amount.canonical if r.amount is not None else "",
            side=r.side,
            flags=row_flags.get(r.row_id, []),
        )
        for r in sheet.records
    ]
    return ReviewBundleModel(
        page_id=bundle.page_id,
        version=bundle.version,
        raw_image_url=f"/api/pages/{bundle.page_id}/image?version=raw",
        processed_image_url=f"/api/pages/{bundle.page_id}/image?version=processed" if has_processed else None,
        header=sheet.header_raw,
        records=records,
        sheet_flags=sheet_flags,
        identity=_identity_model(bundle.identity),
        reviewed=bundle.reviewed,
    )


def create_app(ws: Workspace, config: ExtractionConfig | None = None,
               rules: list[Rule] | None = None, ui_dir: str | Path | None = None) -> FastAPI:
    service = ReviewService(ws, config, rules)
    app = FastAPI(title="balance-sheet review service")
    app.state.service = service

    def versioned(payload, page_id: int, status_code: int = 200) -> JSONResponse:
        content = payload.model_dump() if hasattr(payload, "model_dump") else payload
        return JSONResponse(content, status_code=status_code,
                            headers={"X-Page-Version": str(ws.entry_version(page_id))})

    @app.get("/api/pages")
    def list_pages(filter: str = Query(default="all")) -> JSONResponse:
        try:
            summaries = service.list_pages(filter)
        except ReviewError as exc:
            raise HTTPException(status_code=422, detail=str(exc))
        return JSONResponse([PageSummaryModel(
            page_id=s.page_id, red=s.red, yellow=s.yellow, reviewed=s.reviewed,
            has_records=s.has_records, version=s.version,
        ).model_dump() for s in summaries])

    @app.get("/api/pages/{page_id}")
    def get_page(page_id: int) -> JSONResponse:
        try:
            bundle = service.get_bundle(page_id)
        except UnknownPageError as exc:
            raise HTTPException(status_code=404, detail=str(exc))
        except NotExtractedError as exc:
            raise HTTPException(status_code=404, detail=str(exc))
        return versioned(_bundle_model(bundle, ws.has_artifact(page_id, "processed")), page_id)

    @app.get("/api/pages/{page_id}/image")
    def get_image(page_id: int, version: str = Query(default="raw")) -> Response:
        if version not in ("raw", "processed"):
            raise HTTPException(status_code=422, detail="version must be raw or processed")
        try:
            if version == "raw":
                entry = ws.entries.get(page_id)
                if entry is None:
                    raise HTTPException(status_code=404, detail=f"page {page_id} not in manifest")
                if not entry.raw_image:
                    raise HTTPException(status_code=404, detail=f"page {page_id} has no raw image")
                payload = (ws.root / entry.raw_image).read_bytes()
            else:
                payload, _ = ws.load_artifact(page_id, "processed")
        except (ArtifactMissingError, UnknownPageError) as exc:
            raise HTTPException(status_code=404, detail=str(exc))
        return Response(content=payload, media_type="image/png",
                        headers={"X-Page-Version": str(ws.entry_version(page_id))})

    @app.put("/api/pages/{page_id}/records")
    def put_records(page_id: int, corrections: CorrectionSetModel) -> JSONResponse:
        cs = CorrectionSet(
            base_version=corrections.base_version,
            reviewer=corrections.reviewer,
            edits=[(e.row_id, e.field, e.value) for e in corrections.edits],
        )
        try:
            bundle = service.apply_corrections(page_id, cs)
        except VersionConflictError as exc:
            return versioned(ConflictModel(detail=str(exc), current_version=exc.current_version),
                             page_id, status_code=409)
        except (UnknownPageError, NotExtractedError) as exc:
            raise HTTPException(status_code=404, detail=str(exc))
        except ReviewError as exc:
            raise HTTPException(status_code=422, detail=str(exc))
        return versioned(_bundle_model(bundle, ws.has_artifact(page_id, "processed")), page_id)

    @app.post("/api/pages/{page_id}/truth")
    def promote(page_id: int, body: PromoteRequestModel | None = None) -> JSONResponse:
        reviewer = body.reviewer if body is not None else "anonymous"
        try:
            version = service.promote_to_ground_truth(page_id, reviewer)
        except PromotionRefusedError as exc:
            return versioned(RefusalModel(
                detail=str(exc), flags=[_flag_model(f) for f in exc.flags],
            ), page_id, status_code=422)
        except (UnknownPageError, ArtifactMissingError, NotExtractedError) as exc:
            raise HTTPException(status_code=404, detail=str(exc))
        return versioned(PromoteResponseModel(version=version), page_id)

    ui_path = Path(ui_dir) if ui_dir else None
    if ui_path is not None and ui_path.is_dir():
        app.mount("/", StaticFiles(directory=str(ui_path), html=True), name="ui")
    else:
        @app.get("/", response_class=HTMLResponse)
        def index() -> str:
            return _FALLBACK_INDEX

    return app
