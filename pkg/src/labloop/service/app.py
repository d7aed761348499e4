"""HTTP service for the approval workflow.

A thin, stateless view over the run store: reviewers list runs, inspect
critic feedback, browse reports and idea populations, and commit verdicts.
Runs themselves are started by the CLI; both sides coordinate purely
through the persisted store, so the service can restart at any time.
"""

from __future__ import annotations

import asyncio
import json
from pathlib import Path

from fastapi import FastAPI, HTTPException
from fastapi.responses import StreamingResponse
from fastapi.staticfiles import StaticFiles

from ..errors import RunNotFoundError, VerdictConflictError
from ..pipeline.store import RunRecord, RunStore
from .schemas import (
    EventBatch,
    EventOut,
    FeedbackBundle,
    FeedbackOut,
    IterationOut,
    PendingApproval,
    RunDetail,
    RunSummary,
    VerdictIn,
    VerdictOut,
)

EVENT_POLL_INTERVAL = 0.25


def _summary(store: RunStore, record: RunRecord) -> RunSummary:
    iteration = len(record.iterations)
    if store.has_artifact(record.run_id, "state.json"):
        iteration = store.read_artifact(record.run_id, "state.json").get("iteration", iteration)
    return RunSummary(
        run_id=record.run_id,
        status=record.status,
        query=record.query,
        iteration=iteration,
        pending_approval=record.status in ("awaiting-approval", "paused"),
        updated_at=record.updated_at,
    )


def create_app(store: RunStore, frontend_dir: Path | str | None = None) -> FastAPI:
    app = FastAPI(title="labloop approval service", version="1")

    def load_record(run_id: str) -> RunRecord:
        try:
            return store.load_record(run_id)
        except RunNotFoundError:
            raise HTTPException(status_code=404, detail=f"no such run: {run_id}")

    @app.get("/runs", response_model=list[RunSummary])
    def list_runs():
        return [_summary(store, record) for record in store.list_runs()]

    @app.get("/runs/{run_id}", response_model=RunDetail)
    def run_detail(run_id: str):
        record = load_record(run_id)
        summary = _summary(store, record)
        return RunDetail(
            **summary.model_dump(),
            dataset_root=record.dataset_root,
            seed=record.seed,
            error=record.error,
            iterations=record.iterations,
        )

    @app.get("/runs/{run_id}/feedback", response_model=FeedbackBundle)
    def feedback(run_id: str):
        record = load_record(run_id)
        bundle = FeedbackBundle()
        if store.has_artifact(run_id, "feedback.v1.json"):
            doc = store.read_artifact(run_id, "feedback.v1.json")
            bundle.history = [
                IterationOut(
                    index=item["index"],
                    stages_run=item["stages_run"],
                    feedback=FeedbackOut(**item["feedback"]),
                    approval=item["approval"],
                )
                for item in doc.get("iterations", [])
            ]
            if record.status in ("awaiting-approval", "paused") and doc.get("pending"):
                iteration = store.pending_iteration(run_id) or 0
                bundle.pending = PendingApproval(
                    iteration=iteration,
                    feedback=FeedbackOut(**doc["pending"]),
                )
        return bundle

    @app.post("/runs/{run_id}/verdict", response_model=VerdictOut)
    def post_verdict(run_id: str, verdict: VerdictIn):
        record = load_record(run_id)
        if record.status in ("passed", "failed"):
            raise HTTPException(status_code=409,
                                detail=f"run is terminal ({record.status})")
        iteration = store.pending_iteration(run_id)
        if iteration is None:
            raise HTTPException(status_code=409, detail="run is not awaiting approval")
        try:
            doc = store.commit_verdict(run_id, iteration, verdict.verdict,
                                       verdict.reviewer, verdict.note)
        except VerdictConflictError as exc:
            raise HTTPException(status_code=409, detail=str(exc))
        return VerdictOut(run_id=run_id, iteration=iteration,
                          verdict=doc["verdict"], reviewer=doc["reviewer"],
                          note=doc["note"])

    @app.get("/runs/{run_id}/population")
    def population(run_id: str):
        load_record(run_id)
        try:
            return store.read_artifact(run_id, "eis.v1.json")
        except RunNotFoundError:
            raise HTTPException(status_code=404, detail="no idea-search record yet")

    @app.get("/runs/{run_id}/report")
    def report(run_id: str):
        load_record(run_id)
        try:
            return store.read_artifact(run_id, "report.v1.json")
        except RunNotFoundError:
            raise HTTPException(status_code=404, detail="no data report yet")

    @app.get("/runs/{run_id}/events")
    async def events(run_id: str, after: int = -1, wait: float = 0.0,
                     stream: bool = False, duration: float = 30.0):
        load_record(run_id)
        if stream:
            async def event_source():
                cursor = after
                loops = max(1, int(duration / EVENT_POLL_INTERVAL))
                for _ in range(loops):
                    fresh = store.read_events(run_id, cursor)
                    for event in fresh:
                        cursor = event["seq"]
                        yield f"id: {event['seq']}\nevent: {event['kind']}\n" \
                              f"data: {json.dumps(event, sort_keys=True)}\n\n"
                    record = store.load_record(run_id)
                    if record.status in ("passed", "failed") and not fresh:
                        break
                    await asyncio.sleep(EVENT_POLL_INTERVAL)
            return StreamingResponse(event_source(), media_type="text/event-stream")

        deadline = asyncio.get_event_loop().time() + wait
        while True:
            fresh = store.read_events(run_id, after)
            if fresh or asyncio.get_event_loop().time() >= deadline:
                next_after = fresh[-1]["seq"] if fresh else after
                return EventBatch(
                    events=[EventOut(**event) for event in fresh],
                    next_after=next_after,
                )
            await asyncio.sleep(EVENT_POLL_INTERVAL)

    if frontend_dir and Path(frontend_dir).is_dir():
        app.mount("/ui", StaticFiles(directory=str(frontend_dir), html=True), name="ui")

    return app


def serve(store_root: Path | str, host: str = "127.0.0.1", port: int = 8085,
          frontend_dir: Path | str | None = None):
    """Blocking entrypoint for the approval service."""
    import uvicorn

    app = create_app(RunStore(store_root), frontend_dir=frontend_dir)
    uvicorn.run(app, host=host, port=port, log_level="info")
