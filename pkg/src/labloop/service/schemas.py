"""Request/response models for the approval service API."""

from __future__ import annotations

from typing import Literal

from pydantic import BaseModel, Field


class RunSummary(BaseModel):
    run_id: str
    status: str
    query: str
    iteration: int
    pending_approval: bool
    updated_at: float


class RunDetail(RunSummary):
    dataset_root: str
    seed: int
    error: str | None = None
    iterations: list[dict] = Field(default_factory=list)


class AxisOut(BaseModel):
    axis: str
    confidence: float
    instruction: str


class FeedbackOut(BaseModel):
    verdict: str
    axes: list[AxisOut]


class PendingApproval(BaseModel):
    iteration: int
    feedback: FeedbackOut


class IterationOut(BaseModel):
    index: int
    stages_run: list[str]
    feedback: FeedbackOut
    approval: dict


class FeedbackBundle(BaseModel):
    pending: PendingApproval | None = None
    history: list[IterationOut] = Field(default_factory=list)


class VerdictIn(BaseModel):
    verdict: Literal["PASS", "REVISE"]
    reviewer: str
    note: str = ""


class VerdictOut(BaseModel):
    run_id: str
    iteration: int
    verdict: str
    reviewer: str
    note: str = ""


class EventOut(BaseModel):
    seq: int
    at: float
    kind: str
    data: dict = Field(default_factory=dict)


class EventBatch(BaseModel):
    events: list[EventOut]
    next_after: int
