"""Request and response bodies for the HTTP service."""

from __future__ import annotations

from typing import Any, Literal

from pydantic import BaseModel, Field


class PerplexityRequest(BaseModel):
    texts: list[str]


class PerplexityResponse(BaseModel):
    perplexities: list[float]


class NliPairModel(BaseModel):
    premise: str
    hypothesis: str


class NliRequest(BaseModel):
    pairs: list[NliPairModel]


class NliProbsModel(BaseModel):
    entailment: float
    neutral: float
    contradiction: float


class NliResponse(BaseModel):
    probs: list[NliProbsModel]


class GenerateRequest(BaseModel):
    inputs: list[str]
    num_outputs: int = 1
    strategy: str = "beam"
    seed: int = 0


class GenerateResponse(BaseModel):
    outputs: list[list[str]]


class TaskView(BaseModel):
    task_id: str
    protocol: str
    payload: dict[str, Any]


class NextTaskResponse(BaseModel):
    done: bool
    task: TaskView | None = None


class RatingSubmission(BaseModel):
    annotator: str
    task_id: str
    protocol: str
    revision: int = Field(ge=1)
    slot: str | None = None
    fluency: int | None = None
    decontextualized: int | None = None
    atomicity: int | None = None
    faithfulness: int | None = None
    entailment: int | Literal["SKIP"] | None = None
    timestamp: str | None = None


class RatingResponse(BaseModel):
    stored_revision: int


class ProgressResponse(BaseModel):
    annotator: str
    protocols: dict[str, dict[str, int]]


class ExportResponse(BaseModel):
    protocol: str
    rows: list[dict[str, Any]]
    metadata: dict[str, Any]


class LinkRequest(BaseModel):
    text: str


class MentionView(BaseModel):
    text: str
    start: int
    end: int
    cui: str | None
    candidates: list[str]


class LinkResponse(BaseModel):
    mentions: list[MentionView]


class NegateRequest(BaseModel):
    claim: str
    method: Literal["kbin", "random-entity"] = "kbin"
    seed: int = 0


class ErrorResponse(BaseModel):
    detail: str
