"""HTTP service: scorer endpoints, annotation workflow, linking, negation.

Every deployment picks its surface by what it passes to `create_app`:
a gateway enables the scorer endpoints, a store enables the annotation
workflow, a knowledge base (plus vectors and gateway) enables linking
and negation, and a UI directory is served statically under /ui.
"""

from __future__ import annotations

from fastapi import FastAPI, Query, Request
from fastapi.responses import JSONResponse
from fastapi.staticfiles import StaticFiles

from ..annotation import PROTOCOLS, AnnotationRecord, AnnotationStore
from ..errors import (
    BackendMalformedResponse,
    BackendUnavailable,
    ClaimkitError,
    GatingViolation,
    NoCandidates,
    NoLinkableEntity,
    NoSameTypeConcept,
    StaleRevision,
    UnknownAnnotator,
    UnknownTask,
)
from ..kb import KnowledgeBase, VectorTable
from ..linking import find_mentions, link
from ..metrics import metrics_metadata
from ..negation import (
    KbinConfig,
    get_negation,
    negation_to_json,
    random_entity_baseline,
)
from ..scoring import GenerationRequest, ScorerGateway
from . import schemas

_STATUS_BY_ERROR: list[tuple[type, int]] = [
    (StaleRevision, 409),
    (UnknownTask, 404),
    (UnknownAnnotator, 404),
    (GatingViolation, 422),
    (NoLinkableEntity, 422),
    (NoCandidates, 422),
    (NoSameTypeConcept, 422),
    (BackendUnavailable, 503),
    (BackendMalformedResponse, 502),
    (ClaimkitError, 400),
]


def _status_for(exc: Exception) -> int:
    for err_type, status in _STATUS_BY_ERROR:
        if isinstance(exc, err_type):
            return status
    return 500


def create_app(
    *,
    store: AnnotationStore | None = None,
    gateway: ScorerGateway | None = None,
    kb: KnowledgeBase | None = None,
    vt: VectorTable | None = None,
    kbin_cfg: KbinConfig | None = None,
    ui_dir: str | None = None,
) -> FastAPI:
    app = FastAPI(title="claimkit", docs_url=None, redoc_url=None)

    @app.exception_handler(ClaimkitError)
    async def claimkit_error(request: Request, exc: ClaimkitError):
        return JSONResponse(status_code=_status_for(exc), content={"detail": str(exc)})

    @app.exception_handler(ValueError)
    async def value_error(request: Request, exc: ValueError):
        return JSONResponse(status_code=400, content={"detail": str(exc)})

    if gateway is not None:
        _add_scorer_routes(app, gateway)
    if store is not None:
        _add_annotation_routes(app, store)
    if kb is not None:
        _add_linking_routes(app, kb)
        if vt is not None and gateway is not None:
            _add_negation_routes(app, kb, vt, gateway, kbin_cfg or KbinConfig())
    if ui_dir is not None:
        app.mount("/ui", StaticFiles(directory=ui_dir, html=True), name="ui")
    return app


def _add_scorer_routes(app: FastAPI, gateway: ScorerGateway) -> None:
    @app.post("/v1/perplexity", response_model=schemas.PerplexityResponse)
    def perplexity(req: schemas.PerplexityRequest):
        return {"perplexities": gateway.perplexity(req.texts)}

    @app.post("/v1/nli", response_model=schemas.NliResponse)
    def nli(req: schemas.NliRequest):
        probs = gateway.nli_batch([(p.premise, p.hypothesis) for p in req.pairs])
        return {
            "probs": [
                {
                    "entailment": p.entailment,
                    "neutral": p.neutral,
                    "contradiction": p.contradiction,
                }
                for p in probs
            ]
        }

    @app.post("/v1/generate", response_model=schemas.GenerateResponse)
    def generate(req: schemas.GenerateRequest):
        outputs = [
            gateway.generate(
                GenerationRequest(
                    input=text,
                    num_outputs=req.num_outputs,
                    strategy=req.strategy,
                    seed=req.seed,
                )
            )
            for text in req.inputs
        ]
        return {"outputs": outputs}


def _add_annotation_routes(app: FastAPI, store: AnnotationStore) -> None:
    @app.get("/v1/tasks/next", response_model=schemas.NextTaskResponse)
    def next_task(annotator: str = Query(...), protocol: str = Query(...)):
        task = store.next_task(annotator, protocol)
        if task is None:
            return {"done": True, "task": None}
        return {"done": False, "task": task.to_public_json()}

    @app.post("/v1/ratings", response_model=schemas.RatingResponse)
    def submit_rating(sub: schemas.RatingSubmission):
        rec = AnnotationRecord(
            annotator=sub.annotator,
            task_id=sub.task_id,
            protocol=sub.protocol,
            revision=sub.revision,
            slot=sub.slot,
            fluency=sub.fluency,
            decontextualized=sub.decontextualized,
            atomicity=sub.atomicity,
            faithfulness=sub.faithfulness,
            entailment=sub.entailment,
            timestamp=sub.timestamp,
        )
        return {"stored_revision": store.submit_rating(rec)}

    @app.get("/v1/progress", response_model=schemas.ProgressResponse)
    def progress(annotator: str = Query(...)):
        return {"annotator": annotator, "protocols": store.progress(annotator)}

    @app.get("/v1/export", response_model=schemas.ExportResponse)
    def export(protocol: str = Query(...)):
        if protocol not in PROTOCOLS:
            raise ValueError(f"unknown protocol {protocol!r}")
        return {
            "protocol": protocol,
            "rows": store.export(protocol),
            "metadata": metrics_metadata(protocol=protocol),
        }


def _add_linking_routes(app: FastAPI, kb: KnowledgeBase) -> None:
    @app.post("/v1/link", response_model=schemas.LinkResponse)
    def link_text(req: schemas.LinkRequest):
        mentions = []
        for m in find_mentions(kb, req.text):
            cui = m.cui or link(kb, m, req.text)
            mentions.append(
                {
                    "text": m.text,
                    "start": m.start,
                    "end": m.end,
                    "cui": cui,
                    "candidates": list(m.candidates),
                }
            )
        return {"mentions": mentions}


def _add_negation_routes(
    app: FastAPI,
    kb: KnowledgeBase,
    vt: VectorTable,
    gateway: ScorerGateway,
    cfg: KbinConfig,
) -> None:
    @app.post("/v1/negate")
    def negate(req: schemas.NegateRequest):
        if req.method == "kbin":
            cand = get_negation(kb, vt, gateway, req.claim, cfg)
        else:
            cand = random_entity_baseline(kb, req.claim, req.seed)
        return negation_to_json(req.claim, cand, req.method)
