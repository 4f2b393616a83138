"""Supported-claim generation from citing sentences.

Two pipelines. The entity pipeline turns each detected entity mention
into a question about the citance and then rewrites that question as a
declarative claim. The direct pipeline feeds surrounding context plus
the citance to a generator and samples several claims at once, one per
noun chunk. All neural steps go through generator backends; this module
owns input formatting, ordering, and deduplication.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field
from typing import Any, Callable

from .errors import EmptyGeneration, MalformedRecord
from .kb import KnowledgeBase
from .linking import find_mentions
from .scoring import BEAM, SAMPLE_TOP_K, GenerationRequest, ScorerGateway

log = logging.getLogger(__name__)

SEPARATOR = "||"

METHOD_ENTITY = "entity"
METHOD_DIRECT = "direct"


@dataclass(frozen=True)
class CitanceRecord:
    id: str
    citance: str
    context_before: str = ""
    context_after: str = ""
    source_doc_id: str = ""
    cited_doc_ids: tuple[str, ...] = ()

    def __post_init__(self):
        if not self.id:
            raise ValueError("citance record needs an id")
        if not self.citance:
            raise ValueError(f"citance {self.id!r} is empty")


@dataclass(frozen=True)
class Claim:
    text: str
    citance_id: str
    method: str
    provenance: dict[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        if not self.text:
            raise ValueError("claim text must be non-empty")
        if self.method not in (METHOD_ENTITY, METHOD_DIRECT):
            raise ValueError(f"unknown method {self.method!r}")


def citance_from_json(obj: dict, path: str = "<memory>", line_no: int = 0) -> CitanceRecord:
    try:
        return CitanceRecord(
            id=str(obj["id"]),
            citance=str(obj["citance"]),
            context_before=str(obj.get("context_before", "")),
            context_after=str(obj.get("context_after", "")),
            source_doc_id=str(obj.get("source_doc_id", "")),
            cited_doc_ids=tuple(str(d) for d in obj.get("cited_doc_ids", [])),
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise MalformedRecord(path, line_no, str(exc)) from None


def load_citances(path: str) -> list[CitanceRecord]:
    records = []
    seen_ids = set()
    with open(path, encoding="utf-8") as handle:
        for line_no, line in enumerate(handle, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise MalformedRecord(path, line_no, f"invalid JSON: {exc}") from None
            rec = citance_from_json(obj, path, line_no)
            if rec.id in seen_ids:
                raise MalformedRecord(path, line_no, f"duplicate citance id {rec.id!r}")
            seen_ids.add(rec.id)
            records.append(rec)
    return records


def claim_to_json(claim: Claim) -> dict:
    return {
        "text": claim.text,
        "citance_id": claim.citance_id,
        "method": claim.method,
        "provenance": claim.provenance,
    }


def claim_from_json(obj: dict, path: str = "<memory>", line_no: int = 0) -> Claim:
    try:
        return Claim(
            text=str(obj["text"]),
            citance_id=str(obj["citance_id"]),
            method=str(obj["method"]),
            provenance=dict(obj.get("provenance", {})),
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise MalformedRecord(path, line_no, str(exc)) from None


def load_claims(path: str) -> list[Claim]:
    claims = []
    with open(path, encoding="utf-8") as handle:
        for line_no, line in enumerate(handle, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise MalformedRecord(path, line_no, f"invalid JSON: {exc}") from None
            claims.append(claim_from_json(obj, path, line_no))
    return claims


def claimgen_entity(
    kb: KnowledgeBase, gateway: ScorerGateway, rec: CitanceRecord, *, seed: int = 0
) -> list[Claim]:
    """One claim per detected entity mention, in mention order.

    Per mention: ask the generator for a question the citance answers
    about the entity, then convert that question back into a statement.
    Mentions whose intermediate generations come back empty are dropped;
    backend outages abort the whole record.
    """
    claims = []
    for mention in find_mentions(kb, rec.citance):
        qg_input = f"{rec.citance}{SEPARATOR}{mention.text}"
        try:
            question = gateway.generate(
                GenerationRequest(input=qg_input, num_outputs=1, strategy=BEAM, seed=seed)
            )[0]
            qa2d_input = f"{question}{SEPARATOR}{mention.text}"
            text = gateway.generate(
                GenerationRequest(input=qa2d_input, num_outputs=1, strategy=BEAM, seed=seed)
            )[0]
        except EmptyGeneration as exc:
            log.warning("citance %s: dropping mention %r: %s", rec.id, mention.text, exc)
            continue
        claims.append(
            Claim(
                text=text,
                citance_id=rec.id,
                method=METHOD_ENTITY,
                provenance={
                    "entity": mention.text,
                    "entity_span": [mention.start, mention.end],
                    "cui": mention.cui,
                    "question": question,
                    "qg_input": qg_input,
                    "qa2d_input": qa2d_input,
                    "separator": SEPARATOR,
                },
            )
        )
    return claims


def noun_chunk_count(
    kb: KnowledgeBase | None,
    rec: CitanceRecord,
    *,
    chunker: Callable[[str], int] | None = None,
) -> int:
    """Chunk count from the configured chunker, else mention-count fallback.

    The fallback never returns less than 1, so direct generation always
    has a sample budget.
    """
    if chunker is not None:
        return max(1, int(chunker(rec.citance)))
    if kb is None:
        return 1
    return max(1, len(find_mentions(kb, rec.citance)))


def claimgen_direct(
    gateway: ScorerGateway,
    rec: CitanceRecord,
    k_override: int | None = None,
    *,
    kb: KnowledgeBase | None = None,
    chunker: Callable[[str], int] | None = None,
    seed: int = 0,
) -> list[Claim]:
    """Sample k claims from `context_before context_after||citance`.

    k defaults to the citance's noun chunk count. Duplicate outputs are
    collapsed keeping first occurrence, so the result can be shorter
    than k.
    """
    if k_override is not None and k_override < 1:
        raise ValueError("k_override must be >= 1")
    k = k_override if k_override is not None else noun_chunk_count(kb, rec, chunker=chunker)
    gen_input = f"{rec.context_before} {rec.context_after}{SEPARATOR}{rec.citance}"
    outputs = gateway.generate(
        GenerationRequest(input=gen_input, num_outputs=k, strategy=SAMPLE_TOP_K, seed=seed)
    )
    claims = []
    seen = set()
    for index, text in enumerate(outputs):
        if text in seen:
            continue
        seen.add(text)
        claims.append(
            Claim(
                text=text,
                citance_id=rec.id,
                method=METHOD_DIRECT,
                provenance={
                    "input": gen_input,
                    "sample_index": index,
                    "k": k,
                    "seed": seed,
                    "separator": SEPARATOR,
                },
            )
        )
    return claims
