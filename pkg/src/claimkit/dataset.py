"""Fact-checking dataset assembly from claims, negations, and citations.

Pairing rules: a generated claim is supported by every abstract its
citance cites; its negation is refuted by those same abstracts; the
citing paper's own abstract supplies not-enough-info pairs, alternating
between claim and negation surfaces. Instance ids are content hashes so
rebuilds are stable and duplicates collapse.
"""

from __future__ import annotations

import hashlib
import json
from collections import Counter
from dataclasses import dataclass, field
from typing import Any, Iterable, Mapping

from .errors import EmptyCorpus, MalformedRecord, UnknownCitance
from .generation import CitanceRecord, Claim
from .negation import NegationCandidate

SUPPORTS = "SUPPORTS"
REFUTES = "REFUTES"
NEI = "NEI"
LABELS = (SUPPORTS, REFUTES, NEI)


@dataclass(frozen=True)
class DocumentRecord:
    doc_id: str
    title: str
    abstract: tuple[str, ...]

    def __post_init__(self):
        if not self.doc_id:
            raise ValueError("document needs a doc_id")
        if not self.abstract:
            raise ValueError(f"document {self.doc_id!r} has an empty abstract")


@dataclass(frozen=True)
class FactInstance:
    id: str
    claim: str
    evidence_doc_id: str
    label: str
    provenance: dict[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        if self.label not in LABELS:
            raise ValueError(f"unknown label {self.label!r}")


@dataclass(frozen=True)
class DatasetConfig:
    max_cited: int | None = None
    nei_claim_ratio: int = 1
    nei_negation_ratio: int = 1
    label_cap: int | None = None

    def __post_init__(self):
        if self.max_cited is not None and self.max_cited < 1:
            raise ValueError("max_cited must be >= 1")
        if self.nei_claim_ratio < 0 or self.nei_negation_ratio < 0:
            raise ValueError("ratios must be >= 0")
        if self.nei_claim_ratio + self.nei_negation_ratio == 0:
            raise ValueError("at least one NEI ratio must be positive")
        if self.label_cap is not None and self.label_cap < 0:
            raise ValueError("label_cap must be >= 0")


def claim_id(claim: Claim) -> str:
    digest = hashlib.sha256(
        f"{claim.citance_id}|{claim.method}|{claim.text}".encode("utf-8")
    ).hexdigest()
    return digest[:16]


def instance_id(claim_text: str, doc_id: str, label: str) -> str:
    digest = hashlib.sha256(f"{claim_text}|{doc_id}|{label}".encode("utf-8")).hexdigest()
    return digest[:16]


def load_corpus(path: str) -> dict[str, DocumentRecord]:
    corpus: dict[str, DocumentRecord] = {}
    with open(path, encoding="utf-8") as handle:
        for line_no, line in enumerate(handle, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise MalformedRecord(path, line_no, f"invalid JSON: {exc}") from None
            try:
                rec = DocumentRecord(
                    doc_id=str(obj["doc_id"]),
                    title=str(obj.get("title", "")),
                    abstract=tuple(str(s) for s in obj["abstract"]),
                )
            except (KeyError, TypeError, ValueError) as exc:
                raise MalformedRecord(path, line_no, str(exc)) from None
            if rec.doc_id in corpus:
                raise MalformedRecord(path, line_no, f"duplicate doc_id {rec.doc_id!r}")
            corpus[rec.doc_id] = rec
    return corpus


def build_dataset(
    claims: list[Claim],
    negations: Mapping[str, NegationCandidate],
    citances: Mapping[str, CitanceRecord],
    corpus: Mapping[str, DocumentRecord],
    cfg: DatasetConfig = DatasetConfig(),
    skipped: list[dict] | None = None,
) -> list[FactInstance]:
    """Assemble labeled claim-abstract pairs.

    `negations` is keyed by `claim_id(claim)`. Pairs whose document is
    missing from the corpus are dropped; pass `skipped` to collect one
    record per drop. Output is sorted by instance id and free of
    duplicate (claim, doc, label) triples regardless of input order.
    """
    if not corpus:
        raise EmptyCorpus("document corpus is empty")
    instances: dict[str, FactInstance] = {}
    nei_counter: Counter[str] = Counter()
    period = cfg.nei_claim_ratio + cfg.nei_negation_ratio

    def skip(citance_id: str, doc_id: str, label: str):
        if skipped is not None:
            skipped.append({"citance_id": citance_id, "doc_id": doc_id, "label": label})

    def emit(text: str, doc_id: str, label: str, prov: dict):
        iid = instance_id(text, doc_id, label)
        if iid not in instances:
            instances[iid] = FactInstance(
                id=iid, claim=text, evidence_doc_id=doc_id, label=label, provenance=prov
            )

    for claim in claims:
        citance = citances.get(claim.citance_id)
        if citance is None:
            raise UnknownCitance(claim.citance_id)
        negation = negations.get(claim_id(claim))
        cited = list(citance.cited_doc_ids)
        if cfg.max_cited is not None:
            cited = cited[: cfg.max_cited]
        base_prov = {"citance_id": claim.citance_id, "method": claim.method}
        for doc_id in cited:
            if doc_id not in corpus:
                skip(claim.citance_id, doc_id, SUPPORTS)
                continue
            emit(claim.text, doc_id, SUPPORTS, dict(base_prov))
            if negation is not None:
                emit(
                    negation.text,
                    doc_id,
                    REFUTES,
                    {
                        **base_prov,
                        "negation_of": claim.text,
                        "replacement_cui": negation.replacement_cui,
                        "replacement_surface": negation.replacement_surface,
                    },
                )
        # not-enough-info side: pair against the citing paper itself,
        # rotating claim/negation surfaces at the configured ratio
        source = citance.source_doc_id
        if not source:
            continue
        slot = nei_counter[claim.citance_id]
        nei_counter[claim.citance_id] += 1
        use_negation = (slot % period) >= cfg.nei_claim_ratio and negation is not None
        text = negation.text if use_negation else claim.text
        if source not in corpus:
            skip(claim.citance_id, source, NEI)
            continue
        prov = dict(base_prov)
        if use_negation:
            prov["negation_of"] = claim.text
        emit(text, source, NEI, prov)

    ordered = [instances[iid] for iid in sorted(instances)]
    if cfg.label_cap is None:
        return ordered
    kept: list[FactInstance] = []
    per_label: Counter[str] = Counter()
    for inst in ordered:
        if per_label[inst.label] < cfg.label_cap:
            per_label[inst.label] += 1
            kept.append(inst)
    return kept


@dataclass
class DatasetStats:
    labels: Counter
    by_citance: Counter

    def __add__(self, other: "DatasetStats") -> "DatasetStats":
        return DatasetStats(
            labels=Counter({k: self.labels[k] + other.labels[k] for k in LABELS}),
            by_citance=self.by_citance + other.by_citance,
        )

    def to_json(self) -> dict:
        return {
            "labels": {k: self.labels[k] for k in LABELS},
            "by_citance": dict(sorted(self.by_citance.items())),
        }


def dataset_stats(instances: Iterable[FactInstance]) -> DatasetStats:
    labels: Counter[str] = Counter({k: 0 for k in LABELS})
    by_citance: Counter[str] = Counter()
    for inst in instances:
        labels[inst.label] += 1
        cid = inst.provenance.get("citance_id")
        if cid:
            by_citance[cid] += 1
    return DatasetStats(labels=labels, by_citance=by_citance)


def instance_to_json(inst: FactInstance) -> dict:
    return {
        "id": inst.id,
        "claim": inst.claim,
        "evidence_doc_id": inst.evidence_doc_id,
        "label": inst.label,
        "provenance": inst.provenance,
    }


def export_scifact(instances: list[FactInstance]) -> list[dict]:
    """Regroup instances into SciFact-style claim records.

    One record per distinct claim text; supports/refutes instances
    become evidence entries (SUPPORT/CONTRADICT), not-enough-info
    instances only extend cited_doc_ids. Record ids are stable integers
    derived from the claim text.
    """
    by_claim: dict[str, list[FactInstance]] = {}
    for inst in instances:
        by_claim.setdefault(inst.claim, []).append(inst)
    label_map = {SUPPORTS: "SUPPORT", REFUTES: "CONTRADICT"}
    out = []
    for text in sorted(by_claim):
        evidence: dict[str, list[dict]] = {}
        cited: set[str] = set()
        for inst in by_claim[text]:
            cited.add(inst.evidence_doc_id)
            if inst.label in label_map:
                evidence.setdefault(inst.evidence_doc_id, []).append(
                    {"sentences": [], "label": label_map[inst.label]}
                )
        numeric_id = int(hashlib.sha256(text.encode("utf-8")).hexdigest()[:12], 16)
        out.append(
            {
                "id": numeric_id,
                "claim": text,
                "evidence": {k: evidence[k] for k in sorted(evidence)},
                "cited_doc_ids": sorted(cited),
            }
        )
    return out
