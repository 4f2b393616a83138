"""Annotation protocol state: tasks, gated ratings, blinding, storage.

Two protocols. The quality protocol rates one claim per task on
fluency, then conditionally on decontextualization, atomicity, and
faithfulness (later criteria exist only when earlier ones pass their
gate). The negation protocol shows one original claim with the
competing negation outputs in blinded, per-annotator shuffled slots and
collects an entailment judgment per slot.

Ratings persist to an append-only JSON-lines log; the in-memory view is
rebuilt from the log on startup, and method names stay hidden until
export.
"""

from __future__ import annotations

import hashlib
import json
import os
import random
import string
import threading
from dataclasses import dataclass, field
from typing import Any

from .errors import (
    GatingViolation,
    MalformedRecord,
    StaleRevision,
    UnknownAnnotator,
    UnknownTask,
)

PROTOCOL_QUALITY = "quality"
PROTOCOL_NEGATION = "negation"
PROTOCOLS = (PROTOCOL_QUALITY, PROTOCOL_NEGATION)

SKIP = "SKIP"
FLUENCY_VALUES = (1, 2, 3)
BINARY_VALUES = (0, 1)
FAITHFULNESS_VALUES = (1, 2, 3, 4, 5)
ENTAILMENT_VALUES = (1, 2, 3, SKIP)


@dataclass(frozen=True)
class AnnotationRecord:
    annotator: str
    task_id: str
    protocol: str
    revision: int
    slot: str | None = None
    fluency: int | None = None
    decontextualized: int | None = None
    atomicity: int | None = None
    faithfulness: int | None = None
    entailment: int | str | None = None
    timestamp: str | None = None


def validate_gating(rec: AnnotationRecord) -> None:
    """Reject records that rate criteria their gates do not expose."""
    if rec.protocol == PROTOCOL_QUALITY:
        if rec.slot is not None:
            raise GatingViolation("quality ratings carry no slot")
        if rec.entailment is not None:
            raise GatingViolation("entailment belongs to the negation protocol")
        if rec.fluency not in FLUENCY_VALUES:
            raise GatingViolation(f"fluency must be one of {FLUENCY_VALUES}")
        if rec.fluency > 1:
            if rec.decontextualized not in BINARY_VALUES:
                raise GatingViolation("decontextualized required when fluency > 1")
        elif rec.decontextualized is not None:
            raise GatingViolation("decontextualized not ratable when fluency = 1")
        deeper_open = rec.fluency > 1 and rec.decontextualized == 1
        if deeper_open:
            if rec.atomicity not in BINARY_VALUES:
                raise GatingViolation("atomicity required when decontextualized = 1")
            if rec.faithfulness not in FAITHFULNESS_VALUES:
                raise GatingViolation("faithfulness required when decontextualized = 1")
        else:
            if rec.atomicity is not None:
                raise GatingViolation("atomicity not ratable behind a closed gate")
            if rec.faithfulness is not None:
                raise GatingViolation("faithfulness not ratable behind a closed gate")
    elif rec.protocol == PROTOCOL_NEGATION:
        for name in ("fluency", "decontextualized", "atomicity", "faithfulness"):
            if getattr(rec, name) is not None:
                raise GatingViolation(f"{name} belongs to the quality protocol")
        if not rec.slot:
            raise GatingViolation("negation ratings require a slot")
        if rec.entailment not in ENTAILMENT_VALUES:
            raise GatingViolation(f"entailment must be one of {ENTAILMENT_VALUES}")
    else:
        raise GatingViolation(f"unknown protocol {rec.protocol!r}")


def record_from_json(obj: dict, path: str = "<memory>", line_no: int = 0) -> AnnotationRecord:
    try:
        return AnnotationRecord(
            annotator=str(obj["annotator"]),
            task_id=str(obj["task_id"]),
            protocol=str(obj["protocol"]),
            revision=int(obj["revision"]),
            slot=obj.get("slot"),
            fluency=obj.get("fluency"),
            decontextualized=obj.get("decontextualized"),
            atomicity=obj.get("atomicity"),
            faithfulness=obj.get("faithfulness"),
            entailment=obj.get("entailment"),
            timestamp=obj.get("timestamp"),
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise MalformedRecord(path, line_no, str(exc)) from None


def record_to_json(rec: AnnotationRecord) -> dict:
    out: dict[str, Any] = {
        "annotator": rec.annotator,
        "task_id": rec.task_id,
        "protocol": rec.protocol,
        "revision": rec.revision,
    }
    for name in ("slot", "fluency", "decontextualized", "atomicity", "faithfulness",
                 "entailment", "timestamp"):
        value = getattr(rec, name)
        if value is not None:
            out[name] = value
    return out


@dataclass(frozen=True)
class TaskSpec:
    task_id: str
    protocol: str
    payload: dict[str, Any]

    def __post_init__(self):
        if self.protocol not in PROTOCOLS:
            raise ValueError(f"unknown protocol {self.protocol!r}")
        if self.protocol == PROTOCOL_QUALITY and not self.payload.get("claim"):
            raise ValueError(f"task {self.task_id!r} is missing a claim")
        if self.protocol == PROTOCOL_NEGATION:
            negations = self.payload.get("negations")
            if not self.payload.get("original_claim") or not negations:
                raise ValueError(f"task {self.task_id!r} needs original_claim and negations")
            if not isinstance(negations, dict):
                raise ValueError(f"task {self.task_id!r} negations must map method to text")


@dataclass(frozen=True)
class AnnotationTask:
    """A task as served to one annotator, slots already blinded."""

    task_id: str
    protocol: str
    payload: dict[str, Any]
    method_blinding: dict[str, str] = field(default_factory=dict)

    def to_public_json(self) -> dict:
        # the blinding map must never leave the server before export
        return {"task_id": self.task_id, "protocol": self.protocol, "payload": self.payload}


def load_tasks(path: str) -> list[TaskSpec]:
    tasks = []
    seen = set()
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
                task_id = str(obj["task_id"])
                protocol = str(obj["protocol"])
                payload = {k: v for k, v in obj.items() if k not in ("task_id", "protocol")}
                spec = TaskSpec(task_id=task_id, protocol=protocol, payload=payload)
            except (KeyError, TypeError, ValueError) as exc:
                raise MalformedRecord(path, line_no, str(exc)) from None
            if spec.task_id in seen:
                raise MalformedRecord(path, line_no, f"duplicate task_id {spec.task_id!r}")
            seen.add(spec.task_id)
            tasks.append(spec)
    return tasks


def slot_permutation(task_id: str, annotator: str, protocol: str, seed: int,
                     methods: list[str]) -> dict[str, str]:
    """Blinded slot assignment: slot letter -> method.

    Seeded by sha256("{task_id}|{annotator}|{protocol}|{seed}") over the
    sorted method list, so the shuffle is reproducible per annotator and
    independent across annotators.
    """
    digest = hashlib.sha256(
        f"{task_id}|{annotator}|{protocol}|{seed}".encode("utf-8")
    ).digest()
    rng = random.Random(int.from_bytes(digest[:8], "big"))
    ordered = sorted(methods)
    rng.shuffle(ordered)
    return {string.ascii_uppercase[i]: method for i, method in enumerate(ordered)}


class AnnotationStore:
    """Task queue plus append-only rating log with last-write-wins view.

    `data_dir=None` keeps everything in memory. With a directory, every
    accepted rating is appended to ratings.jsonl and fsynced before the
    call returns; construction replays the log.
    """

    LOG_NAME = "ratings.jsonl"

    def __init__(
        self,
        tasks: list[TaskSpec],
        *,
        data_dir: str | None = None,
        annotators: list[str] | None = None,
        seed: int = 0,
    ):
        self.tasks = list(tasks)
        self._by_id = {t.task_id: t for t in self.tasks}
        if len(self._by_id) != len(self.tasks):
            raise ValueError("duplicate task ids")
        self.annotators = set(annotators) if annotators is not None else None
        self.seed = seed
        self._data_dir = data_dir
        self._lock = threading.Lock()
        self.history: list[AnnotationRecord] = []
        self._latest: dict[tuple[str, str, str], AnnotationRecord] = {}
        if data_dir is not None:
            os.makedirs(data_dir, exist_ok=True)
            self._log_path = os.path.join(data_dir, self.LOG_NAME)
            if os.path.exists(self._log_path):
                self._replay(self._log_path)
        else:
            self._log_path = None

    def _key(self, rec: AnnotationRecord) -> tuple[str, str, str]:
        return (rec.annotator, rec.task_id, rec.slot or "")

    def _replay(self, path: str):
        with open(path, encoding="utf-8") as handle:
            for line_no, line in enumerate(handle, start=1):
                line = line.strip()
                if not line:
                    continue
                try:
                    obj = json.loads(line)
                except json.JSONDecodeError as exc:
                    raise MalformedRecord(path, line_no, f"invalid JSON: {exc}") from None
                rec = record_from_json(obj, path, line_no)
                validate_gating(rec)
                self.history.append(rec)
                self._latest[self._key(rec)] = rec

    def _check_annotator(self, annotator: str):
        if not annotator:
            raise UnknownAnnotator(annotator)
        if self.annotators is not None and annotator not in self.annotators:
            raise UnknownAnnotator(annotator)

    def blinded_task(self, spec: TaskSpec, annotator: str) -> AnnotationTask:
        if spec.protocol != PROTOCOL_NEGATION:
            return AnnotationTask(
                task_id=spec.task_id, protocol=spec.protocol, payload=dict(spec.payload)
            )
        negations: dict[str, str] = spec.payload["negations"]
        blinding = slot_permutation(
            spec.task_id, annotator, spec.protocol, self.seed, list(negations)
        )
        payload = {
            k: v for k, v in spec.payload.items() if k != "negations"
        }
        payload["negations"] = [
            {"slot": slot, "text": negations[blinding[slot]]} for slot in sorted(blinding)
        ]
        return AnnotationTask(
            task_id=spec.task_id,
            protocol=spec.protocol,
            payload=payload,
            method_blinding=blinding,
        )

    def _slots_for(self, spec: TaskSpec, annotator: str) -> list[str]:
        if spec.protocol != PROTOCOL_NEGATION:
            return [""]
        methods = spec.payload["negations"]
        return [string.ascii_uppercase[i] for i in range(len(methods))]

    def is_complete(self, spec: TaskSpec, annotator: str) -> bool:
        return all(
            (annotator, spec.task_id, slot) in self._latest
            for slot in self._slots_for(spec, annotator)
        )

    def next_task(self, annotator: str, protocol: str) -> AnnotationTask | None:
        """Lowest-indexed task of the protocol not yet completed, or None."""
        self._check_annotator(annotator)
        if protocol not in PROTOCOLS:
            raise ValueError(f"unknown protocol {protocol!r}")
        for spec in self.tasks:
            if spec.protocol != protocol:
                continue
            if not self.is_complete(spec, annotator):
                return self.blinded_task(spec, annotator)
        return None

    def submit_rating(self, rec: AnnotationRecord) -> int:
        """Validate, append to the log, and return the stored revision.

        The submitted revision must be exactly one past the latest
        stored revision for (annotator, task, slot); anything else is a
        stale client and is rejected.
        """
        self._check_annotator(rec.annotator)
        spec = self._by_id.get(rec.task_id)
        if spec is None:
            raise UnknownTask(rec.task_id)
        if rec.protocol != spec.protocol:
            raise GatingViolation(
                f"task {rec.task_id!r} follows the {spec.protocol} protocol"
            )
        validate_gating(rec)
        if rec.slot is not None and rec.slot not in self._slots_for(spec, rec.annotator):
            raise GatingViolation(f"task {rec.task_id!r} has no slot {rec.slot!r}")
        with self._lock:
            held = self._latest.get(self._key(rec))
            expected = (held.revision if held else 0) + 1
            if rec.revision != expected:
                raise StaleRevision(expected=expected, got=rec.revision)
            self.history.append(rec)
            self._latest[self._key(rec)] = rec
            if self._log_path is not None:
                with open(self._log_path, "a", encoding="utf-8") as handle:
                    handle.write(json.dumps(record_to_json(rec), sort_keys=True) + "\n")
                    handle.flush()
                    os.fsync(handle.fileno())
        return rec.revision

    def progress(self, annotator: str) -> dict:
        self._check_annotator(annotator)
        out = {}
        for protocol in PROTOCOLS:
            specs = [t for t in self.tasks if t.protocol == protocol]
            done = sum(1 for t in specs if self.is_complete(t, annotator))
            out[protocol] = {"total": len(specs), "completed": done,
                             "remaining": len(specs) - done}
        return out

    def export(self, protocol: str) -> list[dict]:
        """Latest-revision rating rows, unblinded, deterministically ordered.

        Negation rows carry the method behind each slot; gating is
        re-verified so a corrupted log cannot leak past this point.
        """
        if protocol not in PROTOCOLS:
            raise ValueError(f"unknown protocol {protocol!r}")
        rows = []
        for key in sorted(self._latest):
            rec = self._latest[key]
            if rec.protocol != protocol:
                continue
            validate_gating(rec)
            if protocol == PROTOCOL_QUALITY:
                rows.append(
                    {
                        "annotator": rec.annotator,
                        "task_id": rec.task_id,
                        "fluency": rec.fluency,
                        "decontextualized": rec.decontextualized,
                        "atomicity": rec.atomicity,
                        "faithfulness": rec.faithfulness,
                        "revision": rec.revision,
                    }
                )
            else:
                spec = self._by_id.get(rec.task_id)
                blinding = (
                    slot_permutation(rec.task_id, rec.annotator, rec.protocol, self.seed,
                                     list(spec.payload["negations"]))
                    if spec is not None
                    else {}
                )
                rows.append(
                    {
                        "annotator": rec.annotator,
                        "task_id": rec.task_id,
                        "slot": rec.slot,
                        "method": blinding.get(rec.slot),
                        "entailment": rec.entailment,
                        "revision": rec.revision,
                    }
                )
        # rows come out sorted by (annotator, task, slot) via the key sort;
        # re-sort by task first so matrices group by item
        rows.sort(key=lambda r: (r["task_id"], r["annotator"], r.get("slot") or ""))
        return rows
