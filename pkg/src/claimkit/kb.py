"""Concept knowledge-base store: loading, indexing, and neighbor queries.

The concepts file is JSON lines, one object per concept:
``{"cui": str, "name": str, "aliases": [str], "types": [str], "parents": [str]}``.
The vector table is CSV with header ``cui,d1,...,dK``.

A loaded :class:`KnowledgeBase` and :class:`VectorTable` are immutable and
safe to share across threads.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from typing import Iterable, Mapping

import numpy as np

from .errors import (
    DuplicateCui,
    MalformedRecord,
    MissingVector,
    UnknownCui,
    ZeroVector,
)

_WS_RUN = re.compile(r"\s+")


def normalize_surface(text: str) -> str:
    """Key form for alias lookup: casefold and collapse whitespace runs."""
    return _WS_RUN.sub(" ", text.casefold()).strip()


@dataclass(frozen=True)
class Concept:
    cui: str
    name: str
    aliases: tuple[str, ...]
    types: frozenset[str]
    parents: frozenset[str]

    def surfaces(self) -> tuple[str, ...]:
        """Replacement surfaces: canonical name first, then aliases.

        Deduplicated case-insensitively, keeping the first spelling seen.
        """
        out: list[str] = []
        seen: set[str] = set()
        for surface in (self.name, *self.aliases):
            key = normalize_surface(surface)
            if key and key not in seen:
                seen.add(key)
                out.append(surface)
        return tuple(out)


@dataclass(frozen=True)
class LoadReport:
    path: str
    concept_count: int
    # cui -> parent cuis that reference no loaded concept
    dangling_parents: Mapping[str, tuple[str, ...]] = field(default_factory=dict)

    @property
    def clean(self) -> bool:
        return not self.dangling_parents


class KnowledgeBase:
    """Indexed view over a set of concepts.

    ``child_index`` is the exact inverse of the declared parent relation.
    ``alias_index`` maps every normalized surface (canonical name and
    aliases) to the set of concepts carrying it.
    """

    def __init__(self, concepts: Iterable[Concept], path: str = "<memory>"):
        self.concepts: dict[str, Concept] = {}
        for concept in concepts:
            if concept.cui in self.concepts:
                raise DuplicateCui(concept.cui)
            self.concepts[concept.cui] = concept

        self.child_index: dict[str, set[str]] = {cui: set() for cui in self.concepts}
        self.alias_index: dict[str, set[str]] = {}
        dangling: dict[str, tuple[str, ...]] = {}
        for concept in self.concepts.values():
            missing = tuple(sorted(p for p in concept.parents if p not in self.concepts))
            if missing:
                dangling[concept.cui] = missing
            for parent in concept.parents:
                self.child_index.setdefault(parent, set()).add(concept.cui)
            for surface in concept.surfaces():
                self.alias_index.setdefault(normalize_surface(surface), set()).add(concept.cui)

        self.max_surface_tokens = max(
            (len(key.split(" ")) for key in self.alias_index), default=0
        )
        self.load_report = LoadReport(
            path=path, concept_count=len(self.concepts), dangling_parents=dangling
        )

    def __contains__(self, cui: str) -> bool:
        return cui in self.concepts

    def concept(self, cui: str) -> Concept:
        try:
            return self.concepts[cui]
        except KeyError:
            raise UnknownCui(cui) from None


@dataclass(frozen=True)
class VectorTable:
    dim: int
    entries: Mapping[str, np.ndarray]

    def __contains__(self, cui: str) -> bool:
        return cui in self.entries


def _parse_concept(path: str, line_no: int, line: str) -> Concept:
    try:
        raw = json.loads(line)
    except json.JSONDecodeError as exc:
        raise MalformedRecord(path, line_no, f"invalid JSON: {exc.msg}") from None
    if not isinstance(raw, dict):
        raise MalformedRecord(path, line_no, "record is not a JSON object")

    def str_field(key: str) -> str:
        value = raw.get(key)
        if not isinstance(value, str) or not value.strip():
            raise MalformedRecord(path, line_no, f"field {key!r} must be a non-empty string")
        return value

    def str_list(key: str) -> list[str]:
        value = raw.get(key)
        if not isinstance(value, list) or any(not isinstance(v, str) for v in value):
            raise MalformedRecord(path, line_no, f"field {key!r} must be a list of strings")
        if any(not v.strip() for v in value):
            raise MalformedRecord(path, line_no, f"field {key!r} contains a blank entry")
        return value

    cui = str_field("cui")
    name = str_field("name")
    aliases: list[str] = []
    seen: set[str] = set()
    for alias in str_list("aliases"):
        key = normalize_surface(alias)
        if key not in seen:
            seen.add(key)
            aliases.append(alias)
    return Concept(
        cui=cui,
        name=name,
        aliases=tuple(aliases),
        types=frozenset(str_list("types")),
        parents=frozenset(str_list("parents")),
    )


def load_kb(concepts_path: str) -> KnowledgeBase:
    """Load and index a concepts file; dangling parents go in the load report."""
    concepts: list[Concept] = []
    seen: dict[str, int] = {}
    with open(concepts_path, encoding="utf-8") as handle:
        for line_no, line in enumerate(handle, start=1):
            if not line.strip():
                continue
            concept = _parse_concept(concepts_path, line_no, line)
            if concept.cui in seen:
                raise DuplicateCui(concept.cui, line_no)
            seen[concept.cui] = line_no
            concepts.append(concept)
    return KnowledgeBase(concepts, path=concepts_path)


def save_kb(kb: KnowledgeBase, path: str) -> None:
    """Serialize deterministically: one concept per line, sorted by cui."""
    with open(path, "w", encoding="utf-8") as handle:
        for cui in sorted(kb.concepts):
            concept = kb.concepts[cui]
            record = {
                "cui": concept.cui,
                "name": concept.name,
                "aliases": list(concept.aliases),
                "types": sorted(concept.types),
                "parents": sorted(concept.parents),
            }
            handle.write(json.dumps(record, ensure_ascii=False, sort_keys=True) + "\n")


def load_vectors(vectors_path: str) -> VectorTable:
    """Load the concept-vector CSV; dimensionality is fixed by the header."""
    entries: dict[str, np.ndarray] = {}
    with open(vectors_path, encoding="utf-8") as handle:
        header = handle.readline().rstrip("\n")
        if not header:
            raise MalformedRecord(vectors_path, 1, "missing header line")
        columns = header.split(",")
        if len(columns) < 2 or columns[0] != "cui":
            raise MalformedRecord(vectors_path, 1, "header must be cui,d1,...,dK")
        dim = len(columns) - 1
        for line_no, line in enumerate(handle, start=2):
            if not line.strip():
                continue
            parts = line.rstrip("\n").split(",")
            if len(parts) != dim + 1:
                raise MalformedRecord(
                    vectors_path, line_no, f"expected {dim + 1} columns, got {len(parts)}"
                )
            cui = parts[0]
            if cui in entries:
                raise DuplicateCui(cui, line_no)
            try:
                vector = np.array([float(x) for x in parts[1:]], dtype=np.float64)
            except ValueError:
                raise MalformedRecord(vectors_path, line_no, "non-numeric component") from None
            if not np.all(np.isfinite(vector)):
                raise MalformedRecord(vectors_path, line_no, "non-finite component")
            entries[cui] = vector
    return VectorTable(dim=dim, entries=entries)


def siblings(kb: KnowledgeBase, u: str) -> set[str]:
    """All concepts sharing at least one parent with ``u`` (excluding ``u``)."""
    concept = kb.concept(u)
    out: set[str] = set()
    for parent in concept.parents:
        out |= kb.child_index.get(parent, set())
    out.discard(u)
    return out


def filter_same_type(
    kb: KnowledgeBase, u: str, candidates: set[str], *, exact: bool = False
) -> set[str]:
    """Keep candidates overlapping ``u``'s semantic types.

    ``exact=True`` switches to strict type-set equality.
    """
    u_types = kb.concept(u).types
    kept: set[str] = set()
    for cui in candidates:
        c_types = kb.concept(cui).types
        if (c_types == u_types) if exact else bool(c_types & u_types):
            kept.add(cui)
    return kept


def cosine_distance(a: np.ndarray, b: np.ndarray) -> float:
    na = float(np.linalg.norm(a))
    nb = float(np.linalg.norm(b))
    if na == 0.0 or nb == 0.0:
        raise ValueError("cosine distance undefined for zero-norm vectors")
    return 1.0 - float(np.dot(a, b)) / (na * nb)


def nearest_concepts(
    vt: VectorTable, u: str, pool: Iterable[str], n: int
) -> list[tuple[str, float]]:
    """Rank ``pool`` by ascending cosine distance to ``u``; at most ``n`` hits.

    Pool members without a vector are dropped; ties break on the cui.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    base = vt.entries.get(u)
    if base is None:
        raise MissingVector(u)
    if float(np.linalg.norm(base)) == 0.0:
        raise ZeroVector(u)
    scored: list[tuple[float, str]] = []
    for cui in sorted(set(pool)):
        vec = vt.entries.get(cui)
        if vec is None:
            continue
        if float(np.linalg.norm(vec)) == 0.0:
            raise ZeroVector(cui)
        scored.append((cosine_distance(base, vec), cui))
    scored.sort()
    return [(cui, dist) for dist, cui in scored[:n]]
