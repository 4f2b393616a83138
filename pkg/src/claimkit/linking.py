"""Dictionary-based entity recognition and linking against the concept KB.

Matching is longest-match-wins over the alias index, case-insensitive,
anchored at word boundaries (transitions between alphanumeric and
non-alphanumeric code points). Surfaces whose normalized form is shorter
than three characters are ignored.
"""

from __future__ import annotations

from dataclasses import dataclass

from .kb import KnowledgeBase, normalize_surface

MIN_SURFACE_CHARS = 3


@dataclass(frozen=True)
class EntityMention:
    text: str
    start: int
    end: int
    cui: str | None = None
    candidates: tuple[str, ...] = ()


def _token_spans(text: str) -> list[tuple[int, int]]:
    """Half-open spans of maximal alphanumeric runs."""
    spans: list[tuple[int, int]] = []
    start = None
    for i, ch in enumerate(text):
        if ch.isalnum():
            if start is None:
                start = i
        elif start is not None:
            spans.append((start, i))
            start = None
    if start is not None:
        spans.append((start, len(text)))
    return spans


def find_mentions(kb: KnowledgeBase, text: str) -> list[EntityMention]:
    """Scan ``text`` for KB surfaces; returns non-overlapping mentions in offset order."""
    if not text:
        raise ValueError("text must be non-empty")
    tokens = _token_spans(text)
    mentions: list[EntityMention] = []
    i = 0
    while i < len(tokens):
        matched = False
        j_max = min(i + kb.max_surface_tokens, len(tokens))
        for j in range(j_max - 1, i - 1, -1):
            start, end = tokens[i][0], tokens[j][1]
            key = normalize_surface(text[start:end])
            if len(key) < MIN_SURFACE_CHARS:
                continue
            cuis = kb.alias_index.get(key)
            if not cuis:
                continue
            candidates = tuple(sorted(cuis))
            mentions.append(
                EntityMention(
                    text=text[start:end],
                    start=start,
                    end=end,
                    cui=candidates[0] if len(candidates) == 1 else None,
                    candidates=candidates,
                )
            )
            i = j + 1
            matched = True
            break
        if not matched:
            i += 1
    return mentions


def link(kb: KnowledgeBase, mention: EntityMention, context: str) -> str | None:
    """Resolve a mention to one concept, or ``None`` when nothing links.

    Ambiguity falls back to the candidate with the most aliases (a
    prominence proxy), ties broken by the lexicographically smaller cui.
    The context argument is part of the linker contract so richer
    backends can disambiguate from it; the dictionary linker ignores it.
    """
    if not mention.candidates:
        return None
    if len(mention.candidates) == 1:
        return mention.candidates[0]
    return min(
        mention.candidates,
        key=lambda cui: (-len(kb.concepts[cui].aliases), cui),
    )
