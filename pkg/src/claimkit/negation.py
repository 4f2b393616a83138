"""Knowledge-base-informed claim negation.

Pipeline per claim: detect and link entity mentions, collect same-type
sibling concepts ranked by vector similarity, substitute each concept's
surface forms into the mention span, keep the most fluent surface per
concept (minimum perplexity), then return the pooled candidate most
contradicted by the original claim under NLI. A random same-type entity
replacement is provided as a baseline.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, replace

from .errors import (
    MissingVector,
    NoCandidates,
    NoLinkableEntity,
    NoSameTypeConcept,
    UnlinkedMention,
)
from .kb import KnowledgeBase, VectorTable, filter_same_type, nearest_concepts, siblings
from .linking import EntityMention, find_mentions, link
from .scoring import ScorerGateway


@dataclass(frozen=True)
class NegationCandidate:
    text: str
    source_entity: EntityMention
    replacement_cui: str
    replacement_surface: str
    perplexity: float | None = None
    contradiction: float | None = None


@dataclass(frozen=True)
class KbinConfig:
    top_n_concepts: int = 20
    max_aliases_per_concept: int | None = None
    scorer_url: str | None = None
    seed: int = 0

    def __post_init__(self):
        if self.top_n_concepts < 1:
            raise ValueError("top_n_concepts must be >= 1")
        if self.max_aliases_per_concept is not None and self.max_aliases_per_concept < 0:
            raise ValueError("max_aliases_per_concept must be >= 0")


def _linked_mentions(kb: KnowledgeBase, claim: str) -> list[EntityMention]:
    out = []
    for mention in find_mentions(kb, claim):
        cui = mention.cui or link(kb, mention, claim)
        if cui is not None:
            out.append(replace(mention, cui=cui))
    return out


def candidates_for_entity(
    kb: KnowledgeBase,
    vt: VectorTable,
    claim: str,
    mention: EntityMention,
    cfg: KbinConfig,
) -> list[NegationCandidate]:
    """Unscored substitution candidates for one linked mention.

    Order is deterministic: concepts by similarity rank, then canonical
    name before aliases. Surfaces that reproduce the mention text are
    skipped, so every candidate differs from the claim.
    """
    if mention.cui is None:
        raise UnlinkedMention(f"mention {mention.text!r} has no cui")
    related = filter_same_type(kb, mention.cui, siblings(kb, mention.cui))
    if not related:
        return []
    try:
        ranked = nearest_concepts(vt, mention.cui, related, cfg.top_n_concepts)
    except MissingVector:
        # concepts without vectors cannot be ranked; they yield nothing
        return []
    mention_key = mention.text.casefold()
    out = []
    for cui, _dist in ranked:
        concept = kb.concepts[cui]
        surfaces = [concept.name, *concept.aliases]
        if cfg.max_aliases_per_concept is not None:
            surfaces = surfaces[: 1 + cfg.max_aliases_per_concept]
        for surface in surfaces:
            if surface.casefold() == mention_key:
                continue
            text = claim[: mention.start] + surface + claim[mention.end :]
            out.append(
                NegationCandidate(
                    text=text,
                    source_entity=mention,
                    replacement_cui=cui,
                    replacement_surface=surface,
                )
            )
    return out


def _best_per_concept(
    candidates: list[NegationCandidate], gateway: ScorerGateway
) -> list[NegationCandidate]:
    """Score all surfaces, keep the minimum-perplexity one per concept."""
    if not candidates:
        return []
    ppls = gateway.perplexity([c.text for c in candidates])
    scored = [replace(c, perplexity=p) for c, p in zip(candidates, ppls)]
    best: dict[str, NegationCandidate] = {}
    for cand in scored:
        held = best.get(cand.replacement_cui)
        if held is None or cand.perplexity < held.perplexity:
            best[cand.replacement_cui] = cand
    # preserve candidate (concept-rank) order, one winner per concept
    seen = set()
    out = []
    for cand in scored:
        if cand.replacement_cui not in seen:
            seen.add(cand.replacement_cui)
            out.append(best[cand.replacement_cui])
    return out


def get_negation(
    kb: KnowledgeBase,
    vt: VectorTable,
    gateway: ScorerGateway,
    claim: str,
    cfg: KbinConfig,
) -> NegationCandidate:
    """Most-contradicting single-span entity replacement for a claim.

    Ties on contradiction go to the lower-perplexity candidate, then to
    lexicographically smaller text, so the result is reproducible.
    """
    if not claim:
        raise ValueError("claim must be non-empty")
    mentions = _linked_mentions(kb, claim)
    if not mentions:
        raise NoLinkableEntity(f"no linkable entity in {claim!r}")
    pool: list[NegationCandidate] = []
    for mention in mentions:
        cands = candidates_for_entity(kb, vt, claim, mention, cfg)
        pool.extend(_best_per_concept(cands, gateway))
    if not pool:
        raise NoCandidates(f"no substitution candidates for {claim!r}")
    probs = gateway.nli_batch([(claim, c.text) for c in pool])
    scored = [replace(c, contradiction=p.contradiction) for c, p in zip(pool, probs)]
    return min(scored, key=lambda c: (-c.contradiction, c.perplexity, c.text))


def negation_to_json(claim: str, cand: NegationCandidate, method: str) -> dict:
    """External record shape shared by the CLI and the HTTP endpoint."""
    scores = {}
    if cand.perplexity is not None:
        scores["perplexity"] = cand.perplexity
    if cand.contradiction is not None:
        scores["contradiction"] = cand.contradiction
    return {
        "claim": claim,
        "negation": cand.text,
        "method": method,
        "replaced": {
            "surface": cand.source_entity.text,
            "start": cand.source_entity.start,
            "end": cand.source_entity.end,
            "cui": cand.source_entity.cui,
            "replacement_cui": cand.replacement_cui,
            "replacement_surface": cand.replacement_surface,
        },
        "scores": scores,
    }


def negation_from_json(obj: dict) -> tuple[str, NegationCandidate]:
    """Inverse of `negation_to_json`; returns (original claim, candidate)."""
    replaced = obj["replaced"]
    scores = obj.get("scores", {})
    mention = EntityMention(
        text=str(replaced["surface"]),
        start=int(replaced["start"]),
        end=int(replaced["end"]),
        cui=replaced.get("cui"),
    )
    cand = NegationCandidate(
        text=str(obj["negation"]),
        source_entity=mention,
        replacement_cui=str(replaced["replacement_cui"]),
        replacement_surface=str(replaced["replacement_surface"]),
        perplexity=scores.get("perplexity"),
        contradiction=scores.get("contradiction"),
    )
    return str(obj["claim"]), cand


def random_entity_baseline(kb: KnowledgeBase, claim: str, seed: int) -> NegationCandidate:
    """Baseline: swap one linked mention for a random same-type concept.

    The replacement is drawn from the whole KB (not just siblings) and
    inserted as the canonical name. Deterministic for a given seed.
    """
    mentions = _linked_mentions(kb, claim)
    if not mentions:
        raise NoLinkableEntity(f"no linkable entity in {claim!r}")
    rng = random.Random(seed)
    mention = mentions[rng.randrange(len(mentions))]
    types = kb.concepts[mention.cui].types
    mention_key = mention.text.casefold()
    pool = [
        cui
        for cui in sorted(kb.concepts)
        if cui != mention.cui
        and kb.concepts[cui].types & types
        and kb.concepts[cui].name.casefold() != mention_key
    ]
    if not pool:
        raise NoSameTypeConcept(f"no same-type replacement for {mention.text!r}")
    cui = pool[rng.randrange(len(pool))]
    surface = kb.concepts[cui].name
    return NegationCandidate(
        text=claim[: mention.start] + surface + claim[mention.end :],
        source_entity=mention,
        replacement_cui=cui,
        replacement_surface=surface,
    )
