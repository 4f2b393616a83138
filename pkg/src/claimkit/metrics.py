"""Quantitative evaluation: ROUGE, agreement statistics, rating tables.

Everything here is a pure function over plain data. Output-variant
decisions (F1-based ROUGE, the tokenizer, default distance metrics for
agreement) are named as constants so result files can record exactly
what was computed.
"""

from __future__ import annotations

import re
import warnings
from collections import Counter
from dataclasses import dataclass
from typing import Any, Iterable, Mapping, Sequence

from .annotation import (
    PROTOCOL_QUALITY,
    SKIP,
    AnnotationRecord,
    validate_gating,
)
from .errors import EmptyAfterTokenization, InsufficientData, MissingReferences

ROUGE_VARIANT = "f1"
TOKENIZER_VERSION = "lowercase-alnum-v1"
ALPHA_METRICS = ("nominal", "ordinal", "interval")
ALPHA_DEFAULTS = {
    "fluency": "nominal",
    "decontextualized": "nominal",
    "atomicity": "nominal",
    "faithfulness": "interval",
    "entailment": "nominal",
}

# alnum runs, underscore excluded; lowercased before matching
_TOKEN = re.compile(r"[^\W_]+", re.UNICODE)


def tokenize(text: str) -> list[str]:
    return _TOKEN.findall(text.lower())


@dataclass(frozen=True)
class RougeScores:
    r1: float
    r2: float
    rl: float

    def get(self, variant: str) -> float:
        try:
            return {"r1": self.r1, "r2": self.r2, "rl": self.rl}[variant]
        except KeyError:
            raise ValueError(f"unknown variant {variant!r}") from None


def _f1(overlap: int, candidate_total: int, reference_total: int) -> float:
    if candidate_total == 0 or reference_total == 0:
        return 0.0
    precision = overlap / candidate_total
    recall = overlap / reference_total
    if precision + recall == 0.0:
        return 0.0
    return 2 * precision * recall / (precision + recall)


def _ngrams(tokens: list[str], n: int) -> Counter:
    return Counter(tuple(tokens[i : i + n]) for i in range(len(tokens) - n + 1))


def _clipped_overlap(a: Counter, b: Counter) -> int:
    return sum(min(count, b[gram]) for gram, count in a.items())


def _lcs_length(a: list[str], b: list[str]) -> int:
    if not a or not b:
        return 0
    prev = [0] * (len(b) + 1)
    for token in a:
        current = [0]
        for j, other in enumerate(b, start=1):
            if token == other:
                current.append(prev[j - 1] + 1)
            else:
                current.append(max(prev[j], current[j - 1]))
        prev = current
    return prev[-1]


def rouge(candidate: str, reference: str) -> RougeScores:
    """ROUGE-1/2/L as F1 over lowercased alphanumeric tokens."""
    cand = tokenize(candidate)
    ref = tokenize(reference)
    if not cand:
        raise EmptyAfterTokenization(f"candidate {candidate!r} has no tokens")
    if not ref:
        raise EmptyAfterTokenization(f"reference {reference!r} has no tokens")
    r1 = _f1(_clipped_overlap(_ngrams(cand, 1), _ngrams(ref, 1)), len(cand), len(ref))
    cand_bi, ref_bi = _ngrams(cand, 2), _ngrams(ref, 2)
    r2 = _f1(
        _clipped_overlap(cand_bi, ref_bi), sum(cand_bi.values()), sum(ref_bi.values())
    )
    rl = _f1(_lcs_length(cand, ref), len(cand), len(ref))
    return RougeScores(r1=r1, r2=r2, rl=rl)


@dataclass(frozen=True)
class ReferenceClaimSet:
    citance_id: str
    references: tuple[str, ...]

    def __post_init__(self):
        if not self.references:
            raise ValueError(f"citance {self.citance_id!r} needs at least one reference")


def max_avg_score(
    generated: Sequence[tuple[str, str]],
    refs: Mapping[str, ReferenceClaimSet],
    variant: str = "r1",
) -> float:
    """Mean over generated claims of the best ROUGE against any reference.

    Every generated claim contributes its maximum score over its
    citance's reference claims; the mean divides by the total number of
    generated claims.
    """
    if variant not in ("r1", "r2", "rl"):
        raise ValueError(f"unknown variant {variant!r}")
    if not generated:
        raise InsufficientData("no generated claims to score")
    total = 0.0
    for citance_id, text in generated:
        ref_set = refs.get(citance_id)
        if ref_set is None:
            raise MissingReferences(citance_id)
        total += max(rouge(text, ref).get(variant) for ref in ref_set.references)
    return total / len(generated)


class ZeroExpectedDisagreement(UserWarning):
    """All ratings identical: agreement is 1.0 by convention, not evidence."""


def _delta_sq(metric: str, marginals: Counter, ordered_values: list) -> dict:
    """Squared distance lookup for every observed value pair."""
    table = {}
    for i, c in enumerate(ordered_values):
        for j, k in enumerate(ordered_values):
            if metric == "nominal":
                d = 0.0 if c == k else 1.0
            elif metric == "interval":
                d = float(c - k) ** 2
            else:  # ordinal: cumulative marginal mass between the two ranks
                lo, hi = min(i, j), max(i, j)
                span = sum(marginals[ordered_values[g]] for g in range(lo, hi + 1))
                d = (span - (marginals[c] + marginals[k]) / 2.0) ** 2
            table[(c, k)] = d
    return table


def krippendorff_alpha(
    ratings: Sequence[Sequence[Any]], metric: str = "nominal"
) -> float:
    """Krippendorff's alpha over a rater-by-item matrix with None gaps.

    Computed from within-item pair sums: observed disagreement averages
    squared distances inside each item (weighted by 1/(m_u - 1)),
    expected disagreement averages over all pairable values. Items with
    fewer than two ratings drop out.
    """
    if metric not in ALPHA_METRICS:
        raise ValueError(f"unknown metric {metric!r}")
    if len(ratings) < 2:
        raise InsufficientData("need at least two raters")
    n_items = max((len(row) for row in ratings), default=0)
    units = []
    for j in range(n_items):
        values = [row[j] for row in ratings if j < len(row) and row[j] is not None]
        if len(values) >= 2:
            units.append(values)
    if not units:
        raise InsufficientData("no item carries two or more ratings")
    pairable = [v for unit in units for v in unit]
    if metric != "nominal" and any(isinstance(v, str) for v in pairable):
        raise ValueError(f"{metric} distance needs numeric values")
    marginals = Counter(pairable)
    if len(marginals) < 2:
        warnings.warn(
            "all ratings identical; alpha is 1.0 by convention",
            ZeroExpectedDisagreement,
            stacklevel=2,
        )
        return 1.0
    if metric == "nominal":
        # nominal data may mix ints and strings (entailment SKIP); only
        # equality matters, so any total order will do
        ordered = sorted(marginals, key=lambda v: (type(v).__name__, str(v)))
    else:
        # all-numeric (checked above); ordinal depends on this rank order
        ordered = sorted(marginals)
    delta = _delta_sq(metric, marginals, ordered)
    n = len(pairable)
    observed = 0.0
    for unit in units:
        pair_sum = sum(
            delta[(a, b)] for x, a in enumerate(unit) for y, b in enumerate(unit) if x != y
        )
        observed += pair_sum / (len(unit) - 1)
    observed /= n
    if observed == 0.0:
        return 1.0
    expected = sum(
        marginals[c] * marginals[k] * delta[(c, k)] for c in ordered for k in ordered
    ) / (n * (n - 1))
    return 1.0 - observed / expected


def exact_agreement_pct(ratings: Sequence[Sequence[Any]]) -> float:
    """Share of items (with >= 2 ratings) whose ratings are unanimous."""
    if len(ratings) < 2:
        raise InsufficientData("need at least two raters")
    n_items = max((len(row) for row in ratings), default=0)
    rated = 0
    unanimous = 0
    for j in range(n_items):
        values = [row[j] for row in ratings if j < len(row) and row[j] is not None]
        if len(values) < 2:
            continue
        rated += 1
        if len(set(values)) == 1:
            unanimous += 1
    if rated == 0:
        raise InsufficientData("no item carries two or more ratings")
    return unanimous / rated


def acceptability_values(
    fluency: int | None,
    decontextualized: int | None,
    atomicity: int | None,
    faithfulness: int | None,
) -> bool:
    """Acceptance rule; criteria a gate left unrated count as failing."""
    return (
        fluency is not None
        and fluency > 1
        and decontextualized == 1
        and atomicity == 1
        and faithfulness is not None
        and faithfulness > 3
    )


def acceptability(rec: AnnotationRecord) -> bool:
    if rec.protocol != PROTOCOL_QUALITY:
        from .errors import GatingViolation

        raise GatingViolation("acceptability applies to quality-protocol records")
    validate_gating(rec)
    return acceptability_values(
        rec.fluency, rec.decontextualized, rec.atomicity, rec.faithfulness
    )


def yield_table(
    claims_by_method: Mapping[str, int | Sequence[Any]],
    annotations: Iterable[tuple[str, AnnotationRecord]],
) -> dict[str, dict]:
    """Per-method generated/annotated/accepted counts with precision.

    `annotations` pairs each quality record with the method of the claim
    it rates. Precision is accepted over annotated; a method with no
    annotations reports 0.0.
    """
    annotated: Counter[str] = Counter()
    accepted: Counter[str] = Counter()
    for method, rec in annotations:
        annotated[method] += 1
        if acceptability(rec):
            accepted[method] += 1
    methods = sorted(set(claims_by_method) | set(annotated))
    table = {}
    for method in methods:
        gen = claims_by_method.get(method, 0)
        gen_count = gen if isinstance(gen, int) else len(gen)
        n_annotated = annotated[method]
        table[method] = {
            "generated": gen_count,
            "annotated": n_annotated,
            "accepted": accepted[method],
            "precision": accepted[method] / n_annotated if n_annotated else 0.0,
        }
    return table


def negation_table(rows: Iterable[Mapping[str, Any]]) -> dict[str, dict]:
    """Per-method entailment tallies; fluent means any non-SKIP judgment."""
    table: dict[str, dict] = {}
    for row in rows:
        method = row["method"]
        value = row["entailment"]
        entry = table.setdefault(
            method,
            {"total": 0, "fluent": 0, "label_3": 0, "label_2": 0, "label_1": 0},
        )
        entry["total"] += 1
        if value == SKIP:
            continue
        entry["fluent"] += 1
        entry[f"label_{value}"] += 1
    return dict(sorted(table.items()))


def metrics_metadata(**extra: Any) -> dict:
    """Variant block stamped into every evaluation output."""
    meta = {
        "rouge_variant": ROUGE_VARIANT,
        "tokenizer_version": TOKENIZER_VERSION,
        "alpha_metric_defaults": dict(ALPHA_DEFAULTS),
    }
    meta.update(extra)
    return meta
