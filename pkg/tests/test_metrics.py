import json
import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from claimkit.annotation import PROTOCOL_NEGATION, PROTOCOL_QUALITY, SKIP, AnnotationRecord
from claimkit.errors import (
    EmptyAfterTokenization,
    GatingViolation,
    InsufficientData,
    MissingReferences,
)
from claimkit.metrics import (
    ReferenceClaimSet,
    ZeroExpectedDisagreement,
    acceptability,
    acceptability_values,
    exact_agreement_pct,
    krippendorff_alpha,
    max_avg_score,
    metrics_metadata,
    negation_table,
    rouge,
    tokenize,
    yield_table,
)

import oracles
from conftest import fixture_path


class TestTokenize:
    def test_lowercase_alnum(self):
        assert tokenize("Aspirin, reduces FEVER!") == ["aspirin", "reduces", "fever"]

    def test_underscore_splits(self):
        assert tokenize("a_b c") == ["a", "b", "c"]

    def test_digits_kept(self):
        assert tokenize("dose 50mg") == ["dose", "50mg"]

    def test_empty(self):
        assert tokenize("!!!") == []


# (candidate, reference, r1, r2, rl), all fractions derived by hand
ROUGE_CASES = [
    ("the cat sat", "the cat sat", 1.0, 1.0, 1.0),
    ("a b c", "a c d", 2 / 3, 0.0, 2 / 3),
    ("x y", "p q", 0.0, 0.0, 0.0),
    ("the cat", "the cat sat", 0.8, 2 / 3, 0.8),
    ("a a b", "a b b", 2 / 3, 0.5, 2 / 3),
    ("c b a", "a b c", 1.0, 0.0, 1 / 3),
    ("a a a", "a", 0.5, 0.0, 0.5),
    ("The CAT", "the cat", 1.0, 1.0, 1.0),
    ("aspirin, reduces fever!", "aspirin reduces fever", 1.0, 1.0, 1.0),
    ("a b", "b a", 1.0, 0.0, 0.5),
    ("flu", "flu", 1.0, 0.0, 1.0),
    ("zinc prevents the common cold", "zinc prevents colds", 0.5, 1 / 3, 0.5),
    ("dose 50 mg", "dose 50mg", 0.4, 0.0, 0.4),
]


class TestRouge:
    @pytest.mark.parametrize("cand,ref,r1,r2,rl", ROUGE_CASES)
    def test_hand_derived_values(self, cand, ref, r1, r2, rl):
        scores = rouge(cand, ref)
        assert scores.r1 == pytest.approx(r1, abs=1e-9)
        assert scores.r2 == pytest.approx(r2, abs=1e-9)
        assert scores.rl == pytest.approx(rl, abs=1e-9)

    def test_get_by_variant(self):
        scores = rouge("a b c", "a c d")
        assert scores.get("r1") == scores.r1
        assert scores.get("r2") == scores.r2
        assert scores.get("rl") == scores.rl
        with pytest.raises(ValueError):
            scores.get("r3")

    def test_empty_candidate_rejected(self):
        with pytest.raises(EmptyAfterTokenization):
            rouge("!!!", "a b")

    def test_empty_reference_rejected(self):
        with pytest.raises(EmptyAfterTokenization):
            rouge("a b", "...")

    token_lists = st.lists(st.sampled_from(["a", "b", "c", "d"]), min_size=1, max_size=8)

    @given(token_lists, token_lists)
    @settings(max_examples=300)
    def test_f1_is_symmetric(self, ta, tb):
        a, b = " ".join(ta), " ".join(tb)
        ab, ba = rouge(a, b), rouge(b, a)
        assert ab.r1 == pytest.approx(ba.r1, abs=1e-12)
        assert ab.r2 == pytest.approx(ba.r2, abs=1e-12)
        assert ab.rl == pytest.approx(ba.rl, abs=1e-12)

    @given(token_lists, token_lists)
    @settings(max_examples=300)
    def test_scores_bounded(self, ta, tb):
        scores = rouge(" ".join(ta), " ".join(tb))
        for v in (scores.r1, scores.r2, scores.rl):
            assert 0.0 <= v <= 1.0
        # LCS is a subsequence of both, so R-L never beats R-1
        assert scores.rl <= scores.r1 + 1e-12


class TestMaxAvg:
    def test_identical_claims_score_one(self):
        refs = {"c1": ReferenceClaimSet(citance_id="c1", references=("a b",))}
        assert max_avg_score([("c1", "a b")], refs) == pytest.approx(1.0)

    def test_hand_derived_mean(self):
        refs = {"c1": ReferenceClaimSet(citance_id="c1", references=("a b",))}
        got = max_avg_score([("c1", "a b"), ("c1", "a x")], refs)
        assert got == pytest.approx(0.75, abs=1e-12)

    def test_max_over_references(self):
        refs = {"c1": ReferenceClaimSet(citance_id="c1", references=("p q", "a x"))}
        assert max_avg_score([("c1", "a x")], refs) == pytest.approx(1.0)

    def test_duplicate_references_change_nothing(self):
        refs1 = {"c1": ReferenceClaimSet(citance_id="c1", references=("a b", "a c"))}
        refs2 = {"c1": ReferenceClaimSet(citance_id="c1", references=("a b", "a c", "a b"))}
        gen = [("c1", "a b c")]
        assert max_avg_score(gen, refs1) == max_avg_score(gen, refs2)

    def test_generated_order_irrelevant(self):
        refs = {"c1": ReferenceClaimSet(citance_id="c1", references=("a b", "c d"))}
        gen = [("c1", "a b"), ("c1", "c x"), ("c1", "d d")]
        shuffled = gen[::-1]
        assert max_avg_score(gen, refs) == pytest.approx(max_avg_score(shuffled, refs))

    def test_missing_references(self):
        with pytest.raises(MissingReferences):
            max_avg_score([("c9", "a")], {})

    def test_empty_generated(self):
        with pytest.raises(InsufficientData):
            max_avg_score([], {})

    def test_unknown_variant(self):
        refs = {"c1": ReferenceClaimSet(citance_id="c1", references=("a",))}
        with pytest.raises(ValueError):
            max_avg_score([("c1", "a")], refs, variant="r9")

    def test_matches_naive_double_loop(self):
        refs = {}
        with open(fixture_path("refs.jsonl"), encoding="utf-8") as handle:
            for line in handle:
                obj = json.loads(line)
                refs[obj["citance_id"]] = ReferenceClaimSet(
                    citance_id=obj["citance_id"], references=tuple(obj["references"])
                )
        rng = random.Random(17)
        vocab = ["zinc", "cold", "aspirin", "reduces", "fever", "virus", "the", "influenza"]
        generated = [
            (cid, " ".join(rng.choice(vocab) for _ in range(rng.randrange(2, 7))))
            for cid in sorted(refs)
            for _ in range(3)
        ]
        for variant in ("r1", "r2", "rl"):
            got = max_avg_score(generated, refs, variant=variant)
            expected = oracles.oracle_max_avg(
                generated,
                {cid: rs.references for cid, rs in refs.items()},
                lambda cand, ref, v=variant: rouge(cand, ref).get(v),
            )
            assert got == pytest.approx(expected, abs=1e-12)


class TestAlpha:
    def test_unanimous_is_exactly_one_with_warning(self):
        with pytest.warns(ZeroExpectedDisagreement):
            assert krippendorff_alpha([[2, 2, 2], [2, 2, 2]]) == 1.0

    def test_perfect_agreement_two_categories(self):
        # no warning: two categories observed, but zero disagreement
        assert krippendorff_alpha([[1, None, 2], [1, None, 2]]) == 1.0

    def test_nominal_half_disagreement(self):
        assert krippendorff_alpha([[1, 1], [1, 2]], metric="nominal") == pytest.approx(
            0.0, abs=1e-12
        )

    def test_nominal_systematic_disagreement(self):
        assert krippendorff_alpha([[1, 2], [2, 1]], metric="nominal") == pytest.approx(
            -0.5, abs=1e-12
        )

    def test_ordinal_hand_value(self):
        assert krippendorff_alpha([[1, 2], [1, 3]], metric="ordinal") == pytest.approx(
            5 / 6, abs=1e-12
        )

    def test_interval_hand_value(self):
        assert krippendorff_alpha([[0, 1], [0, 3]], metric="interval") == pytest.approx(
            0.5, abs=1e-12
        )

    def test_missing_cells_match_oracle(self):
        ratings = [[1, 1, None, 2], [1, 2, 2, 2], [None, 2, 2, 1]]
        for metric in ("nominal", "ordinal", "interval"):
            assert krippendorff_alpha(ratings, metric=metric) == pytest.approx(
                oracles.oracle_alpha(ratings, metric=metric), abs=1e-9
            )

    def test_random_matrices_match_oracle(self):
        rng = random.Random(23)
        for metric in ("nominal", "ordinal", "interval"):
            for _ in range(8):
                raters = rng.randrange(2, 5)
                items = rng.randrange(2, 9)
                ratings = [
                    [
                        rng.choice([None, 1, 2, 3, 4, 5])
                        for _ in range(items)
                    ]
                    for _ in range(raters)
                ]
                if all(
                    len([r[j] for r in ratings if r[j] is not None]) < 2
                    for j in range(items)
                ):
                    continue
                got = krippendorff_alpha(ratings, metric=metric)
                expected = oracles.oracle_alpha(ratings, metric=metric)
                assert got == pytest.approx(expected, abs=1e-9), (metric, ratings)

    def test_nominal_with_skip_values(self):
        ratings = [[1, SKIP, 2], [1, SKIP, 3], [1, 2, None]]
        got = krippendorff_alpha(ratings, metric="nominal")
        expected = oracles.oracle_alpha(ratings, metric="nominal")
        assert got == pytest.approx(expected, abs=1e-9)

    def test_nominal_relabeling_invariance(self):
        ratings = [[1, 2, 1, 3, None], [1, 2, 2, 3, 1], [2, 2, 1, 3, 1]]
        relabel = {1: "apple", 2: "pear", 3: "plum"}
        renamed = [
            [relabel[v] if v is not None else None for v in row] for row in ratings
        ]
        a = krippendorff_alpha(ratings, metric="nominal")
        b = krippendorff_alpha(renamed, metric="nominal")
        assert a == pytest.approx(b, abs=1e-12)

    def test_ordinal_rejects_strings(self):
        with pytest.raises(ValueError):
            krippendorff_alpha([[1, SKIP], [1, 2]], metric="ordinal")

    def test_unknown_metric(self):
        with pytest.raises(ValueError):
            krippendorff_alpha([[1], [1]], metric="ratio")

    def test_single_rater_insufficient(self):
        with pytest.raises(InsufficientData):
            krippendorff_alpha([[1, 2, 3]])

    def test_no_pairable_items_insufficient(self):
        with pytest.raises(InsufficientData):
            krippendorff_alpha([[1, None], [None, 2]])

    def test_jagged_rows_tolerated(self):
        short = krippendorff_alpha([[1, 2], [1, 2, 3]])
        padded = krippendorff_alpha([[1, 2, None], [1, 2, 3]])
        assert short == padded


class TestExactAgreement:
    def test_mixed(self):
        assert exact_agreement_pct([[1, 1, 2], [1, 2, 2]]) == pytest.approx(2 / 3)

    def test_all_unanimous(self):
        assert exact_agreement_pct([[3, 3], [3, 3]]) == 1.0

    def test_none_cells_skip_items(self):
        assert exact_agreement_pct([[1, None], [1, 1]]) == 1.0

    def test_insufficient(self):
        with pytest.raises(InsufficientData):
            exact_agreement_pct([[1, 2]])
        with pytest.raises(InsufficientData):
            exact_agreement_pct([[1, None], [None, 1]])


def _quality(fluency=None, decon=None, atom=None, faith=None, **kw):
    return AnnotationRecord(
        annotator="ann1", task_id="t1", protocol=PROTOCOL_QUALITY, revision=1,
        fluency=fluency, decontextualized=decon, atomicity=atom, faithfulness=faith, **kw
    )


class TestAcceptability:
    def test_accepting_pattern(self):
        assert acceptability_values(3, 1, 1, 5) is True
        assert acceptability_values(2, 1, 1, 4) is True

    def test_rejecting_patterns(self):
        assert acceptability_values(3, 1, 0, 4) is False
        assert acceptability_values(1, None, None, None) is False
        assert acceptability_values(3, 0, None, None) is False
        assert acceptability_values(3, 1, 1, 3) is False

    def test_none_never_accepts(self):
        assert acceptability_values(None, 1, 1, 5) is False
        assert acceptability_values(3, None, 1, 5) is False
        assert acceptability_values(3, 1, None, 5) is False
        assert acceptability_values(3, 1, 1, None) is False

    def test_record_level_checks_gating_first(self):
        bad = _quality(fluency=1, faith=5)
        with pytest.raises(GatingViolation):
            acceptability(bad)

    def test_record_level_values(self):
        assert acceptability(_quality(3, 1, 1, 5)) is True
        assert acceptability(_quality(3, 1, 0, 4)) is False
        assert acceptability(_quality(1)) is False

    def test_negation_record_rejected(self):
        rec = AnnotationRecord(
            annotator="ann1", task_id="t1", protocol=PROTOCOL_NEGATION, revision=1,
            slot="A", entailment=2,
        )
        with pytest.raises(GatingViolation):
            acceptability(rec)

    def test_monotone_in_each_criterion(self):
        # flipping any failing criterion to its best value never turns
        # an accepted tuple into a rejected one
        for f in (1, 2, 3):
            for d in (0, 1):
                for a in (0, 1):
                    for faith in (1, 2, 3, 4, 5):
                        before = acceptability_values(f, d, a, faith)
                        best = acceptability_values(3, 1, 1, 5)
                        if before:
                            assert best


class TestYieldTable:
    def test_counts_and_precision(self):
        annotations = [
            ("entity", _quality(3, 1, 1, 5)),
            ("entity", _quality(3, 1, 1, 4)),
            ("entity", _quality(3, 1, 0, 4)),
            ("entity", _quality(1)),
        ]
        table = yield_table({"entity": 10, "direct": ["a", "b"]}, annotations)
        assert table["entity"] == {
            "generated": 10,
            "annotated": 4,
            "accepted": 2,
            "precision": 0.5,
        }
        assert table["direct"] == {
            "generated": 2,
            "annotated": 0,
            "accepted": 0,
            "precision": 0.0,
        }

    def test_method_only_in_annotations(self):
        table = yield_table({}, [("entity", _quality(3, 1, 1, 5))])
        assert table["entity"]["generated"] == 0
        assert table["entity"]["precision"] == 1.0


class TestNegationTable:
    def test_tallies(self):
        rows = [
            {"method": "kbin", "entailment": 3},
            {"method": "kbin", "entailment": 3},
            {"method": "kbin", "entailment": 2},
            {"method": "kbin", "entailment": SKIP},
            {"method": "random-entity", "entailment": 1},
        ]
        table = negation_table(rows)
        assert table["kbin"] == {
            "total": 4, "fluent": 3, "label_3": 2, "label_2": 1, "label_1": 0,
        }
        assert table["random-entity"]["fluent"] == 1
        assert list(table) == ["kbin", "random-entity"]

    def test_all_skip_counts_nothing_fluent(self):
        table = negation_table([{"method": "m", "entailment": SKIP}] * 3)
        assert table["m"] == {
            "total": 3, "fluent": 0, "label_3": 0, "label_2": 0, "label_1": 0,
        }

    def test_label_partition(self):
        rng = random.Random(9)
        rows = [
            {"method": "m", "entailment": rng.choice([1, 2, 3, SKIP])} for _ in range(60)
        ]
        entry = negation_table(rows)["m"]
        assert entry["label_1"] + entry["label_2"] + entry["label_3"] == entry["fluent"]
        assert entry["fluent"] <= entry["total"]


class TestMetadata:
    def test_variant_block(self):
        meta = metrics_metadata()
        assert meta["rouge_variant"] == "f1"
        assert meta["tokenizer_version"] == "lowercase-alnum-v1"
        assert "alpha_metric_defaults" in meta

    def test_extra_fields_merge(self):
        meta = metrics_metadata(alpha_metric="ordinal")
        assert meta["alpha_metric"] == "ordinal"
