import json
import random
import threading
import time
from concurrent.futures import ThreadPoolExecutor

import httpx
import pytest

from claimkit.errors import BackendMalformedResponse, BackendUnavailable, EmptyGeneration
from claimkit.scoring import (
    BEAM,
    SAMPLE_TOP_K,
    EchoGenerator,
    GenerationRequest,
    HttpScorerBackend,
    NliProbs,
    ScorerGateway,
    TableGenerator,
    TableNliScorer,
    TablePerplexityScorer,
    TrigramPerplexityScorer,
)

from conftest import fixture_path


@pytest.fixture(scope="module")
def trigram():
    return TrigramPerplexityScorer.from_file(fixture_path("ppl_corpus.txt"))


class TestTrigram:
    def test_deterministic(self, trigram):
        text = "Zinc shortens the common cold."
        assert trigram.perplexity([text]) == trigram.perplexity([text])

    def test_batch_composition_irrelevant(self, trigram):
        alone = trigram.perplexity(["Aspirin reduces fever."])[0]
        batched = trigram.perplexity(["xyz", "Aspirin reduces fever.", "qq"])[1]
        assert alone == batched

    def test_corpus_like_text_scores_lower(self, trigram):
        fluent = "Zinc shortens the common cold."
        rng = random.Random(3)
        chars = list(fluent)
        rng.shuffle(chars)
        garbled = "".join(chars)
        assert trigram.perplexity([fluent])[0] < trigram.perplexity([garbled])[0]

    def test_unknown_characters_score(self, trigram):
        (value,) = trigram.perplexity(["ζζζ"])
        assert value > 0

    def test_empty_text_rejected(self, trigram):
        with pytest.raises(ValueError):
            trigram.perplexity([""])

    def test_from_file_matches_in_memory(self, trigram):
        with open(fixture_path("ppl_corpus.txt"), encoding="utf-8") as handle:
            lines = [line.rstrip("\n") for line in handle]
        other = TrigramPerplexityScorer(lines)
        probe = ["influenza virus", "zz@@zz"]
        assert other.perplexity(probe) == trigram.perplexity(probe)


class TestStubBackends:
    def test_ppl_table_lookup_and_miss(self):
        scorer = TablePerplexityScorer({"a": 2.0})
        assert scorer.perplexity(["a"]) == [2.0]
        with pytest.raises(KeyError):
            scorer.perplexity(["b"])

    def test_ppl_table_default(self):
        scorer = TablePerplexityScorer({"a": 2.0}, default=7.0)
        assert scorer.perplexity(["a", "b"]) == [2.0, 7.0]

    def test_nli_table_uniform_default(self):
        scorer = TableNliScorer({("p", "h"): (0.1, 0.2, 0.7)})
        assert scorer.nli([("p", "h")]) == [(0.1, 0.2, 0.7)]
        assert scorer.nli([("p", "x")]) == [TableNliScorer.UNIFORM]

    def test_nli_table_strict(self):
        scorer = TableNliScorer({}, default=None)
        with pytest.raises(KeyError):
            scorer.nli([("p", "h")])

    def test_echo_generator_numbers_outputs(self):
        outputs = EchoGenerator().generate(GenerationRequest(input="x", num_outputs=2))
        assert outputs == ["CLAIM: x #1", "CLAIM: x #2"]

    def test_table_generator_truncates(self):
        gen = TableGenerator({"x": ["a", "b", "c"]})
        assert gen.generate(GenerationRequest(input="x", num_outputs=2)) == ["a", "b"]
        with pytest.raises(KeyError):
            gen.generate(GenerationRequest(input="y"))


class TestValueTypes:
    def test_nli_probs_valid(self):
        probs = NliProbs(entailment=0.2, neutral=0.3, contradiction=0.5)
        assert probs.contradiction == 0.5

    def test_nli_probs_sum_enforced(self):
        with pytest.raises(ValueError):
            NliProbs(entailment=0.5, neutral=0.5, contradiction=0.5)

    def test_nli_probs_range_enforced(self):
        with pytest.raises(ValueError):
            NliProbs(entailment=-0.1, neutral=0.6, contradiction=0.5)

    def test_generation_request_validation(self):
        with pytest.raises(ValueError):
            GenerationRequest(input="x", num_outputs=0)
        with pytest.raises(ValueError):
            GenerationRequest(input="x", strategy="greedy")
        assert GenerationRequest(input="x", strategy=SAMPLE_TOP_K).seed == 0


class _SpyPpl:
    def __init__(self, value=2.0):
        self.batches = []
        self.value = value

    def perplexity(self, texts):
        self.batches.append(list(texts))
        return [self.value] * len(texts)


class TestGateway:
    def test_missing_backends_unavailable(self):
        gw = ScorerGateway()
        with pytest.raises(BackendUnavailable):
            gw.perplexity(["x"])
        with pytest.raises(BackendUnavailable):
            gw.nli("p", "h")
        with pytest.raises(BackendUnavailable):
            gw.generate(GenerationRequest(input="x"))

    def test_empty_input_rejected_before_backend(self):
        spy = _SpyPpl()
        gw = ScorerGateway(perplexity_backend=spy)
        with pytest.raises(ValueError):
            gw.perplexity(["ok", ""])
        assert spy.batches == []
        gw2 = ScorerGateway(nli_backend=TableNliScorer())
        with pytest.raises(ValueError):
            gw2.nli("", "h")

    def test_batching_splits_inputs(self):
        spy = _SpyPpl()
        gw = ScorerGateway(perplexity_backend=spy, batch_size=32)
        texts = [f"t{i}" for i in range(70)]
        assert gw.perplexity(texts) == [2.0] * 70
        assert [len(b) for b in spy.batches] == [32, 32, 6]
        assert [t for b in spy.batches for t in b] == texts

    def test_nonpositive_perplexity_rejected(self):
        gw = ScorerGateway(perplexity_backend=_SpyPpl(value=0.0))
        with pytest.raises(BackendMalformedResponse):
            gw.perplexity(["x"])
        gw = ScorerGateway(perplexity_backend=_SpyPpl(value=float("nan")))
        with pytest.raises(BackendMalformedResponse):
            gw.perplexity(["x"])

    def test_count_mismatch_rejected(self):
        class Short:
            def perplexity(self, texts):
                return [1.0]

        gw = ScorerGateway(perplexity_backend=Short())
        with pytest.raises(BackendMalformedResponse):
            gw.perplexity(["a", "b"])

    def test_nli_renormalized_within_band(self):
        gw = ScorerGateway(nli_backend=TableNliScorer({("p", "h"): (0.2, 0.3, 0.5004)}))
        probs = gw.nli("p", "h")
        total = probs.entailment + probs.neutral + probs.contradiction
        assert total == pytest.approx(1.0, abs=1e-12)
        assert probs.contradiction == pytest.approx(0.5004 / 1.0004)

    def test_nli_outside_band_rejected(self):
        gw = ScorerGateway(nli_backend=TableNliScorer({("p", "h"): (0.5, 0.5, 0.5)}))
        with pytest.raises(BackendMalformedResponse):
            gw.nli("p", "h")

    def test_nli_negative_rejected(self):
        gw = ScorerGateway(nli_backend=TableNliScorer({("p", "h"): (-0.1, 0.6, 0.5)}))
        with pytest.raises(BackendMalformedResponse):
            gw.nli("p", "h")

    def test_generate_overlong_rejected(self):
        class Chatty:
            def generate(self, request):
                return ["a", "b"]

        gw = ScorerGateway(generation_backend=Chatty())
        with pytest.raises(BackendMalformedResponse):
            gw.generate(GenerationRequest(input="x", num_outputs=1))

    def test_generate_empty_raises_empty_generation(self):
        gw = ScorerGateway(generation_backend=TableGenerator({"x": [""], "y": []}))
        with pytest.raises(EmptyGeneration):
            gw.generate(GenerationRequest(input="x"))
        with pytest.raises(EmptyGeneration):
            gw.generate(GenerationRequest(input="y"))

    def test_max_in_flight_bounds_concurrency(self):
        lock = threading.Lock()
        state = {"active": 0, "peak": 0}

        class Slow:
            def perplexity(self, texts):
                with lock:
                    state["active"] += 1
                    state["peak"] = max(state["peak"], state["active"])
                time.sleep(0.005)
                with lock:
                    state["active"] -= 1
                return [1.0] * len(texts)

        gw = ScorerGateway(perplexity_backend=Slow(), max_in_flight=2)
        with ThreadPoolExecutor(max_workers=12) as pool:
            list(pool.map(lambda i: gw.perplexity([f"t{i}"]), range(48)))
        assert state["peak"] <= 2


def _backend_with(handler):
    client = httpx.Client(transport=httpx.MockTransport(handler), base_url="http://scorer")
    return HttpScorerBackend("http://scorer", client=client)


class TestHttpBackend:
    def test_perplexity_roundtrip(self):
        def handler(request):
            assert request.url.path == "/v1/perplexity"
            body = json.loads(request.content)
            assert body == {"texts": ["a", "b"]}
            return httpx.Response(200, json={"perplexities": [1.5, 2.5]})

        assert _backend_with(handler).perplexity(["a", "b"]) == [1.5, 2.5]

    def test_nli_roundtrip(self):
        def handler(request):
            body = json.loads(request.content)
            assert body == {"pairs": [{"premise": "p", "hypothesis": "h"}]}
            return httpx.Response(
                200, json={"probs": [{"entailment": 0.1, "neutral": 0.2, "contradiction": 0.7}]}
            )

        assert _backend_with(handler).nli([("p", "h")]) == [(0.1, 0.2, 0.7)]

    def test_generate_roundtrip(self):
        def handler(request):
            body = json.loads(request.content)
            assert body == {"inputs": ["x"], "num_outputs": 2, "strategy": "beam", "seed": 9}
            return httpx.Response(200, json={"outputs": [["u", "v"]]})

        backend = _backend_with(handler)
        request = GenerationRequest(input="x", num_outputs=2, strategy=BEAM, seed=9)
        assert backend.generate(request) == ["u", "v"]

    def test_5xx_maps_to_unavailable(self):
        backend = _backend_with(lambda request: httpx.Response(503))
        with pytest.raises(BackendUnavailable):
            backend.perplexity(["a"])

    def test_4xx_maps_to_malformed(self):
        backend = _backend_with(lambda request: httpx.Response(404))
        with pytest.raises(BackendMalformedResponse):
            backend.perplexity(["a"])

    def test_transport_error_maps_to_unavailable(self):
        def handler(request):
            raise httpx.ConnectError("refused")

        with pytest.raises(BackendUnavailable):
            _backend_with(handler).nli([("p", "h")])

    def test_non_json_body_malformed(self):
        backend = _backend_with(lambda request: httpx.Response(200, text="<html>"))
        with pytest.raises(BackendMalformedResponse):
            backend.perplexity(["a"])

    def test_count_mismatch_malformed(self):
        backend = _backend_with(
            lambda request: httpx.Response(200, json={"perplexities": [1.0]})
        )
        with pytest.raises(BackendMalformedResponse):
            backend.perplexity(["a", "b"])

    def test_missing_probability_key_malformed(self):
        backend = _backend_with(
            lambda request: httpx.Response(200, json={"probs": [{"entailment": 1.0}]})
        )
        with pytest.raises(BackendMalformedResponse):
            backend.nli([("p", "h")])

    def test_recorded_responses_replay_identically(self):
        with open(fixture_path("recorded_scorer.json"), encoding="utf-8") as handle:
            recording = json.load(handle)

        def handler(request):
            entry = recording[request.url.path]
            assert json.loads(request.content) == entry["request"]
            return httpx.Response(200, json=entry["response"])

        results = []
        for _ in range(2):
            backend = _backend_with(handler)
            ppl = backend.perplexity(recording["/v1/perplexity"]["request"]["texts"])
            pair = recording["/v1/nli"]["request"]["pairs"][0]
            nli = backend.nli([(pair["premise"], pair["hypothesis"])])
            gen_req = recording["/v1/generate"]["request"]
            gen = backend.generate(
                GenerationRequest(
                    input=gen_req["inputs"][0],
                    num_outputs=gen_req["num_outputs"],
                    strategy=gen_req["strategy"],
                    seed=gen_req["seed"],
                )
            )
            results.append(json.dumps({"ppl": ppl, "nli": nli, "gen": gen}, sort_keys=True))
        assert results[0] == results[1]
        assert json.loads(results[0])["ppl"] == recording["/v1/perplexity"]["response"]["perplexities"]
