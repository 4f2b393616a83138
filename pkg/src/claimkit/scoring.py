"""Scorer access for the negation and generation pipelines.

Three scorer roles: perplexity (fluency ranking, lower is more fluent),
NLI (three-way entailment probabilities), and sequence generation. Each
role is served either by a deterministic in-process reference scorer or
by an HTTP backend speaking the wire protocol in ``service.schemas``.

The :class:`ScorerGateway` is the validating front door: it batches
perplexity requests, renormalizes near-valid NLI distributions, bounds
concurrent backend use, and never mutates input text.
"""

from __future__ import annotations

import math
import threading
from collections import Counter
from dataclasses import dataclass
from typing import Mapping, Protocol, Sequence

import httpx

from .errors import BackendMalformedResponse, BackendUnavailable, EmptyGeneration

NLI_RENORMALIZE_BAND = 1e-3
DEFAULT_BATCH_SIZE = 32
DEFAULT_MAX_IN_FLIGHT = 4

BEAM = "beam"
SAMPLE_TOP_K = "sample_top_k"
STRATEGIES = (BEAM, SAMPLE_TOP_K)


@dataclass(frozen=True)
class NliProbs:
    entailment: float
    neutral: float
    contradiction: float

    def __post_init__(self):
        for value in (self.entailment, self.neutral, self.contradiction):
            if not 0.0 <= value <= 1.0:
                raise ValueError(f"probability {value} outside [0, 1]")
        total = self.entailment + self.neutral + self.contradiction
        if abs(total - 1.0) > 1e-6:
            raise ValueError(f"probabilities sum to {total}, not 1")


@dataclass(frozen=True)
class GenerationRequest:
    input: str
    num_outputs: int = 1
    strategy: str = BEAM
    seed: int = 0

    def __post_init__(self):
        if self.num_outputs < 1:
            raise ValueError("num_outputs must be >= 1")
        if self.strategy not in STRATEGIES:
            raise ValueError(f"unknown strategy {self.strategy!r}")


class PerplexityBackend(Protocol):
    def perplexity(self, texts: Sequence[str]) -> list[float]: ...


class NliBackend(Protocol):
    def nli(self, pairs: Sequence[tuple[str, str]]) -> list[tuple[float, float, float]]: ...


class GenerationBackend(Protocol):
    def generate(self, request: GenerationRequest) -> list[str]: ...


class TrigramPerplexityScorer:
    """Character-trigram language model with add-one smoothing.

    perplexity(t) = exp(mean over characters of -log P(char | two
    preceding characters)), with two start-of-text markers and characters
    unseen in training mapped to a single unknown symbol. Deterministic
    and independent of batch composition.
    """

    BOS = "\x02"
    UNK = "\x00"

    def __init__(self, corpus_lines: Sequence[str]):
        self._tri: Counter[str] = Counter()
        self._bi: Counter[str] = Counter()
        alphabet: set[str] = set()
        for line in corpus_lines:
            if not line:
                continue
            alphabet.update(line)
            padded = self.BOS + self.BOS + line
            for i in range(2, len(padded)):
                self._tri[padded[i - 2 : i + 1]] += 1
                self._bi[padded[i - 2 : i]] += 1
        alphabet.add(self.UNK)
        self._vocab_size = len(alphabet)
        self._alphabet = alphabet

    @classmethod
    def from_file(cls, path: str) -> "TrigramPerplexityScorer":
        with open(path, encoding="utf-8") as handle:
            return cls([line.rstrip("\n") for line in handle])

    def _score_one(self, text: str) -> float:
        if not text:
            raise ValueError("cannot score empty text")
        mapped = "".join(ch if ch in self._alphabet else self.UNK for ch in text)
        padded = self.BOS + self.BOS + mapped
        nll = 0.0
        for i in range(2, len(padded)):
            tri = self._tri.get(padded[i - 2 : i + 1], 0)
            bi = self._bi.get(padded[i - 2 : i], 0)
            nll -= math.log((tri + 1) / (bi + self._vocab_size))
        return math.exp(nll / len(mapped))

    def perplexity(self, texts: Sequence[str]) -> list[float]:
        return [self._score_one(t) for t in texts]


class TablePerplexityScorer:
    """Stub backend: exact text lookup, optional default for misses."""

    def __init__(self, table: Mapping[str, float], default: float | None = None):
        self._table = dict(table)
        self._default = default

    def perplexity(self, texts: Sequence[str]) -> list[float]:
        out = []
        for text in texts:
            value = self._table.get(text, self._default)
            if value is None:
                raise KeyError(f"no perplexity entry for {text!r}")
            out.append(value)
        return out


class TableNliScorer:
    """Stub backend keyed on (premise, hypothesis).

    Unknown pairs fall back to the uniform default; pass `default=None`
    to make unknown pairs raise instead (strict fixtures).
    """

    UNIFORM = (1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0)

    def __init__(
        self,
        table: Mapping[tuple[str, str], tuple[float, float, float]] | None = None,
        default: tuple[float, float, float] | None = UNIFORM,
    ):
        self._table = dict(table or {})
        self._default = default

    def nli(self, pairs: Sequence[tuple[str, str]]) -> list[tuple[float, float, float]]:
        out = []
        for premise, hypothesis in pairs:
            value = self._table.get((premise, hypothesis), self._default)
            if value is None:
                raise KeyError(f"no NLI entry for ({premise!r}, {hypothesis!r})")
            out.append(value)
        return out


class EchoGenerator:
    """Stub backend: echoes the input with a prefix and an output counter."""

    def __init__(self, prefix: str = "CLAIM: "):
        self.prefix = prefix

    def generate(self, request: GenerationRequest) -> list[str]:
        return [
            f"{self.prefix}{request.input} #{i}"
            for i in range(1, request.num_outputs + 1)
        ]


class TableGenerator:
    """Stub backend: scripted outputs per input string."""

    def __init__(self, table: Mapping[str, Sequence[str]]):
        self._table = dict(table)

    def generate(self, request: GenerationRequest) -> list[str]:
        try:
            outputs = self._table[request.input]
        except KeyError:
            raise KeyError(f"no generation entry for {request.input!r}") from None
        return list(outputs[: request.num_outputs])


class HttpScorerBackend:
    """Client for the ``POST /v1/{perplexity,nli,generate}`` wire protocol.

    Transport failures and 5xx map to :class:`BackendUnavailable`; schema
    violations and 4xx map to :class:`BackendMalformedResponse`.
    """

    def __init__(
        self,
        base_url: str,
        *,
        timeout: float = 30.0,
        client: httpx.Client | None = None,
    ):
        self.base_url = base_url.rstrip("/")
        self._client = client or httpx.Client(timeout=timeout)

    def _post(self, path: str, payload: dict) -> dict:
        try:
            response = self._client.post(self.base_url + path, json=payload)
        except httpx.HTTPError as exc:
            raise BackendUnavailable(f"{path}: {exc}") from exc
        if response.status_code >= 500:
            raise BackendUnavailable(f"{path}: HTTP {response.status_code}")
        if response.status_code != 200:
            raise BackendMalformedResponse(f"{path}: HTTP {response.status_code}")
        try:
            body = response.json()
        except ValueError:
            raise BackendMalformedResponse(f"{path}: non-JSON response") from None
        if not isinstance(body, dict):
            raise BackendMalformedResponse(f"{path}: response is not an object")
        return body

    def perplexity(self, texts: Sequence[str]) -> list[float]:
        body = self._post("/v1/perplexity", {"texts": list(texts)})
        values = body.get("perplexities")
        if not isinstance(values, list) or len(values) != len(texts):
            raise BackendMalformedResponse("perplexities count mismatch")
        return [float(v) for v in values]

    def nli(self, pairs: Sequence[tuple[str, str]]) -> list[tuple[float, float, float]]:
        payload = {"pairs": [{"premise": p, "hypothesis": h} for p, h in pairs]}
        body = self._post("/v1/nli", payload)
        probs = body.get("probs")
        if not isinstance(probs, list) or len(probs) != len(pairs):
            raise BackendMalformedResponse("probs count mismatch")
        out = []
        for entry in probs:
            try:
                out.append(
                    (
                        float(entry["entailment"]),
                        float(entry["neutral"]),
                        float(entry["contradiction"]),
                    )
                )
            except (KeyError, TypeError, ValueError):
                raise BackendMalformedResponse("malformed probability triple") from None
        return out

    def generate(self, request: GenerationRequest) -> list[str]:
        payload = {
            "inputs": [request.input],
            "num_outputs": request.num_outputs,
            "strategy": request.strategy,
            "seed": request.seed,
        }
        body = self._post("/v1/generate", payload)
        outputs = body.get("outputs")
        if not isinstance(outputs, list) or len(outputs) != 1 or not isinstance(outputs[0], list):
            raise BackendMalformedResponse("outputs shape mismatch")
        return [str(t) for t in outputs[0]]


class ScorerGateway:
    """Uniform, validating access to the three scorer roles.

    Shareable across threads: backend calls are bounded by a semaphore
    and the gateway itself holds no mutable request state.
    """

    def __init__(
        self,
        *,
        perplexity_backend: PerplexityBackend | None = None,
        nli_backend: NliBackend | None = None,
        generation_backend: GenerationBackend | None = None,
        batch_size: int = DEFAULT_BATCH_SIZE,
        max_in_flight: int = DEFAULT_MAX_IN_FLIGHT,
    ):
        if batch_size < 1:
            raise ValueError("batch_size must be >= 1")
        if max_in_flight < 1:
            raise ValueError("max_in_flight must be >= 1")
        self._perplexity = perplexity_backend
        self._nli = nli_backend
        self._generation = generation_backend
        self.batch_size = batch_size
        self._gate = threading.Semaphore(max_in_flight)

    def perplexity(self, texts: Sequence[str]) -> list[float]:
        if self._perplexity is None:
            raise BackendUnavailable("no perplexity backend configured")
        texts = list(texts)
        for text in texts:
            if not text:
                raise ValueError("perplexity input must be non-empty")
        out: list[float] = []
        for i in range(0, len(texts), self.batch_size):
            batch = texts[i : i + self.batch_size]
            with self._gate:
                values = self._perplexity.perplexity(batch)
            if len(values) != len(batch):
                raise BackendMalformedResponse("perplexity count mismatch")
            for value in values:
                if not math.isfinite(value) or value <= 0.0:
                    raise BackendMalformedResponse(f"perplexity {value!r} not strictly positive")
            out.extend(float(v) for v in values)
        return out

    def nli_batch(self, pairs: Sequence[tuple[str, str]]) -> list[NliProbs]:
        if self._nli is None:
            raise BackendUnavailable("no NLI backend configured")
        pairs = list(pairs)
        for premise, hypothesis in pairs:
            if not premise or not hypothesis:
                raise ValueError("NLI premise and hypothesis must be non-empty")
        out: list[NliProbs] = []
        for i in range(0, len(pairs), self.batch_size):
            batch = pairs[i : i + self.batch_size]
            with self._gate:
                triples = self._nli.nli(batch)
            if len(triples) != len(batch):
                raise BackendMalformedResponse("NLI count mismatch")
            out.extend(self._normalize(t) for t in triples)
        return out

    def nli(self, premise: str, hypothesis: str) -> NliProbs:
        return self.nli_batch([(premise, hypothesis)])[0]

    @staticmethod
    def _normalize(triple: tuple[float, float, float]) -> NliProbs:
        e, n, c = triple
        for value in (e, n, c):
            if not math.isfinite(value) or value < 0.0:
                raise BackendMalformedResponse(f"invalid probability {value!r}")
        total = e + n + c
        if abs(total - 1.0) > NLI_RENORMALIZE_BAND:
            raise BackendMalformedResponse(f"probabilities sum to {total}, outside band")
        return NliProbs(entailment=e / total, neutral=n / total, contradiction=c / total)

    def generate(self, request: GenerationRequest) -> list[str]:
        if self._generation is None:
            raise BackendUnavailable("no generation backend configured")
        if not request.input:
            raise ValueError("generation input must be non-empty")
        with self._gate:
            outputs = self._generation.generate(request)
        if len(outputs) > request.num_outputs:
            raise BackendMalformedResponse(
                f"backend returned {len(outputs)} outputs for num_outputs={request.num_outputs}"
            )
        if not outputs or any(not text for text in outputs):
            raise EmptyGeneration(f"no usable output for {request.input!r}")
        return list(outputs)
