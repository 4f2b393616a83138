import json
import os

import pytest

from claimkit.annotation import AnnotationStore, load_tasks
from claimkit.generation import load_citances
from claimkit.kb import load_kb, load_vectors
from claimkit.negation import KbinConfig
from claimkit.scoring import ScorerGateway, TableNliScorer, TablePerplexityScorer

import oracles

FIXTURES = os.path.join(os.path.dirname(__file__), "fixtures")


def fixture_path(name: str) -> str:
    return os.path.join(FIXTURES, name)


@pytest.fixture(scope="session")
def desk_kb():
    return load_kb(fixture_path("kb_desk.jsonl"))


@pytest.fixture(scope="session")
def desk_vt():
    return load_vectors(fixture_path("vectors_8d.csv"))


@pytest.fixture(scope="session")
def kbin_claims():
    with open(fixture_path("claims_kbin.jsonl"), encoding="utf-8") as fh:
        return [json.loads(line)["text"] for line in fh if line.strip()]


@pytest.fixture(scope="session")
def kbin_cfg():
    return KbinConfig(top_n_concepts=20)


@pytest.fixture(scope="session")
def kbin_tables(desk_kb, desk_vt, kbin_claims, kbin_cfg):
    """Stub score tables covering the oracle's candidate enumeration.

    No defaults: an implementation query outside the enumerated space
    raises KeyError instead of silently scoring.
    """
    return oracles.kbin_stub_tables(
        desk_kb, desk_vt, kbin_claims, kbin_cfg.top_n_concepts
    )


@pytest.fixture(scope="session")
def kbin_gateway(kbin_tables):
    ppl_table, nli_table = kbin_tables
    return ScorerGateway(
        perplexity_backend=TablePerplexityScorer(ppl_table),
        nli_backend=TableNliScorer(nli_table, default=None),
    )


@pytest.fixture(scope="session")
def citance_records():
    return load_citances(fixture_path("citances.jsonl"))


@pytest.fixture(scope="session")
def task_specs():
    return load_tasks(fixture_path("tasks.jsonl"))


@pytest.fixture()
def memory_store(task_specs):
    return AnnotationStore(
        task_specs, annotators=["ann1", "ann2", "ann3"], seed=13
    )
