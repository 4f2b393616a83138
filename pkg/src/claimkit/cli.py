"""Command-line entry point.

Subcommands: kb (build/validate), link, negate, generate, build-dataset,
eval (rouge, max-avg, alpha, agreement, yield, negation-table), serve.
Every command that writes files also writes a ``run.json`` manifest next
to its output naming the exact inputs (content hashes), configuration,
and tool version, so a rerun can be checked byte for byte.

Exit codes: 0 success, 1 usage error, 2 data error.
"""

from __future__ import annotations

import hashlib
import json
import os
import random as _random
import sys
from concurrent.futures import ThreadPoolExecutor
from typing import Any, Callable, Iterable

import click

from . import __version__
from .annotation import AnnotationRecord, AnnotationStore, load_tasks
from .dataset import (
    DatasetConfig,
    build_dataset,
    claim_id,
    dataset_stats,
    export_scifact,
    instance_to_json,
    load_corpus,
)
from .errors import (
    ClaimkitError,
    NoCandidates,
    NoLinkableEntity,
    NoSameTypeConcept,
)
from .generation import (
    claim_to_json,
    claimgen_direct,
    claimgen_entity,
    load_citances,
    load_claims,
)
from .kb import load_kb, load_vectors, save_kb
from .linking import find_mentions, link
from .metrics import (
    ReferenceClaimSet,
    exact_agreement_pct,
    krippendorff_alpha,
    max_avg_score,
    metrics_metadata,
    negation_table,
    rouge,
    yield_table,
)
from .negation import (
    KbinConfig,
    get_negation,
    negation_from_json,
    negation_to_json,
    random_entity_baseline,
)
from .scoring import (
    EchoGenerator,
    HttpScorerBackend,
    ScorerGateway,
    TableGenerator,
    TableNliScorer,
    TrigramPerplexityScorer,
)

MANIFEST_NAME = "run.json"


def _default_jobs() -> int:
    return min(8, os.cpu_count() or 1)


def _resolve_seed(seed: int | None) -> int:
    if seed is not None:
        return seed
    drawn = _random.SystemRandom().randrange(2**32)
    click.echo(f"seed: {drawn} (no --seed given; recorded in manifest)", err=True)
    return drawn


def _record_seed(seed: int, text: str) -> int:
    """Per-record seed so one --seed drives many independent draws."""
    digest = hashlib.sha256(f"{seed}|{text}".encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "big")


def _digest(path: str | None) -> dict | None:
    if path is None:
        return None
    with open(path, "rb") as handle:
        data = handle.read()
    return {"path": path, "sha256": hashlib.sha256(data).hexdigest(), "bytes": len(data)}


def _write_manifest(
    anchor_path: str,
    command: str,
    config: dict,
    inputs: dict[str, str | None],
    outputs: dict[str, str | None],
    report: dict | None = None,
) -> None:
    manifest = {
        "tool": "claimkit",
        "version": __version__,
        "command": command,
        "config": config,
        "inputs": {k: _digest(v) for k, v in sorted(inputs.items())},
        "outputs": {k: _digest(v) for k, v in sorted(outputs.items())},
    }
    if report is not None:
        manifest["report"] = report
    out_dir = os.path.dirname(os.path.abspath(anchor_path))
    path = os.path.join(out_dir, MANIFEST_NAME)
    with open(path, "w", encoding="utf-8") as handle:
        handle.write(json.dumps(manifest, indent=2, sort_keys=True) + "\n")


def _write_jsonl(path: str, rows: Iterable[dict]) -> int:
    count = 0
    with open(path, "w", encoding="utf-8") as handle:
        for row in rows:
            handle.write(json.dumps(row, sort_keys=True, ensure_ascii=False) + "\n")
            count += 1
    return count


def _read_jsonl(path: str) -> list[dict]:
    rows = []
    with open(path, encoding="utf-8") as handle:
        for line in handle:
            line = line.strip()
            if line:
                rows.append(json.loads(line))
    return rows


def _pmap(fn: Callable, items: list, jobs: int) -> list:
    if jobs <= 1 or len(items) <= 1:
        return [fn(item) for item in items]
    with ThreadPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(fn, items))


def _load_nli_table(path: str) -> TableNliScorer:
    with open(path, encoding="utf-8") as handle:
        spec = json.load(handle)
    table = {
        (str(row["premise"]), str(row["hypothesis"])): tuple(float(x) for x in row["probs"])
        for row in spec.get("pairs", [])
    }
    default = spec.get("default")
    if default is not None:
        return TableNliScorer(table, default=tuple(float(x) for x in default))
    return TableNliScorer(table)


def _build_gateway(
    scorer_url: str | None,
    ppl_corpus: str | None,
    nli_table: str | None,
    echo: bool,
    generator_table: str | None,
    timeout: float,
) -> ScorerGateway:
    if scorer_url:
        backend = HttpScorerBackend(scorer_url, timeout=timeout)
        return ScorerGateway(
            perplexity_backend=backend, nli_backend=backend, generation_backend=backend
        )
    generation = None
    if generator_table:
        with open(generator_table, encoding="utf-8") as handle:
            generation = TableGenerator(json.load(handle))
    elif echo:
        generation = EchoGenerator()
    return ScorerGateway(
        perplexity_backend=(
            TrigramPerplexityScorer.from_file(ppl_corpus) if ppl_corpus else None
        ),
        nli_backend=_load_nli_table(nli_table) if nli_table else None,
        generation_backend=generation,
    )


_scorer_options = [
    click.option("--scorer-url", default=None, help="HTTP scorer backend base URL."),
    click.option(
        "--ppl-corpus",
        type=click.Path(exists=True, dir_okay=False),
        default=None,
        help="Training text for the built-in character-trigram perplexity scorer.",
    ),
    click.option(
        "--nli-table",
        type=click.Path(exists=True, dir_okay=False),
        default=None,
        help="JSON file of fixed NLI probabilities per (premise, hypothesis).",
    ),
    click.option("--echo", is_flag=True, help="Use the echoing stub generator."),
    click.option(
        "--generator-table",
        type=click.Path(exists=True, dir_okay=False),
        default=None,
        help="JSON file of scripted generator outputs per input.",
    ),
    click.option("--timeout", type=float, default=30.0, show_default=True),
]


def _apply_options(options: list) -> Callable:
    def wrap(fn: Callable) -> Callable:
        for option in reversed(options):
            fn = option(fn)
        return fn

    return wrap


@click.group(no_args_is_help=False)
@click.version_option(__version__, prog_name="claimkit")
def cli():
    """Claim generation, knowledge-base negation, and evaluation tools."""


# --- kb ---


@cli.group("kb")
def kb_group():
    """Build or validate concept knowledge-base files."""


@kb_group.command("build")
@click.option("--concepts", type=click.Path(exists=True, dir_okay=False), required=True)
@click.option("--out", type=click.Path(dir_okay=False), required=True)
def kb_build(concepts: str, out: str):
    """Load, validate, and rewrite a concepts file in canonical order."""
    kb = load_kb(concepts)
    save_kb(kb, out)
    report = {
        "concepts": kb.load_report.concept_count,
        "dangling_parents": {k: list(v) for k, v in sorted(kb.load_report.dangling_parents.items())},
    }
    _write_manifest(out, "kb build", {}, {"concepts": concepts}, {"kb": out}, report)
    click.echo(json.dumps(report, sort_keys=True))


@kb_group.command("validate")
@click.option("--concepts", type=click.Path(exists=True, dir_okay=False), required=True)
@click.option("--vectors", type=click.Path(exists=True, dir_okay=False), default=None)
def kb_validate(concepts: str, vectors: str | None):
    """Check a concepts file (and optionally a vector table) and report."""
    kb = load_kb(concepts)
    report: dict[str, Any] = {
        "concepts": kb.load_report.concept_count,
        "aliases": len(kb.alias_index),
        "dangling_parents": {k: list(v) for k, v in sorted(kb.load_report.dangling_parents.items())},
        "vectors": None,
    }
    if vectors is not None:
        vt = load_vectors(vectors)
        covered = sum(1 for cui in kb.concepts if cui in vt)
        report["vectors"] = {"dim": vt.dim, "entries": len(vt.entries), "covered_concepts": covered}
    click.echo(json.dumps(report, sort_keys=True))


# --- link ---


@cli.command("link")
@click.option("--kb", "kb_path", type=click.Path(exists=True, dir_okay=False), required=True)
@click.option("--text", required=True)
@click.option("--out", type=click.Path(dir_okay=False), default=None)
def link_cmd(kb_path: str, text: str, out: str | None):
    """Detect and link entity mentions in TEXT; one JSON line per mention."""
    kb = load_kb(kb_path)
    rows = []
    for mention in find_mentions(kb, text):
        cui = mention.cui or link(kb, mention, text)
        rows.append(
            {
                "text": mention.text,
                "start": mention.start,
                "end": mention.end,
                "cui": cui,
                "candidates": list(mention.candidates),
            }
        )
    if out is None:
        for row in rows:
            click.echo(json.dumps(row, sort_keys=True, ensure_ascii=False))
    else:
        _write_jsonl(out, rows)
        _write_manifest(out, "link", {"text": text}, {"kb": kb_path}, {"mentions": out})


# --- generate ---


@cli.command("generate")
@click.option("--method", type=click.Choice(["entity", "direct"]), required=True)
@click.option("--citances", type=click.Path(exists=True, dir_okay=False), required=True)
@click.option("--out", type=click.Path(dir_okay=False), required=True)
@click.option("--kb", "kb_path", type=click.Path(exists=True, dir_okay=False), default=None)
@click.option("--seed", type=int, default=None)
@click.option("--k", type=int, default=None, help="Override the per-citance sample count.")
@click.option("--jobs", type=int, default=None)
@_apply_options(_scorer_options)
def generate_cmd(
    method: str,
    citances: str,
    out: str,
    kb_path: str | None,
    seed: int | None,
    k: int | None,
    jobs: int | None,
    scorer_url: str | None,
    ppl_corpus: str | None,
    nli_table: str | None,
    echo: bool,
    generator_table: str | None,
    timeout: float,
):
    """Generate claims from citances with the chosen pipeline."""
    if method == "entity" and kb_path is None:
        raise click.UsageError("--method entity requires --kb")
    if not (scorer_url or echo or generator_table):
        raise click.UsageError("generate needs --scorer-url, --echo, or --generator-table")
    seed = _resolve_seed(seed)
    jobs = jobs if jobs is not None else _default_jobs()
    gateway = _build_gateway(scorer_url, ppl_corpus, nli_table, echo, generator_table, timeout)
    kb = load_kb(kb_path) if kb_path else None
    records = load_citances(citances)
    aborted: list[str] = []

    def run_one(rec):
        try:
            if method == "entity":
                return claimgen_entity(kb, gateway, rec, seed=seed)
            return claimgen_direct(gateway, rec, k, kb=kb, seed=seed)
        except (ClaimkitError, KeyError) as exc:
            click.echo(f"citance {rec.id}: aborted: {exc}", err=True)
            aborted.append(rec.id)
            return []

    results = _pmap(run_one, records, jobs)
    claims = [claim for batch in results for claim in batch]
    _write_jsonl(out, [claim_to_json(c) for c in claims])
    _write_manifest(
        out,
        "generate",
        {
            "method": method,
            "seed": seed,
            "k": k,
            "jobs": jobs,
            "backend": scorer_url or ("table" if generator_table else "echo"),
        },
        {"citances": citances, "kb": kb_path, "generator_table": generator_table},
        {"claims": out},
        {"citances": len(records), "claims": len(claims), "aborted": sorted(aborted)},
    )


# --- negate ---


def _claim_texts(path: str) -> list[str]:
    texts = []
    for row in _read_jsonl(path):
        value = row.get("text", row.get("claim"))
        if value:
            texts.append(str(value))
    return texts


@cli.command("negate")
@click.option("--kb", "kb_path", type=click.Path(exists=True, dir_okay=False), required=True)
@click.option("--vectors", type=click.Path(exists=True, dir_okay=False), required=True)
@click.option("--claims", type=click.Path(exists=True, dir_okay=False), required=True)
@click.option("--out", type=click.Path(dir_okay=False), required=True)
@click.option("--baseline", type=click.Choice(["random-entity"]), default=None)
@click.option("--seed", type=int, default=None)
@click.option("--top-n", type=int, default=20, show_default=True)
@click.option("--jobs", type=int, default=None)
@_apply_options(_scorer_options)
def negate_cmd(
    kb_path: str,
    vectors: str,
    claims: str,
    out: str,
    baseline: str | None,
    seed: int | None,
    top_n: int,
    jobs: int | None,
    scorer_url: str | None,
    ppl_corpus: str | None,
    nli_table: str | None,
    echo: bool,
    generator_table: str | None,
    timeout: float,
):
    """Produce one negation per input claim."""
    seed = _resolve_seed(seed)
    jobs = jobs if jobs is not None else _default_jobs()
    kb = load_kb(kb_path)
    vt = load_vectors(vectors)
    texts = _claim_texts(claims)
    skipped: list[dict] = []

    if baseline == "random-entity":
        method = "random-entity"

        def run_one(text):
            try:
                cand = random_entity_baseline(kb, text, _record_seed(seed, text))
            except (NoLinkableEntity, NoSameTypeConcept) as exc:
                skipped.append({"claim": text, "reason": str(exc)})
                return None
            return negation_to_json(text, cand, method)

    else:
        if not (scorer_url or (ppl_corpus and nli_table)):
            raise click.UsageError(
                "negate needs --scorer-url, or --ppl-corpus plus --nli-table"
            )
        gateway = _build_gateway(
            scorer_url, ppl_corpus, nli_table, echo, generator_table, timeout
        )
        cfg = KbinConfig(top_n_concepts=top_n, scorer_url=scorer_url, seed=seed)
        method = "kbin"

        def run_one(text):
            try:
                cand = get_negation(kb, vt, gateway, text, cfg)
            except (NoLinkableEntity, NoCandidates) as exc:
                skipped.append({"claim": text, "reason": str(exc)})
                return None
            return negation_to_json(text, cand, method)

    rows = [row for row in _pmap(run_one, texts, jobs) if row is not None]
    _write_jsonl(out, rows)
    _write_manifest(
        out,
        "negate",
        {
            "baseline": baseline,
            "seed": seed,
            "top_n": top_n,
            "jobs": jobs,
            "backend": scorer_url or "reference",
            "record_seed_rule": "sha256('{seed}|{claim}') first 8 bytes" if baseline else None,
        },
        {"kb": kb_path, "vectors": vectors, "claims": claims,
         "ppl_corpus": ppl_corpus, "nli_table": nli_table},
        {"negations": out},
        {"claims": len(texts), "negations": len(rows),
         "skipped": sorted(skipped, key=lambda r: r["claim"])},
    )


# --- build-dataset ---


@cli.command("build-dataset")
@click.option("--claims", type=click.Path(exists=True, dir_okay=False), required=True)
@click.option("--negations", type=click.Path(exists=True, dir_okay=False), required=True)
@click.option("--citances", type=click.Path(exists=True, dir_okay=False), required=True)
@click.option("--corpus", type=click.Path(exists=True, dir_okay=False), required=True)
@click.option("--out", type=click.Path(dir_okay=False), required=True)
@click.option("--max-cited", type=int, default=None)
@click.option("--nei-claim-ratio", type=int, default=1, show_default=True)
@click.option("--nei-negation-ratio", type=int, default=1, show_default=True)
@click.option("--label-cap", type=int, default=None)
@click.option("--scifact-out", type=click.Path(dir_okay=False), default=None)
def build_dataset_cmd(
    claims: str,
    negations: str,
    citances: str,
    corpus: str,
    out: str,
    max_cited: int | None,
    nei_claim_ratio: int,
    nei_negation_ratio: int,
    label_cap: int | None,
    scifact_out: str | None,
):
    """Pair claims and negations with abstracts into labeled instances."""
    claim_list = load_claims(claims)
    negation_by_text = {}
    for row in _read_jsonl(negations):
        original, cand = negation_from_json(row)
        negation_by_text[original] = cand
    negation_map = {
        claim_id(c): negation_by_text[c.text]
        for c in claim_list
        if c.text in negation_by_text
    }
    citance_map = {rec.id: rec for rec in load_citances(citances)}
    corpus_map = load_corpus(corpus)
    cfg = DatasetConfig(
        max_cited=max_cited,
        nei_claim_ratio=nei_claim_ratio,
        nei_negation_ratio=nei_negation_ratio,
        label_cap=label_cap,
    )
    skipped: list[dict] = []
    instances = build_dataset(claim_list, negation_map, citance_map, corpus_map, cfg, skipped)
    _write_jsonl(out, [instance_to_json(inst) for inst in instances])
    if scifact_out is not None:
        _write_jsonl(scifact_out, export_scifact(instances))
    stats = dataset_stats(instances)
    _write_manifest(
        out,
        "build-dataset",
        {
            "max_cited": max_cited,
            "nei_claim_ratio": nei_claim_ratio,
            "nei_negation_ratio": nei_negation_ratio,
            "label_cap": label_cap,
        },
        {"claims": claims, "negations": negations, "citances": citances, "corpus": corpus},
        {"instances": out, "scifact": scifact_out},
        {"stats": stats.to_json(), "skipped_pairs": skipped},
    )
    click.echo(json.dumps(stats.to_json(), sort_keys=True))


# --- eval ---


@cli.group("eval")
def eval_group():
    """Quantitative evaluation over JSON-lines files."""


def _emit_result(
    result: dict,
    out: str | None,
    command: str,
    config: dict,
    inputs: dict[str, str | None],
) -> None:
    text = json.dumps(result, indent=2, sort_keys=True) + "\n"
    if out is None:
        click.echo(text, nl=False)
    else:
        with open(out, "w", encoding="utf-8") as handle:
            handle.write(text)
        _write_manifest(out, command, config, inputs, {"result": out})


@eval_group.command("rouge")
@click.option("--candidate", default=None)
@click.option("--reference", default=None)
@click.option("--pairs", type=click.Path(exists=True, dir_okay=False), default=None)
@click.option("--out", type=click.Path(dir_okay=False), default=None)
def eval_rouge(candidate: str | None, reference: str | None, pairs: str | None, out: str | None):
    """Score candidate/reference pairs with ROUGE-1/2/L."""
    if pairs is None and (candidate is None or reference is None):
        raise click.UsageError("provide --pairs, or both --candidate and --reference")
    if pairs is not None:
        rows = []
        for row in _read_jsonl(pairs):
            scores = rouge(str(row["candidate"]), str(row["reference"]))
            rows.append(
                {
                    "candidate": row["candidate"],
                    "reference": row["reference"],
                    "r1": scores.r1,
                    "r2": scores.r2,
                    "rl": scores.rl,
                }
            )
        result = {"pairs": rows, "metadata": metrics_metadata()}
    else:
        scores = rouge(candidate, reference)
        result = {
            "r1": scores.r1,
            "r2": scores.r2,
            "rl": scores.rl,
            "metadata": metrics_metadata(),
        }
    _emit_result(result, out, "eval rouge", {}, {"pairs": pairs})


@eval_group.command("max-avg")
@click.option("--generated", type=click.Path(exists=True, dir_okay=False), required=True)
@click.option("--refs", type=click.Path(exists=True, dir_okay=False), required=True)
@click.option("--variant", type=click.Choice(["r1", "r2", "rl"]), default="r1", show_default=True)
@click.option("--out", type=click.Path(dir_okay=False), default=None)
def eval_max_avg(generated: str, refs: str, variant: str, out: str | None):
    """Mean best-reference ROUGE over generated claims."""
    gen_pairs = [
        (str(row["citance_id"]), str(row["text"])) for row in _read_jsonl(generated)
    ]
    ref_map = {
        str(row["citance_id"]): ReferenceClaimSet(
            citance_id=str(row["citance_id"]),
            references=tuple(str(r) for r in row["references"]),
        )
        for row in _read_jsonl(refs)
    }
    score = max_avg_score(gen_pairs, ref_map, variant)
    result = {
        "score": score,
        "variant": variant,
        "claims": len(gen_pairs),
        "metadata": metrics_metadata(),
    }
    _emit_result(result, out, "eval max-avg", {"variant": variant},
                 {"generated": generated, "refs": refs})


def _matrix_from_rows(rows: list[dict], field: str) -> list[list]:
    raters = sorted({str(row["annotator"]) for row in rows})
    def item_key(row):
        if row.get("method") is not None:
            return (str(row["task_id"]), str(row["method"]))
        return (str(row["task_id"]), "")
    items = sorted({item_key(row) for row in rows})
    index = {key: i for i, key in enumerate(items)}
    matrix: list[list] = [[None] * len(items) for _ in raters]
    for row in rows:
        matrix[raters.index(str(row["annotator"]))][index[item_key(row)]] = row.get(field)
    return matrix


def _load_matrix(matrix: str | None, rows: str | None, field: str | None) -> list[list]:
    if matrix is not None:
        with open(matrix, encoding="utf-8") as handle:
            return json.load(handle)
    if rows is None or field is None:
        raise click.UsageError("provide --matrix, or --rows with --field")
    return _matrix_from_rows(_read_jsonl(rows), field)


@eval_group.command("alpha")
@click.option("--matrix", type=click.Path(exists=True, dir_okay=False), default=None,
              help="JSON rater-by-item matrix with null for missing cells.")
@click.option("--rows", type=click.Path(exists=True, dir_okay=False), default=None,
              help="Exported rating rows (JSON lines).")
@click.option("--field", default=None, help="Rating field to pivot from --rows.")
@click.option("--metric", type=click.Choice(["nominal", "ordinal", "interval"]),
              default="nominal", show_default=True)
@click.option("--out", type=click.Path(dir_okay=False), default=None)
def eval_alpha(matrix: str | None, rows: str | None, field: str | None, metric: str,
               out: str | None):
    """Krippendorff's alpha over a rating matrix."""
    data = _load_matrix(matrix, rows, field)
    value = krippendorff_alpha(data, metric)
    result = {
        "alpha": value,
        "metric": metric,
        "raters": len(data),
        "metadata": metrics_metadata(alpha_metric=metric, field=field),
    }
    _emit_result(result, out, "eval alpha", {"metric": metric, "field": field},
                 {"matrix": matrix, "rows": rows})


@eval_group.command("agreement")
@click.option("--matrix", type=click.Path(exists=True, dir_okay=False), default=None)
@click.option("--rows", type=click.Path(exists=True, dir_okay=False), default=None)
@click.option("--field", default=None)
@click.option("--out", type=click.Path(dir_okay=False), default=None)
def eval_agreement(matrix: str | None, rows: str | None, field: str | None, out: str | None):
    """Share of items rated identically by all raters."""
    data = _load_matrix(matrix, rows, field)
    result = {
        "agreement_pct": exact_agreement_pct(data),
        "raters": len(data),
        "metadata": metrics_metadata(field=field),
    }
    _emit_result(result, out, "eval agreement", {"field": field},
                 {"matrix": matrix, "rows": rows})


@eval_group.command("yield")
@click.option("--claims", type=click.Path(exists=True, dir_okay=False), required=True)
@click.option("--annotations", type=click.Path(exists=True, dir_okay=False), required=True,
              help="Quality-protocol export rows (JSON lines).")
@click.option("--out", type=click.Path(dir_okay=False), default=None)
def eval_yield(claims: str, annotations: str, out: str | None):
    """Generated/annotated/accepted counts with precision, per method."""
    claim_list = load_claims(claims)
    method_by_task = {claim_id(c): c.method for c in claim_list}
    counts: dict[str, int] = {}
    for c in claim_list:
        counts[c.method] = counts.get(c.method, 0) + 1
    pairs = []
    for row in _read_jsonl(annotations):
        rec = AnnotationRecord(
            annotator=str(row["annotator"]),
            task_id=str(row["task_id"]),
            protocol="quality",
            revision=int(row.get("revision", 1)),
            fluency=row.get("fluency"),
            decontextualized=row.get("decontextualized"),
            atomicity=row.get("atomicity"),
            faithfulness=row.get("faithfulness"),
        )
        pairs.append((method_by_task.get(rec.task_id, "unknown"), rec))
    result = {"table": yield_table(counts, pairs), "metadata": metrics_metadata()}
    _emit_result(result, out, "eval yield", {},
                 {"claims": claims, "annotations": annotations})


@eval_group.command("negation-table")
@click.option("--rows", type=click.Path(exists=True, dir_okay=False), required=True,
              help="Negation-protocol export rows (JSON lines).")
@click.option("--out", type=click.Path(dir_okay=False), default=None)
def eval_negation_table(rows: str, out: str | None):
    """Per-method entailment judgment tallies."""
    result = {"table": negation_table(_read_jsonl(rows)), "metadata": metrics_metadata()}
    _emit_result(result, out, "eval negation-table", {}, {"rows": rows})


# --- serve ---


@cli.command("serve")
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", type=int, default=8765, show_default=True)
@click.option("--data-dir", type=click.Path(file_okay=False), default=None)
@click.option("--tasks", type=click.Path(exists=True, dir_okay=False), default=None)
@click.option("--annotators", default=None, help="Comma-separated allow-list of annotator ids.")
@click.option("--seed", type=int, default=None)
@click.option("--kb", "kb_path", type=click.Path(exists=True, dir_okay=False), default=None)
@click.option("--vectors", type=click.Path(exists=True, dir_okay=False), default=None)
@click.option("--top-n", type=int, default=20, show_default=True)
@click.option("--ui-dir", type=click.Path(exists=True, file_okay=False), default=None)
@_apply_options(_scorer_options)
def serve_cmd(
    host: str,
    port: int,
    data_dir: str | None,
    tasks: str | None,
    annotators: str | None,
    seed: int | None,
    kb_path: str | None,
    vectors: str | None,
    top_n: int,
    ui_dir: str | None,
    scorer_url: str | None,
    ppl_corpus: str | None,
    nli_table: str | None,
    echo: bool,
    generator_table: str | None,
    timeout: float,
):
    """Run the annotation service plus scorer endpoints."""
    import uvicorn

    from .service import create_app

    seed = _resolve_seed(seed)
    store = AnnotationStore(
        load_tasks(tasks) if tasks else [],
        data_dir=data_dir,
        annotators=annotators.split(",") if annotators else None,
        seed=seed,
    )
    gateway = _build_gateway(scorer_url, ppl_corpus, nli_table, echo, generator_table, timeout)
    kb = load_kb(kb_path) if kb_path else None
    vt = load_vectors(vectors) if vectors else None
    app = create_app(
        store=store,
        gateway=gateway,
        kb=kb,
        vt=vt,
        kbin_cfg=KbinConfig(top_n_concepts=top_n, scorer_url=scorer_url, seed=seed),
        ui_dir=ui_dir,
    )
    uvicorn.run(app, host=host, port=port, log_level="warning")


def main(argv: list[str] | None = None) -> int:
    """Dispatch argv; returns the process exit code."""
    try:
        cli.main(args=argv, prog_name="claimkit", standalone_mode=False)
        return 0
    except click.exceptions.Exit as exc:
        return int(exc.exit_code)
    except click.UsageError as exc:
        exc.show(file=sys.stderr)
        return 1
    except click.ClickException as exc:
        exc.show(file=sys.stderr)
        return 2
    except ClaimkitError as exc:
        click.echo(f"error: {exc}", err=True)
        return 2
    except (OSError, json.JSONDecodeError, KeyError, ValueError) as exc:
        click.echo(f"error: {exc!r}", err=True)
        return 2


dispatch = main


if __name__ == "__main__":
    sys.exit(main())
