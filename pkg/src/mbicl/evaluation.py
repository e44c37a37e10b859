"""Corpus-level evaluation and the experiment grid runner.

A grid cell is one (selection method, k, ordering[, seed]) combination:
select and order examples on the tune corpus, build one prompt per test
sentence, complete, parse, and score. Each cell yields one EvalReport;
reports carry the full manifest needed to replay them against the cache.
"""

import csv
import json
import logging
from dataclasses import dataclass, field
from pathlib import Path

from . import selection as sel
from .errors import LengthMismatch, MbiclError
from .llm import CompletionClient, GenerationParams
from .metrics import bleu_corpus, sari_sentence
from .prompting import PromptTemplate, build_prompt, parse_completion

log = logging.getLogger(__name__)

DEFAULT_K_GRID = (1, 2, 4, 6, 8, 10, 15, 20)
ORDERING_STUDY_K_GRID = (6, 8, 10, 15)


@dataclass(frozen=True)
class EvalReport:
    run_id: str
    corpus_name: str
    sari: float
    bleu: float
    bleu_order: int
    per_sentence: tuple
    manifest: dict

    def to_json(self):
        obj = {
            "run_id": self.run_id,
            "corpus_name": self.corpus_name,
            "sari": self.sari,
            "bleu": self.bleu,
            "bleu_order": self.bleu_order,
            "per_sentence": list(self.per_sentence),
            "manifest": self.manifest,
        }
        return json.dumps(obj, sort_keys=True, ensure_ascii=False, indent=2) + "\n"


def evaluate(test_corpus, predictions, bleu_order=4, run_id="adhoc", manifest=None):
    """Score *predictions* against *test_corpus* with corpus SARI and BLEU."""
    if len(predictions) != len(test_corpus):
        raise LengthMismatch(
            f"{len(predictions)} predictions for {len(test_corpus)} instances"
        )
    per_sentence = []
    for inst, pred in zip(test_corpus, predictions):
        score = sari_sentence(inst.source, pred, inst.references)
        per_sentence.append({"id": inst.id, "sari": score})
    sari = sum(row["sari"] for row in per_sentence) / len(per_sentence)
    bleu = bleu_corpus(
        predictions, [inst.references for inst in test_corpus], max_order=bleu_order
    )
    return EvalReport(
        run_id=run_id,
        corpus_name=test_corpus.name,
        sari=sari,
        bleu=bleu,
        bleu_order=bleu_order,
        per_sentence=tuple(per_sentence),
        manifest=manifest or {},
    )


@dataclass
class ExperimentConfig:
    tune_corpus: object  # Corpus examples are selected from
    test_corpus: object  # Corpus prompts are evaluated on
    client: CompletionClient
    selection_method: str  # sari | cr | bertprec | random | kate | zero-shot
    k_values: tuple = DEFAULT_K_GRID
    orderings: tuple = (sel.Ordering.HIGH_TO_LOW.value,)
    seeds: tuple = (0,)
    template: PromptTemplate = field(default_factory=PromptTemplate)
    params: GenerationParams = field(default_factory=GenerationParams)
    embedding_backend: object = None
    bleu_order: int = 4
    max_in_flight: int = 4
    kate_reference_index: int = 0

    def base_manifest(self):
        return {
            "tune_corpus": self.tune_corpus.name,
            "test_corpus": self.test_corpus.name,
            "selection_method": self.selection_method,
            "template": {
                "instruction": self.template.instruction,
                "example_format": self.template.example_format,
                "query_format": self.template.query_format,
                "separator": self.template.separator,
            },
            "params": {
                "temperature": self.params.temperature,
                "max_tokens": self.params.max_tokens,
                "top_p": self.params.top_p,
                "frequency_penalty": self.params.frequency_penalty,
                "presence_penalty": self.params.presence_penalty,
                "model_id": self.params.model_id,
            },
            "backend": self.client.backend.name,
            "bleu_order": self.bleu_order,
        }


def _cell_id(method, k, ordering, seed):
    cell = f"{method}-k{k}-{ordering}"
    if seed is not None:
        cell += f"-seed{seed}"
    return cell


def _needs_seed(method, ordering):
    return method == "random" or ordering == sel.Ordering.RANDOM.value


def _global_example_set(config, scored_cache, k, ordering, seed):
    method = config.selection_method
    if k == 0 or method == "zero-shot":
        return sel.ExampleSet(
            pairs=(), k=0, ordering=ordering, selection_method="zero-shot", seed=seed
        )
    if method == "random":
        chosen = sel.random_select(config.tune_corpus, k, seed)
    else:
        if method not in scored_cache:
            scored_cache[method] = sel.score_pairs(
                config.tune_corpus, method, config.embedding_backend
            )
        chosen = sel.select_top_k(scored_cache[method], k)
    return sel.order_examples(chosen, ordering, seed)


def _run_cell(config, scored_cache, k, ordering, seed):
    method = config.selection_method
    if method == "kate" and k > 0:
        prompts = []
        tune_ids = set()
        for inst in config.test_corpus:
            per_query = sel.kate_select(
                config.tune_corpus,
                inst.source,
                k,
                config.embedding_backend,
                reference_index=config.kate_reference_index,
            )
            tune_ids.update(p.instance_id for p in per_query.pairs)
            prompts.append(build_prompt(config.template, per_query, inst.source))
        selected_pairs = sorted(tune_ids)
    else:
        example_set = _global_example_set(config, scored_cache, k, ordering, seed)
        selected_pairs = [
            {"instance_id": p.instance_id, "reference_index": p.reference_index}
            for p in example_set.pairs
        ]
        prompts = [
            build_prompt(config.template, example_set, inst.source)
            for inst in config.test_corpus
        ]

    results = config.client.batch_complete(
        prompts, config.params, max_in_flight=config.max_in_flight
    )
    failures = [r for r in results if isinstance(r, Exception)]
    if failures:
        raise failures[0]
    predictions = [parse_completion(r.completion_text) for r in results]

    manifest = config.base_manifest()
    manifest.update(
        {"k": k, "ordering": ordering, "seed": seed, "selected_pairs": selected_pairs}
    )
    run_id = _cell_id(method, k, ordering, seed)
    return evaluate(
        config.test_corpus,
        predictions,
        bleu_order=config.bleu_order,
        run_id=run_id,
        manifest=manifest,
    )


def run_experiment(config):
    """Run every grid cell; a failing cell is reported, not fatal.

    Returns (reports, failures) where failures maps cell id to the error.
    """
    scored_cache = {}
    reports = []
    failures = {}
    for k in config.k_values:
        for ordering in config.orderings:
            seeds = (
                config.seeds
                if _needs_seed(config.selection_method, ordering)
                else (None,)
            )
            for seed in seeds:
                cell = _cell_id(config.selection_method, k, ordering, seed)
                try:
                    reports.append(_run_cell(config, scored_cache, k, ordering, seed))
                except MbiclError as exc:
                    log.error("cell %s failed: %s", cell, exc)
                    failures[cell] = exc
    return reports, failures


# -- report emission -----------------------------------------------------

def write_report(report, out_dir):
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    path = out_dir / f"{report.run_id}.json"
    path.write_text(report.to_json(), encoding="utf-8")
    return path


def write_grid_csv(reports, path):
    """Plot-ready summary: one row per cell."""
    with Path(path).open("w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(
            ["run_id", "selection_method", "k", "ordering", "seed", "sari", "bleu"]
        )
        for r in reports:
            m = r.manifest
            writer.writerow(
                [
                    r.run_id,
                    m.get("selection_method"),
                    m.get("k"),
                    m.get("ordering"),
                    m.get("seed"),
                    f"{r.sari:.4f}",
                    f"{r.bleu:.4f}",
                ]
            )


def format_grid_table(reports):
    """Aligned plain-text summary of a grid run."""
    header = f"{'cell':<40} {'SARI':>8} {'BLEU':>8}"
    lines = [header, "-" * len(header)]
    for r in reports:
        lines.append(f"{r.run_id:<40} {r.sari:>8.2f} {r.bleu:>8.2f}")
    return "\n".join(lines)
