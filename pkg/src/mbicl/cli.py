"""Command-line surface.

Exit codes: 0 success, 1 usage error, 2 data error, 3 backend error.
Every command reads/writes plain files so outputs of one stage feed the
next; the response cache is the only shared state.
"""

import sys
from pathlib import Path

import click

from . import embeddings as emb
from . import evaluation, llm, selection
from .corpus import Sentence, load_jsonl, load_parallel
from .errors import BackendError, DataError, UsageError
from .llm import GenerationParams
from .prompting import PromptTemplate, build_prompt, load_template

ORDERING_CHOICES = [o.value for o in selection.Ordering]
METHOD_CHOICES = ["sari", "cr", "bertprec", "random", "kate", "zero-shot"]


def _load_corpus(path, split="validation"):
    path = Path(path)
    if path.is_dir():
        return load_parallel(path, split=split)
    return load_jsonl(path, split=split)


def _embedding_backend(spec_string):
    if spec_string is None:
        return None
    try:
        return emb.make_backend(spec_string)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc


def _template(path):
    return load_template(path) if path else PromptTemplate()


def _params(model, temperature, max_tokens, top_p):
    try:
        return GenerationParams(
            temperature=temperature,
            max_tokens=max_tokens,
            top_p=top_p,
            model_id=model,
        )
    except ValueError as exc:
        raise UsageError(str(exc)) from exc


@click.group()
def cli():
    """Metric-based example selection for in-context text simplification."""


@cli.command()
@click.argument("corpus_path", type=click.Path(exists=True))
@click.option("--metric", required=True, type=click.Choice(["sari", "cr", "bertprec"]))
@click.option("--embeddings", "embeddings_spec", default=None,
              help="test, file:<path>, or http:<url>")
@click.option("-o", "--output", required=True, type=click.Path())
def score(corpus_path, metric, embeddings_spec, output):
    """Score every (complex, reference) pair of a dev corpus."""
    corpus = _load_corpus(corpus_path)
    backend = _embedding_backend(embeddings_spec)
    pairs = selection.score_pairs(corpus, metric, backend)
    selection.save_scored_pairs(pairs, output)
    click.echo(f"wrote {len(pairs)} scored pairs to {output}")


@cli.command()
@click.argument("scores_path", type=click.Path(exists=True))
@click.option("--k", required=True, type=int)
@click.option("--ordering", default="high-to-low", type=click.Choice(ORDERING_CHOICES))
@click.option("--seed", type=int, default=None)
@click.option("-o", "--output", required=True, type=click.Path())
def select(scores_path, k, ordering, seed, output):
    """Pick the top-k pairs from a scored-pair dump and order them."""
    pairs = selection.load_scored_pairs(scores_path)
    if ordering == selection.Ordering.RANDOM.value and seed is None:
        raise UsageError("random ordering needs --seed")
    chosen = selection.select_top_k(pairs, k)
    chosen = selection.order_examples(chosen, ordering, seed)
    selection.save_example_set(chosen, output)
    click.echo(f"wrote example set of {len(chosen)} to {output}")


@cli.command("build-prompt")
@click.option("--example-set", "example_set_path", type=click.Path(exists=True),
              default=None, help="omit for a zero-shot prompt")
@click.option("--query", required=True)
@click.option("--template", "template_path", type=click.Path(exists=True), default=None)
def build_prompt_cmd(example_set_path, query, template_path):
    """Render a prompt to stdout."""
    examples = (
        selection.load_example_set(example_set_path) if example_set_path else None
    )
    prompt = build_prompt(_template(template_path), examples, Sentence.from_raw(query))
    click.echo(prompt.text, nl=False)


def _completion_client(backend_name, cache_path, test_corpus, base_url, api_key,
                       legacy_completions):
    kwargs = {}
    if backend_name == "http":
        kwargs = {
            "base_url": base_url,
            "api_key": api_key,
            "legacy_completions": legacy_completions,
        }
    backend = llm.make_backend(backend_name, test_corpus=test_corpus, **kwargs)
    cache = llm.ResponseCache(cache_path) if cache_path else None
    return llm.CompletionClient(backend, cache)


_run_options = [
    click.option("--tune", "tune_path", required=True, type=click.Path(exists=True)),
    click.option("--test", "test_path", required=True, type=click.Path(exists=True)),
    click.option("--backend", "backend_name", default="mock-echo",
                 type=click.Choice(["http", "mock-echo", "mock-first-reference"])),
    click.option("--embeddings", "embeddings_spec", default=None),
    click.option("--cache", "cache_path", type=click.Path(), default=None),
    click.option("--template", "template_path", type=click.Path(exists=True),
                 default=None),
    click.option("--model", default="mock"),
    click.option("--temperature", type=float, default=0.7),
    click.option("--max-tokens", type=int, default=256),
    click.option("--top-p", type=float, default=1.0),
    click.option("--bleu-order", type=int, default=4),
    click.option("--base-url", default=None),
    click.option("--api-key", default=None),
    click.option("--legacy-completions", is_flag=True, default=False),
    click.option("--max-in-flight", type=int, default=4),
]


def _with_run_options(fn):
    for option in reversed(_run_options):
        fn = option(fn)
    return fn


def _experiment_config(tune_path, test_path, backend_name, embeddings_spec,
                       cache_path, template_path, model, temperature, max_tokens,
                       top_p, bleu_order, base_url, api_key, legacy_completions,
                       max_in_flight, method, k_values, orderings, seeds):
    tune = _load_corpus(tune_path, split="validation")
    test = _load_corpus(test_path, split="test")
    client = _completion_client(
        backend_name, cache_path, test, base_url, api_key, legacy_completions
    )
    return evaluation.ExperimentConfig(
        tune_corpus=tune,
        test_corpus=test,
        client=client,
        selection_method=method,
        k_values=tuple(k_values),
        orderings=tuple(orderings),
        seeds=tuple(seeds),
        template=_template(template_path),
        params=_params(model, temperature, max_tokens, top_p),
        embedding_backend=_embedding_backend(embeddings_spec),
        bleu_order=bleu_order,
        max_in_flight=max_in_flight,
    )


def _emit(reports, failures, out_dir):
    for report in reports:
        evaluation.write_report(report, out_dir)
    evaluation.write_grid_csv(reports, Path(out_dir) / "grid.csv")
    click.echo(evaluation.format_grid_table(reports))
    if failures:
        for cell, exc in failures.items():
            click.echo(f"cell {cell} failed: {exc}", err=True)
        raise next(iter(failures.values()))


@cli.command()
@_with_run_options
@click.option("--method", default="sari", type=click.Choice(METHOD_CHOICES))
@click.option("--k", type=int, default=None, help="ignored with --example-set")
@click.option("--example-set", "example_set_path", type=click.Path(exists=True),
              default=None, help="pre-selected examples; skips selection flags")
@click.option("--ordering", default="high-to-low", type=click.Choice(ORDERING_CHOICES))
@click.option("--seed", type=int, default=None)
@click.option("--report", "out_dir", required=True, type=click.Path())
def run(method, k, example_set_path, ordering, seed, out_dir, **run_kwargs):
    """One experiment cell: select, prompt, complete, evaluate."""
    if example_set_path:
        example_set = selection.load_example_set(example_set_path)
        method = example_set.selection_method
        k = example_set.k
        ordering = example_set.ordering
        seed = example_set.seed
    elif k is None:
        raise UsageError("either --k or --example-set is required")
    if (method == "random" or ordering == "random") and seed is None:
        raise UsageError("--seed is required for random selection or ordering")

    config = _experiment_config(
        method=method, k_values=[k], orderings=[ordering],
        seeds=[seed] if seed is not None else [0], **run_kwargs
    )
    if example_set_path:
        # honor the pre-selected pairs instead of re-running selection
        reports, failures = _run_fixed(config, example_set)
    else:
        reports, failures = evaluation.run_experiment(config)
    _emit(reports, failures, out_dir)


def _run_fixed(config, example_set):
    from .evaluation import evaluate
    from .prompting import parse_completion

    prompts = [
        build_prompt(config.template, example_set, inst.source)
        for inst in config.test_corpus
    ]
    results = config.client.batch_complete(
        prompts, config.params, max_in_flight=config.max_in_flight
    )
    errors = [r for r in results if isinstance(r, Exception)]
    if errors:
        return [], {"fixed": errors[0]}
    predictions = [parse_completion(r.completion_text) for r in results]
    manifest = config.base_manifest()
    manifest.update(
        {
            "k": example_set.k,
            "ordering": example_set.ordering,
            "seed": example_set.seed,
            "selected_pairs": [
                {"instance_id": p.instance_id, "reference_index": p.reference_index}
                for p in example_set.pairs
            ],
        }
    )
    run_id = f"{example_set.selection_method}-k{example_set.k}-{example_set.ordering}"
    report = evaluate(
        config.test_corpus, predictions, bleu_order=config.bleu_order,
        run_id=run_id, manifest=manifest,
    )
    return [report], {}


@cli.command("evaluate")
@click.option("--test", "test_path", required=True, type=click.Path(exists=True))
@click.option("--predictions", "predictions_path", required=True,
              type=click.Path(exists=True), help="one prediction per line")
@click.option("--bleu-order", type=int, default=4)
@click.option("-o", "--output", required=True, type=click.Path())
def evaluate_cmd(test_path, predictions_path, bleu_order, output):
    """Score an existing prediction file against a test corpus."""
    test = _load_corpus(test_path, split="test")
    lines = Path(predictions_path).read_text(encoding="utf-8").splitlines()
    predictions = [Sentence.from_raw(line) for line in lines if line.strip()]
    report = evaluation.evaluate(test, predictions, bleu_order=bleu_order)
    Path(output).write_text(report.to_json(), encoding="utf-8")
    click.echo(f"SARI {report.sari:.2f}  BLEU {report.bleu:.2f}")


@cli.command()
@_with_run_options
@click.option("--method", default="sari", type=click.Choice(METHOD_CHOICES))
@click.option("--k-list", default="1,2,4,6,8,10,15,20",
              help="comma-separated k values; 0 means zero-shot")
@click.option("--orderings", "orderings_csv", default="high-to-low",
              help="comma-separated ordering strategies")
@click.option("--seed", "seeds_csv", default=None,
              help="comma-separated seeds; required in grid mode")
@click.option("--out-dir", required=True, type=click.Path())
def grid(method, k_list, orderings_csv, seeds_csv, out_dir, **run_kwargs):
    """Run a full (k x ordering[ x seed]) experiment grid."""
    if seeds_csv is None:
        raise UsageError("--seed is required in grid mode")
    k_values = [int(v) for v in k_list.split(",") if v.strip()]
    orderings = [v.strip() for v in orderings_csv.split(",") if v.strip()]
    seeds = [int(v) for v in seeds_csv.split(",") if v.strip()]
    for ordering in orderings:
        if ordering not in ORDERING_CHOICES:
            raise UsageError(f"unknown ordering {ordering!r}")
    config = _experiment_config(
        method=method, k_values=k_values, orderings=orderings, seeds=seeds,
        **run_kwargs
    )
    reports, failures = evaluation.run_experiment(config)
    _emit(reports, failures, out_dir)


def main(argv=None):
    try:
        cli.main(args=argv, standalone_mode=False)
    except click.ClickException as exc:
        click.echo(f"error: {exc.format_message()}", err=True)
        return 1
    except click.exceptions.Abort:
        return 1
    except UsageError as exc:
        click.echo(f"error: {exc}", err=True)
        return 1
    except DataError as exc:
        click.echo(f"data error: {exc}", err=True)
        return 2
    except BackendError as exc:
        click.echo(f"backend error: {exc}", err=True)
        return 3
    return 0


if __name__ == "__main__":
    sys.exit(main())
