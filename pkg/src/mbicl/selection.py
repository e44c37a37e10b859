"""Scoring and selecting in-context examples from a development corpus.

Every (complex, reference) pair is a candidate. Pairs are scored by one of
the selection metrics, the top k are kept, and the kept pairs are arranged
by an ordering strategy. Random and similarity-retrieval baselines live
here too.
"""

import json
import logging
import random
from dataclasses import dataclass, replace
from enum import Enum
from pathlib import Path

from . import embeddings as emb
from .errors import (
    EmbeddingBackendMissing,
    EmptyCorpus,
    ParseError,
    SariNeedsMultipleReferences,
)
from .metrics import Metric, bertscore_precision, compression_ratio, sari_sentence

log = logging.getLogger(__name__)

# BERTScore precision at or above this is treated as an exact duplicate
# (the simple side restates the complex side) and dropped from selection.
DUPLICATE_SCORE = 1.0 - 1e-9


class Ordering(str, Enum):
    HIGH_TO_LOW = "high-to-low"
    LOW_TO_HIGH = "low-to-high"
    RANDOM = "random"


@dataclass(frozen=True)
class ScoredPair:
    instance_id: str
    reference_index: int
    source: object  # Sentence
    simple: object  # Sentence
    metric: str
    score: float | None  # None for unscored (random baseline) pairs

    @property
    def key(self):
        return (self.instance_id, self.reference_index)


@dataclass(frozen=True)
class ExampleSet:
    pairs: tuple
    k: int
    ordering: str
    selection_method: str
    seed: int | None = None

    def __len__(self):
        return len(self.pairs)


def _candidate_pairs(corpus, metric):
    for inst in corpus:
        for j, ref in enumerate(inst.references):
            yield inst, j, ref


def score_pairs(corpus, metric, embedding_backend=None):
    """Score every (complex, reference) pair of *corpus* with *metric*.

    Output is in canonical order: corpus instance order, then reference
    index, so parallel scoring would be unobservable.
    """
    metric = Metric(metric)
    if len(corpus) == 0:
        raise EmptyCorpus("cannot score an empty corpus")
    if metric is Metric.BERTPREC and embedding_backend is None:
        raise EmbeddingBackendMissing("BERTScore precision needs --embeddings")
    if metric is Metric.SARI and all(inst.n_references < 2 for inst in corpus):
        raise SariNeedsMultipleReferences(
            "leave-one-out SARI scoring needs instances with at least 2 references"
        )

    pairs = []
    skipped = 0
    for inst, j, ref in _candidate_pairs(corpus, metric):
        if metric is Metric.CR:
            score = compression_ratio(inst.source, ref)
        elif metric is Metric.SARI:
            if inst.n_references < 2:
                skipped += 1
                continue
            rest = inst.references[:j] + inst.references[j + 1 :]
            score = sari_sentence(inst.source, ref, rest)
        elif metric is Metric.BERTPREC:
            cand = emb.embed_tokens(ref, embedding_backend)
            reference = emb.embed_tokens(inst.source, embedding_backend)
            score = bertscore_precision(cand, reference)
            if score >= DUPLICATE_SCORE:
                continue
        else:
            raise ValueError(f"{metric} is not a selection metric")
        pairs.append(
            ScoredPair(
                instance_id=inst.id,
                reference_index=j,
                source=inst.source,
                simple=ref,
                metric=metric.value,
                score=score,
            )
        )
    if skipped:
        log.warning(
            "skipped %d single-reference instance(s) for SARI scoring", skipped
        )
    return pairs


def _rank_key(pair):
    # unscored pairs sort last, by id
    score = pair.score if pair.score is not None else float("-inf")
    return (-score, pair.instance_id, pair.reference_index)


def select_top_k(pairs, k):
    """The k best-scoring pairs, ties broken by (score desc, id asc, ref asc)."""
    if k < 1:
        raise ValueError("k must be >= 1")
    ranked = sorted(pairs, key=_rank_key)
    if k > len(ranked):
        log.warning("k=%d exceeds candidate pool of %d; returning all", k, len(ranked))
    chosen = tuple(ranked[:k])
    method = chosen[0].metric if chosen else "unknown"
    return ExampleSet(
        pairs=chosen,
        k=k,
        ordering=Ordering.HIGH_TO_LOW.value,
        selection_method=method,
    )


def order_examples(example_set, ordering, seed=None):
    """Rearrange the pairs of *example_set* per the ordering strategy.

    Random ordering uses a Fisher-Yates shuffle driven by Python's seeded
    Mersenne Twister; same seed, same order, within this implementation.
    """
    ordering = Ordering(ordering)
    pairs = list(example_set.pairs)
    if ordering is Ordering.HIGH_TO_LOW:
        pairs.sort(key=_rank_key)
    elif ordering is Ordering.LOW_TO_HIGH:
        pairs.sort(key=_rank_key, reverse=True)
    else:
        if seed is None:
            raise ValueError("random ordering needs a seed")
        random.Random(seed).shuffle(pairs)
    return replace(
        example_set, pairs=tuple(pairs), ordering=ordering.value, seed=seed
    )


def random_select(corpus, k, seed):
    """k distinct (complex, reference) pairs drawn uniformly without
    replacement from the whole candidate population."""
    if k < 1:
        raise ValueError("k must be >= 1")
    population = [
        ScoredPair(
            instance_id=inst.id,
            reference_index=j,
            source=inst.source,
            simple=ref,
            metric="random",
            score=None,
        )
        for inst, j, ref in _candidate_pairs(corpus, None)
    ]
    if k > len(population):
        log.warning("k=%d exceeds population of %d; taking all", k, len(population))
        k = len(population)
    chosen = random.Random(seed).sample(population, k)
    return ExampleSet(
        pairs=tuple(chosen),
        k=k,
        ordering=Ordering.RANDOM.value,
        selection_method="random",
        seed=seed,
    )


def kate_select(dev, query, k, embedding_backend, reference_index=0,
                most_similar_last=True):
    """k dev pairs whose complex-sentence embedding is most similar to the
    query sentence embedding.

    Each instance contributes one pair, its complex sentence paired with the
    reference at *reference_index*. By default the most similar example comes
    last, adjacent to the query in the rendered prompt.
    """
    if embedding_backend is None:
        raise EmbeddingBackendMissing("similarity retrieval needs --embeddings")
    if k < 1:
        raise ValueError("k must be >= 1")
    query_vec = emb.embed_sentence(query, embedding_backend)
    scored = []
    for inst in dev:
        ref = inst.references[min(reference_index, inst.n_references - 1)]
        sim = emb.cosine(emb.embed_sentence(inst.source, embedding_backend), query_vec)
        scored.append(
            ScoredPair(
                instance_id=inst.id,
                reference_index=min(reference_index, inst.n_references - 1),
                source=inst.source,
                simple=ref,
                metric="kate",
                score=sim,
            )
        )
    scored.sort(key=_rank_key)
    chosen = scored[:k]
    if most_similar_last:
        chosen.reverse()
    return ExampleSet(
        pairs=tuple(chosen),
        k=k,
        ordering=Ordering.LOW_TO_HIGH.value if most_similar_last
        else Ordering.HIGH_TO_LOW.value,
        selection_method="kate",
    )


# -- on-disk formats -----------------------------------------------------

def save_scored_pairs(pairs, path):
    """Audit dump: one JSON object per scored pair."""
    with Path(path).open("w", encoding="utf-8") as fh:
        for p in pairs:
            fh.write(
                json.dumps(
                    {
                        "instance_id": p.instance_id,
                        "reference_index": p.reference_index,
                        "source": p.source.raw,
                        "simple": p.simple.raw,
                        "metric": p.metric,
                        "score": p.score,
                    },
                    ensure_ascii=False,
                )
                + "\n"
            )


def load_scored_pairs(path):
    from .corpus import Sentence

    pairs = []
    with Path(path).open(encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
                pairs.append(
                    ScoredPair(
                        instance_id=obj["instance_id"],
                        reference_index=obj["reference_index"],
                        source=Sentence.from_raw(obj["source"]),
                        simple=Sentence.from_raw(obj["simple"]),
                        metric=obj["metric"],
                        score=obj["score"],
                    )
                )
            except (json.JSONDecodeError, KeyError) as exc:
                raise ParseError(lineno, str(exc)) from exc
    return pairs


def save_example_set(example_set, path):
    obj = {
        "k": example_set.k,
        "ordering": example_set.ordering,
        "selection_method": example_set.selection_method,
        "seed": example_set.seed,
        "pairs": [
            {
                "instance_id": p.instance_id,
                "reference_index": p.reference_index,
                "source": p.source.raw,
                "simple": p.simple.raw,
                "metric": p.metric,
                "score": p.score,
            }
            for p in example_set.pairs
        ],
    }
    Path(path).write_text(
        json.dumps(obj, ensure_ascii=False, indent=2) + "\n", encoding="utf-8"
    )


def load_example_set(path):
    from .corpus import Sentence

    obj = json.loads(Path(path).read_text(encoding="utf-8"))
    pairs = tuple(
        ScoredPair(
            instance_id=p["instance_id"],
            reference_index=p["reference_index"],
            source=Sentence.from_raw(p["source"]),
            simple=Sentence.from_raw(p["simple"]),
            metric=p["metric"],
            score=p["score"],
        )
        for p in obj["pairs"]
    )
    return ExampleSet(
        pairs=pairs,
        k=obj["k"],
        ordering=obj["ordering"],
        selection_method=obj["selection_method"],
        seed=obj.get("seed"),
    )
