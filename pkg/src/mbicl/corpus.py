"""Multi-reference simplification corpora: loading, validation, tokenization.

Two on-disk layouts are supported:

* parallel: ``complex.txt`` plus ``ref.0.txt`` ... ``ref.{n-1}.txt``, all
  line-aligned, one sentence per line;
* jsonl: one ``{"id": ..., "source": ..., "references": [...]}`` object
  per line.
"""

import json
import re
from dataclasses import dataclass, field
from pathlib import Path

from .errors import (
    DuplicateId,
    EmptyLine,
    EmptyReferences,
    EmptySentence,
    LineCountMismatch,
    MissingFile,
    ParseError,
)

_TOKEN_RE = re.compile(r"\w+|[^\w\s]")


def tokenize(raw):
    """Lowercase word tokenizer that splits punctuation into its own tokens.

    Deterministic; collapses any amount of whitespace. Empty input gives an
    empty list.
    """
    return _TOKEN_RE.findall(raw.lower())


@dataclass(frozen=True)
class Sentence:
    raw: str
    tokens: tuple = field(compare=False)

    @classmethod
    def from_raw(cls, raw):
        raw = raw.strip()
        if not raw:
            raise EmptySentence("sentence text is empty")
        return cls(raw=raw, tokens=tuple(tokenize(raw)))


@dataclass(frozen=True)
class InstanceGroup:
    """One complex sentence together with its ordered reference simplifications."""

    id: str
    source: Sentence
    references: tuple

    def __post_init__(self):
        if len(self.references) < 1:
            raise EmptyReferences(self.id)

    @property
    def n_references(self):
        return len(self.references)


@dataclass(frozen=True)
class Corpus:
    name: str
    split: str
    instances: tuple

    def __len__(self):
        return len(self.instances)

    def __iter__(self):
        return iter(self.instances)

    @property
    def ragged(self):
        """True when instances disagree on reference count."""
        counts = {inst.n_references for inst in self.instances}
        return len(counts) > 1

    @property
    def reference_count(self):
        """Common reference count, or None for a ragged corpus."""
        counts = {inst.n_references for inst in self.instances}
        return counts.pop() if len(counts) == 1 else None


def _read_lines(path):
    lines = path.read_text(encoding="utf-8").split("\n")
    if lines and lines[-1] == "":
        lines.pop()
    for i, line in enumerate(lines):
        if not line.strip():
            raise EmptyLine(str(path), i + 1)
    return lines


def load_parallel(dir_path, name=None, split="validation"):
    """Load the complex.txt / ref.<i>.txt layout from *dir_path*."""
    dir_path = Path(dir_path)
    complex_path = dir_path / "complex.txt"
    if not complex_path.is_file():
        raise MissingFile(f"{complex_path} not found")
    ref_paths = sorted(
        dir_path.glob("ref.*.txt"), key=lambda p: int(p.name.split(".")[1])
    )
    if not ref_paths:
        raise MissingFile(f"no ref.<i>.txt files in {dir_path}")

    sources = _read_lines(complex_path)
    ref_columns = []
    for ref_path in ref_paths:
        lines = _read_lines(ref_path)
        if len(lines) != len(sources):
            raise LineCountMismatch(str(ref_path), len(sources), len(lines))
        ref_columns.append(lines)

    instances = []
    for i, src in enumerate(sources):
        refs = tuple(Sentence.from_raw(col[i]) for col in ref_columns)
        instances.append(
            InstanceGroup(id=str(i), source=Sentence.from_raw(src), references=refs)
        )
    return Corpus(name=name or dir_path.name, split=split, instances=tuple(instances))


def load_jsonl(file_path, name=None, split="validation"):
    """Load the one-object-per-line JSONL layout from *file_path*."""
    file_path = Path(file_path)
    if not file_path.is_file():
        raise MissingFile(f"{file_path} not found")

    instances = []
    seen = set()
    with file_path.open(encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
                id_, source = obj["id"], obj["source"]
                references = obj["references"]
            except (json.JSONDecodeError, KeyError, TypeError) as exc:
                raise ParseError(lineno, str(exc)) from exc
            if id_ in seen:
                raise DuplicateId(id_)
            seen.add(id_)
            if not references:
                raise EmptyReferences(id_)
            instances.append(
                InstanceGroup(
                    id=str(id_),
                    source=Sentence.from_raw(source),
                    references=tuple(Sentence.from_raw(r) for r in references),
                )
            )
    return Corpus(name=name or file_path.stem, split=split, instances=tuple(instances))


def save_jsonl(corpus, file_path):
    """Write *corpus* in the JSONL layout; load_jsonl round-trips it."""
    with Path(file_path).open("w", encoding="utf-8") as fh:
        for inst in corpus:
            obj = {
                "id": inst.id,
                "source": inst.source.raw,
                "references": [r.raw for r in inst.references],
            }
            fh.write(json.dumps(obj, ensure_ascii=False) + "\n")
