"""Pluggable token-embedding providers.

Three backends share one contract: given a sentence, produce one
unit-normalized vector per token (``embed_tokens``) or a single pooled
unit vector (``embed_sentence``).

* ``HashBackend`` — deterministic pseudo-embeddings derived from a token
  hash; used for tests and offline smoke runs.
* ``FileBackend`` — precomputed vectors from a JSONL store, keyed either
  per sentence id (contextual matrices) or per token (static vectors).
* ``HttpBackend`` — POST /embed against any embedding server.
"""

import hashlib
import json
import threading
from pathlib import Path

import numpy as np
import requests

from .errors import (
    BackendUnavailable,
    DimensionMismatch,
    EmptyEmbedding,
    TokenNotFound,
)

DEFAULT_DIM = 32


def _normalize_rows(matrix):
    matrix = np.asarray(matrix, dtype=float)
    norms = np.linalg.norm(matrix, axis=1, keepdims=True)
    if np.any(norms == 0):
        raise EmptyEmbedding("zero vector cannot be normalized")
    return matrix / norms


class HashBackend:
    """Deterministic hash-derived pseudo-embeddings.

    Each token maps to a fixed unit vector that is a pure function of
    (token, dim, seed): sha256 output bytes are expanded into floats in
    [-1, 1) and the row is normalized. Bit-stable across runs and
    platforms.
    """

    def __init__(self, dim=DEFAULT_DIM, seed=0):
        self.dim = dim
        self.seed = seed

    def _token_vector(self, token):
        values = []
        counter = 0
        while len(values) < self.dim:
            digest = hashlib.sha256(
                f"{self.seed}:{counter}:{token}".encode("utf-8")
            ).digest()
            for i in range(0, len(digest) - 1, 2):
                word = digest[i] << 8 | digest[i + 1]
                values.append(word / 32768.0 - 1.0)
            counter += 1
        return values[: self.dim]

    def embed_tokens(self, tokens):
        return _normalize_rows([self._token_vector(t) for t in tokens])


class FileBackend:
    """Embeddings read from a JSONL store.

    Lines are either ``{"id": ..., "tokens": [...], "vectors": [[...], ...]}``
    (a full per-sentence matrix, used when the sentence id is supplied) or
    ``{"token": ..., "vector": [...]}`` (static per-token vectors). In strict
    mode a missing token raises; otherwise it falls back to a hash vector.
    """

    def __init__(self, path, strict=True):
        self.strict = strict
        self._by_token = {}
        self._by_id = {}
        self._fallback = None
        dim = None
        with Path(path).open(encoding="utf-8") as fh:
            for line in fh:
                if not line.strip():
                    continue
                obj = json.loads(line)
                if "token" in obj:
                    vec = obj["vector"]
                    self._by_token[obj["token"]] = vec
                    row_dim = len(vec)
                elif "id" in obj:
                    self._by_id[obj["id"]] = (obj["tokens"], obj["vectors"])
                    row_dim = len(obj["vectors"][0]) if obj["vectors"] else None
                else:
                    continue
                if row_dim is not None:
                    if dim is not None and row_dim != dim:
                        raise DimensionMismatch(f"{row_dim} vs {dim}")
                    dim = row_dim
        self.dim = dim

    def matrix_for_id(self, sentence_id):
        if sentence_id not in self._by_id:
            raise TokenNotFound(sentence_id)
        _, vectors = self._by_id[sentence_id]
        return _normalize_rows(vectors)

    def embed_tokens(self, tokens):
        rows = []
        for token in tokens:
            if token in self._by_token:
                rows.append(self._by_token[token])
            elif self.strict:
                raise TokenNotFound(token)
            else:
                if self._fallback is None:
                    self._fallback = HashBackend(dim=self.dim or DEFAULT_DIM)
                rows.append(self._fallback._token_vector(token))
        return _normalize_rows(rows)


class HttpBackend:
    """POST /embed with {"tokens": [...]}, expecting {"vectors": [[...], ...]}.

    Results are cached per token tuple; the cache is guarded for concurrent
    access.
    """

    def __init__(self, base_url, timeout=30):
        self.base_url = base_url.rstrip("/")
        self.timeout = timeout
        self._cache = {}
        self._lock = threading.Lock()

    def embed_tokens(self, tokens):
        key = tuple(tokens)
        with self._lock:
            if key in self._cache:
                return self._cache[key]
        try:
            resp = requests.post(
                f"{self.base_url}/embed",
                json={"tokens": list(tokens)},
                timeout=self.timeout,
            )
            resp.raise_for_status()
            vectors = resp.json()["vectors"]
        except (requests.RequestException, KeyError, ValueError) as exc:
            raise BackendUnavailable(f"embedding server: {exc}") from exc
        matrix = _normalize_rows(vectors)
        with self._lock:
            self._cache[key] = matrix
        return matrix


def embed_tokens(sentence, backend):
    """One unit row per token of *sentence*, in token order."""
    if not sentence.tokens:
        raise EmptyEmbedding("cannot embed a sentence with no tokens")
    matrix = backend.embed_tokens(sentence.tokens)
    if matrix.shape[0] != len(sentence.tokens):
        raise DimensionMismatch(
            f"{matrix.shape[0]} rows for {len(sentence.tokens)} tokens"
        )
    return matrix

def embed_sentence(sentence, backend):
    """Mean-pooled, re-normalized sentence vector."""
    matrix = embed_tokens(sentence, backend)
    return _normalize_rows(matrix.mean(axis=0, keepdims=True))[0]


def cosine(a, b):
    """Dot product of two unit-normalized vectors."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.shape != b.shape:
        raise DimensionMismatch(f"{a.shape} vs {b.shape}")
    return float(a @ b)


def make_backend(spec_string):
    """Build a backend from a CLI-style descriptor.

    ``test`` (hash embeddings), ``file:<path>``, or ``http:<base-url>``.
    """
    if spec_string == "test":
        return HashBackend()
    if spec_string.startswith("file:"):
        return FileBackend(spec_string[len("file:") :])
    if spec_string.startswith("http:"):
        url = spec_string[len("http:") :]
        if not url.startswith("//"):
            return HttpBackend(url)
        return HttpBackend("http:" + url)
    raise ValueError(f"unknown embedding backend {spec_string!r}")
