"""Completion backends and the persistent response cache.

The cache is the reproducibility boundary: completions are keyed by a
digest of (prompt text, model id, generation parameters), stored append-only
as JSONL, and replayed on any later run with the same key. Sampling
parameters default to temperature 0.7, max_tokens 256, top_p 1, both
penalties 0.
"""

import hashlib
import json
import os
import threading
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path

import requests

from .errors import AuthError, BackendError, BackendUnavailable, RateLimited
from .prompting import COMPLEX_MARKER, SIMPLE_MARKER

API_KEY_ENV = "MBICL_API_KEY"
BASE_URL_ENV = "MBICL_BASE_URL"


@dataclass(frozen=True)
class GenerationParams:
    temperature: float = 0.7
    max_tokens: int = 256
    top_p: float = 1.0
    frequency_penalty: float = 0.0
    presence_penalty: float = 0.0
    model_id: str = "mock"

    def __post_init__(self):
        if self.temperature < 0:
            raise ValueError("temperature must be >= 0")
        if not 0 < self.top_p <= 1:
            raise ValueError("top_p must be in (0, 1]")
        if self.max_tokens < 1:
            raise ValueError("max_tokens must be >= 1")


def request_digest(prompt_text, params):
    """Cache key: hash of the prompt text, model id, and sampling params."""
    payload = json.dumps(
        {"prompt": prompt_text, "params": asdict(params)},
        sort_keys=True,
        ensure_ascii=False,
    )
    return hashlib.sha256(payload.encode("utf-8")).hexdigest()


@dataclass(frozen=True)
class GenerationRecord:
    digest: str
    prompt_text: str
    completion_text: str
    model_id: str
    params: GenerationParams
    backend: str
    timestamp: float = field(compare=False, default=0.0)


def _record_to_json(record):
    obj = asdict(record)
    obj["params"] = asdict(record.params)
    return json.dumps(obj, sort_keys=True, ensure_ascii=False)


def _record_from_json(obj):
    params = GenerationParams(**obj["params"])
    return GenerationRecord(
        digest=obj["digest"],
        prompt_text=obj["prompt_text"],
        completion_text=obj["completion_text"],
        model_id=obj["model_id"],
        params=params,
        backend=obj["backend"],
        timestamp=obj.get("timestamp", 0.0),
    )


def _extract_query(prompt_text):
    """The complex sentence of the final (query) block of a rendered prompt."""
    start = prompt_text.rfind(COMPLEX_MARKER)
    if start == -1:
        return prompt_text.strip()
    body = prompt_text[start + len(COMPLEX_MARKER) :]
    end = body.find(SIMPLE_MARKER)
    if end != -1:
        body = body[:end]
    return body.strip()


class MockEchoBackend:
    """Returns the query complex sentence verbatim."""

    name = "mock-echo"

    def __init__(self):
        self.invocations = 0

    def generate(self, prompt_text, params):
        self.invocations += 1
        return _extract_query(prompt_text)


class MockFirstReferenceBackend:
    """Returns the first reference for the query sentence, from a lookup the
    harness supplies (complex raw text -> reference raw text)."""

    name = "mock-first-reference"

    def __init__(self, reference_lookup):
        self.reference_lookup = dict(reference_lookup)
        self.invocations = 0

    def generate(self, prompt_text, params):
        self.invocations += 1
        query = _extract_query(prompt_text)
        try:
            return self.reference_lookup[query]
        except KeyError as exc:
            raise BackendUnavailable(f"no reference for query {query!r}") from exc

    @classmethod
    def for_corpus(cls, corpus):
        return cls({inst.source.raw: inst.references[0].raw for inst in corpus})


class HttpBackend:
    """OpenAI-compatible client.

    Chat completions by default; ``legacy_completions=True`` switches to the
    plain completions endpoint. Retries timeouts, 429s, and 5xx responses
    with exponential backoff (3 attempts, starting at 1 s).
    """

    name = "http"

    def __init__(self, base_url=None, api_key=None, legacy_completions=False,
                 max_attempts=3, backoff=1.0, timeout=120):
        self.base_url = (base_url or os.environ.get(BASE_URL_ENV, "")).rstrip("/")
        self.api_key = api_key if api_key is not None else os.environ.get(API_KEY_ENV)
        if not self.base_url:
            raise BackendUnavailable(f"no base URL configured ({BASE_URL_ENV})")
        if not self.api_key:
            raise AuthError(f"no API key configured ({API_KEY_ENV})")
        self.legacy_completions = legacy_completions
        self.max_attempts = max_attempts
        self.backoff = backoff
        self.timeout = timeout
        self.invocations = 0

    def _request(self, prompt_text, params):
        headers = {"Authorization": f"Bearer {self.api_key}"}
        body = {
            "model": params.model_id,
            "temperature": params.temperature,
            "max_tokens": params.max_tokens,
            "top_p": params.top_p,
            "frequency_penalty": params.frequency_penalty,
            "presence_penalty": params.presence_penalty,
        }
        if self.legacy_completions:
            url = f"{self.base_url}/v1/completions"
            body["prompt"] = prompt_text
        else:
            url = f"{self.base_url}/v1/chat/completions"
            body["messages"] = [{"role": "user", "content": prompt_text}]
        return requests.post(url, json=body, headers=headers, timeout=self.timeout)

    def generate(self, prompt_text, params):
        self.invocations += 1
        last_error = None
        for attempt in range(self.max_attempts):
            if attempt:
                time.sleep(self.backoff * 2 ** (attempt - 1))
            try:
                resp = self._request(prompt_text, params)
            except requests.RequestException as exc:
                last_error = BackendUnavailable(str(exc))
                continue
            if resp.status_code in (401, 403):
                raise AuthError(f"HTTP {resp.status_code}: {resp.text[:200]}")
            if resp.status_code == 429:
                last_error = RateLimited(resp.text[:200])
                continue
            if resp.status_code >= 500:
                last_error = BackendUnavailable(f"HTTP {resp.status_code}")
                continue
            try:
                payload = resp.json()
                if self.legacy_completions:
                    return payload["choices"][0]["text"]
                return payload["choices"][0]["message"]["content"]
            except (ValueError, KeyError, IndexError) as exc:
                raise BackendUnavailable(f"malformed response: {exc}") from exc
        raise last_error


class ResponseCache:
    """Append-only JSONL cache of generation records, keyed by digest.

    Each line must parse and its stored digest must match a recomputation
    from the stored fields; a damaged tail (e.g. a crash mid-append) is
    moved to ``<path>.quarantine`` instead of being silently reused.
    """

    def __init__(self, path):
        self.path = Path(path)
        self._records = {}
        self._lock = threading.Lock()
        self._load()

    def _load(self):
        if not self.path.exists():
            return
        raw = self.path.read_text(encoding="utf-8")
        good_chars = 0
        bad_tail = None
        offset = 0
        for line in raw.splitlines(keepends=True):
            stripped = line.strip()
            if stripped:
                try:
                    obj = json.loads(stripped)
                    record = _record_from_json(obj)
                    expected = request_digest(record.prompt_text, record.params)
                    if record.digest != expected:
                        raise ValueError("digest mismatch")
                except (ValueError, KeyError, TypeError):
                    bad_tail = raw[offset:]
                    break
                self._records[record.digest] = record
            offset += len(line)
            good_chars = offset
        if bad_tail is not None:
            quarantine = self.path.with_name(self.path.name + ".quarantine")
            with quarantine.open("a", encoding="utf-8") as fh:
                fh.write(bad_tail)
            self.path.write_text(raw[:good_chars], encoding="utf-8")

    def get(self, digest):
        with self._lock:
            return self._records.get(digest)

    def put(self, record):
        with self._lock:
            if record.digest in self._records:
                return
            self._records[record.digest] = record
            with self.path.open("a", encoding="utf-8") as fh:
                fh.write(_record_to_json(record) + "\n")

    def __len__(self):
        return len(self._records)


class CompletionClient:
    """Ties a backend to the cache; the unit every caller goes through."""

    def __init__(self, backend, cache=None):
        self.backend = backend
        self.cache = cache

    def complete(self, prompt, params):
        digest = request_digest(prompt.text, params)
        if self.cache is not None:
            hit = self.cache.get(digest)
            if hit is not None:
                return hit
        completion = self.backend.generate(prompt.text, params)
        record = GenerationRecord(
            digest=digest,
            prompt_text=prompt.text,
            completion_text=completion,
            model_id=params.model_id,
            params=params,
            backend=self.backend.name,
            timestamp=time.time(),
        )
        if self.cache is not None:
            self.cache.put(record)
        return record

    def batch_complete(self, prompts, params, max_in_flight=4):
        """Complete all prompts, results in input order.

        Failures are isolated: each slot holds either a GenerationRecord or
        the exception that killed it.
        """
        if max_in_flight < 1:
            raise ValueError("max_in_flight must be >= 1")

        def one(prompt):
            try:
                return self.complete(prompt, params)
            except BackendError as exc:
                return exc

        with ThreadPoolExecutor(max_workers=max_in_flight) as pool:
            return list(pool.map(one, prompts))


def make_backend(name, test_corpus=None, **kwargs):
    """Backend factory for the CLI: http, mock-echo, or mock-first-reference."""
    if name == "mock-echo":
        return MockEchoBackend()
    if name == "mock-first-reference":
        if test_corpus is None:
            raise BackendUnavailable("mock-first-reference needs a test corpus")
        return MockFirstReferenceBackend.for_corpus(test_corpus)
    if name == "http":
        return HttpBackend(**kwargs)
    raise ValueError(f"unknown completion backend {name!r}")
