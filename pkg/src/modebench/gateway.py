"""Client for locally hosted chat-completion endpoints and the results store.

The wire protocol is the de-facto local-hosting interface: HTTP POST to
{base_url}/v1/chat/completions with a messages array, temperature, and
max_tokens. Raw assistant text is parsed into a structured decision, the
choice is matched against the instance's availability set (with per-dataset
aliases), and every call ends in exactly one persisted record: either a
canonical mode or INVALID, never a silent drop.
"""

from __future__ import annotations

import json
import os
import time
from dataclasses import dataclass, asdict
from pathlib import Path
from typing import Mapping, Optional, Protocol, Sequence, Union

import requests

from .prompts import PromptBundle

INVALID = "INVALID"


class GatewayError(Exception):
    """Transport failure after retries; carries last status and attempt count."""

    def __init__(self, message: str, status: Optional[int] = None, attempts: int = 0):
        super().__init__(message)
        self.status = status
        self.attempts = attempts


class ParseError(ValueError):
    """Raw model output held no usable decision object."""


class InvalidChoiceError(ValueError):
    """Decision object named a mode outside the availability set."""


class DuplicateRecordError(Exception):
    """A record with this (agent_id, config_fingerprint) already exists."""


class PersistenceError(Exception):
    """The record store could not be written."""


@dataclass(frozen=True)
class ModelEndpoint:
    base_url: str
    model_name: str
    api_key_env: Optional[str] = None
    timeout: float = 60.0
    max_retries: int = 3
    backoff: float = 0.5  # seconds; doubled per retry

    def __post_init__(self):
        if self.max_retries < 0:
            raise ValueError("max_retries must be >= 0")
        if self.timeout <= 0:
            raise ValueError("timeout must be positive")


@dataclass(frozen=True)
class GenerationParams:
    temperature: float = 0.5
    max_tokens: int = 512
    seed: Optional[int] = None

    def __post_init__(self):
        if not 0.0 <= self.temperature <= 2.0:
            raise ValueError(f"temperature must lie in [0, 2], got {self.temperature}")


@dataclass(frozen=True)
class DecisionRecord:
    agent_id: str
    config_fingerprint: str
    predicted_mode: str
    reasoning: str
    raw_response: str
    latency: float
    attempt_count: int

    def to_json(self) -> str:
        return json.dumps(asdict(self), sort_keys=True)

    @classmethod
    def from_json(cls, line: str) -> "DecisionRecord":
        return cls(**json.loads(line))


@dataclass
class TransportReply:
    text: str
    attempts: int
    latency: float


class Transport(Protocol):
    def __call__(self, bundle: PromptBundle, params: GenerationParams) -> TransportReply: ...


class HttpTransport:
    """POSTs one chat completion per call, retrying transport failures and
    non-success statuses with exponential backoff."""

    def __init__(self, endpoint: ModelEndpoint, session: Optional[requests.Session] = None):
        self.endpoint = endpoint
        self.session = session or requests.Session()

    def __call__(self, bundle: PromptBundle, params: GenerationParams) -> TransportReply:
        url = self.endpoint.base_url.rstrip("/") + "/v1/chat/completions"
        payload = {
            "model": self.endpoint.model_name,
            "messages": bundle.to_messages(),
            "temperature": params.temperature,
            "max_tokens": params.max_tokens,
        }
        if params.seed is not None:
            payload["seed"] = params.seed
        headers = {"Content-Type": "application/json"}
        if self.endpoint.api_key_env:
            token = os.environ.get(self.endpoint.api_key_env)
            if token:
                headers["Authorization"] = f"Bearer {token}"

        attempts = 0
        last_status: Optional[int] = None
        start = time.monotonic()
        while attempts <= self.endpoint.max_retries:
            attempts += 1
            try:
                response = self.session.post(
                    url, json=payload, headers=headers, timeout=self.endpoint.timeout
                )
                last_status = response.status_code
                if response.ok:
                    text = response.json()["choices"][0]["message"]["content"]
                    return TransportReply(
                        text=text, attempts=attempts, latency=time.monotonic() - start
                    )
            except requests.RequestException:
                last_status = None
            except (ValueError, LookupError, TypeError):
                pass  # 200 with a malformed body: retry like any transport fault
            if attempts <= self.endpoint.max_retries:
                time.sleep(self.endpoint.backoff * (2 ** (attempts - 1)))
        raise GatewayError(
            f"{self.endpoint.model_name}: no successful completion after {attempts} attempts"
            + (f" (last status {last_status})" if last_status is not None else ""),
            status=last_status,
            attempts=attempts,
        )


def query_model(endpoint: ModelEndpoint, bundle: PromptBundle,
                params: GenerationParams) -> str:
    """One chat completion against the endpoint; returns the assistant text."""
    return HttpTransport(endpoint)(bundle, params).text


def parse_response(raw: str) -> dict:
    """Extract the first parseable top-level JSON object from raw model text.

    Tolerates code fences and leading chain-of-thought prose by scanning for
    balanced object literals and attempting to parse each candidate. The
    object must carry a "choice" field; "reasoning" defaults to empty.
    """
    for start, end in _balanced_objects(raw):
        try:
            obj = json.loads(raw[start:end])
        except json.JSONDecodeError:
            continue
        if not isinstance(obj, dict):
            continue
        if "choice" not in obj:
            raise ParseError("decision object lacks a 'choice' field")
        reasoning = obj.get("reasoning", "")
        return {"choice": obj["choice"], "reasoning": reasoning if reasoning else ""}
    raise ParseError("no parseable decision object in model output")


def _balanced_objects(text: str):
    """Yield (start, end) spans of balanced {...} regions, outermost first,
    respecting JSON string quoting."""
    i = 0
    n = len(text)
    while i < n:
        if text[i] != "{":
            i += 1
            continue
        depth = 0
        in_string = False
        escaped = False
        for j in range(i, n):
            c = text[j]
            if in_string:
                if escaped:
                    escaped = False
                elif c == "\\":
                    escaped = True
                elif c == '"':
                    in_string = False
                continue
            if c == '"':
                in_string = True
            elif c == "{":
                depth += 1
            elif c == "}":
                depth -= 1
                if depth == 0:
                    yield i, j + 1
                    break
        i += 1


def extract_choice(parsed: Mapping, available_modes: Sequence[str],
                   aliases: Optional[Mapping[str, str]] = None) -> str:
    """Canonicalize the parsed choice against the availability set.

    Matching is case-insensitive on trimmed text; configured aliases are
    applied first. Anything else raises rather than being coerced.
    """
    raw = str(parsed["choice"]).strip()
    token = raw.lower()
    if aliases:
        token = aliases.get(token, token)
    for mode in available_modes:
        if token == mode.lower():
            return mode
    raise InvalidChoiceError(f"choice {raw!r} matches no available mode {list(available_modes)}")


def run_single(transport: Transport, bundle: PromptBundle, params: GenerationParams,
               config_fingerprint: str,
               aliases: Optional[Mapping[str, str]] = None) -> DecisionRecord:
    """Query, parse, and extract for one agent, ending in exactly one record.

    A parse failure triggers one re-query; a second parse failure or an
    out-of-set choice records INVALID with the raw response retained.
    Transport errors propagate (the cell stays resumable).
    """
    attempts = 0
    latency = 0.0
    raw = ""
    parsed = None
    for _ in range(2):
        reply = transport(bundle, params)
        attempts += reply.attempts
        latency += reply.latency
        raw = reply.text
        try:
            parsed = parse_response(raw)
            break
        except ParseError:
            parsed = None
    predicted = INVALID
    reasoning = ""
    if parsed is not None:
        reasoning = str(parsed.get("reasoning", ""))
        try:
            predicted = extract_choice(parsed, bundle.available_modes, aliases)
        except InvalidChoiceError:
            predicted = INVALID
    return DecisionRecord(
        agent_id=bundle.agent_id,
        config_fingerprint=config_fingerprint,
        predicted_mode=predicted,
        reasoning=reasoning,
        raw_response=raw,
        latency=latency,
        attempt_count=attempts,
    )


class RecordStore:
    """Append-only JSONL store for one experiment cell.

    One record per line; duplicates on (agent_id, config_fingerprint) are
    rejected; writes are flushed before acknowledgement so a resumed run
    sees everything that was acknowledged.
    """

    def __init__(self, path: Union[str, Path]):
        self.path = Path(path)
        self._keys: set[tuple[str, str]] = set()
        if self.path.exists():
            for record in self.load():
                self._keys.add((record.agent_id, record.config_fingerprint))

    def __len__(self) -> int:
        return len(self._keys)

    def agent_ids(self, config_fingerprint: str) -> set[str]:
        return {a for a, f in self._keys if f == config_fingerprint}

    def append(self, record: DecisionRecord) -> None:
        key = (record.agent_id, record.config_fingerprint)
        if key in self._keys:
            raise DuplicateRecordError(f"record for {key} already persisted")
        try:
            with self.path.open("a", encoding="utf-8") as handle:
                handle.write(record.to_json() + "\n")
                handle.flush()
        except OSError as exc:
            raise PersistenceError(f"cannot append to {self.path}: {exc}") from exc
        self._keys.add(key)

    def load(self) -> list[DecisionRecord]:
        if not self.path.exists():
            return []
        with self.path.open(encoding="utf-8") as handle:
            return [DecisionRecord.from_json(line) for line in handle if line.strip()]
