"""Deterministic stand-ins for a hosted endpoint.

These transports answer in-process with reproducible content, so full
campaigns can run offline: byte-identical record stores across repeated
runs, zero network traffic, and scripted failure sequences for exercising
the retry and resume paths.
"""

from __future__ import annotations

import hashlib
import json
from typing import Callable, Mapping, Optional, Sequence

from .gateway import GatewayError, GenerationParams, TransportReply
from .prompts import PromptBundle


def _stable_index(key: str, n: int) -> int:
    digest = hashlib.sha256(key.encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "big") % n


class DeterministicMock:
    """Answers every query with a valid decision object.

    The chosen mode is a stable hash of (salt, agent id) over the subject's
    availability set, so repeated runs of the same cell reproduce the same
    store byte for byte. With a truth map the mock echoes the ground-truth
    label instead, giving a perfect-prediction fixture.
    """

    def __init__(self, salt: str = "", truth: Optional[Mapping[str, str]] = None,
                 reasoning: str = "Weighing time and cost for this trip."):
        self.salt = salt
        self.truth = truth
        self.reasoning = reasoning
        self.calls = 0

    def __call__(self, bundle: PromptBundle, params: GenerationParams) -> TransportReply:
        self.calls += 1
        if self.truth is not None:
            choice = self.truth[bundle.agent_id]
        else:
            pick = _stable_index(f"{self.salt}|{bundle.agent_id}", len(bundle.available_modes))
            choice = bundle.available_modes[pick]
        if "reasoning" in bundle.expected_output_schema:
            body = {"reasoning": self.reasoning, "choice": choice}
        else:
            body = {"choice": choice}
        return TransportReply(text=json.dumps(body), attempts=1, latency=0.0)


class ScriptedMock:
    """Replays a fixed sequence of raw responses, then repeats the last one.

    Useful for malformed-output and re-query tests where the exact raw text
    matters more than the decision.
    """

    def __init__(self, responses: Sequence[str]):
        if not responses:
            raise ValueError("scripted mock needs at least one response")
        self.responses = list(responses)
        self.calls = 0

    def __call__(self, bundle: PromptBundle, params: GenerationParams) -> TransportReply:
        text = self.responses[min(self.calls, len(self.responses) - 1)]
        self.calls += 1
        return TransportReply(text=text, attempts=1, latency=0.0)


class BudgetedTransport:
    """Wraps a transport and fails with a gateway error once the call budget
    is spent; models an endpoint dying mid-campaign for resume tests."""

    def __init__(self, inner: Callable, budget: int):
        self.inner = inner
        self.budget = budget
        self.calls = 0

    def __call__(self, bundle: PromptBundle, params: GenerationParams) -> TransportReply:
        if self.calls >= self.budget:
            raise GatewayError("mock endpoint budget exhausted", status=None, attempts=1)
        self.calls += 1
        return self.inner(bundle, params)
