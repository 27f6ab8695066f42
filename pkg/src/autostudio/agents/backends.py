"""Chat backends: the HTTP client for real models and the scripted mock.

The mock answers from a transcript keyed by (template, normalized input
hash); unmatched inputs fall through to the deterministic synthesizer, so
full sessions replay hermetically without any authored fixtures.
"""

from __future__ import annotations

import hashlib
import json
import re

import requests

from ..errors import BackendUnavailable
from . import synth

TRANSCRIPT_VERSION = 1

_HEADER_LINES = {
    "You are the subject manager agent.": "manager",
    "You are the layout generator agent.": "layout",
    "You are the supervisor agent.": "supervisor",
}


def detect_template(system: str) -> str:
    first = system.strip().splitlines()[0].strip() if system.strip() else ""
    try:
        return _HEADER_LINES[first]
    except KeyError:
        raise BackendUnavailable(f"unrecognized system prompt header: {first!r}") from None


def normalize_input(text: str) -> str:
    lines = [re.sub(r"\s+", " ", ln).strip() for ln in text.splitlines()]
    return "\n".join(ln for ln in lines if ln)


def transcript_key(template: str, user_text: str) -> str:
    digest = hashlib.sha256(normalize_input(user_text).encode("utf-8")).hexdigest()
    return f"{template}:{digest}"


class ChatBackend:
    """Contract: complete(system, user, seed) -> response text."""

    kind = "abstract"

    def complete(self, system: str, user: str, seed: int) -> str:
        raise NotImplementedError


class ScriptedMockBackend(ChatBackend):
    """Transcript-driven, hermetic backend.

    Identical (template, input, seed) calls always yield identical text:
    recorded responses win, the synthesizer covers the rest.
    """

    kind = "scripted-mock"

    def __init__(self, transcript: dict[str, str] | None = None):
        self.transcript = dict(transcript or {})
        self.calls: list[tuple[str, str]] = []

    @classmethod
    def from_file(cls, path: str) -> "ScriptedMockBackend":
        with open(path, encoding="utf-8") as fh:
            doc = json.load(fh)
        if doc.get("version") != TRANSCRIPT_VERSION:
            raise BackendUnavailable(
                f"transcript version {doc.get('version')!r} unsupported"
            )
        transcript = {
            f"{e['template']}:{e['input_sha256']}": e["response"] for e in doc["entries"]
        }
        return cls(transcript)

    @staticmethod
    def record_entry(template: str, user_text: str, response: str) -> dict:
        return {
            "template": template,
            "input_sha256": transcript_key(template, user_text).split(":", 1)[1],
            "response": response,
        }

    def complete(self, system: str, user: str, seed: int) -> str:
        template = detect_template(system)
        self.calls.append((template, user))
        key = transcript_key(template, user)
        if key in self.transcript:
            return self.transcript[key]
        return synth.synthesize(template, user, seed)


class HttpChatBackend(ChatBackend):
    """JSON-over-HTTP chat endpoint: {model, system, user, temperature, seed} -> {text}."""

    kind = "http"

    def __init__(
        self,
        endpoint: str,
        model: str = "gpt-4o",
        api_key: str | None = None,
        temperature: float = 0.0,
        timeout: float = 120.0,
    ):
        self.endpoint = endpoint.rstrip("/")
        self.model = model
        self.api_key = api_key
        self.temperature = temperature
        self.timeout = timeout

    def complete(self, system: str, user: str, seed: int) -> str:
        payload = {
            "model": self.model,
            "system": system,
            "user": user,
            "temperature": self.temperature,
            "seed": seed,
        }
        headers = {}
        if self.api_key:
            headers["Authorization"] = f"Bearer {self.api_key}"
        try:
            resp = requests.post(
                self.endpoint, json=payload, timeout=self.timeout, headers=headers
            )
        except requests.RequestException as exc:
            raise BackendUnavailable(f"chat backend unreachable: {exc}") from exc
        if resp.status_code != 200:
            raise BackendUnavailable(
                f"chat backend returned {resp.status_code}: {resp.text[:300]}"
            )
        try:
            return resp.json()["text"]
        except (ValueError, KeyError) as exc:
            raise BackendUnavailable(f"chat backend returned malformed body: {exc}") from exc


def make_backend(kind: str, **kwargs) -> ChatBackend:
    if kind in ("mock", "scripted-mock"):
        transcript_path = kwargs.get("transcript_path")
        if transcript_path:
            return ScriptedMockBackend.from_file(transcript_path)
        return ScriptedMockBackend()
    if kind == "http":
        return HttpChatBackend(
            endpoint=kwargs["endpoint"],
            model=kwargs.get("model", "gpt-4o"),
            api_key=kwargs.get("api_key"),
            temperature=kwargs.get("temperature", 0.0),
        )
    raise ValueError(f"unknown backend kind {kind!r}")
