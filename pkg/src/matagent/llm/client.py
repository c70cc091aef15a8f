"""Requests, responses and the chat-completions wire client."""

from __future__ import annotations

import logging
import os
from dataclasses import dataclass, field
from typing import Optional, Protocol

import httpx
import yaml

from matagent.errors import LlmTimeout, ProviderError

log = logging.getLogger(__name__)

ENV_PREFIX = "MATAGENT_LLM_"
DEFAULT_TIMEOUT = 60.0


@dataclass(frozen=True)
class LlmRequest:
    rendered_prompt: str
    template_id: str = ""
    temperature: float = 0.0
    max_answer_length: int = 2048
    provider_model: str = ""
    # earlier turns of the same exchange, e.g. a format-correction retry
    history: tuple = ()
    # per-entry namespace used by scripted clients
    scope: str = ""


@dataclass(frozen=True)
class LlmResponse:
    text: str
    provider_meta: dict = field(default_factory=dict)


class LlmClient(Protocol):
    def complete(self, req: LlmRequest) -> LlmResponse: ...

    def for_run(self, scope: str) -> "LlmClient": ...


@dataclass(frozen=True)
class ProviderConfig:
    endpoint: str = ""
    model: str = ""
    api_key: str = ""
    timeout: float = DEFAULT_TIMEOUT

    @classmethod
    def resolve(cls, flags: Optional[dict] = None, env=None, config_file=None) -> "ProviderConfig":
        """Merge settings with precedence flag > environment > config file."""
        env = os.environ if env is None else env
        merged = {}
        if config_file is not None and os.path.exists(config_file):
            with open(config_file) as fh:
                data = yaml.safe_load(fh) or {}
            merged.update({k: v for k, v in (data.get("llm", data) or {}).items() if v is not None})
        for key in ("endpoint", "model", "api_key", "timeout"):
            value = env.get(ENV_PREFIX + key.upper())
            if value:
                merged[key] = value
        for key, value in (flags or {}).items():
            if value is not None:
                merged[key] = value
        unknown = set(merged) - {"endpoint", "model", "api_key", "timeout"}
        if unknown:
            raise ProviderError(f"unknown provider settings {sorted(unknown)}")
        if "timeout" in merged:
            merged["timeout"] = float(merged["timeout"])
        return cls(**merged)

    def check(self) -> "ProviderConfig":
        if not self.endpoint or not self.model:
            raise ProviderError(
                f"live LLM needs an endpoint and a model (set {ENV_PREFIX}ENDPOINT and {ENV_PREFIX}MODEL)")
        return self


def _retryable_status(code: int) -> bool:
    return code == 429 or code >= 500


class ChatCompletionsClient:
    """Client for OpenAI-compatible ``POST {endpoint}/chat/completions``.

    One retry on a transport error, a timeout, HTTP 429 or a 5xx reply.
    """

    def __init__(self, config: ProviderConfig, transport: Optional[httpx.BaseTransport] = None):
        self.config = config.check()
        self._transport = transport

    def for_run(self, scope: str) -> "ChatCompletionsClient":
        return self

    def _payload(self, req: LlmRequest) -> dict:
        messages = []
        for prompt, answer in req.history:
            messages += [{"role": "user", "content": prompt}, {"role": "assistant", "content": answer}]
        messages.append({"role": "user", "content": req.rendered_prompt})
        return {
            "model": req.provider_model or self.config.model,
            "messages": messages,
            "temperature": req.temperature,
            "max_tokens": req.max_answer_length,
        }

    def complete(self, req: LlmRequest) -> LlmResponse:
        url = self.config.endpoint.rstrip("/") + "/chat/completions"
        headers = {"Content-Type": "application/json"}
        if self.config.api_key:
            headers["Authorization"] = f"Bearer {self.config.api_key}"
        last_error = None
        with httpx.Client(timeout=self.config.timeout, transport=self._transport) as http:
            for attempt in (1, 2):
                try:
                    resp = http.post(url, json=self._payload(req), headers=headers)
                except httpx.TimeoutException as exc:
                    last_error = LlmTimeout(f"request timed out after {self.config.timeout} s: {exc}")
                    log.warning("LLM attempt %d timed out", attempt)
                    continue
                except httpx.TransportError as exc:
                    last_error = ProviderError(f"transport error: {exc}")
                    log.warning("LLM attempt %d failed: %s", attempt, exc)
                    continue
                if resp.status_code != 200:
                    last_error = ProviderError(f"HTTP {resp.status_code}: {resp.text[:200]}")
                    if _retryable_status(resp.status_code):
                        continue
                    raise last_error
                return self._parse(resp, attempt)
        raise last_error

    @staticmethod
    def _parse(resp, attempt) -> LlmResponse:
        try:
            data = resp.json()
            text = data["choices"][0]["message"]["content"]
        except (ValueError, KeyError, IndexError, TypeError) as exc:
            raise ProviderError(f"malformed provider reply: {exc}") from None
        if not isinstance(text, str):
            raise ProviderError("provider reply has no text content")
        meta = {"attempts": attempt}
        for key in ("id", "model", "usage"):
            if key in data:
                meta[key] = data[key]
        return LlmResponse(text, meta)
