"""Chat-completion and text-embedding providers.

Real providers speak an OpenAI-compatible HTTPS API; credentials come from
environment variables only. The mock providers are pure functions of their
constructor arguments and the request, so two processes with the same config
produce identical outputs without touching the network.
"""

from __future__ import annotations

import hashlib
import json
import os
import urllib.error
import urllib.request
from typing import TYPE_CHECKING, Protocol

from .errors import ConfigError, ProviderError, TransientProviderError

if TYPE_CHECKING:
    from .gateway import ChatRequest


class ChatProvider(Protocol):
    provider_id: str

    def complete(self, request: "ChatRequest") -> str: ...


class EmbeddingProvider(Protocol):
    provider_id: str

    def embed(self, text: str) -> list[float]: ...


# ---------------------------------------------------------------------------
# Deterministic mocks


def _digest(*parts: str) -> bytes:
    return hashlib.sha256("|".join(parts).encode("utf-8")).digest()


_VOCAB = (
    "clear", "simple", "daily", "helpful", "routine", "often", "value",
    "quick", "notes", "planning", "budget", "track", "habits", "focus",
    "family", "work", "weather", "updates", "news", "music", "saves",
    "time", "easy", "reliable", "friends", "tasks", "reminders", "ideas",
)


class MockChatProvider:
    """Deterministic offline chat provider.

    Signature-generation requests get a pseudo-sentence derived from
    sha256(seed | model_id | temperature | prompt text). Detection requests
    return "AI" when the prompt contains ``detect_marker`` (case-insensitive)
    and "HUMAN" otherwise.
    """

    def __init__(self, seed: int = 0, detect_marker: str = "as an ai assistant"):
        self.seed = seed
        self.detect_marker = detect_marker.lower()
        self.provider_id = f"mock-chat-{seed}"

    def complete(self, request: "ChatRequest") -> str:
        from .gateway import PurposeTag

        prompt = "\n".join(text for _, text in request.messages)
        if request.purpose == PurposeTag.DETECT:
            return "AI" if self.detect_marker in prompt.lower() else "HUMAN"
        digest = _digest(str(self.seed), request.model_id, repr(float(request.temperature)), prompt)
        words = [_VOCAB[b % len(_VOCAB)] for b in digest[:9]]
        return (" ".join(words)).capitalize() + "."


class MockEmbeddingProvider:
    """Deterministic offline embedding provider.

    Coordinate i of the vector for a text is u/2**64 * 2 - 1 where u is the
    big-endian integer of the first 8 bytes of sha256("{seed}|{i}|{text}").
    Equal texts map to equal vectors; distinct texts differ with overwhelming
    probability. Tests rely on this exact construction.
    """

    def __init__(self, seed: int = 0, dim: int = 16):
        if dim < 1:
            raise ConfigError(f"embedding dim must be >= 1, got {dim}")
        self.seed = seed
        self.dim = dim
        self.provider_id = f"mock-embed-{seed}-d{dim}"

    def embed(self, text: str) -> list[float]:
        values = []
        for i in range(self.dim):
            u = int.from_bytes(_digest(str(self.seed), str(i), text)[:8], "big")
            values.append(u / 2.0**64 * 2.0 - 1.0)
        return values


class StaticChatProvider:
    """Always returns the same canned text; counts calls for test assertions."""

    def __init__(self, text: str, provider_id: str = "static-chat"):
        self.text = text
        self.provider_id = provider_id
        self.calls = 0

    def complete(self, request: "ChatRequest") -> str:
        self.calls += 1
        return self.text


# ---------------------------------------------------------------------------
# OpenAI-compatible HTTPS adapters


def _post_json(url: str, payload: dict, api_key: str, timeout: float) -> dict:
    body = json.dumps(payload).encode("utf-8")
    req = urllib.request.Request(
        url,
        data=body,
        headers={
            "Content-Type": "application/json",
            "Authorization": f"Bearer {api_key}",
        },
        method="POST",
    )
    try:
        with urllib.request.urlopen(req, timeout=timeout) as resp:
            return json.loads(resp.read().decode("utf-8"))
    except urllib.error.HTTPError as exc:
        detail = exc.read().decode("utf-8", "replace")[:200]
        if exc.code == 429 or exc.code >= 500:
            raise TransientProviderError(
                f"HTTP {exc.code} from {url}: {detail}", status=exc.code
            ) from exc
        raise ProviderError(f"HTTP {exc.code} from {url}: {detail}", status=exc.code) from exc
    except urllib.error.URLError as exc:
        raise TransientProviderError(f"network error calling {url}: {exc.reason}") from exc


def _resolve_endpoint(base_url: str | None, base_url_env: str, api_key_env: str) -> tuple[str, str]:
    base = base_url or os.environ.get(base_url_env) or "https://api.openai.com/v1"
    api_key = os.environ.get(api_key_env, "")
    if not api_key:
        raise ConfigError(f"missing API key: set the {api_key_env} environment variable")
    return base.rstrip("/"), api_key


class OpenAICompatChatProvider:
    """Chat completions against an OpenAI-compatible endpoint."""

    def __init__(
        self,
        provider_id: str = "openai",
        base_url: str | None = None,
        base_url_env: str = "OPENAI_BASE_URL",
        api_key_env: str = "OPENAI_API_KEY",
        timeout: float = 60.0,
    ):
        self.provider_id = provider_id
        self.base_url = base_url
        self.base_url_env = base_url_env
        self.api_key_env = api_key_env
        self.timeout = timeout

    def complete(self, request: "ChatRequest") -> str:
        base, api_key = _resolve_endpoint(self.base_url, self.base_url_env, self.api_key_env)
        payload = {
            "model": request.model_id,
            "temperature": request.temperature,
            "messages": [{"role": role, "content": text} for role, text in request.messages],
        }
        data = _post_json(f"{base}/chat/completions", payload, api_key, self.timeout)
        try:
            return data["choices"][0]["message"]["content"]
        except (KeyError, IndexError, TypeError) as exc:
            raise ProviderError(f"malformed chat response: {json.dumps(data)[:200]}") from exc


class OpenAICompatEmbeddingProvider:
    """Text embeddings against an OpenAI-compatible endpoint."""

    def __init__(
        self,
        model: str,
        provider_id: str | None = None,
        base_url: str | None = None,
        base_url_env: str = "OPENAI_BASE_URL",
        api_key_env: str = "OPENAI_API_KEY",
        timeout: float = 60.0,
    ):
        self.model = model
        self.provider_id = provider_id or f"openai-embed-{model}"
        self.base_url = base_url
        self.base_url_env = base_url_env
        self.api_key_env = api_key_env
        self.timeout = timeout

    def embed(self, text: str) -> list[float]:
        base, api_key = _resolve_endpoint(self.base_url, self.base_url_env, self.api_key_env)
        payload = {"model": self.model, "input": text}
        data = _post_json(f"{base}/embeddings", payload, api_key, self.timeout)
        try:
            return [float(x) for x in data["data"][0]["embedding"]]
        except (KeyError, IndexError, TypeError, ValueError) as exc:
            raise ProviderError(f"malformed embedding response: {json.dumps(data)[:200]}") from exc
