"""Provider-agnostic chat completion client.

Every provider speaks the same OpenAI-compatible wire protocol, so the
client is one code path and providers differ only by configuration:
base URL, model id, and the environment variable holding the key.
Adding a provider means adding a JSON entry, nothing else.
"""

from __future__ import annotations

import json
import os
import time
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Sequence

import requests

ROLES = ("system", "user", "assistant", "tool")

# Statuses worth retrying; anything else in 4xx is a hard failure.
_TRANSIENT_STATUSES = {429, 500, 502, 503, 504}


class GatewayError(RuntimeError):
    pass


class ConfigurationError(GatewayError):
    """The request could not even be attempted (missing key, bad config)."""


class TransportError(GatewayError):
    """The provider could not be reached or kept failing after retries."""


class ProtocolError(GatewayError):
    """The provider answered, but not in the expected shape."""


@dataclass(frozen=True)
class ChatMessage:
    role: str
    content: str

    def __post_init__(self) -> None:
        if self.role not in ROLES:
            raise ValueError(f"role must be one of {ROLES}, got {self.role!r}")

    def to_doc(self) -> dict[str, str]:
        return {"role": self.role, "content": self.content}


@dataclass(frozen=True)
class ProviderConfig:
    name: str
    base_url: str
    model: str
    api_key_env: str | None
    timeout: float = 30.0
    max_retries: int = 2
    backoff_base: float = 0.5

    def with_base_url(self, base_url: str) -> "ProviderConfig":
        from dataclasses import replace

        return replace(self, base_url=base_url)


def load_providers(path: str | Path | None = None) -> dict[str, ProviderConfig]:
    """Provider registry from the bundled config file, or a custom one."""
    if path is not None:
        raw = Path(path).read_text(encoding="utf-8")
    else:
        raw = (resources.files("studycompanion") / "data" / "providers.json").read_text(
            encoding="utf-8"
        )
    doc = json.loads(raw)
    providers = {}
    for name, entry in doc.items():
        providers[name] = ProviderConfig(
            name=name,
            base_url=entry["base_url"].rstrip("/"),
            model=entry["model"],
            api_key_env=entry.get("api_key_env"),
            timeout=float(entry.get("timeout", 30.0)),
            max_retries=int(entry.get("max_retries", 2)),
            backoff_base=float(entry.get("backoff_base", 0.5)),
        )
    return providers


def chat_complete(
    config: ProviderConfig,
    messages: Sequence[ChatMessage],
    sleep=time.sleep,
) -> ChatMessage:
    """One chat completion call with retries on transient failures.

    ``max_retries`` counts the retries after the first attempt, so a
    config with max_retries=2 makes at most three requests. Backoff is
    exponential: backoff_base * 2^attempt between attempts.
    """
    if not messages:
        raise ValueError("messages must be nonempty")
    headers = {"Content-Type": "application/json"}
    if config.api_key_env is not None:
        key = os.environ.get(config.api_key_env, "")
        if not key:
            raise ConfigurationError(
                f"provider {config.name!r} needs an API key in ${config.api_key_env}"
            )
        headers["Authorization"] = f"Bearer {key}"
    body = {
        "model": config.model,
        "messages": [message.to_doc() for message in messages],
    }
    url = f"{config.base_url}/chat/completions"

    last_error: Exception | None = None
    for attempt in range(config.max_retries + 1):
        if attempt:
            sleep(config.backoff_base * 2 ** (attempt - 1))
        try:
            response = requests.post(url, json=body, headers=headers, timeout=config.timeout)
        except requests.RequestException as err:
            last_error = err
            continue
        if response.status_code in _TRANSIENT_STATUSES:
            last_error = TransportError(
                f"provider {config.name!r} returned {response.status_code}"
            )
            continue
        if response.status_code != 200:
            raise TransportError(
                f"provider {config.name!r} returned {response.status_code}: "
                f"{response.text[:200]}"
            )
        return _parse_reply(config, response)

    raise TransportError(
        f"provider {config.name!r} unreachable after {config.max_retries + 1} attempts:"
        f" {last_error}"
    )


def _parse_reply(config: ProviderConfig, response) -> ChatMessage:
    try:
        doc = response.json()
    except ValueError as err:
        raise ProtocolError(f"provider {config.name!r} sent non-JSON body") from err
    try:
        message = doc["choices"][0]["message"]
        return ChatMessage(role=message["role"], content=message["content"])
    except (KeyError, IndexError, TypeError) as err:
        raise ProtocolError(
            f"provider {config.name!r} response missing choices[0].message"
        ) from err
