"""HTTP provider speaking a messages-style chat-completion protocol."""

from __future__ import annotations

import os
import time
from typing import Sequence

import httpx

from ..errors import ConfigError, GatewayError
from .base import Message, ProviderConfig

INITIAL_BACKOFF_SECONDS = 0.5


class HttpProvider:
    """POSTs {model, messages} to a configurable endpoint.

    The auth token is read from the env var named in the config, never
    stored in config files.
    """

    def __init__(self, config: ProviderConfig, transport: httpx.BaseTransport | None = None):
        if not config.endpoint:
            raise ConfigError("http provider needs an endpoint")
        config.validate()
        self.config = config
        headers = {"content-type": "application/json"}
        if config.auth_env:
            token = os.environ.get(config.auth_env, "")
            if not token:
                raise ConfigError(f"auth env var {config.auth_env} is empty or unset")
            headers["authorization"] = f"Bearer {token}"
        self._client = httpx.Client(timeout=config.timeout, headers=headers,
                                    transport=transport)

    def complete(self, messages: Sequence[Message], hint: dict) -> str:
        payload = {
            "model": self.config.model,
            "messages": [m.to_dict() for m in messages],
        }
        delay = INITIAL_BACKOFF_SECONDS
        last_error: Exception | None = None
        for _ in range(self.config.transport_retries + 1):
            try:
                response = self._client.post(self.config.endpoint, json=payload)
                response.raise_for_status()
                body = response.json()
                return _extract_text(body)
            except (httpx.TransportError, httpx.HTTPStatusError) as exc:
                last_error = exc
                time.sleep(delay)
                delay *= 2
        raise GatewayError(f"transport failure after retries: {last_error}")

    def close(self):
        self._client.close()


def _extract_text(body: dict) -> str:
    try:
        choices = body["choices"]
        message = choices[0]["message"]
        return message["content"]
    except (KeyError, IndexError, TypeError) as exc:
        raise GatewayError(f"unexpected completion payload shape: {exc}") from exc
