"""Chat backends: a live OpenAI-compatible endpoint, recorded replies, and a no-op echo.

All three take a :class:`ChatRequest` and return the assistant's text.
"""
from __future__ import annotations

import base64
import json
import os
import re
import urllib.error
import urllib.request
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Protocol

from .errors import BackendUnreachable, ReplayExhausted


@dataclass
class ChatRequest:
    model: str
    messages: list[dict[str, Any]]
    temperature: float = 0.8
    max_tokens: int = 4096
    # harness-side context (operation kind, parent code); never sent over the wire
    meta: dict[str, Any] = field(default_factory=dict)

    def payload(self) -> dict[str, Any]:
        return {
            "model": self.model,
            "messages": self.messages,
            "temperature": self.temperature,
            "max_tokens": self.max_tokens,
        }

    def image_parts(self) -> list[dict]:
        return [p for m in self.messages for p in m["content"] if p.get("type") == "image_url"]


def text_part(text: str) -> dict:
    return {"type": "text", "text": text}


def image_part(png: bytes) -> dict:
    return {"type": "image_url", "image_url": {"url": "data:image/png;base64," + base64.b64encode(png).decode("ascii")}}


class Backend(Protocol):
    def complete(self, request: ChatRequest) -> str: ...


class LiveBackend:
    """POST to ``{endpoint}`` (a chat-completions URL) with a bearer key from ``api_key_env``."""

    def __init__(self, endpoint: str, api_key_env: str = "OPENAI_API_KEY", timeout: float = 300.0):
        if not endpoint:
            raise ValueError("live backend needs an endpoint URL")
        self.endpoint = endpoint
        self.api_key_env = api_key_env
        self.timeout = timeout

    def complete(self, request: ChatRequest) -> str:
        headers = {"Content-Type": "application/json"}
        key = os.environ.get(self.api_key_env)
        if key:
            headers["Authorization"] = f"Bearer {key}"
        body = json.dumps(request.payload()).encode("utf-8")
        req = urllib.request.Request(self.endpoint, data=body, headers=headers, method="POST")
        try:
            with urllib.request.urlopen(req, timeout=self.timeout) as resp:
                doc = json.loads(resp.read().decode("utf-8"))
        except (urllib.error.URLError, OSError, ValueError) as exc:
            raise BackendUnreachable(f"{self.endpoint}: {exc}") from exc
        try:
            content = doc["choices"][0]["message"]["content"]
        except (KeyError, IndexError, TypeError):
            raise BackendUnreachable(f"unexpected response shape from {self.endpoint}") from None
        if isinstance(content, list):  # some servers return content parts
            content = "".join(p.get("text", "") for p in content if isinstance(p, dict))
        return content or ""


class ReplayBackend:
    """Serves ``NNNN.txt`` files from a directory in numeric order, one per call."""

    def __init__(self, directory: str | os.PathLike, cursor: int = 0):
        self.directory = Path(directory)
        if not self.directory.is_dir():
            raise FileNotFoundError(f"replay directory {self.directory} does not exist")
        self.files = sorted(
            (p for p in self.directory.iterdir() if re.fullmatch(r"\d+\.txt", p.name)),
            key=lambda p: int(p.stem),
        )
        self.cursor = cursor

    def complete(self, request: ChatRequest) -> str:
        if self.cursor >= len(self.files):
            raise ReplayExhausted(f"all {len(self.files)} recorded responses used")
        path = self.files[self.cursor]
        self.cursor += 1
        return path.read_text(encoding="utf-8")


class NullBackend:
    """Returns the first parent's code unchanged, fenced like a model reply."""

    def complete(self, request: ChatRequest) -> str:
        return "```\n" + request.meta["parent_codes"][0] + "\n```\n"
