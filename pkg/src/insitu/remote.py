"""Network-backed provider clients (OpenAI-, Anthropic-, Gemini-, Tavily-compatible).

These are thin HTTP wrappers; every failure surfaces as ProviderUnavailable so
callers can apply their retry/reject policy. Offline runs use the mocks in
providers.py instead.
"""

from __future__ import annotations

import os

import numpy as np
import requests

from .errors import ProviderUnavailable, SchemaError
from .providers import (
    GenerationRequest,
    ProviderConfig,
    ProviderMetrics,
    SearchResult,
)


def _api_key(cfg: ProviderConfig) -> str:
    key = os.environ.get(cfg.api_key_env, "") if cfg.api_key_env else ""
    if not key:
        raise ProviderUnavailable(f"API key env var {cfg.api_key_env!r} is not set")
    return key


def _post(url: str, headers: dict, payload: dict) -> dict:
    try:
        resp = requests.post(url, headers=headers, json=payload, timeout=120)
        resp.raise_for_status()
        return resp.json()
    except requests.RequestException as e:
        raise ProviderUnavailable(f"request to {url} failed: {e}") from e


class RemoteEmbeddingClient:
    """OpenAI-compatible /embeddings endpoint."""

    def __init__(self, cfg: ProviderConfig, metrics: ProviderMetrics):
        self.cfg = cfg
        self.metrics = metrics

    def embed(self, text: str) -> np.ndarray:
        if not text.strip():
            raise SchemaError("cannot embed blank text")
        self.metrics.count_embed()
        key = _api_key(self.cfg)
        data = _post(
            f"{self.cfg.endpoint.rstrip('/')}/embeddings",
            {"Authorization": f"Bearer {key}"},
            {"model": self.cfg.model, "input": text},
        )
        try:
            vec = np.asarray(data["data"][0]["embedding"], dtype=np.float64)
        except (KeyError, IndexError, TypeError) as e:
            raise ProviderUnavailable(f"unexpected embeddings response: {e}") from e
        norm = np.linalg.norm(vec)
        if norm == 0:
            raise ProviderUnavailable("embedding provider returned a zero vector")
        return vec / norm


class RemoteGenerationClient:
    def __init__(self, cfg: ProviderConfig, metrics: ProviderMetrics):
        self.cfg = cfg
        self.metrics = metrics

    def generate(self, req: GenerationRequest) -> str:
        self.metrics.count_generate()
        key = _api_key(self.cfg)
        prompt = req.render()
        base = self.cfg.endpoint.rstrip("/")
        if self.cfg.kind == "anthropic-compatible":
            data = _post(
                f"{base}/v1/messages",
                {"x-api-key": key, "anthropic-version": "2023-06-01"},
                {
                    "model": self.cfg.model,
                    "max_tokens": 8192,
                    "messages": [{"role": "user", "content": prompt}],
                },
            )
            try:
                return data["content"][0]["text"]
            except (KeyError, IndexError, TypeError) as e:
                raise ProviderUnavailable(f"unexpected messages response: {e}") from e
        if self.cfg.kind == "gemini-compatible":
            data = _post(
                f"{base}/v1beta/models/{self.cfg.model}:generateContent?key={key}",
                {},
                {"contents": [{"parts": [{"text": prompt}]}]},
            )
            try:
                return data["candidates"][0]["content"]["parts"][0]["text"]
            except (KeyError, IndexError, TypeError) as e:
                raise ProviderUnavailable(f"unexpected generateContent response: {e}") from e
        data = _post(
            f"{base}/chat/completions",
            {"Authorization": f"Bearer {key}"},
            {
                "model": self.cfg.model,
                "messages": [{"role": "user", "content": prompt}],
            },
        )
        try:
            return data["choices"][0]["message"]["content"]
        except (KeyError, IndexError, TypeError) as e:
            raise ProviderUnavailable(f"unexpected chat response: {e}") from e


class RemoteSearchClient:
    """Tavily-compatible /search endpoint."""

    def __init__(self, cfg: ProviderConfig, metrics: ProviderMetrics):
        self.cfg = cfg
        self.metrics = metrics

    def search(self, query: str, max_results: int) -> list[SearchResult]:
        if not query.strip():
            raise SchemaError("search query must be non-empty")
        if not 1 <= max_results <= 20:
            raise SchemaError("max_results must be in [1, 20]")
        self.metrics.count_search()
        key = _api_key(self.cfg)
        data = _post(
            f"{self.cfg.endpoint.rstrip('/')}/search",
            {"Authorization": f"Bearer {key}"},
            {"query": query, "max_results": max_results},
        )
        results = []
        for item in data.get("results", [])[:max_results]:
            results.append(
                SearchResult(
                    url=item.get("url", ""),
                    title=item.get("title", ""),
                    snippet=item.get("content", ""),
                )
            )
        return results
