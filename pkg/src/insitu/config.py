"""Engine configuration: provider wiring, data directory, pipeline knobs.

Loaded from TOML or JSON (by file extension). Environment variables:
INSITU_CONFIG points at the file, INSITU_DATA_DIR overrides the data directory.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field
from pathlib import Path

try:
    import tomllib  # py311+
except ModuleNotFoundError:  # pragma: no cover - py310 path
    import tomli as tomllib

from .errors import SchemaError
from .providers import ProviderConfig

CONFIG_ENV = "INSITU_CONFIG"
DATA_DIR_ENV = "INSITU_DATA_DIR"


@dataclass
class EngineConfig:
    data_dir: str = "insitu_data"
    k: int = 3
    tau: float = 0.5
    sigma_min: float = 0.15
    handbook_size: int = 120
    search_max_results: int = 5
    search_doc_chars: int = 4000
    providers: dict[str, ProviderConfig] = field(default_factory=dict)

    def provider(self, name: str) -> ProviderConfig:
        return self.providers.get(name, ProviderConfig())


def _parse_provider(name: str, raw: object) -> ProviderConfig:
    if not isinstance(raw, dict):
        raise SchemaError(f"providers.{name} must be a table")
    allowed = {"kind", "endpoint", "model", "api_key_env", "fixtures_dir", "latency_ms"}
    unknown = set(raw) - allowed
    if unknown:
        raise SchemaError(f"providers.{name} has unknown keys: {sorted(unknown)}")
    return ProviderConfig(**raw)


def load_config(path: str | Path | None = None) -> EngineConfig:
    if path is None:
        path = os.environ.get(CONFIG_ENV)
    if path is None:
        cfg = EngineConfig()
    else:
        path = Path(path)
        if path.suffix == ".json":
            raw = json.loads(path.read_text(encoding="utf-8"))
        else:
            raw = tomllib.loads(path.read_text(encoding="utf-8"))
        if not isinstance(raw, dict):
            raise SchemaError("config root must be a table")
        engine = raw.get("engine", {})
        if not isinstance(engine, dict):
            raise SchemaError("engine section must be a table")
        providers = {
            name: _parse_provider(name, p)
            for name, p in raw.get("providers", {}).items()
        }
        cfg = EngineConfig(providers=providers, **engine)
    env_data_dir = os.environ.get(DATA_DIR_ENV)
    if env_data_dir:
        cfg.data_dir = env_data_dir
    return cfg
