"""Per-interface knowledge base: documentation summary plus element inventory.

Built once per interface (identified by URL origin + path) and reused across
sessions; the expensive search + summarization happens only on the first build.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import asdict, dataclass
from datetime import datetime, timezone
from pathlib import Path
from urllib.parse import urlparse

from .config import EngineConfig
from .dom_model import DomSnapshot, extract_interactables, format_element_listing
from .errors import CorruptStore, NotFound, ProviderUnavailable
from .providers import GenerationRequest, ProviderSet

REQUIRED_SECTIONS = (
    "What it is",
    "Features",
    "Supported interactions",
    "Unsupported interactions",
)


@dataclass
class InterfaceKnowledge:
    interface_id: str
    url: str
    title: str
    doc_summary: str
    element_inventory: list[str]
    screenshot_ref: str | None
    built_at: str
    degraded: bool


def interface_id_for(url: str) -> str:
    """Stable identity: digest of origin + pathname, ignoring query and fragment."""
    parsed = urlparse(url)
    origin = f"{parsed.scheme}://{parsed.netloc}"
    return hashlib.sha256(f"{origin}{parsed.path}".encode("utf-8")).hexdigest()[:16]


def _utc_now() -> str:
    return datetime.now(timezone.utc).strftime("%Y-%m-%dT%H:%M:%SZ")


def _has_all_sections(summary: str) -> bool:
    return all(section in summary for section in REQUIRED_SECTIONS)


def _local_summary(title: str, url: str, inventory: list[str]) -> str:
    """Summary synthesized from the snapshot alone (no search results)."""
    controls = "\n".join(f"- {d}" for d in inventory[:40])
    return (
        f"## What it is\n{title} ({url}): a web interface described here from its "
        f"live element inventory only.\n\n"
        f"## Features\nThe page exposes {len(inventory)} referenceable elements, "
        f"including:\n{controls}\n\n"
        f"## Supported interactions\nThe controls listed above accept direct "
        f"interaction (clicks, selection, text input).\n\n"
        f"## Unsupported interactions\nUnknown; no external documentation was "
        f"available when this knowledge base was built.\n"
    )


def acquire_knowledge(
    url: str,
    title: str,
    snapshot: DomSnapshot,
    providers: ProviderSet,
    cfg: EngineConfig | None = None,
    screenshot_ref: str | None = None,
) -> InterfaceKnowledge:
    """Search for documentation, summarize it, and attach the element inventory.

    Zero search results (or an unavailable search provider) degrade to a
    summary built from the snapshot alone. Only when search and generation are
    both unavailable does the build fail.
    """
    cfg = cfg or EngineConfig()
    elements = extract_interactables(snapshot)
    inventory = [e.descriptor for e in elements]
    listing = format_element_listing(elements)

    search_error = None
    results = []
    try:
        results = providers.searcher.search(
            f"{title} tutorial documentation features", cfg.search_max_results
        )
    except ProviderUnavailable as e:
        search_error = e

    degraded = not results
    summary = ""
    if results:
        documents = "\n\n".join(
            f"{r.title} ({r.url})\n{r.snippet[:cfg.search_doc_chars]}" for r in results
        )
        request = GenerationRequest(
            template_id="knowledge_summary",
            context={
                "page_title": title,
                "page_url": url,
                "documents": documents,
                "element_listing": listing,
            },
            response_schema_id="knowledge_summary_md",
        )
        for _ in range(2):  # one retry on a malformed summary
            try:
                candidate = providers.generator.generate(request)
            except ProviderUnavailable as e:
                if search_error is not None:
                    raise ProviderUnavailable(
                        f"search and generation both unavailable: {search_error}; {e}"
                    ) from e
                candidate = ""
                break
            if _has_all_sections(candidate):
                summary = candidate
                break
        if not summary:
            degraded = True
    if not summary:
        summary = _local_summary(title, url, inventory)

    return InterfaceKnowledge(
        interface_id=interface_id_for(url),
        url=url,
        title=title,
        doc_summary=summary,
        element_inventory=inventory,
        screenshot_ref=screenshot_ref,
        built_at=_utc_now(),
        degraded=degraded,
    )


class KnowledgeStore:
    """Canonical on-disk persistence: <data_dir>/interfaces/<id>/knowledge.json."""

    def __init__(self, data_dir: str | Path):
        self.data_dir = Path(data_dir)

    def _path(self, interface_id: str) -> Path:
        return self.data_dir / "interfaces" / interface_id / "knowledge.json"

    def store(self, knowledge: InterfaceKnowledge) -> None:
        payload = json.dumps(
            asdict(knowledge), sort_keys=True, ensure_ascii=False, separators=(",", ":")
        )
        doc = {
            "schema_version": 1,
            "checksum": hashlib.sha256(payload.encode("utf-8")).hexdigest(),
            "knowledge": json.loads(payload),
        }
        path = self._path(knowledge.interface_id)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(
            json.dumps(doc, sort_keys=True, ensure_ascii=False, separators=(",", ":")),
            encoding="utf-8",
        )

    def load(self, interface_id: str) -> InterfaceKnowledge:
        path = self._path(interface_id)
        if not path.exists():
            raise NotFound(f"no knowledge stored for interface {interface_id}")
        try:
            doc = json.loads(path.read_text(encoding="utf-8"))
        except json.JSONDecodeError as e:
            raise CorruptStore(f"knowledge.json is not valid JSON: {e}") from e
        if doc.get("schema_version") != 1:
            raise CorruptStore(f"unknown knowledge schema version: {doc.get('schema_version')}")
        payload = json.dumps(
            doc.get("knowledge", {}), sort_keys=True, ensure_ascii=False,
            separators=(",", ":"),
        )
        if hashlib.sha256(payload.encode("utf-8")).hexdigest() != doc.get("checksum"):
            raise CorruptStore(f"checksum mismatch for interface {interface_id}")
        return InterfaceKnowledge(**doc["knowledge"])

    def exists(self, interface_id: str) -> bool:
        return self._path(interface_id).exists()
