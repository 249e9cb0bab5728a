"""In-situ assistance engine: snapshot modeling, handbook construction,
retrieval-augmented recommendation, grounding, and reversible delivery plans."""

__version__ = "0.1.0"

from .config import EngineConfig, load_config
from .delivery import DeliveryPlan, apply_sim, compile_plan, revert_sim
from .dom_model import DomSnapshot, extract_interactables, parse_snapshot
from .grounding import GroundingConfig, ground_case
from .handbook import AssistanceCase, HandbookIndex, generate_handbook
from .knowledge import InterfaceKnowledge, acquire_knowledge, interface_id_for
from .providers import ProviderSet, build_provider_set, mock_embedding
from .recommender import RecommenderConfig, recommend
from .service import Engine, create_app

__all__ = [
    "AssistanceCase",
    "DeliveryPlan",
    "DomSnapshot",
    "Engine",
    "EngineConfig",
    "GroundingConfig",
    "HandbookIndex",
    "InterfaceKnowledge",
    "ProviderSet",
    "RecommenderConfig",
    "acquire_knowledge",
    "apply_sim",
    "build_provider_set",
    "compile_plan",
    "create_app",
    "extract_interactables",
    "generate_handbook",
    "ground_case",
    "interface_id_for",
    "load_config",
    "mock_embedding",
    "parse_snapshot",
    "recommend",
    "revert_sim",
    "__version__",
]
