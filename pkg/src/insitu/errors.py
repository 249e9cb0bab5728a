"""Exception hierarchy shared across the engine."""


class InsituError(Exception):
    """Base class for all engine errors."""


class SchemaError(InsituError):
    """A wire document is missing a field, has a wrong type, or carries unknown fields."""


class GraphError(InsituError):
    """A snapshot's node graph is not a valid tree (dangling child, cycle, multiple parents)."""


class EmptyText(InsituError):
    """Embedding was requested for blank text."""


class ProviderUnavailable(InsituError):
    """An external provider (generation, embedding, search) could not serve the call."""


class MalformedResponse(InsituError):
    """A provider response failed to parse against the expected schema."""


class NotFound(InsituError):
    """A persisted artifact does not exist."""


class CorruptStore(InsituError):
    """A persisted artifact failed its integrity check."""


class ZeroValidCases(InsituError):
    """Every generated handbook candidate was rejected by validation."""


class UnknownCaseId(InsituError):
    """A case id does not exist in the handbook."""


class UnknownElementIndex(InsituError):
    """A referenced element index is not present in the snapshot."""


class EmptyElements(InsituError):
    """Grounding was attempted against an empty element list."""


class UnresolvedTarget(InsituError):
    """One or more case targets could not be grounded above the similarity floor."""

    def __init__(self, failures):
        self.failures = list(failures)
        descs = ", ".join(f.ui_description for f in self.failures)
        super().__init__(f"unresolved targets: {descs}")


class UngroundedTarget(InsituError):
    """Plan compilation was attempted with a target that was never grounded."""


class CompileError(InsituError):
    """A subtype template's preconditions were not met."""


class StaleTarget(InsituError):
    """A plan references a node id no longer present in the snapshot."""


class NoAssistanceAvailable(InsituError):
    """No candidate survived recommendation, grounding, and compilation."""


class InterfaceNotReady(InsituError):
    """Assistance was requested before the interface build finished."""


class BuildFailed(InsituError):
    """Knowledge or handbook construction failed."""


class NoRecords(InsituError):
    """An evaluation run was started on an empty dataset."""
