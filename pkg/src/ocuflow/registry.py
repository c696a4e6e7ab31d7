"""Data-driven tool catalog: descriptors, capability resolution, schema gate, tiers.

The catalog document carries each tool's I/O schemas in a small structural
dialect (types, ranges, required fields, enums). Validation is total: it
returns violations instead of raising, whatever the payload looks like.
"""

from __future__ import annotations

import copy
import hashlib
from dataclasses import dataclass
from typing import Any, Mapping, Optional

from .core import OcuflowError, canonical_json, normalize_label, register_modality

ROLES = ("GeneralPractitioner", "RetinaSpecialist", "MedicalEducator", "CrossSpecialtyAnalyzer")
TASKS = ("classification", "segmentation", "detection", "regression", "generation", "retrieval")
SUPPORTED_MAJOR_VERSION = 1


class DuplicateToolIdError(OcuflowError):
    pass


class MalformedDescriptorError(OcuflowError):
    def __init__(self, tool_id: str, reason: str):
        self.tool_id = tool_id
        self.reason = reason
        super().__init__(f"{tool_id}: {reason}")


class MalformedCatalogError(OcuflowError):
    pass


class TierGapError(OcuflowError):
    pass


class TierOutOfRangeError(OcuflowError):
    pass


# ---------------------------------------------------------------------------
# Structural-schema dialect

def _type_name(value: Any) -> str:
    if isinstance(value, bool):
        return "boolean"
    if isinstance(value, int):
        return "integer"
    if isinstance(value, float):
        return "number"
    if isinstance(value, str):
        return "string"
    if isinstance(value, Mapping):
        return "object"
    if isinstance(value, (list, tuple)):
        return "list"
    if value is None:
        return "null"
    return type(value).__name__


def _check_node(schema: Mapping[str, Any], value: Any, path: str, out: list[str]) -> None:
    kind = schema.get("type", "any")
    if kind == "any":
        return
    actual = _type_name(value)

    if kind == "number":
        if actual not in ("number", "integer"):
            out.append(f"{path}: expected number, got {actual}")
            return
        _check_range(schema, float(value), path, out)
    elif kind == "integer":
        if actual != "integer":
            out.append(f"{path}: expected integer, got {actual}")
            return
        _check_range(schema, value, path, out)
    elif kind == "string":
        if actual != "string":
            out.append(f"{path}: expected string, got {actual}")
            return
        enum = schema.get("enum")
        if enum is not None and value not in enum:
            out.append(f"{path}: {value!r} not one of {sorted(enum)}")
        if schema.get("min_len") is not None and len(value) < schema["min_len"]:
            out.append(f"{path}: shorter than {schema['min_len']}")
    elif kind == "boolean":
        if actual != "boolean":
            out.append(f"{path}: expected boolean, got {actual}")
    elif kind == "list":
        if actual != "list":
            out.append(f"{path}: expected list, got {actual}")
            return
        if schema.get("min_len") is not None and len(value) < schema["min_len"]:
            out.append(f"{path}: fewer than {schema['min_len']} items")
        items = schema.get("items")
        if items is not None:
            for i, item in enumerate(value):
                _check_node(items, item, f"{path}[{i}]", out)
    elif kind == "map":
        if actual != "object":
            out.append(f"{path}: expected map, got {actual}")
            return
        if schema.get("min_size") is not None and len(value) < schema["min_size"]:
            out.append(f"{path}: fewer than {schema['min_size']} entries")
        values = schema.get("values")
        if values is not None:
            for k, v in value.items():
                _check_node(values, v, f"{path}.{k}" if path else str(k), out)
    elif kind == "object":
        if actual != "object":
            out.append(f"{path}: expected object, got {actual}")
            return
        fields: Mapping[str, Any] = schema.get("fields", {})
        for name in schema.get("required", ()):
            if name not in value:
                out.append(f"{_join(path, name)}: required field missing")
        for name, sub in fields.items():
            if name in value:
                _check_node(sub, value[name], _join(path, name), out)
    else:
        out.append(f"{path}: unknown schema type {kind!r}")


def _check_range(schema: Mapping[str, Any], value: float, path: str, out: list[str]) -> None:
    if schema.get("min") is not None and value < schema["min"]:
        out.append(f"{path}: {value} below minimum {schema['min']}")
    if schema.get("max") is not None and value > schema["max"]:
        out.append(f"{path}: {value} above maximum {schema['max']}")
    if schema.get("exclusive_min") is not None and value <= schema["exclusive_min"]:
        out.append(f"{path}: {value} must exceed {schema['exclusive_min']}")


def _join(path: str, name: str) -> str:
    return f"{path}.{name}" if path else name


def check_schema_doc(schema: Any) -> bool:
    """Cheap well-formedness test for a dialect schema document."""
    if not isinstance(schema, Mapping):
        return False
    kind = schema.get("type", "any")
    if kind not in ("any", "number", "integer", "string", "boolean", "list", "map", "object"):
        return False
    for sub_key in ("items", "values"):
        if sub_key in schema and not check_schema_doc(schema[sub_key]):
            return False
    if kind == "object":
        for sub in schema.get("fields", {}).values():
            if not check_schema_doc(sub):
                return False
    return True


@dataclass(frozen=True)
class ValidationResult:
    ok: bool
    value: Optional[Mapping[str, Any]]
    violations: tuple[str, ...] = ()


def validate_document(schema: Mapping[str, Any], payload: Any) -> ValidationResult:
    """Total validation of a payload against a dialect schema.

    Unknown fields pass through untouched (the dialect is open-world); the
    normalized value is a deep copy so later mutation can't corrupt fixtures.
    """
    violations: list[str] = []
    try:
        _check_node(schema, payload, "", violations)
    except Exception as exc:  # arbitrary documents must never throw
        violations.append(f": validator error {exc}")
    if violations:
        return ValidationResult(ok=False, value=None, violations=tuple(violations))
    normalized = copy.deepcopy(payload) if isinstance(payload, Mapping) else payload
    return ValidationResult(ok=True, value=normalized)


# ---------------------------------------------------------------------------
# Descriptors

@dataclass(frozen=True)
class AdapterBinding:
    kind: str
    locator: str
    timeout: float = 10.0

    def __post_init__(self) -> None:
        if not self.locator:
            raise MalformedCatalogError("binding locator must be non-empty")
        if self.timeout <= 0:
            raise MalformedCatalogError("binding timeout must be positive")


@dataclass(frozen=True)
class UsagePredicate:
    """Machine-checkable gate over accumulated trace facts."""

    fact: str
    one_of: tuple[str, ...]

    def satisfied(self, facts: Mapping[str, Any]) -> bool:
        value = facts.get(self.fact)
        return value is not None and str(value) in self.one_of

    def decided(self, facts: Mapping[str, Any]) -> bool:
        return self.fact in facts


@dataclass(frozen=True)
class ToolDescriptor:
    tool_id: str
    display_name: str
    role: str
    task: str
    capability: str
    modalities: frozenset[str]
    conditions: frozenset[str]
    input_schema: Mapping[str, Any]
    output_schema: Mapping[str, Any]
    usage_conditions: tuple[UsagePredicate, ...]
    tier: int
    backend: AdapterBinding
    threshold: Optional[float] = None
    target_modality: Optional[str] = None  # generation tools: modality of the artifact

    @property
    def is_image_tool(self) -> bool:
        fields = self.input_schema.get("fields", {})
        return "image_id" in fields

    def accepts_modality(self, code: str) -> bool:
        return "*" in self.modalities or code in self.modalities

    def addresses(self, condition: str) -> bool:
        return normalize_label(condition) in self.conditions


@dataclass(frozen=True)
class Toolset:
    tier: int
    tools: tuple[ToolDescriptor, ...]  # sorted by tool_id

    @property
    def tool_ids(self) -> frozenset[str]:
        return frozenset(t.tool_id for t in self.tools)

    def get(self, tool_id: str) -> Optional[ToolDescriptor]:
        for t in self.tools:
            if t.tool_id == tool_id:
                return t
        return None


# ---------------------------------------------------------------------------
# Registry

@dataclass
class Registry:
    tools: dict[str, ToolDescriptor]
    schema_version: str
    catalog_hash: str
    notes: tuple[str, ...] = ()

    def get(self, tool_id: str) -> ToolDescriptor:
        return self.tools[tool_id]

    def __contains__(self, tool_id: str) -> bool:
        return tool_id in self.tools

    def tier_sizes(self) -> list[int]:
        return [len(self.tier_subset(t).tools) for t in range(1, 6)]

    def tier_subset(self, tier: int) -> Toolset:
        if not isinstance(tier, int) or not 1 <= tier <= 5:
            raise TierOutOfRangeError(str(tier))
        members = sorted(
            (t for t in self.tools.values() if t.tier <= tier),
            key=lambda t: t.tool_id,
        )
        return Toolset(tier=tier, tools=tuple(members))

    def resolve(
        self,
        modality: Optional[str] = None,
        task: Optional[str] = None,
        condition: Optional[str] = None,
        role: Optional[str] = None,
    ) -> list[ToolDescriptor]:
        """All descriptors matching every provided criterion.

        Sorted by specificity (condition match, then role match, then
        modality-only) and tool_id, so identical queries always return the
        same ordering. A query for modality Unknown matches only tools that
        accept any image (the modality recognizer).
        """
        results: list[tuple[int, str]] = []
        for tool in self.tools.values():
            if task is not None and tool.task != task:
                continue
            if condition is not None and not tool.addresses(condition):
                continue
            if role is not None and tool.role != role:
                continue
            if modality is not None:
                if modality == "Unknown":
                    if "*" not in tool.modalities:
                        continue
                elif not tool.accepts_modality(modality):
                    continue
            if condition is not None:
                specificity = 0
            elif role is not None:
                specificity = 1
            else:
                specificity = 2
            results.append((specificity, tool.tool_id))
        results.sort()
        return [self.tools[tool_id] for _, tool_id in results]

    def find_capability(self, capability: str, toolset: Optional[Toolset] = None) -> list[ToolDescriptor]:
        pool = toolset.tools if toolset is not None else sorted(self.tools.values(), key=lambda t: t.tool_id)
        return [t for t in pool if t.capability == capability]

    def validate_io(self, descriptor: ToolDescriptor, payload: Any, direction: str) -> ValidationResult:
        """Schema-gate a tool payload; never raises on arbitrary documents."""
        if direction not in ("input", "output"):
            return ValidationResult(False, None, (f"direction: unknown {direction!r}",))
        schema = descriptor.input_schema if direction == "input" else descriptor.output_schema
        return validate_document(schema, payload)


def _parse_predicates(raw: Any, tool_id: str) -> tuple[UsagePredicate, ...]:
    if raw in (None, ()):
        return ()
    preds = []
    for entry in raw:
        if not isinstance(entry, Mapping) or "fact" not in entry or "one_of" not in entry:
            raise MalformedDescriptorError(tool_id, f"bad usage condition {entry!r}")
        preds.append(UsagePredicate(fact=str(entry["fact"]), one_of=tuple(str(v) for v in entry["one_of"])))
    return tuple(preds)


def _resolve_schema(ref_or_doc: Any, shared: Mapping[str, Any], tool_id: str, which: str) -> Mapping[str, Any]:
    if isinstance(ref_or_doc, str):
        if ref_or_doc not in shared:
            raise MalformedDescriptorError(tool_id, f"{which} references unknown schema {ref_or_doc!r}")
        return shared[ref_or_doc]
    if isinstance(ref_or_doc, Mapping):
        return ref_or_doc
    raise MalformedDescriptorError(tool_id, f"{which} must be a schema document or a shared-schema name")


def load_catalog(document: Mapping[str, Any], allow_sparse_tiers: bool = False) -> Registry:
    """Build a Registry from one catalog document.

    Rejects unknown major schema versions, duplicate ids, malformed
    descriptors, and (unless allow_sparse_tiers) any empty tier in 1..5.
    """
    if not isinstance(document, Mapping):
        raise MalformedCatalogError("catalog must be an object")
    version = str(document.get("schema_version", ""))
    major = version.split(".", 1)[0]
    if not major.isdigit() or int(major) != SUPPORTED_MAJOR_VERSION:
        raise MalformedCatalogError(f"unsupported catalog schema_version {version!r}")

    for code in document.get("modalities", ()):
        register_modality(str(code))

    shared: Mapping[str, Any] = document.get("schemas", {})
    for name, schema in shared.items():
        if not check_schema_doc(schema):
            raise MalformedCatalogError(f"shared schema {name!r} is not well-formed")

    tools: dict[str, ToolDescriptor] = {}
    for raw in document.get("tools", ()):
        tool_id = str(raw.get("tool_id", ""))
        if not tool_id:
            raise MalformedDescriptorError("<missing>", "tool_id required")
        if tool_id in tools:
            raise DuplicateToolIdError(tool_id)
        role = raw.get("role")
        if role not in ROLES:
            raise MalformedDescriptorError(tool_id, f"unknown role {role!r}")
        task = raw.get("task")
        if task not in TASKS:
            raise MalformedDescriptorError(tool_id, f"unknown task {task!r}")
        tier = raw.get("tier")
        if not isinstance(tier, int) or not 1 <= tier <= 5:
            raise MalformedDescriptorError(tool_id, f"tier {tier!r} outside 1..5")
        input_schema = _resolve_schema(raw.get("input_schema"), shared, tool_id, "input_schema")
        output_schema = _resolve_schema(raw.get("output_schema"), shared, tool_id, "output_schema")
        for which, schema in (("input_schema", input_schema), ("output_schema", output_schema)):
            if not check_schema_doc(schema):
                raise MalformedDescriptorError(tool_id, f"{which} is not well-formed")
        binding_raw = raw.get("backend")
        if not isinstance(binding_raw, Mapping):
            raise MalformedDescriptorError(tool_id, "backend binding required")
        binding = AdapterBinding(
            kind=str(binding_raw.get("kind", "")),
            locator=str(binding_raw.get("locator", "")),
            timeout=float(binding_raw.get("timeout", 10.0)),
        )
        threshold = raw.get("threshold")
        if threshold is not None and not 0.0 <= float(threshold) <= 1.0:
            raise MalformedDescriptorError(tool_id, f"threshold {threshold} outside [0,1]")
        descriptor = ToolDescriptor(
            tool_id=tool_id,
            display_name=str(raw.get("display_name", tool_id)),
            role=role,
            task=task,
            capability=str(raw.get("capability", "")),
            modalities=frozenset(str(m) for m in raw.get("modalities", ())),
            conditions=frozenset(normalize_label(str(c)) for c in raw.get("conditions", ())),
            input_schema=input_schema,
            output_schema=output_schema,
            usage_conditions=_parse_predicates(raw.get("usage_conditions"), tool_id),
            tier=tier,
            backend=binding,
            threshold=float(threshold) if threshold is not None else None,
            target_modality=raw.get("target_modality"),
        )
        if descriptor.is_image_tool and not descriptor.modalities:
            raise MalformedDescriptorError(tool_id, "image tools must declare modalities")
        tools[tool_id] = descriptor

    if not tools:
        raise MalformedCatalogError("catalog has no tools")

    if not allow_sparse_tiers:
        present = {t.tier for t in tools.values()}
        missing = [t for t in range(1, 6) if t not in present]
        if missing:
            raise TierGapError(f"no tools enter at tier(s) {missing}")

    catalog_hash = hashlib.sha256(canonical_json(_hashable(document)).encode()).hexdigest()
    return Registry(
        tools=tools,
        schema_version=version,
        catalog_hash=catalog_hash,
        notes=tuple(str(n) for n in document.get("notes", ())),
    )


def _hashable(doc: Any) -> Any:
    if isinstance(doc, Mapping):
        return {str(k): _hashable(v) for k, v in doc.items()}
    if isinstance(doc, (list, tuple)):
        return [_hashable(v) for v in doc]
    return doc


def load_catalog_file(path: Any, allow_sparse_tiers: bool = False) -> Registry:
    import json
    from pathlib import Path

    with Path(path).open() as fh:
        return load_catalog(json.load(fh), allow_sparse_tiers=allow_sparse_tiers)
