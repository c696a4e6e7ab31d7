"""Uniform invocation layer over tool backends.

Backends are pluggable by kind (fixture, subprocess, http, knowledge). Every
invocation is schema-gated: raw payloads are validated against the
descriptor's output schema before they are post-processed into core-model
outputs, and no result with status "ok" ever carries an invalid payload.
"""

from __future__ import annotations

import json
import subprocess
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable, Mapping, Optional, Sequence

from .core import (
    LesionInstanceSet,
    OcuflowError,
    VesselMetrics,
    ZeroVenularCaliberError,
    canonical_json,
    lesion_stats,
    rank_predictions,
)
from .registry import Registry, ToolDescriptor

DEFAULT_CLASSIFICATION_THRESHOLD = 0.3
DEFAULT_RETRIES = 2

STATUS_OK = "ok"
STATUS_TOOL_ERROR = "tool_error"
STATUS_TIMEOUT = "timeout"
STATUS_SCHEMA_VIOLATION = "schema_violation"


class DuplicateBackendKindError(OcuflowError):
    pass


class TransportFailure(OcuflowError):
    """Retryable transport-level failure (timeout, connection refused, bad frame)."""


class ToolFailure(OcuflowError):
    """Non-retryable tool-level failure carried in the response payload."""


@dataclass(frozen=True)
class Invocation:
    tool_id: str
    inputs: Mapping[str, Any]
    request_id: str
    deadline: float = 10.0


@dataclass(frozen=True)
class InvocationResult:
    request_id: str
    status: str
    payload: Optional[Mapping[str, Any]]
    latency: float
    attempts: int
    reason: Optional[str] = None
    raw: Optional[Mapping[str, Any]] = None
    violations: tuple[str, ...] = ()

    @property
    def ok(self) -> bool:
        return self.status == STATUS_OK

    def to_dict(self) -> dict[str, Any]:
        out: dict[str, Any] = {
            "request_id": self.request_id,
            "status": self.status,
            "payload": self.payload,
            "latency": self.latency,
            "attempts": self.attempts,
        }
        if self.reason is not None:
            out["reason"] = self.reason
        if self.raw is not None:
            out["raw"] = self.raw
        if self.violations:
            out["violations"] = list(self.violations)
        return out


# ---------------------------------------------------------------------------
# Fixture store

def fixture_key(inputs: Mapping[str, Any]) -> str:
    """Exact-match fixture key: image id plus canonicalized remaining params."""
    image_id = inputs.get("image_id", "-")
    params = {k: v for k, v in inputs.items() if k != "image_id"}
    if not params:
        return str(image_id)
    return f"{image_id}|{canonical_json(params)}"


@dataclass
class FixtureStore:
    """Per-tool canned outputs keyed by input; lookups are exact and deterministic."""

    entries: dict[str, dict[str, Any]] = field(default_factory=dict)
    defaults: dict[str, Any] = field(default_factory=dict)

    def put(self, tool_id: str, key: str, payload: Mapping[str, Any]) -> None:
        self.entries.setdefault(tool_id, {})[key] = payload

    def set_default(self, tool_id: str, payload: Mapping[str, Any]) -> None:
        self.defaults[tool_id] = payload

    def lookup(self, tool_id: str, key: str) -> tuple[bool, Any]:
        """(found, payload); a stored null payload is a hit, not a miss."""
        entries = self.entries.get(tool_id, {})
        if key in entries:
            return True, entries[key]
        if tool_id in self.defaults:
            return True, self.defaults[tool_id]
        return False, None

    @classmethod
    def load_dir(cls, root: Path | str) -> "FixtureStore":
        """Load one JSON file per tool: {"entries": {key: payload}, "default": payload?}."""
        store = cls()
        root = Path(root)
        for path in sorted(root.glob("*.json")):
            doc = json.loads(path.read_text())
            tool_id = path.stem
            for key, payload in doc.get("entries", {}).items():
                store.put(tool_id, key, payload)
            if doc.get("default") is not None:
                store.set_default(tool_id, doc["default"])
        return store


@dataclass
class AdapterContext:
    """Shared resources the backends may need."""

    fixture_store: Optional[FixtureStore] = None
    knowledge_index: Optional[Any] = None  # duck-typed: .retrieve(query, k)
    retrieval_k: int = 3


# ---------------------------------------------------------------------------
# Backends

class FixtureBackend:
    def __init__(self, binding, context: AdapterContext):
        self.context = context

    def call(self, descriptor: ToolDescriptor, invocation: Invocation) -> Mapping[str, Any]:
        store = self.context.fixture_store
        if store is None:
            raise ToolFailure("no fixture store configured")
        found, payload = store.lookup(descriptor.tool_id, fixture_key(invocation.inputs))
        if not found:
            raise ToolFailure(f"no fixture for {descriptor.tool_id} key {fixture_key(invocation.inputs)!r}")
        return payload


class SubprocessBackend:
    """Request document on stdin, response document on stdout, exit 0 = transport ok."""

    def __init__(self, binding, context: AdapterContext):
        self.binding = binding

    def call(self, descriptor: ToolDescriptor, invocation: Invocation) -> Mapping[str, Any]:
        request = encode_tool_request(invocation)
        try:
            proc = subprocess.run(
                [self.binding.locator],
                input=request.encode(),
                capture_output=True,
                timeout=self.binding.timeout,
            )
        except (subprocess.TimeoutExpired, OSError) as exc:
            raise TransportFailure(str(exc))
        if proc.returncode != 0:
            raise TransportFailure(f"exit code {proc.returncode}")
        return decode_tool_response(proc.stdout.decode(errors="replace"), invocation.request_id)


class HttpBackend:
    """Single POST per invocation; body identical to the subprocess documents."""

    def __init__(self, binding, context: AdapterContext):
        self.binding = binding

    def call(self, descriptor: ToolDescriptor, invocation: Invocation) -> Mapping[str, Any]:
        import requests

        try:
            resp = requests.post(
                self.binding.locator,
                data=encode_tool_request(invocation).encode(),
                headers={"Content-Type": "application/json"},
                timeout=self.binding.timeout,
            )
        except requests.RequestException as exc:
            raise TransportFailure(str(exc))
        if resp.status_code != 200:
            raise TransportFailure(f"http status {resp.status_code}")
        return decode_tool_response(resp.text, invocation.request_id)


class KnowledgeBackend:
    """Exposes the in-process retrieval index through the tool contract."""

    def __init__(self, binding, context: AdapterContext):
        self.context = context

    def call(self, descriptor: ToolDescriptor, invocation: Invocation) -> Mapping[str, Any]:
        index = self.context.knowledge_index
        if index is None:
            raise ToolFailure("knowledge index not configured")
        query = invocation.inputs.get("query", "")
        hits = index.retrieve(query, k=self.context.retrieval_k)
        return {
            "hits": [
                {
                    "passage_id": h.passage.passage_id,
                    "source_id": h.passage.source_id,
                    "rank": h.rank,
                    "score": h.score,
                    "text": h.passage.text,
                }
                for h in hits
            ]
        }


def encode_tool_request(invocation: Invocation) -> str:
    return canonical_json({
        "request_id": invocation.request_id,
        "tool_id": invocation.tool_id,
        "inputs": dict(invocation.inputs),
    })


def decode_tool_response(body: str, request_id: str) -> Mapping[str, Any]:
    try:
        doc = json.loads(body)
    except json.JSONDecodeError as exc:
        raise TransportFailure(f"bad response frame: {exc}")
    if not isinstance(doc, Mapping):
        raise TransportFailure("response frame must be an object")
    status = doc.get("status")
    if status == "error":
        raise ToolFailure(str(doc.get("reason", "tool error")))
    if status != "ok" or "output" not in doc:
        raise TransportFailure(f"malformed response frame for {request_id}")
    return doc["output"]


_BACKENDS: dict[str, Callable[[Any, AdapterContext], Any]] = {
    "fixture": FixtureBackend,
    "subprocess": SubprocessBackend,
    "http": HttpBackend,
    "knowledge": KnowledgeBackend,
}


def register_backend(kind: str, factory: Callable[[Any, AdapterContext], Any]) -> None:
    """Install a new backend kind; existing kinds cannot be replaced."""
    if kind in _BACKENDS:
        raise DuplicateBackendKindError(kind)
    _BACKENDS[kind] = factory


def registered_backend_kinds() -> frozenset[str]:
    return frozenset(_BACKENDS)


# ---------------------------------------------------------------------------
# Post-processing of validated raw payloads

def segmentation_to_metrics(raw: Sequence[Mapping[str, Any]]) -> list[LesionInstanceSet]:
    """One LesionInstanceSet per lesion type, sorted by type; duplicate types merge."""
    grouped: dict[str, list[float]] = {}
    for entry in raw:
        grouped.setdefault(entry["lesion_type"], []).extend(entry["areas"])
    return [lesion_stats(lesion_type, areas) for lesion_type, areas in sorted(grouped.items())]


def vessel_metrics(raw: Mapping[str, Any]) -> VesselMetrics:
    """Compute the arteriole-to-venule ratio from measured calibers; inputs pass through."""
    crve = float(raw["crve"])
    if crve <= 0:
        raise ZeroVenularCaliberError(str(crve))
    crae = float(raw["crae"])
    return VesselMetrics(
        crae=crae,
        crve=crve,
        avr=round(crae / crve, 3),
        vessel_area_density=float(raw["vessel_area_density"]),
        fractal_dimension_artery=float(raw["fractal_dimension_artery"]),
        tortuosity=float(raw["tortuosity"]) if raw.get("tortuosity") is not None else None,
    )


def _postprocess(descriptor: ToolDescriptor, raw: Mapping[str, Any], invocation: Invocation) -> Mapping[str, Any]:
    if descriptor.capability == "vessel-quantification":
        return vessel_metrics(raw).to_dict()
    if descriptor.task == "classification":
        threshold = descriptor.threshold if descriptor.threshold is not None else DEFAULT_CLASSIFICATION_THRESHOLD
        ranked = rank_predictions(raw["scores"], threshold)
        out = ranked.to_dict()
        for key, value in raw.items():
            if key != "scores":
                out[key] = value
        return out
    if descriptor.task == "segmentation":
        return {"lesions": [s.to_dict() for s in segmentation_to_metrics(raw["lesions"])]}
    if descriptor.task == "generation":
        out = dict(raw)
        source = invocation.inputs.get("image_id")
        if out.get("artifact_kind") in ("image-2d", "video") and source:
            # deterministic id so re-analysis fixtures can key the artifact
            out["artifact_image_id"] = f"{source}::{descriptor.tool_id}"
        return out
    return dict(raw)


# ---------------------------------------------------------------------------
# Adapter set

class AdapterSet:
    """Dispatches invocations through the configured backends with a retry cap.

    Retries apply to transport failures only, never to schema violations or
    tool-level errors. No exception escapes invoke(); outcomes ride in the
    result status.
    """

    def __init__(self, registry: Registry, context: Optional[AdapterContext] = None,
                 retries: int = DEFAULT_RETRIES):
        self.registry = registry
        self.context = context or AdapterContext()
        self.retries = retries
        self._backend_cache: dict[tuple[str, str], Any] = {}

    def _backend_for(self, descriptor: ToolDescriptor):
        key = (descriptor.backend.kind, descriptor.backend.locator)
        if key not in self._backend_cache:
            factory = _BACKENDS.get(descriptor.backend.kind)
            if factory is None:
                return None
            self._backend_cache[key] = factory(descriptor.backend, self.context)
        return self._backend_cache[key]

    def invoke(self, descriptor: ToolDescriptor, invocation: Invocation) -> InvocationResult:
        check = self.registry.validate_io(descriptor, dict(invocation.inputs), "input")
        if not check.ok:
            return InvocationResult(
                request_id=invocation.request_id, status=STATUS_SCHEMA_VIOLATION,
                payload=None, latency=0.0, attempts=1,
                reason="input schema violation", violations=check.violations,
            )

        backend = self._backend_for(descriptor)
        if backend is None:
            return InvocationResult(
                request_id=invocation.request_id, status=STATUS_TOOL_ERROR,
                payload=None, latency=0.0, attempts=1,
                reason=f"no backend for kind {descriptor.backend.kind!r}",
            )

        deterministic = descriptor.backend.kind in ("fixture", "knowledge")
        total_latency = 0.0
        attempts = 0
        raw: Optional[Mapping[str, Any]] = None
        last_failure = ""
        while attempts < 1 + self.retries:
            attempts += 1
            started = time.monotonic()
            try:
                raw = backend.call(descriptor, invocation)
            except TransportFailure as exc:
                total_latency += 0.0 if deterministic else time.monotonic() - started
                last_failure = str(exc)
                continue
            except ToolFailure as exc:
                total_latency += 0.0 if deterministic else time.monotonic() - started
                return InvocationResult(
                    request_id=invocation.request_id, status=STATUS_TOOL_ERROR,
                    payload=None, latency=total_latency, attempts=attempts, reason=str(exc),
                )
            total_latency += 0.0 if deterministic else time.monotonic() - started
            break
        else:
            return InvocationResult(
                request_id=invocation.request_id, status=STATUS_TIMEOUT,
                payload=None, latency=total_latency, attempts=attempts,
                reason=last_failure or "transport failed",
            )

        check = self.registry.validate_io(descriptor, raw, "output")
        if not check.ok:
            return InvocationResult(
                request_id=invocation.request_id, status=STATUS_SCHEMA_VIOLATION,
                payload=None, latency=total_latency, attempts=attempts,
                reason="output schema violation", raw=raw, violations=check.violations,
            )
        try:
            payload = _postprocess(descriptor, check.value, invocation)
        except OcuflowError as exc:
            return InvocationResult(
                request_id=invocation.request_id, status=STATUS_SCHEMA_VIOLATION,
                payload=None, latency=total_latency, attempts=attempts,
                reason=f"post-processing rejected payload: {exc}", raw=raw,
                violations=(str(exc),),
            )
        return InvocationResult(
            request_id=invocation.request_id, status=STATUS_OK,
            payload=payload, latency=total_latency, attempts=attempts,
        )
