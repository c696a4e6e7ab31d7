"""Plans, reasoning traces, conflicts, and integrated findings.

The trace is the replayable record of one case: an append-only, seq-ordered
event list. Timestamps are logical ticks, not wall clock, so identical runs
serialize to identical bytes.
"""

from __future__ import annotations

import threading
from dataclasses import dataclass, field
from typing import Any, Callable, Mapping, Optional

from .core import InvariantError, canonical_json

WORKFLOWS = (
    "HierarchicalDecision",
    "QuantitativeAnalysis",
    "MedicalEducation",
    "ConflictResolution",
    "CrossSpecialtyLongitudinal",
)

STAGES = ("interpret", "plan", "execute", "integrate", "respond")

EVENT_KINDS = (
    "stage_enter",
    "invocation",
    "validation_failure",
    "conflict_detected",
    "revision",
    "citation",
    "warning",
    "final_report",
)


@dataclass(frozen=True)
class Intent:
    workflow: str
    task_params: Mapping[str, Any]
    raw_query: str

    def __post_init__(self) -> None:
        if self.workflow not in WORKFLOWS:
            raise InvariantError(f"unknown workflow {self.workflow!r}")

    def to_dict(self) -> dict[str, Any]:
        return {"workflow": self.workflow, "task_params": dict(self.task_params), "raw_query": self.raw_query}


@dataclass(frozen=True)
class PlanStep:
    step_id: str
    tool_id: str
    input_bindings: Mapping[str, str]
    rationale: str
    stage_tag: str = "execute"
    origin: str = "initial"  # initial | revision
    depends_on: tuple[str, ...] = ()
    assume_facts: Mapping[str, str] = field(default_factory=dict)

    def to_dict(self) -> dict[str, Any]:
        return {
            "step_id": self.step_id,
            "tool_id": self.tool_id,
            "input_bindings": dict(self.input_bindings),
            "rationale": self.rationale,
            "stage_tag": self.stage_tag,
            "origin": self.origin,
            "depends_on": list(self.depends_on),
        }


class ToolPlan:
    """An ordered DAG of tool invocations; steps may only reference earlier steps."""

    def __init__(self) -> None:
        self.steps: list[PlanStep] = []
        self.edges: list[tuple[str, str]] = []
        self.warnings: list[str] = []

    @property
    def step_ids(self) -> set[str]:
        return {s.step_id for s in self.steps}

    @property
    def tool_ids(self) -> set[str]:
        return {s.tool_id for s in self.steps}

    def get(self, step_id: str) -> Optional[PlanStep]:
        for s in self.steps:
            if s.step_id == step_id:
                return s
        return None

    def add(self, step: PlanStep) -> PlanStep:
        known = self.step_ids
        if step.step_id in known:
            raise InvariantError(f"duplicate step id {step.step_id}")
        for dep in step.depends_on:
            if dep not in known:
                raise InvariantError(f"step {step.step_id} depends on unknown/later step {dep}")
        for binding in step.input_bindings.values():
            if binding.startswith("step:"):
                ref = binding.split(":", 2)[1]
                if ref not in known:
                    raise InvariantError(f"step {step.step_id} binds unknown/later step {ref}")
        self.steps.append(step)
        for dep in step.depends_on:
            self.edges.append((dep, step.step_id))
        return step

    def dependencies(self, step: PlanStep) -> set[str]:
        deps = set(step.depends_on)
        for binding in step.input_bindings.values():
            if binding.startswith("step:"):
                deps.add(binding.split(":", 2)[1])
        return deps

    def to_dict(self) -> dict[str, Any]:
        return {
            "steps": [s.to_dict() for s in self.steps],
            "edges": [list(e) for e in self.edges],
        }


@dataclass(frozen=True)
class TraceEvent:
    seq: int
    ts: int
    kind: str
    payload: Mapping[str, Any]

    def to_dict(self) -> dict[str, Any]:
        return {"seq": self.seq, "ts": self.ts, "kind": self.kind, "payload": self.payload}


class ReasoningTrace:
    """Append-only event record for one case; appends are serialized by a lock."""

    def __init__(self, case_id: str, seed: int, catalog_hash: str, tier: int,
                 observer: Optional[Callable[["TraceEvent"], None]] = None):
        self.case_id = case_id
        self.seed = seed
        self.catalog_hash = catalog_hash
        self.tier = tier
        self.events: list[TraceEvent] = []
        self._lock = threading.Lock()
        self._finalized = False
        self._observer = observer

    def append(self, kind: str, payload: Mapping[str, Any]) -> TraceEvent:
        if kind not in EVENT_KINDS:
            raise InvariantError(f"unknown event kind {kind!r}")
        with self._lock:
            if self._finalized:
                raise InvariantError("trace already carries its final_report event")
            seq = len(self.events)
            event = TraceEvent(seq=seq, ts=seq, kind=kind, payload=dict(payload))
            self.events.append(event)
            if kind == "final_report":
                self._finalized = True
        if self._observer is not None:
            self._observer(event)
        return event

    @property
    def completed(self) -> bool:
        return self._finalized

    def invocation_events(self) -> list[TraceEvent]:
        return [e for e in self.events if e.kind == "invocation"]

    def invoked_tool_ids(self) -> set[str]:
        return {e.payload["tool_id"] for e in self.invocation_events()}

    def header_dict(self) -> dict[str, Any]:
        return {
            "case_id": self.case_id,
            "seed": self.seed,
            "catalog_hash": self.catalog_hash,
            "tier": self.tier,
        }

    def to_lines(self) -> list[str]:
        lines = [canonical_json(self.header_dict())]
        lines.extend(canonical_json(e.to_dict()) for e in self.events)
        return lines

    def serialize(self) -> str:
        return "\n".join(self.to_lines()) + "\n"


RESOLUTIONS = ("specialist_overrides", "generation_verified", "escalated_unresolved")


@dataclass
class ConflictRecord:
    topic: str
    parties: list[tuple[str, str, float]]  # (tool_id, label, probability)
    resolution: Optional[str] = None
    resolving_steps: list[str] = field(default_factory=list)

    def __post_init__(self) -> None:
        if len(self.parties) < 2:
            raise InvariantError("a conflict needs at least two parties")

    def to_dict(self) -> dict[str, Any]:
        return {
            "topic": self.topic,
            "parties": [{"tool_id": t, "label": l, "probability": p} for t, l, p in self.parties],
            "resolution": self.resolution,
            "resolving_steps": list(self.resolving_steps),
        }


@dataclass
class IntegratedFindings:
    modality: Optional[dict[str, Any]] = None       # {label, probability, step_id}
    quality: Optional[dict[str, Any]] = None        # {label, probability, artifact_count, step_id}
    laterality: Optional[dict[str, Any]] = None
    diagnosis: list[dict[str, Any]] = field(default_factory=list)  # ranked, with provenance
    lesion_evidence: list[dict[str, Any]] = field(default_factory=list)
    metrics: list[dict[str, Any]] = field(default_factory=list)
    conflicts: list[ConflictRecord] = field(default_factory=list)
    low_confidence: bool = False
    notes: list[str] = field(default_factory=list)

    def top_diagnosis(self) -> Optional[dict[str, Any]]:
        return self.diagnosis[0] if self.diagnosis else None

    def to_dict(self) -> dict[str, Any]:
        return {
            "modality": self.modality,
            "quality": self.quality,
            "laterality": self.laterality,
            "diagnosis": self.diagnosis,
            "lesion_evidence": self.lesion_evidence,
            "metrics": self.metrics,
            "conflicts": [c.to_dict() for c in self.conflicts],
            "low_confidence": self.low_confidence,
            "notes": self.notes,
        }
