"""The agent core: interpret, plan, execute, verify/revise, integrate, respond.

One orchestration task per case. Independent plan steps may run concurrently
(bounded by config.parallelism); trace appends stay in deterministic step
order, so identical inputs serialize to identical traces.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Any, Mapping, Optional, Sequence

from .adapters import AdapterSet, Invocation, InvocationResult
from .core import ClinicalCase, EvidenceItem, StructuredReport, normalize_label
from .planner import (
    PlannerConfig,
    PlannerProvider,
    RevisionContext,
    RulePlanner,
    StepOutcome,
    canonical_condition,
    is_negative_label,
)
from .plans import (
    ConflictRecord,
    IntegratedFindings,
    Intent,
    PlanStep,
    ReasoningTrace,
    ToolPlan,
)
from .registry import Registry, Toolset

DEFAULT_RECOMMENDATION = (
    "Correlate with the clinical picture and arrange ophthalmology review "
    "for definitive management."
)
NORMAL_RECOMMENDATION = "routine follow-up; consult if symptomatic"


@dataclass
class OrchestratorConfig:
    conflict_margin: float = 0.2
    revision_rounds: int = 2
    classification_threshold: float = 0.3
    parallelism: int = 1
    rag_policy: tuple[str, ...] = ("education", "conflict", "report")
    recommendations: Mapping[str, str] = field(default_factory=dict)
    retrieval_k: int = 3

    def planner_config(self) -> PlannerConfig:
        return PlannerConfig(
            conflict_margin=self.conflict_margin,
            revision_rounds=self.revision_rounds,
        )


@dataclass
class RunResult:
    trace: ReasoningTrace
    report: StructuredReport
    findings: IntegratedFindings

    @property
    def diagnosis_label(self) -> Optional[str]:
        top = self.findings.top_diagnosis()
        return top["label"] if top else None


class Orchestrator:
    def __init__(
        self,
        registry: Registry,
        adapters: AdapterSet,
        planner: Optional[PlannerProvider] = None,
        config: Optional[OrchestratorConfig] = None,
        knowledge_index: Optional[Any] = None,
    ):
        self.registry = registry
        self.adapters = adapters
        self.config = config or OrchestratorConfig()
        self.planner = planner or RulePlanner(self.config.planner_config())
        self.knowledge_index = knowledge_index

    # -- main loop -----------------------------------------------------------

    def run_case(self, case: ClinicalCase, tier: int, seed: int = 0,
                 trace_observer=None) -> RunResult:
        toolset = self.registry.tier_subset(tier)
        trace = ReasoningTrace(
            case_id=case.case_id, seed=seed,
            catalog_hash=self.registry.catalog_hash, tier=tier,
            observer=trace_observer,
        )

        trace.append("stage_enter", {"stage": "interpret", "query": case.query})
        intent = self.planner.interpret(case)

        trace.append("stage_enter", {
            "stage": "plan", "workflow": intent.workflow,
            "task_params": dict(intent.task_params),
        })
        plan = self.planner.propose_plan(intent, case, toolset)
        for warning in plan.warnings:
            trace.append("warning", {"reason": warning})

        trace.append("stage_enter", {
            "stage": "execute", "steps": [s.step_id for s in plan.steps],
        })
        outcomes: list[StepOutcome] = []
        facts: dict[str, Any] = {}
        conflicts: list[ConflictRecord] = []
        self._execute_steps(plan.steps, plan, case, toolset, trace, outcomes, facts)

        for round_no in range(1, self.config.revision_rounds + 1):
            ctx = RevisionContext(
                intent=intent, case=case, toolset=toolset, facts=dict(facts),
                outcomes=tuple(outcomes), conflicts=tuple(conflicts),
                round=round_no, config=self.config.planner_config(),
            )
            proposal = self.planner.propose_revision(ctx)
            for record in proposal.conflicts:
                conflicts.append(record)
                trace.append("conflict_detected", record.to_dict())
            if not proposal.steps:
                break
            trace.append("revision", {
                "round": round_no,
                "added_steps": [s.to_dict() for s in proposal.steps],
            })
            added = [plan.add(s) for s in proposal.steps]
            self._execute_steps(added, plan, case, toolset, trace, outcomes, facts)

        trace.append("stage_enter", {"stage": "integrate"})
        findings = self.integrate(trace, case=case, conflicts=conflicts, outcomes=outcomes)

        trace.append("stage_enter", {"stage": "respond"})
        hits = self._ground_report(trace, plan, case, toolset, intent, findings, outcomes)
        report = self.respond(findings, hits, trace)
        trace.append("final_report", {
            "report": report.to_dict(),
            "findings": findings.to_dict(),
        })
        return RunResult(trace=trace, report=report, findings=findings)

    # -- execution -----------------------------------------------------------

    def execute_plan(
        self,
        plan: ToolPlan,
        case: ClinicalCase,
        toolset: Toolset,
        trace: ReasoningTrace,
        outcomes: Optional[list[StepOutcome]] = None,
        facts: Optional[dict[str, Any]] = None,
    ) -> list[StepOutcome]:
        """Execute every not-yet-run step of the plan, appending to the trace."""
        outcomes = outcomes if outcomes is not None else []
        facts = facts if facts is not None else {}
        done = {o.step.step_id for o in outcomes}
        steps = [s for s in plan.steps if s.step_id not in done]
        self._execute_steps(steps, plan, case, toolset, trace, outcomes, facts)
        return outcomes

    def _execute_steps(
        self,
        steps: Sequence[PlanStep],
        plan: ToolPlan,
        case: ClinicalCase,
        toolset: Toolset,
        trace: ReasoningTrace,
        outcomes: list[StepOutcome],
        facts: dict[str, Any],
    ) -> None:
        """Run steps in dependency waves; events are appended in step order."""
        done: dict[str, StepOutcome] = {o.step.step_id: o for o in outcomes}
        pending = list(steps)
        while pending:
            wave = [
                s for s in pending
                if all(dep in done for dep in plan.dependencies(s))
            ]
            if not wave:
                # defensive: plan validation rejects cycles, so this only fires
                # on deps outside the batch; skip rather than deadlock
                for step in pending:
                    outcome = StepOutcome(step=step, skipped_reason="unresolvable dependencies")
                    trace.append("warning", {
                        "reason": "step_skipped", "step_id": step.step_id,
                        "tool_id": step.tool_id, "detail": "unresolvable dependencies",
                    })
                    done[step.step_id] = outcome
                    outcomes.append(outcome)
                return

            prepared: list[tuple[PlanStep, Optional[Invocation], Optional[str]]] = []
            for step in wave:
                skip = self._skip_reason(step, plan, done, toolset, facts)
                if skip is not None:
                    prepared.append((step, None, skip))
                    continue
                inputs = self._resolve_bindings(step, case, done)
                prepared.append((step, Invocation(
                    tool_id=step.tool_id, inputs=inputs,
                    request_id=f"inv-{step.step_id}",
                ), None))

            runnable = [(s, inv) for s, inv, _ in prepared if inv is not None]
            results: dict[str, InvocationResult] = {}
            if self.config.parallelism > 1 and len(runnable) > 1:
                with ThreadPoolExecutor(max_workers=self.config.parallelism) as pool:
                    futures = {
                        s.step_id: pool.submit(self.adapters.invoke, toolset.get(s.tool_id), inv)
                        for s, inv in runnable
                    }
                    results = {sid: f.result() for sid, f in futures.items()}
            else:
                for s, inv in runnable:
                    results[s.step_id] = self.adapters.invoke(toolset.get(s.tool_id), inv)

            for step, invocation, skip in prepared:
                if skip is not None:
                    outcome = StepOutcome(step=step, skipped_reason=skip)
                    payload: dict[str, Any] = {
                        "reason": "step_skipped", "step_id": step.step_id,
                        "tool_id": step.tool_id, "detail": skip,
                    }
                    hint = self._laterality_hint(step, case, toolset)
                    if hint is not None:
                        payload["fallback_laterality_hint"] = hint
                    trace.append("warning", payload)
                else:
                    result = results[step.step_id]
                    outcome = StepOutcome(step=step, result=result)
                    trace.append("invocation", {
                        "step_id": step.step_id,
                        "tool_id": step.tool_id,
                        "stage_tag": step.stage_tag,
                        "origin": step.origin,
                        "result": result.to_dict(),
                    })
                    if result.status == "schema_violation":
                        trace.append("validation_failure", {
                            "step_id": step.step_id,
                            "tool_id": step.tool_id,
                            "violations": list(result.violations),
                            "raw": result.raw,
                        })
                    if result.ok:
                        self._update_facts(step, result, toolset, facts)
                done[step.step_id] = outcome
                outcomes.append(outcome)
            pending = [s for s in pending if s.step_id not in done]

    def _skip_reason(
        self,
        step: PlanStep,
        plan: ToolPlan,
        done: Mapping[str, StepOutcome],
        toolset: Toolset,
        facts: Mapping[str, Any],
    ) -> Optional[str]:
        descriptor = toolset.get(step.tool_id)
        if descriptor is None:
            return f"tool {step.tool_id} not in the active tier-{toolset.tier} toolset"
        for dep in sorted(plan.dependencies(step)):
            outcome = done.get(dep)
            if outcome is None or not outcome.ok:
                return f"dependency {dep} did not complete successfully"
        effective = {**facts, **step.assume_facts}
        for pred in descriptor.usage_conditions:
            if not pred.satisfied(effective):
                return f"usage condition on fact {pred.fact!r} not satisfied"
        return None

    def _resolve_bindings(
        self, step: PlanStep, case: ClinicalCase, done: Mapping[str, StepOutcome],
    ) -> dict[str, Any]:
        inputs: dict[str, Any] = {}
        for param, binding in step.input_bindings.items():
            if binding == "case:query":
                inputs[param] = case.query
            elif binding.startswith("case:image:"):
                inputs[param] = binding.split(":", 2)[2]
            elif binding.startswith("step:"):
                _, ref, path = binding.split(":", 2)
                payload = done[ref].result.payload if done[ref].result else {}
                inputs[param] = (payload or {}).get(path)
            elif binding.startswith("literal:"):
                inputs[param] = binding.split(":", 1)[1]
            else:
                inputs[param] = binding
        return inputs

    def _update_facts(
        self, step: PlanStep, result: InvocationResult, toolset: Toolset, facts: dict[str, Any],
    ) -> None:
        descriptor = toolset.get(step.tool_id)
        if descriptor is None or not result.payload:
            return
        preds = result.payload.get("predictions")
        top = preds[0] if preds else None
        if descriptor.capability == "modality-recognition" and top:
            facts["modality"] = top["label"]
        elif descriptor.capability == "quality-assessment" and top:
            facts["quality"] = top["label"]
            if result.payload.get("artifact_count") is not None:
                facts["artifact_count"] = result.payload["artifact_count"]
        elif descriptor.capability == "laterality" and top:
            facts["laterality"] = top["label"]
        elif descriptor.capability == "screening" and top:
            facts["screening"] = top["label"]
            facts["screening_probability"] = top["probability"]

    def _laterality_hint(
        self, step: PlanStep, case: ClinicalCase, toolset: Toolset,
    ) -> Optional[str]:
        descriptor = toolset.get(step.tool_id)
        if descriptor is None or descriptor.capability != "laterality":
            return None
        for image in case.images:
            if image.laterality_hint:
                return image.laterality_hint
        return None

    # -- integration ---------------------------------------------------------

    def integrate(
        self,
        trace: ReasoningTrace,
        case: Optional[ClinicalCase] = None,
        conflicts: Optional[list[ConflictRecord]] = None,
        outcomes: Optional[Sequence[StepOutcome]] = None,
    ) -> IntegratedFindings:
        """Aggregate the executed trace into per-topic findings."""
        findings = IntegratedFindings()
        screening: Optional[dict[str, Any]] = None
        specialist: Optional[dict[str, Any]] = None
        specialist_negative: Optional[dict[str, Any]] = None
        rescreens: dict[str, dict[str, Any]] = {}

        for event in trace.events:
            if event.kind == "warning" and event.payload.get("fallback_laterality_hint"):
                findings.laterality = {
                    "label": event.payload["fallback_laterality_hint"],
                    "probability": None,
                    "step_id": event.payload.get("step_id"),
                    "source": "metadata hint",
                }
            if event.kind != "invocation":
                continue
            result = event.payload.get("result", {})
            if result.get("status") != "ok":
                continue
            payload = result.get("payload") or {}
            tool_id = event.payload["tool_id"]
            step_id = event.payload["step_id"]
            descriptor = self.registry.get(tool_id) if tool_id in self.registry else None
            if descriptor is None:
                continue
            preds = payload.get("predictions")
            top = preds[0] if preds else None

            if descriptor.capability == "modality-recognition" and top:
                findings.modality = {**top, "step_id": step_id}
            elif descriptor.capability == "quality-assessment" and top:
                findings.quality = {
                    **top, "step_id": step_id,
                    "artifact_count": payload.get("artifact_count", 0),
                }
            elif descriptor.capability == "laterality" and top:
                findings.laterality = {**top, "step_id": step_id, "source": "classifier"}
            elif descriptor.capability == "screening" and top:
                if event.payload["origin"] == "revision":
                    rescreens[step_id] = {**top, "step_id": step_id}
                else:
                    screening = {
                        "predictions": preds, "step_id": step_id, "tool_id": tool_id,
                    }
            elif descriptor.capability == "disease-specific" and top:
                positive = (not is_negative_label(top["label"])
                            and normalize_label(top["label"]) in descriptor.conditions)
                entry = {"predictions": preds, "step_id": step_id, "tool_id": tool_id}
                if positive:
                    specialist = entry
                elif specialist_negative is None:
                    specialist_negative = entry
            elif descriptor.task == "segmentation":
                for lesion in payload.get("lesions", []):
                    findings.lesion_evidence.append({**lesion, "step_id": step_id, "tool_id": tool_id})
            elif descriptor.capability == "vessel-quantification":
                findings.metrics.append({"kind": "vessel", "step_id": step_id,
                                         "tool_id": tool_id, **payload})
            elif descriptor.task == "regression":
                findings.metrics.append({"kind": "regression", "step_id": step_id,
                                         "tool_id": tool_id, **payload})
            elif descriptor.task == "detection":
                detections = payload.get("detections", [])
                if detections:
                    findings.metrics.append({"kind": "detection", "step_id": step_id,
                                             "tool_id": tool_id, "detections": detections})

        conflicts = conflicts if conflicts is not None else []
        self._resolve_conflicts(conflicts, rescreens, screening, trace)
        findings.conflicts = conflicts

        diagnosis_source = None
        if specialist is not None:
            diagnosis_source = specialist
        elif screening is not None:
            diagnosis_source = screening
        override = self._conflict_override(conflicts, screening, trace)
        if override is not None:
            diagnosis_source = override

        if diagnosis_source is not None:
            findings.diagnosis = [
                {**p, "step_id": diagnosis_source["step_id"], "tool_id": diagnosis_source["tool_id"]}
                for p in diagnosis_source["predictions"]
            ]
        if specialist_negative is not None and specialist is None:
            top = specialist_negative["predictions"][0]
            findings.notes.append(
                f"specialist verification negative: {specialist_negative['tool_id']} "
                f"reported {top['label']} ({top['probability']:.1%})"
            )

        if findings.quality and normalize_label(findings.quality["label"]) == "ungradable":
            findings.low_confidence = True
            findings.notes.append("image ungradable; diagnosis confidence downgraded")
        if any(c.resolution == "escalated_unresolved" for c in conflicts):
            findings.low_confidence = True
            findings.notes.append("unresolved tool conflict; findings need human review")
        if not findings.diagnosis and not findings.lesion_evidence and not findings.metrics:
            findings.notes.append("insufficient successful tool results for a diagnosis")
        return findings

    def _resolve_conflicts(
        self,
        conflicts: list[ConflictRecord],
        rescreens: Mapping[str, dict[str, Any]],
        screening: Optional[dict[str, Any]],
        trace: ReasoningTrace,
    ) -> None:
        for record in conflicts:
            if record.resolution is not None:
                continue
            scr_tool, scr_label, scr_p = record.parties[0]
            spec_tool, spec_label, spec_p = record.parties[1]
            verified = None
            for step_id in record.resolving_steps:
                if step_id in rescreens:
                    verified = rescreens[step_id]
            if verified is not None:
                if canonical_condition(verified["label"]) == canonical_condition(spec_label):
                    record.resolution = "generation_verified"
                elif spec_p >= scr_p:
                    record.resolution = "specialist_overrides"
                else:
                    record.resolution = "escalated_unresolved"
            elif spec_p >= scr_p:
                record.resolution = "specialist_overrides"
            else:
                record.resolution = "escalated_unresolved"

    def _conflict_override(
        self,
        conflicts: Sequence[ConflictRecord],
        screening: Optional[dict[str, Any]],
        trace: ReasoningTrace,
    ) -> Optional[dict[str, Any]]:
        """When a conflict resolves in the specialist's favor, its label wins."""
        for record in conflicts:
            if record.resolution not in ("specialist_overrides", "generation_verified"):
                continue
            spec_tool, spec_label, spec_p = record.parties[1]
            for event in trace.events:
                if event.kind != "invocation" or event.payload["tool_id"] != spec_tool:
                    continue
                result = event.payload.get("result", {})
                if result.get("status") == "ok":
                    return {
                        "predictions": result["payload"]["predictions"],
                        "step_id": event.payload["step_id"],
                        "tool_id": spec_tool,
                    }
        return None

    # -- response ------------------------------------------------------------

    def _ground_report(
        self,
        trace: ReasoningTrace,
        plan: ToolPlan,
        case: ClinicalCase,
        toolset: Toolset,
        intent: Intent,
        findings: IntegratedFindings,
        outcomes: list[StepOutcome],
    ) -> list[Any]:
        """Run the retrieval tool for report grounding when the policy says so."""
        policy = self.config.rag_policy
        fire = (
            ("report" in policy and findings.top_diagnosis() is not None)
            or ("education" in policy and intent.workflow == "MedicalEducation")
            or ("conflict" in policy and findings.conflicts)
        )
        if not fire:
            return []
        kb = next((t for t in toolset.tools if t.capability == "knowledge-retrieval"), None)
        if kb is None:
            return []
        top = findings.top_diagnosis()
        claim = top["label"] if top else case.query
        already = any(o.step.tool_id == kb.tool_id and o.step.stage_tag == "respond" for o in outcomes)
        if already:
            return []
        step = plan.add(PlanStep(
            step_id=f"g{len(plan.steps) + 1}", tool_id=kb.tool_id,
            input_bindings={"query": f"literal:{claim}"},
            rationale="ground the report's diagnosis in reference literature",
            stage_tag="respond", origin="revision",
        ))
        facts_sink: dict[str, Any] = {}
        self._execute_steps([step], plan, case, toolset, trace, outcomes, facts_sink)
        outcome = outcomes[-1]
        if not outcome.ok or self.knowledge_index is None:
            return []
        hits = []
        for raw in outcome.result.payload.get("hits", []):
            passage = self.knowledge_index.get(raw["passage_id"])
            if passage is not None:
                from .knowledge import RetrievalHit

                hits.append(RetrievalHit(passage=passage, score=raw["score"], rank=raw["rank"]))
        grounding = self.knowledge_index.ground(claim, hits)
        if grounding.supported:
            for source_id, passage_id in grounding.citations:
                trace.append("citation", {
                    "claim": claim, "source_id": source_id,
                    "passage_id": passage_id, "step_id": outcome.step.step_id,
                })
        return hits

    def respond(
        self,
        findings: IntegratedFindings,
        retrieved_passages: Sequence[Any],
        trace: ReasoningTrace,
    ) -> StructuredReport:
        """Compose the six-field structured report from integrated findings."""
        citations = {
            (e.payload["source_id"], e.payload["passage_id"]): e.payload
            for e in trace.events if e.kind == "citation"
        }

        if findings.modality:
            modality_text = _labelled(findings.modality)
        else:
            modality_text = "not determined (text-only query)" if not findings.quality else "not determined"

        if findings.quality:
            count = findings.quality.get("artifact_count") or 0
            quality_text = _labelled(findings.quality)
            if count:
                quality_text += f" with {count} artifacts"
        else:
            quality_text = "not assessed"

        if findings.laterality:
            if findings.laterality.get("probability") is not None:
                laterality_text = _labelled(findings.laterality)
            else:
                laterality_text = f"{findings.laterality['label']} (from metadata)"
        else:
            laterality_text = "Unknown"

        top = findings.top_diagnosis()
        if top:
            diagnosis_text = _labelled(top)
            if findings.low_confidence:
                diagnosis_text += " [low confidence]"
        else:
            diagnosis_text = "no diagnosis established (insufficient tool results)"

        evidence: list[EvidenceItem] = []
        cite_iter = iter(sorted(citations))
        first_citation = next(cite_iter, None)
        if findings.diagnosis:
            for pred in findings.diagnosis:
                evidence.append(EvidenceItem(
                    text=f"{pred['label']} at {pred['probability']:.1%} ({pred['tool_id']})",
                    step_id=pred["step_id"],
                    citation=first_citation,
                ))
                first_citation = None
        for lesion in findings.lesion_evidence:
            span = ""
            if lesion["count"]:
                span = f", area {lesion['area_min']:g}-{lesion['area_max']:g} px^2"
            evidence.append(EvidenceItem(
                text=f"{lesion['lesion_type']}: n={lesion['count']}{span}",
                step_id=lesion["step_id"],
            ))
        for metric in findings.metrics:
            evidence.append(EvidenceItem(text=_metric_text(metric), step_id=metric["step_id"]))
        for record in findings.conflicts:
            parties = ", ".join(f"{t}={l}" for t, l, _ in record.parties)
            if record.resolving_steps:
                step_ref = record.resolving_steps[0]
            elif findings.diagnosis:
                step_ref = findings.diagnosis[0]["step_id"]
            else:
                step_ref = _first_step_id(trace)
            evidence.append(EvidenceItem(
                text=f"conflict on {record.topic}: {parties}; resolution {record.resolution}",
                step_id=step_ref,
            ))
        for note in findings.notes:
            evidence.append(EvidenceItem(text=note, step_id=_first_step_id(trace)))
        if not evidence:
            evidence.append(EvidenceItem(
                text="no tool evidence available", step_id=_first_step_id(trace)))

        recommendations = self._recommend(top["label"] if top else None)

        return StructuredReport(
            modality=modality_text,
            image_quality=quality_text,
            laterality=laterality_text,
            diagnosis=diagnosis_text,
            evidence=tuple(evidence),
            recommendations=recommendations,
        )

    def _recommend(self, label: Optional[str]) -> str:
        table = self.config.recommendations
        if label is None:
            return DEFAULT_RECOMMENDATION
        canon = canonical_condition(label)
        if canon in table:
            return table[canon]
        for key, text in sorted(table.items()):
            if key != "normal" and key in canon:
                return text
        if canon == "normal":
            return NORMAL_RECOMMENDATION
        return table.get("default", DEFAULT_RECOMMENDATION)


def _labelled(entry: Mapping[str, Any]) -> str:
    return f"{entry['label']} ({entry['probability']:.1%})"


def _metric_text(metric: Mapping[str, Any]) -> str:
    if metric["kind"] == "vessel":
        return (
            f"vessel metrics: CRAE {metric['crae']:g} px, CRVE {metric['crve']:g} px, "
            f"AVR {metric['avr']:.3f}, vessel area density {metric['vessel_area_density']:g}%, "
            f"fractal dimension {metric['fractal_dimension_artery']:g}"
        )
    if metric["kind"] == "regression":
        scale = f" of {metric['scale_max']:g}" if metric.get("scale_max") else ""
        return f"{metric['quantity']}: {metric['value']:g}{scale}"
    if metric["kind"] == "detection":
        parts = ", ".join(
            f"{d['label']} ({d['confidence']:.0%})" for d in metric["detections"])
        return f"detections: {parts}"
    return str(metric)


def _first_step_id(trace: ReasoningTrace) -> str:
    for event in trace.events:
        if event.kind == "invocation":
            return event.payload["step_id"]
    # no invocations at all: reference the opening stage event instead
    return "event:0"
