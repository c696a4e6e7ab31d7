"""Planning: query interpretation, initial plans, and revision proposals.

The rule planner is the reference implementation. An LLM-backed planner can be
slotted in through the same PlannerProvider surface; a recorded-response stub
ships for tests.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Any, Mapping, Optional, Protocol, Sequence

from .core import ClinicalCase, normalize_label
from .plans import ConflictRecord, Intent, PlanStep, ToolPlan
from .registry import ToolDescriptor, Toolset

FUNDUS_MODALITIES = ("CFP", "SLO", "UWF-SLO", "FAF", "FFA", "ICGA")

DEFAULT_CONFLICT_MARGIN = 0.2
DEFAULT_REVISION_ROUNDS = 2
DEFAULT_VERIFICATION_CONDITIONS = (
    "diabetic retinopathy",
    "age-related macular degeneration",
    "glaucoma",
)


@dataclass
class PlannerConfig:
    conflict_margin: float = DEFAULT_CONFLICT_MARGIN
    revision_rounds: int = DEFAULT_REVISION_ROUNDS
    normal_verification_conditions: tuple[str, ...] = DEFAULT_VERIFICATION_CONDITIONS


def is_negative_label(label: str) -> bool:
    canon = normalize_label(label)
    return canon in ("normal", "healthy", "no abnormality") or canon.startswith("no ")


def canonical_condition(label: str) -> str:
    """Collapse negative findings onto "normal" for agreement checks."""
    return "normal" if is_negative_label(label) else normalize_label(label)


# ---------------------------------------------------------------------------
# Query interpretation vocabularies

_SYSTEMIC_TRIGGERS = ("cardiovascular", "cvd", "retinal age", "systemic", "stroke", "blood pressure")
_QUANT_TRIGGERS = ("count", "how many", "measure", "quantify", "diameter", "area of")
_EDU_TRIGGERS = ("3d", "three-dimensional", "teach", "explain", "education", "tutorial",
                 "show me", "what is a", "eye shape", "eyeball shape", "anatomy")
_CONFLICT_TRIGGERS = ("second opinion", "conflict", "disagree", "reconcile",
                      "double-check", "double check", "cross-check", "compare tools")
_REPORT_TRIGGERS = ("report", "assessment")
_REFERRAL_TRIGGERS = ("should i", "refer", "urgent", "see a doctor", "what to do")

_LESION_VOCAB = (
    "drusen", "microaneurysm", "hemorrhage", "hard exudate", "exudate",
    "cotton wool", "cotton-wool", "retinal fluid", "fluid", "neovascularization",
    "laser spot", "artifact", "vessel", "leakage", "atrophy", "nicking",
)

_CONDITION_MENTIONS: dict[str, str] = {
    "macular disease": "age-related macular degeneration",
    "macular degeneration": "age-related macular degeneration",
    "amd": "age-related macular degeneration",
    "diabetic": "diabetic retinopathy",
    "diabetes": "diabetic retinopathy",
    "glaucoma": "glaucoma",
    "myopia": "pathological myopia",
    "vein occlusion": "retinal vein occlusion",
    "macular hole": "macular hole",
    "detachment": "retinal detachment",
    "epiretinal": "epiretinal membrane",
    "serous": "central serous chorioretinopathy",
}

_GEN_MODALITY_RE = re.compile(r"(?:generate|synthesi[sz]e)\b.*?\b(ffa|oct|icga|faf)\b", re.S)
_HORIZON_RE = re.compile(r"(\d+)\s*-?\s*year")


def interpret_query(case: ClinicalCase) -> Intent:
    """Deterministic keyword mapping of the free-text query onto a workflow."""
    q = case.query.lower()
    params: dict[str, Any] = {}

    mentions = sorted({cond for kw, cond in _CONDITION_MENTIONS.items() if kw in q})
    if mentions:
        params["mentions"] = mentions
    gen = _GEN_MODALITY_RE.search(q)
    if gen:
        params["generate_modality"] = gen.group(1).upper()
    if any(t in q for t in _REPORT_TRIGGERS):
        params["report"] = True
    if any(t in q for t in _REFERRAL_TRIGGERS):
        params["referral"] = True

    if any(t in q for t in _SYSTEMIC_TRIGGERS):
        workflow = "CrossSpecialtyLongitudinal"
        horizon = _HORIZON_RE.search(q)
        if horizon:
            params["horizon"] = f"{horizon.group(1)}y"
    elif any(t in q for t in _QUANT_TRIGGERS):
        workflow = "QuantitativeAnalysis"
        for lesion in _LESION_VOCAB:
            if lesion in q:
                params["lesion"] = lesion
                break
    elif any(t in q for t in _EDU_TRIGGERS):
        workflow = "MedicalEducation"
    elif any(t in q for t in _CONFLICT_TRIGGERS):
        workflow = "ConflictResolution"
    else:
        workflow = "HierarchicalDecision"

    return Intent(workflow=workflow, task_params=params, raw_query=case.query)


# ---------------------------------------------------------------------------
# Planner seam

@dataclass
class StepOutcome:
    step: PlanStep
    result: Optional[Any] = None  # adapters.InvocationResult once invoked
    skipped_reason: Optional[str] = None

    @property
    def ok(self) -> bool:
        return self.result is not None and getattr(self.result, "status", None) == "ok"


@dataclass
class RevisionContext:
    intent: Intent
    case: ClinicalCase
    toolset: Toolset
    facts: Mapping[str, Any]
    outcomes: Sequence[StepOutcome]
    conflicts: Sequence[ConflictRecord]
    round: int
    config: PlannerConfig


@dataclass
class RevisionProposal:
    steps: list[PlanStep] = field(default_factory=list)
    conflicts: list[ConflictRecord] = field(default_factory=list)
    notes: list[str] = field(default_factory=list)


class PlannerProvider(Protocol):
    def interpret(self, case: ClinicalCase) -> Intent: ...

    def propose_plan(self, intent: Intent, case: ClinicalCase, toolset: Toolset) -> ToolPlan: ...

    def propose_revision(self, ctx: RevisionContext) -> RevisionProposal: ...


# ---------------------------------------------------------------------------
# Rule planner

class RulePlanner:
    """Deterministic reference planner implementing the staged triage chain."""

    def __init__(self, config: Optional[PlannerConfig] = None):
        self.config = config or PlannerConfig()

    def interpret(self, case: ClinicalCase) -> Intent:
        return interpret_query(case)

    # -- initial plan -------------------------------------------------------

    def propose_plan(self, intent: Intent, case: ClinicalCase, toolset: Toolset) -> ToolPlan:
        plan = ToolPlan()
        counter = _StepCounter()

        def first_with(capability: str) -> Optional[ToolDescriptor]:
            tools = [t for t in toolset.tools if t.capability == capability]
            return tools[0] if tools else None

        if case.images:
            image = case.images[0].image_id
            image_binding = f"case:image:{image}"

            mod = first_with("modality-recognition")
            s_mod = None
            if mod is not None:
                s_mod = plan.add(PlanStep(
                    step_id=counter.next(), tool_id=mod.tool_id,
                    input_bindings={"image_id": image_binding},
                    rationale="determine the imaging modality before routing",
                ))
            else:
                plan.warnings.append("no modality-recognition tool in the active toolset")

            chain_deps = (s_mod.step_id,) if s_mod else ()
            qual = first_with("quality-assessment")
            s_qual = None
            if qual is not None:
                s_qual = plan.add(PlanStep(
                    step_id=counter.next(), tool_id=qual.tool_id,
                    input_bindings={"image_id": image_binding},
                    rationale="check the image is clinically gradable",
                    depends_on=chain_deps,
                ))
            lat = first_with("laterality")
            if lat is not None:
                plan.add(PlanStep(
                    step_id=counter.next(), tool_id=lat.tool_id,
                    input_bindings={"image_id": image_binding},
                    rationale="identify which eye the image depicts",
                    depends_on=chain_deps,
                ))
            scr = first_with("screening")
            s_scr = None
            if scr is not None:
                screen_deps = tuple(s.step_id for s in (s_mod, s_qual) if s is not None)
                s_scr = plan.add(PlanStep(
                    step_id=counter.next(), tool_id=scr.tool_id,
                    input_bindings={"image_id": image_binding},
                    rationale="broad condition screening for triage",
                    depends_on=screen_deps,
                ))
            else:
                plan.warnings.append("no general screening tool in the active toolset")

            after_screen = (s_scr.step_id,) if s_scr else chain_deps

            if intent.workflow == "CrossSpecialtyLongitudinal":
                added = False
                for capability in ("vessel-quantification", "nicking-detection", "risk-regression"):
                    tool = first_with(capability)
                    if tool is None:
                        continue
                    added = True
                    plan.add(PlanStep(
                        step_id=counter.next(), tool_id=tool.tool_id,
                        input_bindings={"image_id": image_binding},
                        rationale="ocular biomarkers for systemic risk assessment",
                        depends_on=after_screen,
                    ))
                if "retinal age" in intent.raw_query.lower():
                    tool = first_with("age-regression")
                    if tool is not None:
                        added = True
                        plan.add(PlanStep(
                            step_id=counter.next(), tool_id=tool.tool_id,
                            input_bindings={"image_id": image_binding},
                            rationale="retinal age estimation",
                            depends_on=after_screen,
                        ))
                if not added:
                    plan.warnings.append("no applicable cross-specialty tools in the active toolset")

            if intent.workflow == "MedicalEducation":
                tool = first_with("3d-reconstruction")
                if tool is not None:
                    plan.add(PlanStep(
                        step_id=counter.next(), tool_id=tool.tool_id,
                        input_bindings={"image_id": image_binding},
                        rationale="three-dimensional globe reconstruction for teaching",
                        depends_on=after_screen,
                    ))
                else:
                    plan.warnings.append("no 3d-reconstruction tool in the active toolset")

            target = intent.task_params.get("generate_modality")
            if target:
                gen = next((t for t in toolset.tools
                            if t.capability == "cross-modality-synthesis"
                            and getattr(t, "target_modality", None) == target), None)
                if gen is not None:
                    plan.add(PlanStep(
                        step_id=counter.next(), tool_id=gen.tool_id,
                        input_bindings={"image_id": image_binding},
                        rationale=f"synthesize a {target} view for cross-modality reading",
                        depends_on=after_screen,
                    ))
                else:
                    plan.warnings.append(f"no generation tool producing {target} in the active toolset")

            if intent.task_params.get("referral"):
                tool = first_with("referral-triage")
                if tool is not None:
                    plan.add(PlanStep(
                        step_id=counter.next(), tool_id=tool.tool_id,
                        input_bindings={"image_id": image_binding},
                        rationale="triage the referral urgency",
                        depends_on=after_screen,
                    ))

            if intent.workflow == "QuantitativeAnalysis" and not any(
                    t.task == "segmentation" for t in toolset.tools):
                plan.warnings.append("no segmentation tools for quantitative analysis in the active toolset")

        if intent.workflow == "MedicalEducation" or not case.images:
            kb = next((t for t in toolset.tools if t.capability == "knowledge-retrieval"), None)
            if kb is not None:
                plan.add(PlanStep(
                    step_id=counter.next(), tool_id=kb.tool_id,
                    input_bindings={"query": "case:query"},
                    rationale="ground the answer in reference literature",
                ))
            elif not case.images:
                plan.warnings.append("text-only case but no retrieval tool in the active toolset")

        if not plan.steps:
            plan.warnings.append("no applicable tools; emitting an empty plan")
        return plan

    # -- revision -----------------------------------------------------------

    def propose_revision(self, ctx: RevisionContext) -> RevisionProposal:
        proposal = RevisionProposal()
        counter = _StepCounter(prefix=f"r{ctx.round}-")
        planned = {o.step.tool_id for o in ctx.outcomes}
        queued: set[str] = set()
        facts = ctx.facts
        modality = facts.get("modality")
        case_image = ctx.case.images[0].image_id if ctx.case.images else None
        image_binding = f"case:image:{case_image}" if case_image else None

        def tool_available(tool: ToolDescriptor) -> bool:
            return tool.tool_id not in planned and tool.tool_id not in queued

        def queue(tool: ToolDescriptor, bindings: Mapping[str, str], rationale: str,
                  deps: tuple[str, ...], assume: Optional[Mapping[str, str]] = None) -> PlanStep:
            queued.add(tool.tool_id)
            step = PlanStep(
                step_id=counter.next(), tool_id=tool.tool_id,
                input_bindings=dict(bindings), rationale=rationale,
                origin="revision", depends_on=deps,
                assume_facts=dict(assume or {}),
            )
            proposal.steps.append(step)
            return step

        def specialists_for(condition: str) -> list[ToolDescriptor]:
            return [
                t for t in ctx.toolset.tools
                if t.task == "classification" and t.capability == "disease-specific"
                and t.addresses(condition) and modality and t.accepts_modality(modality)
                and tool_available(t)
            ]

        def segmenters_for(condition: str, target_modality: str) -> list[ToolDescriptor]:
            return [
                t for t in ctx.toolset.tools
                if t.task == "segmentation" and t.addresses(condition)
                and t.accepts_modality(target_modality) and tool_available(t)
            ]

        screening = _outcome_with_capability(ctx, "screening")
        screening_step_deps: tuple[str, ...] = ()
        screening_top: Optional[tuple[str, float]] = None
        alternatives: list[tuple[str, float]] = []
        if screening is not None and screening.ok:
            screening_step_deps = (screening.step.step_id,)
            preds = screening.result.payload["predictions"]
            screening_top = (preds[0]["label"], preds[0]["probability"])
            alternatives = [(p["label"], p["probability"]) for p in preds[1:]]

        def specialist_already_ran(condition: str) -> bool:
            for outcome in ctx.outcomes:
                tool = ctx.toolset.get(outcome.step.tool_id)
                if (tool is not None and tool.capability == "disease-specific"
                        and tool.addresses(condition) and outcome.ok):
                    return True
            return False

        # Specialist rule: refine the screening impression with disease-specific
        # classifiers and matching segmenters for the confirmed modality.
        if screening_top is not None and modality and image_binding:
            top_label, _ = screening_top
            if not is_negative_label(top_label):
                self._queue_specialist_chain(
                    top_label, specialists_for, segmenters_for, queue,
                    image_binding, modality, screening_step_deps,
                    f"screening suggests {top_label}; verify at specialist level",
                    already_verified=specialist_already_ran(top_label),
                )
            else:
                for alt_label, _alt_p in alternatives:
                    if is_negative_label(alt_label):
                        continue
                    self._queue_specialist_chain(
                        alt_label, specialists_for, segmenters_for, queue,
                        image_binding, modality, screening_step_deps,
                        f"screening surfaced {alt_label} above threshold; rule it out",
                        already_verified=specialist_already_ran(alt_label),
                    )
                mentions = ctx.intent.task_params.get("mentions", [])
                if mentions:
                    verify = sorted(set(mentions) | set(ctx.config.normal_verification_conditions))
                    for condition in verify:
                        for tool in specialists_for(condition):
                            queue(tool, {"image_id": image_binding},
                                  f"query mentions {condition}; verify the normal screening result",
                                  screening_step_deps)

        # Refined-label rule: once a specialist returns a positive subtype that
        # differs from the screening label, segment for the refined label too.
        refined = self._working_condition(ctx, None)
        if (refined is not None and modality and image_binding and screening_top is not None
                and normalize_label(refined) != normalize_label(screening_top[0])):
            for tool in segmenters_for(refined, modality):
                queue(tool, {"image_id": image_binding},
                      f"segment {refined} findings for quantitative evidence",
                      screening_step_deps)

        # Artifact rule: visible artifacts get segmented so the report can cite them.
        artifact_count = facts.get("artifact_count")
        if artifact_count and modality and image_binding:
            for tool in segmenters_for("artifacts", modality):
                queue(tool, {"image_id": image_binding},
                      f"quality assessment reported {artifact_count} artifacts",
                      screening_step_deps)

        # Quantitative intent: segment the requested lesion type.
        lesion = ctx.intent.task_params.get("lesion")
        if lesion and modality and image_binding:
            for tool in segmenters_for(lesion, modality):
                queue(tool, {"image_id": image_binding},
                      f"quantitative analysis of {lesion}", screening_step_deps)

        # Report request: the modality-specific report generator, once the
        # modality is confirmed.
        if ctx.intent.task_params.get("report") and modality and image_binding:
            for tool in ctx.toolset.tools:
                if (tool.capability == "report-generation"
                        and tool.accepts_modality(modality) and tool_available(tool)):
                    queue(tool, {"image_id": image_binding},
                          "compose the modality-specific narrative report",
                          screening_step_deps)
                    break

        # Conflict rule: a specialist disputing the screening impression above
        # the margin is recorded and, when possible, cross-checked through
        # cross-modality generation plus a re-screen of the synthetic view.
        if screening_top is not None:
            conflicted_tools = {
                party[0] for record in ctx.conflicts for party in record.parties
            }
            for outcome in ctx.outcomes:
                tool = ctx.toolset.get(outcome.step.tool_id)
                if tool is None or tool.capability != "disease-specific" or not outcome.ok:
                    continue
                if tool.tool_id in conflicted_tools:
                    continue
                preds = outcome.result.payload["predictions"]
                spec_label, spec_p = preds[0]["label"], preds[0]["probability"]
                scr_label, scr_p = screening_top
                same_family = (
                    normalize_label(spec_label) in tool.conditions
                    and normalize_label(scr_label) in tool.conditions
                )
                if (canonical_condition(spec_label) != canonical_condition(scr_label)
                        and not same_family
                        and spec_p >= ctx.config.conflict_margin
                        and scr_p >= ctx.config.conflict_margin):
                    record = ConflictRecord(
                        topic="diagnosis",
                        parties=[
                            (screening.step.tool_id, scr_label, scr_p),
                            (tool.tool_id, spec_label, spec_p),
                        ],
                    )
                    if modality and image_binding:
                        gens = [
                            t for t in ctx.toolset.tools
                            if t.capability == "cross-modality-synthesis"
                            and t.accepts_modality(modality) and tool_available(t)
                        ]
                        if gens:
                            gen_step = queue(
                                gens[0], {"image_id": image_binding},
                                "synthesize a second modality to arbitrate the conflict",
                                (outcome.step.step_id,),
                            )
                            target = getattr(gens[0], "target_modality", None) or modality
                            rescreen = queue(
                                ctx.toolset.get(screening.step.tool_id),
                                {"image_id": f"step:{gen_step.step_id}:artifact_image_id"},
                                "re-screen the synthetic view for cross-modality validation",
                                (gen_step.step_id,),
                                assume={"modality": target},
                            )
                            record.resolving_steps = [gen_step.step_id, rescreen.step_id]
                    proposal.conflicts.append(record)

        # Generated artifacts are re-analyzable: segment the synthetic view for
        # the working condition once generation has finished. When a specialist
        # was queued this round, wait for its refined label first.
        specialist_just_queued = any(
            t.capability == "disease-specific"
            for tid in queued
            if (t := ctx.toolset.get(tid)) is not None
        )
        working = self._working_condition(ctx, screening_top)
        if working is not None and not specialist_just_queued:
            for outcome in ctx.outcomes:
                if not outcome.ok or not outcome.result.payload:
                    continue
                artifact_image = outcome.result.payload.get("artifact_image_id")
                if not artifact_image:
                    continue
                tool = ctx.toolset.get(outcome.step.tool_id)
                target = tool.target_modality if tool else None
                if not target:
                    continue
                for seg in segmenters_for(working, target):
                    queue(seg, {"image_id": f"step:{outcome.step.step_id}:artifact_image_id"},
                          f"label {working} findings on the synthetic {target} view",
                          (outcome.step.step_id,), assume={"modality": target})

        return proposal

    def _queue_specialist_chain(self, condition, specialists_for, segmenters_for, queue,
                                image_binding, modality, deps, rationale,
                                already_verified: bool = False) -> None:
        specialists = specialists_for(condition)
        for tool in specialists:
            queue(tool, {"image_id": image_binding}, rationale, deps)
        # matching segmenters ride along with the specialist, not on their own
        if specialists or already_verified:
            for tool in segmenters_for(condition, modality):
                queue(tool, {"image_id": image_binding},
                      f"segment {condition} findings for quantitative evidence", deps)

    def _working_condition(self, ctx: RevisionContext, screening_top) -> Optional[str]:
        best = None
        for outcome in ctx.outcomes:
            tool = ctx.toolset.get(outcome.step.tool_id)
            if tool is None or tool.capability != "disease-specific" or not outcome.ok:
                continue
            label = outcome.result.payload["predictions"][0]["label"]
            if not is_negative_label(label) and normalize_label(label) in tool.conditions:
                best = label
        if best is not None:
            return best
        if screening_top is not None and not is_negative_label(screening_top[0]):
            return screening_top[0]
        return None



class _StepCounter:
    def __init__(self, prefix: str = "s"):
        self.prefix = prefix
        self.n = 0

    def next(self) -> str:
        self.n += 1
        return f"{self.prefix}{self.n}"


# ---------------------------------------------------------------------------
# Recorded-response stub (LLM planner seam)

class StubPlanner:
    """Replays recorded planner responses; useful where an LLM planner would sit."""

    def __init__(self, recording: Optional[Mapping[str, Any]] = None):
        self.recording = recording or {}
        self._revision_cursor = 0

    def interpret(self, case: ClinicalCase) -> Intent:
        raw = self.recording.get("intent")
        if raw:
            return Intent(workflow=raw["workflow"], task_params=raw.get("task_params", {}),
                          raw_query=case.query)
        return interpret_query(case)

    def propose_plan(self, intent: Intent, case: ClinicalCase, toolset: Toolset) -> ToolPlan:
        plan = ToolPlan()
        for raw in self.recording.get("plan", []):
            plan.add(PlanStep(
                step_id=raw["step_id"], tool_id=raw["tool_id"],
                input_bindings=raw.get("input_bindings", {}),
                rationale=raw.get("rationale", "recorded step"),
                depends_on=tuple(raw.get("depends_on", ())),
                assume_facts=raw.get("assume_facts", {}),
            ))
        if not plan.steps:
            plan.warnings.append("stub planner has no recorded plan; emitting an empty plan")
        return plan

    def propose_revision(self, ctx: RevisionContext) -> RevisionProposal:
        recorded = self.recording.get("revisions", [])
        if self._revision_cursor >= len(recorded):
            return RevisionProposal()
        batch = recorded[self._revision_cursor]
        self._revision_cursor += 1
        proposal = RevisionProposal()
        for raw in batch:
            proposal.steps.append(PlanStep(
                step_id=raw["step_id"], tool_id=raw["tool_id"],
                input_bindings=raw.get("input_bindings", {}),
                rationale=raw.get("rationale", "recorded revision"),
                origin="revision",
                depends_on=tuple(raw.get("depends_on", ())),
            ))
        return proposal


def _outcome_with_capability(ctx: RevisionContext, capability: str) -> Optional[StepOutcome]:
    for outcome in ctx.outcomes:
        tool = ctx.toolset.get(outcome.step.tool_id)
        if tool is not None and tool.capability == capability:
            return outcome
    return None
