"""Scoring machinery: tool-usage accuracy, diagnostic accuracy, ablation runs,
two-rater aggregation, checklist completeness, Wilson intervals, Cohen's kappa.

Metric reducers are associative and order-independent; ablation cases may run
concurrently and aggregate single-threaded at the end.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from statistics import NormalDist
from typing import Any, Iterable, Mapping, Optional, Sequence

from .core import OcuflowError, normalize_label

RATING_DIMENSIONS = ("accuracy", "completeness", "safety", "reasoning", "interpretability")

# common clinical synonyms folded before exact matching
DIAGNOSIS_ALIASES = {
    "wet amd": "wet age-related macular degeneration",
    "neovascular amd": "wet age-related macular degeneration",
    "neovascular age-related macular degeneration": "wet age-related macular degeneration",
    "dry amd": "dry age-related macular degeneration",
    "atrophic age-related macular degeneration": "dry age-related macular degeneration",
    "amd": "age-related macular degeneration",
    "dr": "diabetic retinopathy",
    "pdr": "proliferative diabetic retinopathy",
    "npdr": "nonproliferative diabetic retinopathy",
    "non-proliferative diabetic retinopathy": "nonproliferative diabetic retinopathy",
    "dme": "diabetic macular edema",
    "rvo": "retinal vein occlusion",
    "crvo": "central retinal vein occlusion",
    "brvo": "branch retinal vein occlusion",
    "csc": "central serous chorioretinopathy",
    "cscr": "central serous chorioretinopathy",
    "mh": "macular hole",
    "erm": "epiretinal membrane",
    "rd": "retinal detachment",
    "pm": "pathological myopia",
    "pathologic myopia": "pathological myopia",
    "healthy": "normal",
}


class MissingGroundTruthError(OcuflowError):
    pass


class RaterCountMismatchError(OcuflowError):
    pass


class UnknownItemIdError(OcuflowError):
    pass


class InvalidCountsError(OcuflowError):
    pass


class DegenerateMarginalsError(OcuflowError):
    pass


# ---------------------------------------------------------------------------
# Tool-usage accuracy

@dataclass(frozen=True)
class ToolGroundTruth:
    case_id: str
    expected_tools: frozenset[str]

    def __post_init__(self) -> None:
        if not self.expected_tools:
            raise InvalidCountsError(f"{self.case_id}: expected_tools must be non-empty")


@dataclass(frozen=True)
class ToolUsageScore:
    correct: int
    incorrect: int
    extra: int
    accuracy: float

    def to_dict(self) -> dict[str, Any]:
        return {
            "correct": self.correct, "incorrect": self.incorrect,
            "extra": self.extra, "accuracy": self.accuracy,
        }


def _invoked_tools(trace: Any) -> tuple[str, set[str]]:
    """Accept ReasoningTrace objects or (case_id, tool-ids) pairs."""
    if hasattr(trace, "invoked_tool_ids"):
        return trace.case_id, set(trace.invoked_tool_ids())
    case_id, tools = trace
    return case_id, set(tools)


def tool_usage_accuracy(traces: Iterable[Any], gts: Iterable[ToolGroundTruth]) -> ToolUsageScore:
    """Correct = invoked∩expected summed over cases; extras never enter the denominator."""
    by_case = {gt.case_id: gt for gt in gts}
    correct = incorrect = extra = 0
    for trace in traces:
        case_id, invoked = _invoked_tools(trace)
        gt = by_case.get(case_id)
        if gt is None:
            raise MissingGroundTruthError(case_id)
        correct += len(invoked & gt.expected_tools)
        incorrect += len(gt.expected_tools - invoked)
        extra += len(invoked - gt.expected_tools)
    denominator = correct + incorrect
    accuracy = correct / denominator if denominator else 0.0
    return ToolUsageScore(correct=correct, incorrect=incorrect, extra=extra, accuracy=accuracy)


# ---------------------------------------------------------------------------
# Diagnostic accuracy

def normalize_diagnosis(label: str, aliases: Optional[Mapping[str, str]] = None) -> str:
    canon = normalize_label(label)
    table = DIAGNOSIS_ALIASES if aliases is None else aliases
    return table.get(canon, canon)


def diagnostic_accuracy(
    predictions: Sequence[tuple[str, str]],
    gt: Sequence[tuple[str, str]],
    aliases: Optional[Mapping[str, str]] = None,
) -> float:
    """Exact normalized match; subtype or grading discrepancies count as wrong."""
    truth = {case_id: label for case_id, label in gt}
    if not predictions:
        return 0.0
    hits = 0
    for case_id, label in predictions:
        if case_id not in truth:
            raise MissingGroundTruthError(case_id)
        if normalize_diagnosis(label, aliases) == normalize_diagnosis(truth[case_id], aliases):
            hits += 1
    return hits / len(predictions)


# ---------------------------------------------------------------------------
# Ablation

@dataclass
class TierResult:
    tier: int
    n_cases: int
    n_correct: int
    accuracy: float
    per_modality: dict[str, dict[str, Any]] = field(default_factory=dict)
    labels: list[tuple[str, str]] = field(default_factory=list)  # (case_id, predicted label)

    def to_dict(self) -> dict[str, Any]:
        return {
            "tier": self.tier, "n_cases": self.n_cases, "n_correct": self.n_correct,
            "accuracy": self.accuracy, "per_modality": self.per_modality,
            "labels": [list(pair) for pair in self.labels],
        }


@dataclass
class AblationResult:
    tiers: list[TierResult] = field(default_factory=list)
    errors: list[dict[str, Any]] = field(default_factory=list)

    def to_dict(self) -> dict[str, Any]:
        return {"tiers": [t.to_dict() for t in self.tiers], "errors": self.errors}

    def table(self) -> str:
        lines = [f"{'tier':>4}  {'cases':>5}  {'correct':>7}  {'accuracy':>8}"]
        for t in self.tiers:
            lines.append(f"{t.tier:>4}  {t.n_cases:>5}  {t.n_correct:>7}  {t.accuracy:>8.4f}")
        return "\n".join(lines)


def run_ablation(
    corpus: Sequence[Any],
    tiers: Sequence[int],
    orchestrate,
    seed: int = 0,
) -> AblationResult:
    """Orchestrate every case per tier and score exact diagnostic agreement.

    `orchestrate(case, tier, seed)` must return an object exposing
    `diagnosis_label` and `trace`; per-case failures land in the errors
    section and the run continues.
    """
    result = AblationResult()
    for tier in tiers:
        labels: list[tuple[str, str]] = []
        per_modality: dict[str, list[tuple[str, bool]]] = {}
        correct = 0
        scored = 0
        for case in corpus:
            if case.ground_truth is None or not case.ground_truth.diagnosis:
                result.errors.append({"tier": tier, "case_id": case.case_id,
                                      "error": "missing ground truth"})
                continue
            try:
                run = orchestrate(case, tier, seed)
            except Exception as exc:
                result.errors.append({"tier": tier, "case_id": case.case_id, "error": str(exc)})
                continue
            predicted = run.diagnosis_label or ""
            scored += 1
            labels.append((case.case_id, predicted))
            hit = normalize_diagnosis(predicted) == normalize_diagnosis(case.ground_truth.diagnosis)
            if hit:
                correct += 1
            modality = case.ground_truth.modality or "unknown"
            per_modality.setdefault(modality, []).append((case.case_id, hit))
        breakdown = {
            modality: {
                "n_cases": len(rows),
                "n_correct": sum(1 for _, hit in rows if hit),
                "accuracy": sum(1 for _, hit in rows if hit) / len(rows),
            }
            for modality, rows in sorted(per_modality.items())
        }
        result.tiers.append(TierResult(
            tier=tier, n_cases=scored, n_correct=correct,
            accuracy=correct / scored if scored else 0.0,
            per_modality=breakdown, labels=labels,
        ))
    return result


# ---------------------------------------------------------------------------
# Expert ratings

@dataclass(frozen=True)
class RatingRecord:
    case_id: str
    rater_id: str
    scores: Mapping[str, int]

    def __post_init__(self) -> None:
        missing = [d for d in RATING_DIMENSIONS if d not in self.scores]
        if missing:
            raise RaterCountMismatchError(
                f"{self.case_id}/{self.rater_id}: missing dimension(s) {missing}")
        bad = {d: v for d, v in self.scores.items() if v not in (1, 2, 3)}
        if bad:
            raise InvalidCountsError(f"{self.case_id}/{self.rater_id}: scores outside 1..3: {bad}")


def aggregate_ratings(
    records: Sequence[RatingRecord],
    subgroups: Optional[Mapping[str, str]] = None,
) -> dict[str, Any]:
    """Two raters per case; discrepancies resolve to the lower score."""
    by_case: dict[str, list[RatingRecord]] = {}
    for record in records:
        by_case.setdefault(record.case_id, []).append(record)
    for case_id, rows in by_case.items():
        if len(rows) != 2:
            raise RaterCountMismatchError(f"{case_id}: expected 2 raters, got {len(rows)}")

    consensus: dict[str, dict[str, int]] = {}
    for case_id, (a, b) in sorted(by_case.items()):
        consensus[case_id] = {
            d: min(a.scores[d], b.scores[d]) for d in RATING_DIMENSIONS
        }

    n = len(consensus)
    per_dimension = {}
    for d in RATING_DIMENSIONS:
        values = [scores[d] for scores in consensus.values()]
        per_dimension[d] = {
            "acceptable_or_better_pct": 100.0 * sum(v >= 2 for v in values) / n if n else 0.0,
            "good_pct": 100.0 * sum(v >= 3 for v in values) / n if n else 0.0,
        }

    totals = {case_id: sum(scores.values()) for case_id, scores in consensus.items()}
    out: dict[str, Any] = {
        "n_cases": n,
        "per_dimension": per_dimension,
        "mean_total": sum(totals.values()) / n if n else 0.0,
    }
    if subgroups:
        grouped: dict[str, list[int]] = {}
        for case_id, total in totals.items():
            grouped.setdefault(subgroups.get(case_id, "unknown"), []).append(total)
        out["subgroup_mean_total"] = {
            group: sum(values) / len(values) for group, values in sorted(grouped.items())
        }
    return out


# ---------------------------------------------------------------------------
# Checklist completeness

@dataclass(frozen=True)
class ChecklistItem:
    item_id: str
    description: str
    applicable_conditions: tuple[str, ...] = ()  # empty = applicable to every case


@dataclass
class ChecklistRubric:
    items: list[ChecklistItem]

    def __post_init__(self) -> None:
        ids = [i.item_id for i in self.items]
        if len(ids) != len(set(ids)):
            raise InvalidCountsError("rubric item_ids must be unique")
        self._by_id = {i.item_id: i for i in self.items}

    def __len__(self) -> int:
        return len(self.items)

    def __contains__(self, item_id: str) -> bool:
        return item_id in self._by_id

    def applicable_for(self, condition: str) -> frozenset[str]:
        canon = normalize_diagnosis(condition)
        return frozenset(
            i.item_id for i in self.items
            if not i.applicable_conditions or canon in i.applicable_conditions
        )

    @classmethod
    def from_dict(cls, doc: Mapping[str, Any]) -> "ChecklistRubric":
        return cls(items=[
            ChecklistItem(
                item_id=raw["item_id"], description=raw["description"],
                applicable_conditions=tuple(raw.get("applicable_conditions", ())),
            )
            for raw in doc["items"]
        ])


def score_checklist(
    report_items_hit: Iterable[str],
    rubric: ChecklistRubric,
    applicable: Iterable[str],
) -> float:
    """Normalized completeness: |hits| / |applicable|, each item 1 or 0."""
    applicable_set = set(applicable)
    for item_id in applicable_set:
        if item_id not in rubric:
            raise UnknownItemIdError(item_id)
    hits = set(report_items_hit)
    outside = hits - applicable_set
    if outside:
        raise UnknownItemIdError(f"hit items outside the applicable set: {sorted(outside)}")
    if not applicable_set:
        raise InvalidCountsError("applicable set must be non-empty")
    return len(hits) / len(applicable_set)


# ---------------------------------------------------------------------------
# Statistics

def wilson_interval(successes: int, n: int, level: float = 0.95) -> tuple[float, float]:
    """Wilson score interval for a binomial proportion.

    Boundary cases are exact: successes == 0 pins the lower bound to 0.0 and
    successes == n pins the upper bound to 1.0.
    """
    if n < 1 or not 0 <= successes <= n:
        raise InvalidCountsError(f"successes={successes}, n={n}")
    if not 0.0 < level < 1.0:
        raise InvalidCountsError(f"level={level}")
    z = NormalDist().inv_cdf((1.0 + level) / 2.0)
    p = successes / n
    denom = 1.0 + z * z / n
    center = (p + z * z / (2 * n)) / denom
    half = z * math.sqrt(p * (1.0 - p) / n + z * z / (4 * n * n)) / denom
    lo = 0.0 if successes == 0 else max(0.0, center - half)
    hi = 1.0 if successes == n else min(1.0, center + half)
    return lo, hi


def cohen_kappa(table: Sequence[Sequence[float]]) -> float:
    """Chance-corrected agreement from a square contingency table.

    Any table with zero off-diagonal mass scores exactly 1.0; tables whose
    expected agreement is 1 without perfect agreement raise
    DegenerateMarginalsError (kappa undefined).
    """
    k = len(table)
    if k == 0 or any(len(row) != k for row in table):
        raise InvalidCountsError("table must be square and non-empty")
    if any(v < 0 for row in table for v in row):
        raise InvalidCountsError("table entries must be non-negative")
    total = float(sum(sum(row) for row in table))
    if total <= 0:
        raise InvalidCountsError("table total must be positive")
    off_diagonal = sum(table[i][j] for i in range(k) for j in range(k) if i != j)
    if off_diagonal == 0:
        return 1.0
    p_o = sum(table[i][i] for i in range(k)) / total
    row_sums = [sum(row) for row in table]
    col_sums = [sum(table[i][j] for i in range(k)) for j in range(k)]
    p_e = sum(row_sums[i] * col_sums[i] for i in range(k)) / (total * total)
    if p_e == 1.0:
        raise DegenerateMarginalsError("expected agreement is 1; kappa undefined")
    return (p_o - p_e) / (1.0 - p_e)
