"""Shared domain vocabulary: cases, modalities, tool outputs, and reports.

Everything here is immutable after construction and safe to hand between
concurrent executors; the operations are pure functions.
"""

from __future__ import annotations

import json
import math
import re
from dataclasses import dataclass
from typing import Any, Mapping, Optional, Sequence


class OcuflowError(Exception):
    """Base class for all package errors."""


class EmptyInputError(OcuflowError):
    pass


class InvalidProbabilityError(OcuflowError):
    pass


class InvariantError(OcuflowError):
    """A typed value violates one of its construction invariants."""


class NegativeAreaError(OcuflowError):
    pass


class SchemaViolationError(OcuflowError):
    """Raised with the dotted field path of the first offending field."""

    def __init__(self, path: str, message: str = ""):
        self.path = path
        super().__init__(f"{path}: {message}" if message else path)


class DuplicateImageIdError(OcuflowError):
    pass


class ZeroVenularCaliberError(OcuflowError):
    pass


# ---------------------------------------------------------------------------
# Modalities and laterality

BASE_MODALITIES = (
    "CFP", "OCT", "FFA", "ICGA", "SLO", "UWF-SLO", "FAF", "MRI", "slit-lamp",
)
UNKNOWN = "Unknown"

LATERALITIES = ("OD", "OS", UNKNOWN)

_modality_codes: set[str] = set(BASE_MODALITIES)


def register_modality(code: str) -> None:
    """Extend the modality catalog (codes are case-sensitive and unique)."""
    if code and code != UNKNOWN:
        _modality_codes.add(code)


def known_modalities() -> frozenset[str]:
    return frozenset(_modality_codes)


@dataclass(frozen=True)
class Modality:
    """A catalog modality code, or the explicit Unknown variant."""

    code: str

    @property
    def is_unknown(self) -> bool:
        return self.code == UNKNOWN


def parse_modality(code: Optional[str]) -> Modality:
    """Map a raw code to a catalog modality; unknown codes become Unknown."""
    if code is None or code not in _modality_codes:
        return Modality(UNKNOWN)
    return Modality(code)


def normalize_label(label: str) -> str:
    """Canonical form for opaque condition/modality labels: lowercase, collapsed whitespace."""
    return re.sub(r"\s+", " ", label.strip().lower())


# ---------------------------------------------------------------------------
# Cases

@dataclass(frozen=True)
class ImageRef:
    image_id: str
    uri: str
    modality_hint: Optional[Modality] = None
    laterality_hint: Optional[str] = None


@dataclass(frozen=True)
class GroundTruth:
    diagnosis: Optional[str] = None
    expected_tools: tuple[str, ...] = ()
    modality: Optional[str] = None


@dataclass(frozen=True)
class ClinicalCase:
    case_id: str
    images: tuple[ImageRef, ...]
    query: str
    ground_truth: Optional[GroundTruth] = None

    def __post_init__(self) -> None:
        if not self.case_id:
            raise SchemaViolationError("case_id", "must be non-empty")
        if not self.images and not self.query.strip():
            raise SchemaViolationError("images", "case needs at least one image or a non-empty query")


def parse_case(document: Mapping[str, Any]) -> ClinicalCase:
    """Parse one corpus case document (see gateway formats for the schema).

    Raises SchemaViolationError with the offending field path, or
    DuplicateImageIdError when two images share an id.
    """
    if not isinstance(document, Mapping):
        raise SchemaViolationError("", "case document must be an object")
    case_id = document.get("case_id")
    if not isinstance(case_id, str) or not case_id:
        raise SchemaViolationError("case_id", "required non-empty string")
    query = document.get("query", "")
    if not isinstance(query, str):
        raise SchemaViolationError("query", "must be a string")
    raw_images = document.get("images", [])
    if not isinstance(raw_images, Sequence) or isinstance(raw_images, (str, bytes)):
        raise SchemaViolationError("images", "must be a list")

    images: list[ImageRef] = []
    seen: set[str] = set()
    for i, entry in enumerate(raw_images):
        if not isinstance(entry, Mapping):
            raise SchemaViolationError(f"images[{i}]", "must be an object")
        image_id = entry.get("image_id")
        if not isinstance(image_id, str) or not image_id:
            raise SchemaViolationError(f"images[{i}].image_id", "required non-empty string")
        if image_id in seen:
            raise DuplicateImageIdError(image_id)
        seen.add(image_id)
        uri = entry.get("uri")
        if not isinstance(uri, str) or not uri:
            raise SchemaViolationError(f"images[{i}].uri", "required non-empty string")
        hint = entry.get("modality_hint")
        if hint is not None and not isinstance(hint, str):
            raise SchemaViolationError(f"images[{i}].modality_hint", "must be a string")
        lat = entry.get("laterality_hint")
        if lat is not None and lat not in LATERALITIES:
            lat = UNKNOWN
        images.append(ImageRef(
            image_id=image_id,
            uri=uri,
            modality_hint=parse_modality(hint) if hint is not None else None,
            laterality_hint=lat,
        ))

    gt = None
    raw_gt = document.get("ground_truth")
    if raw_gt is not None:
        if not isinstance(raw_gt, Mapping):
            raise SchemaViolationError("ground_truth", "must be an object")
        gt = GroundTruth(
            diagnosis=raw_gt.get("diagnosis"),
            expected_tools=tuple(raw_gt.get("expected_tools", ())),
            modality=raw_gt.get("modality"),
        )

    if not images and not query.strip():
        raise SchemaViolationError("query", "case needs at least one image or a non-empty query")
    return ClinicalCase(case_id=case_id, images=tuple(images), query=query, ground_truth=gt)


# ---------------------------------------------------------------------------
# Tool outputs

@dataclass(frozen=True)
class RankedPrediction:
    label: str
    probability: float

    def __post_init__(self) -> None:
        if not 0.0 <= self.probability <= 1.0:
            raise InvalidProbabilityError(f"{self.label}: {self.probability}")


@dataclass(frozen=True)
class ClassificationOutput:
    predictions: tuple[RankedPrediction, ...]
    threshold_used: float

    def __post_init__(self) -> None:
        if not self.predictions:
            raise EmptyInputError("classification output needs at least one prediction")
        probs = [p.probability for p in self.predictions]
        if any(a < b for a, b in zip(probs, probs[1:])):
            raise InvariantError("predictions must be non-increasing by probability")
        if any(p.probability < self.threshold_used for p in self.predictions[1:]):
            raise InvariantError("non-top predictions must clear the threshold")

    @property
    def top1(self) -> RankedPrediction:
        return self.predictions[0]

    def to_dict(self) -> dict[str, Any]:
        return {
            "predictions": [{"label": p.label, "probability": p.probability} for p in self.predictions],
            "threshold_used": self.threshold_used,
        }


def rank_predictions(raw: Mapping[str, float], threshold: float) -> ClassificationOutput:
    """Order raw label scores and keep the ones a report should surface.

    The top-1 label is always kept (screening must yield a routable label even
    when nothing clears the bar); every other label is kept iff its probability
    is >= threshold. Ties break lexicographically by label.
    """
    if not raw:
        raise EmptyInputError("no predictions supplied")
    if not 0.0 <= threshold <= 1.0:
        raise InvalidProbabilityError(f"threshold {threshold} outside [0,1]")
    for label, prob in raw.items():
        if not isinstance(prob, (int, float)) or not 0.0 <= float(prob) <= 1.0:
            raise InvalidProbabilityError(f"{label}: {prob}")
    ordered = sorted(raw.items(), key=lambda kv: (-float(kv[1]), kv[0]))
    kept = [ordered[0]] + [(l, p) for l, p in ordered[1:] if float(p) >= threshold]
    return ClassificationOutput(
        predictions=tuple(RankedPrediction(l, float(p)) for l, p in kept),
        threshold_used=threshold,
    )


@dataclass(frozen=True)
class LesionInstanceSet:
    lesion_type: str
    count: int
    areas: tuple[float, ...]
    area_min: Optional[float] = None
    area_max: Optional[float] = None
    area_mean: Optional[float] = None

    def to_dict(self) -> dict[str, Any]:
        return {
            "lesion_type": self.lesion_type,
            "count": self.count,
            "areas": list(self.areas),
            "area_min": self.area_min,
            "area_max": self.area_max,
            "area_mean": self.area_mean,
        }


def lesion_stats(lesion_type: str, areas: Sequence[float]) -> LesionInstanceSet:
    """Summarize one lesion type's instance areas (pixel^2 units)."""
    for a in areas:
        if a < 0:
            raise NegativeAreaError(f"{lesion_type}: {a}")
    values = tuple(float(a) for a in areas)
    if not values:
        return LesionInstanceSet(lesion_type=lesion_type, count=0, areas=())
    return LesionInstanceSet(
        lesion_type=lesion_type,
        count=len(values),
        areas=values,
        area_min=min(values),
        area_max=max(values),
        area_mean=math.fsum(values) / len(values),  # fsum: permutation-invariant
    )


@dataclass(frozen=True)
class VesselMetrics:
    crae: float
    crve: float
    avr: float
    vessel_area_density: float
    fractal_dimension_artery: float
    tortuosity: Optional[float] = None

    def __post_init__(self) -> None:
        if self.crve <= 0:
            raise ZeroVenularCaliberError(f"crve {self.crve} must be positive")
        if abs(self.avr - self.crae / self.crve) > 1e-3:
            raise InvariantError(
                f"avr {self.avr} inconsistent with crae/crve {self.crae / self.crve:.6f}")
        if not 0.0 <= self.vessel_area_density <= 100.0:
            raise InvariantError(f"vessel_area_density {self.vessel_area_density} outside [0,100]")

    def to_dict(self) -> dict[str, Any]:
        out: dict[str, Any] = {
            "crae": self.crae,
            "crve": self.crve,
            "avr": self.avr,
            "vessel_area_density": self.vessel_area_density,
            "fractal_dimension_artery": self.fractal_dimension_artery,
        }
        if self.tortuosity is not None:
            out["tortuosity"] = self.tortuosity
        return out


@dataclass(frozen=True)
class RegressionOutput:
    quantity: str
    value: float
    scale_max: Optional[float] = None

    def __post_init__(self) -> None:
        if self.scale_max is not None and not 1.0 <= self.value <= self.scale_max:
            raise InvariantError(
                f"{self.quantity}: ordinal {self.value} outside [1, {self.scale_max}]")

    def to_dict(self) -> dict[str, Any]:
        out: dict[str, Any] = {"quantity": self.quantity, "value": self.value}
        if self.scale_max is not None:
            out["scale_max"] = self.scale_max
        return out


ARTIFACT_KINDS = ("image-2d", "video", "model-3d", "text")


@dataclass(frozen=True)
class GenerationOutput:
    artifact_kind: str
    artifact_ref: str
    derived_from: tuple[str, ...]

    def __post_init__(self) -> None:
        if self.artifact_kind not in ARTIFACT_KINDS:
            raise SchemaViolationError("artifact_kind", f"unknown kind {self.artifact_kind}")
        if not self.artifact_ref:
            raise SchemaViolationError("artifact_ref", "must be non-empty")


# ---------------------------------------------------------------------------
# Reports

@dataclass(frozen=True)
class EvidenceItem:
    text: str
    step_id: str
    citation: Optional[tuple[str, str]] = None  # (source_id, passage_id)

    def to_dict(self) -> dict[str, Any]:
        out: dict[str, Any] = {"text": self.text, "step_id": self.step_id}
        if self.citation is not None:
            out["citation"] = {"source_id": self.citation[0], "passage_id": self.citation[1]}
        return out


@dataclass(frozen=True)
class StructuredReport:
    modality: str
    image_quality: str
    laterality: str
    diagnosis: str
    evidence: tuple[EvidenceItem, ...]
    recommendations: str

    def __post_init__(self) -> None:
        for name in ("modality", "image_quality", "laterality", "diagnosis", "recommendations"):
            if not getattr(self, name):
                raise SchemaViolationError(name, "report field must be non-empty")
        if not self.evidence:
            raise SchemaViolationError("evidence", "report needs at least one evidence item")

    def to_dict(self) -> dict[str, Any]:
        return {
            "modality": self.modality,
            "image_quality": self.image_quality,
            "laterality": self.laterality,
            "diagnosis": self.diagnosis,
            "evidence": [e.to_dict() for e in self.evidence],
            "recommendations": self.recommendations,
        }

    @classmethod
    def from_dict(cls, doc: Mapping[str, Any]) -> "StructuredReport":
        evidence = tuple(
            EvidenceItem(
                text=e["text"],
                step_id=e["step_id"],
                citation=(e["citation"]["source_id"], e["citation"]["passage_id"])
                if e.get("citation") else None,
            )
            for e in doc["evidence"]
        )
        return cls(
            modality=doc["modality"],
            image_quality=doc["image_quality"],
            laterality=doc["laterality"],
            diagnosis=doc["diagnosis"],
            evidence=evidence,
            recommendations=doc["recommendations"],
        )


def canonical_json(obj: Any) -> str:
    """Deterministic JSON encoding: sorted keys, compact separators."""
    return json.dumps(obj, sort_keys=True, separators=(",", ":"), ensure_ascii=False)
