#!/usr/bin/env python3
"""Regenerate the bundled reference data (catalog, corpus, fixtures, rubric).

Deterministic: running it twice produces identical files. Outputs land in
src/ocuflow/data/.
"""

from __future__ import annotations

import json
from pathlib import Path

DATA = Path(__file__).resolve().parents[1] / "src" / "ocuflow" / "data"

FUNDUS = ["CFP", "SLO", "UWF-SLO", "FAF", "FFA", "ICGA"]
ALL_KNOWN = [
    "CFP", "OCT", "OCTA", "FFA", "ICGA", "SLO", "UWF-SLO", "FAF", "MRI", "slit-lamp",
    "B-scan-ultrasound", "UBM", "corneal-topography", "specular-microscopy",
    "visual-field", "ERG", "anterior-segment-photo", "fundus-video", "orbital-CT",
    "ROP-fundus", "external-eye-photo", "pachymetry", "gonioscopy",
]
SCREEN_MODALITIES = ["CFP", "OCT", "FFA", "ICGA", "SLO", "UWF-SLO", "FAF"]

FIXTURE_BACKEND = {"kind": "fixture", "locator": "fixtures", "timeout": 5.0}


def spread(n: int, lo: float, hi: float) -> list[float]:
    """n deterministic areas spanning [lo, hi] with exact endpoints."""
    if n == 1:
        return [round(hi, 2)]
    return [round(lo + (hi - lo) * i / (n - 1), 2) for i in range(n)]


# ---------------------------------------------------------------------------
# Catalog

SCHEMAS = {
    "image_input": {
        "type": "object", "required": ["image_id"],
        "fields": {"image_id": {"type": "string", "min_len": 1}},
    },
    "text_input": {
        "type": "object", "required": ["query"],
        "fields": {"query": {"type": "string", "min_len": 1}},
    },
    "classification_raw": {
        "type": "object", "required": ["scores"],
        "fields": {
            "scores": {"type": "map", "min_size": 1,
                       "values": {"type": "number", "min": 0, "max": 1}},
            "artifact_count": {"type": "integer", "min": 0},
        },
    },
    "segmentation_raw": {
        "type": "object", "required": ["lesions"],
        "fields": {
            "lesions": {"type": "list", "items": {
                "type": "object", "required": ["lesion_type", "areas"],
                "fields": {
                    "lesion_type": {"type": "string", "min_len": 1},
                    "areas": {"type": "list", "items": {"type": "number", "min": 0}},
                },
            }},
        },
    },
    "detection_raw": {
        "type": "object", "required": ["detections"],
        "fields": {
            "detections": {"type": "list", "items": {
                "type": "object", "required": ["label", "confidence"],
                "fields": {
                    "label": {"type": "string", "min_len": 1},
                    "confidence": {"type": "number", "min": 0, "max": 1},
                },
            }},
        },
    },
    "regression_raw": {
        "type": "object", "required": ["quantity", "value"],
        "fields": {
            "quantity": {"type": "string", "min_len": 1},
            "value": {"type": "number"},
            "scale_max": {"type": "number"},
        },
    },
    "vessel_raw": {
        "type": "object",
        "required": ["crae", "crve", "vessel_area_density", "fractal_dimension_artery"],
        "fields": {
            "crae": {"type": "number", "min": 0},
            "crve": {"type": "number", "exclusive_min": 0},
            "vessel_area_density": {"type": "number", "min": 0, "max": 100},
            "fractal_dimension_artery": {"type": "number", "min": 0},
            "tortuosity": {"type": "number", "min": 0},
        },
    },
    "generation_raw": {
        "type": "object", "required": ["artifact_kind", "artifact_ref", "derived_from"],
        "fields": {
            "artifact_kind": {"type": "string",
                              "enum": ["image-2d", "video", "model-3d", "text"]},
            "artifact_ref": {"type": "string", "min_len": 1},
            "derived_from": {"type": "list", "items": {"type": "string"}},
            "text": {"type": "string"},
        },
    },
    "retrieval_raw": {
        "type": "object", "required": ["hits"],
        "fields": {
            "hits": {"type": "list", "items": {
                "type": "object", "required": ["passage_id", "source_id", "rank", "score"],
                "fields": {
                    "passage_id": {"type": "string"},
                    "source_id": {"type": "string"},
                    "rank": {"type": "integer", "min": 1},
                    "score": {"type": "number", "min": 0},
                    "text": {"type": "string"},
                },
            }},
        },
    },
}


def tool(tool_id, display_name, role, task, capability, tier, *, modalities=None,
         conditions=None, input_schema="image_input", output_schema=None,
         usage=None, threshold=None, target_modality=None, backend=None):
    out_schema = output_schema or {
        "classification": "classification_raw",
        "segmentation": "segmentation_raw",
        "detection": "detection_raw",
        "regression": "regression_raw",
        "generation": "generation_raw",
        "retrieval": "retrieval_raw",
    }[task]
    doc = {
        "tool_id": tool_id,
        "display_name": display_name,
        "role": role,
        "task": task,
        "capability": capability,
        "tier": tier,
        "modalities": modalities or [],
        "conditions": conditions or [],
        "input_schema": input_schema,
        "output_schema": out_schema,
        "backend": backend or FIXTURE_BACKEND,
    }
    if usage:
        doc["usage_conditions"] = usage
    if threshold is not None:
        doc["threshold"] = threshold
    if target_modality:
        doc["target_modality"] = target_modality
    return doc


def gate(modalities):
    return [{"fact": "modality", "one_of": modalities}]


DR_FAMILY = ["diabetic retinopathy", "proliferative diabetic retinopathy",
             "nonproliferative diabetic retinopathy", "diabetic macular edema"]
AMD_FAMILY = ["age-related macular degeneration", "wet age-related macular degeneration",
              "dry age-related macular degeneration", "early age-related macular degeneration",
              "intermediate age-related macular degeneration"]
RVO_FAMILY = ["retinal vein occlusion", "central retinal vein occlusion",
              "branch retinal vein occlusion"]


def build_catalog() -> dict:
    tools = [
        # ---- tier 1: the five general tools -------------------------------
        tool("modality_classifier", "Imaging modality recognizer", "GeneralPractitioner",
             "classification", "modality-recognition", 1, modalities=["*"]),
        tool("quality_assessor", "Image quality / gradability assessor", "GeneralPractitioner",
             "classification", "quality-assessment", 1, modalities=ALL_KNOWN),
        tool("laterality_classifier", "Laterality (OD/OS) classifier", "GeneralPractitioner",
             "classification", "laterality", 1, modalities=FUNDUS, usage=gate(FUNDUS)),
        tool("general_screener", "Broad condition screener", "GeneralPractitioner",
             "classification", "screening", 1, modalities=SCREEN_MODALITIES, threshold=0.3),
        tool("referral_triage", "Referral urgency triage", "GeneralPractitioner",
             "classification", "referral-triage", 1, modalities=SCREEN_MODALITIES),
        # ---- tier 2: disease-specific classifiers -------------------------
        tool("dr_grader", "Diabetic retinopathy grader", "RetinaSpecialist",
             "classification", "disease-specific", 2,
             modalities=["CFP", "UWF-SLO", "FFA"], conditions=DR_FAMILY,
             usage=gate(["CFP", "UWF-SLO", "FFA"]), threshold=0.3),
        tool("amd_stager", "Age-related macular degeneration stager", "RetinaSpecialist",
             "classification", "disease-specific", 2,
             modalities=["CFP", "OCT"], conditions=AMD_FAMILY,
             usage=gate(["CFP", "OCT"])),
        tool("glaucoma_classifier", "Glaucoma risk classifier", "RetinaSpecialist",
             "classification", "disease-specific", 2,
             modalities=["CFP"], conditions=["glaucoma", "glaucoma suspect"],
             usage=gate(["CFP"])),
        tool("myopia_classifier", "Pathological myopia classifier", "RetinaSpecialist",
             "classification", "disease-specific", 2,
             modalities=["CFP"],
             conditions=["pathological myopia", "high myopia", "diffuse chorioretinal atrophy"],
             usage=gate(["CFP"])),
        tool("rvo_classifier", "Retinal vein occlusion subtyper", "RetinaSpecialist",
             "classification", "disease-specific", 2,
             modalities=["CFP", "SLO", "UWF-SLO"], conditions=RVO_FAMILY,
             usage=gate(["CFP", "SLO", "UWF-SLO"])),
        tool("csc_classifier", "Central serous chorioretinopathy classifier", "RetinaSpecialist",
             "classification", "disease-specific", 2,
             modalities=["OCT", "CFP"], conditions=["central serous chorioretinopathy"],
             usage=gate(["OCT", "CFP"])),
        tool("mh_classifier", "Macular hole classifier", "RetinaSpecialist",
             "classification", "disease-specific", 2,
             modalities=["OCT"], conditions=["macular hole"], usage=gate(["OCT"])),
        tool("rd_classifier", "Retinal detachment classifier", "RetinaSpecialist",
             "classification", "disease-specific", 2,
             modalities=["CFP", "UWF-SLO"], conditions=["retinal detachment"],
             usage=gate(["CFP", "UWF-SLO"])),
        tool("erm_classifier", "Epiretinal membrane classifier", "RetinaSpecialist",
             "classification", "disease-specific", 2,
             modalities=["OCT", "CFP"], conditions=["epiretinal membrane"],
             usage=gate(["OCT", "CFP"])),
        # ---- tier 3: segmentation (21 tools) -------------------------------
        tool("seg_cfp_microaneurysm", "CFP microaneurysm segmenter", "RetinaSpecialist",
             "segmentation", "lesion-segmentation", 3, modalities=["CFP"],
             conditions=DR_FAMILY + ["microaneurysm"], usage=gate(["CFP"])),
        tool("seg_cfp_hemorrhage", "CFP hemorrhage segmenter", "RetinaSpecialist",
             "segmentation", "lesion-segmentation", 3, modalities=["CFP"],
             conditions=DR_FAMILY + RVO_FAMILY + ["hemorrhage"], usage=gate(["CFP"])),
        tool("seg_cfp_hard_exudate", "CFP hard exudate segmenter", "RetinaSpecialist",
             "segmentation", "lesion-segmentation", 3, modalities=["CFP"],
             conditions=DR_FAMILY + ["hard exudate", "exudate"], usage=gate(["CFP"])),
        tool("seg_cfp_cotton_wool_spot", "CFP cotton-wool spot segmenter", "RetinaSpecialist",
             "segmentation", "lesion-segmentation", 3, modalities=["CFP"],
             conditions=DR_FAMILY + ["hypertensive retinopathy", "cotton wool", "cotton-wool"],
             usage=gate(["CFP"])),
        tool("seg_cfp_drusen", "CFP drusen segmenter", "RetinaSpecialist",
             "segmentation", "lesion-segmentation", 3, modalities=["CFP"],
             conditions=AMD_FAMILY + ["drusen"], usage=gate(["CFP"])),
        tool("seg_cfp_artifact", "CFP acquisition artifact segmenter", "RetinaSpecialist",
             "segmentation", "lesion-segmentation", 3, modalities=["CFP"],
             conditions=["artifact", "artifacts"], usage=gate(["CFP"])),
        tool("seg_cfp_vessel", "CFP retinal vessel segmenter", "RetinaSpecialist",
             "segmentation", "anatomy-segmentation", 3, modalities=["CFP"],
             conditions=["vessel", "retinal vessels"], usage=gate(["CFP"])),
        tool("seg_cfp_optic_disc", "CFP optic disc/cup segmenter", "RetinaSpecialist",
             "segmentation", "anatomy-segmentation", 3, modalities=["CFP"],
             conditions=["glaucoma", "glaucoma suspect", "optic disc"], usage=gate(["CFP"])),
        tool("seg_cfp_myopia_lesion", "CFP myopic lesion segmenter", "RetinaSpecialist",
             "segmentation", "lesion-segmentation", 3, modalities=["CFP"],
             conditions=["pathological myopia", "lacquer cracks", "chorioretinal atrophy", "atrophy"],
             usage=gate(["CFP"])),
        tool("seg_oct_layers", "OCT retinal layer segmenter", "RetinaSpecialist",
             "segmentation", "anatomy-segmentation", 3, modalities=["OCT"],
             conditions=["retinal layers"], usage=gate(["OCT"])),
        tool("seg_oct_fluid", "OCT retinal fluid segmenter", "RetinaSpecialist",
             "segmentation", "lesion-segmentation", 3, modalities=["OCT"],
             conditions=["macular hole", "retinal fluid", "fluid", "diabetic macular edema",
                         "cystoid macular edema", "central serous chorioretinopathy",
                         "wet age-related macular degeneration"],
             usage=gate(["OCT"])),
        tool("seg_oct_macular_hole", "OCT macular hole segmenter", "RetinaSpecialist",
             "segmentation", "lesion-segmentation", 3, modalities=["OCT"],
             conditions=["macular hole"], usage=gate(["OCT"])),
        tool("seg_oct_membrane", "OCT epiretinal membrane segmenter", "RetinaSpecialist",
             "segmentation", "lesion-segmentation", 3, modalities=["OCT"],
             conditions=["epiretinal membrane"], usage=gate(["OCT"])),
        tool("seg_oct_choroid", "OCT choroid segmenter", "RetinaSpecialist",
             "segmentation", "anatomy-segmentation", 3, modalities=["OCT"],
             conditions=["choroid", "pathological myopia"], usage=gate(["OCT"])),
        tool("seg_ffa_neovascularization", "FFA neovascularization segmenter", "RetinaSpecialist",
             "segmentation", "lesion-segmentation", 3, modalities=["FFA"],
             conditions=["proliferative diabetic retinopathy", "neovascularization",
                         "choroidal neovascularization", "wet age-related macular degeneration"],
             usage=gate(["FFA"])),
        tool("seg_ffa_leakage", "FFA leakage segmenter", "RetinaSpecialist",
             "segmentation", "lesion-segmentation", 3, modalities=["FFA"],
             conditions=["leakage", "proliferative diabetic retinopathy",
                         "wet age-related macular degeneration"],
             usage=gate(["FFA"])),
        tool("seg_ffa_nonperfusion", "FFA non-perfusion segmenter", "RetinaSpecialist",
             "segmentation", "lesion-segmentation", 3, modalities=["FFA"],
             conditions=["nonperfusion", "diabetic retinopathy",
                         "proliferative diabetic retinopathy", "retinal vein occlusion"],
             usage=gate(["FFA"])),
        tool("seg_ffa_microaneurysm", "FFA microaneurysm segmenter", "RetinaSpecialist",
             "segmentation", "lesion-segmentation", 3, modalities=["FFA"],
             conditions=["microaneurysm", "diabetic retinopathy",
                         "proliferative diabetic retinopathy"],
             usage=gate(["FFA"])),
        tool("seg_ffa_laser_spot", "FFA laser spot segmenter", "RetinaSpecialist",
             "segmentation", "lesion-segmentation", 3, modalities=["FFA"],
             conditions=["laser spots", "panretinal photocoagulation",
                         "proliferative diabetic retinopathy"],
             usage=gate(["FFA"])),
        tool("seg_icga_choroidal_vessel", "ICGA choroidal vessel segmenter", "RetinaSpecialist",
             "segmentation", "anatomy-segmentation", 3, modalities=["ICGA"],
             conditions=["choroidal vessels", "polypoidal choroidal vasculopathy"],
             usage=gate(["ICGA"])),
        tool("seg_uwf_lesion", "Wide-field lesion segmenter", "RetinaSpecialist",
             "segmentation", "lesion-segmentation", 3, modalities=["SLO", "UWF-SLO"],
             conditions=RVO_FAMILY + ["retinal detachment", "hemorrhage"],
             usage=gate(["SLO", "UWF-SLO"])),
        # ---- tier 4: generation and reporting (11 tools) -------------------
        tool("gen_cfp_to_ffa", "CFP-to-FFA synthesizer", "MedicalEducator",
             "generation", "cross-modality-synthesis", 4, modalities=["CFP"],
             usage=gate(["CFP"]), target_modality="FFA"),
        tool("gen_cfp_to_icga", "CFP-to-ICGA synthesizer", "MedicalEducator",
             "generation", "cross-modality-synthesis", 4, modalities=["CFP"],
             usage=gate(["CFP"]), target_modality="ICGA"),
        tool("gen_cfp_to_faf", "CFP-to-FAF synthesizer", "MedicalEducator",
             "generation", "cross-modality-synthesis", 4, modalities=["CFP"],
             usage=gate(["CFP"]), target_modality="FAF"),
        tool("gen_cfp_to_oct", "CFP-to-OCT synthesizer", "MedicalEducator",
             "generation", "cross-modality-synthesis", 4, modalities=["CFP"],
             usage=gate(["CFP"]), target_modality="OCT"),
        tool("gen_ffa_video", "Angiography video synthesizer", "MedicalEducator",
             "generation", "video-synthesis", 4, modalities=["CFP", "FFA"],
             usage=gate(["CFP", "FFA"])),
        tool("gen_eye_globe_3d", "Three-dimensional globe reconstructor", "MedicalEducator",
             "generation", "3d-reconstruction", 4, modalities=["CFP"],
             conditions=["pathological myopia", "high myopia"], usage=gate(["CFP"])),
        tool("gen_disease_illustration", "Educational illustration synthesizer", "MedicalEducator",
             "generation", "illustration", 4, input_schema="text_input"),
        tool("report_cfp", "CFP narrative report generator", "MedicalEducator",
             "generation", "report-generation", 4, modalities=["CFP"], usage=gate(["CFP"])),
        tool("report_ffa", "FFA narrative report generator", "MedicalEducator",
             "generation", "report-generation", 4, modalities=["FFA"], usage=gate(["FFA"])),
        tool("report_oct", "OCT narrative report generator", "MedicalEducator",
             "generation", "report-generation", 4, modalities=["OCT"], usage=gate(["OCT"])),
        tool("report_slitlamp", "Slit-lamp narrative report generator", "MedicalEducator",
             "generation", "report-generation", 4, modalities=["slit-lamp"],
             usage=gate(["slit-lamp"])),
        # ---- tier 5: quantification, regression, retrieval (7 tools) -------
        tool("quant_retinal_vessels", "Retinal vessel quantifier", "CrossSpecialtyAnalyzer",
             "regression", "vessel-quantification", 5, modalities=["CFP"],
             conditions=["retinal vessels"], output_schema="vessel_raw", usage=gate(["CFP"])),
        tool("detect_av_nicking", "Arteriovenous nicking detector", "CrossSpecialtyAnalyzer",
             "detection", "nicking-detection", 5, modalities=["CFP"],
             conditions=["arteriovenous nicking", "hypertensive retinopathy"],
             usage=gate(["CFP"])),
        tool("regress_retinal_age", "Retinal age regressor", "CrossSpecialtyAnalyzer",
             "regression", "age-regression", 5, modalities=["CFP"],
             conditions=["retinal age"], usage=gate(["CFP"])),
        tool("regress_cvd_risk", "Cardiovascular risk regressor", "CrossSpecialtyAnalyzer",
             "regression", "risk-regression", 5, modalities=["CFP"],
             conditions=["cardiovascular risk"], usage=gate(["CFP"])),
        tool("quant_optic_disc", "Optic disc/cup quantifier", "CrossSpecialtyAnalyzer",
             "regression", "disc-quantification", 5, modalities=["CFP"],
             conditions=["glaucoma", "optic disc"], usage=gate(["CFP"])),
        tool("quant_choroid_vascularity", "Choroidal vascularity quantifier", "CrossSpecialtyAnalyzer",
             "regression", "choroid-quantification", 5, modalities=["OCT", "ICGA"],
             conditions=["pathological myopia"], usage=gate(["OCT", "ICGA"])),
        tool("kb_retrieval", "Reference literature retriever", "MedicalEducator",
             "retrieval", "knowledge-retrieval", 5, input_schema="text_input",
             backend={"kind": "knowledge", "locator": "kb", "timeout": 5.0}),
    ]
    tiers = [sum(1 for t in tools if t["tier"] <= k) for k in range(1, 6)]
    assert tiers == [5, 14, 35, 46, 53], tiers
    return {
        "schema_version": "1.0.0",
        "modalities": ALL_KNOWN,
        "notes": [
            "Tier membership beyond the published per-tier counts is this catalog's "
            "own taxonomy; correct it here, in data, not in code.",
            "The identity of the fifth general tool is unconfirmed; this catalog "
            "ships referral triage as the fifth tier-1 tool.",
        ],
        "schemas": SCHEMAS,
        "tools": tools,
    }


# ---------------------------------------------------------------------------
# Corpus and fixtures

CHAIN_FUNDUS = ["modality_classifier", "quality_assessor", "laterality_classifier",
                "general_screener"]
CHAIN_NONFUNDUS = ["modality_classifier", "quality_assessor", "general_screener"]


def case_row(case_id, image_id, modality, gt_diagnosis, query, *, lat_hint=None,
             mod_scores=None, lat_scores=None, qual=None, screening=None,
             specialist=None, segs=None, extra_fx=None, expected_extra=None,
             hint_modality=True, showcase=None):
    """One corpus case directive; fixtures and GT derive from it."""
    fundus = modality in FUNDUS
    expected = list(CHAIN_FUNDUS if fundus else CHAIN_NONFUNDUS)
    if specialist:
        expected.append(specialist[0])
    for seg_tool, _payload in (segs or []):
        expected.append(seg_tool)
    expected.extend(expected_extra or [])
    expected.append("kb_retrieval")
    return {
        "case_id": case_id,
        "image_id": image_id,
        "modality": modality,
        "lat_hint": lat_hint,
        "hint_modality": hint_modality,
        "gt_diagnosis": gt_diagnosis,
        "query": query,
        "mod_scores": mod_scores or {modality: 0.98},
        "lat_scores": lat_scores,
        "qual": qual,
        "screening": screening,
        "specialist": specialist,      # (tool_id, scores)
        "segs": segs or [],            # [(tool_id, lesions payload)]
        "extra_fx": extra_fx or [],    # [(tool_id, key, payload)]
        "expected": expected,
        "showcase": showcase,          # filename for a standalone case doc
    }


def build_cases() -> list[dict]:
    rows = []

    # -- showcase cases ------------------------------------------------------
    rows.append(case_row(
        "crvo-uwf-01", "crvo_uwf_01", "SLO",
        "central retinal vein occlusion",
        "What is the potential diagnosis? (provide me the modality, laterality and diagnosis)",
        hint_modality=False,
        mod_scores={"SLO": 0.988, "UWF-SLO": 0.972, "CFP": 0.01},
        lat_scores={"OS": 0.871, "OD": 0.129},
        screening={"retinal vein occlusion": 0.936, "central serous chorioretinopathy": 0.04,
                   "normal": 0.012},
        specialist=("rvo_classifier",
                    {"central retinal vein occlusion": 0.878,
                     "branch retinal vein occlusion": 0.094}),
        segs=[("seg_uwf_lesion", [
            {"lesion_type": "flame hemorrhage",
             "areas": [142.5, 89.0, 260.25, 55.5, 1210.0, 34.25, 77.5, 310.0]},
            {"lesion_type": "optic disc swelling", "areas": [5320.5]},
        ])],
        showcase="crvo",
    ))

    rows.append(case_row(
        "mh-oct-01", "mh_oct_01", "OCT", "macular hole",
        "Is there any abnormality? provide me the diagnosis and label the lesions",
        lat_hint="OD",
        mod_scores={"OCT": 0.995},
        screening={"macular hole": 0.93, "epiretinal membrane": 0.21},
        specialist=("mh_classifier", {"macular hole": 0.96, "normal": 0.04}),
        segs=[
            ("seg_oct_fluid", [{"lesion_type": "retinal fluid",
                                "areas": [1.0, 12.5, 34.0, 55.25, 87.5, 120.0, 160.75,
                                          210.5, 280.0, 372.25, 455.5, 572.5]}]),
            ("seg_oct_macular_hole", [{"lesion_type": "macular hole", "areas": [19829.0]}]),
        ],
        showcase="mh",
    ))

    rows.append(case_row(
        "drusen-cfp-01", "drusen_cfp_01", "CFP",
        "early age-related macular degeneration",
        "Count, label, and measure the diameter of all the drusen in the image.",
        lat_scores={"OS": 0.942, "OD": 0.058},
        screening={"age-related macular degeneration": 0.81, "normal": 0.12},
        specialist=("amd_stager",
                    {"early age-related macular degeneration": 0.74,
                     "intermediate age-related macular degeneration": 0.31}),
        segs=[("seg_cfp_drusen",
               [{"lesion_type": "drusen", "areas": spread(816, 0.5, 1480.25)}])],
        showcase="drusen",
    ))

    pdr_gen_key = "pdr_cfp_01::gen_cfp_to_ffa"
    rows.append(case_row(
        "pdr-cfp-01", "pdr_cfp_01", "CFP", "proliferative diabetic retinopathy",
        "Give me the diagnosis and explanation based on this image and generate the "
        "corresponding FFA image with labeled lesions.",
        lat_scores={"OD": 0.902, "OS": 0.098},
        screening={"diabetic retinopathy": 0.88, "normal": 0.02},
        specialist=("dr_grader",
                    {"proliferative diabetic retinopathy": 0.637,
                     "nonproliferative diabetic retinopathy": 0.31}),
        segs=[
            ("seg_cfp_microaneurysm",
             [{"lesion_type": "microaneurysm", "areas": spread(17, 3.5, 124.5)}]),
            ("seg_cfp_hemorrhage",
             [{"lesion_type": "hemorrhage", "areas": spread(27, 0.1, 10240.5)}]),
            ("seg_cfp_hard_exudate",
             [{"lesion_type": "hard exudate", "areas": spread(18, 0.1, 1297.5)}]),
            ("seg_cfp_cotton_wool_spot",
             [{"lesion_type": "cotton-wool spot", "areas": [446.0, 1150.0, 2162.0]}]),
        ],
        extra_fx=[
            ("gen_cfp_to_ffa", "pdr_cfp_01", {
                "artifact_kind": "image-2d",
                "artifact_ref": "fixture://generated/pdr_ffa_01.png",
                "derived_from": ["pdr_cfp_01"],
            }),
            ("seg_ffa_nonperfusion", pdr_gen_key,
             {"lesions": [{"lesion_type": "blocked fluorescence",
                           "areas": [0.0, 4520.5, 9039.0]}]}),
            ("seg_ffa_leakage", pdr_gen_key,
             {"lesions": [{"lesion_type": "leakage", "areas": spread(14, 0.1, 541.0)}]}),
            ("seg_ffa_neovascularization", pdr_gen_key,
             {"lesions": [{"lesion_type": "neovascularization", "areas": [8121.5]}]}),
            ("seg_ffa_microaneurysm", pdr_gen_key,
             {"lesions": [{"lesion_type": "microaneurysm", "areas": [25.0]}]}),
            ("seg_ffa_laser_spot", pdr_gen_key, {"lesions": []}),
        ],
        expected_extra=["gen_cfp_to_ffa", "seg_ffa_nonperfusion", "seg_ffa_leakage",
                        "seg_ffa_neovascularization", "seg_ffa_microaneurysm",
                        "seg_ffa_laser_spot"],
        showcase="pdr",
    ))

    rows.append(case_row(
        "myopia-cfp-01", "myopia_cfp_01", "CFP", "pathological myopia",
        "What is the diagnosis of this image and what is its eyeball shape look like "
        "(generate the 3D eye shape)?",
        lat_scores={"OD": 0.93, "OS": 0.07},
        screening={"pathological myopia": 0.701, "normal": 0.12},
        specialist=("myopia_classifier",
                    {"pathological myopia": 0.83, "diffuse chorioretinal atrophy": 0.41}),
        segs=[("seg_cfp_myopia_lesion",
               [{"lesion_type": "lacquer crack", "areas": [310.5, 122.0]},
                {"lesion_type": "chorioretinal atrophy", "areas": [15230.5]}])],
        extra_fx=[("gen_eye_globe_3d", "myopia_cfp_01", {
            "artifact_kind": "model-3d",
            "artifact_ref": "fixture://generated/myopia_globe_01.glb",
            "derived_from": ["myopia_cfp_01"],
        })],
        expected_extra=["gen_eye_globe_3d"],
        showcase="myopia",
    ))

    rows.append(case_row(
        "cvd-cfp-01", "cvd_cfp_01", "CFP", "normal",
        "Please quantify the retinal vessels and predict the risk of developing "
        "cardiovascular disease within the next 5 years.",
        lat_scores={"OD": 0.88, "OS": 0.12},
        screening={"normal": 0.76, "hypertensive retinopathy": 0.18},
        extra_fx=[
            ("quant_retinal_vessels", "cvd_cfp_01", {
                "crae": 9.16, "crve": 17.53, "vessel_area_density": 14.43,
                "fractal_dimension_artery": 1.746,
            }),
            ("detect_av_nicking", "cvd_cfp_01", {
                "detections": [
                    {"label": "arteriovenous nicking", "confidence": 0.45},
                    {"label": "arteriovenous nicking", "confidence": 0.33},
                ],
            }),
            ("regress_cvd_risk", "cvd_cfp_01", {
                "quantity": "cvd-risk-level", "value": 4, "scale_max": 9,
            }),
        ],
        expected_extra=["quant_retinal_vessels", "detect_av_nicking", "regress_cvd_risk"],
        showcase="cvd",
    ))

    rows.append(case_row(
        "laser-ffa-01", "laser_ffa_01", "FFA", "proliferative diabetic retinopathy",
        "Can you create a medical assessment report from this image and label the lesions?",
        lat_scores={"OD": 0.91, "OS": 0.09},
        screening={"diabetic retinopathy": 0.82, "normal": 0.05},
        specialist=("dr_grader",
                    {"proliferative diabetic retinopathy": 0.77,
                     "nonproliferative diabetic retinopathy": 0.21}),
        segs=[
            ("seg_ffa_laser_spot",
             [{"lesion_type": "laser spot", "areas": spread(105, 0.1, 577.5)}]),
            ("seg_ffa_microaneurysm",
             [{"lesion_type": "microaneurysm", "areas": spread(56, 0.1, 57.5)}]),
            ("seg_ffa_neovascularization",
             [{"lesion_type": "neovascularization", "areas": [472.5]}]),
            ("seg_ffa_leakage", [{"lesion_type": "leakage", "areas": []}]),
            ("seg_ffa_nonperfusion", [{"lesion_type": "nonperfusion", "areas": []}]),
        ],
        extra_fx=[("report_ffa", "laser_ffa_01", {
            "artifact_kind": "text",
            "artifact_ref": "fixture://generated/laser_ffa_report.txt",
            "derived_from": ["laser_ffa_01"],
            "text": "FFA narrative: neovascularization with dye leakage, widespread "
                    "microaneurysms, peripheral laser spots from prior photocoagulation.",
        })],
        expected_extra=["report_ffa"],
        showcase="ffa-laser",
    ))

    rows.append(case_row(
        "artifact-cfp-01", "artifact_cfp_01", "CFP", "normal",
        "What is the examination result?",
        lat_scores={"OS": 0.9, "OD": 0.1},
        qual={"scores": {"gradable": 0.93, "ungradable": 0.07}, "artifact_count": 68},
        screening={"normal": 0.642, "diabetic retinopathy": 0.315},
        specialist=("dr_grader",
                    {"no diabetic retinopathy": 0.996, "diabetic retinopathy": 0.004}),
        segs=[
            ("seg_cfp_microaneurysm", [{"lesion_type": "microaneurysm", "areas": []}]),
            ("seg_cfp_hemorrhage", [{"lesion_type": "hemorrhage", "areas": []}]),
            ("seg_cfp_hard_exudate", [{"lesion_type": "hard exudate", "areas": []}]),
            ("seg_cfp_cotton_wool_spot", [{"lesion_type": "cotton-wool spot", "areas": []}]),
            ("seg_cfp_artifact",
             [{"lesion_type": "acquisition artifact", "areas": spread(68, 0.4, 42.0)}]),
        ],
        showcase="artifact",
    ))

    rows.append(case_row(
        "misleading-cfp-01", "misleading_cfp_01", "CFP", "normal",
        "I have macular disease. What should I do?",
        lat_scores={"OS": 0.95, "OD": 0.05},
        screening={"normal": 0.88, "age-related macular degeneration": 0.06},
        extra_fx=[
            ("amd_stager", "misleading_cfp_01",
             {"scores": {"normal": 0.93, "age-related macular degeneration": 0.05}}),
            ("dr_grader", "misleading_cfp_01",
             {"scores": {"normal": 0.97, "diabetic retinopathy": 0.03}}),
            ("glaucoma_classifier", "misleading_cfp_01",
             {"scores": {"normal": 0.91, "glaucoma": 0.09}}),
            ("referral_triage", "misleading_cfp_01",
             {"scores": {"no referral needed": 0.82, "routine referral": 0.14}}),
        ],
        expected_extra=["amd_stager", "dr_grader", "glaucoma_classifier", "referral_triage"],
        showcase="misleading",
    ))

    # -- filler cases: exact at every tier ----------------------------------
    rows.append(case_row(
        "glaucoma-cfp-01", "glaucoma_cfp_01", "CFP", "glaucoma",
        "What is the diagnosis?",
        screening={"glaucoma": 0.78, "normal": 0.1},
        specialist=("glaucoma_classifier", {"glaucoma": 0.81, "glaucoma suspect": 0.12}),
        segs=[("seg_cfp_optic_disc",
               [{"lesion_type": "optic disc", "areas": [38252.0]},
                {"lesion_type": "optic cup", "areas": [14520.0]}])],
    ))
    rows.append(case_row(
        "rd-cfp-01", "rd_cfp_01", "CFP", "retinal detachment",
        "Please review this fundus photograph.",
        screening={"retinal detachment": 0.83, "normal": 0.04},
        specialist=("rd_classifier", {"retinal detachment": 0.87, "normal": 0.06}),
    ))
    rows.append(case_row(
        "erm-oct-01", "erm_oct_01", "OCT", "epiretinal membrane",
        "What does this scan show?", lat_hint="OD",
        screening={"epiretinal membrane": 0.75, "normal": 0.11},
        specialist=("erm_classifier", {"epiretinal membrane": 0.8, "normal": 0.1}),
        segs=[("seg_oct_membrane",
               [{"lesion_type": "epiretinal membrane", "areas": [10240.0]}])],
    ))
    rows.append(case_row(
        "csc-oct-01", "csc_oct_01", "OCT", "central serous chorioretinopathy",
        "What is the diagnosis?", lat_hint="OS",
        screening={"central serous chorioretinopathy": 0.82, "normal": 0.07},
        specialist=("csc_classifier",
                    {"central serous chorioretinopathy": 0.85, "normal": 0.1}),
        segs=[("seg_oct_fluid",
               [{"lesion_type": "subretinal fluid", "areas": [4890.5]}])],
    ))
    rows.append(case_row(
        "normal-cfp-01", "normal_cfp_01", "CFP", "normal",
        "Is this fundus normal?",
        screening={"normal": 0.91, "diabetic retinopathy": 0.03},
    ))
    rows.append(case_row(
        "normal-oct-01", "normal_oct_01", "OCT", "normal",
        "Anything abnormal on this scan?", lat_hint="OD",
        screening={"normal": 0.89, "epiretinal membrane": 0.05},
    ))
    rows.append(case_row(
        "dme-cfp-01", "dme_cfp_01", "CFP", "diabetic macular edema",
        "What is the diagnosis?",
        screening={"diabetic macular edema": 0.71, "diabetic retinopathy": 0.33},
        specialist=("dr_grader",
                    {"diabetic macular edema": 0.79,
                     "nonproliferative diabetic retinopathy": 0.3}),
        segs=[
            ("seg_cfp_microaneurysm",
             [{"lesion_type": "microaneurysm", "areas": spread(6, 2.0, 58.5)}]),
            ("seg_cfp_hemorrhage", [{"lesion_type": "hemorrhage", "areas": []}]),
            ("seg_cfp_hard_exudate",
             [{"lesion_type": "hard exudate", "areas": spread(9, 2.5, 310.0)}]),
            ("seg_cfp_cotton_wool_spot", [{"lesion_type": "cotton-wool spot", "areas": []}]),
        ],
    ))
    rows.append(case_row(
        "htn-cfp-01", "htn_cfp_01", "CFP", "hypertensive retinopathy",
        "What is the diagnosis?",
        screening={"hypertensive retinopathy": 0.68, "normal": 0.2},
    ))
    rows.append(case_row(
        "mh-oct-02", "mh_oct_02", "OCT", "macular hole",
        "Please assess the macula.", lat_hint="OS",
        screening={"macular hole": 0.88, "epiretinal membrane": 0.09},
        specialist=("mh_classifier", {"macular hole": 0.92, "normal": 0.05}),
        segs=[
            ("seg_oct_fluid",
             [{"lesion_type": "retinal fluid", "areas": spread(5, 3.0, 210.5)}]),
            ("seg_oct_macular_hole",
             [{"lesion_type": "macular hole", "areas": [15230.0]}]),
        ],
    ))
    rows.append(case_row(
        "pm-cfp-02", "pm_cfp_02", "CFP", "pathological myopia",
        "What is the diagnosis?",
        screening={"pathological myopia": 0.79, "normal": 0.08},
        specialist=("myopia_classifier", {"pathological myopia": 0.84, "high myopia": 0.2}),
        segs=[("seg_cfp_myopia_lesion",
               [{"lesion_type": "chorioretinal atrophy", "areas": [8890.0, 12400.5]}])],
    ))
    rows.append(case_row(
        "amd-cfp-01", "amd_cfp_01", "CFP", "age-related macular degeneration",
        "What is the diagnosis?",
        screening={"age-related macular degeneration": 0.74, "normal": 0.09},
        specialist=("amd_stager",
                    {"age-related macular degeneration": 0.77,
                     "dry age-related macular degeneration": 0.28}),
        segs=[("seg_cfp_drusen",
               [{"lesion_type": "drusen", "areas": spread(42, 1.5, 820.0)}])],
    ))
    rows.append(case_row(
        "rd-uwf-01", "rd_uwf_01", "UWF-SLO", "retinal detachment",
        "Please review this wide-field image.",
        screening={"retinal detachment": 0.86, "normal": 0.03},
        specialist=("rd_classifier", {"retinal detachment": 0.9, "normal": 0.04}),
        segs=[("seg_uwf_lesion",
               [{"lesion_type": "detached retina", "areas": [154000.0]}])],
    ))
    rows.append(case_row(
        "gs-cfp-01", "gs_cfp_01", "CFP", "glaucoma suspect",
        "Is there glaucoma?",
        screening={"glaucoma suspect": 0.61, "normal": 0.25},
        specialist=("glaucoma_classifier", {"glaucoma suspect": 0.7, "glaucoma": 0.22}),
        segs=[("seg_cfp_optic_disc",
               [{"lesion_type": "optic disc", "areas": [40110.0]},
                {"lesion_type": "optic cup", "areas": [20050.0]}])],
    ))

    # -- filler cases: subtype refinement needed (wrong at tier 1) ----------
    rows.append(case_row(
        "wetamd-cfp-01", "wetamd_cfp_01", "CFP", "wet age-related macular degeneration",
        "What is the diagnosis?",
        screening={"age-related macular degeneration": 0.77, "normal": 0.08},
        specialist=("amd_stager",
                    {"wet age-related macular degeneration": 0.82,
                     "dry age-related macular degeneration": 0.11}),
        segs=[("seg_cfp_drusen",
               [{"lesion_type": "drusen", "areas": spread(12, 2.0, 240.0)}])],
    ))
    rows.append(case_row(
        "dryamd-cfp-01", "dryamd_cfp_01", "CFP", "dry age-related macular degeneration",
        "What is the diagnosis?",
        screening={"age-related macular degeneration": 0.7, "normal": 0.12},
        specialist=("amd_stager",
                    {"dry age-related macular degeneration": 0.79,
                     "wet age-related macular degeneration": 0.08}),
        segs=[("seg_cfp_drusen",
               [{"lesion_type": "drusen", "areas": spread(67, 0.8, 640.0)}])],
    ))
    rows.append(case_row(
        "npdr-cfp-01", "npdr_cfp_01", "CFP", "nonproliferative diabetic retinopathy",
        "What is the diagnosis?",
        screening={"diabetic retinopathy": 0.84, "normal": 0.05},
        specialist=("dr_grader",
                    {"nonproliferative diabetic retinopathy": 0.76,
                     "proliferative diabetic retinopathy": 0.14}),
        segs=[
            ("seg_cfp_microaneurysm",
             [{"lesion_type": "microaneurysm", "areas": spread(11, 2.5, 88.0)}]),
            ("seg_cfp_hemorrhage",
             [{"lesion_type": "hemorrhage", "areas": spread(7, 4.0, 410.5)}]),
            ("seg_cfp_hard_exudate", [{"lesion_type": "hard exudate", "areas": []}]),
            ("seg_cfp_cotton_wool_spot", [{"lesion_type": "cotton-wool spot", "areas": []}]),
        ],
    ))
    rows.append(case_row(
        "wetamd-oct-01", "wetamd_oct_01", "OCT", "wet age-related macular degeneration",
        "What does the scan show?", lat_hint="OD",
        screening={"age-related macular degeneration": 0.72, "normal": 0.1},
        specialist=("amd_stager",
                    {"wet age-related macular degeneration": 0.8,
                     "dry age-related macular degeneration": 0.12}),
        segs=[("seg_oct_fluid",
               [{"lesion_type": "subretinal fluid", "areas": [2340.5, 890.0]}])],
    ))
    rows.append(case_row(
        "brvo-uwf-01", "brvo_uwf_01", "UWF-SLO", "branch retinal vein occlusion",
        "What is the diagnosis?",
        screening={"retinal vein occlusion": 0.81, "normal": 0.06},
        specialist=("rvo_classifier",
                    {"branch retinal vein occlusion": 0.85,
                     "central retinal vein occlusion": 0.09}),
        segs=[("seg_uwf_lesion",
               [{"lesion_type": "sectoral hemorrhage", "areas": spread(9, 20.0, 2210.0)}])],
    ))
    rows.append(case_row(
        "pdr-cfp-02", "pdr_cfp_02", "CFP", "proliferative diabetic retinopathy",
        "What is the diagnosis?",
        screening={"diabetic retinopathy": 0.8, "normal": 0.06},
        specialist=("dr_grader",
                    {"proliferative diabetic retinopathy": 0.71,
                     "nonproliferative diabetic retinopathy": 0.22}),
        segs=[
            ("seg_cfp_microaneurysm",
             [{"lesion_type": "microaneurysm", "areas": spread(21, 2.0, 130.0)}]),
            ("seg_cfp_hemorrhage",
             [{"lesion_type": "hemorrhage", "areas": spread(14, 1.0, 5120.5)}]),
            ("seg_cfp_hard_exudate",
             [{"lesion_type": "hard exudate", "areas": spread(5, 3.0, 260.0)}]),
            ("seg_cfp_cotton_wool_spot",
             [{"lesion_type": "cotton-wool spot", "areas": [380.0, 920.5]}]),
        ],
    ))

    # -- filler cases: wrong at every tier -----------------------------------
    # Upstream misclassification: screening picks CSC, the CSC specialist
    # disputes it (conflict, specialist_overrides to normal), truth is MH.
    rows.append(case_row(
        "conflict-oct-01", "conflict_oct_01", "OCT", "macular hole",
        "What is the diagnosis?", lat_hint="OS",
        screening={"central serous chorioretinopathy": 0.45, "macular hole": 0.28},
        specialist=("csc_classifier",
                    {"normal": 0.75, "central serous chorioretinopathy": 0.2}),
        segs=[("seg_oct_fluid", [{"lesion_type": "subretinal fluid", "areas": []}])],
    ))
    # Specialist subtype error: truth BRVO, specialist says CRVO.
    rows.append(case_row(
        "rvoerr-uwf-01", "rvoerr_uwf_01", "UWF-SLO", "branch retinal vein occlusion",
        "What is the diagnosis?",
        screening={"retinal vein occlusion": 0.88, "normal": 0.04},
        specialist=("rvo_classifier",
                    {"central retinal vein occlusion": 0.6,
                     "branch retinal vein occlusion": 0.38}),
        segs=[("seg_uwf_lesion",
               [{"lesion_type": "flame hemorrhage", "areas": spread(16, 8.0, 980.0)}])],
    ))

    assert len(rows) == 30, len(rows)
    return rows


def emit(rows: list[dict]) -> None:
    fixtures: dict[str, dict] = {}

    def put(tool_id: str, key: str, payload: dict) -> None:
        fixtures.setdefault(tool_id, {"entries": {}})["entries"][key] = payload

    defaults = {
        "quality_assessor": {"scores": {"gradable": 0.97, "ungradable": 0.03}},
        "laterality_classifier": {"scores": {"OD": 0.55, "OS": 0.45}},
        "referral_triage": {"scores": {"no referral needed": 0.75, "routine referral": 0.2}},
        "detect_av_nicking": {"detections": []},
    }
    for seg in ["seg_cfp_microaneurysm", "seg_cfp_hemorrhage", "seg_cfp_hard_exudate",
                "seg_cfp_cotton_wool_spot", "seg_cfp_drusen", "seg_cfp_artifact",
                "seg_cfp_vessel", "seg_cfp_optic_disc", "seg_cfp_myopia_lesion",
                "seg_oct_layers", "seg_oct_fluid", "seg_oct_macular_hole",
                "seg_oct_membrane", "seg_oct_choroid", "seg_ffa_neovascularization",
                "seg_ffa_leakage", "seg_ffa_nonperfusion", "seg_ffa_microaneurysm",
                "seg_ffa_laser_spot", "seg_icga_choroidal_vessel", "seg_uwf_lesion"]:
        defaults[seg] = {"lesions": []}

    corpus_lines = []
    for row in rows:
        image_id = row["image_id"]
        put("modality_classifier", image_id, {"scores": row["mod_scores"]})
        if row["qual"]:
            put("quality_assessor", image_id, row["qual"])
        if row["lat_scores"]:
            put("laterality_classifier", image_id, {"scores": row["lat_scores"]})
        if row["screening"]:
            put("general_screener", image_id, {"scores": row["screening"]})
        if row["specialist"]:
            tool_id, scores = row["specialist"]
            put(tool_id, image_id, {"scores": scores})
        for tool_id, lesions in row["segs"]:
            put(tool_id, image_id, {"lesions": lesions})
        for tool_id, key, payload in row["extra_fx"]:
            put(tool_id, key, payload)

        image_doc = {"image_id": image_id, "uri": f"fixture://{image_id}"}
        if row["hint_modality"]:
            image_doc["modality_hint"] = row["modality"]
        if row["lat_hint"]:
            image_doc["laterality_hint"] = row["lat_hint"]
        case_doc = {
            "case_id": row["case_id"],
            "images": [image_doc],
            "query": row["query"],
            "ground_truth": {
                "diagnosis": row["gt_diagnosis"],
                "modality": row["modality"],
                "expected_tools": row["expected"],
            },
        }
        corpus_lines.append(json.dumps(case_doc, sort_keys=True))
        if row["showcase"]:
            path = DATA / "cases" / f"{row['showcase']}.json"
            path.write_text(json.dumps(case_doc, indent=2, sort_keys=True) + "\n")

    (DATA / "corpus").mkdir(parents=True, exist_ok=True)
    (DATA / "corpus" / "cases.jsonl").write_text("\n".join(corpus_lines) + "\n")

    fx_dir = DATA / "fixtures"
    fx_dir.mkdir(parents=True, exist_ok=True)
    for old in fx_dir.glob("*.json"):
        old.unlink()
    for tool_id, payload in defaults.items():
        fixtures.setdefault(tool_id, {"entries": {}})["default"] = payload
    for tool_id, doc in sorted(fixtures.items()):
        (fx_dir / f"{tool_id}.json").write_text(json.dumps(doc, indent=1, sort_keys=True) + "\n")


# ---------------------------------------------------------------------------
# Rubric (197 items) and recommendations

RUBRIC_CONDITIONS = [
    "diabetic retinopathy", "proliferative diabetic retinopathy",
    "diabetic macular edema", "age-related macular degeneration", "glaucoma",
    "pathological myopia", "retinal vein occlusion",
    "central serous chorioretinopathy", "macular hole", "epiretinal membrane",
    "retinal detachment", "normal",
]

GENERAL_ITEMS = [
    "States the imaging modality",
    "States the laterality (OD/OS)",
    "Comments on image quality or gradability",
    "Flags acquisition artifacts when present",
    "Gives a primary diagnostic impression",
    "Reports a confidence level for the impression",
    "Lists differential or alternative diagnoses when applicable",
    "Cites the tool or measurement behind each key claim",
    "Describes lesion counts where lesions are segmented",
    "Describes lesion areas or sizes where lesions are segmented",
    "Separates observation from interpretation",
    "Notes unresolved disagreements between analyses",
    "Gives management recommendations",
    "States follow-up interval",
    "Advises on symptoms that warrant urgent review",
    "Avoids recommending treatment beyond the evidence",
    "Uses patient-appropriate language in the summary",
]

CONDITION_TEMPLATES = [
    "Identifies the hallmark imaging features of {c}",
    "States the severity, stage, or subtype of {c}",
    "Describes the anatomical location of {c} findings",
    "Quantifies the extent of {c} findings",
    "Notes secondary or associated findings of {c}",
    "Comments on the fellow eye risk for {c}",
    "Explains the link from imaging findings to the {c} diagnosis",
    "Addresses mimicking conditions that could be confused with {c}",
    "States the key risk factors relevant to {c}",
    "Relates {c} findings to visual symptoms",
    "Recommends the appropriate referral pathway for {c}",
    "Recommends condition-specific treatment options for {c}",
    "States monitoring or imaging follow-up for {c}",
    "Advises on modifiable risk factors for {c}",
    "Mentions the prognosis or expected course of {c}",
]


def build_rubric() -> dict:
    items = []
    for i, text in enumerate(GENERAL_ITEMS, start=1):
        items.append({"item_id": f"gen-{i:03d}", "description": text,
                      "applicable_conditions": []})
    for c_index, condition in enumerate(RUBRIC_CONDITIONS, start=1):
        slug = "".join(w[0] for w in condition.split())[:4] + f"{c_index:02d}"
        for i, template in enumerate(CONDITION_TEMPLATES, start=1):
            items.append({
                "item_id": f"{slug}-{i:02d}",
                "description": template.format(c=condition),
                "applicable_conditions": [condition],
            })
    assert len(items) == 197, len(items)
    return {"rubric_version": "1.0", "items": items}


RECOMMENDATIONS = {
    "normal": "routine follow-up; consult if symptomatic",
    "diabetic retinopathy": "optimize glycemic and blood pressure control; retina "
                            "referral timed to severity; annual screening at minimum",
    "nonproliferative diabetic retinopathy": "optimize glycemic control; retina review "
                                             "within 3-6 months depending on severity",
    "proliferative diabetic retinopathy": "urgent retina referral for panretinal "
                                          "photocoagulation or anti-VEGF therapy",
    "diabetic macular edema": "retina referral for anti-VEGF therapy; optimize "
                              "systemic control",
    "age-related macular degeneration": "AREDS2 supplementation if intermediate; home "
                                        "Amsler monitoring; retina review",
    "early age-related macular degeneration": "lifestyle measures and home Amsler "
                                              "monitoring; review in 12 months",
    "intermediate age-related macular degeneration": "AREDS2 supplementation; home "
                                                     "monitoring; review in 6-12 months",
    "wet age-related macular degeneration": "prompt intravitreal anti-VEGF therapy; "
                                            "urgent retina referral",
    "dry age-related macular degeneration": "AREDS2 supplementation and monitoring for "
                                            "conversion to neovascular disease",
    "glaucoma": "intraocular pressure measurement, perimetry, and glaucoma service "
                "referral for pressure-lowering treatment",
    "glaucoma suspect": "intraocular pressure check, perimetry, and scheduled review",
    "pathological myopia": "monitor for choroidal neovascularization; myopia service "
                           "review; urgent review if new distortion",
    "retinal vein occlusion": "macular edema surveillance; systemic vascular work-up "
                              "including blood pressure and glucose",
    "central retinal vein occlusion": "retina referral; anti-VEGF for macular edema; "
                                      "monitor for neovascular complications; systemic "
                                      "vascular work-up",
    "branch retinal vein occlusion": "retina review; anti-VEGF if macular edema; "
                                     "systemic vascular work-up",
    "central serous chorioretinopathy": "review corticosteroid exposure; observe 3 "
                                        "months; retina referral if persistent",
    "macular hole": "vitreoretinal referral for vitrectomy assessment",
    "epiretinal membrane": "observe if mild; vitreoretinal referral when distortion "
                           "degrades acuity",
    "retinal detachment": "urgent same-day vitreoretinal referral",
    "hypertensive retinopathy": "blood pressure review and management with the "
                                "patient's physician",
    "default": "correlate with the clinical picture and arrange ophthalmology review",
}


def main() -> None:
    (DATA / "cases").mkdir(parents=True, exist_ok=True)
    catalog = build_catalog()
    (DATA / "catalog.json").write_text(json.dumps(catalog, indent=1, sort_keys=True) + "\n")
    emit(build_cases())
    (DATA / "rubric.json").write_text(json.dumps(build_rubric(), indent=1, sort_keys=True) + "\n")
    (DATA / "recommendations.json").write_text(
        json.dumps(RECOMMENDATIONS, indent=1, sort_keys=True) + "\n")
    print("wrote catalog, corpus (30 cases), fixtures, rubric (197 items), recommendations")


if __name__ == "__main__":
    main()
