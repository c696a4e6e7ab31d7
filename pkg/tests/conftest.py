import random

import pytest

from ocuflow.adapters import AdapterContext, AdapterSet, FixtureStore
from ocuflow.core import parse_case
from ocuflow.gateway import formats
from ocuflow.gateway.runtime import RunConfig, build_engine, data_path
from ocuflow.registry import load_catalog_file


@pytest.fixture(scope="session")
def engine():
    return build_engine(RunConfig())


@pytest.fixture(scope="session")
def registry():
    return load_catalog_file(data_path("catalog.json"))


@pytest.fixture(scope="session")
def corpus():
    return formats.load_corpus(data_path("corpus", "cases.jsonl"))


@pytest.fixture()
def crvo_case():
    return formats.load_case_file(data_path("cases", "crvo.json"))


def showcase_case(name):
    return formats.load_case_file(data_path("cases", f"{name}.json"))


# ---------------------------------------------------------------------------
# Randomized fixture-backed case generation (seeded, reproducible)

CONDITION_POOL = [
    "diabetic retinopathy", "age-related macular degeneration", "glaucoma",
    "pathological myopia", "retinal vein occlusion",
    "central serous chorioretinopathy", "macular hole", "epiretinal membrane",
    "retinal detachment", "normal", "hypertensive retinopathy",
    "choroidal melanoma", "optic neuritis",
    "wet age-related macular degeneration", "branch retinal vein occlusion",
]
MODALITY_POOL = ["CFP", "OCT", "SLO", "UWF-SLO", "FFA", "ICGA", "FAF"]


def build_random_cases(registry, n, seed):
    """n fixture-backed cases with randomized modality/screening outcomes.

    Returns (cases, store, tiers): every generated case keys its own image id,
    so one shared FixtureStore serves all of them.
    """
    rng = random.Random(seed)
    store = FixtureStore()
    for tool in registry.tools.values():
        if tool.capability == "disease-specific":
            store.set_default(tool.tool_id, {"scores": {"normal": 0.9}})
        elif tool.task == "segmentation":
            store.set_default(tool.tool_id, {"lesions": []})
        elif tool.task == "detection":
            store.set_default(tool.tool_id, {"detections": []})
    store.set_default("quality_assessor", {"scores": {"gradable": 0.95, "ungradable": 0.05}})
    store.set_default("laterality_classifier", {"scores": {"OD": 0.6, "OS": 0.4}})
    store.set_default("referral_triage", {"scores": {"no referral needed": 0.8}})

    cases = []
    tiers = []
    for i in range(n):
        image_id = f"rand{i:04d}"
        modality = rng.choice(MODALITY_POOL)
        condition = rng.choice(CONDITION_POOL)
        top_p = round(rng.uniform(0.35, 0.99), 3)
        scores = {condition: top_p}
        if rng.random() < 0.4:
            alt = rng.choice([c for c in CONDITION_POOL if c != condition])
            scores[alt] = round(rng.uniform(0.05, top_p - 0.01), 3)
        store.put("modality_classifier", image_id, {"scores": {modality: round(rng.uniform(0.8, 0.99), 3)}})
        store.put("general_screener", image_id, {"scores": scores})
        cases.append(parse_case({
            "case_id": f"rand-case-{i:04d}",
            "images": [{"image_id": image_id, "uri": f"fixture://{image_id}"}],
            "query": "What is the diagnosis?",
        }))
        tiers.append(rng.randint(1, 5))
    return cases, store, tiers


def make_orchestrator(registry, store, **config_kwargs):
    from ocuflow.orchestrator import Orchestrator, OrchestratorConfig

    adapters = AdapterSet(registry, AdapterContext(fixture_store=store))
    return Orchestrator(registry, adapters, config=OrchestratorConfig(**config_kwargs))
