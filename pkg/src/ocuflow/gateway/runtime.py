"""Run configuration and engine assembly shared by the CLI and the service."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Any, Optional

from ..adapters import AdapterContext, AdapterSet, FixtureStore
from ..knowledge import Index, ingest_dir
from ..orchestrator import Orchestrator, OrchestratorConfig
from ..planner import RulePlanner, StubPlanner
from ..registry import Registry, load_catalog_file

PLANNERS = ("rules", "llm-stub")


def data_path(*parts: str) -> Path:
    """Path into the bundled reference data (catalog, fixtures, corpus, kb)."""
    root = resources.files("ocuflow") / "data"
    return Path(str(root.joinpath(*parts)))


@dataclass
class RunConfig:
    catalog_path: Path = field(default_factory=lambda: data_path("catalog.json"))
    fixture_root: Path = field(default_factory=lambda: data_path("fixtures"))
    kb_root: Optional[Path] = field(default_factory=lambda: data_path("kb"))
    tier: int = 5
    planner: str = "rules"
    seed: int = 0
    parallelism: int = 1
    conflict_margin: float = 0.2
    revision_rounds: int = 2
    classification_threshold: float = 0.3

    def __post_init__(self) -> None:
        self.catalog_path = Path(self.catalog_path)
        self.fixture_root = Path(self.fixture_root)
        if self.kb_root is not None:
            self.kb_root = Path(self.kb_root)
        if not self.catalog_path.exists():
            raise FileNotFoundError(f"catalog not found: {self.catalog_path}")
        if not self.fixture_root.exists():
            raise FileNotFoundError(f"fixture root not found: {self.fixture_root}")
        if not 1 <= self.tier <= 5:
            raise ValueError(f"tier {self.tier} outside 1..5")
        if self.planner not in PLANNERS:
            raise ValueError(f"planner must be one of {PLANNERS}")


def load_recommendations() -> dict[str, str]:
    with data_path("recommendations.json").open() as fh:
        return json.load(fh)


@dataclass
class Engine:
    registry: Registry
    adapters: AdapterSet
    orchestrator: Orchestrator
    knowledge_index: Optional[Index]
    config: RunConfig

    def run_case(self, case, tier: Optional[int] = None, seed: Optional[int] = None,
                 trace_observer=None):
        return self.orchestrator.run_case(
            case,
            tier=tier if tier is not None else self.config.tier,
            seed=seed if seed is not None else self.config.seed,
            trace_observer=trace_observer,
        )


def build_engine(config: RunConfig, stub_recording: Optional[dict[str, Any]] = None) -> Engine:
    registry = load_catalog_file(config.catalog_path)
    fixtures = FixtureStore.load_dir(config.fixture_root)
    index = None
    if config.kb_root is not None and Path(config.kb_root).exists():
        index = ingest_dir(config.kb_root)
    context = AdapterContext(fixture_store=fixtures, knowledge_index=index)
    adapters = AdapterSet(registry, context)
    orch_config = OrchestratorConfig(
        conflict_margin=config.conflict_margin,
        revision_rounds=config.revision_rounds,
        classification_threshold=config.classification_threshold,
        parallelism=config.parallelism,
        recommendations=load_recommendations(),
    )
    if config.planner == "llm-stub":
        planner = StubPlanner(stub_recording)
    else:
        planner = RulePlanner(orch_config.planner_config())
    orchestrator = Orchestrator(
        registry=registry, adapters=adapters, planner=planner,
        config=orch_config, knowledge_index=index,
    )
    return Engine(
        registry=registry, adapters=adapters, orchestrator=orchestrator,
        knowledge_index=index, config=config,
    )
