"""Agentic orchestration engine for schema-validated diagnostic tool pipelines.

Modules
-------
core          shared domain vocabulary (cases, predictions, lesions, reports)
registry      data-driven tool catalog with schema gate and ablation tiers
adapters      fixture / subprocess / http backends and payload post-processing
plans         plans, reasoning traces, conflicts, integrated findings
planner       rule planner + recorded-response stub (LLM seam)
orchestrator  the five-stage plan/execute/verify/integrate/respond loop
knowledge     lexical retrieval and citation grounding
evaluation    tool-usage / diagnostic accuracy, ratings, checklist, statistics
gateway       CLI, HTTP service, bit-exact file formats, embedded store
"""

__version__ = "0.1.0"
