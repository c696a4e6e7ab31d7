"""Command-line entry points.

Subcommands: run | ablate | eval-tools | eval-report | serve | catalog-lint.
Every long flag can be overridden through AGENT_<FLAG> environment variables
(e.g. AGENT_TIER=3). Exit codes: 0 success, 1 orchestration/eval failure,
2 configuration error, 3 case/corpus parse error.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path
from typing import Any, Optional

from ..core import OcuflowError, canonical_json
from ..evaluation import (
    ChecklistRubric,
    RatingRecord,
    aggregate_ratings,
    run_ablation,
    score_checklist,
    tool_usage_accuracy,
    wilson_interval,
)
from ..registry import load_catalog_file
from . import formats
from .runtime import RunConfig, build_engine, data_path

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_CONFIG = 2
EXIT_PARSE = 3


def _env(name: str, default: Any) -> Any:
    return os.environ.get(f"AGENT_{name.upper().replace('-', '_')}", default)


def _add_engine_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--catalog", default=_env("catalog", None),
                        help="catalog document path (defaults to the bundled reference catalog)")
    parser.add_argument("--fixtures", default=_env("fixtures", None),
                        help="fixture directory (defaults to the bundled fixtures)")
    parser.add_argument("--kb", default=_env("kb", None),
                        help="knowledge corpus directory (defaults to the bundled stand-in corpus)")
    parser.add_argument("--tier", type=int, choices=range(1, 6),
                        default=int(_env("tier", 5)), help="ablation tier (1..5)")
    parser.add_argument("--seed", type=int, default=int(_env("seed", 0)))
    parser.add_argument("--planner", choices=("rules", "llm-stub"),
                        default=_env("planner", "rules"))
    parser.add_argument("--parallelism", type=int, default=int(_env("parallelism", 1)))
    parser.add_argument("--conflict-margin", type=float,
                        default=float(_env("conflict_margin", 0.2)))
    parser.add_argument("--revision-rounds", type=int,
                        default=int(_env("revision_rounds", 2)))
    parser.add_argument("--classification-threshold", type=float,
                        default=float(_env("classification_threshold", 0.3)))


def _engine_config(args: argparse.Namespace) -> RunConfig:
    kwargs: dict[str, Any] = {
        "tier": args.tier,
        "seed": args.seed,
        "planner": args.planner,
        "parallelism": args.parallelism,
        "conflict_margin": args.conflict_margin,
        "revision_rounds": args.revision_rounds,
        "classification_threshold": args.classification_threshold,
    }
    if args.catalog:
        kwargs["catalog_path"] = Path(args.catalog)
    if args.fixtures:
        kwargs["fixture_root"] = Path(args.fixtures)
    if args.kb:
        kwargs["kb_root"] = Path(args.kb)
    return RunConfig(**kwargs)


def cmd_run(args: argparse.Namespace) -> int:
    try:
        config = _engine_config(args)
        engine = build_engine(config)
    except (FileNotFoundError, ValueError, OcuflowError) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        case = formats.load_case_file(args.case)
    except (OcuflowError, json.JSONDecodeError, FileNotFoundError) as exc:
        print(f"case parse error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    try:
        run = engine.run_case(case)
    except Exception as exc:
        print(f"orchestration failure: {exc}", file=sys.stderr)
        return EXIT_FAILURE
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    trace_path = out_dir / f"{case.case_id}.trace.jsonl"
    report_path = out_dir / f"{case.case_id}.report.json"
    formats.write_trace_file(run.trace, trace_path)
    formats.write_report_file(run.report, report_path)
    print(f"trace:  {trace_path}")
    print(f"report: {report_path}")
    return EXIT_OK if run.trace.completed else EXIT_FAILURE


def cmd_ablate(args: argparse.Namespace) -> int:
    try:
        tiers = [int(t) for t in str(args.tiers).split(",") if t.strip()]
        if not tiers or any(t < 1 or t > 5 for t in tiers):
            raise ValueError(f"tiers must be within 1..5, got {args.tiers!r}")
        config = _engine_config(args)
        engine = build_engine(config)
    except (FileNotFoundError, ValueError, OcuflowError) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        corpus = formats.load_corpus(args.corpus)
    except (OcuflowError, json.JSONDecodeError, FileNotFoundError) as exc:
        print(f"corpus parse error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    if not corpus:
        print("corpus parse error: corpus is empty", file=sys.stderr)
        return EXIT_PARSE

    result = run_ablation(corpus, tiers, engine.run_case, seed=args.seed)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    (out_dir / "ablation.json").write_text(canonical_json(result.to_dict()) + "\n")
    (out_dir / "ablation.txt").write_text(result.table() + "\n")
    print(result.table())
    if result.errors:
        print(f"{len(result.errors)} case(s) errored; see ablation.json", file=sys.stderr)
        return EXIT_FAILURE
    return EXIT_OK


def cmd_eval_tools(args: argparse.Namespace) -> int:
    try:
        corpus = formats.load_corpus(args.corpus)
        gts = formats.corpus_tool_ground_truth(corpus)
    except (OcuflowError, json.JSONDecodeError, FileNotFoundError) as exc:
        print(f"corpus parse error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    trace_dir = Path(args.traces)
    pairs = []
    for path in sorted(trace_dir.glob("*.trace.jsonl")):
        pairs.append(formats.trace_invoked_tools(path.read_text()))
    if not pairs:
        print("no trace files found", file=sys.stderr)
        return EXIT_PARSE
    try:
        score = tool_usage_accuracy(pairs, gts)
    except OcuflowError as exc:
        print(f"evaluation failure: {exc}", file=sys.stderr)
        return EXIT_FAILURE
    lo, hi = wilson_interval(score.correct, score.correct + score.incorrect, 0.95)
    doc = {**score.to_dict(), "wilson_95": [lo, hi]}
    print(canonical_json(doc))
    if args.out:
        Path(args.out).write_text(canonical_json(doc) + "\n")
    return EXIT_OK


def cmd_eval_report(args: argparse.Namespace) -> int:
    if not args.ratings and not args.checklist:
        print("configuration error: provide --ratings and/or --checklist", file=sys.stderr)
        return EXIT_CONFIG
    output: dict[str, Any] = {}
    try:
        if args.ratings:
            records = []
            with open(args.ratings) as fh:
                for line in fh:
                    if line.strip():
                        raw = json.loads(line)
                        records.append(RatingRecord(
                            case_id=raw["case_id"], rater_id=raw["rater_id"],
                            scores=raw["scores"],
                        ))
            subgroups = None
            if args.subgroups:
                subgroups = json.loads(Path(args.subgroups).read_text())
            output["ratings"] = aggregate_ratings(records, subgroups)
        if args.checklist:
            doc = json.loads(Path(args.checklist).read_text())
            rubric_path = args.rubric or str(data_path("rubric.json"))
            rubric = ChecklistRubric.from_dict(json.loads(Path(rubric_path).read_text()))
            scores = {}
            for entry in doc["reports"]:
                applicable = entry.get("applicable") or sorted(
                    rubric.applicable_for(entry["condition"]))
                scores[entry["case_id"]] = score_checklist(entry["hits"], rubric, applicable)
            output["checklist"] = {
                "per_case": scores,
                "mean": sum(scores.values()) / len(scores) if scores else 0.0,
            }
    except (OcuflowError, json.JSONDecodeError, FileNotFoundError, KeyError) as exc:
        print(f"evaluation input error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    print(canonical_json(output))
    if args.out:
        Path(args.out).write_text(canonical_json(output) + "\n")
    return EXIT_OK


def cmd_catalog_lint(args: argparse.Namespace) -> int:
    path = args.catalog or str(data_path("catalog.json"))
    try:
        registry = load_catalog_file(path, allow_sparse_tiers=args.allow_sparse_tiers)
    except (OcuflowError, json.JSONDecodeError, FileNotFoundError) as exc:
        print(f"catalog error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    sizes = registry.tier_sizes()
    print(f"catalog ok: {len(registry.tools)} tools, tier sizes {sizes}")
    for note in registry.notes:
        print(f"note: {note}")
    return EXIT_OK


def cmd_serve(args: argparse.Namespace) -> int:
    try:
        config = _engine_config(args)
    except (FileNotFoundError, ValueError, OcuflowError) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    import uvicorn

    from .service import create_app

    app = create_app(config, store_path=args.db, enable_upload_stub=args.enable_upload_stub)
    uvicorn.run(app, host=args.host, port=args.port, log_level="info")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ocuflow",
        description="Plan/execute/verify orchestration over schema-validated diagnostic tools.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="orchestrate one case and write trace + report")
    p_run.add_argument("--case", required=True, help="case document (JSON)")
    p_run.add_argument("--out-dir", default=_env("out_dir", "."))
    _add_engine_flags(p_run)
    p_run.set_defaults(func=cmd_run)

    p_ablate = sub.add_parser("ablate", help="run the tier ablation over a corpus")
    p_ablate.add_argument("--corpus", required=True, help="line-delimited case corpus")
    p_ablate.add_argument("--tiers", default=_env("tiers", "1,2,3,4,5"))
    p_ablate.add_argument("--out", default=_env("out", "ablation-out"))
    _add_engine_flags(p_ablate)
    p_ablate.set_defaults(func=cmd_ablate)

    p_tools = sub.add_parser("eval-tools", help="score tool-usage accuracy from traces + ground truth")
    p_tools.add_argument("--traces", required=True, help="directory of *.trace.jsonl files")
    p_tools.add_argument("--corpus", required=True, help="corpus with expected_tools ground truth")
    p_tools.add_argument("--out", default=None)
    p_tools.set_defaults(func=cmd_eval_tools)

    p_report = sub.add_parser("eval-report", help="aggregate expert ratings / checklist scores")
    p_report.add_argument("--ratings", default=None, help="line-delimited RatingRecord documents")
    p_report.add_argument("--subgroups", default=None, help="JSON map case_id -> subgroup")
    p_report.add_argument("--checklist", default=None,
                          help='JSON {"reports": [{case_id, condition, hits[]}]}')
    p_report.add_argument("--rubric", default=None, help="rubric JSON (defaults to bundled 197-item rubric)")
    p_report.add_argument("--out", default=None)
    p_report.set_defaults(func=cmd_eval_report)

    p_serve = sub.add_parser("serve", help="start the HTTP service")
    p_serve.add_argument("--host", default=_env("host", "127.0.0.1"))
    p_serve.add_argument("--port", type=int, default=int(_env("port", 8080)))
    p_serve.add_argument("--db", default=_env("db", "ocuflow.db"))
    p_serve.add_argument("--enable-upload-stub", action="store_true",
                         default=bool(_env("enable_upload_stub", "")))
    _add_engine_flags(p_serve)
    p_serve.set_defaults(func=cmd_serve)

    p_lint = sub.add_parser("catalog-lint", help="validate a catalog document")
    p_lint.add_argument("--catalog", default=None)
    p_lint.add_argument("--allow-sparse-tiers", action="store_true")
    p_lint.set_defaults(func=cmd_catalog_lint)

    return parser


def main(argv: Optional[list[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
