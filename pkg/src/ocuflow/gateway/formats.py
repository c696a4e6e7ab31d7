"""Bit-exact wire and file formats owned by the gateway.

Corpus file   : line-delimited case documents
                {case_id, images[{image_id, uri, modality_hint?, laterality_hint?}],
                 query, ground_truth?{diagnosis, expected_tools[], modality}}
Trace file    : line 1 header {case_id, seed, catalog_hash, tier}; then one
                event document {seq, ts, kind, payload} per line. `ts` is a
                deterministic logical tick so identical runs are byte-identical.
Tool transport: request {request_id, tool_id, inputs} / response
                {request_id, status: ok|error, output?|reason?}; one JSON
                document per exchange on stdin/stdout (subprocess) or as the
                POST body (http). Encoders live in adapters and are re-exported
                here as the format's single source of truth.
"""

from __future__ import annotations

import json
from pathlib import Path
from typing import Any, Iterator, Mapping

from ..adapters import decode_tool_response, encode_tool_request  # noqa: F401  (format surface)
from ..core import ClinicalCase, canonical_json, parse_case
from ..evaluation import ToolGroundTruth


def case_to_document(case: ClinicalCase) -> dict[str, Any]:
    doc: dict[str, Any] = {
        "case_id": case.case_id,
        "images": [
            {
                "image_id": img.image_id,
                "uri": img.uri,
                **({"modality_hint": img.modality_hint.code} if img.modality_hint else {}),
                **({"laterality_hint": img.laterality_hint} if img.laterality_hint else {}),
            }
            for img in case.images
        ],
        "query": case.query,
    }
    if case.ground_truth is not None:
        gt: dict[str, Any] = {}
        if case.ground_truth.diagnosis:
            gt["diagnosis"] = case.ground_truth.diagnosis
        if case.ground_truth.expected_tools:
            gt["expected_tools"] = list(case.ground_truth.expected_tools)
        if case.ground_truth.modality:
            gt["modality"] = case.ground_truth.modality
        doc["ground_truth"] = gt
    return doc


def load_case_file(path: Path | str) -> ClinicalCase:
    return parse_case(json.loads(Path(path).read_text()))


def iter_corpus(path: Path | str) -> Iterator[ClinicalCase]:
    with Path(path).open() as fh:
        for line in fh:
            line = line.strip()
            if line:
                yield parse_case(json.loads(line))


def load_corpus(path: Path | str) -> list[ClinicalCase]:
    return list(iter_corpus(path))


def corpus_tool_ground_truth(cases: list[ClinicalCase]) -> list[ToolGroundTruth]:
    return [
        ToolGroundTruth(case_id=c.case_id, expected_tools=frozenset(c.ground_truth.expected_tools))
        for c in cases
        if c.ground_truth is not None and c.ground_truth.expected_tools
    ]


def write_trace_file(trace, path: Path | str) -> None:
    Path(path).write_text(trace.serialize())


def parse_trace_lines(text: str) -> tuple[Mapping[str, Any], list[Mapping[str, Any]]]:
    lines = [l for l in text.splitlines() if l.strip()]
    if not lines:
        raise ValueError("empty trace file")
    header = json.loads(lines[0])
    events = [json.loads(l) for l in lines[1:]]
    return header, events


def trace_invoked_tools(text: str) -> tuple[str, set[str]]:
    header, events = parse_trace_lines(text)
    invoked = {e["payload"]["tool_id"] for e in events if e["kind"] == "invocation"}
    return header["case_id"], invoked


def write_report_file(report, path: Path | str) -> None:
    Path(path).write_text(canonical_json(report.to_dict()) + "\n")
