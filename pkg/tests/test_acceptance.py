"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

Run with `pytest tests/test_acceptance.py -v -s` to see the per-criterion lines.
Tolerances are pinned in the assertions, not configurable.
"""

import json
import re
import sys
import time

from ocuflow.adapters import AdapterContext, AdapterSet, FixtureStore
from ocuflow.core import parse_case
from ocuflow.evaluation import (
    ChecklistRubric,
    RatingRecord,
    aggregate_ratings,
    cohen_kappa,
    run_ablation,
    score_checklist,
    tool_usage_accuracy,
    wilson_interval,
)
from ocuflow.gateway.cli import main
from ocuflow.gateway.runtime import data_path
from ocuflow.orchestrator import Orchestrator
from ocuflow.planner import StubPlanner
from ocuflow.adapters import vessel_metrics

from .conftest import build_random_cases, make_orchestrator
from .test_evaluation import synthetic_usage_corpus


def report_line(number, ok, detail):
    status = "PASS" if ok else "FAIL"
    print(f"ACCEPTANCE {number:>2}: {status} - {detail}", file=sys.stderr, flush=True)
    assert ok, f"criterion {number}: {detail}"


class TestAcceptance:
    def test_01_tool_usage_accuracy_arithmetic(self):
        started = time.monotonic()
        score = tool_usage_accuracy(*synthetic_usage_corpus(942, 63, extras_per_case=2))
        target = 0.937
        ok = abs(score.accuracy - target) <= 0.0005 and (score.correct, score.incorrect) == (942, 63)
        baseline = score.accuracy
        for extras in (0, 5, 11):
            perturbed = tool_usage_accuracy(
                *synthetic_usage_corpus(942, 63, extras_per_case=extras))
            ok = ok and perturbed.accuracy == baseline
        elapsed = time.monotonic() - started
        ok = ok and elapsed < 1.0
        report_line(1, ok, f"942/1005 -> {score.accuracy:.4f} (target 93.7% +/- 0.05%), "
                           f"extras inert, {elapsed:.3f}s")

    def test_02_avr_reproduction(self):
        metrics = vessel_metrics({"crae": 9.16, "crve": 17.53,
                                  "vessel_area_density": 14.43,
                                  "fractal_dimension_artery": 1.746})
        ok = abs(metrics.avr - 0.523) <= 0.0005
        report_line(2, ok, f"crae 9.16 / crve 17.53 -> avr {metrics.avr} (0.523 +/- 0.0005)")

    def test_03_golden_trace_determinism(self, tmp_path):
        started = time.monotonic()
        case_path = str(data_path("cases", "crvo.json"))
        outs = []
        for sub in ("a", "b"):
            out = tmp_path / sub
            assert main(["run", "--case", case_path, "--tier", "5", "--seed", "7",
                         "--out-dir", str(out)]) == 0
            outs.append((out / "crvo-uwf-01.trace.jsonl").read_bytes())
        identical = outs[0] == outs[1]

        events = [json.loads(l) for l in outs[0].decode().splitlines()[1:]]
        invoked = [e["payload"]["tool_id"] for e in events if e["kind"] == "invocation"]
        required = ["modality_classifier", "quality_assessor", "laterality_classifier",
                    "general_screener", "rvo_classifier", "seg_uwf_lesion"]
        cursor = 0
        for tool in invoked:
            if cursor < len(required) and tool == required[cursor]:
                cursor += 1
        ordered = cursor == len(required)
        final = [e for e in events if e["kind"] == "final_report"]
        has_report = len(final) == 1
        findings = final[0]["payload"]["findings"] if final else {}
        modality_ok = (findings.get("modality", {}).get("label") == "SLO"
                       and findings.get("modality", {}).get("probability") == 0.988)
        laterality_ok = (findings.get("laterality", {}).get("label") == "OS"
                         and findings.get("laterality", {}).get("probability") == 0.871)
        elapsed = time.monotonic() - started
        ok = identical and ordered and has_report and modality_ok and laterality_ok and elapsed < 5.0
        report_line(3, ok, f"byte-identical={identical}, chain-order={ordered}, "
                           f"SLO 0.988={modality_ok}, OS 0.871={laterality_ok}, {elapsed:.2f}s")

    def test_04_specialist_rule_property(self, registry):
        cases, store, tiers = build_random_cases(registry, 220, seed=77)
        orch = make_orchestrator(registry, store)
        checked = 0
        violations = []
        for case, tier in zip(cases, tiers):
            run = orch.run_case(case, tier=tier, seed=0)
            invoked = {e.payload["tool_id"] for e in run.trace.invocation_events()}
            screening = next((e for e in run.trace.invocation_events()
                              if e.payload["tool_id"] == "general_screener"
                              and e.payload["result"]["status"] == "ok"), None)
            modality = run.findings.modality["label"] if run.findings.modality else None
            if screening is None or modality is None:
                continue
            top = screening.payload["result"]["payload"]["predictions"][0]["label"]
            toolset = registry.tier_subset(tier)
            expected = {
                t.tool_id for t in toolset.tools
                if t.capability == "disease-specific" and t.addresses(top)
                and t.accepts_modality(modality)
            }
            if expected:
                checked += 1
                if not expected <= invoked:
                    violations.append((case.case_id, tier, top, expected - invoked))
        ok = len(cases) >= 200 and not violations and checked >= 30
        report_line(4, ok, f"{len(cases)} randomized cases, {checked} with an active "
                           f"specialist, {len(violations)} violations")

    def test_05_ablation_harness_shape(self, engine, corpus):
        started = time.monotonic()
        result = run_ablation(corpus, [1, 2, 3, 4, 5], engine.run_case, seed=0)
        five_rows = len(result.tiers) == 5
        by_tier = {t.tier: t for t in result.tiers}
        monotone_ends = by_tier[5].accuracy >= by_tier[1].accuracy

        # independent brute-force matcher: normalize + alias fold, written inline
        aliases = {
            "wet amd": "wet age-related macular degeneration",
            "dry amd": "dry age-related macular degeneration",
            "crvo": "central retinal vein occlusion",
            "brvo": "branch retinal vein occlusion",
            "pdr": "proliferative diabetic retinopathy",
        }

        def canon(label):
            label = re.sub(r"\s+", " ", label.strip().lower())
            return aliases.get(label, label)

        truth = {c.case_id: c.ground_truth.diagnosis for c in corpus}
        rescored_ok = True
        for tier_row in result.tiers:
            hits = sum(1 for case_id, label in tier_row.labels
                       if canon(label) == canon(truth[case_id]))
            rescored = hits / len(tier_row.labels)
            if abs(rescored - tier_row.accuracy) > 1e-12:
                rescored_ok = False

        containment = True
        for tier in (1, 3, 5):
            allowed = engine.registry.tier_subset(tier).tool_ids
            for case in corpus:
                run = engine.run_case(case, tier=tier, seed=0)
                if not set(run.trace.invoked_tool_ids()) <= allowed:
                    containment = False
        elapsed = time.monotonic() - started
        ok = (five_rows and monotone_ends and rescored_ok and containment
              and not result.errors and elapsed < 60.0)
        report_line(5, ok, f"5 rows, tier1 {by_tier[1].accuracy:.4f} <= tier5 "
                           f"{by_tier[5].accuracy:.4f}, re-score identical={rescored_ok}, "
                           f"containment={containment}, {elapsed:.1f}s")

    def test_06_statistics_oracles(self):
        lo, hi = wilson_interval(942, 1005, 0.95)
        wilson_ok = (abs(lo - 0.920598078029222) < 1e-9
                     and abs(hi - 0.9506983901269588) < 1e-9)
        boundary_ok = (wilson_interval(0, 10, 0.95)[0] == 0.0
                       and wilson_interval(10, 10, 0.95)[1] == 1.0)
        kappa = cohen_kappa([[20, 5], [10, 15]])
        kappa_ok = abs(kappa - 0.4) < 1e-9
        exact_ok = (cohen_kappa([[10, 0], [0, 10]]) == 1.0
                    and cohen_kappa([[25, 25], [25, 25]]) == 0.0)
        ok = wilson_ok and boundary_ok and kappa_ok and exact_ok
        report_line(6, ok, f"wilson(942,1005)=({lo:.12f},{hi:.12f}) vs oracle (1e-9), "
                           f"kappa={kappa:.12f} vs 0.4, boundaries exact={boundary_ok}")

    def test_07_rating_aggregation(self):
        def record(case_id, rater_id, **scores):
            base = {"accuracy": 3, "completeness": 3, "safety": 3,
                    "reasoning": 3, "interpretability": 3}
            base.update(scores)
            return RatingRecord(case_id=case_id, rater_id=rater_id, scores=base)

        # any (3, 2) pair resolves to 2
        pair = aggregate_ratings([record("x", "r1", reasoning=3),
                                  record("x", "r2", reasoning=2)])
        lower_rule_ok = pair["per_dimension"]["reasoning"]["good_pct"] == 0.0

        # hand-computed: 171/200 = 85.5% acceptable-or-better on accuracy,
        # 181/200 = 90.5% on completeness, 176/200 = 88.0% on safety
        records = []
        for i in range(200):
            records.append(record(f"c{i}", "r1",
                                  accuracy=2 if i < 171 else 1,
                                  completeness=2 if i < 181 else 1,
                                  safety=2 if i < 176 else 1))
            records.append(record(f"c{i}", "r2"))
        out = aggregate_ratings(records)
        exact_ok = (out["per_dimension"]["accuracy"]["acceptable_or_better_pct"] == 85.5
                    and out["per_dimension"]["completeness"]["acceptable_or_better_pct"] == 90.5
                    and out["per_dimension"]["safety"]["acceptable_or_better_pct"] == 88.0)
        ok = lower_rule_ok and exact_ok
        report_line(7, ok, f"lower-score rule={lower_rule_ok}, engineered shares "
                           f"85.5/90.5/88.0 exact={exact_ok}")

    def test_08_checklist_scoring(self):
        with data_path("rubric.json").open() as fh:
            rubric = ChecklistRubric.from_dict(json.load(fh))
        applicable = [item.item_id for item in rubric.items]
        full = score_checklist(applicable, rubric, applicable)
        zero = score_checklist([], rubric, applicable)
        partial = score_checklist(applicable[:160], rubric, applicable)
        monotone = True
        previous = -1.0
        for n in range(0, 197, 7):
            score = score_checklist(applicable[:n + 1], rubric, applicable)
            if score <= previous:
                monotone = False
            previous = score
        ok = (full == 1.0 and zero == 0.0 and abs(partial - 0.8122) <= 0.0001
              and len(rubric) == 197 and monotone)
        report_line(8, ok, f"full=1.0, zero=0.0, 160/197={partial:.4f} "
                           f"(0.8122 +/- 0.0001), monotone={monotone}")

    def test_09_schema_gate_fuzzing(self, registry):
        import random

        rng = random.Random(4242)
        mutations = [
            lambda: {},
            lambda: {"scores": {}},
            lambda: {"scores": {"a": round(rng.uniform(1.01, 9.0), 3)}},
            lambda: {"scores": {"a": round(rng.uniform(-5.0, -0.01), 3)}},
            lambda: {"scores": [0.4]},
            lambda: {"scores": {"a": "high"}},
            lambda: {"lesions": [{"lesion_type": "x"}]},
            lambda: {"lesions": [{"lesion_type": "x", "areas": [-3.0]}]},
            lambda: {"lesions": {"x": []}},
            lambda: {"detections": [{"label": "y", "confidence": 1.4}]},
            lambda: {"detections": [{"confidence": 0.4}]},
            lambda: {"quantity": "q"},
            lambda: {"quantity": "q", "value": "much"},
            lambda: {"artifact_kind": "hologram", "artifact_ref": "r", "derived_from": []},
            lambda: {"artifact_kind": "image-2d", "derived_from": []},
            lambda: {"crae": 9.0, "crve": 0.0, "vessel_area_density": 5.0,
                     "fractal_dimension_artery": 1.2},
            lambda: {"crae": 9.0, "crve": 17.0, "vessel_area_density": 400.0,
                     "fractal_dimension_artery": 1.2},
            lambda: {"hits": [{"passage_id": "p"}]},
            lambda: None,
            lambda: [],
            lambda: "garbage",
            lambda: 13,
        ]
        tools = sorted(registry.tools.values(), key=lambda t: t.tool_id)
        tools = [t for t in tools if t.backend.kind == "fixture"]

        store = FixtureStore()
        adapters = AdapterSet(registry, AdapterContext(fixture_store=store))
        orch = Orchestrator(registry, adapters)
        ok_status = 0
        missing_failure_events = 0
        total = 1000
        for i in range(total):
            tool = tools[i % len(tools)]
            payload = rng.choice(mutations)()
            image_id = f"fuzz{i:04d}"
            if tool.is_image_tool:
                bindings = {"image_id": f"case:image:{image_id}"}
                key = image_id
            else:
                bindings = {"query": "case:query"}
                key = None
            if key is not None:
                store.put(tool.tool_id, key, payload)
            else:
                store.set_default(tool.tool_id, payload)
            # satisfy the tool's usage gates so the invocation actually fires
            assume = {p.fact: p.one_of[0] for p in tool.usage_conditions}
            recording = {"plan": [{
                "step_id": "s1", "tool_id": tool.tool_id,
                "input_bindings": bindings, "assume_facts": assume,
            }]}
            stub = Orchestrator(registry, adapters, planner=StubPlanner(recording))
            case = parse_case({
                "case_id": f"fuzz-case-{i}", "query": "check",
                "images": [{"image_id": image_id, "uri": f"fixture://{image_id}"}],
            })
            run = stub.run_case(case, tier=5, seed=0)
            invocations = run.trace.invocation_events()
            statuses = [e.payload["result"]["status"] for e in invocations]
            if "ok" in statuses:
                ok_status += 1
            failures = [e for e in run.trace.events if e.kind == "validation_failure"]
            if not failures:
                missing_failure_events += 1
        ok = ok_status == 0 and missing_failure_events == 0
        report_line(9, ok, f"{total} malformed payloads: ok-status={ok_status}, "
                           f"rejections without validation_failure event={missing_failure_events}")

    def test_10_tier_cardinalities(self, registry):
        sizes = registry.tier_sizes()
        nested = all(
            registry.tier_subset(t).tool_ids <= registry.tier_subset(t + 1).tool_ids
            for t in range(1, 5)
        )
        ok = sizes == [5, 14, 35, 46, 53] and nested
        report_line(10, ok, f"tier sizes {sizes} (expected [5, 14, 35, 46, 53]), nested={nested}")
