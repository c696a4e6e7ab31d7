import json

import pytest
from fastapi.testclient import TestClient

from ocuflow.gateway import formats
from ocuflow.gateway.cli import main
from ocuflow.gateway.runtime import RunConfig, data_path
from ocuflow.gateway.service import create_app
from ocuflow.gateway.store import EmbeddedStore


def crvo_path():
    return str(data_path("cases", "crvo.json"))


class TestCliRun:
    def test_run_twice_byte_identical_traces(self, tmp_path):
        out1, out2 = tmp_path / "a", tmp_path / "b"
        for out in (out1, out2):
            code = main(["run", "--case", crvo_path(), "--tier", "5",
                         "--seed", "7", "--out-dir", str(out)])
            assert code == 0
        t1 = (out1 / "crvo-uwf-01.trace.jsonl").read_bytes()
        t2 = (out2 / "crvo-uwf-01.trace.jsonl").read_bytes()
        assert t1 == t2

    def test_invalid_tier_exits_2_naming_the_flag(self, capsys):
        with pytest.raises(SystemExit) as err:
            main(["run", "--case", crvo_path(), "--tier", "9"])
        assert err.value.code == 2
        assert "--tier" in capsys.readouterr().err

    def test_report_contains_six_sections(self, tmp_path):
        code = main(["run", "--case", str(data_path("cases", "pdr.json")),
                     "--out-dir", str(tmp_path)])
        assert code == 0
        report = json.loads((tmp_path / "pdr-cfp-01.report.json").read_text())
        assert set(report) == {"modality", "image_quality", "laterality",
                               "diagnosis", "evidence", "recommendations"}
        assert all(report[k] for k in report)

    def test_unparseable_case_exits_3(self, tmp_path):
        bad = tmp_path / "bad.json"
        bad.write_text("{\"query\": \"no case id\"}")
        assert main(["run", "--case", str(bad), "--out-dir", str(tmp_path)]) == 3

    def test_missing_catalog_exits_2(self, tmp_path):
        code = main(["run", "--case", crvo_path(), "--catalog",
                     str(tmp_path / "absent.json"), "--out-dir", str(tmp_path)])
        assert code == 2


class TestCliAblate:
    def test_two_tier_table(self, tmp_path):
        code = main(["ablate", "--corpus", str(data_path("corpus", "cases.jsonl")),
                     "--tiers", "1,5", "--out", str(tmp_path)])
        assert code == 0
        doc = json.loads((tmp_path / "ablation.json").read_text())
        tiers = {row["tier"]: row for row in doc["tiers"]}
        assert set(tiers) == {1, 5}
        assert tiers[5]["accuracy"] >= tiers[1]["accuracy"]
        table = (tmp_path / "ablation.txt").read_text()
        assert len(table.strip().splitlines()) == 3  # header + two rows

    def test_unknown_tier_list_exits_2(self, tmp_path):
        code = main(["ablate", "--corpus", str(data_path("corpus", "cases.jsonl")),
                     "--tiers", "0,6", "--out", str(tmp_path)])
        assert code == 2

    def test_empty_corpus_exits_3(self, tmp_path):
        empty = tmp_path / "empty.jsonl"
        empty.write_text("")
        code = main(["ablate", "--corpus", str(empty), "--out", str(tmp_path)])
        assert code == 3


class TestCliEval:
    def test_eval_tools_end_to_end(self, tmp_path, capsys):
        run_dir = tmp_path / "traces"
        for name in ("crvo", "mh"):
            assert main(["run", "--case", str(data_path("cases", f"{name}.json")),
                         "--out-dir", str(run_dir)]) == 0
        code = main(["eval-tools", "--traces", str(run_dir),
                     "--corpus", str(data_path("corpus", "cases.jsonl"))])
        assert code == 0
        doc = json.loads(capsys.readouterr().out.strip().splitlines()[-1])
        assert 0.0 <= doc["accuracy"] <= 1.0
        assert doc["wilson_95"][0] <= doc["accuracy"] <= doc["wilson_95"][1]

    def test_eval_report_ratings(self, tmp_path, capsys):
        ratings = tmp_path / "ratings.jsonl"
        rows = []
        for rater in ("r1", "r2"):
            rows.append(json.dumps({
                "case_id": "c1", "rater_id": rater,
                "scores": {"accuracy": 3, "completeness": 2, "safety": 3,
                           "reasoning": 3, "interpretability": 2},
            }))
        ratings.write_text("\n".join(rows) + "\n")
        assert main(["eval-report", "--ratings", str(ratings)]) == 0
        doc = json.loads(capsys.readouterr().out.strip().splitlines()[-1])
        assert doc["ratings"]["n_cases"] == 1
        assert doc["ratings"]["per_dimension"]["accuracy"]["good_pct"] == 100.0

    def test_eval_report_checklist(self, tmp_path, capsys):
        checklist = tmp_path / "checklist.json"
        checklist.write_text(json.dumps({
            "reports": [{"case_id": "c1", "condition": "normal",
                         "hits": ["gen-001", "gen-002"]}],
        }))
        assert main(["eval-report", "--checklist", str(checklist)]) == 0
        doc = json.loads(capsys.readouterr().out.strip().splitlines()[-1])
        assert 0.0 < doc["checklist"]["per_case"]["c1"] < 1.0

    def test_catalog_lint(self, capsys):
        assert main(["catalog-lint"]) == 0
        out = capsys.readouterr().out
        assert "[5, 14, 35, 46, 53]" in out


@pytest.fixture(scope="module")
def client():
    app = create_app(RunConfig(), store_path=":memory:")
    with TestClient(app) as c:
        yield c


def crvo_doc():
    return json.loads(data_path("cases", "crvo.json").read_text())


class TestService:
    def test_healthz(self, client):
        response = client.get("/healthz")
        assert response.status_code == 200
        assert response.json() == {"status": "ok"}

    def test_submit_and_stream_until_final_report(self, client):
        response = client.post("/v1/cases", json={"case": crvo_doc(), "tier": 5, "seed": 7})
        assert response.status_code == 202
        case_id = response.json()["case_id"]

        with client.stream("GET", f"/v1/cases/{case_id}/events") as stream:
            lines = [json.loads(l) for l in stream.iter_lines() if l]
        header, events = lines[0], lines[1:]
        assert header["case_id"] == case_id
        assert header["tier"] == 5 and header["seed"] == 7
        assert [e["seq"] for e in events] == list(range(len(events)))
        assert events[-1]["kind"] == "final_report"

        report = client.get(f"/v1/cases/{case_id}/report")
        assert report.status_code == 200
        assert set(report.json()) == {"modality", "image_quality", "laterality",
                                      "diagnosis", "evidence", "recommendations"}

    def test_stream_replays_for_late_subscribers(self, client):
        response = client.post("/v1/cases", json={"case": crvo_doc(), "tier": 5, "seed": 7})
        case_id = response.json()["case_id"]
        # first read drains the stream to completion
        with client.stream("GET", f"/v1/cases/{case_id}/events") as stream:
            first = [l for l in stream.iter_lines() if l]
        # a late subscriber replays the identical event sequence from seq 0
        with client.stream("GET", f"/v1/cases/{case_id}/events") as stream:
            second = [l for l in stream.iter_lines() if l]
        assert first == second

    def test_stream_matches_cli_trace_bytes(self, client, tmp_path):
        response = client.post("/v1/cases", json={"case": crvo_doc(), "tier": 5, "seed": 7})
        case_id = response.json()["case_id"]
        with client.stream("GET", f"/v1/cases/{case_id}/events") as stream:
            lines = [l for l in stream.iter_lines() if l]
        assert main(["run", "--case", crvo_path(), "--tier", "5", "--seed", "7",
                     "--out-dir", str(tmp_path)]) == 0
        file_lines = (tmp_path / "crvo-uwf-01.trace.jsonl").read_text().splitlines()
        # events are identical apart from the server-assigned case id in the header
        assert lines[1:] == file_lines[1:]

    def test_unknown_case_404(self, client):
        assert client.get("/v1/cases/nope/events").status_code == 404
        assert client.get("/v1/cases/nope/report").status_code == 404

    def test_invalid_case_document_422(self, client):
        response = client.post("/v1/cases", json={"case": {"query": "no id"}})
        assert response.status_code == 422

    def test_tools_listing_by_tier(self, client):
        response = client.get("/v1/tools", params={"tier": 1})
        assert response.status_code == 200
        body = response.json()
        assert len(body["tools"]) == 5
        assert client.get("/v1/tools", params={"tier": 5}).json()["tools"].__len__() == 53
        assert client.get("/v1/tools", params={"tier": 9}).status_code == 422

    def test_feedback_roundtrip(self, client):
        record = {
            "case_id": "case-x", "reader_id": "reader-1",
            "confidence_before": 3, "confidence_after": 4,
            "adoption_percent": 75,
            "adopted_components": ["diagnostic_evidence"],
        }
        response = client.post("/v1/feedback", json=record)
        assert response.status_code == 200
        assert response.json()["status"] == "stored"

    def test_feedback_invalid_adoption_422_lists_allowed_values(self, client):
        record = {
            "case_id": "case-x", "reader_id": "reader-1",
            "confidence_before": 3, "confidence_after": 4,
            "adoption_percent": 30,
        }
        response = client.post("/v1/feedback", json=record)
        assert response.status_code == 422
        detail = json.dumps(response.json())
        for allowed in ("0", "25", "50", "75", "100"):
            assert allowed in detail

    def test_feedback_out_of_range_confidence_422(self, client):
        record = {
            "case_id": "case-x", "reader_id": "reader-1",
            "confidence_before": 0, "confidence_after": 6,
            "adoption_percent": 50,
        }
        assert client.post("/v1/feedback", json=record).status_code == 422

    def test_upload_endpoint_absent_unless_flagged(self, client):
        assert client.post("/v1/images").status_code in (404, 405)
        flagged = create_app(RunConfig(), store_path=":memory:", enable_upload_stub=True)
        with TestClient(flagged) as stub_client:
            assert stub_client.post("/v1/images").status_code == 501

    def test_failed_orchestration_still_ends_the_stream(self, engine):
        class BrokenEngine:
            config = engine.config
            registry = engine.registry

            def run_case(self, *args, **kwargs):
                raise RuntimeError("engine exploded")

        app = create_app(engine=BrokenEngine(), store_path=":memory:")
        with TestClient(app) as broken_client:
            case_id = broken_client.post(
                "/v1/cases", json={"case": crvo_doc()}).json()["case_id"]
            with broken_client.stream("GET", f"/v1/cases/{case_id}/events") as stream:
                lines = [json.loads(l) for l in stream.iter_lines() if l]
            terminals = [l for l in lines if l.get("kind") in ("final_report", "failure")]
            assert len(terminals) == 1
            assert terminals[0]["kind"] == "failure"
            assert "engine exploded" in terminals[0]["payload"]["reason"]
            assert broken_client.get(f"/v1/cases/{case_id}/report").status_code == 500


class TestStorePersistence:
    def test_feedback_survives_restart(self, tmp_path):
        db = tmp_path / "gateway.db"
        store = EmbeddedStore(db)
        store.append_feedback({"case_id": "c1", "adoption_percent": 75})
        store.append_feedback({"case_id": "c2", "adoption_percent": 100})
        store.close()

        reopened = EmbeddedStore(db)
        rows = reopened.all_feedback()
        assert [r["case_id"] for r in rows] == ["c1", "c2"]
        assert rows[0]["feedback_id"] == 1
        reopened.close()

    def test_events_replay_in_order(self, tmp_path):
        store = EmbeddedStore(tmp_path / "s.db")
        for seq in range(5):
            store.append_event("c1", seq, f"line-{seq}")
        assert [s for s, _ in store.events_since("c1")] == [0, 1, 2, 3, 4]
        assert [s for s, _ in store.events_since("c1", 3)] == [3, 4]
        store.close()


class TestFormats:
    def test_corpus_round_trip(self, corpus):
        doc = formats.case_to_document(corpus[0])
        again = formats.case_to_document(__import__("ocuflow.core", fromlist=["parse_case"]).parse_case(doc))
        assert doc == again

    def test_trace_parse(self, engine, crvo_case):
        run = engine.run_case(crvo_case, tier=5, seed=7)
        header, events = formats.parse_trace_lines(run.trace.serialize())
        assert header["tier"] == 5
        assert len(events) == len(run.trace.events)
        case_id, tools = formats.trace_invoked_tools(run.trace.serialize())
        assert case_id == "crvo-uwf-01"
        assert "rvo_classifier" in tools
