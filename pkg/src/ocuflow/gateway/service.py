"""HTTP service: case submission, live trace streaming, reports, feedback.

One orchestration thread per case; event streams are single-producer
multi-consumer, and late subscribers replay from seq 0. The stream payload is
byte-identical (modulo chunk framing) to the trace file for the same run.
"""

from __future__ import annotations

import threading
import uuid
from dataclasses import replace
from typing import Iterator, Literal, Optional

from fastapi import FastAPI, HTTPException, Query
from fastapi.responses import JSONResponse, StreamingResponse
from pydantic import BaseModel, Field

from ..core import DuplicateImageIdError, SchemaViolationError, canonical_json, parse_case
from .runtime import Engine, RunConfig, build_engine
from .store import EmbeddedStore

ADOPTION_LEVELS = (0, 25, 50, 75, 100)
ADOPTED_COMPONENTS = ("image_details", "diagnosis", "diagnostic_evidence", "management")


class CaseSubmission(BaseModel):
    case: dict
    tier: Optional[int] = Field(default=None, ge=1, le=5)
    seed: Optional[int] = None


class FeedbackRecord(BaseModel):
    case_id: str
    reader_id: str
    confidence_before: int = Field(ge=1, le=5)
    confidence_after: int = Field(ge=1, le=5)
    adoption_percent: Literal[0, 25, 50, 75, 100]
    adopted_components: list[Literal["image_details", "diagnosis", "diagnostic_evidence", "management"]] = []
    free_text: Optional[str] = None


class CaseRunner:
    """Tracks running orchestrations and wakes stream subscribers on new events."""

    def __init__(self, engine: Engine, store: EmbeddedStore):
        self.engine = engine
        self.store = store
        self._threads: dict[str, threading.Thread] = {}
        self._conditions: dict[str, threading.Condition] = {}
        self._terminal: dict[str, bool] = {}
        self._lock = threading.Lock()

    def _condition(self, case_id: str) -> threading.Condition:
        with self._lock:
            return self._conditions.setdefault(case_id, threading.Condition())

    def submit(self, case, tier: Optional[int], seed: Optional[int]) -> str:
        server_id = uuid.uuid4().hex[:12]
        case = replace(case, case_id=server_id)
        effective_tier = tier if tier is not None else self.engine.config.tier
        effective_seed = seed if seed is not None else self.engine.config.seed
        header = {
            "case_id": server_id,
            "seed": effective_seed,
            "catalog_hash": self.engine.registry.catalog_hash,
            "tier": effective_tier,
        }
        self.store.put_case(server_id, {"submitted": True}, header=header)
        condition = self._condition(server_id)
        self._terminal[server_id] = False

        def observer(event) -> None:
            self.store.append_event(server_id, event.seq, canonical_json(event.to_dict()))
            with condition:
                condition.notify_all()

        def work() -> None:
            try:
                run = self.engine.run_case(case, tier=tier, seed=seed, trace_observer=observer)
                self.store.put_report(server_id, run.report.to_dict())
                self.store.set_case_status(server_id, "completed")
            except Exception as exc:  # terminal failure still ends the stream
                seq = len(self.store.events_since(server_id))
                self.store.append_event(server_id, seq, canonical_json({
                    "seq": seq, "ts": seq, "kind": "failure",
                    "payload": {"reason": str(exc)},
                }))
                self.store.set_case_status(server_id, "failed")
            finally:
                self._terminal[server_id] = True
                with condition:
                    condition.notify_all()

        thread = threading.Thread(target=work, name=f"case-{server_id}", daemon=True)
        with self._lock:
            self._threads[server_id] = thread
        thread.start()
        return server_id

    def is_terminal(self, case_id: str) -> bool:
        if self._terminal.get(case_id):
            return True
        record = self.store.get_case(case_id)
        return record is not None and record["status"] in ("completed", "failed")

    def stream(self, case_id: str) -> Iterator[str]:
        record = self.store.get_case(case_id)
        if record and record.get("header"):
            yield canonical_json(record["header"]) + "\n"
        cursor = 0
        condition = self._condition(case_id)
        while True:
            rows = self.store.events_since(case_id, cursor)
            for seq, line in rows:
                cursor = seq + 1
                yield line + "\n"
                if '"kind":"final_report"' in line or '"kind":"failure"' in line:
                    return
            if self.is_terminal(case_id) and not self.store.events_since(case_id, cursor):
                return
            with condition:
                condition.wait(timeout=0.1)

    def drain(self, timeout: float = 10.0) -> None:
        with self._lock:
            threads = list(self._threads.values())
        for thread in threads:
            thread.join(timeout=timeout)


def create_app(config: Optional[RunConfig] = None, store_path: str = ":memory:",
               engine: Optional[Engine] = None, enable_upload_stub: bool = False) -> FastAPI:
    engine = engine or build_engine(config or RunConfig())
    store = EmbeddedStore(store_path)
    runner = CaseRunner(engine, store)

    app = FastAPI(title="ocuflow gateway", version="1.0")
    app.state.engine = engine
    app.state.store = store
    app.state.runner = runner

    @app.get("/healthz")
    def healthz():
        return {"status": "ok"}

    @app.post("/v1/cases", status_code=202)
    def submit_case(submission: CaseSubmission):
        try:
            case = parse_case(submission.case)
        except DuplicateImageIdError as exc:
            raise HTTPException(status_code=422, detail=f"duplicate image id: {exc}")
        except SchemaViolationError as exc:
            raise HTTPException(status_code=422, detail=f"invalid case document: {exc}")
        case_id = runner.submit(case, submission.tier, submission.seed)
        return {"case_id": case_id}

    @app.get("/v1/cases/{case_id}/events")
    def stream_events(case_id: str):
        if store.get_case(case_id) is None:
            raise HTTPException(status_code=404, detail="unknown case id")
        return StreamingResponse(runner.stream(case_id), media_type="application/x-ndjson")

    @app.get("/v1/cases/{case_id}/report")
    def get_report(case_id: str):
        record = store.get_case(case_id)
        if record is None:
            raise HTTPException(status_code=404, detail="unknown case id")
        report = store.get_report(case_id)
        if report is None:
            status = 500 if record["status"] == "failed" else 409
            raise HTTPException(status_code=status, detail=f"case is {record['status']}")
        return JSONResponse(report)

    @app.get("/v1/tools")
    def list_tools(tier: int = Query(default=5, ge=1, le=5)):
        toolset = engine.registry.tier_subset(tier)
        return {
            "tier": tier,
            "tools": [
                {
                    "tool_id": t.tool_id,
                    "display_name": t.display_name,
                    "role": t.role,
                    "task": t.task,
                    "capability": t.capability,
                    "modalities": sorted(t.modalities),
                    "conditions": sorted(t.conditions),
                    "tier": t.tier,
                }
                for t in toolset.tools
            ],
        }

    @app.post("/v1/feedback")
    def submit_feedback(record: FeedbackRecord):
        feedback_id = store.append_feedback(record.model_dump())
        return {"status": "stored", "feedback_id": feedback_id}

    if enable_upload_stub:
        # images are pre-staged by id at desk scale; the upload pipeline is a
        # declared extension point, not a supported surface
        @app.post("/v1/images", status_code=501)
        def upload_image():
            return {"detail": "image upload is not implemented; reference pre-staged image ids"}

    @app.on_event("shutdown")
    def shutdown() -> None:
        runner.drain()
        store.close()

    return app
