"""Single-file embedded store for cases, trace events, reports, and feedback.

Feedback is append-only and survives restarts. Event rows replay in seq order
so late stream subscribers always start from seq 0.
"""

from __future__ import annotations

import json
import sqlite3
import threading
from pathlib import Path
from typing import Any, Optional

_SCHEMA = """
CREATE TABLE IF NOT EXISTS cases (
    case_id TEXT PRIMARY KEY,
    body TEXT NOT NULL,
    status TEXT NOT NULL DEFAULT 'running',
    header TEXT
);
CREATE TABLE IF NOT EXISTS events (
    case_id TEXT NOT NULL,
    seq INTEGER NOT NULL,
    line TEXT NOT NULL,
    PRIMARY KEY (case_id, seq)
);
CREATE TABLE IF NOT EXISTS reports (
    case_id TEXT PRIMARY KEY,
    body TEXT NOT NULL
);
CREATE TABLE IF NOT EXISTS feedback (
    feedback_id INTEGER PRIMARY KEY AUTOINCREMENT,
    body TEXT NOT NULL
);
"""


class EmbeddedStore:
    def __init__(self, path: Path | str = ":memory:"):
        self.path = str(path)
        self._conn = sqlite3.connect(self.path, check_same_thread=False)
        self._lock = threading.Lock()
        with self._lock:
            self._conn.executescript(_SCHEMA)
            self._conn.commit()

    def close(self) -> None:
        with self._lock:
            self._conn.close()

    # -- cases ---------------------------------------------------------------

    def put_case(self, case_id: str, body: dict[str, Any], header: Optional[dict[str, Any]] = None) -> None:
        with self._lock:
            self._conn.execute(
                "INSERT OR REPLACE INTO cases (case_id, body, status, header) VALUES (?, ?, 'running', ?)",
                (case_id, json.dumps(body), json.dumps(header) if header else None),
            )
            self._conn.commit()

    def set_case_status(self, case_id: str, status: str) -> None:
        with self._lock:
            self._conn.execute("UPDATE cases SET status = ? WHERE case_id = ?", (status, case_id))
            self._conn.commit()

    def get_case(self, case_id: str) -> Optional[dict[str, Any]]:
        with self._lock:
            row = self._conn.execute(
                "SELECT body, status, header FROM cases WHERE case_id = ?", (case_id,)
            ).fetchone()
        if row is None:
            return None
        return {
            "body": json.loads(row[0]),
            "status": row[1],
            "header": json.loads(row[2]) if row[2] else None,
        }

    # -- events --------------------------------------------------------------

    def append_event(self, case_id: str, seq: int, line: str) -> None:
        with self._lock:
            self._conn.execute(
                "INSERT OR IGNORE INTO events (case_id, seq, line) VALUES (?, ?, ?)",
                (case_id, seq, line),
            )
            self._conn.commit()

    def events_since(self, case_id: str, seq: int = 0) -> list[tuple[int, str]]:
        with self._lock:
            rows = self._conn.execute(
                "SELECT seq, line FROM events WHERE case_id = ? AND seq >= ? ORDER BY seq",
                (case_id, seq),
            ).fetchall()
        return [(r[0], r[1]) for r in rows]

    # -- reports -------------------------------------------------------------

    def put_report(self, case_id: str, body: dict[str, Any]) -> None:
        with self._lock:
            self._conn.execute(
                "INSERT OR REPLACE INTO reports (case_id, body) VALUES (?, ?)",
                (case_id, json.dumps(body)),
            )
            self._conn.commit()

    def get_report(self, case_id: str) -> Optional[dict[str, Any]]:
        with self._lock:
            row = self._conn.execute(
                "SELECT body FROM reports WHERE case_id = ?", (case_id,)
            ).fetchone()
        return json.loads(row[0]) if row else None

    # -- feedback (append-only) ----------------------------------------------

    def append_feedback(self, body: dict[str, Any]) -> int:
        with self._lock:
            cursor = self._conn.execute(
                "INSERT INTO feedback (body) VALUES (?)", (json.dumps(body),)
            )
            self._conn.commit()
            return int(cursor.lastrowid)

    def all_feedback(self) -> list[dict[str, Any]]:
        with self._lock:
            rows = self._conn.execute(
                "SELECT feedback_id, body FROM feedback ORDER BY feedback_id"
            ).fetchall()
        return [{"feedback_id": r[0], **json.loads(r[1])} for r in rows]
