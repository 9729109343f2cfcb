"""SQLite database for CLI invocation logging."""

import hashlib
import json
import sqlite3
import time
from contextlib import contextmanager
from datetime import datetime, timezone
from pathlib import Path
from typing import Any, Dict, Iterator, List, Optional

from .config import ensure_config_dir, get_config_dir

OUTCOMES = ("clean", "anomalous", "allowed", "violates", "success", "error")

_COLUMNS = (
    "id, ts, command, args_json, input_digest, outcome, exit_code, error_message, duration_ms"
)


def get_db_path() -> Path:
    """Path to the SQLite log database."""
    return get_config_dir() / "anomalylens.db"


def _get_connection() -> sqlite3.Connection:
    ensure_config_dir()
    conn = sqlite3.connect(str(get_db_path()), timeout=10.0)
    conn.row_factory = sqlite3.Row
    return conn


def init_db() -> None:
    """Create the log table if it does not exist."""
    with _get_connection() as conn:
        conn.execute("""
            CREATE TABLE IF NOT EXISTS cli_logs (
                id INTEGER PRIMARY KEY AUTOINCREMENT,
                ts TEXT NOT NULL,
                command TEXT NOT NULL,
                args_json TEXT,
                input_digest TEXT,
                outcome TEXT NOT NULL,
                exit_code INTEGER,
                error_message TEXT,
                duration_ms INTEGER
            )
        """)
        conn.execute("CREATE INDEX IF NOT EXISTS idx_cli_logs_ts ON cli_logs(ts)")
        conn.execute("CREATE INDEX IF NOT EXISTS idx_cli_logs_command ON cli_logs(command)")
        conn.execute("CREATE INDEX IF NOT EXISTS idx_cli_logs_outcome ON cli_logs(outcome)")


def digest(text: str) -> str:
    """SHA-256 of schedule input, stored instead of the text itself."""
    return hashlib.sha256(text.encode("utf-8")).hexdigest()


def insert_log(
    command: str,
    args_json: Optional[str] = None,
    input_digest: Optional[str] = None,
    outcome: str = "success",
    exit_code: Optional[int] = 0,
    error_message: Optional[str] = None,
    duration_ms: Optional[int] = None,
) -> int:
    """Insert a log entry. Returns row id."""
    init_db()
    ts = datetime.now(timezone.utc).strftime("%Y-%m-%dT%H:%M:%S.%fZ")
    with _get_connection() as conn:
        cur = conn.execute(
            """
            INSERT INTO cli_logs
                (ts, command, args_json, input_digest, outcome, exit_code, error_message,
                 duration_ms)
            VALUES (?, ?, ?, ?, ?, ?, ?, ?)
            """,
            (ts, command, args_json, input_digest, outcome, exit_code, error_message, duration_ms),
        )
        conn.commit()
        return cur.lastrowid or 0


def query_logs(
    since: Optional[datetime] = None,
    until: Optional[datetime] = None,
    command: Optional[str] = None,
    outcome: Optional[str] = None,
    limit: int = 100,
    offset: int = 0,
) -> List[Dict[str, Any]]:
    """Query log entries, newest first."""
    init_db()
    conditions: List[str] = []
    params: List[Any] = []
    if since is not None:
        conditions.append("ts >= ?")
        params.append(since.strftime("%Y-%m-%dT%H:%M:%S"))
    if until is not None:
        conditions.append("ts <= ?")
        params.append(until.strftime("%Y-%m-%dT%H:%M:%S"))
    if command is not None:
        conditions.append("command = ?")
        params.append(command)
    if outcome is not None:
        conditions.append("outcome = ?")
        params.append(outcome)
    where = " AND ".join(conditions) if conditions else "1=1"
    params.extend([limit, offset])
    with _get_connection() as conn:
        cur = conn.execute(
            f"""
            SELECT {_COLUMNS}
            FROM cli_logs
            WHERE {where}
            ORDER BY ts DESC, id DESC
            LIMIT ? OFFSET ?
            """,
            params,
        )
        rows = cur.fetchall()
    return [dict(r) for r in rows]


@contextmanager
def log_invocation(command: str) -> Iterator[Dict[str, Any]]:
    """Log one CLI invocation on exit (success, exit code or failure).

    The yielded record may be filled in by the command: ``command``, ``args``,
    ``input_text``, ``outcome`` and ``error_message``.
    """
    start = time.perf_counter()
    record: Dict[str, Any] = {
        "command": command,
        "args": None,
        "input_text": None,
        "outcome": "success",
        "exit_code": 0,
        "error_message": None,
    }
    try:
        yield record
    except SystemExit as e:
        code = e.code if isinstance(e.code, int) else (0 if e.code is None else 2)
        record["exit_code"] = code
        if code == 2:
            record["outcome"] = "error"
        raise
    except Exception as e:
        # click's Exit and UsageError carry their own exit code
        code = getattr(e, "exit_code", 2)
        record["exit_code"] = code if isinstance(code, int) else 2
        if record["exit_code"] != 0:
            record.update(outcome="error", error_message=str(e) or type(e).__name__)
        raise
    finally:
        duration_ms = int((time.perf_counter() - start) * 1000)
        try:
            insert_log(
                command=record["command"],
                args_json=json.dumps(record["args"], sort_keys=True, default=str),
                input_digest=(
                    digest(record["input_text"]) if record["input_text"] is not None else None
                ),
                outcome=record["outcome"],
                exit_code=record["exit_code"],
                error_message=record["error_message"],
                duration_ms=duration_ms,
            )
        except Exception:
            pass  # logging never fails the command
