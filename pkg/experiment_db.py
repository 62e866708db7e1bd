import json
import sqlite3
from contextlib import contextmanager
from datetime import datetime, timezone
from typing import Any, Dict, Iterator, List, Optional, Sequence


RUN_TABLE_DDL = """
CREATE TABLE IF NOT EXISTS runs (
    id INTEGER PRIMARY KEY AUTOINCREMENT,
    command TEXT NOT NULL,
    target_id TEXT NOT NULL,
    config TEXT NOT NULL,
    payload_sha256 TEXT NOT NULL,
    exit_code INTEGER NOT NULL,
    created_at TEXT NOT NULL,
    mlflow_run_id TEXT,
    mlflow_tracking_uri TEXT,
    report_path TEXT
);
"""

WITNESS_TABLE_DDL = """
CREATE TABLE IF NOT EXISTS witnesses (
    id INTEGER PRIMARY KEY AUTOINCREMENT,
    run_id INTEGER NOT NULL,
    seed TEXT,
    trial_index INTEGER NOT NULL,
    residual REAL,
    scene TEXT NOT NULL,
    created_at TEXT NOT NULL,
    FOREIGN KEY (run_id) REFERENCES runs(id) ON DELETE CASCADE
);

CREATE INDEX IF NOT EXISTS idx_witness_run
ON witnesses (run_id);
"""


def ensure_tables(conn: sqlite3.Connection) -> None:
    """Create required tables if they are missing."""
    conn.executescript(RUN_TABLE_DDL)
    conn.executescript(WITNESS_TABLE_DDL)


def _json_dumps(data: Any) -> str:
    """Serialize with sorted keys for stable storage."""
    return json.dumps(data, sort_keys=True)


def _now() -> str:
    return datetime.now(timezone.utc).isoformat()


def insert_run(
    conn: sqlite3.Connection,
    *,
    command: str,
    target_id: str,
    config: Dict,
    payload_sha256: str,
    exit_code: int,
    mlflow_run_id: Optional[str] = None,
    mlflow_tracking_uri: Optional[str] = None,
    report_path: Optional[str] = None,
) -> int:
    """Insert a new run row and return its primary key."""
    ensure_tables(conn)
    cursor = conn.execute(
        """
        INSERT INTO runs (
            command,
            target_id,
            config,
            payload_sha256,
            exit_code,
            created_at,
            mlflow_run_id,
            mlflow_tracking_uri,
            report_path
        )
        VALUES (?, ?, ?, ?, ?, ?, ?, ?, ?)
        """,
        (
            command,
            target_id,
            _json_dumps(config),
            payload_sha256,
            int(exit_code),
            _now(),
            mlflow_run_id,
            mlflow_tracking_uri,
            report_path,
        ),
    )
    conn.commit()
    return int(cursor.lastrowid)


def _row_to_dict(row: sqlite3.Row) -> Dict:
    if row is None:
        raise ValueError("Run record not found.")
    return {
        "id": row["id"],
        "command": row["command"],
        "target_id": row["target_id"],
        "config": json.loads(row["config"]),
        "payload_sha256": row["payload_sha256"],
        "exit_code": row["exit_code"],
        "created_at": row["created_at"],
        "mlflow_run_id": row["mlflow_run_id"],
        "mlflow_tracking_uri": row["mlflow_tracking_uri"],
        "report_path": row["report_path"],
    }


def fetch_latest_run(conn: sqlite3.Connection) -> Dict:
    """Return the most recent run row."""
    ensure_tables(conn)
    conn.row_factory = sqlite3.Row
    cursor = conn.execute("SELECT * FROM runs ORDER BY id DESC LIMIT 1")
    row = cursor.fetchone()
    if row is None:
        raise ValueError("No runs found in the database.")
    return _row_to_dict(row)


def fetch_run_by_id(conn: sqlite3.Connection, run_id: int) -> Dict:
    """Return a specific run row by its primary key."""
    ensure_tables(conn)
    conn.row_factory = sqlite3.Row
    cursor = conn.execute("SELECT * FROM runs WHERE id = ?", (run_id,))
    row = cursor.fetchone()
    if row is None:
        raise ValueError(f"Run with id={run_id} not found.")
    return _row_to_dict(row)


@contextmanager
def connect(db_path: str) -> Iterator[sqlite3.Connection]:
    """Context manager for sqlite connections with WAL enabled."""
    conn = sqlite3.connect(db_path)
    try:
        conn.execute("PRAGMA journal_mode=WAL;")
        yield conn
    finally:
        conn.close()


def insert_witnesses(
    conn: sqlite3.Connection,
    *,
    run_id: int,
    witnesses: Sequence[Dict],
) -> int:
    """Persist failure or refutation witnesses so single trials can be replayed later.

    Each witness needs ``index`` and ``scene``; ``seed`` and ``residual`` are optional.
    Seeds are stored as text because they span the full unsigned 64-bit range.
    """
    ensure_tables(conn)
    created_at = _now()
    payload = [
        (
            run_id,
            str(w["seed"]) if w.get("seed") is not None else None,
            int(w["index"]),
            w.get("residual") if isinstance(w.get("residual"), (int, float)) else None,
            _json_dumps(w.get("scene", {})),
            created_at,
        )
        for w in witnesses
    ]
    conn.executemany(
        """
        INSERT INTO witnesses (
            run_id,
            seed,
            trial_index,
            residual,
            scene,
            created_at
        )
        VALUES (?, ?, ?, ?, ?, ?)
        """,
        payload,
    )
    conn.commit()
    return len(payload)


def fetch_witnesses(conn: sqlite3.Connection, run_id: int) -> List[Dict]:
    ensure_tables(conn)
    conn.row_factory = sqlite3.Row
    rows = conn.execute(
        "SELECT * FROM witnesses WHERE run_id = ? ORDER BY trial_index", (run_id,)
    ).fetchall()
    return [
        {
            "seed": int(row["seed"]) if row["seed"] is not None else None,
            "index": row["trial_index"],
            "residual": row["residual"],
            "scene": json.loads(row["scene"]),
        }
        for row in rows
    ]
