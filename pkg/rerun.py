import argparse
import json
from pathlib import Path
from tempfile import TemporaryDirectory
from typing import Optional

from experiment_db import connect, fetch_run_by_id, fetch_latest_run, insert_run
from probe_cli import RUNNERS, RunConfig, configure_logging
from reporting import log_run_to_mlflow


def parse_args(argv=None) -> argparse.Namespace:
    parser = argparse.ArgumentParser(
        description="Re-execute a stored geoprobe run and check that its payload is unchanged."
    )
    parser.add_argument(
        "--db-path",
        default="geoprobe.db",
        help="SQLite database file that contains recorded runs.",
    )
    parser.add_argument(
        "--run-id",
        type=int,
        help="ID of the run to reload. If omitted, the latest one is used.",
    )
    parser.add_argument(
        "--workers",
        type=int,
        default=None,
        help="Override the worker count; payloads must not depend on it.",
    )
    parser.add_argument(
        "--out",
        default=None,
        help="Where to write the re-executed report. Defaults to a temporary directory.",
    )
    parser.add_argument(
        "--experiment-name",
        default="geoprobe",
        help="MLflow experiment name.",
    )
    parser.add_argument(
        "--mlflow-tracking-uri",
        default=None,
        help="Explicit tracking URI. Takes highest precedence.",
    )
    parser.add_argument(
        "--reuse-mlflow-uri",
        action="store_true",
        help="Log the rerun to the tracking URI stored with the original run.",
    )
    parser.add_argument("-v", "--verbose", action="store_true")
    return parser.parse_args(argv)


def resolve_tracking_uri(*, args: argparse.Namespace, stored_uri: Optional[str]) -> Optional[str]:
    if args.mlflow_tracking_uri:
        return args.mlflow_tracking_uri
    if args.reuse_mlflow_uri and stored_uri:
        return stored_uri
    return None


def main(argv=None) -> None:
    args = parse_args(argv)
    configure_logging(args.verbose)
    db_path = Path(args.db_path)
    if not db_path.exists():
        raise SystemExit(f"SQLite database missing: {db_path}")

    with connect(str(db_path)) as conn:
        if args.run_id is not None:
            record = fetch_run_by_id(conn, args.run_id)
        else:
            record = fetch_latest_run(conn)

    cfg = RunConfig.from_dict(record["config"])
    if args.workers is not None:
        cfg.workers = args.workers

    with TemporaryDirectory() as tmpdir:
        cfg.out = args.out or str(Path(tmpdir) / f"{cfg.command}-{cfg.target_id}")
        envelope = RUNNERS[cfg.command](cfg.validate())
        digest = envelope.payload_digest()
        if digest != record["payload_sha256"]:
            raise SystemExit(
                f"Payload digest mismatch for run {record['id']} ({cfg.command} {cfg.target_id}): "
                f"stored {record['payload_sha256']}, got {digest}"
            )

        tracking_uri = resolve_tracking_uri(args=args, stored_uri=record.get("mlflow_tracking_uri"))
        mlflow_run_id = None
        if tracking_uri or args.reuse_mlflow_uri:
            mlflow_run_id = log_run_to_mlflow(
                envelope=envelope,
                artifacts=cfg.extra.get("written", []),
                experiment_name=args.experiment_name,
                tracking_uri=tracking_uri,
                run_name=f"rerun-from-{record['id']}",
            )

    with connect(str(db_path)) as conn:
        new_id = insert_run(
            conn,
            command=cfg.command,
            target_id=cfg.target_id,
            config=cfg.to_dict(),
            payload_sha256=digest,
            exit_code=envelope.exit_code,
            mlflow_run_id=mlflow_run_id,
            mlflow_tracking_uri=tracking_uri,
            report_path=args.out,
        )

    print(
        json.dumps(
            {
                "origin_run_id": record["id"],
                "run_id": new_id,
                "payload_sha256": digest,
                "exit_code": envelope.exit_code,
                "mlflow_run_id": mlflow_run_id,
            },
            indent=2,
        )
    )


if __name__ == "__main__":
    main()
