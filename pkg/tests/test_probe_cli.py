import json
from pathlib import Path

import pytest

import rerun
import scenes
import theorem_suite
from experiment_db import connect, fetch_latest_run, fetch_witnesses
from probe_cli import (
    EXIT_EXHAUSTED,
    EXIT_FAILED,
    EXIT_OK,
    EXIT_UNWRITABLE,
    EXIT_USAGE,
    RunConfig,
    UsageError,
    main,
    parse_args,
    parse_scene,
    run_explore,
)
from reporting import ReportEnvelope
from scenes import SceneKind

GOLDEN = json.loads((Path(__file__).parent / "golden" / "report_schema.json").read_text(encoding="utf-8"))


def _run(argv, capsys):
    code = main(argv)
    out = capsys.readouterr().out
    return code, (json.loads(out) if out.strip() else None)


def _report(stem: Path) -> dict:
    return json.loads(stem.with_name(stem.name + ".json").read_text(encoding="utf-8"))


def test_verify_t9_worked_example(tmp_path, capsys):
    stem = tmp_path / "t9"
    code, summary = _run(
        ["verify", "t9", "--trials", "1", "--seed", "7", "--scene", "circles:0,0,1,1,0,1", "--k", "1", "--out", str(stem)],
        capsys,
    )
    assert code == EXIT_OK
    assert summary["pass"] is True
    report = _report(stem)
    assert report["payload"]["extras"]["locus_radius"] == pytest.approx(0.8660254037844386, abs=1e-15)
    assert report["payload"]["extras"]["locus_center_x"] == pytest.approx(0.5)
    assert report["exit_code"] == EXIT_OK


def test_report_keys_match_golden(tmp_path, capsys):
    stem = tmp_path / "t4"
    _run(["verify", "t4", "--trials", "3", "--out", str(stem)], capsys)
    report = _report(stem)
    assert sorted(report) == GOLDEN["envelope"]
    assert sorted(report["config"]) == GOLDEN["config"]
    assert sorted(report["payload"]) == GOLDEN["check"]

    stem = tmp_path / "product"
    code, _ = _run(["explore", "polygon-product", "--ngon", "5", "--trials", "20", "--seed", "3", "--out", str(stem)], capsys)
    assert code == EXIT_FAILED
    report = _report(stem)
    assert sorted(report["payload"]) == GOLDEN["explore"]
    assert sorted(report["payload"]["witness"]) == GOLDEN["witness"]
    assert stem.with_name("product.csv").exists()


def test_failures_follow_golden_shape(tmp_path, capsys):
    stem = tmp_path / "t6"
    code, summary = _run(["verify", "t6", "--trials", "20", "--tol", "1e-300", "--out", str(stem)], capsys)
    assert code == EXIT_FAILED
    assert summary["pass"] is False
    failures = _report(stem)["payload"]["failures"]
    assert failures
    assert sorted(failures[0]) == GOLDEN["failure"]


@pytest.mark.parametrize(
    "argv",
    [
        ["verify", "zzz"],
        ["explore", "nope"],
        ["verify", "t1", "--trials", "0"],
        ["verify", "t1", "--seed", "-1"],
        ["verify", "t1", "--tol", "2"],
        ["explore", "ratio-sum", "--replay", "1:2"],
        ["frobnicate", "t1"],
    ],
)
def test_usage_errors_exit_one(argv, capsys):
    assert main(argv) == EXIT_USAGE


def test_ratio_offset_out_of_range_exits_one(tmp_path, capsys):
    code, summary = _run(["explore", "ratio-sum", "--ngon", "3", "--d", "3", "--out", str(tmp_path / "r")], capsys)
    assert code == EXIT_USAGE
    assert summary is None


def test_unwritable_output_exits_four(tmp_path, capsys):
    blocker = tmp_path / "blocker"
    blocker.write_text("not a directory", encoding="utf-8")
    code, _ = _run(["verify", "t4", "--trials", "1", "--out", str(blocker / "sub" / "report")], capsys)
    assert code == EXIT_UNWRITABLE


def test_exhausted_scene_generation_exits_three(tmp_path, capsys, monkeypatch):
    monkeypatch.setattr(scenes, "MAX_ATTEMPTS", 0)
    stem = tmp_path / "t3"
    assert main(["verify", "t3", "--trials", "2", "--out", str(stem)]) == EXIT_EXHAUSTED
    captured = capsys.readouterr()
    assert captured.out == ""
    assert "Scene generation exhausted" in captured.err
    assert "after 0 attempts" in captured.err
    assert not stem.with_name("t3.json").exists()


def test_seed_from_environment(monkeypatch):
    monkeypatch.setenv("GEOPROBE_SEED", "11")
    assert parse_args(["verify", "t1"]).seed == 11
    assert parse_args(["verify", "t1", "--seed", "3"]).seed == 3
    monkeypatch.setenv("GEOPROBE_SEED", "banana")
    with pytest.raises(UsageError):
        parse_args(["verify", "t1"])


def test_default_trials_and_formats():
    cfg = parse_args(["explore", "ratio-sum"])
    assert cfg.trials == 1
    assert cfg.formats == ("json", "csv")
    assert parse_args(["verify", "t2"]).trials == 1000
    assert parse_args(["trace", "locus"]).formats == ("json", "svg")


def test_config_round_trip():
    cfg = parse_args(["explore", "locus", "--shapes", "spheres:0,0,0,1,1,0,0,1", "--replay", "5:3"])
    assert RunConfig.from_dict(json.loads(json.dumps(cfg.to_dict()))).to_dict() == cfg.to_dict()


def test_replay_matches_single_trial(tmp_path, capsys):
    stem = tmp_path / "replay"
    code, _ = _run(["verify", "t3", "--replay", "5:7", "--out", str(stem)], capsys)
    assert code == EXIT_OK
    payload = _report(stem)["payload"]
    assert payload["trials"] == 1
    assert payload["seed"] == 5
    assert payload["max_residual"] == theorem_suite.replay("t3", 5, 7).residual


def test_payload_is_independent_of_workers(tmp_path):
    digests = []
    for workers in (1, 4):
        cfg = parse_args(
            [
                "explore",
                "locus",
                "--shapes",
                "circles:0,0,1,1,0,1",
                "--k",
                "2",
                "--trials",
                "64",
                "--workers",
                str(workers),
                "--out",
                str(tmp_path / f"w{workers}"),
            ]
        )
        digests.append(run_explore(cfg).payload_digest())
    assert digests[0] == digests[1]
    first = (tmp_path / "w1.csv").read_bytes()
    assert first == (tmp_path / "w4.csv").read_bytes()


def test_trace_locus_writes_svg(tmp_path, capsys):
    stem = tmp_path / "locus"
    code, summary = _run(
        ["trace", "locus", "--shapes", "spheres:0,0,0,1,1,0,0,1", "--trials", "100", "--out", str(stem)], capsys
    )
    assert code == EXIT_OK
    assert summary["verdict"] == "supported"
    svg = stem.with_name("locus.svg").read_text(encoding="utf-8")
    assert "orthographic projection along z" in svg


def test_trace_scene_needs_scene(capsys):
    assert main(["trace", "scene"]) == EXIT_USAGE


def test_parse_scene_kinds():
    scene = parse_scene("points:0,0,2,0,90,180")
    assert scene.kind is SceneKind.POINTS_ON_CIRCLE
    assert scene.points[1].coords == pytest.approx((0.0, 2.0))
    tri = parse_scene("triangle:0,0,4,0,1.8,3@1,1")
    assert tri.kind is SceneKind.TRIANGLE_POINT
    assert tri.probe.coords == (1.0, 1.0)
    ellipse_pair = parse_scene("ellipse-circle:0,0,2,1,0,2,0,1")
    assert ellipse_pair.kind is SceneKind.ELLIPSE_PAIR
    with pytest.raises(UsageError):
        parse_scene("circles:0,0,1")
    with pytest.raises(UsageError):
        parse_scene("hexagon:1,2,3")
    with pytest.raises(UsageError):
        parse_scene("triangle0,0,1,0,0,1")


def test_recorded_run_reruns_with_same_digest(tmp_path, capsys):
    db = tmp_path / "runs.db"
    code, summary = _run(
        [
            "explore",
            "polygon-product",
            "--ngon",
            "5",
            "--trials",
            "10",
            "--seed",
            "3",
            "--out",
            str(tmp_path / "product"),
            "--db-path",
            str(db),
        ],
        capsys,
    )
    assert code == EXIT_FAILED
    with connect(str(db)) as conn:
        stored = fetch_latest_run(conn)
        witnesses = fetch_witnesses(conn, summary["db_run_id"])
    assert stored["exit_code"] == EXIT_FAILED
    assert len(witnesses) == 1
    assert witnesses[0]["seed"] == 3

    rerun.main(["--db-path", str(db), "--workers", "2"])
    result = json.loads(capsys.readouterr().out)
    assert result["origin_run_id"] == stored["id"]
    assert result["payload_sha256"] == stored["payload_sha256"]


def test_rerun_missing_database(tmp_path):
    with pytest.raises(SystemExit):
        rerun.main(["--db-path", str(tmp_path / "absent.db")])


def test_envelope_written_by_cli_round_trips(tmp_path, capsys):
    stem = tmp_path / "t8"
    _run(["verify", "t8", "--trials", "5", "--out", str(stem)], capsys)
    text = stem.with_name("t8.json").read_text(encoding="utf-8")
    envelope = ReportEnvelope.from_json(text)
    assert envelope.to_json() == text
