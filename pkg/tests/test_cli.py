"""End-to-end command line round trips against scripted worlds."""

import json

from stagegate.cli import main


def test_world_generate_and_check(tmp_path, capsys):
    out = tmp_path / "world.json"
    assert main(["world", "generate", "--out", str(out), "--name", "demo"]) == 0
    assert main(["world", "check", str(out)]) == 0
    captured = capsys.readouterr().out
    assert "world written" in captured
    assert "ok: demo" in captured


def test_world_check_rejects_invalid_file(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"v": 1, "name": "x"}))
    assert main(["world", "check", str(bad)]) == 2
    err = capsys.readouterr().err
    assert err.startswith("error: InvalidWorld:")


def test_missing_file_reports_error_line(tmp_path, capsys):
    assert main(["world", "check", str(tmp_path / "nope.json")]) == 2
    assert capsys.readouterr().err.startswith("error: ")


def test_init_run_status_report_audit(tmp_path, worlds_dir, capsys):
    cdir = tmp_path / "camp"
    assert main(["init", "--campaign-dir", str(cdir),
                 "--world", str(worlds_dir / "basic.json"), "--seed", "5"]) == 0
    assert (cdir / "config.json").exists()
    assert (cdir / "world.json").exists()

    assert main(["run", "--campaign-dir", str(cdir)]) == 0
    table = capsys.readouterr().out
    assert "A" in table and "D" in table

    assert main(["status", "--campaign-dir", str(cdir)]) == 0
    status = capsys.readouterr().out
    assert "tp-parse" in status and "fp-auth" in status

    assert main(["report", "--campaign-dir", str(cdir), "--json"]) == 0
    body = json.loads(capsys.readouterr().out)
    assert body["generated"] == 2
    assert "kill_rates" in body

    assert main(["audit", "--campaign-dir", str(cdir)]) == 0
    assert "isolation audit clean" in capsys.readouterr().out


def test_override_resurrect_resume(tmp_path, worlds_dir, capsys):
    cdir = tmp_path / "camp"
    main(["init", "--campaign-dir", str(cdir),
          "--world", str(worlds_dir / "resurrection.json"), "--seed", "5"])
    main(["run", "--campaign-dir", str(cdir)])
    capsys.readouterr()

    assert main(["status", "--campaign-dir", str(cdir)]) == 0
    assert "Killed(A)" in capsys.readouterr().out

    assert main([
        "override", "--campaign-dir", str(cdir),
        "--candidate", "tp-heap-overflow", "--action", "resurrect",
        "--operator", "op-1", "--justification", "pattern matches prior incident",
        "--resume",
    ]) == 0
    out = capsys.readouterr().out
    assert "disclosure_ready" in out
    assert (cdir / "overrides.log").exists()

    # the kill history survives resurrection in the durable event log
    assert main(["status", "--campaign-dir", str(cdir)]) == 0
    assert "resurrected" in capsys.readouterr().out


def test_override_requires_killed_candidate(tmp_path, worlds_dir, capsys):
    cdir = tmp_path / "camp"
    main(["init", "--campaign-dir", str(cdir),
          "--world", str(worlds_dir / "basic.json"), "--seed", "5"])
    main(["run", "--campaign-dir", str(cdir)])
    capsys.readouterr()
    rc = main([
        "override", "--campaign-dir", str(cdir),
        "--candidate", "tp-parse", "--action", "resurrect",
        "--operator", "op-1", "--justification", "x",
    ])
    assert rc == 2
    assert capsys.readouterr().err.startswith("error: NotKilled:")
