"""Command line entry point.

Subcommands: world, init, run, status, report, audit, override, serve.
Domain failures print one machine-parsable line to stderr
(``error: <Code>: <message>``) and exit nonzero.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .context import DiskStore, ExposureRecord, audit_exposures
from .engine import CampaignConfig, CampaignRunner
from .errors import StagegateError
from .metrics import funnel, load_records, stage_kill_rates, to_table
from .model import OverrideRecord, Stage
from .rules import RuleLedger
from .world import load_world, template_world


def _fail(exc: Exception) -> int:
    code = getattr(exc, "code", type(exc).__name__)
    print(f"error: {code}: {exc}", file=sys.stderr)
    return 2


def cmd_world(args) -> int:
    if args.world_cmd == "generate":
        spec = template_world(name=args.name, seed=args.seed)
        Path(args.out).write_text(json.dumps(spec, indent=1, sort_keys=True))
        print(f"world written: {args.out}")
        return 0
    if args.world_cmd == "check":
        world = load_world(Path(args.path))
        print(f"ok: {world.name}: {len(world.candidates)} candidates, "
              f"{len(world.waves())} wave(s)")
        return 0
    raise ValueError(f"unknown world subcommand: {args.world_cmd}")


def cmd_init(args) -> int:
    cdir = Path(args.campaign_dir)
    cdir.mkdir(parents=True, exist_ok=True)
    config = CampaignConfig(
        campaign_id=args.campaign_id or cdir.name,
        seed=args.seed,
        skip_validation=args.skip_validation,
    )
    (cdir / "config.json").write_text(json.dumps(config.to_record(), indent=1, sort_keys=True))
    world = load_world(Path(args.world))
    (cdir / "world.json").write_text(Path(args.world).read_text())
    print(f"initialized campaign {config.campaign_id} against world {world.name}")
    return 0


def _load_campaign(cdir: Path) -> tuple[CampaignConfig, object]:
    config = CampaignConfig.from_record(json.loads((cdir / "config.json").read_text()))
    world = load_world(cdir / "world.json")
    return config, world


def cmd_run(args) -> int:
    cdir = Path(args.campaign_dir)
    config, world = _load_campaign(cdir)
    rules = RuleLedger.load_rules(cdir / "rules.log") if (cdir / "rules.log").exists() else []
    runner = CampaignRunner(config, world, campaign_dir=cdir, rules=rules)
    state = runner.run()
    report = funnel(state.funnel_records)
    print(to_table(report))
    return 0


def cmd_status(args) -> int:
    cdir = Path(args.campaign_dir)
    store = DiskStore(cdir)
    ids = store.list_ids()
    if not ids:
        print("no candidates")
        return 0
    for cid in ids:
        cand = store.load(cid)
        flags = f" [{','.join(sorted(cand.flags))}]" if cand.flags else ""
        print(f"{cid:<24} {cand.state.describe():<20} wave={cand.origin.wave}{flags}")
    return 0


def cmd_report(args) -> int:
    cdir = Path(args.campaign_dir)
    flog = cdir / "funnel.log"
    report = funnel(load_records(flog))
    if args.json:
        body = report.to_record()
        body["kill_rates"] = stage_kill_rates(report)
        print(json.dumps(body, indent=1, sort_keys=True))
    else:
        print(to_table(report))
    return 0


def cmd_audit(args) -> int:
    cdir = Path(args.campaign_dir)
    exposures = []
    log = cdir / "exposure.log"
    if log.exists():
        for line in log.read_text().splitlines():
            if line.strip():
                exposures.append(ExposureRecord.from_record(json.loads(line)))
    violations = audit_exposures(exposures)
    print(f"exposures: {len(exposures)}")
    for v in violations:
        print(f"violation: agent={v.record.agent_id} candidate={v.record.candidate_id}: {v.reason}")
    if violations:
        return 1
    print("isolation audit clean")
    return 0


def cmd_override(args) -> int:
    cdir = Path(args.campaign_dir)
    store = DiskStore(cdir)
    cand = store.load(args.candidate)
    override = OverrideRecord(
        operator_id=args.operator,
        action=args.action,
        candidate_id=args.candidate,
        justification=args.justification,
        timestamp=float(cand.last_seq + 1),
        human_channel=True,
        target_stage=Stage(args.target_stage) if args.target_stage else None,
        severity_vector=args.severity_vector,
    )
    from .service import _apply_override

    cand = _apply_override(cand, override)
    store.persist(cand)
    with (cdir / "overrides.log").open("a") as fh:
        fh.write(json.dumps(override.to_record(), sort_keys=True) + "\n")
    print(f"{cand.id}: {cand.state.describe()}")

    if args.resume and args.action == "resurrect":
        config, world = _load_campaign(cdir)
        runner = CampaignRunner(config, world, campaign_dir=cdir)
        for cid in store.list_ids():
            runner.state.candidates[cid] = store.load(cid)
        flog = cdir / "funnel.log"
        if flog.exists():
            runner.state.funnel_records = load_records(flog)
        if hasattr(runner.backend, "note_resurrected"):
            runner.backend.note_resurrected(cand.id)
        result = runner.run_candidate(cand.id)
        runner._write_outputs()
        print(f"{result.id}: {result.state.describe()}")
    return 0


def cmd_serve(args) -> int:
    import uvicorn

    from .service import create_app

    app = create_app(Path(args.root))
    uvicorn.run(app, host=args.host, port=args.port)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="stagegate", description="stage-gated review campaigns")
    sub = parser.add_subparsers(dest="command", required=True)

    p_world = sub.add_parser("world", help="world file utilities")
    world_sub = p_world.add_subparsers(dest="world_cmd", required=True)
    p_gen = world_sub.add_parser("generate", help="write an editable template world")
    p_gen.add_argument("--out", required=True)
    p_gen.add_argument("--name", default="basic")
    p_gen.add_argument("--seed", type=int, default=7)
    p_check = world_sub.add_parser("check", help="validate a world file")
    p_check.add_argument("path")
    p_world.set_defaults(func=cmd_world)

    p_init = sub.add_parser("init", help="initialize a campaign directory")
    p_init.add_argument("--campaign-dir", required=True)
    p_init.add_argument("--world", required=True)
    p_init.add_argument("--campaign-id", default=None)
    p_init.add_argument("--seed", type=int, default=0)
    p_init.add_argument("--skip-validation", action="store_true")
    p_init.set_defaults(func=cmd_init)

    p_run = sub.add_parser("run", help="run the campaign to completion")
    p_run.add_argument("--campaign-dir", required=True)
    p_run.set_defaults(func=cmd_run)

    p_status = sub.add_parser("status", help="candidate states")
    p_status.add_argument("--campaign-dir", required=True)
    p_status.set_defaults(func=cmd_status)

    p_report = sub.add_parser("report", help="funnel report")
    p_report.add_argument("--campaign-dir", required=True)
    p_report.add_argument("--json", action="store_true")
    p_report.set_defaults(func=cmd_report)

    p_audit = sub.add_parser("audit", help="isolation audit over the exposure ledger")
    p_audit.add_argument("--campaign-dir", required=True)
    p_audit.set_defaults(func=cmd_audit)

    p_override = sub.add_parser("override", help="human override channel")
    p_override.add_argument("--campaign-dir", required=True)
    p_override.add_argument("--candidate", required=True)
    p_override.add_argument("--action", required=True,
                            choices=["resurrect", "force_kill", "set_severity", "approve_disclosure"])
    p_override.add_argument("--operator", required=True)
    p_override.add_argument("--justification", required=True)
    p_override.add_argument("--target-stage", default=None, choices=["A", "B", "C"])
    p_override.add_argument("--severity-vector", default=None)
    p_override.add_argument("--resume", action="store_true",
                            help="continue the pipeline after a resurrection")
    p_override.set_defaults(func=cmd_override)

    p_serve = sub.add_parser("serve", help="HTTP service over campaign directories")
    p_serve.add_argument("--root", required=True)
    p_serve.add_argument("--host", default="127.0.0.1")
    p_serve.add_argument("--port", type=int, default=8000)
    p_serve.set_defaults(func=cmd_serve)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except StagegateError as exc:
        return _fail(exc)
    except FileNotFoundError as exc:
        return _fail(exc)


if __name__ == "__main__":
    sys.exit(main())
