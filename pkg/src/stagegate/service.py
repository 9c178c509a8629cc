"""HTTP surface over stored campaigns: funnel, candidates, events, overrides.

The service is read-mostly: it serves the durable campaign directory the
engine wrote.  The one write path is the override channel, which maps domain
errors to HTTP statuses (NotKilled -> 409, unknown ids -> 404, bad requests
-> 400).  No credentials are ever echoed in responses or logs.
"""

from __future__ import annotations

import json
from pathlib import Path
from typing import Optional

from fastapi import FastAPI, HTTPException
from fastapi.responses import StreamingResponse
from pydantic import BaseModel

from . import model
from .context import DiskStore, ExposureRecord, audit_exposures
from .errors import MissingAuthorization, NotFound, NotKilled, StagegateError
from .metrics import funnel, load_records, precision_recall, stage_kill_rates
from .model import Event, EventKind, OverrideRecord, Stage


class OverrideRequest(BaseModel):
    operator_id: str
    action: str  # resurrect | force_kill | set_severity | approve_disclosure
    candidate_id: str
    justification: str
    target_stage: Optional[str] = None
    severity_vector: Optional[str] = None


def _campaign_dir(root: Path, campaign_id: str) -> Path:
    cdir = root / campaign_id
    if not cdir.is_dir() or not (cdir / "config.json").exists():
        raise HTTPException(status_code=404, detail=f"unknown campaign: {campaign_id}")
    return cdir


def _candidate_summary(cand: model.Candidate) -> dict:
    return {
        "id": cand.id,
        "title": cand.claim.title,
        "defect_class": cand.claim.defect_class.value,
        "state": cand.state.describe(),
        "state_kind": cand.state.kind.value,
        "stage": cand.state.stage.value if cand.state.stage else None,
        "flags": sorted(cand.flags),
        "wave": cand.origin.wave,
        "hunter_id": cand.origin.hunter_id,
        "events": len(cand.history),
    }


def create_app(root: Path) -> FastAPI:
    root = Path(root)
    app = FastAPI(title="stagegate", version="0.1.0")

    @app.get("/campaigns")
    def list_campaigns():
        out = []
        for cdir in sorted(p for p in root.iterdir() if p.is_dir()):
            if not (cdir / "config.json").exists():
                continue
            config = json.loads((cdir / "config.json").read_text())
            entry = {"id": cdir.name, "campaign_id": config.get("campaign_id", cdir.name)}
            flog = cdir / "funnel.log"
            if flog.exists():
                report = funnel(load_records(flog))
                entry.update(
                    generated=report.generated,
                    survivors=report.survivors,
                    total_kills=report.total_kills,
                )
            out.append(entry)
        return out

    @app.get("/campaigns/{campaign_id}/funnel")
    def campaign_funnel(campaign_id: str):
        cdir = _campaign_dir(root, campaign_id)
        flog = cdir / "funnel.log"
        if not flog.exists():
            raise HTTPException(status_code=404, detail="campaign has no funnel log yet")
        report = funnel(load_records(flog))
        body = report.to_record()
        body["kill_rates"] = stage_kill_rates(report)
        return body

    @app.get("/campaigns/{campaign_id}/candidates")
    def list_candidates(campaign_id: str):
        cdir = _campaign_dir(root, campaign_id)
        store = DiskStore(cdir)
        return [_candidate_summary(store.load(cid)) for cid in store.list_ids()]

    @app.get("/campaigns/{campaign_id}/candidates/{candidate_id}")
    def get_candidate(campaign_id: str, candidate_id: str):
        cdir = _campaign_dir(root, campaign_id)
        store = DiskStore(cdir)
        try:
            cand = store.load(candidate_id)
        except NotFound as exc:
            raise HTTPException(status_code=404, detail=str(exc)) from exc
        record = cand.to_record()
        record["state_describe"] = cand.state.describe()
        return record

    @app.get("/campaigns/{campaign_id}/events")
    def event_stream(campaign_id: str):
        """Server-sent events replay of the campaign journal."""
        cdir = _campaign_dir(root, campaign_id)
        log = cdir / "events.log"

        def generate():
            if log.exists():
                for line in log.read_text().splitlines():
                    if line.strip():
                        yield f"data: {line}\n\n"
            yield "event: end\ndata: {}\n\n"

        return StreamingResponse(generate(), media_type="text/event-stream")

    @app.post("/campaigns/{campaign_id}/overrides", status_code=201)
    def post_override(campaign_id: str, req: OverrideRequest):
        cdir = _campaign_dir(root, campaign_id)
        store = DiskStore(cdir)
        try:
            cand = store.load(req.candidate_id)
        except NotFound as exc:
            raise HTTPException(status_code=404, detail=str(exc)) from exc
        try:
            override = OverrideRecord(
                operator_id=req.operator_id,
                action=req.action,
                candidate_id=req.candidate_id,
                justification=req.justification,
                timestamp=float(cand.last_seq + 1),
                human_channel=True,
                target_stage=Stage(req.target_stage) if req.target_stage else None,
                severity_vector=req.severity_vector,
            )
            cand = _apply_override(cand, override)
        except NotKilled as exc:
            raise HTTPException(status_code=409, detail=str(exc)) from exc
        except (MissingAuthorization, ValueError) as exc:
            raise HTTPException(status_code=400, detail=str(exc)) from exc
        except StagegateError as exc:
            raise HTTPException(status_code=400, detail=str(exc)) from exc
        store.persist(cand)
        with (cdir / "overrides.log").open("a") as fh:
            fh.write(json.dumps(override.to_record(), sort_keys=True) + "\n")
        return {"candidate_id": cand.id, "state": cand.state.describe(), "flags": sorted(cand.flags)}

    @app.get("/campaigns/{campaign_id}/audit")
    def campaign_audit(campaign_id: str):
        cdir = _campaign_dir(root, campaign_id)
        exposures = []
        log = cdir / "exposure.log"
        if log.exists():
            for line in log.read_text().splitlines():
                if line.strip():
                    exposures.append(ExposureRecord.from_record(json.loads(line)))
        violations = audit_exposures(exposures)
        return {
            "exposures": len(exposures),
            "violations": [
                {"agent_id": v.record.agent_id, "candidate_id": v.record.candidate_id, "reason": v.reason}
                for v in violations
            ],
        }

    @app.get("/campaigns/{campaign_id}/precision")
    def campaign_precision(campaign_id: str, world_path: Optional[str] = None):
        cdir = _campaign_dir(root, campaign_id)
        wpath = Path(world_path) if world_path else cdir / "world.json"
        if not wpath.exists():
            raise HTTPException(status_code=404, detail="no world file for ground truth")
        from .world import load_world

        store = DiskStore(cdir)
        candidates = {cid: store.load(cid) for cid in store.list_ids()}
        return precision_recall(candidates, load_world(wpath))

    return app


def _apply_override(cand: model.Candidate, override: OverrideRecord) -> model.Candidate:
    if override.action == "resurrect":
        return model.resurrect(cand, override)
    payload = {
        "action": override.action,
        "human_channel": override.human_channel,
        "operator_id": override.operator_id,
        "justification": override.justification,
    }
    if override.severity_vector:
        payload["severity_vector"] = override.severity_vector
    event = Event(
        seq=cand.last_seq + 1,
        timestamp=override.timestamp,
        kind=EventKind.OVERRIDDEN,
        payload_ref=f"override:{override.operator_id}:{override.timestamp}",
        payload=payload,
    )
    return model.transition(cand, event)
