"""Record HTTP API responses from sim campaigns into JSON fixture files.

Runs the bundled worlds through the engine in a temp directory, then captures
each endpoint's response (plus the raw SSE event stream and an override round
trip) so API clients can be tested against real server output offline.
"""

import argparse
import json
import tempfile
from pathlib import Path

from fastapi.testclient import TestClient

from stagegate.cli import main as cli_main
from stagegate.service import create_app

WORLDS = Path(__file__).resolve().parent.parent / "fixtures" / "worlds"

CAMPAIGNS = [
    ("camp-basic", "basic.json"),
    ("camp-unanimity", "pi1_unanimity.json"),
    ("camp-resurrection", "resurrection.json"),
]


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out", required=True, help="fixture output directory")
    parser.add_argument("--seed", type=int, default=5)
    args = parser.parse_args(argv)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)

    with tempfile.TemporaryDirectory() as tmp:
        root = Path(tmp)
        for name, world in CAMPAIGNS:
            assert cli_main(["init", "--campaign-dir", str(root / name),
                             "--world", str(WORLDS / world),
                             "--seed", str(args.seed)]) == 0
            assert cli_main(["run", "--campaign-dir", str(root / name)]) == 0

        client = TestClient(create_app(root))

        def dump(name: str, body) -> None:
            (out / name).write_text(json.dumps(body, indent=1, sort_keys=True) + "\n")

        dump("campaigns.json", client.get("/campaigns").json())
        for name, _ in CAMPAIGNS:
            dump(f"{name}-funnel.json", client.get(f"/campaigns/{name}/funnel").json())
            dump(f"{name}-candidates.json",
                 client.get(f"/campaigns/{name}/candidates").json())
            (out / f"{name}-events.sse").write_text(
                client.get(f"/campaigns/{name}/events").text)

        dump("candidate-detail.json",
             client.get("/campaigns/camp-basic/candidates/tp-parse").json())

        # override round trip on the killed candidate
        override = {
            "operator_id": "op-1",
            "action": "resurrect",
            "candidate_id": "tp-heap-overflow",
            "justification": "shape matches a previously confirmed incident",
        }
        resp = client.post("/campaigns/camp-resurrection/overrides", json=override)
        assert resp.status_code == 201, resp.text
        dump("override-response.json", resp.json())
        dump("camp-resurrection-candidates-after.json",
             client.get("/campaigns/camp-resurrection/candidates").json())
        conflict = client.post("/campaigns/camp-resurrection/overrides", json=override)
        dump("override-conflict.json",
             {"status": conflict.status_code, "body": conflict.json()})

    print(f"fixtures written to {out}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
