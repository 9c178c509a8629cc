import { describe, expect, it } from "vitest";

import { ApiError, ConsoleApi } from "../src/api.js";
import { buildBoard } from "../src/board.js";
import { fixture, mockFetch } from "./helpers.js";

const BASE = "http://engine.test";

describe("console api client", () => {
  it("lists campaigns with validated summaries", async () => {
    const api = new ConsoleApi(BASE, mockFetch({
      "GET /campaigns": [{ body: fixture("campaigns.json") }],
    }));
    const campaigns = await api.listCampaigns();
    expect(campaigns.map((c) => c.id)).toEqual([
      "camp-basic", "camp-resurrection", "camp-unanimity",
    ]);
    expect(campaigns[0]!.total_kills).toBe(1);
  });

  it("parses the funnel and the event stream", async () => {
    const api = new ConsoleApi(BASE, mockFetch({
      "GET /campaigns/camp-basic/funnel": [{ body: fixture("camp-basic-funnel.json") }],
      "GET /campaigns/camp-basic/events": [{ body: fixture("camp-basic-events.sse") }],
    }));
    const funnel = await api.getFunnel("camp-basic");
    expect(funnel.aggregate.A!.entrants).toBe(2);
    const events = await api.getEvents("camp-basic");
    expect(events.length).toBeGreaterThan(0);
    expect(events.every((e) => typeof e.kind === "string")).toBe(true);
  });

  it("round-trips a resurrect override and moves the card", async () => {
    const api = new ConsoleApi(BASE, mockFetch({
      "GET /campaigns/camp-resurrection/candidates": [
        { body: fixture("camp-resurrection-candidates.json"), times: 1 },
        { body: fixture("camp-resurrection-candidates-after.json") },
      ],
      "POST /campaigns/camp-resurrection/overrides": [
        { status: 201, body: fixture("override-response.json") },
      ],
    }));

    const before = buildBoard(await api.listCandidates("camp-resurrection"));
    expect(before.columns.Killed.map((c) => c.id)).toEqual(["tp-heap-overflow"]);
    expect(before.columns.A).toHaveLength(0);

    const result = await api.postOverride("camp-resurrection", {
      operator_id: "op-1",
      action: "resurrect",
      candidate_id: "tp-heap-overflow",
      justification: "shape matches a previously confirmed incident",
    });
    expect(result.state).toBe("InStage(A)");
    expect(result.flags).toContain("resurrected");

    // board re-renders purely from refetched server state
    const after = buildBoard(await api.listCandidates("camp-resurrection"));
    expect(after.columns.Killed).toHaveLength(0);
    const card = after.columns.A.find((c) => c.id === "tp-heap-overflow");
    expect(card).toBeDefined();
    expect(card!.badges).toContain("resurrected");
  });

  it("surfaces API errors verbatim with the machine detail", async () => {
    const conflict = JSON.parse(fixture("override-conflict.json"));
    const api = new ConsoleApi(BASE, mockFetch({
      "POST /campaigns/camp-resurrection/overrides": [
        { status: conflict.status, body: JSON.stringify(conflict.body) },
      ],
    }));
    await expect(
      api.postOverride("camp-resurrection", {
        operator_id: "op-1",
        action: "resurrect",
        candidate_id: "tp-heap-overflow",
        justification: "x",
      }),
    ).rejects.toThrowError(ApiError);
    try {
      await api.postOverride("camp-resurrection", {
        operator_id: "op-1",
        action: "resurrect",
        candidate_id: "tp-heap-overflow",
        justification: "x",
      });
    } catch (err) {
      expect((err as ApiError).status).toBe(409);
      expect((err as ApiError).detail).toBe(conflict.body.detail);
    }
  });

  it("rejects malformed override requests before sending", async () => {
    const api = new ConsoleApi(BASE, mockFetch({}));
    await expect(
      api.postOverride("camp-basic", {
        operator_id: "op-1",
        // @ts-expect-error exercising runtime validation
        action: "promote_everything",
        candidate_id: "x",
        justification: "x",
      }),
    ).rejects.toThrow();
  });
});
