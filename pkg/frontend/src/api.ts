/** Typed client for the campaign service.
 *
 * Every response is validated against the published schema before use, and
 * API failures carry the server's machine error detail verbatim.
 */

import {
  CampaignSummary,
  CampaignSummarySchema,
  CandidateSummary,
  CandidateSummarySchema,
  FunnelReport,
  FunnelReportSchema,
  JournalEvent,
  OverrideRequest,
  OverrideRequestSchema,
  OverrideResponse,
  OverrideResponseSchema,
} from "./schema.js";
import { parseEventStream } from "./sse.js";
import { z } from "zod";

export type FetchLike = (url: string, init?: {
  method?: string;
  headers?: Record<string, string>;
  body?: string;
}) => Promise<{ status: number; text(): Promise<string> }>;

export class ApiError extends Error {
  constructor(
    readonly status: number,
    readonly detail: string,
  ) {
    super(`HTTP ${status}: ${detail}`);
  }
}

async function readBody(resp: { status: number; text(): Promise<string> }): Promise<string> {
  const text = await resp.text();
  if (resp.status >= 400) {
    let detail = text;
    try {
      detail = JSON.parse(text).detail ?? text;
    } catch {
      /* non-JSON error body: surface as-is */
    }
    throw new ApiError(resp.status, detail);
  }
  return text;
}

export class ConsoleApi {
  constructor(
    private readonly baseUrl: string,
    private readonly fetchFn: FetchLike,
  ) {}

  private async getJson<T>(path: string, schema: z.ZodType<T>): Promise<T> {
    const resp = await this.fetchFn(`${this.baseUrl}${path}`);
    return schema.parse(JSON.parse(await readBody(resp)));
  }

  listCampaigns(): Promise<CampaignSummary[]> {
    return this.getJson("/campaigns", z.array(CampaignSummarySchema));
  }

  getFunnel(campaignId: string): Promise<FunnelReport> {
    return this.getJson(`/campaigns/${campaignId}/funnel`, FunnelReportSchema);
  }

  listCandidates(campaignId: string): Promise<CandidateSummary[]> {
    return this.getJson(
      `/campaigns/${campaignId}/candidates`,
      z.array(CandidateSummarySchema),
    );
  }

  async getEvents(campaignId: string): Promise<JournalEvent[]> {
    const resp = await this.fetchFn(`${this.baseUrl}/campaigns/${campaignId}/events`);
    return parseEventStream(await readBody(resp));
  }

  async postOverride(
    campaignId: string,
    request: OverrideRequest,
  ): Promise<OverrideResponse> {
    const body = JSON.stringify(OverrideRequestSchema.parse(request));
    const resp = await this.fetchFn(`${this.baseUrl}/campaigns/${campaignId}/overrides`, {
      method: "POST",
      headers: { "content-type": "application/json" },
      body,
    });
    return OverrideResponseSchema.parse(JSON.parse(await readBody(resp)));
  }
}
