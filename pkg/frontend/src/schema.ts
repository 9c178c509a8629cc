/** Zod schemas for the campaign service's HTTP responses. */

import { z } from "zod";

export const StageSchema = z.enum(["A", "B", "C", "D"]);
export type Stage = z.infer<typeof StageSchema>;

export const CampaignSummarySchema = z.object({
  id: z.string(),
  campaign_id: z.string(),
  generated: z.number().int().nonnegative().optional(),
  survivors: z.number().int().nonnegative().optional(),
  total_kills: z.number().int().nonnegative().optional(),
});
export type CampaignSummary = z.infer<typeof CampaignSummarySchema>;

export const CandidateSummarySchema = z.object({
  id: z.string(),
  title: z.string(),
  defect_class: z.string(),
  state: z.string(),
  state_kind: z.enum([
    "generated",
    "in_stage",
    "disclosure_ready",
    "killed",
    "reentry",
  ]),
  stage: StageSchema.nullable(),
  flags: z.array(z.string()),
  wave: z.number().int().positive(),
  hunter_id: z.string(),
  events: z.number().int().nonnegative(),
});
export type CandidateSummary = z.infer<typeof CandidateSummarySchema>;

const StageCountsSchema = z.object({
  entrants: z.number().int().nonnegative(),
  kills: z.number().int().nonnegative(),
  promotes: z.number().int().nonnegative(),
  provisional: z.number().int().nonnegative(),
  reentries: z.number().int().nonnegative(),
  occupancy: z.number().int(),
});

export const FunnelReportSchema = z.object({
  generated: z.number().int().nonnegative(),
  intake_rejected: z.number().int().nonnegative(),
  survivors: z.number().int().nonnegative(),
  total_kills: z.number().int().nonnegative(),
  aggregate: z.record(StageSchema, StageCountsSchema),
  per_wave: z.record(z.string(), z.record(StageSchema, StageCountsSchema)),
  calibration: z.record(z.string(), z.number().int()),
  kill_rates: z.record(StageSchema, z.number()).optional(),
});
export type FunnelReport = z.infer<typeof FunnelReportSchema>;

/** Journal entries replayed over the /events stream; extra keys pass through. */
export const JournalEventSchema = z
  .object({
    kind: z.string(),
    candidate_id: z.string().optional(),
    stage: z.string().optional(),
    ts: z.number().optional(),
  })
  .passthrough();
export type JournalEvent = z.infer<typeof JournalEventSchema>;

export const OverrideRequestSchema = z.object({
  operator_id: z.string().min(1),
  action: z.enum(["resurrect", "force_kill", "set_severity", "approve_disclosure"]),
  candidate_id: z.string().min(1),
  justification: z.string().min(1),
  target_stage: z.string().optional(),
  severity_vector: z.string().optional(),
});
export type OverrideRequest = z.infer<typeof OverrideRequestSchema>;

export const OverrideResponseSchema = z.object({
  candidate_id: z.string(),
  state: z.string(),
  flags: z.array(z.string()),
});
export type OverrideResponse = z.infer<typeof OverrideResponseSchema>;
