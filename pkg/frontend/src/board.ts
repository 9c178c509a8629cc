/** Client-side funnel board projection.
 *
 * The board is a pure function of API responses: candidates place cards in
 * columns, journal events only decorate them with badges. No pipeline logic
 * lives here.
 */

import { CandidateSummary, FunnelReport, JournalEvent, Stage } from "./schema.js";

export const COLUMNS = ["A", "B", "C", "D", "Killed", "DisclosureReady"] as const;
export type Column = (typeof COLUMNS)[number];

export type Badge =
  | "provisional"
  | "resurrected"
  | "unanimity"
  | "divergence"
  | "human_review"
  | "dev_head";

export interface Card {
  id: string;
  title: string;
  defectClass: string;
  column: Column;
  badges: Badge[];
  wave: number;
  /** stage at which a killed candidate died, for the card subtitle */
  killedAt: Stage | null;
}

export interface Board {
  columns: Record<Column, Card[]>;
  killedCount: number;
}

const FLAG_BADGES: Record<string, Badge> = {
  provisional: "provisional",
  resurrected: "resurrected",
  unanimity_warned: "unanimity",
  human_review: "human_review",
  dev_head: "dev_head",
};

export function columnFor(c: CandidateSummary): Column {
  switch (c.state_kind) {
    case "killed":
      return "Killed";
    case "disclosure_ready":
      return "DisclosureReady";
    case "generated":
      return "A";
    default:
      return c.stage ?? "A";
  }
}

function cardFor(c: CandidateSummary): Card {
  const badges = c.flags
    .map((f) => FLAG_BADGES[f])
    .filter((b): b is Badge => b !== undefined);
  return {
    id: c.id,
    title: c.title,
    defectClass: c.defect_class,
    column: columnFor(c),
    badges,
    wave: c.wave,
    killedAt: c.state_kind === "killed" ? c.stage : null,
  };
}

/** Build the board purely from server state plus replayed journal events. */
export function buildBoard(
  candidates: CandidateSummary[],
  events: JournalEvent[] = [],
): Board {
  const columns: Record<Column, Card[]> = {
    A: [], B: [], C: [], D: [], Killed: [], DisclosureReady: [],
  };
  const cards = new Map<string, Card>();
  for (const c of candidates) {
    const card = cardFor(c);
    cards.set(card.id, card);
    columns[card.column].push(card);
  }
  for (const ev of events) {
    if (!ev.candidate_id) continue;
    const card = cards.get(ev.candidate_id);
    if (!card) continue;
    if (ev.kind === "unanimity_warning" && !card.badges.includes("unanimity")) {
      card.badges.push("unanimity");
    }
    if (ev.kind === "cold_start_divergence" && !card.badges.includes("divergence")) {
      card.badges.push("divergence");
    }
  }
  for (const col of COLUMNS) {
    columns[col].sort((a, b) => a.id.localeCompare(b.id));
  }
  return { columns, killedCount: columns.Killed.length };
}

/**
 * Killed cards must never be hidden: the board's Killed column has to match
 * the server's kill count exactly.
 */
export function checkNoHiddenKills(board: Board, funnel: FunnelReport): boolean {
  return board.killedCount === funnel.total_kills;
}

/** Severity recalibration is an empirical-gate concern: editable only once past it. */
export function canEditSeverity(c: CandidateSummary): boolean {
  return c.state_kind === "disclosure_ready" || (c.state_kind === "in_stage" && c.stage === "D");
}
