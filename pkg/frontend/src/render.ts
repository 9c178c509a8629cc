/** Plain-text rendering of the board and funnel for terminals and snapshots. */

import { Board, COLUMNS } from "./board.js";
import { FunnelReport } from "./schema.js";

const BADGE_MARKS: Record<string, string> = {
  provisional: "[PROV]",
  resurrected: "[RES]",
  unanimity: "[UNANIMOUS]",
  divergence: "[DIVERGE]",
  human_review: "[HUMAN]",
  dev_head: "[DEV-HEAD]",
};

export function renderBoard(board: Board): string {
  const lines: string[] = [];
  for (const col of COLUMNS) {
    const cards = board.columns[col];
    lines.push(`== ${col} (${cards.length})`);
    for (const card of cards) {
      const badges = card.badges.map((b) => BADGE_MARKS[b] ?? `[${b}]`).join(" ");
      const killed = card.killedAt ? ` (killed at ${card.killedAt})` : "";
      lines.push(`  ${card.id}${killed}${badges ? " " + badges : ""}`);
    }
  }
  return lines.join("\n");
}

export function renderFunnel(report: FunnelReport): string {
  const lines = ["stage entrants kills promotes"];
  for (const stage of ["A", "B", "C", "D"] as const) {
    const c = report.aggregate[stage];
    if (!c) continue;
    lines.push(`${stage}     ${c.entrants}        ${c.kills}     ${c.promotes}`);
  }
  lines.push(
    `generated=${report.generated} kills=${report.total_kills} survivors=${report.survivors}`,
  );
  return lines.join("\n");
}
