/** Minimal server-sent-events parsing for the campaign journal replay. */

import { JournalEvent, JournalEventSchema } from "./schema.js";

/**
 * Parse an SSE body into journal events. The terminating `event: end`
 * frame is dropped; malformed data lines throw.
 */
export function parseEventStream(body: string): JournalEvent[] {
  const events: JournalEvent[] = [];
  for (const frame of body.split("\n\n")) {
    const lines = frame.split("\n").filter((l) => l.trim() !== "");
    if (lines.length === 0) continue;
    if (lines.some((l) => l.startsWith("event: end"))) continue;
    for (const line of lines) {
      if (!line.startsWith("data: ")) continue;
      events.push(JournalEventSchema.parse(JSON.parse(line.slice(6))));
    }
  }
  return events;
}
