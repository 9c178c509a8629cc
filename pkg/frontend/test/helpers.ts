import { readFileSync } from "node:fs";
import { dirname, join } from "node:path";
import { fileURLToPath } from "node:url";

import { FetchLike } from "../src/api.js";

const FIXTURES = join(dirname(fileURLToPath(import.meta.url)), "fixtures");

export function fixture(name: string): string {
  return readFileSync(join(FIXTURES, name), "utf8");
}

export function fixtureJson<T = unknown>(name: string): T {
  return JSON.parse(fixture(name)) as T;
}

export interface Route {
  method?: string;
  status?: number;
  body: string;
  /** allows one route entry to answer only its first n hits */
  times?: number;
}

/** Fetch stub serving recorded API responses; routes are matched in order. */
export function mockFetch(routes: Record<string, Route[]>): FetchLike {
  return async (url, init) => {
    const method = init?.method ?? "GET";
    const path = url.replace(/^https?:\/\/[^/]+/, "");
    const queue = routes[`${method} ${path}`];
    if (!queue || queue.length === 0) {
      return { status: 404, text: async () => JSON.stringify({ detail: `no route: ${method} ${path}` }) };
    }
    const route = queue[0]!;
    if (route.times !== undefined && --route.times <= 0) queue.shift();
    return { status: route.status ?? 200, text: async () => route.body };
  };
}
