import { vi } from "vitest";
import type { FlagInfo, RecordRow, ReviewBundle } from "../src/types";

export function makeRecords(perturbTotalBy = 0): RecordRow[] {
  const rows: Array<[string, string, string]> = [
    ["Loans and discounts", "600", "asset"],
    ["Specie", "250", "asset"],
    ["Due from banks", "150", "asset"],
    ["Total assets", String(1000 + perturbTotalBy), "total"],
    ["Capital stock paid in", "400", "liability_equity"],
    ["Deposits", "500", "liability_equity"],
    ["Surplus fund", "100", "liability_equity"],
    ["Total liabilities", "1000", "total"],
  ];
  return rows.map(([label, amount, side], i) => ({
    row: i + 1,
    label,
    raw_value: amount,
    amount,
    side,
    flags: [] as FlagInfo[],
  }));
}

export function makeBundle(overrides: Partial<ReviewBundle> = {}): ReviewBundle {
  const records = overrides.records ?? makeRecords();
  const balanced = records.filter((r) => r.side === "total")
    .every((r) => r.amount === "1000");
  return {
    page_id: 1,
    version: 3,
    raw_image_url: "/api/pages/1/image?version=raw",
    processed_image_url: null,
    header: "FIRST NATIONAL BANK, PORTLAND. No. 1",
    records,
    sheet_flags: [],
    identity: {
      status: balanced ? "balanced" : "mismatch",
      difference: "0",
      asset_sum: "1000",
      liability_sum: "1000",
      asset_total: "1000",
      liability_total: "1000",
    },
    reviewed: false,
    ...overrides,
  };
}

export interface FetchLogEntry {
  method: string;
  url: string;
  body: unknown;
}

export type RouteHandler = (entry: FetchLogEntry) => { status: number; body: unknown };

/** Install a fetch mock: routes are matched by "METHOD path-prefix". */
export function installFetch(routes: Record<string, RouteHandler>): FetchLogEntry[] {
  const log: FetchLogEntry[] = [];
  globalThis.fetch = vi.fn(async (input: RequestInfo | URL, init?: RequestInit) => {
    const url = String(input);
    const method = init?.method ?? "GET";
    const entry: FetchLogEntry = {
      method,
      url,
      body: init?.body ? JSON.parse(String(init.body)) : null,
    };
    log.push(entry);
    for (const [key, handler] of Object.entries(routes)) {
      const [routeMethod, prefix] = key.split(" ", 2);
      if (method === routeMethod && url.startsWith(prefix)) {
        const { status, body } = handler(entry);
        return new Response(JSON.stringify(body), {
          status,
          headers: { "Content-Type": "application/json" },
        });
      }
    }
    return new Response(JSON.stringify({ detail: "no route" }), { status: 404 });
  }) as typeof fetch;
  return log;
}
