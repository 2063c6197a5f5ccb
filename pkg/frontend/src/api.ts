/** Thin typed client for the review service. Mutations happen only here,
 * and only when save/promote are invoked explicitly. */

import type { CorrectionEdit, FlagInfo, PageSummary, ReviewBundle } from "./types";

export type SaveResult =
  | { ok: true; bundle: ReviewBundle }
  | { ok: false; conflict: true; currentVersion: number }
  | { ok: false; conflict: false; detail: string };

export type PromoteResult =
  | { ok: true; version: number }
  | { ok: false; flags: FlagInfo[]; detail: string };

export class ApiClient {
  constructor(private baseUrl = "") {}

  private url(path: string): string {
    return this.baseUrl + path;
  }

  async listPages(filter = "all"): Promise<PageSummary[]> {
    const resp = await fetch(this.url(`/api/pages?filter=${encodeURIComponent(filter)}`));
    if (!resp.ok) throw new Error(`list pages failed: ${resp.status}`);
    return (await resp.json()) as PageSummary[];
  }

  async getBundle(pageId: number): Promise<ReviewBundle> {
    const resp = await fetch(this.url(`/api/pages/${pageId}`));
    if (!resp.ok) throw new Error(`page ${pageId}: ${resp.status}`);
    return (await resp.json()) as ReviewBundle;
  }

  async saveCorrections(pageId: number, baseVersion: number, reviewer: string,
                        edits: CorrectionEdit[]): Promise<SaveResult> {
    const resp = await fetch(this.url(`/api/pages/${pageId}/records`), {
      method: "PUT",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify({ base_version: baseVersion, reviewer, edits }),
    });
    if (resp.status === 200) {
      return { ok: true, bundle: (await resp.json()) as ReviewBundle };
    }
    if (resp.status === 409) {
      const body = await resp.json();
      return { ok: false, conflict: true, currentVersion: body.current_version as number };
    }
    const body = await resp.json().catch(() => ({ detail: String(resp.status) }));
    return { ok: false, conflict: false, detail: String(body.detail ?? resp.status) };
  }

  async promote(pageId: number, reviewer: string): Promise<PromoteResult> {
    const resp = await fetch(this.url(`/api/pages/${pageId}/truth`), {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify({ reviewer }),
    });
    if (resp.status === 200) {
      const body = await resp.json();
      return { ok: true, version: body.version as number };
    }
    const body = await resp.json().catch(() => ({ detail: String(resp.status), flags: [] }));
    return { ok: false, flags: (body.flags ?? []) as FlagInfo[], detail: String(body.detail ?? "") };
  }
}
