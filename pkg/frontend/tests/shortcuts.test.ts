import { beforeEach, describe, expect, it, vi } from "vitest";
import { ApiClient } from "../src/api";
import { ReviewApp } from "../src/app";
import { actionForKey } from "../src/shortcuts";
import { installFetch, makeBundle } from "./helpers";

describe("shortcut map", () => {
  it("matches the fixed bindings", () => {
    expect(actionForKey({ key: "s", ctrlKey: true, shiftKey: false })).toBe("save");
    expect(actionForKey({ key: "ArrowRight", ctrlKey: true, shiftKey: false })).toBe("nextPage");
    expect(actionForKey({ key: "ArrowLeft", ctrlKey: true, shiftKey: false })).toBe("prevPage");
    expect(actionForKey({ key: "F3", ctrlKey: false, shiftKey: false })).toBe("nextRed");
    expect(actionForKey({ key: "G", ctrlKey: true, shiftKey: true })).toBe("promote");
    expect(actionForKey({ key: "s", ctrlKey: false, shiftKey: false })).toBeNull();
  });
});

describe("queue navigation", () => {
  beforeEach(() => {
    vi.restoreAllMocks();
    document.body.innerHTML = '<div id="app" tabindex="0"></div>';
  });

  async function twoPageApp(): Promise<ReviewApp> {
    installFetch({
      "GET /api/pages/1": () => ({ status: 200, body: makeBundle({ page_id: 1 }) }),
      "GET /api/pages/2": () => ({ status: 200, body: makeBundle({ page_id: 2 }) }),
      "GET /api/pages?": () => ({
        status: 200,
        body: [
          { page_id: 1, red: 1, yellow: 0, reviewed: false, has_records: true, version: 3 },
          { page_id: 2, red: 1, yellow: 0, reviewed: false, has_records: true, version: 3 },
        ],
      }),
    });
    const app = new ReviewApp(document.getElementById("app")!, new ApiClient());
    await app.start();
    return app;
  }

  it("ctrl+arrow steps through the queue and wraps with an announcement", async () => {
    const app = await twoPageApp();
    expect(app.bundle!.page_id).toBe(1);
    await app.step(1);
    expect(app.bundle!.page_id).toBe(2);
    await app.step(1);
    expect(app.bundle!.page_id).toBe(1);
    expect(document.getElementById("announce")!.textContent).toContain("wrapped");
  });

  it("ctrl+s triggers a save via the keyboard path", async () => {
    const app = await twoPageApp();
    const save = vi.spyOn(app, "save").mockResolvedValue();
    const root = document.getElementById("app")!;
    root.dispatchEvent(new KeyboardEvent("keydown", { key: "s", ctrlKey: true, bubbles: true }));
    expect(save).toHaveBeenCalledOnce();
  });

  it("F3 focuses the next red cell and wraps among reds", async () => {
    installFetch({
      "GET /api/pages/1": () => {
        const bundle = makeBundle();
        bundle.records[1].flags = [{ code: "BAD_NUMERIC", severity: "red", detail: "x", row: 2 }];
        bundle.records[5].flags = [{ code: "LEADING_ZERO", severity: "red", detail: "x", row: 6 }];
        return { status: 200, body: bundle };
      },
      "GET /api/pages?": () => ({
        status: 200,
        body: [{ page_id: 1, red: 2, yellow: 0, reviewed: false, has_records: true, version: 3 }],
      }),
    });
    const app = new ReviewApp(document.getElementById("app")!, new ApiClient());
    await app.start();
    const first = app.grid.focusNextRed()!;
    expect(first.dataset.row).toBe("2");
    const second = app.grid.focusNextRed()!;
    expect(second.dataset.row).toBe("6");
    const third = app.grid.focusNextRed()!;
    expect(third.dataset.row).toBe("2");
  });
});
