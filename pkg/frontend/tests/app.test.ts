import { beforeEach, describe, expect, it, vi } from "vitest";
import { ApiClient } from "../src/api";
import { ReviewApp } from "../src/app";
import { installFetch, makeBundle, makeRecords } from "./helpers";

function appRoot(): HTMLElement {
  document.body.innerHTML = '<div id="app" tabindex="0"></div>';
  return document.getElementById("app")!;
}

function inputFor(row: number, field: string): HTMLInputElement {
  return document.querySelector(`input[data-row="${row}"][data-field="${field}"]`)!;
}

function typeInto(input: HTMLInputElement, value: string): void {
  input.value = value;
  input.dispatchEvent(new Event("input", { bubbles: true }));
}

async function flush(): Promise<void> {
  await Promise.resolve();
  await Promise.resolve();
}

describe("review app", () => {
  beforeEach(() => {
    vi.restoreAllMocks();
  });

  async function openMismatchedPage(): Promise<{ app: ReviewApp; log: ReturnType<typeof installFetch> }> {
    // asset total perturbed by +10: sum 1000, stated 1010
    const records = makeRecords(10);
    records[3].flags = [{ code: "IDENTITY_MISMATCH", severity: "red",
                          detail: "asset sum 1000 != total 1010", row: 4 }];
    const bundle = makeBundle({ records, identity: {
      status: "mismatch", difference: "10", asset_sum: "1000",
      liability_sum: "1000", asset_total: "1010", liability_total: "1000",
    }});
    const log = installFetch({
      "GET /api/pages/1": () => ({ status: 200, body: bundle }),
      "GET /api/pages?": () => ({
        status: 200,
        body: [{ page_id: 1, red: 1, yellow: 0, reviewed: false, has_records: true, version: 3 }],
      }),
    });
    const app = new ReviewApp(appRoot(), new ApiClient());
    await app.start();
    await flush();
    return { app, log };
  }

  it("renders image and grid side by side with flagged cell colored", async () => {
    await openMismatchedPage();
    const img = document.getElementById("page-image") as HTMLImageElement;
    expect(img.src).toContain("/api/pages/1/image?version=raw");
    expect(document.querySelectorAll("table.record-grid tr").length).toBe(9);
    expect(inputFor(4, "amount").className).toContain("sev-red");
    expect(document.getElementById("identity")!.className).toBe("mismatch");
  });

  it("editing the mismatched cell updates the identity widget before any save", async () => {
    const { log } = await openMismatchedPage();
    const mutationsBefore = log.filter((e) => e.method !== "GET").length;
    typeInto(inputFor(4, "amount"), "1,000");
    expect(document.getElementById("identity")!.className).toBe("balanced");
    expect(document.getElementById("identity-status")!.textContent).toBe("balanced");
    // keystrokes never persist anything
    expect(log.filter((e) => e.method !== "GET").length).toBe(mutationsBefore);
    expect(inputFor(4, "amount").className).toContain("dirty");
  });

  it("typing a leading-zero amount shows an instant red hint", async () => {
    await openMismatchedPage();
    const input = inputFor(5, "amount");
    typeInto(input, "023");
    expect(input.className).toContain("invalid-amount");
  });

  it("a no-op edit keeps the cell clean", async () => {
    await openMismatchedPage();
    const input = inputFor(5, "amount");
    typeInto(input, "400");
    expect(input.className).not.toContain("dirty");
  });

  it("save on 200 clears dirty state and mirrors server flags", async () => {
    const records = makeRecords(10);
    const fixedBundle = makeBundle({ version: 4 });
    fixedBundle.records[4].flags = [{ code: "UNKNOWN_LABEL", severity: "yellow",
                                      detail: "odd label", row: 5 }];
    const bundle = makeBundle({ records, identity: {
      status: "mismatch", difference: "10", asset_sum: "1000",
      liability_sum: "1000", asset_total: "1010", liability_total: "1000",
    }});
    installFetch({
      "GET /api/pages/1": () => ({ status: 200, body: bundle }),
      "GET /api/pages?": () => ({
        status: 200,
        body: [{ page_id: 1, red: 1, yellow: 0, reviewed: false, has_records: true, version: 3 }],
      }),
      "PUT /api/pages/1/records": (entry) => {
        expect(entry.body).toMatchObject({
          base_version: 3,
          edits: [{ row_id: 4, field: "amount", value: "1,000" }],
        });
        return { status: 200, body: fixedBundle };
      },
    });
    const app = new ReviewApp(appRoot(), new ApiClient());
    await app.start();
    await flush();

    typeInto(inputFor(4, "amount"), "1,000");
    await app.save();
    await flush();
    expect(document.querySelectorAll("input.dirty").length).toBe(0);
    expect(inputFor(5, "label").className).toContain("sev-yellow");
    expect(inputFor(4, "amount").className).not.toContain("sev-red");
    expect(app.bundle!.version).toBe(4);
  });

  it("concurrent save surfaces the conflict prompt without losing local edits", async () => {
    const records = makeRecords(10);
    const bundle = makeBundle({ records, identity: {
      status: "mismatch", difference: "10", asset_sum: "1000",
      liability_sum: "1000", asset_total: "1010", liability_total: "1000",
    }});
    installFetch({
      "GET /api/pages/1": () => ({ status: 200, body: bundle }),
      "GET /api/pages?": () => ({
        status: 200,
        body: [{ page_id: 1, red: 1, yellow: 0, reviewed: false, has_records: true, version: 3 }],
      }),
      "PUT /api/pages/1/records": () => ({
        status: 409,
        body: { detail: "stale base version; current is 7", current_version: 7 },
      }),
    });
    const app = new ReviewApp(appRoot(), new ApiClient());
    await app.start();
    await flush();

    typeInto(inputFor(4, "amount"), "1,000");
    await app.save();
    await flush();

    const conflict = document.getElementById("conflict")!;
    expect(conflict.hidden).toBe(false);
    expect(document.getElementById("conflict-message")!.textContent).toContain("version 7");
    expect(inputFor(4, "amount").value).toBe("1,000");
    expect(inputFor(4, "amount").className).toContain("dirty");
  });

  it("reload after conflict re-applies the local edits on the new version", async () => {
    const records = makeRecords(10);
    const bundle = makeBundle({ records, identity: {
      status: "mismatch", difference: "10", asset_sum: "1000",
      liability_sum: "1000", asset_total: "1010", liability_total: "1000",
    }});
    let getCount = 0;
    installFetch({
      "GET /api/pages/1": () => {
        getCount += 1;
        return { status: 200, body: getCount > 1 ? makeBundle({ version: 7, records }) : bundle };
      },
      "GET /api/pages?": () => ({
        status: 200,
        body: [{ page_id: 1, red: 1, yellow: 0, reviewed: false, has_records: true, version: 3 }],
      }),
      "PUT /api/pages/1/records": () => ({
        status: 409,
        body: { detail: "conflict", current_version: 7 },
      }),
    });
    const app = new ReviewApp(appRoot(), new ApiClient());
    await app.start();
    await flush();
    typeInto(inputFor(4, "amount"), "1,000");
    await app.save();
    await app.reloadAfterConflict();
    expect(app.bundle!.version).toBe(7);
    expect(inputFor(4, "amount").value).toBe("1,000");
    expect(inputFor(4, "amount").className).toContain("dirty");
  });

  it("promotion refusal is surfaced inline", async () => {
    const { app } = await openMismatchedPage();
    installFetch({
      "POST /api/pages/1/truth": () => ({
        status: 422,
        body: { detail: "red flags present", flags: [
          { code: "IDENTITY_MISMATCH", severity: "red", detail: "x", row: 4 },
        ]},
      }),
    });
    await app.promote();
    const status = document.getElementById("promote-status")!;
    expect(status.hidden).toBe(false);
    expect(status.textContent).toContain("IDENTITY_MISMATCH");
  });

  it("image failure shows placeholder while the grid stays usable", async () => {
    await openMismatchedPage();
    const img = document.getElementById("page-image") as HTMLImageElement;
    img.dispatchEvent(new Event("error"));
    expect(document.getElementById("image-placeholder")!.hidden).toBe(false);
    typeInto(inputFor(4, "amount"), "1,000");
    expect(document.getElementById("identity")!.className).toBe("balanced");
  });
});
