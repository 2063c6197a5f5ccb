/** Review application: side-by-side image and grid, live identity widget,
 * keyboard-driven queue navigation, optimistic-save conflict handling. */

import { ApiClient } from "./api";
import { formatCents } from "./amount";
import { RecordGrid } from "./grid";
import { computeIdentity } from "./identity";
import { actionForKey } from "./shortcuts";
import type { CorrectionEdit, PageSummary, ReviewBundle } from "./types";

export class ReviewApp {
  grid: RecordGrid;
  queue: PageSummary[] = [];
  queueIndex = -1;
  bundle: ReviewBundle | null = null;
  pendingConflictEdits: CorrectionEdit[] | null = null;

  private els: Record<string, HTMLElement> = {};

  constructor(private root: HTMLElement, private api: ApiClient,
              private reviewer = "reviewer") {
    this.buildDom();
    this.grid = new RecordGrid(this.els.grid);
    this.grid.onChange = () => this.updateIdentity();
    this.root.addEventListener("keydown", (e) => this.handleKey(e as KeyboardEvent));
  }

  private buildDom(): void {
    const doc = this.root.ownerDocument;
    this.root.innerHTML = `
      <div id="toolbar">
        <span id="page-title">no page</span>
        <button id="btn-save">Save (Ctrl+S)</button>
        <button id="btn-promote">Promote (Ctrl+Shift+G)</button>
        <button id="btn-prev">&#8592; prev</button>
        <button id="btn-next">next &#8594;</button>
        <span id="announce" role="status" aria-live="polite"></span>
      </div>
      <div id="panes">
        <div id="image-pane">
          <img id="page-image" alt="scanned page" />
          <div id="image-placeholder" hidden>
            image unavailable <button id="btn-image-retry">retry</button>
          </div>
        </div>
        <div id="data-pane">
          <div id="identity" class="balanced">
            <span id="identity-status"></span>
            <span id="identity-detail"></span>
          </div>
          <div id="grid"></div>
          <div id="conflict" hidden>
            <span id="conflict-message"></span>
            <button id="btn-conflict-reload">Reload &amp; re-apply my edits</button>
          </div>
          <div id="promote-status" hidden></div>
        </div>
      </div>`;
    for (const id of ["page-title", "btn-save", "btn-promote", "btn-prev", "btn-next",
                      "announce", "page-image", "image-placeholder", "btn-image-retry",
                      "identity", "identity-status", "identity-detail", "grid",
                      "conflict", "conflict-message", "btn-conflict-reload",
                      "promote-status"]) {
      const el = doc.getElementById(id);
      if (!el) throw new Error(`missing element ${id}`);
      this.els[id.replace(/-([a-z])/g, (_, c) => c.toUpperCase())] = el;
    }
    this.els.btnSave.addEventListener("click", () => void this.save());
    this.els.btnPromote.addEventListener("click", () => void this.promote());
    this.els.btnPrev.addEventListener("click", () => void this.step(-1));
    this.els.btnNext.addEventListener("click", () => void this.step(1));
    this.els.btnConflictReload.addEventListener("click", () => void this.reloadAfterConflict());
    const img = this.els.pageImage as HTMLImageElement;
    img.addEventListener("error", () => {
      this.els.imagePlaceholder.hidden = false;
    });
    this.els.btnImageRetry.addEventListener("click", () => {
      this.els.imagePlaceholder.hidden = true;
      if (this.bundle) img.src = this.bundle.raw_image_url + `&retry=${Date.now()}`;
    });
  }

  async start(filter = "flagged"): Promise<void> {
    this.queue = await this.api.listPages(filter);
    if (!this.queue.length) {
      this.queue = await this.api.listPages("all");
    }
    if (this.queue.length) {
      await this.openIndex(0);
    } else {
      this.announce("no pages to review");
    }
  }

  async openIndex(index: number): Promise<void> {
    this.queueIndex = index;
    await this.openPage(this.queue[index].page_id);
  }

  /** Loading a page always loads its image too; no separate action. */
  async openPage(pageId: number): Promise<void> {
    this.bundle = await this.api.getBundle(pageId);
    this.els.pageTitle.textContent =
      `page ${String(pageId).padStart(4, "0")}` + (this.bundle.reviewed ? " (reviewed)" : "");
    (this.els.pageImage as HTMLImageElement).src = this.bundle.raw_image_url;
    this.els.imagePlaceholder.hidden = true;
    this.els.conflict.hidden = true;
    this.els.promoteStatus.hidden = true;
    this.pendingConflictEdits = null;
    this.grid.load(this.bundle);
    this.updateIdentity();
  }

  updateIdentity(): void {
    const identity = computeIdentity(this.grid.values());
    this.els.identity.className = identity.balanced ? "balanced" : "mismatch";
    this.els.identityStatus.textContent = identity.balanced
      ? "balanced"
      : `off by ${formatCents(identity.difference)}`;
    const parts = [
      `assets ${formatCents(identity.assetSum)}`,
      identity.assetTotal !== null ? `stated ${formatCents(identity.assetTotal)}` : "stated ?",
      `liabilities ${formatCents(identity.liabilitySum)}`,
      identity.liabilityTotal !== null ? `stated ${formatCents(identity.liabilityTotal)}` : "stated ?",
    ];
    this.els.identityDetail.textContent = parts.join(" | ");
  }

  async save(): Promise<void> {
    if (!this.bundle) return;
    const edits = this.grid.collectEdits();
    if (!edits.length) {
      this.announce("nothing to save");
      return;
    }
    const result = await this.api.saveCorrections(
      this.bundle.page_id, this.bundle.version, this.reviewer, edits);
    if (result.ok) {
      this.bundle = result.bundle;
      this.grid.applyServer(result.bundle);
      this.updateIdentity();
      this.els.conflict.hidden = true;
      this.pendingConflictEdits = null;
      this.announce(`saved version ${result.bundle.version}`);
    } else if (result.conflict) {
      // Another reviewer got there first: keep every local edit on screen
      // and offer an explicit merge path.
      this.pendingConflictEdits = edits;
      this.els.conflictMessage.textContent =
        `save conflict: the page is now at version ${result.currentVersion}; ` +
        `your edits are still in the grid`;
      this.els.conflict.hidden = false;
      this.announce("save conflict");
    } else {
      this.announce(`save failed: ${result.detail}`);
    }
  }

  async reloadAfterConflict(): Promise<void> {
    if (!this.bundle) return;
    const edits = this.pendingConflictEdits ?? this.grid.collectEdits();
    this.bundle = await this.api.getBundle(this.bundle.page_id);
    this.grid.applyServer(this.bundle);
    this.grid.reapply(edits);
    this.updateIdentity();
    this.els.conflict.hidden = true;
    this.announce(`reloaded version ${this.bundle.version}; edits re-applied, not yet saved`);
  }

  async promote(): Promise<void> {
    if (!this.bundle) return;
    const result = await this.api.promote(this.bundle.page_id, this.reviewer);
    if (result.ok) {
      this.els.promoteStatus.hidden = true;
      this.announce(`promoted to ground truth (version ${result.version})`);
    } else {
      const codes = result.flags.map((f) => f.code).join(", ");
      this.els.promoteStatus.textContent =
        `promotion refused: ${result.detail}${codes ? ` [${codes}]` : ""}`;
      this.els.promoteStatus.hidden = false;
    }
  }

  async step(delta: number): Promise<void> {
    if (!this.queue.length) return;
    let next = this.queueIndex + delta;
    let wrapped = false;
    if (next >= this.queue.length) {
      next = 0;
      wrapped = true;
    } else if (next < 0) {
      next = this.queue.length - 1;
      wrapped = true;
    }
    await this.openIndex(next);
    if (wrapped) this.announce("wrapped around the review queue");
  }

  handleKey(e: KeyboardEvent): void {
    const action = actionForKey(e);
    if (!action) return;
    e.preventDefault();
    if (action === "save") void this.save();
    else if (action === "promote") void this.promote();
    else if (action === "nextPage") void this.step(1);
    else if (action === "prevPage") void this.step(-1);
    else if (action === "nextRed") this.grid.focusNextRed();
  }

  announce(message: string): void {
    this.els.announce.textContent = message;
  }
}

export function mount(root: HTMLElement, baseUrl = ""): ReviewApp {
  const app = new ReviewApp(root, new ApiClient(baseUrl));
  void app.start();
  return app;
}
