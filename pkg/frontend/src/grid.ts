/** Editable record grid: one row per sheet record, label and amount cells,
 * per-cell dirty tracking, and severity colors mirroring the server flags.
 * Edits never leave the browser until an explicit save. */

import { formatCents, isValidAmount, toCents } from "./amount";
import type { GridValue } from "./identity";
import type { CorrectionEdit, FlagInfo, RecordRow, ReviewBundle } from "./types";

const AMOUNT_CODES = new Set([
  "LEADING_ZERO", "BAD_NUMERIC", "IDENTITY_MISMATCH", "CAPITAL_CHANGED", "RULE_VIOLATION",
]);

type CellSeverity = "none" | "yellow" | "red";

export interface CellState {
  value: string;
  original: string;
  dirty: boolean;
  severity: CellSeverity;
}

export interface RowState {
  rowId: number;
  side: string;
  label: CellState;
  amount: CellState;
}

function cellSeverity(flags: FlagInfo[], field: "label" | "amount"): CellSeverity {
  let worst: CellSeverity = "none";
  for (const f of flags) {
    const target = AMOUNT_CODES.has(f.code) ? "amount" : "label";
    if (target !== field) continue;
    if (f.severity === "red") return "red";
    worst = "yellow";
  }
  return worst;
}

/** Amounts render with thousands separators (stored form is canonical);
 * a cell whose amount failed to parse shows the raw recognized token. */
function displayAmount(r: RecordRow): string {
  if (!r.amount) return r.raw_value;
  const cents = toCents(r.amount);
  return cents === null ? r.amount : formatCents(cents);
}

export class RecordGrid {
  rows: RowState[] = [];
  onChange: (() => void) | null = null;

  constructor(private container: HTMLElement) {}

  load(bundle: ReviewBundle): void {
    this.rows = bundle.records.map((r) => {
      const amount = displayAmount(r);
      return {
        rowId: r.row,
        side: r.side,
        label: { value: r.label, original: r.label, dirty: false, severity: cellSeverity(r.flags, "label") },
        amount: { value: amount, original: amount, dirty: false, severity: cellSeverity(r.flags, "amount") },
      };
    });
    this.render();
  }

  /** Replace state with a fresh server bundle: everything clean, colors
   * exactly as the server flagged them. */
  applyServer(bundle: ReviewBundle): void {
    this.load(bundle);
  }

  values(): GridValue[] {
    return this.rows.map((r) => ({ row: r.rowId, side: r.side, amount: r.amount.value }));
  }

  collectEdits(): CorrectionEdit[] {
    const edits: CorrectionEdit[] = [];
    for (const r of this.rows) {
      if (r.label.dirty) edits.push({ row_id: r.rowId, field: "label", value: r.label.value });
      if (r.amount.dirty) edits.push({ row_id: r.rowId, field: "amount", value: r.amount.value });
    }
    return edits;
  }

  hasDirty(): boolean {
    return this.rows.some((r) => r.label.dirty || r.amount.dirty);
  }

  /** Re-apply dirty local values on top of freshly loaded server state
   * (used after a save conflict so nothing typed is lost). */
  reapply(edits: CorrectionEdit[]): void {
    for (const e of edits) {
      const row = this.rows.find((r) => r.rowId === e.row_id);
      if (!row) continue;
      const cell = e.field === "label" ? row.label : row.amount;
      cell.value = e.value;
      cell.dirty = cell.value !== cell.original;
    }
    this.render();
  }

  focusNextRed(): HTMLElement | null {
    const reds = Array.from(this.container.querySelectorAll<HTMLInputElement>("input.sev-red"));
    if (!reds.length) return null;
    const active = this.container.ownerDocument.activeElement;
    const start = reds.findIndex((el) => el === active);
    const next = reds[(start + 1) % reds.length];
    next.focus();
    return next;
  }

  private inputFor(row: RowState, field: "label" | "amount"): HTMLInputElement {
    const cell = field === "label" ? row.label : row.amount;
    const doc = this.container.ownerDocument;
    const input = doc.createElement("input");
    input.type = "text";
    input.value = cell.value;
    input.dataset.row = String(row.rowId);
    input.dataset.field = field;
    input.className = this.cellClasses(cell, field);
    input.addEventListener("input", () => {
      cell.value = input.value;
      cell.dirty = cell.value !== cell.original;
      input.className = this.cellClasses(cell, field);
      this.onChange?.();
    });
    return input;
  }

  private cellClasses(cell: CellState, field: "label" | "amount"): string {
    const parts = ["cell", `field-${field}`];
    if (cell.severity !== "none") parts.push(`sev-${cell.severity}`);
    if (cell.dirty) parts.push("dirty");
    if (field === "amount" && cell.value !== "" && !isValidAmount(cell.value)) {
      parts.push("invalid-amount");
    }
    return parts.join(" ");
  }

  private render(): void {
    const doc = this.container.ownerDocument;
    this.container.textContent = "";
    const table = doc.createElement("table");
    table.className = "record-grid";
    const head = doc.createElement("tr");
    for (const title of ["#", "Label", "Amount", "Side"]) {
      const th = doc.createElement("th");
      th.textContent = title;
      head.appendChild(th);
    }
    table.appendChild(head);
    for (const row of this.rows) {
      const tr = doc.createElement("tr");
      tr.dataset.row = String(row.rowId);
      const num = doc.createElement("td");
      num.textContent = String(row.rowId);
      tr.appendChild(num);
      const labelTd = doc.createElement("td");
      labelTd.appendChild(this.inputFor(row, "label"));
      tr.appendChild(labelTd);
      const amountTd = doc.createElement("td");
      amountTd.className = "amount-col";
      amountTd.appendChild(this.inputFor(row, "amount"));
      tr.appendChild(amountTd);
      const side = doc.createElement("td");
      side.textContent = row.side;
      side.className = "side";
      tr.appendChild(side);
      table.appendChild(tr);
    }
    this.container.appendChild(table);
  }
}
