/** Balance-identity arithmetic over the values currently displayed in the
 * grid. Pure derivation: no cached server state, so the widget can update
 * on every keystroke. */

import { toCents } from "./amount";

export interface GridValue {
  row: number;
  side: string;
  amount: string;
}

export interface IdentityState {
  assetSum: number;
  liabilitySum: number;
  assetTotal: number | null;
  liabilityTotal: number | null;
  difference: number;
  balanced: boolean;
}

export function computeIdentity(rows: GridValue[]): IdentityState {
  let assetSum = 0;
  let liabilitySum = 0;
  const totals: number[] = [];
  for (const r of rows) {
    const cents = toCents(r.amount);
    if (cents === null) continue;
    if (r.side === "asset") assetSum += cents;
    else if (r.side === "liability_equity") liabilitySum += cents;
    else if (r.side === "total") totals.push(cents);
  }
  const assetTotal = totals.length >= 1 ? totals[0] : null;
  const liabilityTotal = totals.length >= 2 ? totals[1] : null;
  const diffs: number[] = [];
  if (assetTotal !== null) diffs.push(Math.abs(assetSum - assetTotal));
  if (liabilityTotal !== null) diffs.push(Math.abs(liabilitySum - liabilityTotal));
  if (assetTotal !== null && liabilityTotal !== null) {
    diffs.push(Math.abs(assetTotal - liabilityTotal));
  }
  const difference = diffs.length ? Math.max(...diffs) : 0;
  return { assetSum, liabilitySum, assetTotal, liabilityTotal, difference, balanced: difference === 0 };
}
