/** Client-side mirror of the server's amount grammar, for instant hints.
 * Accepted: "0", or 1-3 nonzero-led digits, comma groups of three,
 * optional two-digit cents. */

export const AMOUNT_RE = /^(0|[1-9][0-9]{0,2}(?:,[0-9]{3})*(?:\.[0-9]{2})?)$/;

export function isValidAmount(value: string): boolean {
  return AMOUNT_RE.test(value);
}

/** Integer cents for a display value, or null when it does not parse.
 * Commas are tolerated anywhere for local identity arithmetic; the strict
 * grammar check is what drives the visual hint. */
export function toCents(value: string): number | null {
  const cleaned = value.replace(/,/g, "").trim();
  if (!/^[0-9]+(\.[0-9]{2})?$/.test(cleaned)) return null;
  const [units, cents] = cleaned.split(".");
  return parseInt(units, 10) * 100 + (cents ? parseInt(cents, 10) : 0);
}

export function formatCents(cents: number): string {
  const units = Math.trunc(cents / 100);
  const rem = Math.abs(cents % 100);
  const grouped = units.toLocaleString("en-US");
  return rem === 0 ? grouped : `${grouped}.${String(rem).padStart(2, "0")}`;
}
